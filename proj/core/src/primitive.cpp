// Copyright 2026 The BandRoute Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "brn/primitive.hpp"

#include <array>
#include <string>

#include "brn/error.hpp"
#include "brn/ops.hpp"

BRN_NN_BEGIN

namespace {

constexpr std::array kCatalog = {
    Primitive::kAdd,         Primitive::kSub,       Primitive::kMul,
    Primitive::kScale,       Primitive::kAddScalar, Primitive::kMatmul,
    Primitive::kConv1d,      Primitive::kDepthwiseConv1d,
    Primitive::kSigmoid,     Primitive::kTanh,      Primitive::kGelu,
    Primitive::kSoftmax,     Primitive::kLayerNorm, Primitive::kSum,
    Primitive::kMean,        Primitive::kSumAll,    Primitive::kMeanAll,
    Primitive::kAvgPool1d,   Primitive::kConcat,    Primitive::kSlice,
    Primitive::kBroadcastTo, Primitive::kReshape,   Primitive::kPermute,
    Primitive::kGru,
};

void arity(Primitive op, std::span<const Tensor> inputs, std::size_t lo, std::size_t hi) {
  if (inputs.size() < lo || inputs.size() > hi) {
    throw UsageError(std::string(primitive_name(op)) + " takes " + std::to_string(lo) +
                     (lo == hi ? "" : ".." + std::to_string(hi)) + " inputs, got " +
                     std::to_string(inputs.size()));
  }
}

Tensor optional_input(std::span<const Tensor> inputs, std::size_t i) {
  return i < inputs.size() ? inputs[i] : Tensor();
}

}  // namespace

std::span<const Primitive> primitive_catalog() { return kCatalog; }

std::string_view primitive_name(Primitive op) {
  switch (op) {
    case Primitive::kAdd: return "add";
    case Primitive::kSub: return "sub";
    case Primitive::kMul: return "mul";
    case Primitive::kScale: return "scale";
    case Primitive::kAddScalar: return "add_scalar";
    case Primitive::kMatmul: return "matmul";
    case Primitive::kConv1d: return "conv1d";
    case Primitive::kDepthwiseConv1d: return "depthwise_conv1d";
    case Primitive::kSigmoid: return "sigmoid";
    case Primitive::kTanh: return "tanh";
    case Primitive::kGelu: return "gelu";
    case Primitive::kSoftmax: return "softmax";
    case Primitive::kLayerNorm: return "layer_norm";
    case Primitive::kSum: return "sum";
    case Primitive::kMean: return "mean";
    case Primitive::kSumAll: return "sum_all";
    case Primitive::kMeanAll: return "mean_all";
    case Primitive::kAvgPool1d: return "avg_pool1d";
    case Primitive::kConcat: return "concat";
    case Primitive::kSlice: return "slice";
    case Primitive::kBroadcastTo: return "broadcast_to";
    case Primitive::kReshape: return "reshape";
    case Primitive::kPermute: return "permute";
    case Primitive::kGru: return "gru";
  }
  return "unknown";
}

Tensor apply_primitive(Tape& tape, Primitive op, std::span<const Tensor> in,
                       const PrimitiveAttrs& attrs) {
  switch (op) {
    case Primitive::kAdd: arity(op, in, 2, 2); return ops::add(tape, in[0], in[1]);
    case Primitive::kSub: arity(op, in, 2, 2); return ops::sub(tape, in[0], in[1]);
    case Primitive::kMul: arity(op, in, 2, 2); return ops::mul(tape, in[0], in[1]);
    case Primitive::kScale: arity(op, in, 1, 1); return ops::scale(tape, in[0], attrs.scalar);
    case Primitive::kAddScalar: arity(op, in, 1, 1); return ops::add_scalar(tape, in[0], attrs.scalar);
    case Primitive::kMatmul:
      arity(op, in, 2, 2);
      return ops::matmul(tape, in[0], in[1], attrs.trans_a, attrs.trans_b);
    case Primitive::kConv1d:
      arity(op, in, 2, 3);
      return ops::conv1d(tape, in[0], in[1], optional_input(in, 2),
                         ops::Conv1dOptions{attrs.stride, attrs.padding});
    case Primitive::kDepthwiseConv1d:
      arity(op, in, 2, 3);
      return ops::depthwise_conv1d(tape, in[0], in[1], optional_input(in, 2));
    case Primitive::kSigmoid: arity(op, in, 1, 1); return ops::sigmoid(tape, in[0]);
    case Primitive::kTanh: arity(op, in, 1, 1); return ops::tanh(tape, in[0]);
    case Primitive::kGelu: arity(op, in, 1, 1); return ops::gelu(tape, in[0]);
    case Primitive::kSoftmax: arity(op, in, 1, 1); return ops::softmax(tape, in[0]);
    case Primitive::kLayerNorm:
      arity(op, in, 1, 3);
      if (in.size() == 2) throw UsageError("layer_norm: gamma and beta must be given together");
      return ops::layer_norm(tape, in[0], optional_input(in, 1), optional_input(in, 2), attrs.eps);
    case Primitive::kSum: arity(op, in, 1, 1); return ops::sum(tape, in[0], attrs.axis, attrs.keepdim);
    case Primitive::kMean: arity(op, in, 1, 1); return ops::mean(tape, in[0], attrs.axis, attrs.keepdim);
    case Primitive::kSumAll: arity(op, in, 1, 1); return ops::sum_all(tape, in[0]);
    case Primitive::kMeanAll: arity(op, in, 1, 1); return ops::mean_all(tape, in[0]);
    case Primitive::kAvgPool1d: arity(op, in, 1, 1); return ops::avg_pool1d(tape, in[0], attrs.kernel);
    case Primitive::kConcat:
      arity(op, in, 1, in.size() == 0 ? 1 : in.size());
      return ops::concat(tape, in, attrs.axis);
    case Primitive::kSlice:
      arity(op, in, 1, 1);
      return ops::slice(tape, in[0], attrs.axis, attrs.begin, attrs.end);
    case Primitive::kBroadcastTo: arity(op, in, 1, 1); return ops::broadcast_to(tape, in[0], attrs.shape);
    case Primitive::kReshape: arity(op, in, 1, 1); return ops::reshape(tape, in[0], attrs.shape);
    case Primitive::kPermute: arity(op, in, 1, 1); return ops::permute(tape, in[0], attrs.axes);
    case Primitive::kGru:
      arity(op, in, 5, 5);
      return ops::gru(tape, in[0], in[1], in[2], in[3], in[4]);
  }
  throw UsageError("unknown primitive");
}

BRN_NN_END
