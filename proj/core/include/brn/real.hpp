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

#pragma once

// Scalar type of the network library. The library is built twice, once per
// precision; each build lives in its own inline namespace so that both can be
// linked into a single binary.

#if defined(BRN_SINGLE_PRECISION)
#define BRN_PRECISION_NS f32
#else
#define BRN_PRECISION_NS f64
#endif

#define BRN_NN_BEGIN namespace brn { inline namespace BRN_PRECISION_NS {
#define BRN_NN_END } }

BRN_NN_BEGIN

#if defined(BRN_SINGLE_PRECISION)
using Real = float;
#else
using Real = double;
#endif

inline constexpr bool kSinglePrecision = sizeof(Real) == sizeof(float);

BRN_NN_END
