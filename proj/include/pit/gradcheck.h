// pit/gradcheck.h

// Copyright 2026  PIT-ASR Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PIT_GRADCHECK_H_
#define PIT_GRADCHECK_H_

#include <cstddef>
#include <cstdint>

#include "pit/network.h"

namespace pit {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t num_params = 0;
};

/// Finite-difference check of the full PIT objective (BLSTM, output heads,
/// permutation search) on random features and targets. Parameters are drawn
/// uniform in (-0.5, 0.5) so that the nonlinearities are exercised.
GradCheckResult CheckModelGradients(const ModelConfig &config, std::size_t frames,
                                    std::uint64_t seed);

/// The F=4, H=3, N=1, S=2, K=3, T=4 instance used by the command line tool.
GradCheckResult CheckTinyPitModel(std::uint64_t seed);

}  // namespace pit

#endif  // PIT_GRADCHECK_H_
