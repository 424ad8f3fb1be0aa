// pit/gradcheck.cc

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

#include "pit/gradcheck.h"

#include <vector>

#include "pit/pit-loss.h"
#include "pit/random.h"
#include "pit/tensor.h"

namespace pit {

GradCheckResult CheckModelGradients(const ModelConfig &config, std::size_t frames,
                                    std::uint64_t seed) {
  config.Validate();
  Rng rng(seed);
  ModelParams params = InitParams(config);
  Matrix features(frames, static_cast<std::size_t>(config.feat_dim));
  for (double &v : features.Data()) v = rng.Normal();
  std::vector<LabelSequence> targets(static_cast<std::size_t>(config.num_streams));
  for (std::size_t u = 0; u < targets.size(); ++u) {
    targets[u].stream_tag = static_cast<int>(u);
    for (std::size_t t = 0; t < frames; ++t) {
      targets[u].senones.push_back(
          static_cast<std::int32_t>(rng.Index(static_cast<std::size_t>(config.num_senones))));
    }
  }
  std::vector<double> theta;
  for (const Matrix *m : params.Tensors()) {
    for (std::size_t i = 0; i < m->Size(); ++i) theta.push_back(rng.Uniform(-0.5, 0.5));
  }

  GradientFunction f = [&](std::span<const double> x, std::vector<double> *grad) {
    ModelParams local = params;
    std::size_t k = 0;
    for (Matrix *m : local.Tensors()) {
      for (double &v : m->Data()) v = x[k++];
    }
    Graph graph;
    const ModelNodes nodes = BuildForward(graph, local, features);
    const PitLossNodes loss = BuildPitLoss(graph, nodes.logits, targets);
    if (grad != nullptr) {
      graph.Backward(loss.loss);
      grad->clear();
      for (const Matrix &g : CollectGradients(graph, nodes)) {
        grad->insert(grad->end(), g.Data().begin(), g.Data().end());
      }
    }
    return graph.Value(loss.loss)(0, 0);
  };
  return {CheckGradients(f, theta), theta.size()};
}

GradCheckResult CheckTinyPitModel(std::uint64_t seed) {
  ModelConfig config;
  config.feat_dim = 4;
  config.hidden_dim = 3;
  config.num_layers = 1;
  config.num_streams = 2;
  config.num_senones = 3;
  config.seed = DeriveSeed(seed, "init");
  return CheckModelGradients(config, 4, DeriveSeed(seed, "gradcheck"));
}

}  // namespace pit
