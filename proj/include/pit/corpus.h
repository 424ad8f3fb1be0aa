// pit/corpus.h

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

#ifndef PIT_CORPUS_H_
#define PIT_CORPUS_H_

// Synthetic two-talker corpus on disk.
//
//   <root>/manifest.json         generation parameters, CMVN, sample records
//   <root>/<split>/feats.bin     f32 little-endian T x F matrices, row-major
//   <root>/<split>/labels.bin    u32 little-endian ids, S streams of T each
//
// Splits: "train" and "eval" hold mixtures (two target streams); the
// "clean_train" and "clean_eval" splits hold the unmixed, unpadded sources
// of those mixtures (one stream). Features are stored before CMVN; the
// statistics, computed over the train mixtures, are applied when loading.
// Offsets in the manifest are byte offsets.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pit/features.h"
#include "pit/mixer.h"
#include "pit/network.h"
#include "pit/pit-loss.h"

namespace pit {

inline constexpr int kCorpusFormatVersion = 1;

struct CorpusSpec {
  std::size_t train_mixtures = 500;
  std::size_t eval_mixtures = 50;
  int num_speakers = 20;
  std::vector<double> snrs = {0, 5, 10, 15, 20};
  int num_senones = 8;
  std::size_t min_frames = 30;
  std::size_t max_frames = 50;
  /// Fraction of speaker pairs reserved for the eval split.
  double eval_pair_fraction = 0.2;
  std::uint64_t seed = 1;
  FrameConfig frame;

  void Validate() const;
};

struct SampleRecord {
  std::string id;
  std::optional<double> snr_db;  // unset for clean splits
  int high_energy_speaker = 0;   // index into the target streams
  std::vector<int> speaker_ids;  // per target stream
  std::vector<std::size_t> original_lengths;
  std::size_t frames = 0;
  std::size_t streams = 0;
  std::uint64_t feat_offset = 0;
  std::uint64_t label_offset = 0;
  /// Mixture index in its split; lets tools regenerate the waveforms.
  std::size_t source_index = 0;
  /// For clean samples: which source of the mixture (0 = high, 1 = low).
  int source_role = -1;
};

struct CorpusManifest {
  int version = kCorpusFormatVersion;
  CorpusSpec spec;
  int feat_dim = 0;
  CmvnStats cmvn;
  std::vector<std::pair<int, int>> train_pairs;
  std::vector<std::pair<int, int>> eval_pairs;
  std::vector<std::string> split_names;
  std::vector<std::vector<SampleRecord>> splits;

  const std::vector<SampleRecord> &Split(const std::string &name) const;
};

struct MixtureSample {
  FeatureSequence features;
  std::vector<LabelSequence> targets;
  std::optional<double> snr_db;
  int high_energy_speaker = 0;
  std::vector<int> speaker_ids;
  std::vector<std::size_t> original_lengths;
};

/// Everything needed to build one mixture, derived from the corpus seed.
struct MixturePlan {
  int high_speaker = 0;
  int low_speaker = 0;
  std::size_t high_frames = 0;
  std::size_t low_frames = 0;
  std::uint64_t high_seed = 0;
  std::uint64_t low_seed = 0;
  std::uint64_t pad_seed = 0;
  double snr_db = 0.0;
  bool high_first = true;  // target order in the stored sample
};

MixturePlan PlanMixture(const CorpusSpec &spec, const std::vector<std::pair<int, int>> &pairs,
                        const std::string &split, std::size_t index);

struct GeneratedMixture {
  MixturePlan plan;
  SourceUtterance high;
  SourceUtterance low;
  MixResult mix;
};

GeneratedMixture GenerateMixture(const CorpusSpec &spec, const MixturePlan &plan);

/// Writes the corpus under `root` and returns its manifest. Deterministic in
/// spec.seed regardless of `workers`.
CorpusManifest GenCorpus(const CorpusSpec &spec, const std::filesystem::path &root,
                         int workers = 1);

CorpusManifest LoadManifest(const std::filesystem::path &root);

/// Reads one split; CMVN from the manifest is applied unless disabled.
std::vector<MixtureSample> LoadSplit(const std::filesystem::path &root,
                                     const CorpusManifest &manifest, const std::string &split,
                                     bool apply_cmvn = true);

/// Rebuilds the waveforms of a stored mixture (or of the mixture a clean
/// sample came from).
GeneratedMixture RegenerateMixture(const CorpusManifest &manifest, const std::string &split,
                                   const SampleRecord &record);

/// FNV-1a over the bytes of every file in the corpus, in a fixed order.
std::uint64_t CorpusChecksum(const std::filesystem::path &root);

}  // namespace pit

#endif  // PIT_CORPUS_H_
