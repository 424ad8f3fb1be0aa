// pit/corpus.cc

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

#include "pit/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "pit/binary-io.h"
#include "pit/errors.h"
#include "pit/parallel.h"
#include "pit/random.h"

namespace pit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char *const kSplitNames[] = {"train", "eval", "clean_train", "clean_eval"};

// Features and labels of one stored sample before serialization.
struct StoredSample {
  SampleRecord record;
  Matrix features;  // values already rounded to f32
  std::vector<LabelSequence> targets;
};

Matrix RoundToFloat(Matrix m) {
  for (double &v : m.Data()) v = static_cast<double>(static_cast<float>(v));
  return m;
}

std::string SampleId(const std::string &split, std::size_t index, const char *suffix = "") {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%06zu%s", split.c_str(), index, suffix);
  return buf;
}

std::vector<std::pair<int, int>> AllPairs(int speakers) {
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < speakers; ++a) {
    for (int b = a + 1; b < speakers; ++b) pairs.emplace_back(a, b);
  }
  return pairs;
}

void WriteSplit(const fs::path &dir, std::vector<StoredSample> &samples) {
  fs::create_directories(dir);
  const fs::path feats_path = dir / "feats.bin";
  const fs::path labels_path = dir / "labels.bin";
  std::ofstream feats(feats_path, std::ios::binary | std::ios::trunc);
  if (!feats) throw IoError("cannot write " + feats_path.string());
  std::ofstream labels(labels_path, std::ios::binary | std::ios::trunc);
  if (!labels) throw IoError("cannot write " + labels_path.string());
  std::uint64_t feat_offset = 0, label_offset = 0;
  for (StoredSample &s : samples) {
    s.record.feat_offset = feat_offset;
    s.record.label_offset = label_offset;
    for (double v : s.features.Data()) WriteLe<float>(feats, static_cast<float>(v));
    feat_offset += s.features.Size() * sizeof(float);
    for (const LabelSequence &t : s.targets) {
      for (std::int32_t id : t.senones) WriteLe<std::uint32_t>(labels, static_cast<std::uint32_t>(id));
      label_offset += t.Size() * sizeof(std::uint32_t);
    }
  }
  if (!feats) throw IoError("failed writing " + feats_path.string());
  if (!labels) throw IoError("failed writing " + labels_path.string());
}

json RecordToJson(const SampleRecord &r) {
  json j;
  j["id"] = r.id;
  j["snr_db"] = r.snr_db ? json(*r.snr_db) : json(nullptr);
  j["high_energy_speaker"] = r.high_energy_speaker;
  j["speaker_ids"] = r.speaker_ids;
  j["original_lengths"] = r.original_lengths;
  j["frames"] = r.frames;
  j["streams"] = r.streams;
  j["feat_offset"] = r.feat_offset;
  j["label_offset"] = r.label_offset;
  j["source_index"] = r.source_index;
  j["source_role"] = r.source_role;
  return j;
}

SampleRecord RecordFromJson(const json &j) {
  SampleRecord r;
  r.id = j.at("id").get<std::string>();
  if (!j.at("snr_db").is_null()) r.snr_db = j.at("snr_db").get<double>();
  r.high_energy_speaker = j.at("high_energy_speaker").get<int>();
  r.speaker_ids = j.at("speaker_ids").get<std::vector<int>>();
  r.original_lengths = j.at("original_lengths").get<std::vector<std::size_t>>();
  r.frames = j.at("frames").get<std::size_t>();
  r.streams = j.at("streams").get<std::size_t>();
  r.feat_offset = j.at("feat_offset").get<std::uint64_t>();
  r.label_offset = j.at("label_offset").get<std::uint64_t>();
  r.source_index = j.at("source_index").get<std::size_t>();
  r.source_role = j.at("source_role").get<int>();
  return r;
}

json ManifestToJson(const CorpusManifest &m) {
  const CorpusSpec &s = m.spec;
  json j;
  j["format_version"] = m.version;
  j["sample_rate"] = s.frame.sample_rate;
  j["frame"] = {{"length", s.frame.frame_length},
                {"shift", s.frame.frame_shift},
                {"num_bins", s.frame.num_bins},
                {"low_freq", s.frame.low_freq},
                {"high_freq", s.frame.high_freq}};
  j["feat_dim"] = m.feat_dim;
  j["num_senones"] = s.num_senones;
  j["generation"] = {{"seed", s.seed},
                     {"num_speakers", s.num_speakers},
                     {"snrs", s.snrs},
                     {"train_mixtures", s.train_mixtures},
                     {"eval_mixtures", s.eval_mixtures},
                     {"min_frames", s.min_frames},
                     {"max_frames", s.max_frames},
                     {"eval_pair_fraction", s.eval_pair_fraction}};
  j["cmvn"] = {{"mean", m.cmvn.mean}, {"variance", m.cmvn.variance}};
  j["train_pairs"] = m.train_pairs;
  j["eval_pairs"] = m.eval_pairs;
  json splits = json::object();
  for (std::size_t i = 0; i < m.split_names.size(); ++i) {
    json records = json::array();
    for (const SampleRecord &r : m.splits[i]) records.push_back(RecordToJson(r));
    splits[m.split_names[i]] = {{"feats", m.split_names[i] + "/feats.bin"},
                                {"labels", m.split_names[i] + "/labels.bin"},
                                {"samples", std::move(records)}};
  }
  j["splits"] = std::move(splits);
  return j;
}

}  // namespace

void CorpusSpec::Validate() const {
  frame.Validate();
  if (snrs.empty()) throw ValidationError("corpus: SNR set is empty");
  if (num_speakers < 3) throw ValidationError("corpus: need at least 3 speakers");
  if (num_senones < 2) throw ValidationError("corpus: num_senones must be >= 2");
  if (min_frames < 2 * kEdgeSilenceFrames + 1 || max_frames < min_frames) {
    throw ValidationError("corpus: need 5 <= min_frames <= max_frames");
  }
  if (!(eval_pair_fraction > 0.0 && eval_pair_fraction < 1.0)) {
    throw ValidationError("corpus: eval_pair_fraction must be in (0, 1)");
  }
}

const std::vector<SampleRecord> &CorpusManifest::Split(const std::string &name) const {
  for (std::size_t i = 0; i < split_names.size(); ++i) {
    if (split_names[i] == name) return splits[i];
  }
  throw ValidationError("corpus has no split named '" + name + "'");
}

MixturePlan PlanMixture(const CorpusSpec &spec, const std::vector<std::pair<int, int>> &pairs,
                        const std::string &split, std::size_t index) {
  if (pairs.empty()) throw ValidationError("corpus: no speaker pairs for split " + split);
  Rng rng(MixSeed(DeriveSeed(spec.seed, split), index));
  MixturePlan plan;
  const auto [a, b] = pairs[rng.Index(pairs.size())];
  const bool a_is_high = rng.Uniform() < 0.5;
  plan.high_speaker = a_is_high ? a : b;
  plan.low_speaker = a_is_high ? b : a;
  const std::size_t longer = spec.min_frames + rng.Index(spec.max_frames - spec.min_frames + 1);
  auto shortest = static_cast<std::size_t>(std::ceil(kMinLengthRatio * static_cast<double>(longer)));
  shortest = std::max(shortest, 2 * kEdgeSilenceFrames + 1);
  const std::size_t shorter = shortest + rng.Index(longer - shortest + 1);
  // The longer source is the high-energy reference.
  plan.high_frames = longer;
  plan.low_frames = shorter;
  plan.high_seed = rng.NextU64();
  plan.low_seed = rng.NextU64();
  plan.pad_seed = rng.NextU64();
  plan.high_first = rng.Uniform() < 0.5;
  plan.snr_db = spec.snrs[index % spec.snrs.size()];
  return plan;
}

GeneratedMixture GenerateMixture(const CorpusSpec &spec, const MixturePlan &plan) {
  const std::uint64_t speaker_seed = DeriveSeed(spec.seed, "speakers");
  const SpeakerProfile high_profile =
      MakeSpeakerProfile(plan.high_speaker, spec.num_senones, speaker_seed, spec.frame);
  const SpeakerProfile low_profile =
      MakeSpeakerProfile(plan.low_speaker, spec.num_senones, speaker_seed, spec.frame);
  GeneratedMixture g;
  g.plan = plan;
  g.high = GenUtterance(high_profile, plan.high_frames, plan.high_seed, spec.frame);
  g.low = GenUtterance(low_profile, plan.low_frames, plan.low_seed, spec.frame);
  g.mix = MixPair(g.high, g.low, plan.snr_db, plan.pad_seed, spec.frame);
  return g;
}

CorpusManifest GenCorpus(const CorpusSpec &spec, const fs::path &root, int workers) {
  spec.Validate();
  CorpusManifest manifest;
  manifest.spec = spec;
  manifest.feat_dim = spec.frame.num_bins;

  auto pairs = AllPairs(spec.num_speakers);
  Rng pair_rng(DeriveSeed(spec.seed, "pairs"));
  for (std::size_t i = pairs.size(); i > 1; --i) std::swap(pairs[i - 1], pairs[pair_rng.Index(i)]);
  auto num_eval = static_cast<std::size_t>(
      std::lround(spec.eval_pair_fraction * static_cast<double>(pairs.size())));
  num_eval = std::clamp<std::size_t>(num_eval, 1, pairs.size() - 1);
  manifest.eval_pairs.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(num_eval));
  manifest.train_pairs.assign(pairs.begin() + static_cast<std::ptrdiff_t>(num_eval), pairs.end());

  std::vector<std::vector<StoredSample>> stored(4);
  for (int mixed_split = 0; mixed_split < 2; ++mixed_split) {
    const std::string name = kSplitNames[mixed_split];
    const std::size_t count = mixed_split == 0 ? spec.train_mixtures : spec.eval_mixtures;
    const auto &split_pairs = mixed_split == 0 ? manifest.train_pairs : manifest.eval_pairs;
    std::vector<StoredSample> mixtures(count);
    std::vector<StoredSample> clean(2 * count);
    ParallelFor(count, workers, [&](std::size_t i) {
      const MixturePlan plan = PlanMixture(spec, split_pairs, name, i);
      const GeneratedMixture g = GenerateMixture(spec, plan);
      const int high_index = plan.high_first ? 0 : 1;

      StoredSample &m = mixtures[i];
      m.features = RoundToFloat(ExtractFeatures(g.mix.mixture, spec.frame).frames);
      m.targets.resize(2);
      m.targets[static_cast<std::size_t>(high_index)] = g.mix.targets[0];
      m.targets[static_cast<std::size_t>(1 - high_index)] = g.mix.targets[1];
      for (std::size_t s = 0; s < 2; ++s) m.targets[s].stream_tag = static_cast<int>(s);
      SampleRecord &r = m.record;
      r.id = SampleId(name, i);
      r.snr_db = plan.snr_db;
      r.high_energy_speaker = high_index;
      r.speaker_ids = high_index == 0 ? std::vector<int>{plan.high_speaker, plan.low_speaker}
                                      : std::vector<int>{plan.low_speaker, plan.high_speaker};
      r.original_lengths = high_index == 0
                               ? std::vector<std::size_t>{plan.high_frames, plan.low_frames}
                               : std::vector<std::size_t>{plan.low_frames, plan.high_frames};
      r.frames = m.features.Rows();
      r.streams = 2;
      r.source_index = i;

      for (int role = 0; role < 2; ++role) {
        const SourceUtterance &src = role == 0 ? g.high : g.low;
        StoredSample &c = clean[2 * i + static_cast<std::size_t>(role)];
        c.features = RoundToFloat(ExtractFeatures(src.waveform, spec.frame).frames);
        c.targets = {src.labels};
        c.targets[0].stream_tag = 0;
        SampleRecord &cr = c.record;
        cr.id = SampleId("clean_" + name, i, role == 0 ? "-h" : "-l");
        cr.high_energy_speaker = 0;
        cr.speaker_ids = {src.speaker_id};
        cr.original_lengths = {src.num_frames};
        cr.frames = c.features.Rows();
        cr.streams = 1;
        cr.source_index = i;
        cr.source_role = role;
      }
    });
    stored[static_cast<std::size_t>(mixed_split)] = std::move(mixtures);
    stored[static_cast<std::size_t>(mixed_split) + 2] = std::move(clean);
  }

  std::vector<Matrix> train_feats;
  train_feats.reserve(stored[0].size());
  for (const StoredSample &s : stored[0]) train_feats.push_back(s.features);
  if (!train_feats.empty()) {
    manifest.cmvn = ComputeCmvn(train_feats);
  } else {
    manifest.cmvn.mean.assign(static_cast<std::size_t>(manifest.feat_dim), 0.0);
    manifest.cmvn.variance.assign(static_cast<std::size_t>(manifest.feat_dim), 1.0);
  }

  fs::create_directories(root);
  for (std::size_t i = 0; i < 4; ++i) {
    WriteSplit(root / kSplitNames[i], stored[i]);
    manifest.split_names.emplace_back(kSplitNames[i]);
    std::vector<SampleRecord> records;
    records.reserve(stored[i].size());
    for (StoredSample &s : stored[i]) records.push_back(std::move(s.record));
    manifest.splits.push_back(std::move(records));
  }

  const fs::path manifest_path = root / "manifest.json";
  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + manifest_path.string());
  os << ManifestToJson(manifest).dump(1) << '\n';
  if (!os) throw IoError("failed writing " + manifest_path.string());
  return manifest;
}

CorpusManifest LoadManifest(const fs::path &root) {
  const fs::path path = root / "manifest.json";
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  json j;
  try {
    is >> j;
    CorpusManifest m;
    m.version = j.at("format_version").get<int>();
    if (m.version != kCorpusFormatVersion) {
      throw IoError("unsupported corpus format version in " + path.string());
    }
    CorpusSpec &s = m.spec;
    s.frame.sample_rate = j.at("sample_rate").get<int>();
    const json &f = j.at("frame");
    s.frame.frame_length = f.at("length").get<int>();
    s.frame.frame_shift = f.at("shift").get<int>();
    s.frame.num_bins = f.at("num_bins").get<int>();
    s.frame.low_freq = f.at("low_freq").get<double>();
    s.frame.high_freq = f.at("high_freq").get<double>();
    m.feat_dim = j.at("feat_dim").get<int>();
    s.num_senones = j.at("num_senones").get<int>();
    const json &g = j.at("generation");
    s.seed = g.at("seed").get<std::uint64_t>();
    s.num_speakers = g.at("num_speakers").get<int>();
    s.snrs = g.at("snrs").get<std::vector<double>>();
    s.train_mixtures = g.at("train_mixtures").get<std::size_t>();
    s.eval_mixtures = g.at("eval_mixtures").get<std::size_t>();
    s.min_frames = g.at("min_frames").get<std::size_t>();
    s.max_frames = g.at("max_frames").get<std::size_t>();
    s.eval_pair_fraction = g.at("eval_pair_fraction").get<double>();
    m.cmvn.mean = j.at("cmvn").at("mean").get<std::vector<double>>();
    m.cmvn.variance = j.at("cmvn").at("variance").get<std::vector<double>>();
    m.train_pairs = j.at("train_pairs").get<std::vector<std::pair<int, int>>>();
    m.eval_pairs = j.at("eval_pairs").get<std::vector<std::pair<int, int>>>();
    for (const auto &[name, split] : j.at("splits").items()) {
      m.split_names.push_back(name);
      std::vector<SampleRecord> records;
      for (const json &r : split.at("samples")) records.push_back(RecordFromJson(r));
      m.splits.push_back(std::move(records));
    }
    return m;
  } catch (const json::exception &e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
}

std::vector<MixtureSample> LoadSplit(const fs::path &root, const CorpusManifest &manifest,
                                     const std::string &split, bool apply_cmvn) {
  const std::vector<SampleRecord> &records = manifest.Split(split);
  const fs::path feats_path = root / split / "feats.bin";
  const fs::path labels_path = root / split / "labels.bin";
  std::ifstream feats(feats_path, std::ios::binary);
  if (!feats) throw IoError("cannot open " + feats_path.string());
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw IoError("cannot open " + labels_path.string());
  const auto dim = static_cast<std::size_t>(manifest.feat_dim);

  std::vector<MixtureSample> out;
  out.reserve(records.size());
  for (const SampleRecord &r : records) {
    MixtureSample s;
    s.features.utterance_id = r.id;
    s.features.frames = Matrix(r.frames, dim);
    feats.seekg(static_cast<std::streamoff>(r.feat_offset));
    for (double &v : s.features.frames.Data()) {
      float x;
      if (!ReadLe(feats, &x)) throw IoError("truncated " + feats_path.string() + " at " + r.id);
      v = x;
    }
    labels.seekg(static_cast<std::streamoff>(r.label_offset));
    for (std::size_t stream = 0; stream < r.streams; ++stream) {
      LabelSequence l;
      l.stream_tag = static_cast<int>(stream);
      l.senones.resize(r.frames);
      for (std::int32_t &id : l.senones) {
        std::uint32_t x;
        if (!ReadLe(labels, &x)) throw IoError("truncated " + labels_path.string() + " at " + r.id);
        id = static_cast<std::int32_t>(x);
      }
      s.targets.push_back(std::move(l));
    }
    if (apply_cmvn) ApplyCmvn(manifest.cmvn, &s.features.frames);
    s.snr_db = r.snr_db;
    s.high_energy_speaker = r.high_energy_speaker;
    s.speaker_ids = r.speaker_ids;
    s.original_lengths = r.original_lengths;
    out.push_back(std::move(s));
  }
  return out;
}

GeneratedMixture RegenerateMixture(const CorpusManifest &manifest, const std::string &split,
                                   const SampleRecord &record) {
  std::string mixed = split;
  if (mixed.starts_with("clean_")) mixed = mixed.substr(6);
  const auto &pairs = mixed == "train" ? manifest.train_pairs : manifest.eval_pairs;
  const MixturePlan plan = PlanMixture(manifest.spec, pairs, mixed, record.source_index);
  return GenerateMixture(manifest.spec, plan);
}

std::uint64_t CorpusChecksum(const fs::path &root) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto hash_file = [&](const fs::path &p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("cannot open " + p.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    h = Fnv1a(bytes.data(), bytes.size(), h);
  };
  hash_file(root / "manifest.json");
  for (const char *split : kSplitNames) {
    hash_file(root / split / "feats.bin");
    hash_file(root / split / "labels.bin");
  }
  return h;
}

}  // namespace pit
