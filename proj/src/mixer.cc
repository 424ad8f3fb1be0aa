// pit/mixer.cc

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

#include "pit/mixer.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pit/errors.h"
#include "pit/random.h"

namespace pit {

namespace {

// Shared vowel-like layout at 8 kHz: f1 spread over [300, 900] Hz, f2 over
// [1100, 2700] Hz in a scrambled order so every senone has a distinct pair.
std::vector<Formants> CanonicalFormants(int num_senones, double rate_scale) {
  const int speech = num_senones - 1;
  std::vector<Formants> table(static_cast<std::size_t>(num_senones));
  std::vector<int> f2_rank(static_cast<std::size_t>(speech));
  for (int i = 0; i < speech; ++i) f2_rank[static_cast<std::size_t>(i)] = i;
  Rng order(0x5A17F0E3D2C1B0A9ULL);
  for (std::size_t i = f2_rank.size(); i > 1; --i) {
    std::swap(f2_rank[i - 1], f2_rank[order.Index(i)]);
  }
  const double denom = std::max(speech - 1, 1);
  for (int k = 1; k < num_senones; ++k) {
    const int i = k - 1;
    auto &f = table[static_cast<std::size_t>(k)];
    f.f1 = rate_scale * (300.0 + 600.0 * i / denom);
    f.f2 = rate_scale * (1100.0 + 1600.0 * f2_rank[static_cast<std::size_t>(i)] / denom);
  }
  return table;
}

double DbToAmplitude(double db) { return std::pow(10.0, db / 20.0); }

}  // namespace

void SpeakerProfile::Validate(int sample_rate) const {
  if (formants.size() < 2) throw ValidationError("speaker profile: need at least 2 senones");
  const double nyquist = sample_rate / 2.0;
  for (std::size_t k = 1; k < formants.size(); ++k) {
    for (double f : {formants[k].f1 + pitch_offset, formants[k].f2 + pitch_offset}) {
      if (!(f > 0.0 && f < nyquist)) {
        throw ValidationError("speaker profile " + std::to_string(speaker_id) + ": senone " +
                              std::to_string(k) + " has frequency " + std::to_string(f) +
                              " Hz outside (0, " + std::to_string(nyquist) + ")");
      }
    }
  }
  if (!(base_gain > 0.0)) throw ValidationError("speaker profile: base_gain must be positive");
}

SpeakerProfile MakeSpeakerProfile(int speaker_id, int num_senones, std::uint64_t seed,
                                  const FrameConfig &frame) {
  if (num_senones < 2) throw ValidationError("speaker profile: num_senones must be >= 2");
  const double rate_scale = frame.sample_rate / 8000.0;
  Rng rng(MixSeed(seed, static_cast<std::uint64_t>(speaker_id)));
  SpeakerProfile p;
  p.speaker_id = speaker_id;
  p.base_gain = rng.Uniform(0.5, 1.5);
  p.pitch_offset = rate_scale * rng.Uniform(-25.0, 25.0);
  const double warp = rng.Uniform(0.96, 1.04);
  p.formants = CanonicalFormants(num_senones, rate_scale);
  for (std::size_t k = 1; k < p.formants.size(); ++k) {
    p.formants[k].f1 *= warp * rng.Uniform(0.98, 1.02);
    p.formants[k].f2 *= warp * rng.Uniform(0.98, 1.02);
  }
  p.Validate(frame.sample_rate);
  return p;
}

SourceUtterance GenUtterance(const SpeakerProfile &profile, std::size_t num_frames,
                             std::uint64_t seed, const FrameConfig &frame) {
  if (num_frames < 2 * kEdgeSilenceFrames + 1) {
    throw ValidationError("gen_utterance: num_frames must be >= 5, got " +
                          std::to_string(num_frames));
  }
  frame.Validate();
  profile.Validate(frame.sample_rate);
  const auto num_senones = static_cast<std::int32_t>(profile.formants.size());
  const auto speech_states = static_cast<std::size_t>(num_senones - 1);
  Rng rng(seed);

  SourceUtterance utt;
  utt.speaker_id = profile.speaker_id;
  utt.num_frames = num_frames;
  utt.labels.senones.assign(num_frames, kSilenceSenone);
  std::int32_t state = 1 + static_cast<std::int32_t>(rng.Index(speech_states));
  for (std::size_t t = kEdgeSilenceFrames; t + kEdgeSilenceFrames < num_frames; ++t) {
    if (t > kEdgeSilenceFrames && speech_states > 1 && rng.Uniform() >= kSelfTransition) {
      // Jump uniformly to one of the other speech states.
      auto next = static_cast<std::int32_t>(1 + rng.Index(speech_states - 1));
      if (next >= state) ++next;
      state = next;
    }
    utt.labels.senones[t] = state;
  }

  const std::size_t samples = frame.SamplesForFrames(num_frames);
  const auto shift = static_cast<std::size_t>(frame.frame_shift);
  const std::size_t half = shift / 2;
  const double two_pi_over_rate = 2.0 * std::numbers::pi / frame.sample_rate;
  const double noise_sigma = profile.base_gain * DbToAmplitude(kSourceNoiseDb);
  utt.waveform.resize(samples);
  double phase1 = 0.0, phase2 = 0.0;
  for (std::size_t n = 0; n < samples; ++n) {
    // Sample n belongs to the frame whose window center is nearest.
    const std::size_t t = std::min(n < half ? 0 : (n - half) / shift, num_frames - 1);
    const std::int32_t senone = utt.labels.senones[t];
    double x = 0.0;
    if (senone != kSilenceSenone) {
      const Formants &f = profile.formants[static_cast<std::size_t>(senone)];
      phase1 = std::fmod(phase1 + two_pi_over_rate * (f.f1 + profile.pitch_offset),
                         2.0 * std::numbers::pi);
      phase2 = std::fmod(phase2 + two_pi_over_rate * (f.f2 + profile.pitch_offset),
                         2.0 * std::numbers::pi);
      x = profile.base_gain * (std::sin(phase1) + kSecondFormantGain * std::sin(phase2));
    }
    utt.waveform[n] = x + noise_sigma * rng.Normal();
  }
  return utt;
}

double Energy(std::span<const double> signal) {
  double e = 0.0;
  for (double v : signal) e += v * v;
  return e;
}

double SnrScale(double e_high, double e_low, double snr_db) {
  if (!(e_high > 0.0) || !(e_low > 0.0)) {
    throw ValidationError("snr_scale: energies must be positive, got " +
                          std::to_string(e_high) + " and " + std::to_string(e_low));
  }
  return std::sqrt(e_high / (e_low * std::pow(10.0, snr_db / 10.0)));
}

MixResult MixPair(const SourceUtterance &high, const SourceUtterance &low, double snr_db,
                  std::uint64_t seed, const FrameConfig &frame) {
  if (high.speaker_id == low.speaker_id) {
    throw ValidationError("mix_pair: both sources come from speaker " +
                          std::to_string(high.speaker_id));
  }
  const std::size_t longer = std::max(high.num_frames, low.num_frames);
  const std::size_t shorter = std::min(high.num_frames, low.num_frames);
  if (static_cast<double>(shorter) < kMinLengthRatio * static_cast<double>(longer)) {
    throw ValidationError("mix_pair: lengths " + std::to_string(high.num_frames) + " and " +
                          std::to_string(low.num_frames) + " are not within a 3:4 ratio");
  }
  const double e_high = Energy(high.waveform);
  MixResult r;
  r.snr_db = snr_db;
  r.low_scale = SnrScale(e_high, Energy(low.waveform), snr_db);
  r.original_lengths = {high.num_frames, low.num_frames};

  r.high = high.waveform;
  r.low = low.waveform;
  for (double &v : r.low) v *= r.low_scale;
  r.targets[0] = high.labels;
  r.targets[1] = low.labels;
  r.targets[0].stream_tag = 0;
  r.targets[1].stream_tag = 1;

  if (shorter != longer) {
    r.padded_source = high.num_frames < low.num_frames ? 0 : 1;
    const std::size_t diff = longer - shorter;
    r.front_pad_frames = diff / 2;
    r.end_pad_frames = diff - r.front_pad_frames;
    const auto shift = static_cast<std::size_t>(frame.frame_shift);
    const double sigma =
        std::sqrt(e_high / static_cast<double>(high.waveform.size())) *
        DbToAmplitude(kPaddingNoiseDb);
    Rng rng(seed);
    std::vector<double> &wave = r.padded_source == 0 ? r.high : r.low;
    std::vector<double> padded;
    padded.reserve(wave.size() + diff * shift);
    for (std::size_t i = 0; i < r.front_pad_frames * shift; ++i) padded.push_back(sigma * rng.Normal());
    padded.insert(padded.end(), wave.begin(), wave.end());
    for (std::size_t i = 0; i < r.end_pad_frames * shift; ++i) padded.push_back(sigma * rng.Normal());
    wave = std::move(padded);

    auto &labels = r.targets[static_cast<std::size_t>(r.padded_source)].senones;
    std::vector<std::int32_t> padded_labels(r.front_pad_frames, kSilenceSenone);
    padded_labels.insert(padded_labels.end(), labels.begin(), labels.end());
    padded_labels.insert(padded_labels.end(), r.end_pad_frames, kSilenceSenone);
    labels = std::move(padded_labels);
  }

  r.mixture.resize(r.high.size());
  for (std::size_t n = 0; n < r.mixture.size(); ++n) r.mixture[n] = r.high[n] + r.low[n];
  return r;
}

}  // namespace pit
