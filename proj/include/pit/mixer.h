// pit/mixer.h

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

#ifndef PIT_MIXER_H_
#define PIT_MIXER_H_

// Synthetic talkers and two-talker mixing.
//
// A synthetic talker emits, for every non-silence senone k, two sinusoids at
// its formants f1(k) and f2(k) shifted by a per-talker pitch offset. Senone
// sequences come from a sticky Markov chain framed by silence. Mixtures are
// the sample-wise sum of a high-energy source and a low-energy source scaled
// to a target energy ratio; the shorter source is padded with low-level
// noise (and its labels with silence) split between the front and the end.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pit/features.h"
#include "pit/pit-loss.h"

namespace pit {

inline constexpr std::int32_t kSilenceSenone = 0;
inline constexpr double kSelfTransition = 0.9;
inline constexpr std::size_t kEdgeSilenceFrames = 2;
inline constexpr double kSourceNoiseDb = -30.0;   // relative to base_gain
inline constexpr double kPaddingNoiseDb = -40.0;  // relative to high-energy RMS
inline constexpr double kSecondFormantGain = 0.7;
/// Shorter/longer frame-count ratio accepted for a mixture pair.
inline constexpr double kMinLengthRatio = 0.75;

struct Formants {
  double f1 = 0.0;
  double f2 = 0.0;
};

struct SpeakerProfile {
  int speaker_id = 0;
  double base_gain = 1.0;
  std::vector<Formants> formants;  // indexed by senone; entry 0 unused (silence)
  double pitch_offset = 0.0;

  void Validate(int sample_rate) const;
};

/// Talker `speaker_id` drawn from `seed`: a shared vowel-like table warped by
/// a per-talker factor, small per-senone jitter, gain and pitch offset.
SpeakerProfile MakeSpeakerProfile(int speaker_id, int num_senones, std::uint64_t seed,
                                  const FrameConfig &frame = {});

struct SourceUtterance {
  std::vector<double> waveform;
  LabelSequence labels;
  int speaker_id = 0;
  std::size_t num_frames = 0;
};

/// Throws ValidationError for num_frames < 5.
SourceUtterance GenUtterance(const SpeakerProfile &profile, std::size_t num_frames,
                             std::uint64_t seed, const FrameConfig &frame = {});

double Energy(std::span<const double> signal);

/// Amplitude for the low-energy source so that
/// 10 log10(e_high / (a^2 e_low)) == snr_db.
double SnrScale(double e_high, double e_low, double snr_db);

struct MixResult {
  std::vector<double> mixture;
  // Padded, scaled sources; mixture[n] == high[n] + low[n].
  std::vector<double> high;
  std::vector<double> low;
  std::array<LabelSequence, 2> targets;  // {high, low}
  std::array<std::size_t, 2> original_lengths{};
  double snr_db = 0.0;
  double low_scale = 1.0;
  std::size_t front_pad_frames = 0;
  std::size_t end_pad_frames = 0;
  int padded_source = -1;  // 0 = high, 1 = low, -1 = none
};

/// Mixes two talkers. `high` is the designated high-energy reference. The
/// low source is scaled over its full unpadded energy, then the shorter one
/// is padded. Throws ValidationError for equal speaker ids or a length ratio
/// below 3:4.
MixResult MixPair(const SourceUtterance &high, const SourceUtterance &low, double snr_db,
                  std::uint64_t seed, const FrameConfig &frame = {});

}  // namespace pit

#endif  // PIT_MIXER_H_
