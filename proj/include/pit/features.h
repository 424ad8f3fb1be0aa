// pit/features.h

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

#ifndef PIT_FEATURES_H_
#define PIT_FEATURES_H_

// Log mel filterbank features: Hann-windowed frames, magnitude spectrum,
// triangular filters spaced evenly on the mel scale, log(x + 1e-10), and
// optional per-dimension mean/variance normalization.

#include <cstddef>
#include <span>
#include <vector>

#include "pit/matrix.h"
#include "pit/network.h"

namespace pit {

struct FrameConfig {
  int sample_rate = 8000;
  int frame_length = 256;
  int frame_shift = 128;
  int num_bins = 40;
  double low_freq = 0.0;
  double high_freq = 4000.0;

  int NumFftBins() const { return frame_length / 2 + 1; }
  /// Waveform length that yields exactly `frames` frames.
  std::size_t SamplesForFrames(std::size_t frames) const {
    return frames * static_cast<std::size_t>(frame_shift) +
           static_cast<std::size_t>(frame_length - frame_shift);
  }
  /// Frames that fit in `samples`; 0 if shorter than one frame.
  std::size_t FramesForSamples(std::size_t samples) const;
  void Validate() const;
};

struct CmvnStats {
  std::vector<double> mean;
  std::vector<double> variance;
};

inline constexpr double kLogFloor = 1e-10;
inline constexpr double kCmvnEpsilon = 1e-8;

double HzToMel(double hz);
double MelToHz(double mel);

/// num_bins x NumFftBins() triangular weights, built in the mel domain.
Matrix MelFilterbank(const FrameConfig &config);
/// Center frequency (Hz) of each mel filter.
std::vector<double> MelCenterFrequencies(const FrameConfig &config);

/// T x NumFftBins() magnitude spectra of the Hann-windowed frames.
Matrix MagnitudeSpectrogram(std::span<const double> waveform, const FrameConfig &config);

/// T x num_bins log filterbank features. Throws ValidationError if the
/// waveform is shorter than one frame.
FeatureSequence ExtractFeatures(std::span<const double> waveform, const FrameConfig &config,
                                const CmvnStats *cmvn = nullptr);

/// Per-dimension population mean and variance over all frames.
CmvnStats ComputeCmvn(std::span<const Matrix> features);
/// x <- (x - mean) / sqrt(var + 1e-8), per column.
void ApplyCmvn(const CmvnStats &stats, Matrix *features);

}  // namespace pit

#endif  // PIT_FEATURES_H_
