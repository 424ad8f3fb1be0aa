// pit/features.cc

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

#include "pit/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "pit/errors.h"

namespace pit {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex &PlannerMutex() {
  static std::mutex m;
  return m;
}

// Owns one real-to-complex plan and its buffers.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(PlannerMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  std::span<double> Input() { return {in_, static_cast<std::size_t>(n_)}; }

  void MagnitudeInto(std::span<double> mag) {
    fftw_execute(plan_);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(out_[k][0], out_[k][1]);
  }

 private:
  int n_;
  double *in_ = nullptr;
  fftw_complex *out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

std::vector<double> HannWindow(int n) {
  // Periodic Hann.
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

}  // namespace

std::size_t FrameConfig::FramesForSamples(std::size_t samples) const {
  if (samples < static_cast<std::size_t>(frame_length)) return 0;
  return 1 + (samples - static_cast<std::size_t>(frame_length)) /
                 static_cast<std::size_t>(frame_shift);
}

void FrameConfig::Validate() const {
  if (sample_rate <= 0 || frame_length <= 0 || frame_shift <= 0 || num_bins <= 0) {
    throw ValidationError("frame config: sizes must be positive");
  }
  if (frame_shift > frame_length) {
    throw ValidationError("frame config: frame_shift exceeds frame_length");
  }
  if (!(low_freq >= 0.0 && high_freq > low_freq && high_freq <= sample_rate / 2.0)) {
    throw ValidationError("frame config: need 0 <= low_freq < high_freq <= sample_rate/2");
  }
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> MelCenterFrequencies(const FrameConfig &config) {
  const double lo = HzToMel(config.low_freq);
  const double hi = HzToMel(config.high_freq);
  const double step = (hi - lo) / (config.num_bins + 1);
  std::vector<double> centers(static_cast<std::size_t>(config.num_bins));
  for (int m = 0; m < config.num_bins; ++m) {
    centers[static_cast<std::size_t>(m)] = MelToHz(lo + step * (m + 1));
  }
  return centers;
}

Matrix MelFilterbank(const FrameConfig &config) {
  config.Validate();
  const int fft_bins = config.NumFftBins();
  const double lo = HzToMel(config.low_freq);
  const double hi = HzToMel(config.high_freq);
  const double step = (hi - lo) / (config.num_bins + 1);
  const double bin_hz = static_cast<double>(config.sample_rate) / config.frame_length;
  Matrix bank(static_cast<std::size_t>(config.num_bins), static_cast<std::size_t>(fft_bins));
  for (int m = 0; m < config.num_bins; ++m) {
    const double left = lo + step * m;
    const double center = left + step;
    const double right = center + step;
    for (int k = 0; k < fft_bins; ++k) {
      const double mel = HzToMel(k * bin_hz);
      double w = 0.0;
      if (mel > left && mel <= center) {
        w = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        w = (right - mel) / (right - center);
      }
      bank(static_cast<std::size_t>(m), static_cast<std::size_t>(k)) = w;
    }
  }
  return bank;
}

Matrix MagnitudeSpectrogram(std::span<const double> waveform, const FrameConfig &config) {
  config.Validate();
  const std::size_t frames = config.FramesForSamples(waveform.size());
  if (frames == 0) {
    throw ValidationError("extract_features: waveform of " + std::to_string(waveform.size()) +
                          " samples is shorter than one frame (" +
                          std::to_string(config.frame_length) + ")");
  }
  const auto len = static_cast<std::size_t>(config.frame_length);
  const auto shift = static_cast<std::size_t>(config.frame_shift);
  const std::vector<double> window = HannWindow(config.frame_length);
  RealFft fft(config.frame_length);
  Matrix spec(frames, static_cast<std::size_t>(config.NumFftBins()));
  for (std::size_t t = 0; t < frames; ++t) {
    auto in = fft.Input();
    for (std::size_t i = 0; i < len; ++i) in[i] = waveform[t * shift + i] * window[i];
    fft.MagnitudeInto(spec.Row(t));
  }
  return spec;
}

FeatureSequence ExtractFeatures(std::span<const double> waveform, const FrameConfig &config,
                                const CmvnStats *cmvn) {
  const Matrix spec = MagnitudeSpectrogram(waveform, config);
  const Matrix bank = MelFilterbank(config);
  FeatureSequence out;
  out.frames = Matrix(spec.Rows(), bank.Rows());
  GemmAccumulateNT(spec, bank, &out.frames);
  for (double &v : out.frames.Data()) v = std::log(v + kLogFloor);
  if (cmvn != nullptr) ApplyCmvn(*cmvn, &out.frames);
  return out;
}

CmvnStats ComputeCmvn(std::span<const Matrix> features) {
  if (features.empty()) throw ValidationError("cmvn: no feature matrices");
  const std::size_t dim = features[0].Cols();
  std::vector<double> sum(dim, 0.0);
  std::size_t count = 0;
  for (const Matrix &m : features) {
    if (m.Cols() != dim) throw ShapeError("cmvn: inconsistent feature dimension");
    for (std::size_t r = 0; r < m.Rows(); ++r) {
      auto row = m.Row(r);
      for (std::size_t c = 0; c < dim; ++c) sum[c] += row[c];
    }
    count += m.Rows();
  }
  if (count == 0) throw ValidationError("cmvn: no frames");
  CmvnStats stats;
  stats.mean.resize(dim);
  stats.variance.assign(dim, 0.0);
  for (std::size_t c = 0; c < dim; ++c) stats.mean[c] = sum[c] / static_cast<double>(count);
  // Two-pass variance.
  for (const Matrix &m : features) {
    for (std::size_t r = 0; r < m.Rows(); ++r) {
      auto row = m.Row(r);
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = row[c] - stats.mean[c];
        stats.variance[c] += d * d;
      }
    }
  }
  for (double &v : stats.variance) v /= static_cast<double>(count);
  return stats;
}

void ApplyCmvn(const CmvnStats &stats, Matrix *features) {
  if (stats.mean.size() != features->Cols() || stats.variance.size() != features->Cols()) {
    throw ShapeError("cmvn: statistics of dimension " + std::to_string(stats.mean.size()) +
                     " for features " + features->ShapeString());
  }
  std::vector<double> inv_std(stats.variance.size());
  for (std::size_t c = 0; c < inv_std.size(); ++c) {
    inv_std[c] = 1.0 / std::sqrt(stats.variance[c] + kCmvnEpsilon);
  }
  for (std::size_t r = 0; r < features->Rows(); ++r) {
    auto row = features->Row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - stats.mean[c]) * inv_std[c];
  }
}

}  // namespace pit
