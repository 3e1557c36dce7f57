// Independent reference implementations used only by tests. These stay
// deliberately naive so they cannot share bugs with the library code.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace oracles {

// Counts frames a naive slicer produces: full windows of length `window`
// advancing by `hop` over a signal of length `padded`.
inline int64_t count_frames(int64_t padded, int64_t window, int64_t hop) {
  int64_t frames = 0;
  for (int64_t start = 0; start + window <= padded; start += hop) ++frames;
  return frames;
}

// Dominant-period fundamental estimate via normalized autocorrelation over a
// plausible pitch range.
inline double autocorr_f0(const std::vector<double>& samples, int sample_rate, double fmin = 80.0,
                          double fmax = 500.0) {
  const auto n = static_cast<int64_t>(samples.size());
  const auto lag_min = static_cast<int64_t>(sample_rate / fmax);
  const auto lag_max = static_cast<int64_t>(sample_rate / fmin);
  double best = -1.0;
  int64_t best_lag = lag_min;
  for (int64_t lag = lag_min; lag <= lag_max && lag < n; ++lag) {
    double acc = 0.0;
    for (int64_t i = 0; i + lag < n; ++i) acc += samples[i] * samples[i + lag];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  return static_cast<double>(sample_rate) / static_cast<double>(best_lag);
}

// Brute-force regression deltas, radius 2, edge replication; written directly
// from the formula.
inline Eigen::MatrixXd brute_force_deltas(const Eigen::MatrixXd& x) {
  const auto rows = x.rows(), cols = x.cols();
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (Eigen::Index d = 0; d < cols; ++d) {
      double numer = 0.0, denom = 0.0;
      for (int n = 1; n <= 2; ++n) {
        auto clamp = [rows](Eigen::Index i) {
          return i < 0 ? Eigen::Index{0} : (i >= rows ? rows - 1 : i);
        };
        numer += n * (x(clamp(t + n), d) - x(clamp(t - n), d));
        denom += 2.0 * n * n;
      }
      out(t, d) = numer / denom;
    }
  }
  return out;
}

// O(n^2) DFT magnitude spectrum of one windowed frame.
inline std::vector<double> dft_magnitude(const std::vector<double>& frame, int fft_size) {
  const int bins = fft_size / 2 + 1;
  std::vector<double> magnitude(static_cast<size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t n = 0; n < frame.size(); ++n) {
      const double angle = -2.0 * M_PI * k * static_cast<double>(n) / fft_size;
      acc += frame[n] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    magnitude[static_cast<size_t>(k)] = std::abs(acc);
  }
  return magnitude;
}

// Mel energies of one raw frame: Hann window, naive DFT, triangular filters
// built from scratch on the HTK mel scale.
inline std::vector<double> mel_energies_oracle(const std::vector<double>& raw_frame,
                                               int sample_rate, int fft_size, int num_filters) {
  std::vector<double> windowed(raw_frame.size());
  const auto w = static_cast<int>(raw_frame.size());
  for (int i = 0; i < w; ++i)
    windowed[static_cast<size_t>(i)] =
        raw_frame[static_cast<size_t>(i)] * (0.5 - 0.5 * std::cos(2.0 * M_PI * i / (w - 1)));
  const auto magnitude = dft_magnitude(windowed, fft_size);

  auto to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto from_mel = [](double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); };
  const double mel_hi = to_mel(sample_rate / 2.0);
  std::vector<double> energies(static_cast<size_t>(num_filters), 0.0);
  for (int f = 0; f < num_filters; ++f) {
    const double left = from_mel(mel_hi * f / (num_filters + 1));
    const double center = from_mel(mel_hi * (f + 1) / (num_filters + 1));
    const double right = from_mel(mel_hi * (f + 2) / (num_filters + 1));
    for (size_t b = 0; b < magnitude.size(); ++b) {
      const double freq = static_cast<double>(b) * sample_rate / fft_size;
      double weight = 0.0;
      if (freq > left && freq < center) weight = (freq - left) / (center - left);
      else if (freq >= center && freq < right) weight = (right - freq) / (right - center);
      energies[static_cast<size_t>(f)] += weight * magnitude[b];
    }
  }
  return energies;
}

}  // namespace oracles
