#pragma once

#include "bimodal/corpus.hpp"
#include "bimodal/types.hpp"

#include <string>
#include <vector>

namespace bimodal::audio_features {

inline constexpr int kNumFrames = 300;
inline constexpr int kNumCoeffs = 20;
inline constexpr double kOverlapFraction = 0.25;

struct MfccConfig {
  int num_mel_filters = 40;
  int fft_size = 0;  // 0: next power of two >= window length
  double log_floor = 1e-10;
  double fmin = 0.0;
  double fmax = 0.0;  // 0: sample_rate / 2
};

// 300 x 60 grid: columns 0-19 MFCC, 20-39 first derivatives, 40-59 second
// derivatives.
struct FeatureMatrix {
  MatrixD values;
  int window_length = 0;
  int hop_length = 0;
};

struct FramingPlan {
  int window_length = 0;
  int hop_length = 0;
  int64_t padded_length = 0;
};

// Variable window with 25% overlap between consecutive windows, sized so the
// zero-padded signal yields exactly 300 frames:
//   W = ceil(num_samples / 225.25), H = round(0.75 W), padded = W + 299 H.
// Throws for signals shorter than 300 samples.
FramingPlan framing_plan(int64_t num_samples);

// Per frame: Hann window, magnitude spectrum, triangular mel filterbank (HTK
// scale), log with floor, orthonormal DCT-II keeping coefficients 0..19.
MatrixD extract_mfcc(const std::vector<double>& samples, int sample_rate,
                     const MfccConfig& config = {});

// Pre-DCT log mel energies (300 x num_mel_filters); extract_mfcc is the DCT
// of this. Exposed so the filterbank can be inspected directly.
MatrixD extract_log_mel(const std::vector<double>& samples, int sample_rate,
                        const MfccConfig& config = {});

// Regression deltas with radius 2 and edge replication:
//   d_t = sum_{n=1..2} n (c_{t+n} - c_{t-n}) / (2 sum n^2)
template <typename Derived>
Matrix<typename Derived::Scalar> compute_deltas(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  Matrix<S> out(rows, cols);
  const S denom = S(10);  // 2 * (1^2 + 2^2)
  auto clamp_row = [rows](Eigen::Index t) { return t < 0 ? 0 : (t >= rows ? rows - 1 : t); };
  for (Eigen::Index t = 0; t < rows; ++t) {
    out.row(t) = (S(1) * (x.row(clamp_row(t + 1)) - x.row(clamp_row(t - 1))) +
                  S(2) * (x.row(clamp_row(t + 2)) - x.row(clamp_row(t - 2)))) /
                 denom;
  }
  return out;
}

// [MFCC | delta | delta-delta], 300 x 60.
FeatureMatrix featurize(const corpus::Utterance& utterance, const MfccConfig& config = {});

// Per-utterance cepstral mean/variance normalization: standardizes each
// column over the frames. Applied at training time; cached grids stay raw.
MatrixD cmvn(const MatrixD& grid, double eps = 1e-8);

// Binary feature cache: 16-byte header (magic "MF60", u32 version, u32 rows,
// u32 cols) followed by row-major little-endian float32 values.
void save_feature_grid(const std::string& path, const MatrixD& values);
MatrixD load_feature_grid(const std::string& path);

// HTK mel scale helpers.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filterbank over FFT bin center frequencies; one row per filter.
MatrixD mel_filterbank(int num_filters, int fft_size, int sample_rate, double fmin, double fmax);

}  // namespace bimodal::audio_features
