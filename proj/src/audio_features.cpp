#include "bimodal/audio_features.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace bimodal::audio_features {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Iterative radix-2 FFT with cached twiddles per size. fft_size is a power
// of two by construction.
struct FftPlan {
  int n = 0;
  std::vector<int> bit_reverse;
  std::vector<std::complex<double>> twiddles;  // per stage, concatenated

  explicit FftPlan(int size) : n(size) {
    bit_reverse.resize(static_cast<size_t>(n));
    int log2n = 0;
    while ((1 << log2n) < n) ++log2n;
    for (int i = 0; i < n; ++i) {
      int r = 0;
      for (int b = 0; b < log2n; ++b)
        if (i & (1 << b)) r |= 1 << (log2n - 1 - b);
      bit_reverse[static_cast<size_t>(i)] = r;
    }
    for (int len = 2; len <= n; len <<= 1) {
      for (int j = 0; j < len / 2; ++j) {
        const double ang = -2.0 * kPi * j / len;
        twiddles.emplace_back(std::cos(ang), std::sin(ang));
      }
    }
  }

  void run(std::vector<std::complex<double>>& a) const {
    for (int i = 0; i < n; ++i) {
      const int r = bit_reverse[static_cast<size_t>(i)];
      if (i < r) std::swap(a[static_cast<size_t>(i)], a[static_cast<size_t>(r)]);
    }
    size_t tw = 0;
    for (int len = 2; len <= n; len <<= 1) {
      const int half = len / 2;
      for (int start = 0; start < n; start += len) {
        for (int j = 0; j < half; ++j) {
          const auto w = twiddles[tw + static_cast<size_t>(j)];
          const auto u = a[static_cast<size_t>(start + j)];
          const auto v = a[static_cast<size_t>(start + j + half)] * w;
          a[static_cast<size_t>(start + j)] = u + v;
          a[static_cast<size_t>(start + j + half)] = u - v;
        }
      }
      tw += static_cast<size_t>(half);
    }
  }
};

const FftPlan& plan_for(int size) {
  thread_local std::map<int, FftPlan> plans;
  auto it = plans.find(size);
  if (it == plans.end()) it = plans.emplace(size, FftPlan(size)).first;
  return it->second;
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Orthonormal DCT-II matrix, num_out x num_in.
MatrixD dct_matrix(int num_out, int num_in) {
  MatrixD d(num_out, num_in);
  const double scale0 = std::sqrt(1.0 / num_in);
  const double scale = std::sqrt(2.0 / num_in);
  for (int k = 0; k < num_out; ++k)
    for (int m = 0; m < num_in; ++m)
      d(k, m) = (k == 0 ? scale0 : scale) * std::cos(kPi * k * (m + 0.5) / num_in);
  return d;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MatrixD mel_filterbank(int num_filters, int fft_size, int sample_rate, double fmin, double fmax) {
  if (fmax <= 0.0) fmax = sample_rate / 2.0;
  const int num_bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<size_t>(num_filters) + 2);
  for (int i = 0; i < num_filters + 2; ++i)
    edges[static_cast<size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (num_filters + 1));

  MatrixD fb = MatrixD::Zero(num_filters, num_bins);
  for (int f = 0; f < num_filters; ++f) {
    const double left = edges[static_cast<size_t>(f)];
    const double center = edges[static_cast<size_t>(f) + 1];
    const double right = edges[static_cast<size_t>(f) + 2];
    for (int b = 0; b < num_bins; ++b) {
      const double freq = static_cast<double>(b) * sample_rate / fft_size;
      if (freq > left && freq < center) fb(f, b) = (freq - left) / (center - left);
      else if (freq >= center && freq < right) fb(f, b) = (right - freq) / (right - center);
    }
  }
  return fb;
}

FramingPlan framing_plan(int64_t num_samples) {
  if (num_samples < kNumFrames)
    throw std::invalid_argument("framing_plan: utterance too short (" +
                                std::to_string(num_samples) + " samples, need >= " +
                                std::to_string(kNumFrames) + ")");
  // W = ceil(N / 225.25) = ceil(4N / 901), exact in integer arithmetic.
  const int64_t window = (4 * num_samples + 900) / 901;
  const int64_t hop = (3 * window + 2) / 4;  // round(0.75 W), half up
  FramingPlan plan;
  plan.window_length = static_cast<int>(window);
  plan.hop_length = static_cast<int>(hop);
  plan.padded_length = window + static_cast<int64_t>(kNumFrames - 1) * hop;
  return plan;
}

MatrixD extract_log_mel(const std::vector<double>& samples, int sample_rate,
                        const MfccConfig& config) {
  if (sample_rate <= 0) throw std::invalid_argument("extract_log_mel: bad sample_rate");
  const auto plan = framing_plan(static_cast<int64_t>(samples.size()));
  const int window = plan.window_length;
  const int fft_size = config.fft_size > 0 ? config.fft_size : next_pow2(window);
  if (fft_size < window || (fft_size & (fft_size - 1)) != 0)
    throw std::invalid_argument("extract_log_mel: fft_size must be a power of two >= window");

  VectorD hann(window);
  if (window == 1) hann(0) = 1.0;
  else
    for (int i = 0; i < window; ++i)
      hann(i) = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (window - 1));

  const MatrixD fb = mel_filterbank(config.num_mel_filters, fft_size, sample_rate,
                                    config.fmin, config.fmax);
  const auto& fft = plan_for(fft_size);
  const int num_bins = fft_size / 2 + 1;

  MatrixD log_mel(kNumFrames, config.num_mel_filters);
  std::vector<std::complex<double>> buf(static_cast<size_t>(fft_size));
  VectorD magnitude(num_bins);
  const auto n = static_cast<int64_t>(samples.size());
  for (int t = 0; t < kNumFrames; ++t) {
    const int64_t start = static_cast<int64_t>(t) * plan.hop_length;
    for (int i = 0; i < window; ++i) {
      const int64_t idx = start + i;
      const double s = idx < n ? samples[static_cast<size_t>(idx)] : 0.0;  // zero padding
      buf[static_cast<size_t>(i)] = s * hann(i);
    }
    for (int i = window; i < fft_size; ++i) buf[static_cast<size_t>(i)] = 0.0;
    fft.run(buf);
    for (int b = 0; b < num_bins; ++b) magnitude(b) = std::abs(buf[static_cast<size_t>(b)]);
    VectorD energies = fb * magnitude;
    for (int f = 0; f < config.num_mel_filters; ++f)
      log_mel(t, f) = std::log(std::max(energies(f), config.log_floor));
  }
  return log_mel;
}

MatrixD extract_mfcc(const std::vector<double>& samples, int sample_rate,
                     const MfccConfig& config) {
  const MatrixD log_mel = extract_log_mel(samples, sample_rate, config);
  const MatrixD dct = dct_matrix(kNumCoeffs, config.num_mel_filters);
  return log_mel * dct.transpose();  // kNumFrames x kNumCoeffs
}

FeatureMatrix featurize(const corpus::Utterance& utterance, const MfccConfig& config) {
  const auto plan = framing_plan(static_cast<int64_t>(utterance.samples.size()));
  const MatrixD mfcc = extract_mfcc(utterance.samples, utterance.sample_rate, config);
  const MatrixD delta = compute_deltas(mfcc);
  const MatrixD delta2 = compute_deltas(delta);
  FeatureMatrix out;
  out.values.resize(kNumFrames, 3 * kNumCoeffs);
  out.values << mfcc, delta, delta2;
  out.window_length = plan.window_length;
  out.hop_length = plan.hop_length;
  return out;
}

MatrixD cmvn(const MatrixD& grid, double eps) {
  const auto n = static_cast<double>(grid.rows());
  const Eigen::RowVectorXd mean = grid.colwise().mean();
  MatrixD centered = grid.rowwise() - mean;
  const Eigen::RowVectorXd std_dev =
      (centered.array().square().colwise().sum() / n).sqrt().matrix();
  return (centered.array().rowwise() / (std_dev.array() + eps)).matrix();
}

namespace {

void put_u32_le(std::ofstream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

uint32_t get_u32_le(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_feature_grid(const std::string& path, const MatrixD& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_feature_grid: cannot open '" + path + "'");
  out.write("MF60", 4);
  put_u32_le(out, 1);
  put_u32_le(out, static_cast<uint32_t>(values.rows()));
  put_u32_le(out, static_cast<uint32_t>(values.cols()));
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const auto v = static_cast<float>(values(r, c));
      static_assert(sizeof(float) == 4);
      char bytes[4];
      std::memcpy(bytes, &v, 4);
      out.write(bytes, 4);
    }
  if (!out) throw std::runtime_error("save_feature_grid: write failed for '" + path + "'");
}

MatrixD load_feature_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_feature_grid: cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MF60", 4) != 0)
    throw std::runtime_error("load_feature_grid: bad magic in '" + path + "'");
  const uint32_t version = get_u32_le(in);
  if (version != 1)
    throw std::runtime_error("load_feature_grid: unsupported version in '" + path + "'");
  const uint32_t rows = get_u32_le(in);
  const uint32_t cols = get_u32_le(in);
  MatrixD values(rows, cols);
  for (uint32_t r = 0; r < rows; ++r)
    for (uint32_t c = 0; c < cols; ++c) {
      char bytes[4];
      in.read(bytes, 4);
      float v;
      std::memcpy(&v, bytes, 4);
      values(r, c) = v;
    }
  if (!in) throw std::runtime_error("load_feature_grid: truncated file '" + path + "'");
  return values;
}

}  // namespace bimodal::audio_features
