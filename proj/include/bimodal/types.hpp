#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace bimodal {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;
using VectorF = Vector<float>;
using VectorD = Vector<double>;

// Three-class sentiment polarity. Integer codes are fixed project-wide.
enum class SentimentLabel : int { negative = 0, positive = 1, neutral = 2 };

inline constexpr int kNumClasses = 3;

inline constexpr std::array<SentimentLabel, kNumClasses> kAllLabels = {
    SentimentLabel::negative, SentimentLabel::positive, SentimentLabel::neutral};

inline std::string_view label_name(SentimentLabel label) {
  switch (label) {
    case SentimentLabel::negative: return "negative";
    case SentimentLabel::positive: return "positive";
    case SentimentLabel::neutral: return "neutral";
  }
  throw std::invalid_argument("label_name: invalid label code");
}

inline std::optional<SentimentLabel> parse_label(std::string_view text) {
  if (text == "negative") return SentimentLabel::negative;
  if (text == "positive") return SentimentLabel::positive;
  if (text == "neutral") return SentimentLabel::neutral;
  return std::nullopt;
}

inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic, portable PRNG (splitmix64 core). Every stochastic choice in
// the project draws from one of these so results are reproducible across
// compilers and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : origin_(seed), state_(mix64(seed)) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    if (lo > hi) throw std::invalid_argument("Rng::uniform_int: empty range");
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    // Rejection sampling keeps the draw unbiased.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return lo + static_cast<int64_t>(v % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Fisher-Yates; deterministic regardless of standard library.
  template <typename RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<int64_t>(last - first);
    for (int64_t i = n - 1; i > 0; --i) {
      const int64_t j = uniform_int(0, i);
      std::swap(first[i], first[j]);
    }
  }

  // Child stream derived from the original seed; independent of draw order.
  Rng fork(uint64_t stream) const { return Rng(mix64(origin_ ^ mix64(stream + 1))); }

  uint64_t origin() const { return origin_; }

 private:
  uint64_t origin_;
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bimodal
