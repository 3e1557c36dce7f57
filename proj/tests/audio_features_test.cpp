#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bimodal/audio_features.hpp"

#include "oracles.hpp"

#include <cmath>
#include <filesystem>

using namespace bimodal;
using namespace bimodal::audio_features;

namespace {

std::vector<double> sine(double freq, double seconds, int rate, double amplitude = 0.5) {
  std::vector<double> x(static_cast<size_t>(seconds * rate));
  for (size_t i = 0; i < x.size(); ++i)
    x[i] = amplitude * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate);
  return x;
}

}  // namespace

TEST_CASE("framing_plan: worked examples") {
  const auto plan16k = framing_plan(16000);
  CHECK(plan16k.window_length == 72);
  CHECK(plan16k.hop_length == 54);
  CHECK(plan16k.padded_length == 16218);

  const auto exact = framing_plan(225250);
  CHECK(exact.window_length == 1000);
  CHECK(exact.hop_length == 750);
  CHECK(exact.padded_length == 225250);

  CHECK_THROWS_AS(framing_plan(299), std::invalid_argument);
  CHECK_NOTHROW(framing_plan(300));
}

TEST_CASE("framing_plan: naive slicer yields exactly 300 frames for random lengths") {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const int64_t n = rng.uniform_int(300, 10'000'000);
    const auto plan = framing_plan(n);
    CHECK(plan.hop_length == static_cast<int>(std::lround(0.75 * plan.window_length)));
    CHECK(plan.window_length == static_cast<int>((4 * n + 900) / 901));
    CHECK(plan.padded_length == plan.window_length + 299LL * plan.hop_length);
    CHECK(oracles::count_frames(plan.padded_length, plan.window_length, plan.hop_length) == 300);
  }
}

TEST_CASE("extract_mfcc: silence gives 300 identical rows") {
  const std::vector<double> silence(8000, 0.0);
  const auto mfcc = extract_mfcc(silence, 16000);
  REQUIRE(mfcc.rows() == 300);
  REQUIRE(mfcc.cols() == 20);
  for (int t = 1; t < 300; ++t) CHECK((mfcc.row(t) - mfcc.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mfcc.allFinite());
}

namespace {

int nearest_center_filter(double freq, int rate, int num_filters) {
  auto to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto from_mel = [](double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); };
  const double mel_hi = to_mel(rate / 2.0);
  int best = 0;
  double best_gap = 1e18;
  for (int f = 0; f < num_filters; ++f) {
    const double center = from_mel(mel_hi * (f + 1) / (num_filters + 1));
    if (std::abs(center - freq) < best_gap) {
      best_gap = std::abs(center - freq);
      best = f;
    }
  }
  return best;
}

int peak_filter(const MatrixD& log_mel) {
  Eigen::Index peak = 0;
  VectorD mean = log_mel.colwise().mean();
  mean.maxCoeff(&peak);
  return static_cast<int>(peak);
}

}  // namespace

TEST_CASE("extract_log_mel: 440 Hz sine peaks at the filter whose center is nearest 440") {
  // 2 s keeps the window long enough (W = 143) that the Hann main lobe stays
  // well inside one mel filter.
  const int rate = 16000;
  const auto tone = sine(440.0, 2.0, rate);
  MfccConfig cfg;
  const auto log_mel = extract_log_mel(tone, rate, cfg);
  REQUIRE(log_mel.rows() == 300);
  REQUIRE(log_mel.cols() == cfg.num_mel_filters);
  CHECK(peak_filter(log_mel) == nearest_center_filter(440.0, rate, cfg.num_mel_filters));
}

TEST_CASE("extract_log_mel: independent naive-DFT filterbank agrees on the peak filter") {
  const int rate = 16000;
  for (const double secs : {1.0, 2.0}) {
    const auto tone = sine(440.0, secs, rate);
    MfccConfig cfg;
    const auto log_mel = extract_log_mel(tone, rate, cfg);
    const int lib_peak = peak_filter(log_mel);

    const auto plan = framing_plan(static_cast<int64_t>(tone.size()));
    int fft_size = 1;
    while (fft_size < plan.window_length) fft_size <<= 1;
    const std::vector<double> frame(tone.begin() + 150 * plan.hop_length,
                                    tone.begin() + 150 * plan.hop_length + plan.window_length);
    const auto oracle_energies =
        oracles::mel_energies_oracle(frame, rate, fft_size, cfg.num_mel_filters);
    int oracle_peak = 0;
    for (int f = 1; f < cfg.num_mel_filters; ++f)
      if (oracle_energies[static_cast<size_t>(f)] >
          oracle_energies[static_cast<size_t>(oracle_peak)])
        oracle_peak = f;
    CHECK(lib_peak == oracle_peak);
  }
}

TEST_CASE("extract_mfcc: doubling the input shifts only coefficient 0") {
  // 2 s so every mel filter covers at least one FFT bin and stays clear of
  // the log floor.
  const auto tone = sine(440.0, 2.0, 16000, 0.25);
  auto doubled = tone;
  for (auto& v : doubled) v *= 2.0;
  const auto a = extract_mfcc(tone, 16000);
  const auto b = extract_mfcc(doubled, 16000);
  const MatrixD diff = b - a;
  // c0 shifts by the same constant everywhere; c1..c19 unchanged.
  const double c0_shift = diff(0, 0);
  CHECK(c0_shift > 0.0);
  CHECK((diff.col(0).array() - c0_shift).abs().maxCoeff() <= 1e-6);
  CHECK(diff.rightCols(19).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("compute_deltas: worked ramp examples") {
  MatrixD ramp(5, 1);
  ramp << 0, 1, 2, 3, 4;
  const MatrixD delta = compute_deltas(ramp);
  CHECK(delta(2, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(delta(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(delta(1, 0) == doctest::Approx((1.0 * 2.0 + 2.0 * 3.0) / 10.0).epsilon(1e-15));
  CHECK(delta(4, 0) == doctest::Approx(0.5).epsilon(1e-15));

  MatrixD constant = MatrixD::Constant(6, 3, 2.5);
  CHECK(compute_deltas(constant).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("compute_deltas: matches the brute-force formula on random matrices") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = static_cast<int>(rng.uniform_int(1, 40));
    const int cols = static_cast<int>(rng.uniform_int(1, 8));
    MatrixD x(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) x(r, c) = rng.uniform(-5.0, 5.0);
    const MatrixD got = compute_deltas(x);
    const MatrixD want = oracles::brute_force_deltas(x);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("compute_deltas: linear in its input") {
  Rng rng(6);
  MatrixD x(20, 4), y(20, 4);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 4; ++c) {
      x(r, c) = rng.uniform(-1.0, 1.0);
      y(r, c) = rng.uniform(-1.0, 1.0);
    }
  const double a = 2.75, b = -1.25;
  const MatrixD combined = compute_deltas((a * x + b * y).eval());
  const MatrixD separate = a * compute_deltas(x) + b * compute_deltas(y);
  CHECK((combined - separate).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("featurize: 300x60 with zero delta columns for silence") {
  corpus::Utterance u;
  u.id = "probe";
  u.dialog_id = "d";
  u.sample_rate = 16000;
  u.samples.assign(12000, 0.0);
  const auto fm = featurize(u);
  CHECK(fm.values.rows() == 300);
  CHECK(fm.values.cols() == 60);
  CHECK(fm.values.rightCols(40).cwiseAbs().maxCoeff() == 0.0);
  CHECK(fm.hop_length == static_cast<int>(std::lround(0.75 * fm.window_length)));

  const auto again = featurize(u);
  CHECK(fm.values == again.values);
}

TEST_CASE("featurize: shape is invariant to repeating the signal") {
  corpus::Utterance u;
  u.id = "probe";
  u.dialog_id = "d";
  u.sample_rate = 16000;
  u.samples = sine(220.0, 0.8, 16000);
  const auto once = featurize(u);
  u.samples.insert(u.samples.end(), u.samples.begin(), u.samples.end());
  const auto twice = featurize(u);
  CHECK(once.values.rows() == twice.values.rows());
  CHECK(once.values.cols() == twice.values.cols());
  CHECK(twice.window_length > once.window_length);
}

TEST_CASE("featurize: outputs stay finite over random valid audio") {
  Rng rng(8);
  corpus::Utterance u;
  u.id = "probe";
  u.dialog_id = "d";
  for (int trial = 0; trial < 10; ++trial) {
    u.sample_rate = rng.bernoulli(0.5) ? 8000 : 16000;
    const auto n = rng.uniform_int(300, 40000);
    u.samples.resize(static_cast<size_t>(n));
    for (auto& v : u.samples) v = rng.uniform(-1.0, 1.0);
    const auto fm = featurize(u);
    CHECK(fm.values.rows() == 300);
    CHECK(fm.values.cols() == 60);
    CHECK(fm.values.allFinite());
  }
}

TEST_CASE("cmvn standardizes each column and keeps silence finite") {
  Rng rng(12);
  MatrixD grid(300, 60);
  for (int r = 0; r < 300; ++r)
    for (int c = 0; c < 60; ++c) grid(r, c) = rng.uniform(-30.0, 10.0) + 5.0 * c;
  const MatrixD normalized = cmvn(grid);
  for (int c = 0; c < 60; ++c) {
    CHECK(std::abs(normalized.col(c).mean()) <= 1e-9);
    const double var = normalized.col(c).array().square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
  // Constant columns (silence deltas) stay finite and zero.
  const MatrixD flat = cmvn(MatrixD::Constant(300, 60, -23.0));
  CHECK(flat.allFinite());
  CHECK(flat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feature cache: header and round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "bimodal_feature_cache";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "u1.mf60").string();

  Rng rng(3);
  MatrixD grid(300, 60);
  for (int r = 0; r < 300; ++r)
    for (int c = 0; c < 60; ++c) grid(r, c) = rng.uniform(-40.0, 40.0);
  save_feature_grid(path, grid);

  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  CHECK(std::string(magic, 4) == "MF60");
  in.seekg(0, std::ios::end);
  CHECK(in.tellg() == 16 + 300 * 60 * 4);

  const MatrixD loaded = load_feature_grid(path);
  REQUIRE(loaded.rows() == 300);
  REQUIRE(loaded.cols() == 60);
  // Values went through float32; compare at that precision.
  CHECK((loaded.cast<float>() - grid.cast<float>()).cwiseAbs().maxCoeff() == 0.0f);

  CHECK_THROWS_AS(load_feature_grid((dir / "missing.mf60").string()), std::runtime_error);
  {
    std::ofstream bad((dir / "bad.mf60").string(), std::ios::binary);
    bad << "NOPE";
  }
  CHECK_THROWS_AS(load_feature_grid((dir / "bad.mf60").string()), std::runtime_error);
}
