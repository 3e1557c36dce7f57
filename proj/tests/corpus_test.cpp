#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bimodal/corpus.hpp"
#include "bimodal/wav.hpp"

#include "oracles.hpp"

#include <filesystem>
#include <fstream>
#include <map>

using namespace bimodal;
using namespace bimodal::corpus;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bimodal_corpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

GeneratorConfig small_config(uint64_t seed) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.num_dialogs = 12;
  cfg.utterances_per_dialog = {2, 5};
  cfg.duration_range = {0.2, 0.5};
  cfg.sample_rate = 8000;
  return cfg;
}

bool utterances_equal(const Utterance& a, const Utterance& b) {
  return a.id == b.id && a.dialog_id == b.dialog_id && a.samples == b.samples &&
         a.sample_rate == b.sample_rate && a.transcript == b.transcript && a.votes == b.votes &&
         a.label == b.label;
}

}  // namespace

TEST_CASE("resolve_majority_label: strict majority") {
  CHECK(resolve_majority_label({"positive", "positive", "negative"}) == SentimentLabel::positive);
  CHECK(!resolve_majority_label({"positive", "negative", "neutral"}).has_value());
  CHECK(!resolve_majority_label({"positive", "positive", "negative", "negative"}).has_value());
  CHECK(resolve_majority_label({"neutral"}) == SentimentLabel::neutral);
}

TEST_CASE("resolve_majority_label: unknown vote rejected with the offending string") {
  CHECK_THROWS_WITH_AS(resolve_majority_label({"positive", "happyish"}),
                       doctest::Contains("happyish"), std::invalid_argument);
  CHECK_THROWS_AS(resolve_majority_label({}), std::invalid_argument);
}

TEST_CASE("resolve_majority_label: exhaustive against a counting oracle up to 7 votes") {
  const std::array<std::string, 3> names = {"negative", "positive", "neutral"};
  // Enumerate all vote sequences over 3 labels up to length 7.
  for (int len = 1; len <= 7; ++len) {
    const int64_t combos = static_cast<int64_t>(std::pow(3, len));
    for (int64_t code = 0; code < combos; ++code) {
      std::vector<std::string> votes;
      std::array<int, 3> counts{};
      int64_t rest = code;
      for (int i = 0; i < len; ++i) {
        const int c = static_cast<int>(rest % 3);
        rest /= 3;
        votes.push_back(names[static_cast<size_t>(c)]);
        counts[static_cast<size_t>(c)] += 1;
      }
      std::optional<SentimentLabel> expected;
      for (int c = 0; c < 3; ++c)
        if (2 * counts[static_cast<size_t>(c)] > len) expected = static_cast<SentimentLabel>(c);
      CHECK(resolve_majority_label(votes) == expected);
    }
  }
}

TEST_CASE("map_iemocap_label: three-class remap") {
  CHECK(map_iemocap_label("excited") == SentimentLabel::positive);
  CHECK(map_iemocap_label("happy") == SentimentLabel::positive);
  CHECK(map_iemocap_label("sad") == SentimentLabel::negative);
  CHECK(map_iemocap_label("angry") == SentimentLabel::negative);
  CHECK(map_iemocap_label("neutral") == SentimentLabel::neutral);
  CHECK(!map_iemocap_label("frustrated").has_value());
  CHECK(!map_iemocap_label("").has_value());
}

TEST_CASE("filter_nonverbal drops marker-only and empty transcripts") {
  Utterance u;
  u.transcript = {"[laughter]"};
  CHECK_FALSE(filter_nonverbal(u));
  u.transcript = {"[laughter]", "that", "is", "great"};
  CHECK(filter_nonverbal(u));
  u.transcript = {};
  CHECK_FALSE(filter_nonverbal(u));
  u.transcript = {"[breathing]", "[laughter]"};
  CHECK_FALSE(filter_nonverbal(u));
}

TEST_CASE("generator: class counts within one utterance of the requested ratios") {
  GeneratorConfig cfg = small_config(3);
  cfg.num_dialogs = 40;
  const Corpus c = generate_synthetic_corpus(cfg);
  const auto total = static_cast<double>(c.utterances.size());
  for (int cls = 0; cls < 3; ++cls) {
    const double expected = cfg.class_ratios[static_cast<size_t>(cls)] * total;
    const auto actual =
        static_cast<double>(c.class_counts.at(static_cast<SentimentLabel>(cls)));
    CHECK(std::abs(actual - expected) <= 1.0);
  }
}

TEST_CASE("generator: deterministic for a fixed seed") {
  const GeneratorConfig cfg = small_config(11);
  const Corpus a = generate_synthetic_corpus(cfg);
  const Corpus b = generate_synthetic_corpus(cfg);
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (size_t i = 0; i < a.utterances.size(); ++i)
    CHECK(utterances_equal(a.utterances[i], b.utterances[i]));

  GeneratorConfig other = cfg;
  other.seed = 12;
  const Corpus d = generate_synthetic_corpus(other);
  REQUIRE(d.utterances.size() > 0);
  bool any_difference = d.utterances.size() != a.utterances.size();
  for (size_t i = 0; !any_difference && i < a.utterances.size(); ++i)
    any_difference = !utterances_equal(a.utterances[i], d.utterances[i]);
  CHECK(any_difference);
}

TEST_CASE("generator: degenerate ratios put everything in one class") {
  GeneratorConfig cfg = small_config(5);
  cfg.class_ratios = {1.0, 0.0, 0.0};
  const Corpus c = generate_synthetic_corpus(cfg);
  CHECK(c.class_counts.at(SentimentLabel::negative) ==
        static_cast<int64_t>(c.utterances.size()));
  CHECK(c.class_counts.at(SentimentLabel::positive) == 0);
  CHECK(c.class_counts.at(SentimentLabel::neutral) == 0);
}

TEST_CASE("generator: invalid configs are rejected") {
  GeneratorConfig cfg = small_config(1);
  cfg.class_ratios = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(generate_synthetic_corpus(cfg), std::invalid_argument);
  cfg = small_config(1);
  cfg.num_dialogs = 0;
  CHECK_THROWS_AS(generate_synthetic_corpus(cfg), std::invalid_argument);
  cfg = small_config(1);
  cfg.shared_filler_fraction = 1.5;
  CHECK_THROWS_AS(generate_synthetic_corpus(cfg), std::invalid_argument);
}

TEST_CASE("generator: per-class mean fundamentals are ordered neg < neu < pos") {
  GeneratorConfig cfg = small_config(21);
  cfg.num_dialogs = 20;
  cfg.duration_range = {0.3, 0.6};
  const Corpus c = generate_synthetic_corpus(cfg);
  std::map<SentimentLabel, std::pair<double, int>> mean_f0;
  for (const auto& u : c.utterances) {
    const double f0 = oracles::autocorr_f0(u.samples, u.sample_rate);
    auto& [sum, count] = mean_f0[*u.label];
    sum += f0;
    count += 1;
  }
  const double neg = mean_f0[SentimentLabel::negative].first /
                     mean_f0[SentimentLabel::negative].second;
  const double neu = mean_f0[SentimentLabel::neutral].first /
                     mean_f0[SentimentLabel::neutral].second;
  const double pos = mean_f0[SentimentLabel::positive].first /
                     mean_f0[SentimentLabel::positive].second;
  CHECK(neg < neu);
  CHECK(neu < pos);
}

TEST_CASE("class_counts equals a recount over labeled utterances") {
  const Corpus c = generate_synthetic_corpus(small_config(9));
  std::map<SentimentLabel, int64_t> recount;
  for (const auto& u : c.utterances)
    if (u.label) recount[*u.label] += 1;
  for (SentimentLabel l : kAllLabels) CHECK(c.class_counts.at(l) == recount[l]);
}

TEST_CASE("make_corpus rejects duplicate ids and empty dialog ids") {
  Utterance a;
  a.id = "u1";
  a.dialog_id = "d1";
  Utterance b = a;
  CHECK_THROWS_AS(make_corpus("x", {a, b}), std::invalid_argument);
  b.id = "u2";
  b.dialog_id = "";
  CHECK_THROWS_AS(make_corpus("x", {a, b}), std::invalid_argument);
}

TEST_CASE("wav round trip preserves quantized samples and rate") {
  const auto dir = temp_dir("wav");
  std::vector<double> samples;
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) samples.push_back(wav::quantize_pcm16(rng.uniform(-1.0, 1.0)));
  const std::string path = (dir / "probe.wav").string();
  wav::write_wav(path, samples, 16000);
  const auto loaded = wav::read_wav(path);
  CHECK(loaded.sample_rate == 16000);
  REQUIRE(loaded.samples.size() == samples.size());
  CHECK(loaded.samples == samples);
  CHECK_THROWS_AS(wav::read_wav((dir / "missing.wav").string()), std::runtime_error);
}

TEST_CASE("manifest round trip is the identity on the corpus") {
  const auto dir = temp_dir("roundtrip");
  GeneratorConfig cfg = small_config(17);
  Corpus original = generate_synthetic_corpus(cfg);
  // Mix in vote-labeled and unlabeled utterances to cover every encoding.
  Utterance voted;
  voted.id = "zz_voted";
  voted.dialog_id = "zzd";
  voted.sample_rate = 8000;
  voted.samples = {0.0, 0.25, -0.25, 0.5};
  voted.transcript = {"pos01", "um00"};
  voted.votes = {"positive", "positive", "neutral"};
  voted.label = resolve_majority_label(voted.votes);
  Utterance single_vote = voted;
  single_vote.id = "zz_single";
  single_vote.votes = {"negative"};
  single_vote.label = SentimentLabel::negative;
  Utterance unlabeled = voted;
  unlabeled.id = "zz_unlabeled";
  unlabeled.votes = {"positive", "negative"};
  unlabeled.label = std::nullopt;
  auto utts = original.utterances;
  utts.push_back(voted);
  utts.push_back(single_vote);
  utts.push_back(unlabeled);
  const Corpus corpus_in = make_corpus("probe", std::move(utts));

  const std::string manifest = (dir / "probe.csv").string();
  save_manifest(corpus_in, manifest);
  const Corpus loaded = load_manifest(manifest);
  REQUIRE(loaded.utterances.size() == corpus_in.utterances.size());
  for (size_t i = 0; i < loaded.utterances.size(); ++i)
    CHECK(utterances_equal(loaded.utterances[i], corpus_in.utterances[i]));
  CHECK(loaded.class_counts == corpus_in.class_counts);
}

TEST_CASE("manifest: missing audio file error names the path") {
  const auto dir = temp_dir("missing_audio");
  const Corpus c = generate_synthetic_corpus(small_config(2));
  const std::string manifest = (dir / "m.csv").string();
  save_manifest(c, manifest);
  const fs::path gone = dir / "m_audio" / (c.utterances[0].id + ".wav");
  fs::remove(gone);
  CHECK_THROWS_WITH_AS(load_manifest(manifest), doctest::Contains(c.utterances[0].id.c_str()),
                       std::runtime_error);
}

TEST_CASE("manifest: malformed row reports the row number") {
  const auto dir = temp_dir("malformed");
  const std::string manifest = (dir / "m.csv").string();
  {
    std::ofstream out(manifest);
    out << "id,dialog_id,audio_path,sample_rate,transcript,votes|label\n";
    out << "u1,d1,missing.wav\n";
  }
  CHECK_THROWS_WITH_AS(load_manifest(manifest), doctest::Contains("row 2"), std::runtime_error);
}

TEST_CASE("manifest: empty manifest loads as an empty corpus") {
  const auto dir = temp_dir("empty");
  const std::string manifest = (dir / "m.csv").string();
  {
    std::ofstream out(manifest);
    out << "id,dialog_id,audio_path,sample_rate,transcript,votes|label\n";
  }
  const Corpus c = load_manifest(manifest);
  CHECK(c.utterances.empty());
  for (SentimentLabel l : kAllLabels) CHECK(c.class_counts.at(l) == 0);
  CHECK_THROWS_AS(load_manifest((dir / "nothere.csv").string()), std::runtime_error);
}

TEST_CASE("generator config JSON round trip") {
  GeneratorConfig cfg = small_config(77);
  cfg.shared_filler_fraction = 0.25;
  const std::string text = generator_config_to_json_text(cfg);
  const GeneratorConfig parsed = generator_config_from_json_text(text);
  CHECK(parsed.seed == cfg.seed);
  CHECK(parsed.num_dialogs == cfg.num_dialogs);
  CHECK(parsed.utterances_per_dialog == cfg.utterances_per_dialog);
  CHECK(parsed.class_ratios == cfg.class_ratios);
  CHECK(parsed.sample_rate == cfg.sample_rate);
  CHECK(parsed.duration_range == cfg.duration_range);
  CHECK(parsed.vocab_size_per_class == cfg.vocab_size_per_class);
  CHECK(parsed.shared_filler_fraction == cfg.shared_filler_fraction);
  CHECK_THROWS_AS(generator_config_from_json_text("{"), std::invalid_argument);
  CHECK_THROWS_AS(generator_config_from_json_text(R"({"class_ratios": [1, 1, 1]})"),
                  std::invalid_argument);
}
