#include "bimodal/corpus.hpp"

#include "bimodal/wav.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;
using nlohmann::json;

namespace bimodal::corpus {

int64_t Corpus::labeled_count() const {
  int64_t n = 0;
  for (const auto& [label, count] : class_counts) {
    (void)label;
    n += count;
  }
  return n;
}

Corpus make_corpus(std::string name, std::vector<Utterance> utterances) {
  Corpus c;
  c.name = std::move(name);
  c.utterances = std::move(utterances);
  std::set<std::string> ids;
  for (const auto& u : c.utterances) {
    if (!ids.insert(u.id).second)
      throw std::invalid_argument("make_corpus: duplicate utterance id '" + u.id + "'");
    if (u.dialog_id.empty())
      throw std::invalid_argument("make_corpus: empty dialog_id for utterance '" + u.id + "'");
    if (u.label) c.class_counts[*u.label] += 1;
  }
  for (SentimentLabel l : kAllLabels) c.class_counts.try_emplace(l, 0);
  return c;
}

void GeneratorConfig::validate() const {
  const double sum = class_ratios[0] + class_ratios[1] + class_ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("GeneratorConfig: class_ratios must sum to 1");
  for (double r : class_ratios)
    if (r < 0.0) throw std::invalid_argument("GeneratorConfig: class_ratios must be non-negative");
  if (num_dialogs <= 0) throw std::invalid_argument("GeneratorConfig: num_dialogs must be positive");
  if (utterances_per_dialog.first <= 0 || utterances_per_dialog.second < utterances_per_dialog.first)
    throw std::invalid_argument("GeneratorConfig: bad utterances_per_dialog range");
  if (sample_rate <= 0) throw std::invalid_argument("GeneratorConfig: sample_rate must be positive");
  if (duration_range.first <= 0.0 || duration_range.second < duration_range.first)
    throw std::invalid_argument("GeneratorConfig: bad duration_range");
  if (vocab_size_per_class <= 0)
    throw std::invalid_argument("GeneratorConfig: vocab_size_per_class must be positive");
  if (shared_filler_fraction < 0.0 || shared_filler_fraction > 1.0)
    throw std::invalid_argument("GeneratorConfig: shared_filler_fraction must be in [0,1]");
}

std::optional<SentimentLabel> resolve_majority_label(const std::vector<std::string>& votes) {
  if (votes.empty()) throw std::invalid_argument("resolve_majority_label: no votes");
  std::array<int, kNumClasses> counts = {0, 0, 0};
  for (const auto& v : votes) {
    const auto label = parse_label(v);
    if (!label)
      throw std::invalid_argument("resolve_majority_label: unknown vote '" + v + "'");
    counts[static_cast<int>(*label)] += 1;
  }
  const int n = static_cast<int>(votes.size());
  for (SentimentLabel l : kAllLabels) {
    if (2 * counts[static_cast<int>(l)] > n) return l;  // strict majority
  }
  return std::nullopt;
}

std::optional<SentimentLabel> map_iemocap_label(const std::string& raw_emotion) {
  if (raw_emotion == "happy" || raw_emotion == "excited") return SentimentLabel::positive;
  if (raw_emotion == "angry" || raw_emotion == "sad") return SentimentLabel::negative;
  if (raw_emotion == "neutral") return SentimentLabel::neutral;
  return std::nullopt;
}

bool filter_nonverbal(const Utterance& utterance) {
  for (const auto& token : utterance.transcript) {
    const bool bracketed =
        token.size() >= 2 && token.front() == '[' && token.back() == ']';
    if (!bracketed) return true;
  }
  return false;  // empty or all-bracketed transcripts are dropped
}

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Largest-remainder rounding of ratios * total; counts stay within one
// utterance of the exact proportions.
std::array<int64_t, 3> apportion(const std::array<double, 3>& ratios, int64_t total) {
  std::array<int64_t, 3> counts{};
  std::array<double, 3> remainders{};
  int64_t assigned = 0;
  for (int c = 0; c < 3; ++c) {
    const double exact = ratios[c] * static_cast<double>(total);
    counts[c] = static_cast<int64_t>(std::floor(exact));
    remainders[c] = exact - std::floor(exact);
    assigned += counts[c];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
    return a < b;
  });
  for (int i = 0; assigned < total; ++i, ++assigned) counts[order[i % 3]] += 1;
  return counts;
}

std::vector<double> synthesize_audio(SentimentLabel label, double duration, int rate, Rng& rng) {
  const double base_f0 = label == SentimentLabel::negative   ? 120.0
                         : label == SentimentLabel::neutral ? 220.0
                                                            : 330.0;
  const double f0 = base_f0 * (1.0 + rng.uniform(-0.05, 0.05));
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  const auto n = static_cast<int64_t>(std::llround(duration * rate));
  std::vector<double> x(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double w = 2.0 * kPi * f0 * t + phase;
    x[i] = 0.55 * std::sin(w) + 0.22 * std::sin(2.0 * w) + 0.09 * std::sin(3.0 * w);
  }
  if (label == SentimentLabel::positive && rng.bernoulli(0.5)) {
    // Short wide-band "laugh" burst at a random position.
    const auto burst_len = std::min<int64_t>(n, std::llround(0.1 * rate));
    const int64_t start = burst_len >= n ? 0 : rng.uniform_int(0, n - burst_len);
    for (int64_t i = start; i < start + burst_len; ++i)
      x[i] += 0.35 * rng.uniform(-1.0, 1.0);
  }
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(n);
  const double noise_sigma = std::sqrt(power / 10.0);  // SNR 10 dB
  for (auto& v : x) {
    v += noise_sigma * rng.normal();
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    v = wav::quantize_pcm16(v);  // on-grid so manifest round trips exactly
  }
  return x;
}

std::vector<std::string> synthesize_transcript(SentimentLabel label,
                                               const GeneratorConfig& cfg, Rng& rng) {
  static const std::array<const char*, 3> prefixes = {"neg", "pos", "neu"};
  const int num_tokens = static_cast<int>(rng.uniform_int(4, 10));
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<size_t>(num_tokens));
  char buf[32];
  for (int i = 0; i < num_tokens; ++i) {
    if (rng.bernoulli(cfg.shared_filler_fraction)) {
      std::snprintf(buf, sizeof(buf), "um%02d",
                    static_cast<int>(rng.uniform_int(0, cfg.vocab_size_per_class - 1)));
    } else {
      std::snprintf(buf, sizeof(buf), "%s%02d", prefixes[static_cast<int>(label)],
                    static_cast<int>(rng.uniform_int(0, cfg.vocab_size_per_class - 1)));
    }
    tokens.emplace_back(buf);
  }
  return tokens;
}

}  // namespace

Corpus generate_synthetic_corpus(const GeneratorConfig& config) {
  config.validate();
  Rng rng(config.seed);

  std::vector<int> dialog_sizes(static_cast<size_t>(config.num_dialogs));
  int64_t total = 0;
  for (auto& size : dialog_sizes) {
    size = static_cast<int>(rng.uniform_int(config.utterances_per_dialog.first,
                                            config.utterances_per_dialog.second));
    total += size;
  }

  // Deal out the exact class quota in shuffled order so labels vary freely
  // within dialogs while global counts track the ratios.
  const auto quota = apportion(config.class_ratios, total);
  std::vector<SentimentLabel> labels;
  labels.reserve(static_cast<size_t>(total));
  for (int c = 0; c < 3; ++c)
    labels.insert(labels.end(), static_cast<size_t>(quota[c]),
                  static_cast<SentimentLabel>(c));
  rng.shuffle(labels.begin(), labels.end());

  std::vector<Utterance> utterances;
  utterances.reserve(static_cast<size_t>(total));
  char idbuf[48];
  size_t next = 0;
  for (int d = 0; d < config.num_dialogs; ++d) {
    std::snprintf(idbuf, sizeof(idbuf), "d%04d", d);
    const std::string dialog_id = idbuf;
    for (int u = 0; u < dialog_sizes[static_cast<size_t>(d)]; ++u) {
      const SentimentLabel label = labels[next++];
      Utterance utt;
      std::snprintf(idbuf, sizeof(idbuf), "%s_u%03d", dialog_id.c_str(), u);
      utt.id = idbuf;
      utt.dialog_id = dialog_id;
      utt.sample_rate = config.sample_rate;
      const double duration = rng.uniform(config.duration_range.first, config.duration_range.second);
      utt.samples = synthesize_audio(label, duration, config.sample_rate, rng);
      utt.transcript = synthesize_transcript(label, config, rng);
      utt.label = label;
      utterances.push_back(std::move(utt));
    }
  }
  return make_corpus("synthetic", std::move(utterances));
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += "\"";
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<std::string> split_tokens(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == sep) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// The votes|label column stores either the raw votes joined by ';' (a single
// vote keeps a trailing ';' so it stays distinguishable from a direct label),
// a bare label name for generator-assigned labels, or nothing.
std::string encode_votes_or_label(const Utterance& u) {
  if (!u.votes.empty()) {
    std::string out;
    for (const auto& v : u.votes) {
      out += v;
      out += ';';
    }
    if (u.votes.size() > 1) out.pop_back();
    return out;
  }
  if (u.label) return std::string(label_name(*u.label));
  return "";
}

void decode_votes_or_label(const std::string& field, Utterance& u, size_t row) {
  if (field.empty()) return;
  if (field.find(';') != std::string::npos) {
    u.votes = split_tokens(field, ';');
    u.label = resolve_majority_label(u.votes);
    return;
  }
  const auto label = parse_label(field);
  if (!label)
    throw std::runtime_error("load_manifest: row " + std::to_string(row) +
                             ": unknown label '" + field + "'");
  u.label = label;
}

}  // namespace

void save_manifest(const Corpus& corpus, const std::string& manifest_path) {
  const fs::path manifest(manifest_path);
  const fs::path base = manifest.parent_path();
  const std::string audio_dir_name = manifest.stem().string() + "_audio";
  const fs::path audio_dir = base / audio_dir_name;
  std::error_code ec;
  fs::create_directories(audio_dir, ec);
  if (ec) throw std::runtime_error("save_manifest: cannot create '" + audio_dir.string() + "'");

  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_manifest: cannot open '" + manifest_path + "'");
  out << "id,dialog_id,audio_path,sample_rate,transcript,votes|label\n";
  for (const auto& u : corpus.utterances) {
    const std::string rel_audio = audio_dir_name + "/" + u.id + ".wav";
    wav::write_wav((base / rel_audio).string(), u.samples, u.sample_rate);
    std::string transcript;
    for (size_t i = 0; i < u.transcript.size(); ++i) {
      if (i) transcript += ' ';
      transcript += u.transcript[i];
    }
    out << csv_escape(u.id) << ',' << csv_escape(u.dialog_id) << ',' << csv_escape(rel_audio)
        << ',' << u.sample_rate << ',' << csv_escape(transcript) << ','
        << csv_escape(encode_votes_or_label(u)) << '\n';
  }
  if (!out) throw std::runtime_error("save_manifest: write failed for '" + manifest_path + "'");
}

Corpus load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("load_manifest: cannot open '" + manifest_path + "'");
  const fs::path base = fs::path(manifest_path).parent_path();

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_manifest: '" + manifest_path + "' is empty (no header)");

  std::vector<Utterance> utterances;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = csv_split(line);
    if (fields.size() != 6)
      throw std::runtime_error("load_manifest: row " + std::to_string(row) +
                               ": expected 6 fields, got " + std::to_string(fields.size()));
    Utterance u;
    u.id = fields[0];
    u.dialog_id = fields[1];
    try {
      u.sample_rate = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw std::runtime_error("load_manifest: row " + std::to_string(row) +
                               ": bad sample_rate '" + fields[3] + "'");
    }
    const fs::path audio_path = base / fields[2];
    if (!fs::exists(audio_path))
      throw std::runtime_error("load_manifest: row " + std::to_string(row) +
                               ": missing audio file '" + audio_path.string() + "'");
    const auto audio = wav::read_wav(audio_path.string());
    if (audio.sample_rate != u.sample_rate)
      throw std::runtime_error("load_manifest: row " + std::to_string(row) +
                               ": sample_rate mismatch for '" + u.id + "'");
    u.samples = audio.samples;
    u.transcript = split_tokens(fields[4], ' ');
    decode_votes_or_label(fields[5], u, row);
    utterances.push_back(std::move(u));
  }
  return make_corpus(fs::path(manifest_path).stem().string(), std::move(utterances));
}

GeneratorConfig generator_config_from_json_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("generator config: invalid JSON: ") + e.what());
  }
  GeneratorConfig cfg;
  try {
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("num_dialogs")) cfg.num_dialogs = j.at("num_dialogs").get<int>();
    if (j.contains("utterances_per_dialog")) {
      const auto& r = j.at("utterances_per_dialog");
      cfg.utterances_per_dialog = {r.at(0).get<int>(), r.at(1).get<int>()};
    }
    if (j.contains("class_ratios")) {
      const auto& r = j.at("class_ratios");
      cfg.class_ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    }
    if (j.contains("sample_rate")) cfg.sample_rate = j.at("sample_rate").get<int>();
    if (j.contains("duration_range")) {
      const auto& r = j.at("duration_range");
      cfg.duration_range = {r.at(0).get<double>(), r.at(1).get<double>()};
    }
    if (j.contains("vocab_size_per_class"))
      cfg.vocab_size_per_class = j.at("vocab_size_per_class").get<int>();
    if (j.contains("shared_filler_fraction"))
      cfg.shared_filler_fraction = j.at("shared_filler_fraction").get<double>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("generator config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string generator_config_to_json_text(const GeneratorConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["num_dialogs"] = cfg.num_dialogs;
  j["utterances_per_dialog"] = {cfg.utterances_per_dialog.first, cfg.utterances_per_dialog.second};
  j["class_ratios"] = {cfg.class_ratios[0], cfg.class_ratios[1], cfg.class_ratios[2]};
  j["sample_rate"] = cfg.sample_rate;
  j["duration_range"] = {cfg.duration_range.first, cfg.duration_range.second};
  j["vocab_size_per_class"] = cfg.vocab_size_per_class;
  j["shared_filler_fraction"] = cfg.shared_filler_fraction;
  return j.dump(2);
}

}  // namespace bimodal::corpus
