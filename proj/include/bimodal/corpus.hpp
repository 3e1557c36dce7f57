#pragma once

#include "bimodal/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bimodal::corpus {

// One dialog turn. Immutable once the owning Corpus is built.
struct Utterance {
  std::string id;
  std::string dialog_id;
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 0;
  std::vector<std::string> transcript;  // lowercased tokens
  std::vector<std::string> votes;       // raw annotator labels, may be empty
  std::optional<SentimentLabel> label;
};

struct Corpus {
  std::string name;
  std::vector<Utterance> utterances;
  std::map<SentimentLabel, int64_t> class_counts;  // over labeled utterances

  int64_t labeled_count() const;
};

// Builds a Corpus, computing class_counts and checking id uniqueness.
Corpus make_corpus(std::string name, std::vector<Utterance> utterances);

struct GeneratorConfig {
  uint64_t seed = 0;
  int num_dialogs = 200;
  std::pair<int, int> utterances_per_dialog = {5, 15};
  // Order: negative, positive, neutral. Defaults follow the SWITCHBOARD
  // counts 8549 / 15308 / 25445, so negative is the minority class.
  std::array<double, 3> class_ratios = {8549.0 / 49302.0, 15308.0 / 49302.0, 25445.0 / 49302.0};
  int sample_rate = 16000;
  std::pair<double, double> duration_range = {1.0, 2.5};
  int vocab_size_per_class = 25;
  double shared_filler_fraction = 0.3;

  void validate() const;  // throws std::invalid_argument on bad config
};

// Label with a strict majority of the votes, or nullopt when no label exceeds
// half the vote count. Unknown vote strings throw, naming the offending vote.
std::optional<SentimentLabel> resolve_majority_label(const std::vector<std::string>& votes);

// IEMOCAP-3 mapping: happy/excited -> positive, angry/sad -> negative,
// neutral -> neutral. Anything else is excluded (nullopt).
std::optional<SentimentLabel> map_iemocap_label(const std::string& raw_emotion);

// False when the transcript holds nothing but bracketed non-verbal markers
// (e.g. "[laughter]") or is empty -- such utterances are dropped.
bool filter_nonverbal(const Utterance& utterance);

// Deterministic class-conditioned synthetic corpus. Audio is a harmonic tone
// whose fundamental depends on the class (negative ~120 Hz, neutral ~220 Hz,
// positive ~330 Hz; positive additionally gets a wide-band noise burst with
// probability 0.5), plus white noise at 10 dB SNR. Transcripts draw from
// disjoint per-class vocabularies mixed with a shared filler vocabulary.
Corpus generate_synthetic_corpus(const GeneratorConfig& config);

// Manifest I/O. The manifest is a UTF-8 CSV with header
//   id,dialog_id,audio_path,sample_rate,transcript,votes|label
// and one RIFF/WAVE PCM16 file per utterance under "<stem>_audio/" next to
// the manifest. Round trips are lossless.
void save_manifest(const Corpus& corpus, const std::string& manifest_path);
Corpus load_manifest(const std::string& manifest_path);

// Generator config as a JSON document (field names match GeneratorConfig).
GeneratorConfig generator_config_from_json_text(const std::string& json_text);
std::string generator_config_to_json_text(const GeneratorConfig& config);

}  // namespace bimodal::corpus
