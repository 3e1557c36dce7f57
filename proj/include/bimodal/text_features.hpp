#pragma once

#include "bimodal/types.hpp"

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace bimodal::text_features {

inline constexpr int kEmbeddingDim = 300;

struct EmbeddingConfig {
  int max_tokens = 64;
  float pad_value = 0.0f;
};

struct EmbeddedSequence {
  MatrixF values;      // max_tokens x 300
  int true_length = 0; // rows >= true_length are padding
};

// Lowercases, splits on whitespace, strips punctuation from token edges.
// Bracketed non-verbal markers like "[laughter]" are kept whole.
std::vector<std::string> tokenize(const std::string& transcript);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual VectorF embed_token(const std::string& token) const = 0;
};

// Deterministic pseudo-random unit-norm vectors seeded by the token bytes.
// Reproducible across processes; used as the hermetic test stub and as the
// out-of-vocabulary fallback for table providers.
class HashedProvider : public EmbeddingProvider {
 public:
  VectorF embed_token(const std::string& token) const override;
};

// Exact lookup from a loaded table; unknown tokens fall back to the hashed
// provider.
class TableProvider : public EmbeddingProvider {
 public:
  VectorF embed_token(const std::string& token) const override;
  size_t vocabulary_size() const { return table_.size(); }

 private:
  friend TableProvider load_embedding_table(const std::string& path);
  std::unordered_map<std::string, VectorF> table_;
  HashedProvider fallback_;
};

// Table file: one entry per line, "token v1 v2 ... v300". Throws on
// dimension mismatch, duplicate tokens, or malformed lines, with the line
// number.
TableProvider load_embedding_table(const std::string& path);

// First max_tokens tokens embedded in order; shorter sequences padded with
// pad_value rows.
EmbeddedSequence embed(const std::vector<std::string>& tokens, const EmbeddingConfig& config,
                       const EmbeddingProvider& provider);

}  // namespace bimodal::text_features
