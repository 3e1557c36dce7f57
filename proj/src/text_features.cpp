#include "bimodal/text_features.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bimodal::text_features {

std::vector<std::string> tokenize(const std::string& transcript) {
  std::vector<std::string> tokens;
  std::string chunk;
  std::istringstream stream(transcript);
  while (stream >> chunk) {
    std::string lowered;
    lowered.reserve(chunk.size());
    for (char ch : chunk)
      lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (lowered.size() >= 2 && lowered.front() == '[' && lowered.back() == ']') {
      tokens.push_back(std::move(lowered));
      continue;
    }
    size_t begin = 0, end = lowered.size();
    while (begin < end && std::ispunct(static_cast<unsigned char>(lowered[begin]))) ++begin;
    while (end > begin && std::ispunct(static_cast<unsigned char>(lowered[end - 1]))) --end;
    if (end > begin) tokens.push_back(lowered.substr(begin, end - begin));
  }
  return tokens;
}

VectorF HashedProvider::embed_token(const std::string& token) const {
  // FNV-1a over the token bytes seeds the per-token stream.
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : token) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  Rng rng(h);
  VectorF v(kEmbeddingDim);
  for (int i = 0; i < kEmbeddingDim; ++i) v(i) = static_cast<float>(rng.uniform(-1.0, 1.0));
  const float norm = v.norm();
  return v / (norm > 0.0f ? norm : 1.0f);
}

VectorF TableProvider::embed_token(const std::string& token) const {
  const auto it = table_.find(token);
  if (it != table_.end()) return it->second;
  return fallback_.embed_token(token);
}

TableProvider load_embedding_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_embedding_table: cannot open '" + path + "'");
  TableProvider provider;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream stream(line);
    std::string token;
    if (!(stream >> token))
      throw std::runtime_error("load_embedding_table: line " + std::to_string(line_no) +
                               ": malformed entry");
    VectorF v(kEmbeddingDim);
    int dim = 0;
    double value;
    while (stream >> value) {
      if (dim < kEmbeddingDim) v(dim) = static_cast<float>(value);
      ++dim;
    }
    if (!stream.eof())
      throw std::runtime_error("load_embedding_table: line " + std::to_string(line_no) +
                               ": non-numeric value");
    if (dim != kEmbeddingDim)
      throw std::runtime_error("load_embedding_table: line " + std::to_string(line_no) +
                               ": expected " + std::to_string(kEmbeddingDim) +
                               " values, got " + std::to_string(dim));
    if (!provider.table_.emplace(token, std::move(v)).second)
      throw std::runtime_error("load_embedding_table: line " + std::to_string(line_no) +
                               ": duplicate token '" + token + "'");
  }
  return provider;
}

EmbeddedSequence embed(const std::vector<std::string>& tokens, const EmbeddingConfig& config,
                       const EmbeddingProvider& provider) {
  if (config.max_tokens <= 0) throw std::invalid_argument("embed: max_tokens must be positive");
  EmbeddedSequence seq;
  seq.values = MatrixF::Constant(config.max_tokens, kEmbeddingDim, config.pad_value);
  seq.true_length = static_cast<int>(std::min<size_t>(tokens.size(),
                                                      static_cast<size_t>(config.max_tokens)));
  for (int i = 0; i < seq.true_length; ++i)
    seq.values.row(i) = provider.embed_token(tokens[static_cast<size_t>(i)]).transpose();
  return seq;
}

}  // namespace bimodal::text_features
