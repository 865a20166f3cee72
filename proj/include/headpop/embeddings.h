#ifndef HEADPOP_EMBEDDINGS_H
#define HEADPOP_EMBEDDINGS_H

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "headpop/numerics.h"
#include "headpop/text.h"

namespace headpop::embeddings {

inline constexpr double kInitRange = 0.05;

struct PretrainedVectors {
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::size_t duplicates = 0;

  bool empty() const { return vectors.empty(); }
  // Shared dimension; throws ConfigError when there are no vectors.
  std::size_t dim() const;
};

// GloVe text format: `token v1 v2 ... vd` per line, no header. When `keep`
// is given, only its tokens are retained (dimensions are still checked on
// every line).
PretrainedVectors parse_glove(std::string_view contents, const text::Vocabulary* keep = nullptr);
PretrainedVectors load_glove(const std::string& path, const text::Vocabulary* keep = nullptr);

PretrainedVectors from_map(std::unordered_map<std::string, std::vector<double>> vectors);

struct EmbeddingMatrix {
  Mat matrix;  // V x d, row = vocabulary index; PAD row is zero
  bool trainable = false;
  double coverage = 0.0;  // |vocab ∩ pretrained| / |vocab \ {PAD}|

  std::size_t dim() const { return matrix.cols(); }
  std::size_t vocab_size() const { return matrix.rows(); }
};

// Pretrained rows are copied; every other non-PAD row (UNK included) is drawn
// from uniform(-kInitRange, kInitRange) with `seed`.
EmbeddingMatrix build_matrix(const text::Vocabulary& vocab, const PretrainedVectors& pretrained,
                             std::size_t dim, std::uint64_t seed, bool trainable);

// seq.length x d rows; PAD positions are never emitted.
Mat lookup(const Mat& matrix, const text::TokenSequence& seq);
Mat lookup(const EmbeddingMatrix& emb, const text::TokenSequence& seq);

}  // namespace headpop::embeddings

#endif  // HEADPOP_EMBEDDINGS_H
