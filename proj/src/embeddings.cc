#include "headpop/embeddings.h"

#include <charconv>
#include <cmath>

#include "headpop/error.h"
#include "headpop/io.h"
#include "headpop/rng.h"

namespace headpop::embeddings {

std::size_t PretrainedVectors::dim() const {
  if (vectors.empty()) throw ConfigError("pretrained vectors are empty; dimension is undefined");
  return vectors.begin()->second.size();
}

PretrainedVectors parse_glove(std::string_view contents, const text::Vocabulary* keep) {
  PretrainedVectors out;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::vector<double> values;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::size_t cur = 0;
    const auto next_field = [&]() -> std::string_view {
      while (cur < line.size() && (line[cur] == ' ' || line[cur] == '\t')) ++cur;
      const std::size_t start = cur;
      while (cur < line.size() && line[cur] != ' ' && line[cur] != '\t') ++cur;
      return line.substr(start, cur - start);
    };

    std::string_view token = next_field();
    if (token.empty()) continue;
    values.clear();
    for (std::string_view f = next_field(); !f.empty(); f = next_field()) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw DataError("non-numeric vector component '" + std::string(f) + "'", line_no);
      }
      values.push_back(v);
    }
    if (values.empty()) throw DataError("token without vector components", line_no);
    if (dim == 0) {
      dim = values.size();
    } else if (values.size() != dim) {
      throw DataError("dim mismatch at line " + std::to_string(line_no) + ": expected " +
                          std::to_string(dim) + " components, got " + std::to_string(values.size()),
                      line_no);
    }
    if (keep && !keep->contains(token)) continue;
    auto [it, inserted] = out.vectors.try_emplace(std::string(token), values);
    if (!inserted) {
      it->second = values;
      ++out.duplicates;
    }
  }
  return out;
}

PretrainedVectors load_glove(const std::string& path, const text::Vocabulary* keep) {
  return parse_glove(io::read_file(path), keep);
}

PretrainedVectors from_map(std::unordered_map<std::string, std::vector<double>> vectors) {
  PretrainedVectors out;
  out.vectors = std::move(vectors);
  if (!out.vectors.empty()) {
    const std::size_t d = out.vectors.begin()->second.size();
    for (const auto& [tok, v] : out.vectors) {
      if (v.size() != d) throw DataError("pretrained vector for '" + tok + "' has inconsistent dimension");
    }
  }
  return out;
}

EmbeddingMatrix build_matrix(const text::Vocabulary& vocab, const PretrainedVectors& pretrained,
                             std::size_t dim, std::uint64_t seed, bool trainable) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  if (!pretrained.empty() && pretrained.dim() != dim) {
    throw ConfigError("pretrained vectors have dimension " + std::to_string(pretrained.dim()) +
                      ", expected " + std::to_string(dim));
  }
  EmbeddingMatrix emb;
  emb.matrix = Mat(vocab.size(), dim);
  emb.trainable = trainable;
  Rng rng(seed);
  std::size_t found = 0;
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    if (v == text::kPad) continue;
    auto row = emb.matrix.row(v);
    auto it = pretrained.vectors.find(vocab.token(v));
    if (it != pretrained.vectors.end()) {
      std::copy(it->second.begin(), it->second.end(), row.begin());
      ++found;
    } else {
      for (double& x : row) x = rng.uniform(-kInitRange, kInitRange);
    }
  }
  emb.coverage = static_cast<double>(found) / static_cast<double>(vocab.size() - 1);
  return emb;
}

Mat lookup(const Mat& matrix, const text::TokenSequence& seq) {
  if (seq.length == 0) throw DataError("lookup of an empty sequence");
  Mat out(seq.length, matrix.cols());
  for (std::size_t t = 0; t < seq.length; ++t) {
    const std::size_t idx = seq.indices.at(t);
    if (idx >= matrix.rows()) throw ShapeError("token index " + std::to_string(idx) + " out of range");
    auto src = matrix.row(idx);
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

Mat lookup(const EmbeddingMatrix& emb, const text::TokenSequence& seq) { return lookup(emb.matrix, seq); }

}  // namespace headpop::embeddings
