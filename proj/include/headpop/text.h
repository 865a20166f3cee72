#ifndef HEADPOP_TEXT_H
#define HEADPOP_TEXT_H

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace headpop::text {

inline constexpr std::size_t kPad = 0;
inline constexpr std::size_t kUnk = 1;
inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";
inline constexpr std::size_t kDefaultMaxSeqLen = 30;

// Lowercases and splits on whitespace and punctuation. Letters, digits and
// marks from any script stay inside tokens; punctuation runs are dropped.
std::vector<std::string> tokenize(std::string_view title);

class Vocabulary {
 public:
  // PAD and UNK only.
  Vocabulary();

  // `tokens` must start with PAD, UNK and contain no duplicates.
  Vocabulary(std::vector<std::string> tokens, std::size_t min_count);

  std::size_t size() const { return tokens_.size(); }
  std::size_t min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }

  // UNK for unknown tokens.
  std::size_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.min_count_ == b.min_count_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t min_count_ = 1;
};

// Ranks tokens by (count desc, token asc). `max_size` caps the number of
// regular tokens; PAD and UNK are always added on top.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::optional<std::size_t> max_size = std::nullopt, std::size_t min_count = 1);

struct TokenSequence {
  std::vector<std::size_t> indices;  // exactly `length` entries, never PAD
  std::size_t length = 0;

  // Right-padded copy with PAD up to `width` (truncating if longer).
  std::vector<std::size_t> padded(std::size_t width) const;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Throws DataError if the title has no tokens; keeps the first max_seq_len.
TokenSequence encode(std::string_view title, const Vocabulary& vocab,
                     std::size_t max_seq_len = kDefaultMaxSeqLen);
TokenSequence encode_tokens(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                            std::size_t max_seq_len = kDefaultMaxSeqLen);

std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab);

}  // namespace headpop::text

#endif  // HEADPOP_TEXT_H
