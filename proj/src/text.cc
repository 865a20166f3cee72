#include "headpop/text.h"

#include <algorithm>
#include <cstdint>

#include "headpop/error.h"

namespace headpop::text {

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point starting at s[i], advancing i. Malformed sequences
// consume one byte and yield kInvalid.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char lead = byte(i);
  std::size_t extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++i;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++i;
    return kInvalid;
  }
  if (i + extra >= s.size()) {
    ++i;
    return kInvalid;
  }
  for (std::size_t k = 1; k <= extra; ++k) {
    if ((byte(i + k) & 0xC0) != 0x80) {
      ++i;
      return kInvalid;
    }
    cp = (cp << 6) | (byte(i + k) & 0x3F);
  }
  i += extra + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Whitespace, punctuation and symbol blocks separate tokens; everything else
// (letters, digits, combining marks of any script) is token material.
bool is_token_char(char32_t cp) {
  if (cp == kInvalid) return false;
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  if (in(cp, 0x80, 0xBF)) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (in(cp, 0x2000, 0x206F)) return false;  // general punctuation, incl. dashes and quotes
  if (in(cp, 0x20A0, 0x20CF)) return false;  // currency
  if (in(cp, 0x2100, 0x2BFF)) return false;  // arrows, math, box drawing, dingbats
  if (in(cp, 0x3000, 0x303F)) return false;  // CJK punctuation
  if (in(cp, 0xFE30, 0xFE4F) || cp == 0xFEFF) return false;
  if (in(cp, 0xFF00, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) ||
      in(cp, 0xFF5B, 0xFF65)) {
    return false;
  }
  if (in(cp, 0x1F000, 0x1FAFF)) return false;  // emoji and pictographs
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp < 0xC0) return cp;
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (in(cp, 0x100, 0x137) || in(cp, 0x14A, 0x177)) return (cp % 2 == 0) ? cp + 1 : cp;
  if (in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (cp == 0x386) return 0x3AC;
  if (in(cp, 0x388, 0x38A)) return cp + 0x25;
  if (cp == 0x38C) return 0x3CC;
  if (cp == 0x38E || cp == 0x38F) return cp + 0x3F;
  if (in(cp, 0x391, 0x3A9) && cp != 0x3A2) return cp + 0x20;
  if (in(cp, 0x400, 0x40F)) return cp + 0x50;
  if (in(cp, 0x410, 0x42F)) return cp + 0x20;
  return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view title) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < title.size()) {
    const char32_t cp = next_code_point(title, i);
    if (is_token_char(cp)) {
      append_utf8(current, to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary() : Vocabulary({kPadToken, kUnkToken}, 1) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::size_t min_count)
    : tokens_(std::move(tokens)), min_count_(min_count) {
  if (tokens_.size() < 2 || tokens_[kPad] != kPadToken || tokens_[kUnk] != kUnkToken) {
    throw DataError("vocabulary must start with " + std::string(kPadToken) + ", " + kUnkToken);
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw DataError("vocabulary has duplicate token '" + tokens_[i] + "'");
    }
  }
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

nlohmann::json Vocabulary::to_json() const { return {{"tokens", tokens_}, {"min_count", min_count_}}; }

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
    throw DataError("vocabulary JSON needs a 'tokens' array");
  }
  const std::size_t min_count = j.value("min_count", std::size_t{1});
  return Vocabulary(j["tokens"].get<std::vector<std::string>>(), min_count);
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::optional<std::size_t> max_size, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : corpus)
    for (const auto& tok : doc) ++counts[tok];

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : counts) {
    if (n >= min_count && tok != kPadToken && tok != kUnkToken) ranked.emplace_back(tok, n);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (max_size && ranked.size() > *max_size) ranked.resize(*max_size);

  std::vector<std::string> tokens{kPadToken, kUnkToken};
  tokens.reserve(ranked.size() + 2);
  for (auto& [tok, n] : ranked) tokens.push_back(tok);
  return Vocabulary(std::move(tokens), min_count);
}

std::vector<std::size_t> TokenSequence::padded(std::size_t width) const {
  std::vector<std::size_t> out(width, kPad);
  std::copy_n(indices.begin(), std::min(width, indices.size()), out.begin());
  return out;
}

TokenSequence encode_tokens(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                            std::size_t max_seq_len) {
  if (max_seq_len == 0) throw ConfigError("max_seq_len must be at least 1");
  if (tokens.empty()) throw DataError("empty title: no tokens to score");
  TokenSequence seq;
  seq.length = std::min(tokens.size(), max_seq_len);
  seq.indices.reserve(seq.length);
  for (std::size_t i = 0; i < seq.length; ++i) seq.indices.push_back(vocab.index_of(tokens[i]));
  return seq;
}

TokenSequence encode(std::string_view title, const Vocabulary& vocab, std::size_t max_seq_len) {
  return encode_tokens(tokenize(title), vocab, max_seq_len);
}

std::vector<std::string> decode(const TokenSequence& seq, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(seq.length);
  for (std::size_t i = 0; i < seq.length; ++i) out.push_back(vocab.token(seq.indices.at(i)));
  return out;
}

}  // namespace headpop::text
