#include <doctest.h>

#include "headpop/error.h"
#include "headpop/rng.h"
#include "headpop/text.h"

using namespace headpop;
using namespace headpop::text;
using Tokens = std::vector<std::string>;

TEST_CASE("tokenize lowercases and splits on punctuation") {
  CHECK(tokenize("This dancer dropped her phone") == Tokens{"this", "dancer", "dropped", "her", "phone"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Pokémon Go!") == Tokens{"pokémon", "go"});
  CHECK(tokenize("   ...!!  ").empty());
  CHECK(tokenize("ÉCOLE d'été") == Tokens{"école", "d", "été"});
  CHECK(tokenize("НОВОСТИ дня") == Tokens{"новости", "дня"});
  CHECK(tokenize("play \u2018Pok\u00e9mon Go\u2019 \u2014 and") == Tokens{"play", "pokémon", "go", "and"});
  CHECK(tokenize("2016 rio") == Tokens{"2016", "rio"});
}

TEST_CASE("tokenize survives invalid UTF-8") {
  const std::string bad = std::string("ok ") + '\xff' + "fine" + '\xc3';
  const Tokens t = tokenize(bad);
  REQUIRE(!t.empty());
  CHECK(t.front() == "ok");
}

TEST_CASE("build_vocab orders by count then token") {
  const Vocabulary v = build_vocab({{"a", "b", "a"}});
  CHECK(v.tokens() == Tokens{kPadToken, kUnkToken, "a", "b"});
  CHECK(build_vocab({{"a", "b"}}, std::nullopt, 2).tokens() == Tokens{kPadToken, kUnkToken});
  const Vocabulary ties = build_vocab({{"y", "x", "y", "x", "x", "y"}});
  CHECK(ties.token(2) == "x");
  CHECK(ties.token(3) == "y");
}

TEST_CASE("build_vocab max_size caps regular tokens") {
  const Vocabulary v = build_vocab({{"a", "a", "b", "c", "c", "c"}}, 2);
  CHECK(v.tokens() == Tokens{kPadToken, kUnkToken, "c", "a"});
}

TEST_CASE("vocabulary rejects malformed token lists") {
  CHECK_THROWS_AS(Vocabulary({"a", "b"}, 1), DataError);
  CHECK_THROWS_AS(Vocabulary({kPadToken, kUnkToken, "a", "a"}, 1), DataError);
}

TEST_CASE("vocabulary json round-trip") {
  const Vocabulary v = build_vocab({{"hello", "world", "hello"}});
  CHECK(Vocabulary::from_json(v.to_json()) == v);
}

TEST_CASE("encode maps known tokens, UNK and truncation") {
  const Vocabulary v({kPadToken, kUnkToken, "a", "b"}, 1);
  const TokenSequence s = encode("a b", v, 20);
  CHECK(s.indices == std::vector<std::size_t>{2, 3});
  CHECK(s.length == 2);
  CHECK(encode("a zzz", v, 20).indices == std::vector<std::size_t>{2, kUnk});

  std::string long_title;
  for (int i = 0; i < 25; ++i) long_title += (i % 2 ? "a " : "b ");
  const TokenSequence t = encode(long_title, v, 20);
  CHECK(t.length == 20);
  CHECK(t.indices.front() == 3);
  CHECK(t.indices.size() == 20);
  CHECK(t.padded(22).back() == kPad);
  CHECK(t.padded(22).size() == 22);
}

TEST_CASE("encode rejects unscorable titles and zero width") {
  const Vocabulary v;
  CHECK_THROWS_AS(encode("", v), DataError);
  CHECK_THROWS_AS(encode("?!", v), DataError);
  CHECK_THROWS_AS(encode("a", v, 0), ConfigError);
}

TEST_CASE("decode round-trips in-vocabulary tokens (property)") {
  Rng rng(5);
  const Tokens words{"alpha", "beta", "gamma", "delta", "epsilon"};
  const Vocabulary v = build_vocab({words});
  for (int trial = 0; trial < 100; ++trial) {
    std::string title;
    Tokens expected;
    const std::size_t n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& w = words[rng.below(words.size())];
      expected.push_back(w);
      std::string shown = w;
      if (rng.bernoulli(0.5)) shown[0] = static_cast<char>(shown[0] - 'a' + 'A');
      title += shown + (rng.bernoulli(0.3) ? ", " : " ");
    }
    const TokenSequence s = encode(title, v, 30);
    CHECK(decode(s, v) == expected);
    CHECK(encode(title, v, 30) == s);
    for (std::size_t i = 0; i < s.length; ++i) CHECK(s.indices[i] != kPad);
  }
}
