#include "headpop/synthetic.h"

#include <algorithm>
#include <cmath>

#include "headpop/error.h"
#include "headpop/rng.h"

namespace headpop::synthetic {

namespace {

using corpus::LabeledExample;

std::vector<std::string> fillers(Rng& rng, std::size_t count) {
  const auto& words = filler_words();
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(words[rng.below(words.size())]);
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::size_t draw_length(Rng& rng, const Options& opts) {
  if (opts.min_words < 3 || opts.max_words < opts.min_words) {
    throw ConfigError("synthetic titles need 3 <= min_words <= max_words");
  }
  return opts.min_words + rng.below(opts.max_words - opts.min_words + 1);
}

// Balanced labels in shuffled order, then a title per label from `make`.
template <class Make>
std::vector<LabeledExample> generate(std::size_t n, std::uint64_t seed, const Options& opts,
                                     const char* prefix, Make&& make) {
  Rng rng(seed);
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n / 2; ++i) labels[i] = 1;
  rng.shuffle(labels);

  std::vector<LabeledExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.label = labels[i];
    ex.headline.id = std::string(prefix) + std::to_string(i);
    ex.headline.title = make(rng, ex.label);
    ex.headline.metric = ex.label ? std::floor(rng.uniform(10001.0, 20000.0))
                                  : std::floor(rng.uniform(100.0, 9999.0));
    ex.headline.group = opts.group;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words{
      "the",     "a",       "new",     "city",    "man",      "woman",   "police",  "report",
      "after",   "before",  "says",    "first",   "year",     "world",   "news",    "people",
      "school",  "house",   "family",  "game",    "team",     "court",   "plan",    "state",
      "local",   "market",  "water",   "road",    "night",    "morning", "story",   "life",
      "home",    "car",     "dog",     "children", "leaders", "vote",    "health",  "study",
      "weather", "fire",    "music",   "film",    "star",     "deal",    "money",   "price",
      "week",    "talks",   "council", "country", "election", "hospital", "doctor", "airport",
      "train",   "bridge",  "park",    "beach",   "storm",    "festival", "museum", "mayor",
  };
  return words;
}

std::vector<std::string> lexicon_words(std::size_t lexicon_size) {
  static const std::vector<std::string> base{
      "amazing",  "shocking",  "incredible", "heartwarming", "hilarious", "stunning",
      "viral",    "epic",      "adorable",   "unbelievable", "insane",    "brilliant",
      "wild",     "emotional", "terrifying", "genius",       "bizarre",   "powerful",
      "secret",   "miracle",   "dramatic",   "outrageous",   "spectacular", "jaw",
  };
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lexicon_size; ++i) {
    out.push_back(i < base.size() ? base[i] : "cue" + std::to_string(i));
  }
  return out;
}

std::vector<LabeledExample> marker_corpus(std::size_t n, std::uint64_t seed, const Options& opts) {
  return generate(n, seed, opts, "m", [&](Rng& rng, int label) {
    std::vector<std::string> words = fillers(rng, draw_length(rng, opts));
    if (label) words[rng.below(words.size())] = kMarker;
    return join(words);
  });
}

std::vector<LabeledExample> order_corpus(std::size_t n, std::uint64_t seed, const Options& opts) {
  return generate(n, seed, opts, "o", [&](Rng& rng, int label) {
    std::vector<std::string> words = fillers(rng, draw_length(rng, opts));
    std::size_t a = rng.below(words.size());
    std::size_t b = rng.below(words.size() - 1);
    if (b >= a) ++b;
    if (a > b) std::swap(a, b);
    words[a] = label ? kLeadMarker : kTrailMarker;
    words[b] = label ? kTrailMarker : kLeadMarker;
    return join(words);
  });
}

std::vector<LabeledExample> lexicon_corpus(std::size_t n, std::uint64_t seed, std::size_t lexicon_size,
                                           const Options& opts) {
  if (lexicon_size == 0) throw ConfigError("lexicon_size must be positive");
  const std::vector<std::string> cues = lexicon_words(lexicon_size);
  return generate(n, seed, opts, "x", [&](Rng& rng, int label) {
    std::vector<std::string> words = fillers(rng, draw_length(rng, opts));
    if (label) words[rng.below(words.size())] = cues[rng.below(cues.size())];
    return join(words);
  });
}

std::unordered_map<std::string, std::vector<double>> lexicon_vectors(std::size_t lexicon_size,
                                                                     std::size_t dim,
                                                                     std::uint64_t seed, double noise) {
  if (dim < 2) throw ConfigError("lexicon vectors need dim >= 2");
  if (!(noise >= 0.0)) throw ConfigError("lexicon vector noise must be non-negative");
  Rng rng(seed);
  std::unordered_map<std::string, std::vector<double>> out;
  const auto add = [&](const std::string& word, double cue) {
    std::vector<double> v(dim);
    v[0] = cue;
    for (std::size_t i = 1; i < dim; ++i) v[i] = rng.uniform(-noise, noise);
    out[word] = std::move(v);
  };
  for (const auto& w : lexicon_words(lexicon_size)) add(w, 1.0);
  for (const auto& w : filler_words()) add(w, 0.0);
  return out;
}

}  // namespace headpop::synthetic
