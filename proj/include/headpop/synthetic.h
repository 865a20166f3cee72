#ifndef HEADPOP_SYNTHETIC_H
#define HEADPOP_SYNTHETIC_H

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "headpop/corpus.h"

// Generators for labeled headline corpora with a known decision rule. Every
// generator returns exactly floor(n/2) popular examples in shuffled order,
// with metrics on either side of 10000 so a single-group median split
// reproduces the labels when n is even.
namespace headpop::synthetic {

inline constexpr const char* kMarker = "viral";
inline constexpr const char* kLeadMarker = "exclusive";
inline constexpr const char* kTrailMarker = "footage";

struct Options {
  std::size_t min_words = 5;
  std::size_t max_words = 10;
  std::string group = "synthetic";
};

// Popular iff the title contains kMarker.
std::vector<corpus::LabeledExample> marker_corpus(std::size_t n, std::uint64_t seed,
                                                  const Options& opts = {});

// Every title contains kLeadMarker and kTrailMarker exactly once; popular iff
// kLeadMarker comes first. Bags of words are identically distributed across
// the two classes.
std::vector<corpus::LabeledExample> order_corpus(std::size_t n, std::uint64_t seed,
                                                 const Options& opts = {});

// Popular iff the title contains one of `lexicon_size` cue words.
std::vector<corpus::LabeledExample> lexicon_corpus(std::size_t n, std::uint64_t seed,
                                                   std::size_t lexicon_size = 24,
                                                   const Options& opts = {});

std::vector<std::string> lexicon_words(std::size_t lexicon_size);
const std::vector<std::string>& filler_words();

// Word vectors in which every cue word shares a common direction (component 0
// = 1) and filler words do not (component 0 = 0); the remaining components
// are seeded noise in [-noise, noise].
std::unordered_map<std::string, std::vector<double>> lexicon_vectors(std::size_t lexicon_size,
                                                                     std::size_t dim,
                                                                     std::uint64_t seed,
                                                                     double noise = 0.1);

}  // namespace headpop::synthetic

#endif  // HEADPOP_SYNTHETIC_H
