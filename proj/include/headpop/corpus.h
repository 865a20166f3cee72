#ifndef HEADPOP_CORPUS_H
#define HEADPOP_CORPUS_H

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace headpop::corpus {

struct Headline {
  std::string id;
  std::string title;
  double metric = 0.0;  // views, comment count, ...
  std::string group;    // publication month, publisher, ...

  friend bool operator==(const Headline&, const Headline&) = default;
};

struct LabeledExample {
  Headline headline;
  int label = 0;  // 1 = popular

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

enum class DatasetFormat { jsonl, csv };

// jsonl unless the extension is .csv.
DatasetFormat format_from_path(std::string_view path);

// JSONL: {"id", "title", "metric", "group"} per line; blank lines skipped.
// CSV: header `id,title,metric,group`, RFC 4180 quoting. Errors carry the
// 1-based line number.
std::vector<Headline> parse_dataset(std::string_view contents, DatasetFormat format);
std::vector<Headline> load_dataset(const std::string& path, DatasetFormat format);
std::vector<Headline> load_dataset(const std::string& path);

// Like load_dataset, but every record must also carry "label" in {0, 1}.
// JSONL only.
std::vector<LabeledExample> parse_labeled_jsonl(std::string_view contents);
std::vector<LabeledExample> load_labeled(const std::string& path);

// True if every non-blank JSONL record has a "label" key.
bool has_labels(std::string_view jsonl_contents);

std::string to_jsonl(const std::vector<LabeledExample>& data);
std::string to_jsonl(const std::vector<Headline>& data);

// Median of a non-empty list; mean of the middle two for even sizes.
double median(std::vector<double> values);

// label = 1 iff metric > median(metric of the same group).
std::vector<LabeledExample> label_by_group_median(const std::vector<Headline>& data);

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> assignments;  // id -> fold

  std::size_t fold_of(const std::string& id) const;
  std::vector<std::size_t> fold_sizes() const;
  // Positions into `data` of the examples held out in / kept out of `fold`.
  std::vector<std::size_t> test_positions(const std::vector<LabeledExample>& data, std::size_t fold) const;
  std::vector<std::size_t> train_positions(const std::vector<LabeledExample>& data, std::size_t fold) const;
};

// Sorts ids, Fisher-Yates shuffles them with `seed`, deals them round-robin.
FoldPlan make_folds(const std::vector<LabeledExample>& data, std::size_t k, std::uint64_t seed);

}  // namespace headpop::corpus

#endif  // HEADPOP_CORPUS_H
