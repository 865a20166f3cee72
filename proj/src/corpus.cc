#include "headpop/corpus.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "headpop/error.h"
#include "headpop/io.h"
#include "headpop/rng.h"

namespace headpop::corpus {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

void validate(const Headline& h, std::size_t line) {
  if (h.id.empty()) throw DataError("empty id", line);
  if (trim(h.title).empty()) throw DataError("empty title for id '" + h.id + "'", line);
  if (!std::isfinite(h.metric) || h.metric < 0.0) {
    throw DataError("metric must be a finite non-negative number for id '" + h.id + "'", line);
  }
  if (h.group.empty()) throw DataError("empty group for id '" + h.id + "'", line);
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  if (!obj.contains(key)) throw DataError(std::string("missing field '") + key + "'", line);
  const json& v = obj[key];
  if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string", line);
  return v.get<std::string>();
}

Headline headline_from_json(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw DataError("record is not a JSON object", line);
  Headline h;
  h.id = require_string(obj, "id", line);
  h.title = require_string(obj, "title", line);
  h.group = require_string(obj, "group", line);
  if (!obj.contains("metric")) throw DataError("missing field 'metric'", line);
  if (!obj["metric"].is_number()) throw DataError("field 'metric' must be a number", line);
  h.metric = obj["metric"].get<double>();
  validate(h, line);
  return h;
}

template <class F>
void for_each_jsonl_record(std::string_view contents, F&& f) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw DataError("malformed JSON", line_no);
    f(obj, line_no);
  }
}

void check_unique(const std::string& id, std::unordered_set<std::string>& seen, std::size_t line) {
  if (!seen.insert(id).second) throw DataError("duplicate id '" + id + "'", line);
}

std::vector<Headline> parse_jsonl(std::string_view contents) {
  std::vector<Headline> out;
  std::unordered_set<std::string> seen;
  for_each_jsonl_record(contents, [&](const json& obj, std::size_t line) {
    Headline h = headline_from_json(obj, line);
    check_unique(h.id, seen, line);
    out.push_back(std::move(h));
  });
  return out;
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<CsvRecord> split_csv(std::string_view s) {
  std::vector<CsvRecord> records;
  CsvRecord rec;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  rec.line = 1;

  const auto end_record = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    const bool blank = rec.fields.size() == 1 && rec.fields[0].empty() && !field_started;
    if (!blank) records.push_back(std::move(rec));
    rec = CsvRecord{};
    field_started = false;
  };

  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        rec.fields.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        rec.line = line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted field", rec.line);
  if (field_started || !rec.fields.empty()) end_record();
  return records;
}

double parse_number(const std::string& text, std::size_t line) {
  std::string_view t = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw DataError("metric '" + text + "' is not a number", line);
  }
  return value;
}

std::vector<Headline> parse_csv(std::string_view contents) {
  std::vector<CsvRecord> records = split_csv(contents);
  std::vector<Headline> out;
  if (records.empty()) return out;
  const std::vector<std::string> expected{"id", "title", "metric", "group"};
  std::vector<std::string> header;
  for (const auto& f : records[0].fields) header.emplace_back(trim(f));
  if (header != expected) throw DataError("CSV header must be id,title,metric,group", records[0].line);

  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const CsvRecord& rec = records[r];
    if (rec.fields.size() != 4) {
      throw DataError("expected 4 fields, got " + std::to_string(rec.fields.size()), rec.line);
    }
    Headline h{rec.fields[0], rec.fields[1], parse_number(rec.fields[2], rec.line), rec.fields[3]};
    validate(h, rec.line);
    check_unique(h.id, seen, rec.line);
    out.push_back(std::move(h));
  }
  return out;
}

json to_json(const Headline& h) {
  return {{"id", h.id}, {"title", h.title}, {"metric", h.metric}, {"group", h.group}};
}

}  // namespace

DatasetFormat format_from_path(std::string_view path) {
  return path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? DatasetFormat::csv
                                                                     : DatasetFormat::jsonl;
}

std::vector<Headline> parse_dataset(std::string_view contents, DatasetFormat format) {
  return format == DatasetFormat::csv ? parse_csv(contents) : parse_jsonl(contents);
}

std::vector<Headline> load_dataset(const std::string& path, DatasetFormat format) {
  return parse_dataset(io::read_file(path), format);
}

std::vector<Headline> load_dataset(const std::string& path) {
  return load_dataset(path, format_from_path(path));
}

std::vector<LabeledExample> parse_labeled_jsonl(std::string_view contents) {
  std::vector<LabeledExample> out;
  std::unordered_set<std::string> seen;
  for_each_jsonl_record(contents, [&](const json& obj, std::size_t line) {
    Headline h = headline_from_json(obj, line);
    check_unique(h.id, seen, line);
    if (!obj.contains("label")) throw DataError("missing field 'label'", line);
    const json& l = obj["label"];
    if (!l.is_number_integer() || (l.get<int>() != 0 && l.get<int>() != 1)) {
      throw DataError("field 'label' must be 0 or 1", line);
    }
    out.push_back({std::move(h), l.get<int>()});
  });
  return out;
}

std::vector<LabeledExample> load_labeled(const std::string& path) {
  return parse_labeled_jsonl(io::read_file(path));
}

bool has_labels(std::string_view jsonl_contents) {
  bool any = false;
  bool all = true;
  for_each_jsonl_record(jsonl_contents, [&](const json& obj, std::size_t) {
    any = true;
    if (!obj.is_object() || !obj.contains("label")) all = false;
  });
  return any && all;
}

std::string to_jsonl(const std::vector<LabeledExample>& data) {
  std::string out;
  for (const auto& ex : data) {
    json j = to_json(ex.headline);
    j["label"] = ex.label;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string to_jsonl(const std::vector<Headline>& data) {
  std::string out;
  for (const auto& h : data) {
    out += to_json(h).dump();
    out += '\n';
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::vector<LabeledExample> label_by_group_median(const std::vector<Headline>& data) {
  if (data.empty()) throw DataError("cannot label an empty dataset");
  std::unordered_map<std::string, std::vector<double>> by_group;
  for (const auto& h : data) by_group[h.group].push_back(h.metric);
  std::unordered_map<std::string, double> medians;
  for (auto& [group, metrics] : by_group) medians.emplace(group, median(std::move(metrics)));

  std::vector<LabeledExample> out;
  out.reserve(data.size());
  for (const auto& h : data) out.push_back({h, h.metric > medians.at(h.group) ? 1 : 0});
  return out;
}

std::size_t FoldPlan::fold_of(const std::string& id) const {
  auto it = assignments.find(id);
  if (it == assignments.end()) throw DataError("id '" + id + "' is not in the fold plan");
  return it->second;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (const auto& [id, fold] : assignments) ++sizes[fold];
  return sizes;
}

std::vector<std::size_t> FoldPlan::test_positions(const std::vector<LabeledExample>& data,
                                                  std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (fold_of(data[i].headline.id) == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_positions(const std::vector<LabeledExample>& data,
                                                   std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (fold_of(data[i].headline.id) != fold) out.push_back(i);
  return out;
}

FoldPlan make_folds(const std::vector<LabeledExample>& data, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be at least 2");
  if (k > data.size()) {
    throw ConfigError("k = " + std::to_string(k) + " exceeds dataset size " + std::to_string(data.size()));
  }
  std::vector<std::string> ids;
  ids.reserve(data.size());
  for (const auto& ex : data) ids.push_back(ex.headline.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw DataError("duplicate example ids");

  Rng rng(seed);
  rng.shuffle(ids);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) plan.assignments.emplace(ids[i], i % k);
  return plan;
}

}  // namespace headpop::corpus
