#include "headpop/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <limits>
#include <set>
#include <sstream>

#include "headpop/baselines.h"
#include "headpop/error.h"
#include "headpop/model_io.h"
#include "headpop/recurrent.h"
#include "headpop/rng.h"

namespace headpop::training {

using nlohmann::json;

// Sub-seed streams derived from TrainConfig::seed.
namespace stream {
constexpr std::uint64_t kEmbedding = 1;
constexpr std::uint64_t kInit = 2;
constexpr std::uint64_t kDropout = 3;
constexpr std::uint64_t kShuffle = 4;
constexpr std::uint64_t kValidation = 5;
constexpr std::uint64_t kFoldBase = 100;
}  // namespace stream

std::string to_string(EmbeddingMode mode) {
  return mode == EmbeddingMode::fine_tune ? "fine_tune" : "static";
}

EmbeddingMode parse_embedding_mode(std::string_view name) {
  if (name == "static") return EmbeddingMode::static_vectors;
  if (name == "fine_tune") return EmbeddingMode::fine_tune;
  throw ConfigError("unknown embedding mode '" + std::string(name) + "' (static | fine_tune)");
}

std::size_t TrainConfig::effective_max_seq_len() const {
  if (max_seq_len) return *max_seq_len;
  return model_kind == ModelKind::cnn ? 40 : text::kDefaultMaxSeqLen;
}

void TrainConfig::validate() const {
  if (hidden == 0) throw ConfigError("hidden size must be positive");
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw ConfigError("plateau_factor must be in (0, 1)");
  if (plateau_patience == 0 || early_stop_patience == 0) throw ConfigError("patience values must be at least 1");
  if (!(min_delta >= 0.0)) throw ConfigError("min_delta must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction <= 0.5)) {
    throw ConfigError("validation_fraction must be in [0, 0.5]");
  }
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (effective_max_seq_len() == 0) throw ConfigError("max_seq_len must be positive");
  if (!(svm_lambda > 0.0)) throw ConfigError("svm_lambda must be positive");
  if (svm_epochs == 0) throw ConfigError("svm_epochs must be positive");
  if (model_kind == ModelKind::cnn) {
    baselines::CnnConfig c;
    c.dim = dim;
    c.filters = cnn_filters;
    c.width = cnn_width;
    c.max_seq_len = effective_max_seq_len();
    c.dropout = cnn_dropout;
    c.l2 = cnn_l2;
    baselines::cnn_stage_lengths(c);
  }
}

json TrainConfig::to_json() const {
  json j = {{"model_kind", headpop::to_string(model_kind)},
            {"hidden", hidden},
            {"dim", dim},
            {"embedding_mode", training::to_string(embedding_mode)},
            {"glove_path", glove_path},
            {"embedding_label", embedding_label},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"learning_rate", learning_rate},
            {"plateau_patience", plateau_patience},
            {"plateau_factor", plateau_factor},
            {"early_stop_patience", early_stop_patience},
            {"min_delta", min_delta},
            {"seed", seed},
            {"validation_fraction", validation_fraction},
            {"clip_norm", clip_norm},
            {"max_seq_len", effective_max_seq_len()},
            {"min_count", min_count},
            {"cnn_filters", cnn_filters},
            {"cnn_width", cnn_width},
            {"cnn_dropout", cnn_dropout},
            {"cnn_l2", cnn_l2},
            {"svm_lambda", svm_lambda},
            {"svm_epochs", svm_epochs},
            {"bow_binary", bow_binary}};
  j["vocab_max_size"] = vocab_max_size ? json(*vocab_max_size) : json(nullptr);
  return j;
}

TrainConfig TrainConfig::from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  static const std::set<std::string> known{
      "model_kind", "hidden", "dim", "embedding_mode", "glove_path", "embedding_label", "batch_size",
      "max_epochs", "learning_rate", "plateau_patience", "plateau_factor", "early_stop_patience", "min_delta",
      "seed", "validation_fraction", "clip_norm", "max_seq_len", "min_count", "vocab_max_size", "cnn_filters",
      "cnn_width", "cnn_dropout", "cnn_l2", "svm_lambda", "svm_epochs", "bow_binary", "checkpoint_path"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown training config key '" + key + "'");
  }
  try {
    if (j.contains("model_kind")) c.model_kind = parse_model_kind(j["model_kind"].get<std::string>());
    if (j.contains("embedding_mode")) c.embedding_mode = parse_embedding_mode(j["embedding_mode"].get<std::string>());
    const auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    take("hidden", c.hidden);
    take("dim", c.dim);
    take("glove_path", c.glove_path);
    take("embedding_label", c.embedding_label);
    take("batch_size", c.batch_size);
    take("max_epochs", c.max_epochs);
    take("learning_rate", c.learning_rate);
    take("plateau_patience", c.plateau_patience);
    take("plateau_factor", c.plateau_factor);
    take("early_stop_patience", c.early_stop_patience);
    take("min_delta", c.min_delta);
    take("seed", c.seed);
    take("validation_fraction", c.validation_fraction);
    take("clip_norm", c.clip_norm);
    take("min_count", c.min_count);
    take("cnn_filters", c.cnn_filters);
    take("cnn_width", c.cnn_width);
    take("cnn_dropout", c.cnn_dropout);
    take("cnn_l2", c.cnn_l2);
    take("svm_lambda", c.svm_lambda);
    take("svm_epochs", c.svm_epochs);
    take("bow_binary", c.bow_binary);
    take("checkpoint_path", c.checkpoint_path);
    if (j.contains("max_seq_len") && !j["max_seq_len"].is_null()) c.max_seq_len = j["max_seq_len"].get<std::size_t>();
    if (j.contains("vocab_max_size") && !j["vocab_max_size"].is_null()) {
      c.vocab_max_size = j["vocab_max_size"].get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid training config value: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::from_json(const json& j) { return from_json(j, TrainConfig{}); }

json FitReport::to_json(bool include_timing) const {
  json epochs_json = json::array();
  for (const auto& e : epochs) {
    epochs_json.push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"val_loss", e.val_loss},
                           {"val_accuracy", e.val_accuracy},
                           {"learning_rate", e.learning_rate}});
  }
  json j = {{"epochs", std::move(epochs_json)},
            {"stop_reason", stop_reason == StopReason::early_stop ? "early_stop" : "max_epochs"},
            {"best_epoch", best_epoch}};
  if (include_timing) j["wall_time_s"] = wall_time_s;
  return j;
}

json EvalReport::to_json() const {
  return {{"accuracy", accuracy}, {"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}, {"n", n}};
}

double bce_loss(double p, int label) { return bce(p, label); }

double bce_loss(const std::vector<double>& probabilities, const std::vector<int>& labels) {
  if (probabilities.size() != labels.size() || probabilities.empty()) {
    throw DataError("batch loss needs equally sized, non-empty inputs");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) s += bce(probabilities[i], labels[i]);
  return s / static_cast<double>(labels.size());
}

PlateauSchedule::PlateauSchedule(double learning_rate, std::size_t plateau_patience, double factor,
                                 std::size_t early_stop_patience, double min_delta)
    : learning_rate_(learning_rate), plateau_patience_(plateau_patience), factor_(factor),
      early_stop_patience_(early_stop_patience), min_delta_(min_delta),
      best_loss_(std::numeric_limits<double>::infinity()) {}

PlateauSchedule::Decision PlateauSchedule::observe(double val_loss) {
  ++epoch_;
  Decision d;
  if (val_loss < best_loss_ - min_delta_ || best_epoch_ == 0) {
    best_loss_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    since_reduction_ = 0;
    d.improved = true;
    return d;
  }
  ++since_best_;
  ++since_reduction_;
  if (since_best_ >= early_stop_patience_) {
    d.stop = true;
  } else if (since_reduction_ >= plateau_patience_) {
    learning_rate_ *= factor_;
    since_reduction_ = 0;
    d.reduced = true;
  }
  return d;
}

namespace {

struct ValidationStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

ValidationStats validation_stats(const Classifier& model, const std::vector<Sample>& samples) {
  ValidationStats s;
  std::size_t correct = 0;
  for (const auto& ex : samples) {
    const double p = model.score(ex.seq);
    s.loss += bce(p, ex.label);
    if (model.predict(ex.seq) == ex.label) ++correct;
  }
  s.loss /= static_cast<double>(samples.size());
  s.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

FitReport fit_samples(NeuralClassifier& model, const std::vector<Sample>& train,
                      const std::vector<Sample>& validation, const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw DataError("cannot train on an empty set");
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Sample>& monitor = validation.empty() ? train : validation;

  const std::vector<std::string> names = model.trainable_names();
  const std::set<std::string> trainable(names.begin(), names.end());

  AdamState adam;
  adam.learning_rate = config.learning_rate;
  PlateauSchedule schedule(config.learning_rate, config.plateau_patience, config.plateau_factor,
                           config.early_stop_patience, config.min_delta);
  Rng shuffle_rng(mix_seed(config.seed, stream::kShuffle));
  Rng dropout_rng(mix_seed(config.seed, stream::kDropout));

  FitReport report;
  ParamSet best = model.params();
  std::string checkpoint_written;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto diverged = [&](const std::string& what, std::size_t epoch) {
    throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": " + what, checkpoint_written);
  };

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      ParamSet grads;
      try {
        for (std::size_t k = begin; k < end; ++k) {
          const Sample& ex = train[order[k]];
          loss_sum += model.accumulate_gradients(ex.seq, ex.label, grads, scale, &dropout_rng);
        }
        for (auto it = grads.begin(); it != grads.end();) {
          it = trainable.count(it->first) ? std::next(it) : grads.erase(it);
        }
        if (auto emb = grads.find("embedding"); emb != grads.end()) {
          for (double& v : emb->second.row(text::kPad)) v = 0.0;
        }
        if (!std::isfinite(loss_sum) || !all_finite(grads)) diverged("non-finite loss or gradient", epoch);
        clip_global_norm(grads, config.clip_norm);
        adam_step(model.mutable_params(), grads, adam);
      } catch (const DivergenceError&) {
        throw;
      } catch (const NumericError& e) {
        diverged(e.what(), epoch);
      }
      if (!all_finite(model.params())) diverged("non-finite parameter after update", epoch);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.learning_rate = adam.learning_rate;
    const ValidationStats stats = validation_stats(model, monitor);
    rec.val_loss = stats.loss;
    rec.val_accuracy = stats.accuracy;
    if (!std::isfinite(rec.val_loss)) diverged("non-finite validation loss", epoch);
    report.epochs.push_back(rec);

    const PlateauSchedule::Decision decision = schedule.observe(rec.val_loss);
    if (decision.improved) {
      best = model.params();
      report.best_epoch = epoch;
      if (!config.checkpoint_path.empty()) {
        model_io::save_model(model, config.checkpoint_path);
        checkpoint_written = config.checkpoint_path;
      }
    }
    if (config.on_epoch) config.on_epoch(rec);
    adam.learning_rate = schedule.learning_rate();
    if (decision.stop) {
      report.stop_reason = StopReason::early_stop;
      break;
    }
  }
  model.mutable_params() = std::move(best);
  report.wall_time_s = seconds_since(start);
  return report;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_validation(
    const std::vector<corpus::LabeledExample>& data, double fraction, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  for (int label : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data[i].label == label) members.push_back(i);
    rng.shuffle(members);
    std::size_t n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    if (fraction <= 0.0) n_val = 0;
    else if (members.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, members.size() - 1);
    else n_val = 0;
    val.insert(val.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {std::move(train), std::move(val)};
}

std::vector<Sample> encode_examples(const Classifier& model, const std::vector<corpus::LabeledExample>& data) {
  std::vector<Sample> out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    try {
      out.push_back({model.encode(ex.headline.title), ex.label});
    } catch (const DataError& e) {
      throw DataError("example '" + ex.headline.id + "': " + e.what());
    }
  }
  return out;
}

namespace {

std::vector<Sample> select(const std::vector<Sample>& all, const std::vector<std::size_t>& positions) {
  std::vector<Sample> out;
  out.reserve(positions.size());
  for (std::size_t i : positions) out.push_back(all[i]);
  return out;
}

FitResult fit_svm(const text::Vocabulary& vocab, const std::vector<Sample>& all,
                  const std::vector<std::size_t>& train_pos, const std::vector<std::size_t>& val_pos,
                  const TrainConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<baselines::SvmExample> train;
  for (std::size_t i : train_pos) train.push_back({baselines::bow_featurize(all[i].seq, vocab, config.bow_binary), all[i].label});
  const std::vector<Sample> val = select(all, val_pos.empty() ? train_pos : val_pos);

  baselines::SvmTrainOptions options;
  options.lambda = config.svm_lambda;
  options.epochs = config.svm_epochs;
  options.seed = mix_seed(config.seed, stream::kShuffle);
  baselines::SvmTrainer trainer(train, options);
  // The step size schedule is fixed by lambda; only early stopping applies.
  PlateauSchedule schedule(config.learning_rate, config.plateau_patience, config.plateau_factor,
                           config.early_stop_patience, config.min_delta);

  FitReport report;
  baselines::SvmParams best = trainer.params();
  for (std::size_t epoch = 1; epoch <= config.svm_epochs; ++epoch) {
    trainer.run_epoch();
    baselines::BowSvmModel current(vocab, config.effective_max_seq_len(), config.bow_binary, trainer.params());
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = baselines::svm_objective(trainer.params(), train);
    const ValidationStats stats = validation_stats(current, val);
    rec.val_loss = stats.loss;
    rec.val_accuracy = stats.accuracy;
    rec.learning_rate = 1.0 / (options.lambda * (static_cast<double>(epoch * train.size()) + 1.0 / options.lambda));
    report.epochs.push_back(rec);
    const auto decision = schedule.observe(rec.val_loss);
    if (decision.improved) {
      best = trainer.params();
      report.best_epoch = epoch;
    }
    if (config.on_epoch) config.on_epoch(rec);
    if (decision.stop) {
      report.stop_reason = StopReason::early_stop;
      break;
    }
  }
  report.wall_time_s = seconds_since(start);
  return {std::make_unique<baselines::BowSvmModel>(vocab, config.effective_max_seq_len(), config.bow_binary, best),
          std::move(report)};
}

}  // namespace

FitResult fit(const std::vector<corpus::LabeledExample>& train, const TrainConfig& config,
              const embeddings::PretrainedVectors* pretrained) {
  config.validate();
  if (train.empty()) throw DataError("cannot train on an empty set");
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& ex : train) (ex.label ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw DataError("training data must contain both classes");

  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(train.size());
  for (const auto& ex : train) {
    tokens.push_back(text::tokenize(ex.headline.title));
    if (tokens.back().empty()) throw DataError("example '" + ex.headline.id + "' has no tokens");
  }
  text::Vocabulary vocab = text::build_vocab(tokens, config.vocab_max_size, config.min_count);
  const std::size_t max_len = config.effective_max_seq_len();
  std::vector<Sample> all;
  all.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    all.push_back({text::encode_tokens(tokens[i], vocab, max_len), train[i].label});
  }
  auto [train_pos, val_pos] = split_validation(train, config.validation_fraction,
                                               mix_seed(config.seed, stream::kValidation));

  if (config.model_kind == ModelKind::bow_svm) return fit_svm(vocab, all, train_pos, val_pos, config);

  embeddings::PretrainedVectors loaded;
  if (!pretrained && !config.glove_path.empty()) {
    loaded = embeddings::load_glove(config.glove_path, &vocab);
    pretrained = &loaded;
  }
  const embeddings::PretrainedVectors none;
  embeddings::EmbeddingMatrix emb =
      embeddings::build_matrix(vocab, pretrained ? *pretrained : none, config.dim,
                               mix_seed(config.seed, stream::kEmbedding),
                               config.embedding_mode == EmbeddingMode::fine_tune);

  std::unique_ptr<NeuralClassifier> model;
  if (config.model_kind == ModelKind::cnn) {
    baselines::CnnConfig c;
    c.dim = config.dim;
    c.filters = config.cnn_filters;
    c.width = config.cnn_width;
    c.max_seq_len = max_len;
    c.dropout = config.cnn_dropout;
    c.l2 = config.cnn_l2;
    model = std::make_unique<baselines::CnnModel>(
        baselines::CnnModel::initialize(c, vocab, std::move(emb), mix_seed(config.seed, stream::kInit)));
  } else {
    recurrent::RecurrentConfig c;
    c.bidirectional = config.model_kind == ModelKind::bilstm;
    c.hidden = config.hidden;
    c.dim = config.dim;
    c.max_seq_len = max_len;
    model = std::make_unique<recurrent::RecurrentModel>(
        recurrent::RecurrentModel::initialize(c, vocab, std::move(emb), mix_seed(config.seed, stream::kInit)));
  }
  FitReport report = fit_samples(*model, select(all, train_pos), select(all, val_pos), config);
  return {std::move(model), std::move(report)};
}

EvalReport tally(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.size() != labels.size()) throw DataError("prediction and label counts differ");
  if (labels.empty()) throw DataError("cannot evaluate on an empty test set");
  EvalReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predicted[i] == 1) (labels[i] == 1 ? r.tp : r.fp) += 1;
    else (labels[i] == 0 ? r.tn : r.fn) += 1;
  }
  r.n = labels.size();
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.n);
  return r;
}

EvalReport evaluate(const Classifier& model, const std::vector<Sample>& test) {
  std::vector<int> predicted;
  std::vector<int> labels;
  predicted.reserve(test.size());
  labels.reserve(test.size());
  for (const auto& ex : test) {
    predicted.push_back(model.predict(ex.seq));
    labels.push_back(ex.label);
  }
  return tally(predicted, labels);
}

EvalReport evaluate(const Classifier& model, const std::vector<corpus::LabeledExample>& test) {
  return evaluate(model, encode_examples(model, test));
}

TableRow table_row(const TrainConfig& config, double accuracy) {
  TableRow row;
  char acc[32];
  std::snprintf(acc, sizeof acc, "%.4f", accuracy);
  row.accuracy = acc;
  switch (config.model_kind) {
    case ModelKind::bow_svm:
      row.model = "BoW + SVM";
      return row;
    case ModelKind::cnn: row.model = "CNN"; break;
    case ModelKind::lstm: row.model = "LSTM " + std::to_string(config.hidden); break;
    case ModelKind::bilstm: row.model = "BiLSTM " + std::to_string(config.hidden); break;
  }
  if (!config.embedding_label.empty()) {
    row.embeddings = config.embedding_label;
  } else if (!config.glove_path.empty()) {
    row.embeddings = "GloVe (" + std::filesystem::path(config.glove_path).stem().string() + ")";
  } else {
    row.embeddings = "random";
  }
  row.fine_tuned = config.embedding_mode == EmbeddingMode::fine_tune ? "yes" : "no";
  row.dim = std::to_string(config.dim);
  return row;
}

namespace {

const std::vector<std::string> kColumns{"Model", "Word Embeddings", "fine-tuned", "Dim", "Accuracy"};

std::vector<std::string> cells(const TableRow& r) { return {r.model, r.embeddings, r.fine_tuned, r.dim, r.accuracy}; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

}  // namespace

std::string format_table(const std::vector<TableRow>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& c : kColumns) widths.push_back(c.size());
  for (const auto& r : rows) {
    const auto cs = cells(r);
    for (std::size_t i = 0; i < cs.size(); ++i) widths[i] = std::max(widths[i], cs[i].size());
  }
  const auto line = [&](const std::vector<std::string>& cs) {
    std::string out = "|";
    for (std::size_t i = 0; i < cs.size(); ++i) out += " " + cs[i] + std::string(widths[i] - cs[i].size(), ' ') + " |";
    return out + "\n";
  };
  std::string out = line(kColumns);
  out += "|";
  for (std::size_t w : widths) out += std::string(w + 2, '-') + "|";
  out += "\n";
  for (const auto& r : rows) out += line(cells(r));
  return out;
}

std::vector<TableRow> parse_table(const std::string& table) {
  std::vector<TableRow> rows;
  std::istringstream in(table);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line.front() != '|' || line.back() != '|') throw DataError("table row must start and end with '|'", line_no);
    std::vector<std::string> cs;
    std::size_t pos = 1;
    while (pos < line.size()) {
      const std::size_t next = line.find('|', pos);
      cs.push_back(trim(line.substr(pos, next - pos)));
      pos = next + 1;
    }
    if (cs.size() != kColumns.size()) throw DataError("table row must have 5 columns", line_no);
    if (line_no == 1) {
      if (cs != kColumns) throw DataError("unexpected table header", line_no);
      continue;
    }
    if (cs[0].find_first_not_of('-') == std::string::npos) continue;
    rows.push_back({cs[0], cs[1], cs[2], cs[3], cs[4]});
  }
  return rows;
}

json KFoldReport::to_json(bool include_timing) const {
  json folds_json = json::array();
  for (std::size_t i = 0; i < folds.size(); ++i) {
    json f = folds[i].to_json();
    f["fold"] = i;
    if (i < fits.size()) f["fit"] = fits[i].to_json(include_timing);
    folds_json.push_back(std::move(f));
  }
  return {{"folds", std::move(folds_json)},
          {"mean_accuracy", mean_accuracy},
          {"std_accuracy", std_accuracy},
          {"row",
           {{"model", row.model},
            {"embeddings", row.embeddings},
            {"fine_tuned", row.fine_tuned},
            {"dim", row.dim},
            {"accuracy", row.accuracy}}}};
}

KFoldReport run_kfold(const std::vector<corpus::LabeledExample>& data, const TrainConfig& config,
                      const KFoldOptions& options, const embeddings::PretrainedVectors* pretrained) {
  config.validate();
  const corpus::FoldPlan plan = corpus::make_folds(data, options.k, config.seed);

  const auto run_fold = [&](std::size_t fold) {
    std::vector<corpus::LabeledExample> train;
    std::vector<corpus::LabeledExample> test;
    for (std::size_t i : plan.train_positions(data, fold)) train.push_back(data[i]);
    for (std::size_t i : plan.test_positions(data, fold)) test.push_back(data[i]);
    TrainConfig cfg = config;
    cfg.seed = mix_seed(config.seed, stream::kFoldBase + fold);
    cfg.checkpoint_path.clear();
    FitResult result = fit(train, cfg, pretrained);
    return std::make_pair(evaluate(*result.model, test), std::move(result.report));
  };

  KFoldReport report;
  report.folds.resize(options.k);
  report.fits.resize(options.k);
  if (options.parallel) {
    std::vector<std::future<std::pair<EvalReport, FitReport>>> futures;
    for (std::size_t fold = 0; fold < options.k; ++fold) futures.push_back(std::async(std::launch::async, run_fold, fold));
    for (std::size_t fold = 0; fold < options.k; ++fold) std::tie(report.folds[fold], report.fits[fold]) = futures[fold].get();
  } else {
    for (std::size_t fold = 0; fold < options.k; ++fold) std::tie(report.folds[fold], report.fits[fold]) = run_fold(fold);
  }

  double sum = 0.0;
  for (const auto& f : report.folds) sum += f.accuracy;
  report.mean_accuracy = sum / static_cast<double>(options.k);
  double sq = 0.0;
  for (const auto& f : report.folds) sq += (f.accuracy - report.mean_accuracy) * (f.accuracy - report.mean_accuracy);
  report.std_accuracy = std::sqrt(sq / static_cast<double>(options.k - 1));
  report.row = table_row(config, report.mean_accuracy);
  return report;
}

}  // namespace headpop::training
