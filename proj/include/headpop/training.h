#ifndef HEADPOP_TRAINING_H
#define HEADPOP_TRAINING_H

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "headpop/classifier.h"
#include "headpop/corpus.h"
#include "headpop/embeddings.h"
#include "headpop/text.h"

namespace headpop::training {

enum class EmbeddingMode { static_vectors, fine_tune };

std::string to_string(EmbeddingMode mode);
EmbeddingMode parse_embedding_mode(std::string_view name);

struct EpochRecord;

struct TrainConfig {
  ModelKind model_kind = ModelKind::bilstm;
  std::size_t hidden = 128;
  std::size_t dim = 300;
  EmbeddingMode embedding_mode = EmbeddingMode::static_vectors;
  std::string glove_path;
  // Table label for the embedding column; derived from glove_path when empty.
  std::string embedding_label;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  double learning_rate = 1e-3;
  std::size_t plateau_patience = 3;
  double plateau_factor = 0.2;
  std::size_t early_stop_patience = 10;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;
  // 0 monitors the training set itself.
  double validation_fraction = 0.1;
  double clip_norm = 5.0;
  // 30 for recurrent models and the SVM, 40 for the CNN when unset.
  std::optional<std::size_t> max_seq_len;
  std::size_t min_count = 1;
  std::optional<std::size_t> vocab_max_size;

  std::size_t cnn_filters = 256;
  std::size_t cnn_width = 5;
  double cnn_dropout = 0.5;
  double cnn_l2 = 1e-4;

  double svm_lambda = 1e-4;
  std::size_t svm_epochs = 50;
  bool bow_binary = false;

  // When set, the best model so far is written here after each improvement.
  std::string checkpoint_path;
  // Called after each epoch, once any checkpoint for it has been written.
  std::function<void(const EpochRecord&)> on_epoch;

  std::size_t effective_max_seq_len() const;
  // Throws ConfigError.
  void validate() const;

  nlohmann::json to_json() const;
  // Keys present in `j` override `base`.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double learning_rate = 0.0;  // in effect during this epoch

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

enum class StopReason { early_stop, max_epochs };

struct FitReport {
  std::vector<EpochRecord> epochs;
  StopReason stop_reason = StopReason::max_epochs;
  std::size_t best_epoch = 0;
  double wall_time_s = 0.0;

  nlohmann::json to_json(bool include_timing = true) const;
};

struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t n = 0;
  double accuracy = 0.0;

  nlohmann::json to_json() const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct Sample {
  text::TokenSequence seq;
  int label = 0;
};

double bce_loss(double p, int label);
double bce_loss(const std::vector<double>& probabilities, const std::vector<int>& labels);

// Tracks validation loss: after `plateau_patience` epochs without an
// improvement larger than min_delta the learning rate is multiplied by
// `factor`; after `early_stop_patience` such epochs training stops.
class PlateauSchedule {
 public:
  struct Decision {
    bool improved = false;
    bool reduced = false;
    bool stop = false;
  };

  PlateauSchedule(double learning_rate, std::size_t plateau_patience, double factor,
                  std::size_t early_stop_patience, double min_delta);

  Decision observe(double val_loss);
  double learning_rate() const { return learning_rate_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  double learning_rate_;
  std::size_t plateau_patience_;
  double factor_;
  std::size_t early_stop_patience_;
  double min_delta_;
  double best_loss_;
  std::size_t best_epoch_ = 0;
  std::size_t epoch_ = 0;
  std::size_t since_best_ = 0;
  std::size_t since_reduction_ = 0;
};

// Minibatch Adam with global-norm clipping, plateau schedule and early
// stopping on `validation`. On return `model` holds the best-epoch weights.
FitReport fit_samples(NeuralClassifier& model, const std::vector<Sample>& train,
                      const std::vector<Sample>& validation, const TrainConfig& config);

struct FitResult {
  std::unique_ptr<Classifier> model;
  FitReport report;
};

// Stratified, seeded split of positions into (train, validation).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_validation(
    const std::vector<corpus::LabeledExample>& data, double fraction, std::uint64_t seed);

// Builds the vocabulary and embedding from `train`, carves a validation
// split, and trains the configured model. `pretrained`, when given, replaces
// loading config.glove_path.
FitResult fit(const std::vector<corpus::LabeledExample>& train, const TrainConfig& config,
              const embeddings::PretrainedVectors* pretrained = nullptr);

EvalReport tally(const std::vector<int>& predicted, const std::vector<int>& labels);
EvalReport evaluate(const Classifier& model, const std::vector<Sample>& test);
EvalReport evaluate(const Classifier& model, const std::vector<corpus::LabeledExample>& test);

std::vector<Sample> encode_examples(const Classifier& model, const std::vector<corpus::LabeledExample>& data);

struct TableRow {
  std::string model;
  std::string embeddings;
  std::string fine_tuned;
  std::string dim;
  std::string accuracy;

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

TableRow table_row(const TrainConfig& config, double accuracy);
std::string format_table(const std::vector<TableRow>& rows);
std::vector<TableRow> parse_table(const std::string& table);

struct KFoldReport {
  std::vector<EvalReport> folds;
  std::vector<FitReport> fits;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation over folds
  TableRow row;

  nlohmann::json to_json(bool include_timing = true) const;
};

struct KFoldOptions {
  std::size_t k = 5;
  bool parallel = false;
};

KFoldReport run_kfold(const std::vector<corpus::LabeledExample>& data, const TrainConfig& config,
                      const KFoldOptions& options = {}, const embeddings::PretrainedVectors* pretrained = nullptr);

}  // namespace headpop::training

#endif  // HEADPOP_TRAINING_H
