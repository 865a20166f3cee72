#ifndef HEADPOP_BASELINES_H
#define HEADPOP_BASELINES_H

#include <cstddef>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "headpop/classifier.h"
#include "headpop/embeddings.h"
#include "headpop/numerics.h"
#include "headpop/rng.h"
#include "headpop/text.h"

namespace headpop::baselines {

// ---------------------------------------------------------------------------
// Bag of words + linear SVM

// Sparse counts over the vocabulary, sorted by index.
struct BowVector {
  std::size_t dim = 0;
  std::vector<std::pair<std::size_t, double>> entries;

  double total() const;
};

BowVector bow_featurize(const text::TokenSequence& seq, const text::Vocabulary& vocab, bool binary = false);

struct SvmParams {
  std::vector<double> w;
  double b = 0.0;
  double lambda = 1e-4;
};

struct SvmExample {
  BowVector x;
  int label = 0;  // {0, 1}; trained as {-1, +1}
};

struct SvmTrainOptions {
  double lambda = 1e-4;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
};

// Hinge loss max(0, 1 - y f(x)) with y in {-1, +1} derived from label.
double hinge_loss(double margin, int label);
double svm_margin(const SvmParams& params, const BowVector& x);
// lambda/2 |w|^2 + mean hinge loss.
double svm_objective(const SvmParams& params, const std::vector<SvmExample>& data);

// Primal stochastic subgradient descent with step 1 / (lambda (t + t0)),
// t0 = 1 / lambda. `objective_per_epoch`, if given, receives the objective
// after every epoch.
SvmParams svm_train(const std::vector<SvmExample>& data, const SvmTrainOptions& options,
                    std::vector<double>* objective_per_epoch = nullptr);

// Epoch-at-a-time form of svm_train; `data` must outlive the trainer.
class SvmTrainer {
 public:
  SvmTrainer(const std::vector<SvmExample>& data, const SvmTrainOptions& options);

  void run_epoch();
  SvmParams params() const;
  std::size_t epochs_run() const { return epochs_; }

 private:
  const std::vector<SvmExample>& data_;
  SvmTrainOptions options_;
  std::vector<double> v_;  // w = scale_ * v_
  double scale_ = 1.0;
  double b_ = 0.0;
  double t_ = 0.0;
  std::size_t epochs_ = 0;
  Rng rng_;
  std::vector<std::size_t> order_;
};

// sigmoid(w.x + b).
double svm_predict(const SvmParams& params, const BowVector& x);
// 1 iff w.x + b > 0.
int svm_class(const SvmParams& params, const BowVector& x);

// Parameters: svm.w (1 x V), svm.b (1 x 1).
class BowSvmModel final : public Classifier {
 public:
  BowSvmModel(text::Vocabulary vocab, std::size_t max_seq_len, bool binary, SvmParams svm);
  BowSvmModel(text::Vocabulary vocab, std::size_t max_seq_len, bool binary, double lambda, ParamSet params);

  SvmParams svm() const;
  bool binary() const { return binary_; }

  ModelKind kind() const override { return ModelKind::bow_svm; }
  const text::Vocabulary& vocab() const override { return vocab_; }
  std::size_t max_seq_len() const override { return max_seq_len_; }
  const ParamSet& params() const override { return params_; }
  ParamSet& mutable_params() override { return params_; }
  nlohmann::json config_json() const override;
  std::unique_ptr<Classifier> clone() const override { return std::make_unique<BowSvmModel>(*this); }

  double score(const text::TokenSequence& seq) const override;
  int predict(const text::TokenSequence& seq) const override;
  // Score of each token on its own: sigmoid(w[token] + b).
  std::vector<double> contributions(const text::TokenSequence& seq) const override;

 private:
  double margin(const text::TokenSequence& seq) const;

  text::Vocabulary vocab_;
  std::size_t max_seq_len_;
  bool binary_;
  double lambda_;
  ParamSet params_;
};

// ---------------------------------------------------------------------------
// Word CNN: blocks x (valid conv -> ReLU -> max-pool), dropout, dense, sigmoid.

struct CnnConfig {
  std::size_t dim = 300;
  std::size_t filters = 256;
  std::size_t width = 5;
  std::size_t blocks = 3;
  std::size_t pool = 2;
  std::size_t max_seq_len = 40;
  double dropout = 0.5;
  double l2 = 1e-4;
  bool trainable_embedding = false;
  double coverage = 0.0;
};

// Sequence lengths [L0, conv1, pool1, conv2, pool2, ...]. Throws ConfigError
// if any stage would be empty.
std::vector<std::size_t> cnn_stage_lengths(const CnnConfig& config);

// Parameters: embedding, conv<k>.w (filters x width*C_in), conv<k>.b,
// dense.w (1 x L_final*filters), dense.b. The input is right-padded with PAD
// rows to max_seq_len.
class CnnModel final : public NeuralClassifier {
 public:
  CnnModel(CnnConfig config, text::Vocabulary vocab, ParamSet params);

  static CnnModel initialize(const CnnConfig& config, text::Vocabulary vocab,
                             embeddings::EmbeddingMatrix embedding, std::uint64_t seed);

  const CnnConfig& config() const { return config_; }

  ModelKind kind() const override { return ModelKind::cnn; }
  const text::Vocabulary& vocab() const override { return vocab_; }
  std::size_t max_seq_len() const override { return config_.max_seq_len; }
  std::size_t hidden_size() const override { return config_.filters; }
  std::size_t embedding_dim() const override { return config_.dim; }
  const ParamSet& params() const override { return params_; }
  ParamSet& mutable_params() override { return params_; }
  nlohmann::json config_json() const override;
  std::unique_ptr<Classifier> clone() const override { return std::make_unique<CnnModel>(*this); }

  double score(const text::TokenSequence& seq) const override;
  // Score of each token as a one-word title.
  std::vector<double> contributions(const text::TokenSequence& seq) const override;
  double accumulate_gradients(const text::TokenSequence& seq, int label, ParamSet& grads, double scale,
                              Rng* dropout) const override;
  std::vector<std::string> trainable_names() const override;

  static CnnConfig config_from_json(const nlohmann::json& j);

 private:
  CnnConfig config_;
  text::Vocabulary vocab_;
  ParamSet params_;
};

}  // namespace headpop::baselines

#endif  // HEADPOP_BASELINES_H
