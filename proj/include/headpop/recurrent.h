#ifndef HEADPOP_RECURRENT_H
#define HEADPOP_RECURRENT_H

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "headpop/classifier.h"
#include "headpop/embeddings.h"
#include "headpop/numerics.h"
#include "headpop/rng.h"
#include "headpop/text.h"

namespace headpop::recurrent {

// Read-only view of one direction's weights inside a ParamSet. Each W is
// H x (H + d) and multiplies the concatenation [h_{t-1}, x_t]; each b is H x 1.
struct LstmParams {
  const Mat& w_i;
  const Mat& w_f;
  const Mat& w_o;
  const Mat& w_c;
  const Mat& b_i;
  const Mat& b_f;
  const Mat& b_o;
  const Mat& b_c;

  std::size_t hidden() const { return w_i.rows(); }
  std::size_t input() const { return w_i.cols() - w_i.rows(); }
};

// Validates shapes of `<prefix>.W_i` ... `<prefix>.b_c`.
LstmParams lstm_view(const ParamSet& params, std::string_view prefix);

// Glorot-uniform weights, zero biases except b_f = 1.
void init_lstm(ParamSet& params, std::string_view prefix, std::size_t hidden, std::size_t input, Rng& rng);

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  static LstmState zeros(std::size_t hidden) { return {std::vector<double>(hidden), std::vector<double>(hidden)}; }
};

LstmState lstm_cell(const LstmParams& p, std::span<const double> x, const LstmState& prev);

// Runs the chain from the zero state; one state per row of xs.
std::vector<LstmState> encode_forward(const LstmParams& p, const Mat& xs);

// Per-position hidden pair (->h_t, <-h_t).
struct BiHidden {
  std::vector<double> forward;
  std::vector<double> backward;
};

struct WordContribution {
  std::string token;
  double score = 0.0;
};

struct Introspection {
  std::vector<WordContribution> words;
  double fused_score = 0.0;  // equals score(model, seq)
};

struct RecurrentConfig {
  bool bidirectional = true;
  std::size_t hidden = 128;
  std::size_t dim = 300;
  std::size_t max_seq_len = text::kDefaultMaxSeqLen;
  bool trainable_embedding = false;
  double coverage = 0.0;
};

// LSTM or BiLSTM over an embedding layer with a single-logit sigmoid head.
// BiLSTM feeds the head with the last state of each chain, [->h_n, <-h_1].
// Parameter names: embedding, fwd.*, bwd.* (bidirectional only), head.w,
// head.b.
class RecurrentModel final : public NeuralClassifier {
 public:
  RecurrentModel(RecurrentConfig config, text::Vocabulary vocab, ParamSet params);

  static RecurrentModel initialize(const RecurrentConfig& config, text::Vocabulary vocab,
                                   embeddings::EmbeddingMatrix embedding, std::uint64_t seed);

  const RecurrentConfig& config() const { return config_; }
  LstmParams forward_params() const { return lstm_view(params_, "fwd"); }
  LstmParams backward_params() const { return lstm_view(params_, "bwd"); }
  const Mat& embedding() const { return params_.at("embedding"); }
  const Mat& head_weight() const { return params_.at("head.w"); }
  double head_bias() const { return params_.at("head.b")[0]; }

  ModelKind kind() const override { return config_.bidirectional ? ModelKind::bilstm : ModelKind::lstm; }
  const text::Vocabulary& vocab() const override { return vocab_; }
  std::size_t max_seq_len() const override { return config_.max_seq_len; }
  std::size_t hidden_size() const override { return config_.hidden; }
  std::size_t embedding_dim() const override { return config_.dim; }
  const ParamSet& params() const override { return params_; }
  ParamSet& mutable_params() override { return params_; }
  nlohmann::json config_json() const override;
  std::unique_ptr<Classifier> clone() const override { return std::make_unique<RecurrentModel>(*this); }

  double score(const text::TokenSequence& seq) const override;
  std::vector<double> contributions(const text::TokenSequence& seq) const override;
  double accumulate_gradients(const text::TokenSequence& seq, int label, ParamSet& grads, double scale,
                              Rng* dropout) const override;
  std::vector<std::string> trainable_names() const override;

  static RecurrentConfig config_from_json(const nlohmann::json& j);

 private:
  void validate() const;

  RecurrentConfig config_;
  text::Vocabulary vocab_;
  ParamSet params_;
};

// Hidden pairs for embedded inputs xs (n x d); pair t aligns ->h_t and <-h_t.
std::vector<BiHidden> encode_bidirectional(const RecurrentModel& model, const Mat& xs);

double score(const RecurrentModel& model, const text::TokenSequence& seq);

// Head applied per position to [->h_t, <-h_t] (->h_t alone for LSTM).
Introspection introspect(const RecurrentModel& model, const text::TokenSequence& seq);

// BCE loss and its gradient for one example.
std::pair<double, ParamSet> backward(const RecurrentModel& model, const text::TokenSequence& seq, int label);

}  // namespace headpop::recurrent

#endif  // HEADPOP_RECURRENT_H
