#include "headpop/baselines.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "headpop/error.h"
#include "headpop/rng.h"

namespace headpop::baselines {

namespace {

Mat& grad_entry(ParamSet& grads, const std::string& name, const Mat& like) {
  return grads.try_emplace(name, like.rows(), like.cols()).first->second;
}

double sign_of(int label) { return label ? 1.0 : -1.0; }

std::string conv_name(std::size_t block, const char* what) {
  return "conv" + std::to_string(block + 1) + "." + what;
}

}  // namespace

double BowVector::total() const {
  double s = 0.0;
  for (const auto& [idx, v] : entries) s += v;
  return s;
}

BowVector bow_featurize(const text::TokenSequence& seq, const text::Vocabulary& vocab, bool binary) {
  std::map<std::size_t, double> counts;
  for (std::size_t t = 0; t < seq.length; ++t) {
    const std::size_t idx = seq.indices.at(t);
    if (idx >= vocab.size()) throw ShapeError("token index out of vocabulary range");
    if (idx == text::kPad) continue;
    counts[idx] = binary ? 1.0 : counts[idx] + 1.0;
  }
  BowVector v;
  v.dim = vocab.size();
  v.entries.assign(counts.begin(), counts.end());
  return v;
}

double hinge_loss(double margin, int label) { return std::max(0.0, 1.0 - sign_of(label) * margin); }

double svm_margin(const SvmParams& params, const BowVector& x) {
  if (x.dim != params.w.size()) {
    throw ShapeError("feature dimension " + std::to_string(x.dim) + " does not match SVM dimension " +
                     std::to_string(params.w.size()));
  }
  double m = params.b;
  for (const auto& [idx, v] : x.entries) m += params.w[idx] * v;
  return m;
}

double svm_objective(const SvmParams& params, const std::vector<SvmExample>& data) {
  double sq = 0.0;
  for (double w : params.w) sq += w * w;
  double hinge = 0.0;
  for (const auto& ex : data) hinge += hinge_loss(svm_margin(params, ex.x), ex.label);
  return 0.5 * params.lambda * sq + (data.empty() ? 0.0 : hinge / static_cast<double>(data.size()));
}

SvmTrainer::SvmTrainer(const std::vector<SvmExample>& data, const SvmTrainOptions& options)
    : data_(data), options_(options), rng_(options.seed) {
  if (data.empty()) throw DataError("cannot train an SVM on an empty dataset");
  if (!(options.lambda > 0.0)) throw ConfigError("SVM lambda must be positive");
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& ex : data) (ex.label ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw DataError("SVM training data contains a single class");
  const std::size_t dim = data.front().x.dim;
  for (const auto& ex : data) {
    if (ex.x.dim != dim) throw ShapeError("SVM training vectors have inconsistent dimensions");
  }
  v_.assign(dim, 0.0);
  order_.resize(data.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
}

void SvmTrainer::run_epoch() {
  const double lambda = options_.lambda;
  const double t0 = 1.0 / lambda;
  rng_.shuffle(order_);
  for (std::size_t i : order_) {
    const SvmExample& ex = data_[i];
    t_ += 1.0;
    const double eta = 1.0 / (lambda * (t_ + t0));
    const double y = sign_of(ex.label);
    double wx = 0.0;
    for (const auto& [idx, val] : ex.x.entries) wx += v_[idx] * val;
    const double margin = y * (scale_ * wx + b_);

    scale_ *= 1.0 - eta * lambda;
    if (margin < 1.0) {
      const double step = eta * y / scale_;
      for (const auto& [idx, val] : ex.x.entries) v_[idx] += step * val;
      b_ += eta * y;
    }
    if (scale_ < 1e-9) {
      for (double& x : v_) x *= scale_;
      scale_ = 1.0;
    }
  }
  ++epochs_;
  if (!std::isfinite(b_) || !std::isfinite(scale_)) throw NumericError("SVM training diverged");
}

SvmParams SvmTrainer::params() const {
  SvmParams p;
  p.w.resize(v_.size());
  for (std::size_t j = 0; j < v_.size(); ++j) p.w[j] = scale_ * v_[j];
  p.b = b_;
  p.lambda = options_.lambda;
  return p;
}

SvmParams svm_train(const std::vector<SvmExample>& data, const SvmTrainOptions& options,
                    std::vector<double>* objective_per_epoch) {
  SvmTrainer trainer(data, options);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    trainer.run_epoch();
    if (objective_per_epoch) objective_per_epoch->push_back(svm_objective(trainer.params(), data));
  }
  return trainer.params();
}

double svm_predict(const SvmParams& params, const BowVector& x) { return sigmoid(svm_margin(params, x)); }

int svm_class(const SvmParams& params, const BowVector& x) { return svm_margin(params, x) > 0.0 ? 1 : 0; }

BowSvmModel::BowSvmModel(text::Vocabulary vocab, std::size_t max_seq_len, bool binary, SvmParams svm)
    : vocab_(std::move(vocab)), max_seq_len_(max_seq_len), binary_(binary), lambda_(svm.lambda) {
  if (svm.w.size() != vocab_.size()) throw ShapeError("SVM weight dimension does not match vocabulary");
  const std::size_t dim = svm.w.size();
  params_["svm.w"] = Mat(1, dim, std::move(svm.w));
  params_["svm.b"] = Mat(1, 1, {svm.b});
}

BowSvmModel::BowSvmModel(text::Vocabulary vocab, std::size_t max_seq_len, bool binary, double lambda,
                         ParamSet params)
    : vocab_(std::move(vocab)), max_seq_len_(max_seq_len), binary_(binary), lambda_(lambda),
      params_(std::move(params)) {
  auto w = params_.find("svm.w");
  auto b = params_.find("svm.b");
  if (w == params_.end() || b == params_.end() || params_.size() != 2) {
    throw ShapeError("bow_svm model needs exactly svm.w and svm.b");
  }
  if (w->second.rows() != 1 || w->second.cols() != vocab_.size()) {
    throw ShapeError("svm.w is " + w->second.shape() + ", expected 1x" + std::to_string(vocab_.size()));
  }
  if (b->second.rows() != 1 || b->second.cols() != 1) throw ShapeError("svm.b must be 1x1");
}

SvmParams BowSvmModel::svm() const {
  SvmParams p;
  auto w = params_.at("svm.w").values();
  p.w.assign(w.begin(), w.end());
  p.b = params_.at("svm.b")[0];
  p.lambda = lambda_;
  return p;
}

nlohmann::json BowSvmModel::config_json() const {
  return {{"max_seq_len", max_seq_len_}, {"binary", binary_}, {"lambda", lambda_}};
}

double BowSvmModel::margin(const text::TokenSequence& seq) const {
  const BowVector x = bow_featurize(seq, vocab_, binary_);
  const Mat& w = params_.at("svm.w");
  double m = params_.at("svm.b")[0];
  for (const auto& [idx, v] : x.entries) m += w[idx] * v;
  return m;
}

double BowSvmModel::score(const text::TokenSequence& seq) const { return sigmoid(margin(seq)); }

int BowSvmModel::predict(const text::TokenSequence& seq) const { return margin(seq) > 0.0 ? 1 : 0; }

std::vector<double> BowSvmModel::contributions(const text::TokenSequence& seq) const {
  const Mat& w = params_.at("svm.w");
  const double b = params_.at("svm.b")[0];
  std::vector<double> out;
  for (std::size_t t = 0; t < seq.length; ++t) out.push_back(sigmoid(w[seq.indices.at(t)] + b));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> cnn_stage_lengths(const CnnConfig& config) {
  if (config.filters == 0 || config.width == 0 || config.blocks == 0 || config.pool == 0 || config.dim == 0) {
    throw ConfigError("CNN filters, width, blocks, pool and dim must be positive");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ConfigError("CNN dropout must be in [0, 1)");
  if (!(config.l2 >= 0.0)) throw ConfigError("CNN l2 must be non-negative");
  std::vector<std::size_t> lengths{config.max_seq_len};
  std::size_t len = config.max_seq_len;
  for (std::size_t k = 0; k < config.blocks; ++k) {
    if (len < config.width) {
      throw ConfigError("max_seq_len " + std::to_string(config.max_seq_len) + " is too short: block " +
                        std::to_string(k + 1) + " gets " + std::to_string(len) + " positions, conv width is " +
                        std::to_string(config.width));
    }
    len = len - config.width + 1;
    lengths.push_back(len);
    len /= config.pool;
    if (len == 0) {
      throw ConfigError("max_seq_len " + std::to_string(config.max_seq_len) + " is too short: block " +
                        std::to_string(k + 1) + " pools to zero length");
    }
    lengths.push_back(len);
  }
  return lengths;
}

CnnModel::CnnModel(CnnConfig config, text::Vocabulary vocab, ParamSet params)
    : config_(config), vocab_(std::move(vocab)), params_(std::move(params)) {
  const std::vector<std::size_t> lengths = cnn_stage_lengths(config_);
  const auto expect = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ShapeError("missing parameter '" + name + "'");
    if (it->second.rows() != rows || it->second.cols() != cols) {
      throw ShapeError(name + " is " + it->second.shape() + ", expected " + std::to_string(rows) + "x" +
                       std::to_string(cols));
    }
  };
  expect("embedding", vocab_.size(), config_.dim);
  std::size_t channels = config_.dim;
  for (std::size_t k = 0; k < config_.blocks; ++k) {
    expect(conv_name(k, "w"), config_.filters, config_.width * channels);
    expect(conv_name(k, "b"), config_.filters, 1);
    channels = config_.filters;
  }
  expect("dense.w", 1, lengths.back() * config_.filters);
  expect("dense.b", 1, 1);
  if (params_.size() != 2 * config_.blocks + 3) throw ShapeError("unexpected parameters in CNN model");
}

CnnModel CnnModel::initialize(const CnnConfig& config, text::Vocabulary vocab,
                              embeddings::EmbeddingMatrix embedding, std::uint64_t seed) {
  if (embedding.dim() != config.dim) throw ConfigError("embedding dimension does not match CNN config");
  CnnConfig cfg = config;
  cfg.trainable_embedding = embedding.trainable;
  cfg.coverage = embedding.coverage;
  const std::vector<std::size_t> lengths = cnn_stage_lengths(cfg);
  Rng rng(seed);
  ParamSet params;
  params["embedding"] = std::move(embedding.matrix);
  std::size_t channels = cfg.dim;
  for (std::size_t k = 0; k < cfg.blocks; ++k) {
    const std::size_t fan_in = cfg.width * channels;
    Mat w(cfg.filters, fan_in);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));  // He-uniform for ReLU
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
    params[conv_name(k, "w")] = std::move(w);
    params[conv_name(k, "b")] = Mat(cfg.filters, 1);
    channels = cfg.filters;
  }
  const std::size_t features = lengths.back() * cfg.filters;
  Mat dense(1, features);
  const double limit = std::sqrt(6.0 / static_cast<double>(features + 1));
  for (double& v : dense.values()) v = rng.uniform(-limit, limit);
  params["dense.w"] = std::move(dense);
  params["dense.b"] = Mat(1, 1);
  return CnnModel(cfg, std::move(vocab), std::move(params));
}

nlohmann::json CnnModel::config_json() const {
  return {{"dim", config_.dim},       {"filters", config_.filters},
          {"width", config_.width},   {"blocks", config_.blocks},
          {"pool", config_.pool},     {"max_seq_len", config_.max_seq_len},
          {"dropout", config_.dropout}, {"l2", config_.l2},
          {"trainable_embedding", config_.trainable_embedding}, {"coverage", config_.coverage}};
}

CnnConfig CnnModel::config_from_json(const nlohmann::json& j) {
  CnnConfig c;
  c.dim = j.at("dim").get<std::size_t>();
  c.filters = j.at("filters").get<std::size_t>();
  c.width = j.at("width").get<std::size_t>();
  c.blocks = j.at("blocks").get<std::size_t>();
  c.pool = j.at("pool").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.trainable_embedding = j.at("trainable_embedding").get<bool>();
  c.coverage = j.value("coverage", 0.0);
  return c;
}

namespace {

struct Block {
  std::size_t in_len = 0;
  std::size_t channels = 0;
  std::size_t conv_len = 0;
  std::size_t pool_len = 0;
  std::vector<double> input;   // in_len x channels
  std::vector<double> conv;    // conv_len x filters, pre-activation
  std::vector<double> pooled;  // pool_len x filters
  std::vector<std::size_t> argmax;
};

struct CnnPass {
  std::vector<std::size_t> tokens;
  std::vector<Block> blocks;
  std::vector<double> features;  // flattened last pool
  std::vector<double> mask;      // dropout multipliers, empty = none
  double logit = 0.0;
};

CnnPass cnn_forward(const CnnConfig& cfg, const ParamSet& params, const text::TokenSequence& seq, Rng* dropout) {
  if (seq.length == 0) throw DataError("cannot score an empty sequence");
  CnnPass pass;
  pass.tokens = seq.padded(cfg.max_seq_len);
  const Mat& emb = params.at("embedding");
  const std::size_t filters = cfg.filters;

  std::vector<double> input(cfg.max_seq_len * cfg.dim);
  for (std::size_t t = 0; t < cfg.max_seq_len; ++t) {
    auto row = emb.row(pass.tokens[t]);
    std::copy(row.begin(), row.end(), input.begin() + t * cfg.dim);
  }
  std::size_t len = cfg.max_seq_len;
  std::size_t channels = cfg.dim;

  for (std::size_t k = 0; k < cfg.blocks; ++k) {
    const Mat& w = params.at(conv_name(k, "w"));
    const Mat& b = params.at(conv_name(k, "b"));
    Block blk;
    blk.in_len = len;
    blk.channels = channels;
    blk.conv_len = len - cfg.width + 1;
    blk.pool_len = blk.conv_len / cfg.pool;
    blk.input = std::move(input);
    blk.conv.assign(blk.conv_len * filters, 0.0);
    const std::size_t window = cfg.width * channels;
    for (std::size_t t = 0; t < blk.conv_len; ++t) {
      const double* x = blk.input.data() + t * channels;
      for (std::size_t f = 0; f < filters; ++f) {
        const double* wf = w.row(f).data();
        double z = b[f];
        for (std::size_t j = 0; j < window; ++j) z += wf[j] * x[j];
        blk.conv[t * filters + f] = z;
      }
    }
    blk.pooled.assign(blk.pool_len * filters, 0.0);
    blk.argmax.assign(blk.pool_len * filters, 0);
    for (std::size_t t = 0; t < blk.pool_len; ++t) {
      for (std::size_t f = 0; f < filters; ++f) {
        std::size_t best = t * cfg.pool;
        double best_val = std::max(0.0, blk.conv[best * filters + f]);
        for (std::size_t q = 1; q < cfg.pool; ++q) {
          const std::size_t pos = t * cfg.pool + q;
          const double val = std::max(0.0, blk.conv[pos * filters + f]);
          if (val > best_val) {
            best_val = val;
            best = pos;
          }
        }
        blk.pooled[t * filters + f] = best_val;
        blk.argmax[t * filters + f] = best;
      }
    }
    input = blk.pooled;
    len = blk.pool_len;
    channels = filters;
    pass.blocks.push_back(std::move(blk));
  }

  pass.features = std::move(input);
  const Mat& dense = params.at("dense.w");
  if (dropout && cfg.dropout > 0.0) {
    const double keep = 1.0 - cfg.dropout;
    pass.mask.resize(pass.features.size());
    for (double& m : pass.mask) m = dropout->bernoulli(keep) ? 1.0 / keep : 0.0;
  }
  double z = params.at("dense.b")[0];
  for (std::size_t j = 0; j < pass.features.size(); ++j) {
    const double v = pass.mask.empty() ? pass.features[j] : pass.features[j] * pass.mask[j];
    z += dense[j] * v;
  }
  pass.logit = z;
  return pass;
}

}  // namespace

double CnnModel::score(const text::TokenSequence& seq) const {
  return sigmoid(cnn_forward(config_, params_, seq, nullptr).logit);
}

std::vector<double> CnnModel::contributions(const text::TokenSequence& seq) const {
  std::vector<double> out;
  for (std::size_t t = 0; t < seq.length; ++t) {
    text::TokenSequence single{{seq.indices.at(t)}, 1};
    out.push_back(score(single));
  }
  return out;
}

double CnnModel::accumulate_gradients(const text::TokenSequence& seq, int label, ParamSet& grads, double scale,
                                      Rng* dropout) const {
  if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
  const CnnPass pass = cnn_forward(config_, params_, seq, dropout);
  const double p = sigmoid(pass.logit);
  const Mat& dense = params_.at("dense.w");
  double sq = 0.0;
  for (double w : dense.values()) sq += w * w;
  const double loss = bce(p, label) + 0.5 * config_.l2 * sq;
  const double dlogit = scale * (clamp_probability(p) - label);
  if (!std::isfinite(loss)) throw NumericError("non-finite loss in CNN backward");

  const std::size_t filters = config_.filters;
  Mat& d_dense = grad_entry(grads, "dense.w", dense);
  grad_entry(grads, "dense.b", params_.at("dense.b"))[0] += dlogit;
  std::vector<double> d_in(pass.features.size());
  for (std::size_t j = 0; j < pass.features.size(); ++j) {
    const double m = pass.mask.empty() ? 1.0 : pass.mask[j];
    d_dense[j] += dlogit * pass.features[j] * m + scale * config_.l2 * dense[j];
    d_in[j] = dlogit * dense[j] * m;
  }

  for (std::size_t k = config_.blocks; k-- > 0;) {
    const Block& blk = pass.blocks[k];
    const Mat& w = params_.at(conv_name(k, "w"));
    Mat& dw = grad_entry(grads, conv_name(k, "w"), w);
    Mat& db = grad_entry(grads, conv_name(k, "b"), params_.at(conv_name(k, "b")));

    // Route pooled gradients to the (first) maximal conv position; ReLU
    // passes gradient only where the pre-activation is positive.
    std::vector<double> d_conv(blk.conv_len * filters, 0.0);
    for (std::size_t t = 0; t < blk.pool_len; ++t) {
      for (std::size_t f = 0; f < filters; ++f) {
        const std::size_t pos = blk.argmax[t * filters + f];
        if (blk.conv[pos * filters + f] > 0.0) d_conv[pos * filters + f] += d_in[t * filters + f];
      }
    }

    const std::size_t window = config_.width * blk.channels;
    std::vector<double> d_input(blk.in_len * blk.channels, 0.0);
    for (std::size_t t = 0; t < blk.conv_len; ++t) {
      const double* x = blk.input.data() + t * blk.channels;
      double* dx = d_input.data() + t * blk.channels;
      for (std::size_t f = 0; f < filters; ++f) {
        const double g = d_conv[t * filters + f];
        if (g == 0.0) continue;
        db[f] += g;
        double* dwf = dw.row(f).data();
        const double* wf = w.row(f).data();
        for (std::size_t j = 0; j < window; ++j) {
          dwf[j] += g * x[j];
          dx[j] += g * wf[j];
        }
      }
    }
    d_in = std::move(d_input);
  }

  if (config_.trainable_embedding) {
    Mat& demb = grad_entry(grads, "embedding", params_.at("embedding"));
    for (std::size_t t = 0; t < config_.max_seq_len; ++t) {
      const std::size_t idx = pass.tokens[t];
      if (idx == text::kPad) continue;
      auto dst = demb.row(idx);
      for (std::size_t j = 0; j < config_.dim; ++j) dst[j] += d_in[t * config_.dim + j];
    }
  }
  return loss;
}

std::vector<std::string> CnnModel::trainable_names() const {
  std::vector<std::string> names;
  for (const auto& [name, m] : params_) {
    if (name == "embedding" && !config_.trainable_embedding) continue;
    names.push_back(name);
  }
  return names;
}

}  // namespace headpop::baselines
