#include "headpop/recurrent.h"

#include <cmath>

#include "headpop/error.h"

namespace headpop::recurrent {

namespace {

constexpr const char* kGateNames[4] = {"i", "f", "o", "c"};

std::string param_name(std::string_view prefix, const char* kind, const char* gate) {
  return std::string(prefix) + "." + kind + "_" + gate;
}

const Mat& require(const ParamSet& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw ShapeError("missing parameter '" + name + "'");
  return it->second;
}

Mat& grad_entry(ParamSet& grads, const std::string& name, const Mat& like) {
  return grads.try_emplace(name, like.rows(), like.cols()).first->second;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

// One cell application on zin = [h_prev, x]. Writes the activated gates
// (i, f, o, c~ as four H blocks), the new cell and hidden state.
void cell_step(const LstmParams& p, const double* zin, const double* c_prev, double* gates, double* c,
               double* tc, double* h) {
  const std::size_t hidden = p.hidden();
  const std::size_t width = p.w_i.cols();
  for (std::size_t r = 0; r < hidden; ++r) {
    const double ig = sigmoid(p.b_i[r] + dot(p.w_i.row(r).data(), zin, width));
    const double fg = sigmoid(p.b_f[r] + dot(p.w_f.row(r).data(), zin, width));
    const double og = sigmoid(p.b_o[r] + dot(p.w_o.row(r).data(), zin, width));
    const double cand = std::tanh(p.b_c[r] + dot(p.w_c.row(r).data(), zin, width));
    gates[r] = ig;
    gates[hidden + r] = fg;
    gates[2 * hidden + r] = og;
    gates[3 * hidden + r] = cand;
    c[r] = fg * c_prev[r] + ig * cand;
    tc[r] = std::tanh(c[r]);
    h[r] = og * tc[r];
  }
}

// Activations of one chain, indexed by chain step s. When `reversed`, step s
// consumes input row n-1-s.
struct Chain {
  std::size_t n = 0;
  std::size_t hidden = 0;
  std::size_t width = 0;
  bool reversed = false;
  std::vector<double> zin;
  std::vector<double> gates;
  std::vector<double> c;
  std::vector<double> tc;
  std::vector<double> h;

  const double* h_at(std::size_t s) const { return h.data() + s * hidden; }
  std::size_t row_of(std::size_t s) const { return reversed ? n - 1 - s : s; }
};

void run_chain(const LstmParams& p, const Mat& xs, bool reversed, Chain& chain) {
  const std::size_t hidden = p.hidden();
  const std::size_t d = p.input();
  if (xs.empty() || xs.rows() == 0) throw DataError("cannot encode an empty sequence");
  if (xs.cols() != d) {
    throw ShapeError("input width " + std::to_string(xs.cols()) + " does not match LSTM input " +
                     std::to_string(d));
  }
  chain.n = xs.rows();
  chain.hidden = hidden;
  chain.width = hidden + d;
  chain.reversed = reversed;
  chain.zin.assign(chain.n * chain.width, 0.0);
  chain.gates.assign(chain.n * 4 * hidden, 0.0);
  chain.c.assign(chain.n * hidden, 0.0);
  chain.tc.assign(chain.n * hidden, 0.0);
  chain.h.assign(chain.n * hidden, 0.0);

  const std::vector<double> zeros(hidden, 0.0);
  for (std::size_t s = 0; s < chain.n; ++s) {
    double* zin = chain.zin.data() + s * chain.width;
    const double* h_prev = s == 0 ? zeros.data() : chain.h.data() + (s - 1) * hidden;
    const double* c_prev = s == 0 ? zeros.data() : chain.c.data() + (s - 1) * hidden;
    std::copy(h_prev, h_prev + hidden, zin);
    auto x = xs.row(chain.row_of(s));
    std::copy(x.begin(), x.end(), zin + hidden);
    cell_step(p, zin, c_prev, chain.gates.data() + s * 4 * hidden, chain.c.data() + s * hidden,
              chain.tc.data() + s * hidden, chain.h.data() + s * hidden);
  }
}

// BPTT through one chain. dh_ext holds dL/dh for each chain step (n x H);
// parameter gradients are added under `prefix`, input gradients added to
// dxs at the input row of each step.
void backprop_chain(const LstmParams& p, std::string_view prefix, const Chain& chain,
                    const std::vector<double>& dh_ext, ParamSet& grads, Mat* dxs) {
  const std::size_t hidden = chain.hidden;
  const std::size_t width = chain.width;
  Mat* dw[4];
  Mat* db[4];
  const Mat* w[4] = {&p.w_i, &p.w_f, &p.w_o, &p.w_c};
  const Mat* b[4] = {&p.b_i, &p.b_f, &p.b_o, &p.b_c};
  for (int k = 0; k < 4; ++k) {
    dw[k] = &grad_entry(grads, param_name(prefix, "W", kGateNames[k]), *w[k]);
    db[k] = &grad_entry(grads, param_name(prefix, "b", kGateNames[k]), *b[k]);
  }

  std::vector<double> dh_next(hidden, 0.0);
  std::vector<double> dc_next(hidden, 0.0);
  std::vector<double> dc_prev(hidden, 0.0);
  std::vector<double> dz(4 * hidden, 0.0);
  std::vector<double> dzin(width, 0.0);
  const std::vector<double> zeros(hidden, 0.0);

  for (std::size_t s = chain.n; s-- > 0;) {
    const double* gates = chain.gates.data() + s * 4 * hidden;
    const double* tc = chain.tc.data() + s * hidden;
    const double* c_prev = s == 0 ? zeros.data() : chain.c.data() + (s - 1) * hidden;
    const double* zin = chain.zin.data() + s * width;

    for (std::size_t r = 0; r < hidden; ++r) {
      const double ig = gates[r];
      const double fg = gates[hidden + r];
      const double og = gates[2 * hidden + r];
      const double cand = gates[3 * hidden + r];
      const double dh = dh_ext[s * hidden + r] + dh_next[r];
      const double d_o = dh * tc[r];
      const double dc = dc_next[r] + dh * og * (1.0 - tc[r] * tc[r]);
      dc_prev[r] = dc * fg;
      dz[r] = dc * cand * ig * (1.0 - ig);
      dz[hidden + r] = dc * c_prev[r] * fg * (1.0 - fg);
      dz[2 * hidden + r] = d_o * og * (1.0 - og);
      dz[3 * hidden + r] = dc * ig * (1.0 - cand * cand);
    }

    std::fill(dzin.begin(), dzin.end(), 0.0);
    for (int k = 0; k < 4; ++k) {
      for (std::size_t r = 0; r < hidden; ++r) {
        const double g = dz[k * hidden + r];
        if (g == 0.0) continue;
        (*db[k])[r] += g;
        double* dwr = dw[k]->row(r).data();
        const double* wr = w[k]->row(r).data();
        for (std::size_t j = 0; j < width; ++j) {
          dwr[j] += g * zin[j];
          dzin[j] += g * wr[j];
        }
      }
    }

    std::copy(dzin.begin(), dzin.begin() + hidden, dh_next.begin());
    if (dxs) {
      auto dx = dxs->row(chain.row_of(s));
      for (std::size_t j = 0; j < dx.size(); ++j) dx[j] += dzin[hidden + j];
    }
    dc_next.swap(dc_prev);
  }
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

LstmParams lstm_view(const ParamSet& params, std::string_view prefix) {
  LstmParams p{require(params, param_name(prefix, "W", "i")), require(params, param_name(prefix, "W", "f")),
               require(params, param_name(prefix, "W", "o")), require(params, param_name(prefix, "W", "c")),
               require(params, param_name(prefix, "b", "i")), require(params, param_name(prefix, "b", "f")),
               require(params, param_name(prefix, "b", "o")), require(params, param_name(prefix, "b", "c"))};
  const std::size_t hidden = p.w_i.rows();
  const std::size_t width = p.w_i.cols();
  if (hidden == 0 || width <= hidden) throw ShapeError(std::string(prefix) + ".W_i has invalid shape " + p.w_i.shape());
  for (const Mat* m : {&p.w_f, &p.w_o, &p.w_c}) {
    if (m->rows() != hidden || m->cols() != width) {
      throw ShapeError(std::string(prefix) + " gate weights disagree: " + p.w_i.shape() + " vs " + m->shape());
    }
  }
  for (const Mat* m : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) {
    if (m->rows() != hidden || m->cols() != 1) {
      throw ShapeError(std::string(prefix) + " bias has shape " + m->shape() + ", expected " +
                       std::to_string(hidden) + "x1");
    }
  }
  return p;
}

void init_lstm(ParamSet& params, std::string_view prefix, std::size_t hidden, std::size_t input, Rng& rng) {
  const double limit = glorot_limit(hidden + input, hidden);
  for (const char* gate : kGateNames) {
    Mat w(hidden, hidden + input);
    for (double& v : w.values()) v = rng.uniform(-limit, limit);
    params[param_name(prefix, "W", gate)] = std::move(w);
    Mat b(hidden, 1);
    if (std::string_view(gate) == "f") b.fill(1.0);
    params[param_name(prefix, "b", gate)] = std::move(b);
  }
}

LstmState lstm_cell(const LstmParams& p, std::span<const double> x, const LstmState& prev) {
  const std::size_t hidden = p.hidden();
  if (x.size() != p.input()) {
    throw ShapeError("lstm_cell: input has " + std::to_string(x.size()) + " components, expected " +
                     std::to_string(p.input()));
  }
  if (prev.h.size() != hidden || prev.c.size() != hidden) throw ShapeError("lstm_cell: state size mismatch");
  std::vector<double> zin(prev.h);
  zin.insert(zin.end(), x.begin(), x.end());
  std::vector<double> gates(4 * hidden);
  std::vector<double> tc(hidden);
  LstmState next = LstmState::zeros(hidden);
  cell_step(p, zin.data(), prev.c.data(), gates.data(), next.c.data(), tc.data(), next.h.data());
  return next;
}

std::vector<LstmState> encode_forward(const LstmParams& p, const Mat& xs) {
  Chain chain;
  run_chain(p, xs, false, chain);
  std::vector<LstmState> out;
  out.reserve(chain.n);
  for (std::size_t s = 0; s < chain.n; ++s) {
    const double* h = chain.h.data() + s * chain.hidden;
    const double* c = chain.c.data() + s * chain.hidden;
    out.push_back({std::vector<double>(h, h + chain.hidden), std::vector<double>(c, c + chain.hidden)});
  }
  return out;
}

RecurrentModel::RecurrentModel(RecurrentConfig config, text::Vocabulary vocab, ParamSet params)
    : config_(config), vocab_(std::move(vocab)), params_(std::move(params)) {
  validate();
}

void RecurrentModel::validate() const {
  if (config_.hidden == 0 || config_.dim == 0 || config_.max_seq_len == 0) {
    throw ConfigError("recurrent model needs positive hidden, dim and max_seq_len");
  }
  const Mat& emb = require(params_, "embedding");
  if (emb.rows() != vocab_.size() || emb.cols() != config_.dim) {
    throw ShapeError("embedding is " + emb.shape() + ", expected " + std::to_string(vocab_.size()) + "x" +
                     std::to_string(config_.dim));
  }
  const auto check_dir = [&](const char* prefix) {
    LstmParams p = lstm_view(params_, prefix);
    if (p.hidden() != config_.hidden || p.input() != config_.dim) {
      throw ShapeError(std::string(prefix) + " weights are " + p.w_i.shape() + ", expected " +
                       std::to_string(config_.hidden) + "x" + std::to_string(config_.hidden + config_.dim));
    }
  };
  check_dir("fwd");
  if (config_.bidirectional) check_dir("bwd");
  const std::size_t features = config_.bidirectional ? 2 * config_.hidden : config_.hidden;
  const Mat& w = require(params_, "head.w");
  const Mat& b = require(params_, "head.b");
  if (w.rows() != 1 || w.cols() != features) {
    throw ShapeError("head.w is " + w.shape() + ", expected 1x" + std::to_string(features));
  }
  if (b.rows() != 1 || b.cols() != 1) throw ShapeError("head.b is " + b.shape() + ", expected 1x1");
  const std::size_t expected = (config_.bidirectional ? 16 : 8) + 3;
  if (params_.size() != expected) throw ShapeError("unexpected parameters in recurrent model");
}

RecurrentModel RecurrentModel::initialize(const RecurrentConfig& config, text::Vocabulary vocab,
                                          embeddings::EmbeddingMatrix embedding, std::uint64_t seed) {
  if (embedding.dim() != config.dim) throw ConfigError("embedding dimension does not match config");
  RecurrentConfig cfg = config;
  cfg.trainable_embedding = embedding.trainable;
  cfg.coverage = embedding.coverage;
  Rng rng(seed);
  ParamSet params;
  params["embedding"] = std::move(embedding.matrix);
  init_lstm(params, "fwd", cfg.hidden, cfg.dim, rng);
  if (cfg.bidirectional) init_lstm(params, "bwd", cfg.hidden, cfg.dim, rng);
  const std::size_t features = cfg.bidirectional ? 2 * cfg.hidden : cfg.hidden;
  Mat head(1, features);
  const double limit = glorot_limit(features, 1);
  for (double& v : head.values()) v = rng.uniform(-limit, limit);
  params["head.w"] = std::move(head);
  params["head.b"] = Mat(1, 1);
  return RecurrentModel(cfg, std::move(vocab), std::move(params));
}

nlohmann::json RecurrentModel::config_json() const {
  return {{"bidirectional", config_.bidirectional},
          {"hidden", config_.hidden},
          {"dim", config_.dim},
          {"max_seq_len", config_.max_seq_len},
          {"trainable_embedding", config_.trainable_embedding},
          {"coverage", config_.coverage}};
}

RecurrentConfig RecurrentModel::config_from_json(const nlohmann::json& j) {
  RecurrentConfig c;
  c.bidirectional = j.at("bidirectional").get<bool>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.dim = j.at("dim").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.trainable_embedding = j.at("trainable_embedding").get<bool>();
  c.coverage = j.value("coverage", 0.0);
  return c;
}

namespace {

struct Encoded {
  Mat xs;
  Chain fwd;
  Chain bwd;
};

Encoded run(const RecurrentModel& model, const text::TokenSequence& seq) {
  Encoded e;
  e.xs = embeddings::lookup(model.embedding(), seq);
  run_chain(model.forward_params(), e.xs, false, e.fwd);
  if (model.config().bidirectional) run_chain(model.backward_params(), e.xs, true, e.bwd);
  return e;
}

// Head input at position t: [->h_t, <-h_t], or ->h_t alone.
double head_logit(const RecurrentModel& model, const Encoded& e, std::size_t t_fwd, std::size_t t_bwd) {
  const std::size_t hidden = model.config().hidden;
  const double* w = model.head_weight().values().data();
  double z = model.head_bias() + dot(w, e.fwd.h_at(t_fwd), hidden);
  if (model.config().bidirectional) z += dot(w + hidden, e.bwd.h_at(e.bwd.n - 1 - t_bwd), hidden);
  return z;
}

}  // namespace

double RecurrentModel::score(const text::TokenSequence& seq) const {
  Encoded e = run(*this, seq);
  const std::size_t n = e.xs.rows();
  // ->h_n and <-h_1 are the last states computed by their chains.
  return sigmoid(head_logit(*this, e, n - 1, 0));
}

std::vector<double> RecurrentModel::contributions(const text::TokenSequence& seq) const {
  Encoded e = run(*this, seq);
  std::vector<double> out(e.xs.rows());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = sigmoid(head_logit(*this, e, t, t));
  return out;
}

double RecurrentModel::accumulate_gradients(const text::TokenSequence& seq, int label, ParamSet& grads,
                                            double scale, Rng*) const {
  if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
  Encoded e = run(*this, seq);
  const std::size_t n = e.xs.rows();
  const std::size_t hidden = config_.hidden;
  const double p = sigmoid(head_logit(*this, e, n - 1, 0));
  const double loss = bce(p, label);
  const double dlogit = scale * (clamp_probability(p) - label);
  if (!std::isfinite(loss) || !std::isfinite(dlogit)) throw NumericError("non-finite loss in recurrent backward");

  Mat& dw = grad_entry(grads, "head.w", head_weight());
  Mat& db = grad_entry(grads, "head.b", params_.at("head.b"));
  db[0] += dlogit;
  const double* w = head_weight().values().data();

  Mat dxs(n, config_.dim);
  std::vector<double> dh(n * hidden, 0.0);
  const double* h_last = e.fwd.h_at(n - 1);
  for (std::size_t r = 0; r < hidden; ++r) {
    dw[r] += dlogit * h_last[r];
    dh[(n - 1) * hidden + r] = dlogit * w[r];
  }
  backprop_chain(forward_params(), "fwd", e.fwd, dh, grads, &dxs);

  if (config_.bidirectional) {
    std::fill(dh.begin(), dh.end(), 0.0);
    const double* h_first = e.bwd.h_at(n - 1);
    for (std::size_t r = 0; r < hidden; ++r) {
      dw[hidden + r] += dlogit * h_first[r];
      dh[(n - 1) * hidden + r] = dlogit * w[hidden + r];
    }
    backprop_chain(backward_params(), "bwd", e.bwd, dh, grads, &dxs);
  }

  if (config_.trainable_embedding) {
    Mat& demb = grad_entry(grads, "embedding", embedding());
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t idx = seq.indices[t];
      if (idx == text::kPad) continue;
      auto src = dxs.row(t);
      auto dst = demb.row(idx);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  }
  return loss;
}

std::vector<std::string> RecurrentModel::trainable_names() const {
  std::vector<std::string> names;
  for (const auto& [name, m] : params_) {
    if (name == "embedding" && !config_.trainable_embedding) continue;
    names.push_back(name);
  }
  return names;
}

std::vector<BiHidden> encode_bidirectional(const RecurrentModel& model, const Mat& xs) {
  if (!model.config().bidirectional) throw ConfigError("encode_bidirectional needs a bidirectional model");
  Chain fwd;
  Chain bwd;
  run_chain(model.forward_params(), xs, false, fwd);
  run_chain(model.backward_params(), xs, true, bwd);
  const std::size_t hidden = fwd.hidden;
  std::vector<BiHidden> out(fwd.n);
  for (std::size_t t = 0; t < fwd.n; ++t) {
    const double* hf = fwd.h_at(t);
    const double* hb = bwd.h_at(fwd.n - 1 - t);
    out[t].forward.assign(hf, hf + hidden);
    out[t].backward.assign(hb, hb + hidden);
  }
  return out;
}

double score(const RecurrentModel& model, const text::TokenSequence& seq) { return model.score(seq); }

Introspection introspect(const RecurrentModel& model, const text::TokenSequence& seq) {
  Introspection out;
  const std::vector<double> values = model.contributions(seq);
  const std::vector<std::string> tokens = text::decode(seq, model.vocab());
  out.words.reserve(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) out.words.push_back({tokens[t], values[t]});
  out.fused_score = model.score(seq);
  return out;
}

std::pair<double, ParamSet> backward(const RecurrentModel& model, const text::TokenSequence& seq, int label) {
  ParamSet grads;
  const double loss = model.accumulate_gradients(seq, label, grads, 1.0, nullptr);
  if (!all_finite(grads)) throw NumericError("non-finite gradient in recurrent backward");
  return {loss, std::move(grads)};
}

}  // namespace headpop::recurrent
