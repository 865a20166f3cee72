#include "headpop/numerics.h"

#include <algorithm>
#include <cmath>

#include "headpop/error.h"
#include "headpop/rng.h"

namespace headpop {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
  }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw ShapeError("matrix dimensions must be positive, got " + shape());
}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw ShapeError("matrix dimensions must be positive, got " + shape());
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix " + shape() + " needs " + std::to_string(rows * cols) +
                     " values, got " + std::to_string(data_.size()));
  }
  if (!all_finite()) throw NumericError("matrix " + shape() + " contains a non-finite value");
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Mat(r, c, std::move(data));
}

Mat Mat::column(std::span<const double> values) {
  return Mat(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Mat::shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

void Mat::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Mat::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape() + " * " + b.shape());
  }
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Mat hadamard(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "hadamard");
  Mat out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Mat sigmoid(const Mat& x) {
  Mat out = x;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

Mat tanh(const Mat& x) {
  Mat out = x;
  for (double& v : out.values()) v = std::tanh(v);
  return out;
}

ParamSet zeros_like(const ParamSet& params) {
  ParamSet out;
  for (const auto& [name, m] : params) out.emplace(name, Mat(m.rows(), m.cols()));
  return out;
}

double global_norm(const ParamSet& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double v : g.values()) sq += v * v;
  return std::sqrt(sq);
}

bool all_finite(const ParamSet& params) {
  return std::all_of(params.begin(), params.end(), [](const auto& kv) { return kv.second.all_finite(); });
}

double clip_global_norm(ParamSet& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& [name, g] : grads)
      for (double& v : g.values()) v *= scale;
  }
  return norm;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  if (!(state.learning_rate >= 0.0)) throw ConfigError("adam: learning rate must be non-negative");
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw ShapeError("adam: gradient for unknown parameter '" + name + "'");
    if (it->second.rows() != g.rows() || it->second.cols() != g.cols()) {
      throw ShapeError("adam: gradient for '" + name + "' has shape " + g.shape() +
                       ", parameter has " + it->second.shape());
    }
    if (!g.all_finite()) throw NumericError("adam: non-finite gradient for '" + name + "'");
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (const auto& [name, g] : grads) {
    Mat& p = params.at(name);
    auto m_it = state.first_moment.try_emplace(name, g.rows(), g.cols()).first;
    auto v_it = state.second_moment.try_emplace(name, g.rows(), g.cols()).first;
    Mat& m = m_it->second;
    Mat& v = v_it->second;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gi = g[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

GradCheckResult grad_check_detailed(const LossFn& loss, const ParamSet& params,
                                    const ParamSet& analytic, const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ConfigError("grad_check: step must be positive");
  GradCheckResult result;
  ParamSet probe = params;
  Rng rng(options.seed);

  for (const auto& [name, ana] : analytic) {
    auto it = probe.find(name);
    if (it == probe.end()) throw ShapeError("grad_check: no parameter named '" + name + "'");
    Mat& p = it->second;
    if (p.size() != ana.size()) throw ShapeError("grad_check: shape mismatch for '" + name + "'");

    std::vector<std::size_t> coords(p.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (options.max_coords_per_param != 0 && coords.size() > options.max_coords_per_param) {
      rng.shuffle(coords);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }

    for (std::size_t i : coords) {
      const double original = p[i];
      p[i] = original + options.step;
      const double up = loss(probe);
      p[i] = original - options.step;
      const double down = loss(probe);
      p[i] = original;

      const double numeric = (up - down) / (2.0 * options.step);
      const double denom = std::max({std::abs(numeric), std::abs(ana[i]), 1e-8});
      const double rel = std::abs(numeric - ana[i]) / denom;
      ++result.checked;
      if (result.checked == 1 || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = name;
        result.worst_index = i;
        result.worst_numeric = numeric;
        result.worst_analytic = ana[i];
      }
    }
  }
  return result;
}

double grad_check(const LossFn& loss, const ParamSet& params, const ParamSet& analytic, double step) {
  GradCheckOptions options;
  options.step = step;
  return grad_check_detailed(loss, params, analytic, options).max_rel_error;
}

}  // namespace headpop
