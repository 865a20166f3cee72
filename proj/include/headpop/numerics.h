#ifndef HEADPOP_NUMERICS_H
#define HEADPOP_NUMERICS_H

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace headpop {

// Dense row-major matrix of doubles. Construction rejects non-finite entries
// and zero dimensions.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Mat column(std::span<const double> values);
  static Mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::string shape() const;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Mat& a, const Mat& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
Mat hadamard(const Mat& a, const Mat& b);
Mat sigmoid(const Mat& x);
Mat tanh(const Mat& x);

double sigmoid(double x);

// Named parameters, iterated in name order.
using ParamSet = std::map<std::string, Mat>;

ParamSet zeros_like(const ParamSet& params);
double global_norm(const ParamSet& grads);
bool all_finite(const ParamSet& params);

// Rescales grads so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_global_norm(ParamSet& grads, double max_norm);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  ParamSet first_moment;
  ParamSet second_moment;
};

// One bias-corrected Adam update for every parameter present in `grads`.
// Parameters without a gradient entry are left untouched. Throws
// NumericError (before mutating anything) on a non-finite gradient.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state);

struct GradCheckOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise a seeded sample per parameter.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_numeric = 0.0;
  double worst_analytic = 0.0;
  std::size_t checked = 0;
};

using LossFn = std::function<double(const ParamSet&)>;

// Central differences over the coordinates of every parameter in `analytic`;
// relative error is |num - ana| / max(|num|, |ana|, 1e-8).
GradCheckResult grad_check_detailed(const LossFn& loss, const ParamSet& params,
                                    const ParamSet& analytic, const GradCheckOptions& options = {});

double grad_check(const LossFn& loss, const ParamSet& params, const ParamSet& analytic,
                  double step = 1e-5);

}  // namespace headpop

#endif  // HEADPOP_NUMERICS_H
