#include <doctest.h>

#include <cmath>

#include "headpop/error.h"
#include "headpop/numerics.h"
#include "headpop/rng.h"
#include "support.h"

using namespace headpop;

TEST_CASE("matmul of 2x2 matrices") {
  const Mat a = Mat::from_rows({{1, 2}, {3, 4}});
  const Mat b = Mat::from_rows({{5, 6}, {7, 8}});
  CHECK(matmul(a, b) == Mat::from_rows({{19, 22}, {43, 50}}));
}

TEST_CASE("matmul by identity returns the input") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t r = 1 + rng.below(6);
    const std::size_t c = 1 + rng.below(6);
    const Mat a = testing::random_mat(r, c, rng);
    CHECK(matmul(a, Mat::identity(c)) == a);
  }
}

TEST_CASE("matmul agrees with a naive triple loop") {
  Rng rng(2);
  const Mat a = testing::random_mat(3, 4, rng);
  const Mat b = testing::random_mat(4, 2, rng);
  const Mat c = matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      CHECK(std::abs(c(i, j) - s) <= 1e-12);
    }
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  try {
    matmul(Mat(2, 3), Mat(2, 3));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    CHECK(what.find("2x3") != std::string::npos);
  }
}

TEST_CASE("Mat rejects zero dimensions, wrong sizes and non-finite data") {
  CHECK_THROWS_AS(Mat(0, 3), ShapeError);
  CHECK_THROWS_AS(Mat(2, 2, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(Mat(1, 2, {1.0, NAN}), NumericError);
}

TEST_CASE("transpose swaps indices") {
  const Mat a = Mat::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Mat t = transpose(a);
  REQUIRE(t.rows() == 3);
  CHECK(t(2, 1) == 6);
  CHECK(transpose(t) == a);
}

TEST_CASE("elementwise activations") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(headpop::tanh(Mat(1, 1))[0] == 0.0);
  CHECK(hadamard(Mat::from_rows({{1, 2}}), Mat::from_rows({{3, 4}})) == Mat::from_rows({{3, 8}}));
  CHECK_THROWS_AS(hadamard(Mat(1, 2), Mat(2, 1)), ShapeError);
  const Mat s = sigmoid(Mat::from_rows({{0, 1e3, -1e3}}));
  CHECK(s[0] == 0.5);
  CHECK(s.all_finite());
}

TEST_CASE("adam first step on a scalar") {
  ParamSet p{{"x", Mat(1, 1, {1.0})}};
  AdamState st;
  adam_step(p, {{"x", Mat(1, 1, {2.0})}}, st);
  CHECK(p.at("x")[0] == doctest::Approx(1.0 - 0.001 * 2.0 / (2.0 + 1e-8)).epsilon(1e-15));
  CHECK(st.step == 1);
}

TEST_CASE("adam with a zero gradient leaves the parameter unchanged") {
  ParamSet p{{"x", Mat(1, 1, {0.3})}};
  AdamState st;
  adam_step(p, {{"x", Mat(1, 1, {0.0})}}, st);
  CHECK(p.at("x")[0] == 0.3);
}

TEST_CASE("adam two steps match the unrolled recurrence") {
  const double g1 = 0.7;
  const double g2 = -1.3;
  ParamSet p{{"x", Mat(1, 1, {0.5})}};
  AdamState st;
  st.learning_rate = 0.01;
  adam_step(p, {{"x", Mat(1, 1, {g1})}}, st);
  adam_step(p, {{"x", Mat(1, 1, {g2})}}, st);

  const double b1 = 0.9;
  const double b2 = 0.999;
  double m = (1 - b1) * g1;
  double v = (1 - b2) * g1 * g1;
  double x = 0.5 - 0.01 * (m / (1 - b1)) / (std::sqrt(v / (1 - b2)) + 1e-8);
  m = b1 * m + (1 - b1) * g2;
  v = b2 * v + (1 - b2) * g2 * g2;
  x -= 0.01 * (m / (1 - b1 * b1)) / (std::sqrt(v / (1 - b2 * b2)) + 1e-8);
  CHECK(std::abs(p.at("x")[0] - x) <= 1e-12);
}

TEST_CASE("adam with zero learning rate is the identity (property)") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ParamSet p{{"a", testing::random_mat(3, 2, rng, 5.0)}, {"b", testing::random_mat(1, 4, rng, 5.0)}};
    const ParamSet before = p;
    AdamState st;
    st.learning_rate = 0.0;
    for (int s = 0; s < 3; ++s) {
      adam_step(p, {{"a", testing::random_mat(3, 2, rng, 100.0)}, {"b", testing::random_mat(1, 4, rng, 1e-6)}}, st);
    }
    CHECK(p == before);
  }
}

TEST_CASE("adam keeps finite parameters finite (property)") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    ParamSet p{{"a", testing::random_mat(2, 2, rng, 1e3)}};
    AdamState st;
    st.learning_rate = rng.uniform(0.0, 10.0);
    for (int s = 0; s < 5; ++s) {
      const double scale = std::pow(10.0, rng.uniform(-12.0, 12.0));
      adam_step(p, {{"a", testing::random_mat(2, 2, rng, scale)}}, st);
      CHECK(all_finite(p));
    }
  }
}

TEST_CASE("adam rejects a non-finite gradient before touching parameters") {
  ParamSet p{{"a", Mat(1, 2, {1.0, 2.0})}, {"b", Mat(1, 1, {3.0})}};
  const ParamSet before = p;
  ParamSet g{{"a", Mat(1, 2)}, {"b", Mat(1, 1)}};
  g.at("b")[0] = INFINITY;
  AdamState st;
  CHECK_THROWS_AS(adam_step(p, g, st), NumericError);
  CHECK(p == before);
  CHECK(st.step == 0);
}

TEST_CASE("adam updates only parameters that have gradients") {
  ParamSet p{{"a", Mat(1, 1, {1.0})}, {"frozen", Mat(1, 1, {2.0})}};
  AdamState st;
  adam_step(p, {{"a", Mat(1, 1, {1.0})}}, st);
  CHECK(p.at("frozen")[0] == 2.0);
  CHECK(p.at("a")[0] < 1.0);
}

TEST_CASE("global norm clipping") {
  ParamSet g{{"a", Mat(1, 2, {3.0, 0.0})}, {"b", Mat(1, 1, {4.0})}};
  CHECK(global_norm(g) == 5.0);
  CHECK(clip_global_norm(g, 1.0) == 5.0);
  CHECK(global_norm(g) == doctest::Approx(1.0));
  CHECK(g.at("a")[0] == doctest::Approx(0.6));
  ParamSet small{{"a", Mat(1, 1, {0.5})}};
  clip_global_norm(small, 1.0);
  CHECK(small.at("a")[0] == 0.5);
}

TEST_CASE("grad_check on a quadratic") {
  const LossFn f = [](const ParamSet& p) { return p.at("t")[0] * p.at("t")[0]; };
  const ParamSet params{{"t", Mat(1, 1, {3.0})}};
  CHECK(grad_check(f, params, {{"t", Mat(1, 1, {6.0})}}) < 1e-8);
  CHECK(grad_check(f, params, {{"t", Mat(1, 1, {12.0})}}) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("grad_check reports the worst coordinate") {
  const LossFn f = [](const ParamSet& p) { return p.at("a")[0] * 2.0 + p.at("a")[1] * p.at("a")[1]; };
  const ParamSet params{{"a", Mat(1, 2, {1.0, 1.0})}};
  const GradCheckResult r = grad_check_detailed(f, params, {{"a", Mat(1, 2, {2.0, 3.0})}});
  CHECK(r.checked == 2);
  CHECK(r.worst_param == "a");
  CHECK(r.worst_index == 1);
  CHECK(r.worst_numeric == doctest::Approx(2.0));
}

TEST_CASE("rng streams are reproducible and bounded") {
  Rng a(7);
  Rng b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(8);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}
