#include <doctest.h>

#include <cmath>

#include "headpop/baselines.h"
#include "headpop/error.h"
#include "support.h"

using namespace headpop;
using namespace headpop::baselines;

namespace {

text::Vocabulary abc_vocab() { return text::Vocabulary({text::kPadToken, text::kUnkToken, "a", "b", "c"}, 1); }

double count_of(const BowVector& v, std::size_t index) {
  for (const auto& [i, c] : v.entries)
    if (i == index) return c;
  return 0.0;
}

BowVector dense(std::vector<double> xs) {
  BowVector v;
  v.dim = xs.size();
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (xs[i] != 0.0) v.entries.emplace_back(i, xs[i]);
  return v;
}

CnnModel tiny_cnn(std::uint64_t seed, std::size_t blocks = 1, double dropout = 0.0, bool trainable = true) {
  CnnConfig c;
  c.dim = 3;
  c.filters = 2;
  c.width = 2;
  c.blocks = blocks;
  c.max_seq_len = blocks == 1 ? 5 : 10;
  c.dropout = dropout;
  c.l2 = 1e-2;
  const text::Vocabulary v = abc_vocab();
  CnnModel m = CnnModel::initialize(c, v, embeddings::build_matrix(v, {}, 3, seed, trainable), seed + 1);
  ParamSet p = m.params();
  testing::randomize(p, seed + 2, 0.8);
  for (double& x : p.at("embedding").row(text::kPad)) x = 0.0;
  return CnnModel(c, v, p);
}

// One block: valid conv, ReLU, pool 2, then the dense head.
double oracle_cnn_score(const CnnModel& m, const text::TokenSequence& seq) {
  const CnnConfig& c = m.config();
  const ParamSet& p = m.params();
  const std::vector<std::size_t> toks = seq.padded(c.max_seq_len);
  const std::size_t conv_len = c.max_seq_len - c.width + 1;
  std::vector<std::vector<double>> relu(conv_len, std::vector<double>(c.filters));
  for (std::size_t t = 0; t < conv_len; ++t) {
    for (std::size_t f = 0; f < c.filters; ++f) {
      double z = p.at("conv1.b")[f];
      for (std::size_t j = 0; j < c.width; ++j)
        for (std::size_t k = 0; k < c.dim; ++k) z += p.at("conv1.w")(f, j * c.dim + k) * p.at("embedding")(toks[t + j], k);
      relu[t][f] = std::max(0.0, z);
    }
  }
  double a = p.at("dense.b")[0];
  for (std::size_t t = 0; t < conv_len / 2; ++t)
    for (std::size_t f = 0; f < c.filters; ++f)
      a += p.at("dense.w")[t * c.filters + f] * std::max(relu[2 * t][f], relu[2 * t + 1][f]);
  return 1.0 / (1.0 + std::exp(-a));
}

}  // namespace

TEST_CASE("bag of words counts") {
  const text::Vocabulary v = abc_vocab();
  const BowVector x = bow_featurize(text::encode("a b a", v), v);
  CHECK(x.dim == v.size());
  CHECK(count_of(x, 2) == 2.0);
  CHECK(count_of(x, 3) == 1.0);
  const BowVector unk = bow_featurize(text::encode("zzz yyy", v), v);
  CHECK(count_of(unk, text::kUnk) == 2.0);
  CHECK(count_of(bow_featurize(text::encode("a a", v), v, true), 2) == 1.0);
}

TEST_CASE("bag of words sums to the sequence length (property)") {
  const text::Vocabulary v = abc_vocab();
  Rng rng(20);
  const std::vector<std::string> words{"a", "b", "c", "q", "r"};
  for (int trial = 0; trial < 100; ++trial) {
    std::string title;
    for (std::size_t i = 0, n = 1 + rng.below(12); i < n; ++i) title += words[rng.below(words.size())] + " ";
    const text::TokenSequence seq = text::encode(title, v);
    CHECK(bow_featurize(seq, v).total() == double(seq.length));
  }
}

TEST_CASE("hinge loss") {
  CHECK(hinge_loss(1.0, 1) == 0.0);
  CHECK(hinge_loss(-1.0, 0) == 0.0);
  CHECK(hinge_loss(0.0, 1) == 1.0);
  CHECK(hinge_loss(0.5, 0) == 1.5);
  SvmParams zero;
  zero.w.assign(3, 0.0);
  const std::vector<SvmExample> data{{dense({1, 0, 2}), 1}, {dense({0, 3, 0}), 0}};
  CHECK(svm_objective(zero, data) == 1.0);
}

TEST_CASE("svm separates a linearly separable toy set") {
  std::vector<SvmExample> data;
  Rng rng(21);
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    const double x0 = rng.uniform(0.5, 2.0) * (label ? 1.0 : -1.0);
    data.push_back({dense({x0, rng.uniform(-1.0, 1.0)}), label});
  }
  SvmTrainOptions opts;
  opts.lambda = 1e-3;
  opts.epochs = 30;
  std::vector<double> objective;
  const SvmParams p = svm_train(data, opts, &objective);
  int correct = 0;
  for (const auto& ex : data) correct += svm_class(p, ex.x) == ex.label;
  CHECK(correct == 40);
  CHECK(objective.size() == 30);
}

TEST_CASE("svm objective trends downward (property)") {
  std::vector<SvmExample> data;
  Rng rng(22);
  for (int i = 0; i < 200; ++i) {
    const int label = rng.bernoulli(0.5) ? 1 : 0;
    std::vector<double> x(20, 0.0);
    for (int k = 0; k < 4; ++k) x[rng.below(20)] += 1.0;
    x[label ? 0 : 1] += rng.bernoulli(0.8) ? 1.0 : 0.0;
    data.push_back({dense(x), label});
  }
  SvmTrainOptions opts;
  opts.lambda = 1e-2;
  opts.epochs = 30;
  std::vector<double> obj;
  svm_train(data, opts, &obj);
  // Five-epoch moving averages never rise by more than a small tolerance.
  for (std::size_t e = 5; e + 5 <= obj.size(); ++e) {
    double prev = 0.0;
    double cur = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      prev += obj[e - 5 + k];
      cur += obj[e + k - 4];
    }
    CHECK(cur <= prev * 1.02);
  }
  CHECK(obj.back() < obj.front());
}

TEST_CASE("svm rejects single-class data and bad dimensions") {
  CHECK_THROWS_AS(SvmTrainer({{dense({1, 0}), 1}, {dense({0, 1}), 1}}, {}), DataError);
  SvmParams p;
  p.w = {1.0, 2.0};
  CHECK_THROWS_AS(svm_margin(p, dense({1, 2, 3})), ShapeError);
}

TEST_CASE("svm prediction at zero margin and saturation") {
  SvmParams p;
  p.w = {0.0, 0.0};
  CHECK(svm_predict(p, dense({1, 1})) == 0.5);
  CHECK(svm_class(p, dense({1, 1})) == 0);
  p.w = {100.0, 0.0};
  CHECK(svm_predict(p, dense({1, 0})) == doctest::Approx(1.0));
  CHECK(svm_class(p, dense({1, 0})) == 1);
}

TEST_CASE("bow svm model scores and contributions") {
  const text::Vocabulary v = abc_vocab();
  SvmParams p;
  p.w = {0.0, 0.0, 2.0, -1.0, 0.0};
  p.b = 0.5;
  const BowSvmModel m(v, 30, false, p);
  const text::TokenSequence seq = m.encode("a b b");
  CHECK(m.score(seq) == doctest::Approx(1.0 / (1.0 + std::exp(-(0.5 + 2.0 - 2.0)))));
  CHECK(m.predict(seq) == 1);
  const auto contrib = m.contributions(seq);
  REQUIRE(contrib.size() == 3);
  CHECK(contrib[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.5))));
  CHECK(contrib[1] == doctest::Approx(1.0 / (1.0 + std::exp(0.5))));
  CHECK_THROWS_AS(BowSvmModel(v, 30, false, SvmParams{{1.0}, 0.0, 1e-4}), ShapeError);
}

TEST_CASE("cnn stage arithmetic") {
  CnnConfig c;
  c.max_seq_len = 30;
  CHECK_THROWS_AS(cnn_stage_lengths(c), ConfigError);
  c.max_seq_len = 40;
  CHECK(cnn_stage_lengths(c) == std::vector<std::size_t>{40, 36, 18, 14, 7, 3, 1});
}

TEST_CASE("cnn with all-zero weights scores one half") {
  CnnModel m = tiny_cnn(30);
  for (auto& [name, w] : m.mutable_params())
    if (name != "embedding") w.fill(0.0);
  CHECK(m.score(m.encode("a b c")) == 0.5);
}

TEST_CASE("cnn forward matches a scalar oracle") {
  const CnnModel m = tiny_cnn(31);
  for (const char* title : {"a", "a b", "c b a q", "b b b b b b"}) {
    const text::TokenSequence seq = m.encode(title);
    CHECK(std::abs(m.score(seq) - oracle_cnn_score(m, seq)) <= 1e-12);
  }
}

TEST_CASE("cnn gradients pass a finite-difference check") {
  for (std::size_t blocks : {1, 2}) {
    const CnnModel m = tiny_cnn(32 + blocks, blocks);
    const text::TokenSequence seq = m.encode("c a b a");
    ParamSet grads;
    m.accumulate_gradients(seq, 1, grads, 1.0, nullptr);
    const LossFn fn = [&](const ParamSet& p) {
      ParamSet scratch;
      return CnnModel(m.config(), m.vocab(), p).accumulate_gradients(seq, 1, scratch, 1.0, nullptr);
    };
    CHECK(grad_check(fn, m.params(), grads) < 1e-4);
  }
}

TEST_CASE("cnn dropout is transparent at rate zero and at inference") {
  const CnnModel m = tiny_cnn(35, 1, 0.0);
  const text::TokenSequence seq = m.encode("a b c");
  Rng rng(1);
  ParamSet g1;
  ParamSet g2;
  const double with_rng = m.accumulate_gradients(seq, 0, g1, 1.0, &rng);
  const double without = m.accumulate_gradients(seq, 0, g2, 1.0, nullptr);
  CHECK(with_rng == without);
  CHECK(g1 == g2);

  const CnnModel d = tiny_cnn(35, 1, 0.5);
  CHECK(d.score(seq) == d.score(seq));
  CHECK(d.score(seq) == m.score(seq));
}

TEST_CASE("cnn contributions score each token alone") {
  const CnnModel m = tiny_cnn(36);
  const text::TokenSequence seq = m.encode("a c");
  const auto contrib = m.contributions(seq);
  REQUIRE(contrib.size() == 2);
  CHECK(contrib[1] == m.score(m.encode("c")));
}
