#include <doctest.h>

#include "headpop/baselines.h"
#include "headpop/error.h"
#include "headpop/io.h"
#include "headpop/model_io.h"
#include "headpop/recurrent.h"
#include "support.h"

using namespace headpop;

namespace {

text::Vocabulary vocab() { return text::Vocabulary({text::kPadToken, text::kUnkToken, "red", "green", "blue"}, 1); }

recurrent::RecurrentModel bilstm(std::uint64_t seed) {
  recurrent::RecurrentConfig c;
  c.hidden = 4;
  c.dim = 3;
  c.trainable_embedding = true;
  auto m = recurrent::RecurrentModel::initialize(c, vocab(), embeddings::build_matrix(vocab(), {}, 3, seed, true), seed);
  ParamSet p = m.params();
  testing::randomize(p, seed + 1, 1.0);
  for (double& x : p.at("embedding").row(text::kPad)) x = 0.0;
  return recurrent::RecurrentModel(m.config(), vocab(), p);
}

}  // namespace

TEST_CASE("save and load reproduce scores bit for bit") {
  testing::TempDir dir("model_io_roundtrip");
  const auto m = bilstm(1);
  model_io::save_model(m, dir.file("m.json"));
  const auto loaded = model_io::load_model(dir.file("m.json"));
  CHECK(loaded->kind() == ModelKind::bilstm);
  CHECK(loaded->params() == m.params());
  CHECK(loaded->vocab() == m.vocab());
  for (const char* t : {"red", "green blue red", "unknown words here"}) {
    CHECK(loaded->score(m.encode(t)) == m.score(m.encode(t)));
  }
  CHECK(model_io::serialize(*loaded) == model_io::serialize(m));
  const auto r = model_io::load_recurrent(dir.file("m.json"));
  CHECK(r.config().hidden == 4);
}

TEST_CASE("every model kind round-trips") {
  const text::Vocabulary v = vocab();
  baselines::SvmParams sp;
  sp.w = {0.0, 0.1, -0.2, 0.3, 1e-300};
  sp.b = -0.125;
  const baselines::BowSvmModel svm(v, 30, true, sp);
  baselines::CnnConfig cc;
  cc.dim = 3;
  cc.filters = 2;
  cc.width = 2;
  cc.blocks = 1;
  cc.max_seq_len = 6;
  const auto cnn = baselines::CnnModel::initialize(cc, v, embeddings::build_matrix(v, {}, 3, 4, false), 5);
  recurrent::RecurrentConfig lc;
  lc.bidirectional = false;
  lc.hidden = 2;
  lc.dim = 3;
  const auto lstm = recurrent::RecurrentModel::initialize(lc, v, embeddings::build_matrix(v, {}, 3, 6, false), 7);
  const Classifier* models[] = {&svm, &cnn, &lstm};
  for (const Classifier* m : models) {
    const auto back = model_io::deserialize(model_io::serialize(*m));
    CHECK(back->kind() == m->kind());
    CHECK(back->params() == m->params());
    CHECK(back->config_json() == m->config_json());
    CHECK(back->score(m->encode("green red")) == m->score(m->encode("green red")));
  }
}

TEST_CASE("format errors are distinct") {
  const std::string good = model_io::serialize(bilstm(2));
  auto j = nlohmann::json::parse(good);
  j["version"] = "99";
  CHECK_THROWS_AS(model_io::deserialize(j.dump()), FormatVersionError);
  j["version"] = 99;
  CHECK_THROWS_AS(model_io::deserialize(j.dump()), FormatVersionError);
  CHECK_THROWS_AS(model_io::deserialize(good.substr(0, good.size() / 2)), TruncatedFileError);

  auto bad = nlohmann::json::parse(good);
  bad["params"]["head.w"]["cols"] = 3;
  CHECK_THROWS_AS(model_io::deserialize(bad.dump()), ShapeError);
  CHECK_THROWS_AS(model_io::load_model("/nonexistent/model.json"), IoError);
}

TEST_CASE("save is atomic and leaves no temp file") {
  testing::TempDir dir("model_io_atomic");
  const auto m = bilstm(3);
  model_io::save_model(m, dir.file("m.json"));
  model_io::save_model(m, dir.file("m.json"));
  CHECK_FALSE(std::filesystem::exists(dir.file("m.json.tmp")));
  CHECK(io::read_file(dir.file("m.json")) == model_io::serialize(m));
}
