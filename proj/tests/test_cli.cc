#include <doctest.h>

#include <sstream>

#include "headpop/cli.h"
#include "headpop/corpus.h"
#include "headpop/io.h"
#include "headpop/model_io.h"
#include "headpop/synthetic.h"
#include "support.h"

using namespace headpop;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "headpop");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("label applies the per-group median") {
  testing::TempDir dir("cli_label");
  io::write_file_atomic(dir.file("raw.jsonl"),
                        R"({"id": "a", "title": "one", "metric": 10, "group": "g1"}
{"id": "b", "title": "two", "metric": 30, "group": "g1"}
{"id": "c", "title": "three", "metric": 5, "group": "g2"}
{"id": "d", "title": "four", "metric": 5, "group": "g2"}
)");
  const Run r = run({"label", "--in", dir.file("raw.jsonl"), "--out", dir.file("labeled.jsonl")});
  REQUIRE(r.code == cli::kOk);
  const auto labeled = corpus::load_labeled(dir.file("labeled.jsonl"));
  REQUIRE(labeled.size() == 4);
  // g1 median 20, g2 median 5 (ties stay unpopular).
  CHECK(labeled[0].label == 0);
  CHECK(labeled[1].label == 1);
  CHECK(labeled[2].label == 0);
  CHECK(labeled[3].label == 0);
}

TEST_CASE("train, eval, predict and introspect") {
  testing::TempDir dir("cli_train");
  io::write_file_atomic(dir.file("data.jsonl"), corpus::to_jsonl(synthetic::marker_corpus(60, 9)));
  const Run t = run({"train", "--data", dir.file("data.jsonl"), "--out", dir.file("m.json"), "--model-kind", "bilstm",
                     "--h", "32", "--d", "8", "--epochs", "2", "--quiet"});
  REQUIRE(t.code == cli::kOk);
  const json report = json::parse(t.out);
  CHECK(report["fit"]["epochs"].size() == 2);
  CHECK(report["config"]["hidden"] == 32);
  CHECK(report.contains("test"));
  CHECK(model_io::load_model(dir.file("m.json"))->hidden_size() == 32);

  const Run e = run({"eval", "--model", dir.file("m.json"), "--data", dir.file("data.jsonl")});
  REQUIRE(e.code == cli::kOk);
  CHECK(json::parse(e.out)["n"] == 60);

  const Run p = run({"predict", "--model", dir.file("m.json"), "--title", "viral video of the week"});
  REQUIRE(p.code == cli::kOk);
  const json pj = json::parse(p.out);
  CHECK((pj["class"] == 1) == (pj["probability"].get<double>() > 0.5));

  const Run i = run({"introspect", "--model", dir.file("m.json"), "--title", "viral video", "--json"});
  REQUIRE(i.code == cli::kOk);
  CHECK(json::parse(i.out)["tokens"].size() == 2);
  const Run text = run({"introspect", "--model", dir.file("m.json"), "--title", "viral video"});
  CHECK(text.out.find("score") != std::string::npos);
}

TEST_CASE("config file with flag override") {
  testing::TempDir dir("cli_config");
  io::write_file_atomic(dir.file("data.jsonl"), corpus::to_jsonl(synthetic::marker_corpus(40, 10)));
  io::write_file_atomic(dir.file("cfg.json"), R"({"model_kind": "lstm", "hidden": 6, "dim": 4, "max_epochs": 3})");
  const Run r = run({"train", "--data", dir.file("data.jsonl"), "--config", dir.file("cfg.json"), "--out",
                     dir.file("m.json"), "--epochs", "1", "--quiet"});
  REQUIRE(r.code == cli::kOk);
  const json j = json::parse(r.out);
  CHECK(j["config"]["model_kind"] == "lstm");
  CHECK(j["config"]["hidden"] == 6);
  CHECK(j["config"]["max_epochs"] == 1);

  io::write_file_atomic(dir.file("bad.json"), R"({"hiden": 6})");
  const Run bad = run({"train", "--data", dir.file("data.jsonl"), "--config", dir.file("bad.json"), "--out",
                       dir.file("m2.json")});
  CHECK(bad.code == cli::kUsage);
}

TEST_CASE("errors map to exit codes with a json message") {
  testing::TempDir dir("cli_errors");
  const Run missing = run({"eval", "--model", dir.file("absent.json"), "--data", dir.file("absent.jsonl")});
  CHECK(missing.code == cli::kIoError);
  CHECK(json::parse(missing.err).contains("error"));

  CHECK(run({"train", "--bogus"}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"predict", "--title", "x"}).code == cli::kUsage);

  REQUIRE(run({"debug-model", "--h", "4", "--d", "3", "--out", dir.file("zero.json")}).code == cli::kOk);
  const Run empty = run({"predict", "--model", dir.file("zero.json"), "--title", ""});
  CHECK(empty.code != cli::kOk);
  CHECK(empty.err.find("empty title") != std::string::npos);
  const Run zero = run({"predict", "--model", dir.file("zero.json"), "--title", "anything at all"});
  REQUIRE(zero.code == cli::kOk);
  CHECK(json::parse(zero.out)["probability"].get<double>() == 0.5);

  io::write_file_atomic(dir.file("broken.jsonl"), "{\"id\": \"a\", \"title\": \"t\"}\n");
  CHECK(run({"label", "--in", dir.file("broken.jsonl"), "--out", dir.file("o.jsonl")}).code == cli::kDataError);
}

TEST_CASE("k-fold train writes a results table") {
  testing::TempDir dir("cli_kfold");
  io::write_file_atomic(dir.file("data.jsonl"), corpus::to_jsonl(synthetic::marker_corpus(50, 11)));
  const Run r = run({"train", "--data", dir.file("data.jsonl"), "--kfold", "5", "--model-kind", "bow_svm",
                     "--table", dir.file("table.md"), "--quiet"});
  REQUIRE(r.code == cli::kOk);
  const json j = json::parse(r.out);
  CHECK(j["folds"].size() == 5);
  const std::string table = io::read_file(dir.file("table.md"));
  CHECK(table.find("BoW + SVM") != std::string::npos);
}

TEST_CASE("synth writes a labeled corpus and matching vectors") {
  testing::TempDir dir("cli_synth");
  const Run r = run({"synth", "--kind", "lexicon", "--n", "30", "--seed", "4", "--out", dir.file("lex.jsonl"),
                     "--vectors-out", dir.file("vec.txt"), "--dim", "5"});
  REQUIRE(r.code == cli::kOk);
  CHECK(corpus::load_labeled(dir.file("lex.jsonl")).size() == 30);
  CHECK(embeddings::load_glove(dir.file("vec.txt")).dim() == 5);
}
