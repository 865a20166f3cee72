#include <doctest.h>
#include <httplib.h>

#include <future>
#include <sstream>

#include "headpop/cli.h"
#include "headpop/error.h"
#include "headpop/model_io.h"
#include "headpop/recurrent.h"
#include "headpop/service.h"
#include "support.h"

using namespace headpop;
using nlohmann::json;

namespace {

text::Vocabulary vocab() {
  return text::Vocabulary({text::kPadToken, text::kUnkToken, "cats", "dogs", "win", "lose"}, 1);
}

std::shared_ptr<recurrent::RecurrentModel> model(bool zero_head, std::uint64_t seed = 3) {
  recurrent::RecurrentConfig c;
  c.hidden = 4;
  c.dim = 3;
  c.max_seq_len = 5;
  auto m = recurrent::RecurrentModel::initialize(c, vocab(), embeddings::build_matrix(vocab(), {}, 3, seed, false), seed);
  ParamSet p = m.params();
  if (zero_head) {
    p.at("head.w") = Mat(1, 8);
    p.at("head.b") = Mat(1, 1);
  } else {
    testing::randomize(p, seed + 10, 1.0);
    for (double& x : p.at("embedding").row(text::kPad)) x = 0.0;
  }
  return std::make_shared<recurrent::RecurrentModel>(c, vocab(), p);
}

std::string body(const std::string& title) { return json{{"title", title}}.dump(); }

}  // namespace

TEST_CASE("every endpoint answers 503 before a model is set") {
  service::ScoringService svc;
  CHECK_FALSE(svc.ready());
  CHECK(svc.handle_score(body("cats win")).status == 503);
  CHECK(svc.handle_health().status == 503);
  CHECK(svc.handle_model().status == 503);
}

TEST_CASE("a zero-head model scores 0.5 for every title") {
  service::ScoringService svc;
  svc.set_model(model(true));
  for (const char* t : {"cats", "dogs lose", "completely unknown words", "cats win win win win win win"}) {
    const auto r = svc.handle_score(body(t));
    REQUIRE(r.status == 200);
    CHECK(r.body["probability"].get<double>() == 0.5);
    CHECK(r.body["label"] == "unpopular");
    for (const auto& tok : r.body["tokens"]) CHECK(tok["contribution"].get<double>() == 0.5);
  }
}

TEST_CASE("score response carries tokens and model info") {
  const auto m = model(false);
  const json j = service::score_title(*m, "Cats WIN, dogs lose!");
  CHECK(j["probability"].get<double>() == m->score(m->encode("cats win dogs lose")));
  REQUIRE(j["tokens"].size() == 4);
  CHECK(j["tokens"][0]["token"] == "cats");
  CHECK(j["tokens"][3]["token"] == "lose");
  CHECK(j["model_info"]["kind"] == "bilstm");
  CHECK(j["model_info"]["H"] == 4);
  CHECK(j["model_info"]["d"] == 3);
  CHECK_FALSE(j.contains("truncated"));
  const json t = service::score_title(*m, "cats cats cats cats cats cats");
  CHECK(t["tokens"].size() == 5);
  CHECK(t["truncated"] == true);
  CHECK_THROWS_AS(service::score_title(*m, "?!"), DataError);
}

TEST_CASE("bad requests are rejected with the right status") {
  service::ScoringService svc;
  svc.set_model(model(false));
  CHECK(svc.handle_score(body("")).status == 400);
  CHECK(svc.handle_score(body("...")).status == 400);
  CHECK(svc.handle_score("{}").status == 400);
  CHECK(svc.handle_score("not json").status == 400);
  CHECK(svc.handle_score("[1, 2]").status == 400);
  CHECK(svc.handle_score(json{{"title", 7}}.dump()).status == 400);
  CHECK(svc.handle_score(body(std::string(10001, 'a'))).status == 413);
  CHECK(svc.handle_score(body(std::string(10000, 'a'))).status == 200);
  const auto r = svc.handle_score(body(""));
  CHECK(r.body.contains("error"));
}

TEST_CASE("the model cannot be replaced") {
  service::ScoringService svc;
  svc.set_model(model(false));
  CHECK_THROWS_AS(svc.set_model(model(true)), ConfigError);
  CHECK_THROWS_AS(service::ScoringService().set_model(nullptr), ConfigError);
}

TEST_CASE("health and model endpoints") {
  service::ScoringService svc;
  svc.set_model(model(false));
  CHECK(svc.handle_health().body == json{{"status", "ok"}});
  const auto r = svc.handle_model();
  CHECK(r.status == 200);
  CHECK(r.body["kind"] == "bilstm");
  CHECK(r.body["vocab_size"] == 6);
}

TEST_CASE("http round trip on localhost") {
  service::ServiceOptions opts;
  opts.port = 0;
  service::ScoringService svc(opts);
  const auto m = model(false);
  svc.set_model(m);
  const int port = svc.start();
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);

  const auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

  const auto scored = client.Post("/score", body("dogs win"), "application/json");
  REQUIRE(scored);
  CHECK(scored->status == 200);
  CHECK(scored->get_header_value("Access-Control-Allow-Origin") == "*");
  const json j = json::parse(scored->body);
  CHECK(j["probability"].get<double>() == m->score(m->encode("dogs win")));

  const auto preflight = client.Options("/score");
  REQUIRE(preflight);
  CHECK(preflight->status / 100 == 2);
  CHECK_FALSE(preflight->get_header_value("Access-Control-Allow-Methods").empty());

  const auto empty = client.Post("/score", body(""), "application/json");
  REQUIRE(empty);
  CHECK(empty->status == 400);
  const auto big = client.Post("/score", body(std::string(20000, 'x')), "application/json");
  REQUIRE(big);
  CHECK(big->status == 413);
  const auto info = client.Get("/model");
  REQUIRE(info);
  CHECK(json::parse(info->body)["H"] == 4);

  std::vector<std::future<std::string>> replies;
  for (int i = 0; i < 8; ++i) {
    replies.push_back(std::async(std::launch::async, [port] {
      httplib::Client c("127.0.0.1", port);
      const auto r = c.Post("/score", body("cats lose win"), "application/json");
      return r ? r->body : std::string("no reply");
    }));
  }
  const std::string first = replies.front().get();
  CHECK(json::parse(first).contains("probability"));
  for (std::size_t i = 1; i < replies.size(); ++i) CHECK(replies[i].get() == first);
  svc.stop();
}

TEST_CASE("cli predict and http score agree exactly") {
  testing::TempDir dir("service_cli_agree");
  const auto m = model(false, 21);
  model_io::save_model(*m, dir.file("m.json"));
  const auto loaded = model_io::load_model(dir.file("m.json"));

  service::ServiceOptions opts;
  opts.port = 0;
  service::ScoringService svc(opts);
  svc.set_model(std::shared_ptr<const Classifier>(loaded->clone()));
  const int port = svc.start();
  httplib::Client client("127.0.0.1", port);
  for (const char* title : {"cats win", "dogs dogs lose", "who knows"}) {
    std::ostringstream out;
    std::ostringstream err;
    const std::string path = dir.file("m.json");
    const char* argv[] = {"headpop", "predict", "--model", path.c_str(), "--title", title};
    REQUIRE(cli::run(6, argv, out, err) == cli::kOk);
    const double cli_p = json::parse(out.str())["probability"].get<double>();
    const auto r = client.Post("/score", body(title), "application/json");
    REQUIRE(r);
    CHECK(json::parse(r->body)["probability"].get<double>() == cli_p);
  }
  svc.stop();
}
