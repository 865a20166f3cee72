#include "headpop/service.h"

#include <httplib.h>

#include "headpop/error.h"
#include "headpop/model_io.h"
#include "headpop/text.h"

namespace headpop::service {

using nlohmann::json;

namespace {

Response error_response(int status, std::string_view kind, std::string_view message) {
  return {status, {{"error", kind}, {"message", message}}};
}

Response not_ready() { return error_response(503, "unavailable", "model not loaded"); }

}  // namespace

json model_info(const Classifier& model) {
  return {{"kind", to_string(model.kind())},
          {"H", model.hidden_size()},
          {"d", model.embedding_dim()},
          {"version", model_io::kFormatVersion}};
}

json score_title(const Classifier& model, std::string_view title) {
  const std::vector<std::string> raw = text::tokenize(title);
  const text::TokenSequence seq = model.encode(title);
  const double p = model.score(seq);
  const std::vector<double> contributions = model.contributions(seq);
  if (contributions.size() != seq.length) throw Error("contribution count does not match sequence length");
  json tokens = json::array();
  for (std::size_t i = 0; i < seq.length; ++i) {
    tokens.push_back({{"token", raw[i]}, {"contribution", contributions[i]}});
  }
  json out = {{"probability", p},
              {"label", p > 0.5 ? "popular" : "unpopular"},
              {"tokens", std::move(tokens)},
              {"model_info", model_info(model)}};
  if (raw.size() > seq.length) out["truncated"] = true;
  return out;
}

ScoringService::ScoringService(ServiceOptions options)
    : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

ScoringService::~ScoringService() { stop(); }

void ScoringService::set_model(std::shared_ptr<const Classifier> model) {
  if (!model) throw ConfigError("service model must not be null");
  std::lock_guard lock(set_mutex_);
  if (owner_) throw ConfigError("service model is already set; restart to change models");
  owner_ = std::move(model);
  model_.store(owner_.get(), std::memory_order_release);
}

Response ScoringService::handle_score(std::string_view body) const {
  const Classifier* model = model_.load(std::memory_order_acquire);
  if (!model) return not_ready();
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error&) {
    return error_response(400, "bad_request", "body must be a JSON object");
  }
  if (!request.is_object()) return error_response(400, "bad_request", "body must be a JSON object");
  const auto it = request.find("title");
  if (it == request.end() || !it->is_string()) return error_response(400, "bad_request", "missing title");
  const std::string& title = it->get_ref<const std::string&>();
  if (title.size() > options_.max_title_bytes) {
    return error_response(413, "too_large",
                          "title exceeds " + std::to_string(options_.max_title_bytes) + " bytes");
  }
  if (text::tokenize(title).empty()) return error_response(400, "bad_request", "empty title");
  try {
    return {200, score_title(*model, title)};
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Response ScoringService::handle_health() const {
  if (!ready()) return not_ready();
  return {200, {{"status", "ok"}}};
}

Response ScoringService::handle_model() const {
  const Classifier* model = model_.load(std::memory_order_acquire);
  if (!model) return not_ready();
  json info = model_info(*model);
  info["config"] = model->config_json();
  info["vocab_size"] = model->vocab().size();
  return {200, std::move(info)};
}

void ScoringService::install_routes() {
  const auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server_->set_default_headers({{"Access-Control-Allow-Origin", options_.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
  server_->set_payload_max_length(options_.max_title_bytes * 8 + 4096);
  server_->Post("/score", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_score(req.body));
  });
  server_->Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_health());
  });
  server_->Get("/model", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_model());
  });
  server_->Options(R"(/(score|health|model))", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server_->set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, error_response(500, "internal", what));
  });
}

int ScoringService::bind() {
  if (bound_) throw ConfigError("service is already bound");
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) throw IoError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
  bound_ = true;
  options_.port = port;
  return port;
}

void ScoringService::listen() {
  if (!bound_) bind();
  server_->listen_after_bind();
}

int ScoringService::start() {
  const int port = bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void ScoringService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace headpop::service
