#ifndef HEADPOP_SERVICE_H
#define HEADPOP_SERVICE_H

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include <json.hpp>

#include "headpop/classifier.h"

namespace httplib {
class Server;
}

namespace headpop::service {

inline constexpr std::size_t kMaxTitleBytes = 10000;

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string cors_origin = "*";
  std::size_t max_title_bytes = kMaxTitleBytes;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

// {kind, H, d, version}
nlohmann::json model_info(const Classifier& model);

// Probability, label, per-token contributions and model_info for `title`.
// Shared by the HTTP handler and the CLI so both surfaces agree exactly.
// Throws DataError when the title has no tokens.
nlohmann::json score_title(const Classifier& model, std::string_view title);

// Endpoints: POST /score, GET /health, GET /model. Every endpoint answers
// 503 until a model is installed. The model is immutable once set.
class ScoringService {
 public:
  explicit ScoringService(ServiceOptions options = {});
  ~ScoringService();
  ScoringService(const ScoringService&) = delete;
  ScoringService& operator=(const ScoringService&) = delete;

  // Throws ConfigError on a second call.
  void set_model(std::shared_ptr<const Classifier> model);
  bool ready() const { return model_.load(std::memory_order_acquire) != nullptr; }

  Response handle_score(std::string_view body) const;
  Response handle_health() const;
  Response handle_model() const;

  // Binds the listening socket and returns the bound port.
  int bind();
  // Serves on the bound socket until stop(); blocks.
  void listen();
  // bind() + listen() on a background thread.
  int start();
  void stop();

 private:
  void install_routes();

  ServiceOptions options_;
  std::shared_ptr<const Classifier> owner_;
  std::atomic<const Classifier*> model_{nullptr};
  std::mutex set_mutex_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  bool bound_ = false;
};

}  // namespace headpop::service

#endif  // HEADPOP_SERVICE_H
