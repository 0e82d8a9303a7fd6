#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mqa/datapipe.hpp"
#include "mqa/ranker.hpp"

namespace httplib {
class Server;
}

namespace mqa {

struct HttpResult {
  int status = 200;
  nlohmann::json body;
};

// Request handling without any transport, so it can be tested directly. The
// model and catalog are fixed at construction and only read afterwards.
class QAService {
 public:
  QAService(Model model, std::vector<Listing> catalog);

  HttpResult health() const;
  // Body: {"question", "description" | "candidates", "history"?}.
  HttpResult score(const std::string& body) const;
  HttpResult listings() const;
  HttpResult listing(const std::string& id) const;

  const Model& model() const { return model_; }

  // Registers the routes. A non-empty cors_origin is echoed in
  // Access-Control-Allow-Origin and answers preflight requests.
  void mount(httplib::Server& server, const std::string& cors_origin) const;

 private:
  Model model_;
  std::map<std::string, Listing> catalog_;
};

// Every *.jsonl file in the directory, read as listings.
std::vector<Listing> load_catalog(const std::filesystem::path& dir);

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string model_path;
  std::string fixtures_dir;
  std::string cors_origin;
  std::string static_dir;  // optional directory served at /
};

// Fills fields from MQA_HOST, MQA_PORT, MQA_MODEL, MQA_FIXTURES_DIR,
// MQA_CORS_ORIGIN and MQA_STATIC_DIR when set.
void apply_env(ServeOptions& opts,
               const std::function<const char*(const char*)>& getenv);

// Loads the checkpoint and catalog, serves until SIGINT or SIGTERM, then
// drains in-flight requests. Returns a process exit code.
int run_server(const ServeOptions& opts, std::ostream& log);

}  // namespace mqa
