#include "mqa/service.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <numeric>
#include <ostream>

#include "httplib.h"
#include "mqa/checkpoint.hpp"
#include "mqa/errors.hpp"
#include "mqa/textproc.hpp"

namespace mqa {

using nlohmann::json;

namespace {

HttpResult error(int status, const std::string& code, const std::string& msg) {
  return {status, {{"error", {{"code", code}, {"message", msg}}}}};
}

HttpResult invalid(const std::string& msg) {
  return error(422, "validation_error", msg);
}

json listing_json(const Listing& l) {
  return {{"listing_id", l.listing_id},
          {"title", l.title},
          {"description", l.description},
          {"sentences", split_sentences(l.description)}};
}

}  // namespace

QAService::QAService(Model model, std::vector<Listing> catalog)
    : model_(std::move(model)) {
  for (auto& l : catalog) {
    const std::string id = l.listing_id;
    catalog_.insert_or_assign(id, std::move(l));
  }
}

HttpResult QAService::health() const {
  return {200, {{"status", "ok"}, {"model_variant", model_.config.variant()}}};
}

HttpResult QAService::score(const std::string& body) const {
  const auto start = std::chrono::steady_clock::now();
  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error& e) {
    return error(400, "malformed_body", e.what());
  }
  if (!req.is_object()) {
    return error(400, "malformed_body", "request body must be a JSON object");
  }

  const auto q = req.find("question");
  if (q == req.end() || !q->is_string()) {
    return invalid("'question' must be a string");
  }
  const std::string question = q->get<std::string>();
  if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
    return invalid("'question' must not be empty");
  }

  const bool has_desc = req.contains("description");
  const bool has_cands = req.contains("candidates");
  if (has_desc == has_cands) {
    return invalid("provide exactly one of 'description' or 'candidates'");
  }
  std::vector<std::string> candidates;
  if (has_desc) {
    if (!req["description"].is_string()) {
      return invalid("'description' must be a string");
    }
    candidates = split_sentences(req["description"].get<std::string>());
  } else {
    const auto& c = req["candidates"];
    if (!c.is_array()) return invalid("'candidates' must be an array");
    for (const auto& s : c) {
      if (!s.is_string()) return invalid("'candidates' must hold strings");
      candidates.push_back(s.get<std::string>());
    }
  }

  std::vector<Message> history;
  if (const auto h = req.find("history"); h != req.end() && !h->is_null()) {
    if (!h->is_array()) return invalid("'history' must be an array");
    for (const auto& m : *h) {
      if (!m.is_object() || !m.contains("speaker") || !m.contains("text") ||
          !m["speaker"].is_string() || !m["text"].is_string()) {
        return invalid("history entries need string 'speaker' and 'text'");
      }
      try {
        history.push_back({parse_speaker(m["speaker"].get<std::string>()),
                           m["text"].get<std::string>()});
      } catch (const ValidationError& e) {
        return invalid(e.what());
      }
    }
  }

  const bool truncated = candidates.size() > model_.config.max_candidates;
  if (truncated) candidates.resize(model_.config.max_candidates);

  const auto input = make_input(history, question, candidates, model_.config);
  ScoreResult r;
  try {
    r = mqa::score(input, model_);
  } catch (const NumericError& e) {
    return error(500, "numeric_error", e.what());
  }

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r.probs[a] > r.probs[b];
  });
  json answers = json::array();
  for (std::size_t i : order) {
    answers.push_back({{"index", i},
                       {"sentence", candidates[i - 1]},
                       {"prob", r.probs[i]},
                       {"raw_score", r.scores[i]}});
  }
  const double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  return {200,
          {{"no_answer_prob", r.probs[0]},
           {"no_answer_raw_score", r.scores[0]},
           {"answers", std::move(answers)},
           {"truncated", truncated},
           {"model_variant", model_.config.variant()},
           {"latency_ms", ms}}};
}

HttpResult QAService::listings() const {
  json arr = json::array();
  for (const auto& [id, l] : catalog_) arr.push_back(listing_json(l));
  return {200, {{"listings", std::move(arr)}}};
}

HttpResult QAService::listing(const std::string& id) const {
  const auto it = catalog_.find(id);
  if (it == catalog_.end()) {
    return error(404, "not_found", "no listing with id '" + id + "'");
  }
  return {200, listing_json(it->second)};
}

void QAService::mount(httplib::Server& server,
                      const std::string& cors_origin) const {
  const auto reply = [cors_origin](httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
    if (!cors_origin.empty()) {
      res.set_header("Access-Control-Allow-Origin", cors_origin);
    }
  };
  server.Get("/health", [this, reply](const httplib::Request&,
                                      httplib::Response& res) {
    reply(res, health());
  });
  server.Post("/v1/score", [this, reply](const httplib::Request& req,
                                         httplib::Response& res) {
    reply(res, score(req.body));
  });
  server.Get("/v1/listings", [this, reply](const httplib::Request&,
                                           httplib::Response& res) {
    reply(res, listings());
  });
  server.Get(R"(/v1/listings/([^/]+))",
             [this, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, listing(req.matches[1].str()));
             });
  if (!cors_origin.empty()) {
    server.Options(R"(/.*)", [cors_origin](const httplib::Request&,
                                           httplib::Response& res) {
      res.status = 204;
      res.set_header("Access-Control-Allow-Origin", cors_origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
  }
}

std::vector<Listing> load_catalog(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Listing> out;
  for (const auto& f : files) {
    auto part = read_listings_file(f);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

void apply_env(ServeOptions& opts,
               const std::function<const char*(const char*)>& getenv) {
  const auto str = [&](const char* name, std::string& field) {
    if (const char* v = getenv(name)) field = v;
  };
  str("MQA_HOST", opts.host);
  str("MQA_MODEL", opts.model_path);
  str("MQA_FIXTURES_DIR", opts.fixtures_dir);
  str("MQA_CORS_ORIGIN", opts.cors_origin);
  str("MQA_STATIC_DIR", opts.static_dir);
  if (const char* v = getenv("MQA_PORT")) {
    try {
      opts.port = std::stoi(v);
    } catch (const std::exception&) {
      throw ConfigError(std::string("MQA_PORT is not a port: ") + v);
    }
  }
}

namespace {

std::atomic<httplib::Server*> g_server{nullptr};

extern "C" void stop_on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int run_server(const ServeOptions& opts, std::ostream& log) {
  if (opts.model_path.empty()) {
    log << "serve: --model is required\n";
    return 1;
  }
  std::optional<QAService> service;
  try {
    std::vector<Listing> catalog;
    if (!opts.fixtures_dir.empty()) catalog = load_catalog(opts.fixtures_dir);
    service.emplace(load_checkpoint(std::filesystem::path(opts.model_path)),
                    std::move(catalog));
  } catch (const std::exception& e) {
    log << "serve: cannot start: " << e.what() << '\n';
    return 2;
  }

  httplib::Server server;
  service->mount(server, opts.cors_origin);
  if (!opts.static_dir.empty() &&
      !server.set_mount_point("/", opts.static_dir)) {
    log << "serve: static directory not found: " << opts.static_dir << '\n';
    return 2;
  }
  g_server = &server;
  std::signal(SIGINT, stop_on_signal);
  std::signal(SIGTERM, stop_on_signal);
  if (!server.bind_to_port(opts.host, opts.port)) {
    log << "serve: cannot bind " << opts.host << ':' << opts.port << '\n';
    g_server = nullptr;
    return 2;
  }
  log << "serving " << service->model().config.variant() << " model on http://"
      << opts.host << ':' << opts.port << '\n';
  server.listen_after_bind();
  g_server = nullptr;
  log << "stopped\n";
  return 0;
}

}  // namespace mqa
