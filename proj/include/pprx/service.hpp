#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

// Eigen must come first: <resolv.h>, pulled in by httplib, defines _res.
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <httplib.h>
#include <json.hpp>

#include "pprx/classifier.hpp"
#include "pprx/embeddings.hpp"
#include "pprx/errors.hpp"
#include "pprx/explain.hpp"

namespace pprx {

inline nlohmann::json prediction_to_json(const Prediction& p) { return {{"p_real", p.p_real}, {"p_fake", p.p_fake}}; }

inline nlohmann::json report_to_json(const MisleadingReport& report, const Prediction& base, long long top_k = -1) {
  nlohmann::json entries = nlohmann::json::array();
  const std::size_t limit =
      top_k < 0 ? report.entries.size() : std::min(report.entries.size(), static_cast<std::size_t>(top_k));
  for (std::size_t r = 0; r < limit; ++r) {
    const auto& e = report.entries[r];
    entries.push_back({{"rank", r + 1},
                       {"word", e.word},
                       {"node_id", e.node_id},
                       {"misleading_degree", e.misleading_degree},
                       {"masked", prediction_to_json(e.masked_prediction)}});
  }
  return {{"reference_class", report.reference_class},
          {"base", prediction_to_json(base)},
          {"n_words", report.entries.size()},
          {"entries", std::move(entries)}};
}

struct ServiceOptions {
  unsigned workers = 1;             // per-job fan-out across words
  std::size_t max_finished_jobs = 100;  // LRU bound on done/failed jobs
  std::string static_dir;           // built web UI; empty serves a stub page
};

enum class JobStatus { Queued, Running, Done, Failed };

inline const char* to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "unknown";
}

// HTTP API over an immutable model and embedding store. The explain job table
// is the only mutable shared state.
class Service {
 public:
  Service(std::shared_ptr<const MlpModel> model, std::shared_ptr<const EmbeddingStore> store,
          ServiceOptions options = {})
      : model_(std::move(model)), store_(std::move(store)), options_(std::move(options)) {
    if (model_ && store_ && store_->dim() != model_->input_dim())
      throw Error(ErrorKind::Shape, "embedding store dim does not match the model");
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ~Service() {
    wait_idle();
  }

  void mount(httplib::Server& server) {
    server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) { health(res); });
    server.Post("/api/predict", [this](const httplib::Request& req, httplib::Response& res) { predict(req, res); });
    server.Post("/api/explain", [this](const httplib::Request& req, httplib::Response& res) { submit(req, res); });
    server.Get(R"(/api/explain/([A-Za-z0-9]+))",
               [this](const httplib::Request& req, httplib::Response& res) { poll(req.matches[1], res); });
    server.Post("/api/whatif", [this](const httplib::Request& req, httplib::Response& res) { what_if(req, res); });
    if (!options_.static_dir.empty() && server.set_mount_point("/", options_.static_dir)) return;
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(
          "<!doctype html><html><head><meta charset=\"utf-8\"><title>pprx</title></head><body>"
          "<p>Web UI assets are not bundled. Start the service with <code>--static-dir</code> "
          "or use the JSON API under <code>/api/</code>.</p></body></html>",
          "text/html; charset=utf-8");
    });
  }

  // Blocks until every running explain job has finished.
  void wait_idle() {
    for (;;) {
      std::list<Worker> running;
      {
        std::lock_guard lock(mutex_);
        if (threads_.empty()) return;
        running.swap(threads_);
      }
      for (auto& w : running) w.thread.join();
    }
  }

 private:
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  struct Job {
    JobStatus status = JobStatus::Queued;
    double progress = 0.0;
    std::string stage = "queued";
    nlohmann::json result;
    std::string error;
  };

  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
  }

  bool ready(httplib::Response& res) const {
    if (model_ && store_) return true;
    send_error(res, 503, "model not loaded");
    return false;
  }

  // Parses the body and returns a non-empty "text" field, or answers 400.
  static std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      send_error(res, 400, "body is not valid JSON");
      return std::nullopt;
    }
    if (!body.is_object() || !body.contains("text") || !body["text"].is_string() ||
        body["text"].get<std::string>().empty()) {
      send_error(res, 400, "field 'text' must be a non-empty string");
      return std::nullopt;
    }
    return body;
  }

  void health(httplib::Response& res) const {
    send_json(res, 200,
              {{"status", "ok"}, {"model_loaded", model_ && store_}, {"format_version", kModelFormatVersion}});
  }

  void predict(const httplib::Request& req, httplib::Response& res) const {
    if (!ready(res)) return;
    auto body = parse_body(req, res);
    if (!body) return;
    try {
      const AnalyzedDocument doc = analyze((*body)["text"].get<std::string>(), *model_, *store_);
      nlohmann::json out = prediction_to_json(doc.base);
      out["n_nodes"] = doc.graph.num_nodes();
      out["n_edges"] = doc.graph.num_edges();
      send_json(res, 200, out);
    } catch (const Error& e) {
      send_error(res, e.kind() == ErrorKind::EmptyDocument ? 400 : 500, e.what());
    }
  }

  void what_if(const httplib::Request& req, httplib::Response& res) const {
    if (!ready(res)) return;
    auto body = parse_body(req, res);
    if (!body) return;
    std::vector<std::string> words;
    if (body->contains("masked_words")) {
      const auto& mw = (*body)["masked_words"];
      if (!mw.is_array()) return send_error(res, 400, "field 'masked_words' must be an array of strings");
      for (const auto& w : mw) {
        if (!w.is_string()) return send_error(res, 400, "field 'masked_words' must be an array of strings");
        words.push_back(w.get<std::string>());
      }
    }
    try {
      const AnalyzedDocument doc = analyze((*body)["text"].get<std::string>(), *model_, *store_);
      const Prediction masked = pprx::what_if(doc, *model_, words);
      const int ref = doc.base.argmax();
      send_json(res, 200,
                {{"base", prediction_to_json(doc.base)},
                 {"masked", prediction_to_json(masked)},
                 {"reference_class", ref},
                 {"delta_reference_class", masked[ref] - doc.base[ref]}});
    } catch (const UnknownWordError& e) {
      send_json(res, 422, {{"error", e.what()}, {"unknown_words", e.words()}});
    } catch (const Error& e) {
      send_error(res, e.kind() == ErrorKind::EmptyDocument ? 400 : 500, e.what());
    }
  }

  void submit(const httplib::Request& req, httplib::Response& res) {
    if (!ready(res)) return;
    auto body = parse_body(req, res);
    if (!body) return;
    long long top_k = -1;
    if (body->contains("top_k")) {
      if (!(*body)["top_k"].is_number_integer()) return send_error(res, 400, "field 'top_k' must be an integer");
      top_k = (*body)["top_k"].get<long long>();
    }
    std::string text = (*body)["text"].get<std::string>();
    try {
      (void)tokenize(text);
    } catch (const Error& e) {
      return send_error(res, 400, e.what());
    }

    std::string id;
    {
      std::lock_guard lock(mutex_);
      id = next_id();
      jobs_.emplace(id, Job{});
      reap_finished_threads();
      auto flag = std::make_shared<std::atomic<bool>>(false);
      threads_.push_back(Worker{std::thread([this, id, text = std::move(text), top_k, flag] {
                                  run_job(id, text, top_k);
                                  flag->store(true);
                                }),
                                flag});
    }
    send_json(res, 202, {{"job_id", id}});
  }

  void poll(const std::string& id, httplib::Response& res) {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return send_error(res, 404, "unknown job '" + id + "'");
    const Job& job = it->second;
    if (job.status == JobStatus::Done || job.status == JobStatus::Failed) touch(id);
    nlohmann::json out{{"job_id", id},
                       {"status", to_string(job.status)},
                       {"progress", job.progress},
                       {"stage", job.stage}};
    if (job.status == JobStatus::Done) out["result"] = job.result;
    if (job.status == JobStatus::Failed) out["error"] = job.error;
    send_json(res, 200, out);
  }

  void update(const std::string& id, const std::function<void(Job&)>& fn) {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it != jobs_.end()) fn(it->second);
  }

  void run_job(const std::string& id, const std::string& text, long long top_k) {
    update(id, [](Job& j) { j.status = JobStatus::Running; });
    try {
      auto set_stage = [&](AnalysisStage s) { update(id, [s](Job& j) { j.stage = to_string(s); }); };
      const AnalyzedDocument doc = analyze(text, *model_, *store_, options_.workers, set_stage);
      set_stage(AnalysisStage::Masking);
      ExplainOptions opts;
      opts.workers = options_.workers;
      opts.on_progress = [&](std::size_t done, std::size_t total) {
        const double fraction = static_cast<double>(done) / static_cast<double>(total);
        update(id, [fraction](Job& j) {
          // Stays below 1 until the result is stored.
          j.progress = std::max(j.progress, std::min(fraction, 0.999));
        });
      };
      const MisleadingReport report = explain_all(doc, *model_, opts);
      set_stage(AnalysisStage::Ranking);
      nlohmann::json result = report_to_json(report, doc.base, top_k);
      result["n_nodes"] = doc.graph.num_nodes();
      result["n_edges"] = doc.graph.num_edges();
      std::lock_guard lock(mutex_);
      auto it = jobs_.find(id);
      if (it != jobs_.end()) {
        it->second.result = std::move(result);
        it->second.progress = 1.0;
        it->second.stage = "done";
        it->second.status = JobStatus::Done;
        finished(id);
      }
    } catch (const std::exception& e) {
      std::lock_guard lock(mutex_);
      auto it = jobs_.find(id);
      if (it != jobs_.end()) {
        it->second.error = e.what();
        it->second.stage = "failed";
        it->second.status = JobStatus::Failed;
        finished(id);
      }
    }
  }

  // Caller holds mutex_. Joins job threads that have returned.
  void reap_finished_threads() {
    for (auto it = threads_.begin(); it != threads_.end();) {
      if (it->done->load()) {
        it->thread.join();
        it = threads_.erase(it);
      } else {
        ++it;
      }
    }
  }

  // Caller holds mutex_.
  void finished(const std::string& id) {
    lru_.push_back(id);
    while (lru_.size() > options_.max_finished_jobs) {
      jobs_.erase(lru_.front());
      lru_.pop_front();
    }
  }

  // Caller holds mutex_.
  void touch(const std::string& id) {
    for (auto it = lru_.begin(); it != lru_.end(); ++it) {
      if (*it == id) {
        lru_.erase(it);
        lru_.push_back(id);
        return;
      }
    }
  }

  // Caller holds mutex_.
  std::string next_id() {
    std::ostringstream out;
    out << std::hex << id_engine_() << ++counter_;
    return out.str();
  }

  std::shared_ptr<const MlpModel> model_;
  std::shared_ptr<const EmbeddingStore> store_;
  ServiceOptions options_;

  std::mutex mutex_;
  std::unordered_map<std::string, Job> jobs_;
  std::deque<std::string> lru_;
  std::list<Worker> threads_;
  std::mt19937_64 id_engine_{std::random_device{}()};
  std::uint64_t counter_ = 0;
};

}  // namespace pprx
