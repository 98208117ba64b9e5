#include "slr/service.hpp"

#include <algorithm>

#include "httplib.h"

namespace slr {

using nlohmann::json;

namespace {

ServiceResponse error(int status, std::string message) { return {status, json{{"error", std::move(message)}}}; }

struct BadRequest {
  std::string message;
};

std::uint64_t positive_uint(const json& j, const char* name) {
  const json& v = j.at(name);
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0)
    throw BadRequest{std::string("limits.") + name + " must be a positive integer"};
  return v.get<std::uint64_t>();
}

ResourceLimits request_limits(const json& body, const ResourceLimits& cap) {
  ResourceLimits out = cap;
  if (!body.contains("limits")) return out;
  const json& l = body["limits"];
  if (!l.is_object()) throw BadRequest{"limits must be an object"};
  if (l.contains("max_depth")) out.max_depth = std::min(cap.max_depth, positive_uint(l, "max_depth"));
  if (l.contains("max_steps")) out.max_steps = std::min(cap.max_steps, positive_uint(l, "max_steps"));
  if (l.contains("timeout_ms")) {
    const auto ms = std::chrono::milliseconds(positive_uint(l, "timeout_ms"));
    out.wall_timeout = std::min(cap.wall_timeout, ms);
  }
  return out;
}

std::vector<Atom> atoms_of(const json& j, const char* name) {
  if (!j.contains(name)) return {};
  if (!j[name].is_array()) throw BadRequest{std::string("task.") + name + " must be a list of atoms"};
  std::vector<Atom> out;
  for (const auto& s : j[name]) {
    if (!s.is_string()) throw BadRequest{std::string("task.") + name + " must be a list of atoms"};
    out.push_back(parse_atom(s.get<std::string>()));
  }
  return out;
}

JudgeTask inline_task(const json& t) {
  if (!t.is_object()) throw BadRequest{"task must be an object"};
  JudgeTask out;
  try {
    if (t.contains("language")) {
      out.language = language_from_json(t["language"]);
    } else if (t.contains("level") && t["level"].is_number_integer()) {
      out.language = level_language(t["level"].get<int>());
    } else {
      throw BadRequest{"inline task needs a level or a language"};
    }
    if (!t.contains("background") || !t["background"].is_string()) throw BadRequest{"task.background must be a string"};
    out.background = parse_program(t["background"].get<std::string>());
    out.positives = atoms_of(t, "positives");
    out.negatives = atoms_of(t, "negatives");
  } catch (const SyntaxError& e) {
    throw BadRequest{std::string("task does not parse: ") + e.what()};
  } catch (const std::invalid_argument& e) {
    throw BadRequest{std::string("task: ") + e.what()};
  } catch (const std::out_of_range& e) {
    throw BadRequest{std::string("task: ") + e.what()};
  }
  return out;
}

}  // namespace

JudgeService::JudgeService(ServiceConfig config, std::shared_ptr<const Dataset> dataset)
    : config_(std::move(config)), dataset_(std::move(dataset)) {
  config_.limits.validate();
  if (config_.max_concurrency < 1) throw std::invalid_argument("max_concurrency must be >= 1");
  if (!dataset_) return;
  for (Split s : {Split::train, Split::eval, Split::test})
    for (const auto& r : dataset_->split(s)) index_.emplace(r.id, Stored{&r, judge_task(r)});
}

JudgeService::~JudgeService() { stop(); }

ServiceResponse JudgeService::handle_judge(std::string_view body) {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception& e) {
    return error(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object()) return error(400, "request must be a JSON object");
  if (!req.contains("hypothesis") || !req["hypothesis"].is_string()) return error(400, "hypothesis must be a string");
  const std::string hypothesis = req["hypothesis"].get<std::string>();
  if (hypothesis.size() > config_.max_hypothesis_bytes)
    return error(422, "hypothesis exceeds " + std::to_string(config_.max_hypothesis_bytes) + " bytes");

  ResourceLimits limits;
  JudgeTask owned;
  const JudgeTask* task = nullptr;
  try {
    limits = request_limits(req, config_.limits);
    if (req.contains("task_id")) {
      if (!req["task_id"].is_string()) return error(400, "task_id must be a string");
      auto it = index_.find(req["task_id"].get<std::string>());
      if (it == index_.end()) return error(404, "unknown task " + req["task_id"].get<std::string>());
      task = &it->second.task;
    } else if (req.contains("task")) {
      owned = inline_task(req["task"]);
      task = &owned;
    } else {
      return error(400, "request needs task_id or task");
    }
  } catch (const BadRequest& e) {
    return error(400, e.message);
  }

  if (in_flight_.fetch_add(1) >= config_.max_concurrency) {
    in_flight_.fetch_sub(1);
    return error(503, "all judging slots are busy");
  }
  struct Release {
    std::atomic<int>& n;
    ~Release() { n.fetch_sub(1); }
  } release{in_flight_};
  return {200, to_json(judge(hypothesis, *task, limits))};
}

ServiceResponse JudgeService::handle_task(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return error(404, "unknown task " + id);
  return {200, to_json(*it->second.record)};
}

ServiceResponse JudgeService::handle_health() const {
  return {200,
          json{{"status", "ok"},
               {"tasks", index_.size()},
               {"in_flight", in_flight_.load()},
               {"max_concurrency", config_.max_concurrency},
               {"timeout_ms", config_.limits.wall_timeout.count()}}};
}

int JudgeService::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  // Extra workers beyond the judging slots so saturation answers 503 rather
  // than queueing.
  const std::size_t workers = static_cast<std::size_t>(config_.max_concurrency) + 8;
  server_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server_->Post("/judge", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_judge(req.body));
  });
  server_->Get(R"(/task/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_task(req.matches[1]));
  });
  server_->Get("/healthz", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_health());
  });
  // Body size guard well above the hypothesis cap so 422 stays reachable.
  server_->set_payload_max_length(config_.max_hypothesis_bytes * 16 + (1 << 20));
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool JudgeService::listen() { return server_ && server_->listen_after_bind(); }

void JudgeService::stop() {
  if (server_) server_->stop();
}

}  // namespace slr
