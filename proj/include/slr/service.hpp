// HTTP reward service: judges hypotheses against stored or inline tasks.
//
//   POST /judge     {"task_id": ..., "hypothesis": ..., "limits": {...}}
//                   or {"task": {"background", "positives", "negatives",
//                   "level" | "language"}, "hypothesis": ...}
//   GET  /task/{id} the stored task record
//   GET  /healthz
//
// Client limits (max_depth, max_steps, timeout_ms) can only lower the
// server's. Status codes: 400 malformed request, 404 unknown task, 422
// hypothesis over the size cap, 503 when every judging slot is busy.
#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "json.hpp"
#include "slr/dataset.hpp"
#include "slr/judge.hpp"

namespace httplib {
class Server;
}

namespace slr {

struct ServiceConfig {
  ResourceLimits limits;
  int max_concurrency = 64;
  std::size_t max_hypothesis_bytes = 64 * 1024;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

class JudgeService {
 public:
  /// Throws std::invalid_argument on a bad config or DatasetError when a
  /// stored task does not parse.
  explicit JudgeService(ServiceConfig config, std::shared_ptr<const Dataset> dataset = nullptr);
  ~JudgeService();

  JudgeService(const JudgeService&) = delete;
  JudgeService& operator=(const JudgeService&) = delete;

  ServiceResponse handle_judge(std::string_view body);
  ServiceResponse handle_task(const std::string& id) const;
  ServiceResponse handle_health() const;

  /// Binds to host on `port` (0 picks a free one) and returns the bound port,
  /// or -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  bool listen();
  void stop();

  const ServiceConfig& config() const { return config_; }

 private:
  struct Stored {
    const TaskRecord* record;
    JudgeTask task;
  };

  ServiceConfig config_;
  std::shared_ptr<const Dataset> dataset_;
  std::map<std::string, Stored> index_;
  std::atomic<int> in_flight_{0};
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace slr
