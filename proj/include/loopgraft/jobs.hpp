#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace loopgraft {

enum class JobKind { Grafting, Dynamics };
enum class JobState { Queued, Running, Done, Failed };

std::string_view to_string(JobKind k);
std::string_view to_string(JobState s);

/// queued -> running -> {done, failed}; terminal states are final.
constexpr bool valid_transition(JobState from, JobState to) {
  return (from == JobState::Queued && to == JobState::Running) ||
         (from == JobState::Running && (to == JobState::Done || to == JobState::Failed));
}

struct JobStatus {
  std::string id;
  std::string session_id;
  JobKind kind = JobKind::Grafting;
  JobState state = JobState::Queued;
  double progress = 0.0;
  std::string error;
  std::vector<std::string> results;  // ids of produced artifacts, in order
  std::vector<JobState> history;     // every state entered
};

class JobContext {
 public:
  virtual ~JobContext() = default;
  virtual void set_progress(double fraction) = 0;
  virtual void add_result(std::string id) = 0;
};

/// Worker pool. Jobs of one session run one at a time in submission order;
/// different sessions proceed in parallel.
class JobRunner {
 public:
  using Work = std::function<void(JobContext&)>;

  explicit JobRunner(int workers = 2);
  ~JobRunner();
  JobRunner(const JobRunner&) = delete;
  JobRunner& operator=(const JobRunner&) = delete;

  std::string submit(std::string session_id, JobKind kind, Work work);
  /// Throws UnknownJob.
  JobStatus status(std::string_view id) const;
  std::vector<JobStatus> jobs_of(std::string_view session_id) const;
  /// Blocks until the job is done or failed, or the timeout passes.
  /// Returns the status at return time. Throws UnknownJob.
  JobStatus wait(std::string_view id,
                 std::chrono::milliseconds timeout = std::chrono::hours(24)) const;

 private:
  struct Job;
  class Context;

  void worker_loop();
  std::shared_ptr<Job> next_runnable();
  void transition(Job& job, JobState to);

  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::map<std::string, std::shared_ptr<Job>, std::less<>> jobs_;
  std::vector<std::shared_ptr<Job>> queue_;  // submission order
  std::map<std::string, bool, std::less<>> session_busy_;
  unsigned long counter_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace loopgraft
