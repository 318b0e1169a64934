#include "loopgraft/jobs.hpp"

#include "loopgraft/error.hpp"

#include <algorithm>
#include <stdexcept>

namespace loopgraft {

std::string_view to_string(JobKind k) { return k == JobKind::Grafting ? "grafting" : "dynamics"; }

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "queued";
}

struct JobRunner::Job {
  JobStatus status;
  Work work;
};

class JobRunner::Context : public JobContext {
 public:
  Context(JobRunner& runner, Job& job) : runner_(runner), job_(job) {}
  void set_progress(double fraction) override {
    std::lock_guard lock(runner_.mutex_);
    job_.status.progress = std::clamp(fraction, 0.0, 1.0);
  }
  void add_result(std::string id) override {
    std::lock_guard lock(runner_.mutex_);
    job_.status.results.push_back(std::move(id));
  }

 private:
  JobRunner& runner_;
  Job& job_;
};

JobRunner::JobRunner(int workers) {
  for (int i = 0; i < std::max(1, workers); ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobRunner::~JobRunner() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : workers_) t.join();
}

std::string JobRunner::submit(std::string session_id, JobKind kind, Work work) {
  auto job = std::make_shared<Job>();
  {
    std::lock_guard lock(mutex_);
    job->status.id = "job-" + std::to_string(++counter_);
    job->status.session_id = std::move(session_id);
    job->status.kind = kind;
    job->status.history.push_back(JobState::Queued);
    job->work = std::move(work);
    jobs_[job->status.id] = job;
    queue_.push_back(job);
  }
  cv_.notify_all();
  return job->status.id;
}

JobStatus JobRunner::status(std::string_view id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) fail(ErrorCode::UnknownJob, "no job '" + std::string(id) + "'");
  return it->second->status;
}

std::vector<JobStatus> JobRunner::jobs_of(std::string_view session_id) const {
  std::lock_guard lock(mutex_);
  std::vector<JobStatus> out;
  for (const auto& [id, job] : jobs_)
    if (job->status.session_id == session_id) out.push_back(job->status);
  std::sort(out.begin(), out.end(), [](const JobStatus& a, const JobStatus& b) {
    return a.id.size() != b.id.size() ? a.id.size() < b.id.size() : a.id < b.id;
  });
  return out;
}

JobStatus JobRunner::wait(std::string_view id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) fail(ErrorCode::UnknownJob, "no job '" + std::string(id) + "'");
  auto job = it->second;
  cv_.wait_for(lock, timeout, [&] {
    return job->status.state == JobState::Done || job->status.state == JobState::Failed;
  });
  return job->status;
}

void JobRunner::transition(Job& job, JobState to) {
  if (!valid_transition(job.status.state, to))
    throw std::logic_error("invalid job transition " + std::string(to_string(job.status.state)) +
                           " -> " + std::string(to_string(to)));
  job.status.state = to;
  job.status.history.push_back(to);
}

std::shared_ptr<JobRunner::Job> JobRunner::next_runnable() {
  for (auto it = queue_.begin(); it != queue_.end(); ++it) {
    if (session_busy_[(*it)->status.session_id]) continue;
    auto job = *it;
    queue_.erase(it);
    return job;
  }
  return nullptr;
}

void JobRunner::worker_loop() {
  for (;;) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] {
        if (stopping_) return true;
        return std::any_of(queue_.begin(), queue_.end(), [&](const auto& j) {
          return !session_busy_[j->status.session_id];
        });
      });
      if (stopping_) return;
      job = next_runnable();
      if (!job) continue;
      session_busy_[job->status.session_id] = true;
      transition(*job, JobState::Running);
    }
    Context ctx(*this, *job);
    std::string error;
    try {
      job->work(ctx);
    } catch (const std::exception& e) {
      error = e.what();
      if (error.empty()) error = "job failed";
    } catch (...) {
      error = "job failed";
    }
    {
      std::lock_guard lock(mutex_);
      if (error.empty()) {
        job->status.progress = 1.0;
        transition(*job, JobState::Done);
      } else {
        job->status.error = error;
        transition(*job, JobState::Failed);
      }
      job->work = nullptr;
      session_busy_[job->status.session_id] = false;
    }
    cv_.notify_all();
  }
}

}  // namespace loopgraft
