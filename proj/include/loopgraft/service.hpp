#pragma once

#include "loopgraft/archive.hpp"
#include "loopgraft/error.hpp"
#include "loopgraft/grafting.hpp"
#include "loopgraft/jobs.hpp"
#include "loopgraft/session.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace loopgraft {

struct ServiceConfig {
  ArchiveConfig archive = ArchiveConfig::from_env();
  std::vector<std::filesystem::path> local_dirs;
  AdapterConfig adapter = AdapterConfig::from_env();
  int job_workers = 2;
  std::filesystem::path static_dir;  // UI bundle, served at / when set

  /// Adds LOOPGRAFT_PDB_DIRS (colon separated), LOOPGRAFT_JOB_PARALLELISM and
  /// LOOPGRAFT_STATIC_DIR to the defaults.
  static ServiceConfig from_env();
};

/// Sessions keyed by id. Mutations of one session are serialized and publish
/// a new immutable snapshot; readers take snapshots without blocking writers.
class SessionStore {
 public:
  void insert(Session s);
  bool contains(std::string_view id) const;
  /// Throws UnknownSession.
  std::shared_ptr<const Session> snapshot(std::string_view id) const;
  std::vector<std::string> ids() const;

  /// Runs `f` on a private copy and publishes it if `f` returns normally.
  template <typename F>
  auto mutate(std::string_view id, F&& f) -> decltype(f(std::declval<Session&>()));

 private:
  struct Slot {
    std::mutex writer;
    std::shared_ptr<const Session> current;
  };
  std::shared_ptr<Slot> slot(std::string_view id) const;

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Slot>, std::less<>> slots_;
};

template <typename F>
auto SessionStore::mutate(std::string_view id, F&& f) -> decltype(f(std::declval<Session&>())) {
  auto s = slot(id);
  std::lock_guard lock(s->writer);
  auto copy = std::make_shared<Session>(*std::atomic_load(&s->current));
  if constexpr (std::is_void_v<decltype(f(*copy))>) {
    f(*copy);
    std::atomic_store(&s->current, std::shared_ptr<const Session>(std::move(copy)));
  } else {
    auto result = f(*copy);
    std::atomic_store(&s->current, std::shared_ptr<const Session>(std::move(copy)));
    return result;
  }
}

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// The HTTP/JSON API, transport independent. Paths and verbs:
///   POST /sessions, POST /sessions/import, GET /sessions/{id},
///   GET /sessions/{id}/export, POST /sessions/{id}/phase,
///   POST /sessions/{id}/ss-override, GET|POST /sessions/{id}/loops,
///   POST /sessions/{id}/loops/{lid}/triage, GET /sessions/{id}/geometry,
///   GET /sessions/{id}/flexibility?method=, GET /sessions/{id}/xcorr?sort=,
///   GET|POST /sessions/{id}/pairings, POST /sessions/{id}/graft,
///   GET /sessions/{id}/structure?role=, GET /jobs/{id},
///   GET /models/{id}.pdb, GET /models/{id}.tsv
class Service {
 public:
  explicit Service(ServiceConfig config = ServiceConfig::from_env());

  ApiResponse handle(std::string_view method, std::string_view path,
                     const std::map<std::string, std::string>& query, std::string_view body);

  SessionStore& sessions() { return sessions_; }
  JobRunner& jobs() { return jobs_; }
  const StructureRepository& repository() const { return repository_; }
  const ServiceConfig& config() const { return config_; }

  std::string create_session(std::string_view scaffold, char scaffold_chain,
                             std::string_view insert, char insert_chain);
  /// Queues a grafting job; empty `specs` means the window variants of the
  /// valid pairings. Throws GateUnsatisfied (session not in P6) and EmptySpecs.
  std::string submit_graft(std::string_view session_id, std::vector<GraftSpec> specs, int window);
  /// Regenerates the chimera of a stored model. Throws NotFound.
  ChimericModel model(std::string_view model_id) const;
  /// Models of a job, ranked by `key`. Throws MissingScoreKey.
  std::vector<ModelRecord> ranked_models(std::string_view job_id, const std::string& key) const;

 private:
  ServiceConfig config_;
  StructureRepository repository_;
  SessionStore sessions_;
  JobRunner jobs_;
  mutable std::mutex models_mutex_;
  std::map<std::string, std::string, std::less<>> model_session_;
};

/// Binds the service to an HTTP listener in a background thread.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Returns the bound port (an ephemeral one when `port` is 0).
  int start(const std::string& host, int port);
  void stop();
  /// Blocks serving on the calling thread.
  bool listen(const std::string& host, int port);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status(ErrorCode code);

}  // namespace loopgraft
