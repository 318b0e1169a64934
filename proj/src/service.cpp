#include "loopgraft/service.hpp"

#include "loopgraft/error.hpp"
#include "loopgraft/json_io.hpp"

#include <httplib.h>

#include <cstdlib>
#include <future>
#include <random>
#include <sstream>
#include <thread>

namespace loopgraft {

using nlohmann::json;

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig c;
  if (const char* dirs = std::getenv("LOOPGRAFT_PDB_DIRS"); dirs && *dirs) {
    std::stringstream ss(dirs);
    std::string d;
    while (std::getline(ss, d, ':'))
      if (!d.empty()) c.local_dirs.emplace_back(d);
  }
  if (const char* n = std::getenv("LOOPGRAFT_JOB_PARALLELISM"); n && *n)
    c.job_workers = std::max(1, std::atoi(n));
  if (const char* d = std::getenv("LOOPGRAFT_STATIC_DIR"); d && *d) c.static_dir = d;
  return c;
}

// ---- store ----------------------------------------------------------------

void SessionStore::insert(Session s) {
  auto slot = std::make_shared<Slot>();
  const std::string id = s.id;
  slot->current = std::make_shared<const Session>(std::move(s));
  std::lock_guard lock(mutex_);
  if (slots_.count(id)) fail(ErrorCode::BadRequest, "session '" + id + "' already exists");
  slots_[id] = std::move(slot);
}

bool SessionStore::contains(std::string_view id) const {
  std::lock_guard lock(mutex_);
  return slots_.find(id) != slots_.end();
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(std::string_view id) const {
  std::lock_guard lock(mutex_);
  auto it = slots_.find(id);
  if (it == slots_.end()) fail(ErrorCode::UnknownSession, "no session '" + std::string(id) + "'");
  return it->second;
}

std::shared_ptr<const Session> SessionStore::snapshot(std::string_view id) const {
  auto s = slot(id);
  return std::atomic_load(&s->current);
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : slots_) out.push_back(id);
  return out;
}

// ---- service --------------------------------------------------------------

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownJob:
    case ErrorCode::UnknownLoop:
    case ErrorCode::UnknownChain:
      return 404;
    case ErrorCode::GateUnsatisfied:
      return 409;
    case ErrorCode::NetworkFailure:
      return 502;
    case ErrorCode::AdapterTimeout:
      return 504;
    case ErrorCode::BadRequest:
    case ErrorCode::InvalidId:
    case ErrorCode::MalformedRecord:
    case ErrorCode::UnknownMetric:
    case ErrorCode::EmptySpecs:
    case ErrorCode::SchemaVersionMismatch:
      return 400;
    default:
      return 422;
  }
}

Service::Service(ServiceConfig config)
    : config_(std::move(config)),
      repository_(config_.archive, config_.local_dirs),
      jobs_(config_.job_workers) {}

namespace {

std::string random_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  std::ostringstream out;
  out << std::hex << rng();
  return out.str();
}

char chain_arg(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return 0;
  const std::string c = j[key].get<std::string>();
  if (c.empty()) return 0;
  return c == "_" ? ' ' : c[0];
}

ApiResponse ok(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }

json parse_body(std::string_view body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    fail(ErrorCode::BadRequest, std::string("request body is not JSON: ") + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::BadRequest, std::string("missing or invalid field '") + key + "'");
  }
}

std::string query_or(const std::map<std::string, std::string>& q, const std::string& key,
                     const std::string& fallback) {
  auto it = q.find(key);
  return it == q.end() || it->second.empty() ? fallback : it->second;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string Service::create_session(std::string_view scaffold, char scaffold_chain,
                                    std::string_view insert, char insert_chain) {
  Session s = loopgraft::create_session(repository_, scaffold, scaffold_chain, insert, insert_chain,
                                        random_id());
  const std::string id = s.id;
  sessions_.insert(std::move(s));
  return id;
}

std::string Service::submit_graft(std::string_view session_id, std::vector<GraftSpec> specs,
                                  int window) {
  auto snap = sessions_.snapshot(session_id);
  if (snap->phase != Phase::P6)
    fail(ErrorCode::GateUnsatisfied, "grafting jobs need the session in P6 (grafting)");
  if (specs.empty()) specs = default_graft_specs(*snap, window);
  if (specs.empty()) fail(ErrorCode::EmptySpecs, "no graft specs to run");

  const std::string sid(session_id);
  const AdapterConfig adapter = config_.adapter;
  auto job_promise = std::make_shared<std::promise<std::string>>();
  std::shared_future<std::string> job_id = job_promise->get_future().share();
  auto work = [this, sid, snap, specs = std::move(specs), adapter, job_id](JobContext& ctx) {
    const std::string own_id = job_id.get();
    const auto& sc = snap->scaffold;
    const auto& in = snap->insert;
    const int baseline = count_clashes(sc.chain());
    for (std::size_t k = 0; k < specs.size(); ++k) {
      ModelRecord rec;
      try {
        ChimericModel m = splice(*sc.structure, sc.chain_id, *in.structure, in.chain_id, specs[k], baseline);
        apply_surrogate(m);
        if (!adapter.command.empty()) {
          try {
            external_score(m, adapter);
          } catch (const Error& e) {
            rec.note = std::string(to_string(e.code())) + ": " + e.what();
          }
        }
        rec.spec = specs[k];
        rec.scores = m.scores;
      } catch (const Error&) {
        // variants with unresolvable anchors produce no model
        ctx.set_progress(static_cast<double>(k + 1) / static_cast<double>(specs.size()));
        continue;
      }
      const std::string model_id = sid + "-m" + random_id().substr(0, 8);
      rec.id = model_id;
      {
        std::lock_guard lock(models_mutex_);
        model_session_[model_id] = sid;
      }
      sessions_.mutate(sid, [&](Session& s) {
        rec.job_id = own_id;
        s.models.push_back(rec);
      });
      ctx.add_result(model_id);
      ctx.set_progress(static_cast<double>(k + 1) / static_cast<double>(specs.size()));
    }
  };
  return sessions_.mutate(sid, [&](Session& s) {
    std::string job = jobs_.submit(sid, JobKind::Grafting, std::move(work));
    job_promise->set_value(job);
    s.job_ids.push_back(job);
    return job;
  });
}

ChimericModel Service::model(std::string_view model_id) const {
  std::string sid;
  {
    std::lock_guard lock(models_mutex_);
    auto it = model_session_.find(model_id);
    if (it == model_session_.end()) fail(ErrorCode::NotFound, "no model '" + std::string(model_id) + "'");
    sid = it->second;
  }
  auto snap = sessions_.snapshot(sid);
  for (const auto& r : snap->models) {
    if (r.id != model_id) continue;
    ChimericModel m = splice(*snap->scaffold.structure, snap->scaffold.chain_id,
                             *snap->insert.structure, snap->insert.chain_id, r.spec);
    m.id = r.id;
    m.scores = r.scores;
    return m;
  }
  fail(ErrorCode::NotFound, "no model '" + std::string(model_id) + "'");
}

std::vector<ModelRecord> Service::ranked_models(std::string_view job_id, const std::string& key) const {
  const JobStatus st = jobs_.status(job_id);
  auto snap = sessions_.snapshot(st.session_id);
  std::vector<ModelRecord> recs;
  for (const auto& id : st.results)
    for (const auto& r : snap->models)
      if (r.id == id) recs.push_back(r);
  std::vector<std::map<std::string, double>> scores;
  for (const auto& r : recs) scores.push_back(r.scores);
  std::vector<ModelRecord> out;
  for (auto i : rank_models(scores, key)) out.push_back(recs[i]);
  return out;
}

ApiResponse Service::handle(std::string_view method, std::string_view path,
                            const std::map<std::string, std::string>& query, std::string_view body) {
  try {
    const auto parts = split_path(path);
    const bool get = method == "GET";
    const bool post = method == "POST";

    if (parts.size() == 1 && parts[0] == "sessions") {
      if (get) return ok(json{{"sessions", sessions_.ids()}});
      if (post) {
        const json b = parse_body(body);
        const std::string id = create_session(field<std::string>(b, "scaffold"), chain_arg(b, "scaffold_chain"),
                                              field<std::string>(b, "insert"), chain_arg(b, "insert_chain"));
        return ok(io::session_json(*sessions_.snapshot(id)), 201);
      }
    }
    if (parts.size() == 2 && parts[0] == "sessions" && parts[1] == "import" && post) {
      Session s = load_session(body, repository_);
      const std::string id = s.id;
      sessions_.insert(std::move(s));
      {
        auto snap = sessions_.snapshot(id);
        std::lock_guard lock(models_mutex_);
        for (const auto& m : snap->models) model_session_[m.id] = id;
      }
      return ok(io::session_json(*sessions_.snapshot(id)), 201);
    }
    if (parts.size() >= 2 && parts[0] == "sessions") {
      const std::string& sid = parts[1];
      const std::string sub = parts.size() >= 3 ? parts[2] : "";

      if (parts.size() == 2 && get) return ok(io::session_json(*sessions_.snapshot(sid)));
      if (sub == "export" && get) return {200, "application/json", save_session(*sessions_.snapshot(sid))};

      if (sub == "phase" && post) {
        const json b = parse_body(body);
        const Phase to = b.at("phase").is_number()
                             ? phase_from_string(std::to_string(b["phase"].get<int>()))
                             : phase_from_string(field<std::string>(b, "phase"));
        sessions_.mutate(sid, [&](Session& s) { advance_phase(s, to); });
        return ok(io::session_json(*sessions_.snapshot(sid)));
      }
      if (sub == "ss-override" && post) {
        const json b = parse_body(body);
        const Role role = role_from_string(b.value("role", "scaffold"));
        const SSClass cls = ss_class_from_char(field<std::string>(b, "class").at(0));
        sessions_.mutate(sid, [&](Session& s) {
          apply_ss_override(s, role, field<int>(b, "start"), field<int>(b, "end"), cls);
        });
        auto snap = sessions_.snapshot(sid);
        return ok(io::protein_json(snap->protein(role), true));
      }
      if (sub == "structure" && get) {
        const Role role = role_from_string(query_or(query, "role", "scaffold"));
        auto snap = sessions_.snapshot(sid);
        Structure one;
        one.pdb_id = snap->protein(role).pdb_id;
        one.chains.push_back(snap->protein(role).chain());
        return {200, "chemical/x-pdb", write_pdb(one)};
      }
      if (sub == "loops" && parts.size() == 3) {
        if (post) {
          const json b = parse_body(body);
          const Role role = role_from_string(b.value("role", "scaffold"));
          const std::string id = sessions_.mutate(sid, [&](Session& s) {
            return add_custom_loop(s, role, field<int>(b, "start"), field<int>(b, "end"));
          });
          auto snap = sessions_.snapshot(sid);
          return ok(io::loop_json(*snap->protein(role).find_loop(id), snap->protein(role).assignment), 201);
        }
        if (get) {
          const Role role = role_from_string(query_or(query, "role", "scaffold"));
          auto snap = sessions_.snapshot(sid);
          const auto& p = snap->protein(role);
          json loops = json::array();
          if (role == Role::Scaffold) {
            const std::string sort = query_or(query, "sort", "position");
            LoopSortKey key = LoopSortKey::Position;
            if (sort == "id") key = LoopSortKey::Id;
            else if (sort != "position") fail(ErrorCode::UnknownMetric, "unknown loop sort '" + sort + "'");
            const auto& entries = snap->scaffold_loops.entries();
            for (auto i : snap->scaffold_loops.order(key)) {
              json j = io::loop_json(entries[i].loop, p.assignment);
              j["triage"] = std::string(to_string(entries[i].state));
              loops.push_back(std::move(j));
            }
          } else {
            for (const auto& l : p.loops) loops.push_back(io::loop_json(l, p.assignment));
          }
          json views = {{"candidate", json::array()}, {"preserved", json::array()}};
          if (role == Role::Scaffold) {
            for (const Loop* l : snap->scaffold_loops.candidates()) views["candidate"].push_back(l->id);
            for (const Loop* l : snap->scaffold_loops.preserved()) views["preserved"].push_back(l->id);
          }
          return ok(json{{"role", std::string(to_string(role))},
                         {"color", std::string(role_color(role))},
                         {"loops", loops},
                         {"views", views}});
        }
      }
      if (sub == "loops" && parts.size() == 5 && parts[4] == "triage" && post) {
        const json b = parse_body(body);
        const TriageState st = triage_from_string(field<std::string>(b, "state"));
        sessions_.mutate(sid, [&](Session& s) { set_loop_triage(s, parts[3], st); });
        auto snap = sessions_.snapshot(sid);
        const auto& e = snap->scaffold_loops.at(parts[3]);
        json j = io::loop_json(e.loop, snap->scaffold.assignment);
        j["triage"] = std::string(to_string(e.state));
        return ok(j);
      }
      if (sub == "geometry" && get) {
        auto snap = sessions_.snapshot(sid);
        json out = json::object();
        for (Role role : {Role::Scaffold, Role::Insert}) {
          const auto& p = snap->protein(role);
          json loops = json::array();
          for (const auto& l : p.loops) {
            json j = {{"id", l.id}, {"custom", l.custom}};
            j["descriptors"] = l.descriptors ? io::geometry_json(*l.descriptors) : json(nullptr);
            loops.push_back(std::move(j));
          }
          out[std::string(to_string(role))] = {{"color", std::string(role_color(role))}, {"loops", loops}};
        }
        return ok(out);
      }
      if (sub == "flexibility" && get) {
        const Role role = role_from_string(query_or(query, "role", "scaffold"));
        const std::string method = query_or(query, "method", "all");
        const std::string weighting = query_or(query, "weighting", "uniform");
        if (weighting != "uniform" && weighting != "atoms")
          fail(ErrorCode::BadRequest, "weighting must be 'uniform' or 'atoms'");
        std::vector<FlexMethod> methods;
        if (method == "all") methods = {FlexMethod::PdbB, FlexMethod::Gnm, FlexMethod::Anm};
        else methods = {flex_method_from_string(method)};
        std::vector<std::shared_ptr<const FlexibilityProfile>> profiles;
        sessions_.mutate(sid, [&](Session& s) {
          for (auto m : methods) profiles.push_back(flexibility(s, role, m));
        });
        auto snap = sessions_.snapshot(sid);
        const auto& p = snap->protein(role);
        auto elements = elements_of(p.assignment);
        for (auto& e : elements_of(p.loops)) elements.push_back(e);
        json out = {{"role", std::string(to_string(role))}, {"profiles", json::array()}, {"elements", json::array()}};
        std::vector<FlexibilityProfile> plain;
        for (const auto& prof : profiles) {
          out["profiles"].push_back(io::profile_json(*prof));
          for (const auto& e : io::elements_json(aggregate_flexibility(
                   *prof, elements, weighting == "atoms" ? Weighting::AtomCount : Weighting::Uniform,
                   &p.chain())))
            out["elements"].push_back(e);
          plain.push_back(*prof);
        }
        if (plain.size() >= 2) out["correlation"] = io::method_correlation_json(method_correlation(plain));
        return ok(out);
      }
      if (sub == "xcorr" && get) {
        const std::string sort = query_or(query, "sort", "position");
        const bool desc = query_or(query, "order", "desc") != "asc";
        std::vector<Loop> rows;
        MotionCorrelationSet set =
            sessions_.mutate(sid, [&](Session& s) { return correlation(s, &rows); });
        const auto order = sort_correlation_rows(set, rows, sort, desc);
        return ok(io::motion_json(set, order, query_or(query, "residues", "0") == "1"));
      }
      if (sub == "pairings") {
        if (post) {
          const json b = parse_body(body);
          if (b.value("auto", false)) {
            sessions_.mutate(sid, [&](Session& s) { auto_pair(s); });
          } else {
            std::vector<Pairing> pairs;
            if (!b.contains("pairs") || !b["pairs"].is_array())
              fail(ErrorCode::BadRequest, "expected 'pairs' array or 'auto': true");
            for (const auto& p : b["pairs"])
              pairs.push_back({field<std::string>(p, "scaffold_loop"), field<std::string>(p, "insert_loop")});
            sessions_.mutate(sid, [&](Session& s) { set_pairings(s, pairs); });
          }
        }
        if (get || post) {
          auto snap = sessions_.snapshot(sid);
          json sug = json::array();
          if (!snap->scaffold_loops.candidates().empty() && !snap->insert.loops.empty())
            for (const auto& x : suggestions(*snap)) sug.push_back(io::suggestion_json(x));
          json pairs = json::array();
          for (const auto& p : snap->pairings)
            pairs.push_back({{"scaffold_loop", p.scaffold_loop_id}, {"insert_loop", p.insert_loop_id}});
          return ok(json{{"pairings", pairs}, {"suggestions", sug},
                         {"valid_pairings", valid_pairings(*snap).size()}});
        }
      }
      if (sub == "graft" && post) {
        const json b = parse_body(body);
        std::vector<GraftSpec> specs;
        if (b.contains("specs")) {
          for (const auto& s : b["specs"]) specs.push_back(io::spec_from_json(s));
          if (specs.empty()) fail(ErrorCode::EmptySpecs, "'specs' is empty");
        }
        const int window = b.value("window", sessions_.snapshot(sid)->window);
        const std::string job = submit_graft(sid, std::move(specs), window);
        return ok(io::job_json(jobs_.status(job)), 202);
      }
    }
    if (parts.size() == 2 && parts[0] == "jobs" && get) {
      const JobStatus st = jobs_.status(parts[1]);
      json j = io::job_json(st);
      json models = json::array();
      const std::string key = query_or(query, "sort", "composite");
      for (const auto& r : ranked_models(parts[1], key))
        models.push_back({{"id", r.id}, {"spec", io::spec_json(r.spec)}, {"scores", r.scores}, {"note", r.note}});
      j["models"] = models;
      return ok(j);
    }
    if (parts.size() == 2 && parts[0] == "models" && get) {
      const std::string& name = parts[1];
      auto ends = [&](std::string_view suffix) {
        return name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
      };
      if (ends(".pdb")) return {200, "chemical/x-pdb", model_pdb(model(name.substr(0, name.size() - 4)))};
      if (ends(".tsv"))
        return {200, "text/tab-separated-values", model_mask_table(model(name.substr(0, name.size() - 4)))};
    }
    return ok(json{{"error", "NotFound"}, {"message", "no route " + std::string(method) + " " + std::string(path)}}, 404);
  } catch (const Error& e) {
    return ok(json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}, http_status(e.code()));
  } catch (const json::exception& e) {
    return ok(json{{"error", "BadRequest"}, {"message", e.what()}}, 400);
  }
}

// ---- http -----------------------------------------------------------------

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Service& s) : service(s) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query[k] = v;
      const ApiResponse r = service.handle(req.method, req.path, query, req.body);
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Get(R"(/(sessions|jobs|models)(/.*)?)", dispatch);
    server.Post(R"(/(sessions|jobs|models)(/.*)?)", dispatch);
    if (!service.config().static_dir.empty())
      server.set_mount_point("/", service.config().static_dir.string());
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) fail(ErrorCode::BadRequest, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

}  // namespace loopgraft
