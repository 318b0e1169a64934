#include "loopgraft/session.hpp"

#include "loopgraft/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>

namespace loopgraft {

using nlohmann::json;

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::P1: return "secondary-structure";
    case Phase::P2: return "loop-exploration";
    case Phase::P3: return "flexibility";
    case Phase::P4: return "motion-correlation";
    case Phase::P5: return "pairing";
    case Phase::P6: return "grafting";
  }
  return "secondary-structure";
}

Phase phase_from_string(std::string_view s) {
  std::string t(s);
  if (!t.empty() && (t[0] == 'P' || t[0] == 'p')) t.erase(0, 1);
  if (t.size() == 1 && t[0] >= '1' && t[0] <= '6') return static_cast<Phase>(t[0] - '0');
  for (int k = 1; k <= kPhaseCount; ++k)
    if (phase_name(static_cast<Phase>(k)) == s) return static_cast<Phase>(k);
  fail(ErrorCode::BadRequest, "unknown phase '" + std::string(s) + "'");
}

std::string_view to_string(Role r) { return r == Role::Scaffold ? "scaffold" : "insert"; }

Role role_from_string(std::string_view s) {
  if (s == "scaffold") return Role::Scaffold;
  if (s == "insert") return Role::Insert;
  fail(ErrorCode::BadRequest, "unknown role '" + std::string(s) + "'");
}

std::string_view role_color(Role r) { return r == Role::Scaffold ? "red" : "blue"; }

const Loop* ProteinState::find_loop(std::string_view id) const {
  for (const auto& l : loops)
    if (l.id == id) return &l;
  return nullptr;
}

void rebuild_protein(ProteinState& p) {
  SSAssignment a = assign_secondary_structure(*p.structure, p.chain_id);
  for (const auto& o : p.overrides) a = reassign_region(std::move(a), o.start_seq, o.end_seq, o.ss_class);
  std::vector<Loop> loops;
  try {
    loops = extract_loops(a, p.pdb_id);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewSegments) throw;
  }
  for (const auto& c : p.custom_loops) {
    Loop l = define_custom_loop(a, p.pdb_id, c.start_seq, c.end_seq);
    const std::string base = l.id;
    for (int k = 2; std::any_of(loops.begin(), loops.end(), [&](const Loop& x) { return x.id == l.id; }); ++k)
      l.id = base + std::to_string(k);
    loops.push_back(std::move(l));
  }
  int ordinal = 0;
  for (auto& l : loops) {
    l.ordinal = ++ordinal;
    try {
      l.descriptors = compute_descriptors(l, p.trace);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSegment) throw;
      l.descriptors.reset();
    }
  }
  p.assignment = std::move(a);
  p.loops = std::move(loops);
}

namespace {

ProteinState load_protein(const StructureRepository& repo, Role role, std::string_view ref,
                          char chain) {
  auto loaded = repo.load(ref);
  ProteinState p;
  p.role = role;
  p.reference = std::string(ref);
  p.structure = loaded.structure;
  p.content_hash = loaded.content_hash;
  p.pdb_id = loaded.structure->pdb_id.empty() ? std::string(ref) : loaded.structure->pdb_id;
  p.chain_id = chain == 0 ? loaded.structure->chains.front().id : chain;
  p.trace = ca_trace(*p.structure, p.chain_id);
  return p;
}

void sync_scaffold_list(Session& s) {
  std::map<std::string, TriageState> previous;
  for (const auto& e : s.scaffold_loops.entries()) previous[e.loop.id] = e.state;
  LoopList list(s.scaffold.loops);
  for (auto& e : list.entries())
    if (auto it = previous.find(e.loop.id); it != previous.end()) e.state = it->second;
  s.scaffold_loops = std::move(list);
}

}  // namespace

Session create_session(const StructureRepository& repository, std::string_view scaffold_ref,
                       char scaffold_chain, std::string_view insert_ref, char insert_chain,
                       std::string id) {
  Session s;
  s.id = std::move(id);
  s.scaffold = load_protein(repository, Role::Scaffold, scaffold_ref, scaffold_chain);
  s.insert = load_protein(repository, Role::Insert, insert_ref, insert_chain);
  rebuild_protein(s.scaffold);
  rebuild_protein(s.insert);
  sync_scaffold_list(s);
  return s;
}

std::vector<Pairing> valid_pairings(const Session& s) {
  std::vector<Pairing> out;
  for (const auto& p : s.pairings) {
    if (!s.scaffold_loops.contains(p.scaffold_loop_id)) continue;
    if (s.scaffold_loops.at(p.scaffold_loop_id).state != TriageState::Candidate) continue;
    if (!s.insert.find_loop(p.insert_loop_id)) continue;
    out.push_back(p);
  }
  return out;
}

bool gate_open(const Session& s, Phase p, std::string* reason) {
  auto refuse = [&](const char* why) {
    if (reason) *reason = why;
    return false;
  };
  if (p == Phase::P5 && s.scaffold_loops.candidates().empty())
    return refuse("pairing needs at least one candidate loop");
  if (p == Phase::P6 && valid_pairings(s).empty())
    return refuse("grafting needs at least one confirmed pairing of a candidate loop");
  return true;
}

Phase reachable_phase(const Session& s) {
  Phase best = Phase::P1;
  for (int k = 2; k <= kPhaseCount; ++k) {
    if (!gate_open(s, static_cast<Phase>(k))) break;
    best = static_cast<Phase>(k);
  }
  return best;
}

void refresh_phase(Session& s, Phase p) {
  switch (p) {
    case Phase::P3:
      for (auto m : {FlexMethod::PdbB, FlexMethod::Gnm, FlexMethod::Anm}) {
        try {
          flexibility(s, Role::Scaffold, m);
        } catch (const Error&) {
          // recorded in flex_errors by flexibility()
        }
      }
      break;
    case Phase::P4:
      if (!s.scaffold_loops.candidates().empty()) {
        try {
          correlation(s);
        } catch (const Error&) {
        }
      }
      break;
    default:
      break;
  }
  s.stale[static_cast<std::size_t>(index_of(p))] = false;
}

void advance_phase(Session& s, Phase to) {
  if (to <= s.phase) {
    s.phase = to;
    return;
  }
  for (int k = static_cast<int>(s.phase) + 1; k <= static_cast<int>(to); ++k) {
    std::string reason;
    if (!gate_open(s, static_cast<Phase>(k), &reason))
      fail(ErrorCode::GateUnsatisfied, "cannot enter " + std::string(phase_name(static_cast<Phase>(k))) +
                                           ": " + reason);
  }
  for (int k = static_cast<int>(s.phase); k <= static_cast<int>(to); ++k) {
    refresh_phase(s, static_cast<Phase>(k));
    if (k < static_cast<int>(to)) s.complete[static_cast<std::size_t>(k - 1)] = true;
  }
  s.phase = to;
}

void mark_edit(Session& s, Phase owner) {
  const int o = index_of(owner);
  s.complete[static_cast<std::size_t>(o)] = false;
  for (int k = o + 1; k < kPhaseCount; ++k) {
    s.stale[static_cast<std::size_t>(k)] = true;
    s.complete[static_cast<std::size_t>(k)] = false;
  }
  if (s.phase > owner) s.phase = owner;
}

void apply_ss_override(Session& s, Role role, int start_seq, int end_seq, SSClass cls) {
  ProteinState& p = s.protein(role);
  // validate before mutating
  (void)reassign_region(p.assignment, start_seq, end_seq, cls);
  ProteinState next = p;
  next.overrides.push_back({start_seq, end_seq, cls});
  rebuild_protein(next);
  p = std::move(next);
  if (role == Role::Scaffold) sync_scaffold_list(s);
  mark_edit(s, Phase::P1);
}

void set_loop_triage(Session& s, std::string_view loop_id, TriageState state) {
  s.scaffold_loops = set_triage(s.scaffold_loops, loop_id, state);
  mark_edit(s, Phase::P2);
}

std::string add_custom_loop(Session& s, Role role, int start_seq, int end_seq) {
  ProteinState& p = s.protein(role);
  (void)define_custom_loop(p.assignment, p.pdb_id, start_seq, end_seq);
  ProteinState next = p;
  next.custom_loops.push_back({start_seq, end_seq});
  rebuild_protein(next);
  const std::string id = next.loops.back().id;
  p = std::move(next);
  if (role == Role::Scaffold) sync_scaffold_list(s);
  mark_edit(s, Phase::P2);
  return id;
}

void set_pairings(Session& s, std::vector<Pairing> pairings) {
  for (const auto& p : pairings) {
    const auto& entry = s.scaffold_loops.at(p.scaffold_loop_id);
    if (entry.state != TriageState::Candidate)
      fail(ErrorCode::BadRequest, "scaffold loop " + p.scaffold_loop_id + " is not a candidate");
    if (!s.insert.find_loop(p.insert_loop_id))
      fail(ErrorCode::UnknownLoop, "no insert loop '" + p.insert_loop_id + "'");
  }
  s.pairings = std::move(pairings);
  mark_edit(s, Phase::P5);
}

std::vector<PairSuggestion> suggestions(const Session& s) {
  std::vector<Loop> candidates, inserts;
  for (const Loop* l : s.scaffold_loops.candidates())
    if (l->descriptors) candidates.push_back(*l);
  for (const auto& l : s.insert.loops)
    if (l.descriptors) inserts.push_back(l);
  return suggest_pairs(candidates, inserts);
}

void auto_pair(Session& s) {
  if (s.scaffold_loops.candidates().empty())
    fail(ErrorCode::GateUnsatisfied, "automatic pairing needs at least one candidate loop");
  std::vector<Pairing> chosen;
  for (const auto& sug : suggestions(s))
    if (sug.is_default) chosen.push_back({sug.scaffold_loop_id, sug.insert_loop_id});
  set_pairings(s, std::move(chosen));
}

std::shared_ptr<const FlexibilityProfile> flexibility(Session& s, Role role, FlexMethod method) {
  const ProteinState& p = s.protein(role);
  const double cutoff = method == FlexMethod::Anm ? 15.0 : 10.0;
  const std::string key = p.content_hash + ":" + std::string(1, p.chain_id) + ":" +
                          std::string(to_string(method)) + ":" + std::to_string(cutoff);
  if (auto it = s.flex_cache.find(key); it != s.flex_cache.end()) return it->second;
  try {
    FlexibilityProfile prof;
    switch (method) {
      case FlexMethod::PdbB: prof = bfactor_profile(*p.structure, p.chain_id); break;
      case FlexMethod::Gnm: prof = gnm_fluctuations(p.trace, cutoff); break;
      case FlexMethod::Anm: prof = anm_fluctuations(p.trace, cutoff); break;
    }
    auto ptr = std::make_shared<const FlexibilityProfile>(std::move(prof));
    s.flex_cache[key] = ptr;
    s.flex_errors.erase(key);
    return ptr;
  } catch (const Error& e) {
    s.flex_errors[key] = e.what();
    throw;
  }
}

MotionCorrelationSet correlation(Session& s, std::vector<Loop>* rows_out) {
  const ProteinState& p = s.scaffold;
  const std::string key = p.content_hash + ":" + std::string(1, p.chain_id) + ":" +
                          std::to_string(s.correlation_options.cutoff) + ":" +
                          std::to_string(s.correlation_options.modes);
  std::shared_ptr<const Eigen::MatrixXd> c;
  if (auto it = s.xcorr_cache.find(key); it != s.xcorr_cache.end()) {
    c = it->second;
  } else {
    c = std::make_shared<const Eigen::MatrixXd>(
        residue_cross_correlation(p.trace, s.correlation_options));
    s.xcorr_cache[key] = c;
  }
  std::vector<Loop> rows, cols;
  for (const auto& e : s.scaffold_loops.entries()) {
    if (e.state == TriageState::Candidate) cols.push_back(e.loop);
    else if (e.state == TriageState::Preserved) rows.push_back(e.loop);
  }
  auto set = aggregate_motion(*c, p.trace, rows, cols);
  if (rows_out) *rows_out = std::move(rows);
  return set;
}

std::pair<int, int> graft_range(const Loop& loop, const SSAssignment& a) {
  return {a.keys[loop.ss1.end].seq_num, a.keys[loop.ss2.start].seq_num};
}

std::vector<GraftSpec> default_graft_specs(const Session& s, int window) {
  std::vector<GraftSpec> out;
  const auto bounds = variant_bounds(s.scaffold.chain(), s.insert.chain(), GraftSpec{}.anchor_len);
  for (const auto& p : valid_pairings(s)) {
    const Loop& sl = s.scaffold_loops.at(p.scaffold_loop_id).loop;
    const Loop* il = s.insert.find_loop(p.insert_loop_id);
    auto [s0, s1] = graft_range(sl, s.scaffold.assignment);
    auto [i0, i1] = graft_range(*il, s.insert.assignment);
    GraftSpec base;
    base.pairs.push_back({p.scaffold_loop_id, p.insert_loop_id, s0, s1, i0, i1});
    try {
      for (auto& v : enumerate_variants(base, window, bounds)) out.push_back(std::move(v));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateRange) throw;
    }
  }
  return out;
}

// ---- persistence ----------------------------------------------------------

namespace {

json spec_json(const GraftSpec& spec) {
  json pairs = json::array();
  for (const auto& p : spec.pairs)
    pairs.push_back({{"scaffold_loop", p.scaffold_loop_id},
                     {"insert_loop", p.insert_loop_id},
                     {"scaffold_start", p.scaffold_start},
                     {"scaffold_end", p.scaffold_end},
                     {"insert_start", p.insert_start},
                     {"insert_end", p.insert_end}});
  return {{"pairs", pairs}, {"anchor_len", spec.anchor_len}};
}

GraftSpec spec_from(const json& j) {
  GraftSpec spec;
  spec.anchor_len = j.value("anchor_len", 3);
  for (const auto& p : j.at("pairs"))
    spec.pairs.push_back({p.value("scaffold_loop", ""), p.value("insert_loop", ""),
                          p.at("scaffold_start").get<int>(), p.at("scaffold_end").get<int>(),
                          p.at("insert_start").get<int>(), p.at("insert_end").get<int>()});
  return spec;
}

json protein_json(const ProteinState& p) {
  json overrides = json::array();
  for (const auto& o : p.overrides)
    overrides.push_back({{"start", o.start_seq}, {"end", o.end_seq},
                         {"class", std::string(1, to_char(o.ss_class))}});
  json custom = json::array();
  for (const auto& c : p.custom_loops) custom.push_back({{"start", c.start_seq}, {"end", c.end_seq}});
  return {{"reference", p.reference},
          {"pdb_id", p.pdb_id},
          {"chain", std::string(1, p.chain_id)},
          {"sha256", p.content_hash},
          {"overrides", overrides},
          {"custom_loops", custom}};
}

}  // namespace

std::string save_session(const Session& s) {
  json triage = json::object();
  for (const auto& e : s.scaffold_loops.entries()) triage[e.loop.id] = std::string(to_string(e.state));
  json pairings = json::array();
  for (const auto& p : s.pairings)
    pairings.push_back({{"scaffold_loop", p.scaffold_loop_id}, {"insert_loop", p.insert_loop_id}});
  json models = json::array();
  for (const auto& m : s.models)
    models.push_back({{"id", m.id}, {"job", m.job_id}, {"spec", spec_json(m.spec)},
                      {"scores", m.scores}, {"note", m.note}});
  json doc = {{"schema", "loopgraft-session"},
              {"version", kSessionSchemaVersion},
              {"id", s.id},
              {"scaffold", protein_json(s.scaffold)},
              {"insert", protein_json(s.insert)},
              {"triage", triage},
              {"pairings", pairings},
              {"phase", static_cast<int>(s.phase)},
              {"complete", s.complete},
              {"stale", s.stale},
              {"window", s.window},
              {"correlation", {{"cutoff", s.correlation_options.cutoff},
                               {"modes", s.correlation_options.modes}}},
              {"models", models}};
  return doc.dump(2);
}

Session load_session(std::string_view bytes, const StructureRepository& repository) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaVersionMismatch, std::string("not a readable session document: ") + e.what());
  }
  if (!doc.is_object() || doc.value("schema", "") != "loopgraft-session" ||
      !doc.contains("version") || !doc["version"].is_number_integer())
    fail(ErrorCode::SchemaVersionMismatch, "document is not a loopgraft session");
  if (doc["version"].get<int>() != kSessionSchemaVersion)
    fail(ErrorCode::SchemaVersionMismatch,
         "session schema version " + std::to_string(doc["version"].get<int>()) +
             " (expected " + std::to_string(kSessionSchemaVersion) + ")");

  try {
    auto chain_of = [](const json& p) {
      const std::string c = p.at("chain").get<std::string>();
      return c.empty() ? ' ' : c[0];
    };
    const json& sj = doc.at("scaffold");
    const json& ij = doc.at("insert");
    Session s = create_session(repository, sj.at("reference").get<std::string>(), chain_of(sj),
                               ij.at("reference").get<std::string>(), chain_of(ij),
                               doc.at("id").get<std::string>());
    for (auto [role, pj] : {std::pair{Role::Scaffold, &sj}, std::pair{Role::Insert, &ij}}) {
      ProteinState& p = s.protein(role);
      const std::string hash = pj->value("sha256", "");
      if (!hash.empty() && hash != p.content_hash)
        fail(ErrorCode::BadRequest, std::string(to_string(role)) + " structure " + p.reference +
                                        " changed since the session was saved");
      for (const auto& o : pj->value("overrides", json::array()))
        p.overrides.push_back({o.at("start").get<int>(), o.at("end").get<int>(),
                               ss_class_from_char(o.at("class").get<std::string>().at(0))});
      for (const auto& c : pj->value("custom_loops", json::array()))
        p.custom_loops.push_back({c.at("start").get<int>(), c.at("end").get<int>()});
      rebuild_protein(p);
    }
    s.scaffold_loops = LoopList(s.scaffold.loops);
    const json triage = doc.value("triage", json::object());
    for (const auto& [id, state] : triage.items())
      if (s.scaffold_loops.contains(id))
        s.scaffold_loops.at(id).state = triage_from_string(state.get<std::string>());
    for (const auto& p : doc.value("pairings", json::array()))
      s.pairings.push_back({p.at("scaffold_loop").get<std::string>(),
                            p.at("insert_loop").get<std::string>()});
    s.phase = static_cast<Phase>(std::clamp(doc.value("phase", 1), 1, kPhaseCount));
    if (doc.contains("complete")) s.complete = doc["complete"].get<std::array<bool, kPhaseCount>>();
    if (doc.contains("stale")) s.stale = doc["stale"].get<std::array<bool, kPhaseCount>>();
    s.window = doc.value("window", 3);
    if (doc.contains("correlation")) {
      s.correlation_options.cutoff = doc["correlation"].value("cutoff", 10.0);
      s.correlation_options.modes = doc["correlation"].value("modes", 20);
    }
    for (const auto& m : doc.value("models", json::array())) {
      ModelRecord r;
      r.id = m.at("id").get<std::string>();
      r.job_id = m.value("job", "");
      r.spec = spec_from(m.at("spec"));
      r.scores = m.value("scores", std::map<std::string, double>{});
      r.note = m.value("note", "");
      s.models.push_back(std::move(r));
    }
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaVersionMismatch, std::string("session document is incomplete: ") + e.what());
  }
}

}  // namespace loopgraft
