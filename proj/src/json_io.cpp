#include "loopgraft/json_io.hpp"

#include "loopgraft/error.hpp"

namespace loopgraft::io {

json key_json(const ResidueKey& k) {
  json j = {{"seq", k.seq_num}};
  j["icode"] = k.insertion_code == ' ' ? std::string() : std::string(1, k.insertion_code);
  return j;
}

json geometry_json(const LoopGeometry& g) {
  return {{"D", g.D}, {"delta", g.delta}, {"theta", g.theta}, {"rho", g.rho}};
}

json delta_json(const GeometryDelta& d) {
  return {{"dD", d.dD}, {"dDelta", d.dDelta}, {"dTheta", d.dTheta}, {"dRho", d.dRho}};
}

namespace {

json segment_json(const Segment& s, const SSAssignment& a) {
  json j = {{"class", std::string(1, to_char(s.ss_class))},
            {"start", s.start},
            {"end", s.end}};
  if (s.length() > 0) {
    j["start_seq"] = a.keys[s.start].seq_num;
    j["end_seq"] = a.keys[s.end].seq_num;
  } else {
    j["start_seq"] = nullptr;
    j["end_seq"] = nullptr;
  }
  return j;
}

}  // namespace

json loop_json(const Loop& loop, const SSAssignment& a) {
  json j = {{"id", loop.id},
            {"ordinal", loop.ordinal},
            {"custom", loop.custom},
            {"ss1", segment_json(loop.ss1, a)},
            {"coil", segment_json(loop.coil, a)},
            {"ss2", segment_json(loop.ss2, a)},
            {"first_seq", a.keys[loop.first_index()].seq_num},
            {"last_seq", a.keys[loop.last_index()].seq_num},
            {"graft_range", {a.keys[loop.ss1.end].seq_num, a.keys[loop.ss2.start].seq_num}}};
  j["descriptors"] = loop.descriptors ? geometry_json(*loop.descriptors) : json(nullptr);
  return j;
}

json segments_json(const SSAssignment& a) {
  json out = json::array();
  for (const auto& s : segments_of(a)) out.push_back(segment_json(s, a));
  return out;
}

json residues_json(const Chain& chain, const SSAssignment& a) {
  json out = json::array();
  for (std::size_t i = 0; i < chain.residues.size(); ++i) {
    const auto& r = chain.residues[i];
    json j = key_json(r.key);
    j["name"] = r.name;
    j["ss"] = std::string(1, to_char(a.classes[i]));
    j["provenance"] = a.provenance[i] == Provenance::Manual ? "manual" : "automatic";
    out.push_back(std::move(j));
  }
  return out;
}

json protein_json(const ProteinState& p, bool with_residues) {
  json j = {{"role", std::string(to_string(p.role))},
            {"color", std::string(role_color(p.role))},
            {"reference", p.reference},
            {"pdb_id", p.pdb_id},
            {"chain", std::string(1, p.chain_id)},
            {"sha256", p.content_hash},
            {"residue_count", p.assignment.size()},
            {"ss", p.assignment.class_string()},
            {"segments", segments_json(p.assignment)},
            {"loop_count", p.loops.size()}};
  json overrides = json::array();
  for (const auto& o : p.overrides)
    overrides.push_back({{"start", o.start_seq}, {"end", o.end_seq},
                         {"class", std::string(1, to_char(o.ss_class))}});
  j["overrides"] = overrides;
  if (with_residues) j["residues"] = residues_json(p.chain(), p.assignment);
  return j;
}

json suggestion_json(const PairSuggestion& s) {
  return {{"scaffold_loop", s.scaffold_loop_id}, {"insert_loop", s.insert_loop_id},
          {"score", s.score},                    {"components", delta_json(s.components)},
          {"rank", s.rank},                      {"default", s.is_default}};
}

json profile_json(const FlexibilityProfile& p) {
  json keys = json::array();
  for (const auto& k : p.keys) keys.push_back(key_json(k));
  return {{"method", std::string(to_string(p.method))},
          {"chain", std::string(1, p.chain_id)},
          {"residues", keys},
          {"values", std::vector<double>(p.values.data(), p.values.data() + p.values.size())},
          {"normalized",
           std::vector<double>(p.normalized.data(), p.normalized.data() + p.normalized.size())},
          {"missing_bfactors", p.missing_bfactors}};
}

json elements_json(const std::vector<ElementFlexibility>& e) {
  json out = json::array();
  for (const auto& x : e)
    out.push_back({{"id", x.element_id},
                   {"method", std::string(to_string(x.method))},
                   {"value", x.coarse_value}});
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

json method_correlation_json(const MethodCorrelation& m) {
  json methods = json::array();
  for (auto x : m.methods) methods.push_back(std::string(to_string(x)));
  json low = json::array();
  for (Eigen::Index i = 0; i < m.low_significance.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.low_significance.cols(); ++j)
      row.push_back(static_cast<bool>(m.low_significance(i, j)));
    low.push_back(std::move(row));
  }
  return {{"methods", methods},
          {"r", matrix_json(m.r)},
          {"p", matrix_json(m.p)},
          {"low_significance", low},
          {"threshold", m.threshold}};
}

json motion_json(const MotionCorrelationSet& set, const std::vector<std::size_t>& order,
                 bool with_residue_matrix) {
  json j = {{"rows", set.row_ids},
            {"columns", set.column_ids},
            {"order", order},
            {"ss_corr", matrix_json(set.ss_corr)},
            {"loop_corr", matrix_json(set.loop_corr)},
            {"ss_to_coil", matrix_json(set.ss_to_coil)}};
  if (with_residue_matrix) j["residue"] = matrix_json(set.residue);
  return j;
}

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

GraftSpec spec_from_json(const json& j) {
  try {
    GraftSpec spec;
    spec.anchor_len = j.value("anchor_len", 3);
    for (const auto& p : j.at("pairs"))
      spec.pairs.push_back({p.value("scaffold_loop", ""), p.value("insert_loop", ""),
                            p.at("scaffold_start").get<int>(), p.at("scaffold_end").get<int>(),
                            p.at("insert_start").get<int>(), p.at("insert_end").get<int>()});
    return spec;
  } catch (const json::exception& e) {
    fail(ErrorCode::BadRequest, std::string("malformed graft spec: ") + e.what());
  }
}

json job_json(const JobStatus& j) {
  json history = json::array();
  for (auto s : j.history) history.push_back(std::string(to_string(s)));
  return {{"id", j.id},
          {"session", j.session_id},
          {"kind", std::string(to_string(j.kind))},
          {"state", std::string(to_string(j.state))},
          {"progress", j.progress},
          {"error", j.error},
          {"results", j.results},
          {"history", history}};
}

json session_json(const Session& s) {
  json phases = json::array();
  for (int k = 1; k <= kPhaseCount; ++k) {
    const auto p = static_cast<Phase>(k);
    std::string reason;
    const bool open = gate_open(s, p, &reason);
    phases.push_back({{"index", k},
                      {"name", std::string(phase_name(p))},
                      {"complete", s.complete[static_cast<std::size_t>(k - 1)]},
                      {"stale", s.stale[static_cast<std::size_t>(k - 1)]},
                      {"gate_open", open},
                      {"reason", reason}});
  }
  json pairings = json::array();
  for (const auto& p : s.pairings)
    pairings.push_back({{"scaffold_loop", p.scaffold_loop_id}, {"insert_loop", p.insert_loop_id}});
  json triage = json::object();
  for (const auto& e : s.scaffold_loops.entries()) triage[e.loop.id] = std::string(to_string(e.state));
  json models = json::array();
  for (const auto& m : s.models) models.push_back({{"id", m.id}, {"scores", m.scores}});
  return {{"id", s.id},
          {"phase", static_cast<int>(s.phase)},
          {"phase_name", std::string(phase_name(s.phase))},
          {"phases", phases},
          {"reachable_phase", static_cast<int>(reachable_phase(s))},
          {"scaffold", protein_json(s.scaffold, false)},
          {"insert", protein_json(s.insert, false)},
          {"triage", triage},
          {"pairings", pairings},
          {"valid_pairings", valid_pairings(s).size()},
          {"window", s.window},
          {"models", models},
          {"jobs", s.job_ids}};
}

}  // namespace loopgraft::io
