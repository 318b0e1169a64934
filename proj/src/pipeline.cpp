#include "loopgraft/pipeline.hpp"

#include "loopgraft/error.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace loopgraft {

namespace {

int to_int(std::string_view s, std::string_view what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(ErrorCode::BadRequest, "bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::optional<std::pair<int, int>> parse_range(std::string_view s) {
  const auto dash = s.find('-', 1);
  if (dash == std::string_view::npos) return std::nullopt;
  try {
    return std::pair{to_int(s.substr(0, dash), "range"), to_int(s.substr(dash + 1), "range")};
  } catch (const Error&) {
    return std::nullopt;
  }
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::BadRequest, "cannot write " + p.string());
}

std::string range_text(const GraftSpec& spec) {
  std::ostringstream out;
  for (std::size_t k = 0; k < spec.pairs.size(); ++k) {
    const auto& p = spec.pairs[k];
    if (k) out << ';';
    out << p.scaffold_start << '-' << p.scaffold_end << "<-" << p.insert_start << '-' << p.insert_end;
  }
  return out.str();
}

}  // namespace

RoleOverride parse_role_override(std::string_view text) {
  const auto c1 = text.find(':');
  const auto c2 = text.rfind(':');
  if (c1 == std::string_view::npos || c1 == c2)
    fail(ErrorCode::BadRequest, "override must be role:start-end:class, got '" + std::string(text) + "'");
  RoleOverride o;
  const auto role = text.substr(0, c1);
  if (role == "s" || role == "S") o.role = Role::Scaffold;
  else if (role == "i" || role == "I") o.role = Role::Insert;
  else o.role = role_from_string(role);
  const auto range = parse_range(text.substr(c1 + 1, c2 - c1 - 1));
  if (!range) fail(ErrorCode::BadRequest, "bad override range in '" + std::string(text) + "'");
  o.start_seq = range->first;
  o.end_seq = range->second;
  const auto cls = text.substr(c2 + 1);
  if (cls.size() != 1) fail(ErrorCode::BadRequest, "override class must be one of H G E C");
  o.ss_class = ss_class_from_char(cls[0]);
  return o;
}

std::string resolve_loop_token(const ProteinState& protein, std::string_view token) {
  if (protein.find_loop(token)) return std::string(token);
  if (auto r = parse_range(token)) {
    if (auto idx = find_loop_covering(protein.loops, protein.assignment, r->first, r->second))
      return protein.loops[*idx].id;
  }
  fail(ErrorCode::UnknownLoop, "no loop matches '" + std::string(token) + "'");
}

RunResult run_pipeline(const StructureRepository& repository, const RunOptions& opt) {
  RunResult result;
  Session s = create_session(repository, opt.scaffold, opt.scaffold_chain, opt.insert,
                             opt.insert_chain, "run");
  s.window = opt.window;
  for (const auto& o : opt.overrides) apply_ss_override(s, o.role, o.start_seq, o.end_seq, o.ss_class);

  advance_phase(s, Phase::P2);
  if (opt.candidates.empty()) {
    for (const auto& e : LoopList(s.scaffold_loops).entries())
      set_loop_triage(s, e.loop.id, TriageState::Candidate);
  } else {
    for (const auto& tok : opt.candidates)
      set_loop_triage(s, resolve_loop_token(s.scaffold, tok), TriageState::Candidate);
  }
  advance_phase(s, Phase::P5);
  auto_pair(s);
  advance_phase(s, Phase::P6);

  const auto specs = default_graft_specs(s, opt.window);
  if (specs.empty()) fail(ErrorCode::EmptySpecs, "no graft specs for the chosen pairings");
  result.spec_count = specs.size();

  const int baseline = count_clashes(s.scaffold.chain());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    RankedModel rec;
    try {
      ChimericModel m = splice(*s.scaffold.structure, s.scaffold.chain_id, *s.insert.structure,
                               s.insert.chain_id, specs[k], baseline);
      apply_surrogate(m);
      if (opt.adapter && !opt.adapter->command.empty()) {
        try {
          external_score(m, *opt.adapter);
        } catch (const Error& e) {
          rec.note = std::string(to_string(e.code())) + ": " + e.what();
        }
      }
      rec.scores = m.scores;
    } catch (const Error&) {
      ++result.failed_specs;
      continue;
    }
    rec.spec = specs[k];
    rec.id = "model-" + std::to_string(k + 1);
    result.ranked.push_back(std::move(rec));
  }

  std::vector<std::map<std::string, double>> scores;
  for (const auto& r : result.ranked) scores.push_back(r.scores);
  std::vector<RankedModel> ordered;
  for (auto i : rank_models(scores, opt.rank_key)) ordered.push_back(std::move(result.ranked[i]));
  result.ranked = std::move(ordered);

  for (const auto& r : result.ranked) {
    ModelRecord m;
    m.id = r.id;
    m.spec = r.spec;
    m.scores = r.scores;
    m.note = r.note;
    if (s.models.size() < opt.keep) s.models.push_back(std::move(m));
  }

  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    std::ostringstream tsv;
    tsv << "rank\tmodel\tranges";
    std::vector<std::string> keys;
    if (!result.ranked.empty())
      for (const auto& [k, _] : result.ranked.front().scores) keys.push_back(k);
    for (const auto& k : keys) tsv << '\t' << k;
    tsv << "\tnote\n";
    tsv << std::setprecision(6);
    for (std::size_t r = 0; r < result.ranked.size(); ++r) {
      const auto& m = result.ranked[r];
      tsv << r + 1 << '\t' << m.id << '\t' << range_text(m.spec);
      for (const auto& k : keys) {
        auto it = m.scores.find(k);
        tsv << '\t';
        if (it != m.scores.end()) tsv << it->second;
      }
      tsv << '\t' << m.note << '\n';
    }
    const auto ranked_path = opt.out_dir / "ranked.tsv";
    write_text(ranked_path, tsv.str());
    result.written.push_back(ranked_path);

    for (std::size_t r = 0; r < std::min(opt.keep, result.ranked.size()); ++r) {
      const auto& rec = result.ranked[r];
      ChimericModel m = splice(*s.scaffold.structure, s.scaffold.chain_id, *s.insert.structure,
                               s.insert.chain_id, rec.spec);
      m.id = rec.id;
      m.scores = rec.scores;
      std::ostringstream stem;
      stem << "rank" << std::setw(2) << std::setfill('0') << r + 1 << "_" << rec.id;
      const auto pdb = opt.out_dir / (stem.str() + ".pdb");
      const auto mask = opt.out_dir / (stem.str() + ".mask.tsv");
      write_text(pdb, model_pdb(m));
      write_text(mask, model_mask_table(m));
      result.written.push_back(pdb);
      result.written.push_back(mask);
    }
    const auto session_path = opt.out_dir / "session.json";
    write_text(session_path, save_session(s));
    result.written.push_back(session_path);
  }
  result.session = std::move(s);
  return result;
}

}  // namespace loopgraft
