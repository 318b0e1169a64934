#pragma once

#include "loopgraft/archive.hpp"
#include "loopgraft/grafting.hpp"
#include "loopgraft/session.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace loopgraft {

struct RoleOverride {
  Role role = Role::Scaffold;
  int start_seq = 0;
  int end_seq = 0;
  SSClass ss_class = SSClass::Coil;
};

/// "scaffold:10-12:E" (role may be abbreviated to s/i).
RoleOverride parse_role_override(std::string_view text);

struct RunOptions {
  std::string scaffold;
  char scaffold_chain = 0;
  std::string insert;
  char insert_chain = 0;
  std::vector<RoleOverride> overrides;
  /// Loop ids or residue ranges "a-b" resolved to the covering loop. Empty
  /// marks every scaffold loop as candidate.
  std::vector<std::string> candidates;
  int window = 3;
  std::size_t keep = 5;  // chimeras written to disk
  std::string rank_key = "composite";
  std::optional<AdapterConfig> adapter;
  std::filesystem::path out_dir;  // nothing written when empty
};

struct RankedModel {
  std::string id;
  GraftSpec spec;
  std::map<std::string, double> scores;
  std::string note;
};

struct RunResult {
  Session session;
  std::size_t spec_count = 0;
  std::size_t failed_specs = 0;
  std::vector<RankedModel> ranked;
  std::vector<std::filesystem::path> written;
};

/// Resolves a candidate token against the scaffold loops. Throws UnknownLoop.
std::string resolve_loop_token(const ProteinState& protein, std::string_view token);

/// Headless pipeline: create session, apply overrides, triage, advance to
/// pairing, auto-pair, advance to grafting, score every window variant and
/// rank. Writes ranked.tsv, session.json and the top `keep` chimeras (PDB plus
/// origin mask TSV) into out_dir.
RunResult run_pipeline(const StructureRepository& repository, const RunOptions& options);

}  // namespace loopgraft
