#pragma once

#include "loopgraft/archive.hpp"
#include "loopgraft/dynamics.hpp"
#include "loopgraft/grafting.hpp"
#include "loopgraft/loop_geometry.hpp"
#include "loopgraft/loops.hpp"
#include "loopgraft/secondary_structure.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loopgraft {

/// P1 secondary structure, P2 loop exploration, P3 flexibility, P4 motion
/// correlation, P5 pairing, P6 grafting.
enum class Phase { P1 = 1, P2, P3, P4, P5, P6 };
constexpr int kPhaseCount = 6;

constexpr int index_of(Phase p) { return static_cast<int>(p) - 1; }
std::string_view phase_name(Phase p);
/// Accepts "P3", "3" or the phase name. Throws BadRequest.
Phase phase_from_string(std::string_view s);

enum class Role { Scaffold, Insert };
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);
/// Scaffold is drawn red, Insert blue.
std::string_view role_color(Role r);

struct SsOverride {
  int start_seq = 0;
  int end_seq = 0;
  SSClass ss_class = SSClass::Coil;

  friend bool operator==(const SsOverride&, const SsOverride&) = default;
};

struct CustomLoopDef {
  int start_seq = 0;
  int end_seq = 0;

  friend bool operator==(const CustomLoopDef&, const CustomLoopDef&) = default;
};

struct ProteinState {
  Role role = Role::Scaffold;
  std::string reference;  // as given at creation: id or path
  std::string pdb_id;
  char chain_id = 'A';
  std::string content_hash;
  std::shared_ptr<const Structure> structure;
  CaTrace trace;
  std::vector<SsOverride> overrides;
  std::vector<CustomLoopDef> custom_loops;

  // derived from structure + overrides + custom loops
  SSAssignment assignment;
  std::vector<Loop> loops;  // extracted then custom, descriptors filled where fittable

  const Chain& chain() const { return structure->chain(chain_id); }
  const Loop* find_loop(std::string_view id) const;
};

struct Pairing {
  std::string scaffold_loop_id;
  std::string insert_loop_id;

  friend bool operator==(const Pairing&, const Pairing&) = default;
};

struct ModelRecord {
  std::string id;
  std::string job_id;
  GraftSpec spec;
  std::map<std::string, double> scores;
  std::string note;  // adapter failure text, if any
};

/// Phase-gated state of one grafting session. Decision state (overrides,
/// custom loops, triage, pairings, models) is persisted; everything else is
/// recomputed from it.
struct Session {
  std::string id;
  ProteinState scaffold;
  ProteinState insert;
  LoopList scaffold_loops;  // triage applies to Scaffold loops only
  std::vector<Pairing> pairings;
  Phase phase = Phase::P1;
  std::array<bool, kPhaseCount> complete{};
  std::array<bool, kPhaseCount> stale{};
  std::vector<ModelRecord> models;
  std::vector<std::string> job_ids;
  int window = 3;
  CorrelationOptions correlation_options;

  // Derived caches, keyed by content hash of their inputs.
  std::map<std::string, std::shared_ptr<const FlexibilityProfile>> flex_cache;
  std::map<std::string, std::string> flex_errors;
  std::map<std::string, std::shared_ptr<const Eigen::MatrixXd>> xcorr_cache;

  ProteinState& protein(Role r) { return r == Role::Scaffold ? scaffold : insert; }
  const ProteinState& protein(Role r) const { return r == Role::Scaffold ? scaffold : insert; }
};

/// Loads both proteins, assigns secondary structure, extracts loops and
/// starts in P1. A chain of 0 selects the first chain. Propagates load
/// errors.
Session create_session(const StructureRepository& repository, std::string_view scaffold_ref,
                       char scaffold_chain, std::string_view insert_ref, char insert_chain,
                       std::string id);

/// Rebuilds assignment and loops of one protein from its structure,
/// overrides and custom loops.
void rebuild_protein(ProteinState& protein);

/// Pairings whose scaffold loop is a current candidate and whose insert loop exists.
std::vector<Pairing> valid_pairings(const Session& s);

/// Gate for entering `p` from below. Pure function of the session.
bool gate_open(const Session& s, Phase p, std::string* reason = nullptr);
/// Highest phase reachable from the current state.
Phase reachable_phase(const Session& s);

/// Backward moves are always allowed; forward moves check the gate of every
/// phase entered and complete the phases passed. Throws GateUnsatisfied.
void advance_phase(Session& s, Phase to);

/// An edit owned by phase `owner` marks every later phase stale and
/// incomplete and pulls the current phase back to `owner`.
void mark_edit(Session& s, Phase owner);

void apply_ss_override(Session& s, Role role, int start_seq, int end_seq, SSClass cls);
void set_loop_triage(Session& s, std::string_view loop_id, TriageState state);
/// Returns the new loop id.
std::string add_custom_loop(Session& s, Role role, int start_seq, int end_seq);
/// Throws UnknownLoop for ids absent from the session, BadRequest when the
/// scaffold loop is not a candidate.
void set_pairings(Session& s, std::vector<Pairing> pairings);
/// Confirms the greedy default pairing of the current candidates.
void auto_pair(Session& s);

/// Cached profile. Throws dynamics errors.
std::shared_ptr<const FlexibilityProfile> flexibility(Session& s, Role role, FlexMethod method);
/// Rows are non-candidate, non-unsuitable scaffold loops; columns the candidates.
MotionCorrelationSet correlation(Session& s, std::vector<Loop>* rows = nullptr);
std::vector<PairSuggestion> suggestions(const Session& s);

/// Residue range grafted for a loop: ss1's last residue through ss2's first.
std::pair<int, int> graft_range(const Loop& loop, const SSAssignment& assignment);
/// Per valid pairing, the window variants of its base pair.
std::vector<GraftSpec> default_graft_specs(const Session& s, int window);

/// Recomputes derived results of `p` and clears its stale flag.
void refresh_phase(Session& s, Phase p);

constexpr int kSessionSchemaVersion = 1;

/// Versioned JSON of the decision state; structures are referenced by
/// reference string and sha256.
std::string save_session(const Session& s);
/// Throws SchemaVersionMismatch (wrong or missing version, truncated or
/// malformed document) and BadRequest (structure hash changed).
Session load_session(std::string_view bytes, const StructureRepository& repository);

}  // namespace loopgraft
