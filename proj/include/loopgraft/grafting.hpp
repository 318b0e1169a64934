#pragma once

#include "loopgraft/structure.hpp"

#include <Eigen/Core>

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace loopgraft {

/// One replaced region. Ranges are inclusive author sequence numbers.
struct GraftPair {
  std::string scaffold_loop_id;
  std::string insert_loop_id;
  int scaffold_start = 0;
  int scaffold_end = 0;
  int insert_start = 0;
  int insert_end = 0;

  friend bool operator==(const GraftPair&, const GraftPair&) = default;
};

struct GraftSpec {
  std::vector<GraftPair> pairs;
  int anchor_len = 3;

  friend bool operator==(const GraftSpec&, const GraftSpec&) = default;
};

/// Allowed residue ranges for range boundaries, inclusive.
struct VariantBounds {
  int scaffold_first = 0;
  int scaffold_last = 0;
  int insert_first = 0;
  int insert_last = 0;
};

/// Bounds that keep `anchor_len` flanking residues available on both chains.
VariantBounds variant_bounds(const Chain& scaffold, const Chain& insert, int anchor_len);

/// Every combination of offsets in [-window, window] on each boundary, in
/// lexicographic offset order (pair by pair, scaffold start, scaffold end,
/// insert start, insert end). Boundaries are clipped to `bounds`; inverted
/// ranges and overlapping scaffold ranges are dropped, duplicates removed.
/// Throws DegenerateRange when nothing survives, BadRequest for a negative
/// window or more than `max_variants` combinations.
std::vector<GraftSpec> enumerate_variants(const GraftSpec& base, int window,
                                          const VariantBounds& bounds,
                                          std::size_t max_variants = 1'000'000);

enum class Origin : unsigned char { Scaffold = 0, Grafted = 1 };

/// Anchor Cα pairs of one spliced pair, used for junction quality.
struct Junction {
  Eigen::Matrix3Xd scaffold_anchor;
  Eigen::Matrix3Xd insert_anchor;  // after superposition
  std::size_t first_residue = 0;   // grafted span in the chimera chain
  std::size_t last_residue = 0;
};

struct ChimericModel {
  std::string id;
  Structure structure;  // one chain, renumbered from the scaffold's first residue
  char chain_id = 'A';
  std::vector<Origin> origin_mask;
  GraftSpec spec;
  std::vector<Junction> junctions;
  int baseline_clashes = 0;  // clash count of the unmodified scaffold chain
  std::map<std::string, double> scores;

  const Chain& chain() const { return structure.chains.front(); }
};

/// Superposes each insert range onto the scaffold using the Kabsch fit of
/// the anchor Cα (anchor_len residues flanking both ends on each protein),
/// deletes the scaffold range and inserts the transformed insert residues.
/// Throws RangeOutOfChain, InvertedRange, ClippedAnchor, MissingAnchorAtoms
/// and DegenerateRange (overlapping scaffold ranges). A negative
/// `baseline_clashes` counts the scaffold's own clashes.
ChimericModel splice(const Structure& scaffold, char scaffold_chain, const Structure& insert,
                     char insert_chain, const GraftSpec& spec, int baseline_clashes = -1);

/// Heavy-atom pairs closer than `threshold` in residues whose sequence
/// numbers differ by at least 2.
int count_clashes(const Chain& chain, double threshold = 2.5);

struct ScoreReport {
  double anchor_rmsd = 0.0;
  int clash_count = 0;  // baseline-subtracted, never negative
  double composite = 0.0;
  std::map<std::string, double> external;
};

/// Anchor RMSD over all junction Cα, clash count relative to the baseline,
/// composite = anchor_rmsd + 0.5 clash_count.
ScoreReport surrogate_score(const ChimericModel& model);

/// Writes anchor_rmsd, clash_count and composite into model.scores.
void apply_surrogate(ChimericModel& model);

/// Rigidly shifts the grafted residues and their junction anchors.
void translate_grafted(ChimericModel& model, const Vec3& shift);

/// Legacy PDB with the origin mask in the B-factor column (0 scaffold, 1 grafted).
std::string model_pdb(const ChimericModel& model);
/// Tab-separated sidecar: index, seq, residue name, origin.
std::string model_mask_table(const ChimericModel& model);

struct AdapterConfig {
  std::string command;  // run as `/bin/sh -c "<command> <pdb-path>"`
  std::chrono::milliseconds timeout{60000};
  int max_concurrent = 2;

  /// LOOPGRAFT_ADAPTER_CMD, LOOPGRAFT_ADAPTER_TIMEOUT_MS, LOOPGRAFT_ADAPTER_PARALLELISM.
  static AdapterConfig from_env();
};

/// Runs the adapter on the model written to a temporary PDB file and merges
/// the `NAME VALUE` lines from its stdout into model.scores. On failure the
/// model keeps its previous scores. Throws AdapterLaunchFailure,
/// AdapterParseFailure and AdapterTimeout.
std::map<std::string, double> external_score(ChimericModel& model, const AdapterConfig& config);

/// Stable ascending order of the score maps by `key`. Throws MissingScoreKey.
std::vector<std::size_t> rank_models(const std::vector<std::map<std::string, double>>& scores,
                                     const std::string& key = "composite");
std::vector<std::size_t> rank_models(const std::vector<ChimericModel>& models,
                                     const std::string& key = "composite");

}  // namespace loopgraft
