#pragma once

#include "loopgraft/secondary_structure.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loopgraft {

/// ArchDB-style descriptors. Angles in degrees.
struct LoopGeometry {
  double D = 0.0;
  double delta = 0.0;  // [0, 180]
  double theta = 0.0;  // [0, 180]
  double rho = 0.0;    // [0, 360)
};

enum class TriageState { Candidate, Preserved, Unsuitable };

std::string_view to_string(TriageState s);
/// "candidate", "preserved", "unsuitable". Throws BadRequest.
TriageState triage_from_string(std::string_view s);

/// ss1 + coil + ss2. An empty coil has coil.start == ss2.start and
/// coil.end == ss1.end, so coil.length() == 0.
struct Loop {
  std::string id;
  int ordinal = 0;  // 1-based extraction order, display alias
  Segment ss1;
  Segment coil;
  Segment ss2;
  bool custom = false;
  std::optional<LoopGeometry> descriptors;

  bool coil_empty() const { return coil.length() == 0; }
  std::size_t first_index() const { return ss1.start; }
  std::size_t last_index() const { return ss2.end; }
};

/// "{PDB}_{chain}_{n}" with the PDB id uppercased and a blank chain as '_'.
std::string loop_id(std::string_view pdb_id, char chain_id, int seq_num);

/// One loop per consecutive pair of periodic (H/E) segments. Pairs separated
/// by a chain break (numbering gap > 1 or a residue without Cα between the
/// two segments) are skipped. Throws TooFewSegments.
std::vector<Loop> extract_loops(const SSAssignment& assignment, std::string_view pdb_id);

/// Loop over [start_seq, end_seq] bounded by the nearest periodic segments
/// overlapping or flanking the range. Throws InvertedRange, RangeOutOfChain
/// and NoAperiodicContent.
Loop define_custom_loop(const SSAssignment& assignment, std::string_view pdb_id,
                        int start_seq, int end_seq);

/// Loop whose coil, widened by one junction residue on each side, best
/// overlaps [first_seq, last_seq] (Jaccard index over residue indices).
std::optional<std::size_t> find_loop_covering(const std::vector<Loop>& loops,
                                              const SSAssignment& assignment,
                                              int first_seq, int last_seq);

/// Loops containing residue `seq` anywhere in ss1..ss2.
std::vector<std::size_t> loops_containing(const std::vector<Loop>& loops,
                                          const SSAssignment& assignment, int seq);

enum class LoopSortKey { Position, Id, Metric };

/// Natural ordering: "X_A_36" < "X_A_147".
bool natural_less(std::string_view a, std::string_view b);

/// Scaffold loops with triage state, in extraction order.
class LoopList {
 public:
  struct Entry {
    Loop loop;
    TriageState state = TriageState::Preserved;
  };

  LoopList() = default;
  explicit LoopList(std::vector<Loop> loops);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }

  bool contains(std::string_view id) const;
  /// Throws UnknownLoop.
  const Entry& at(std::string_view id) const;
  Entry& at(std::string_view id);

  /// Adds a loop in preserved state; throws BadRequest on a duplicate id.
  void add(Loop loop);
  /// Throws UnknownLoop.
  void remove(std::string_view id);

  std::vector<const Loop*> in_state(TriageState state) const;
  std::vector<const Loop*> candidates() const { return in_state(TriageState::Candidate); }
  std::vector<const Loop*> preserved() const { return in_state(TriageState::Preserved); }

  /// Permutation of entry indices. Metric sorting uses `metric` (missing ids
  /// sort last) and is descending by default; the others ascend. Stable.
  std::vector<std::size_t> order(LoopSortKey key,
                                 const std::map<std::string, double>* metric = nullptr,
                                 bool descending = true) const;

 private:
  std::vector<Entry> entries_;
};

/// Throws UnknownLoop.
LoopList set_triage(LoopList list, std::string_view loop_id, TriageState state);

}  // namespace loopgraft
