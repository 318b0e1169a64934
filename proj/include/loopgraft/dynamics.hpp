#pragma once

#include "loopgraft/loops.hpp"
#include "loopgraft/structure.hpp"

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace loopgraft {

enum class FlexMethod { PdbB, Gnm, Anm };

std::string_view to_string(FlexMethod m);
/// Accepts "b", "pdb_b", "gnm", "anm" (any case). Throws BadRequest.
FlexMethod flex_method_from_string(std::string_view s);

/// Per-residue flexibility over the residues of a Cα trace.
struct FlexibilityProfile {
  FlexMethod method = FlexMethod::PdbB;
  char chain_id = 'A';
  std::vector<ResidueKey> keys;
  std::vector<std::size_t> residue_index;  // into Chain::residues
  Eigen::VectorXd values;
  Eigen::VectorXd normalized;  // min-max to [0, 1], 0.5 when the range is degenerate
  bool missing_bfactors = false;

  std::size_t size() const { return keys.size(); }
};

Eigen::VectorXd min_max_normalize(const Eigen::VectorXd& v);

/// Mean B-factor over each residue's atoms, for residues carrying a Cα.
/// All-zero B sets the missing_bfactors flag instead of failing.
FlexibilityProfile bfactor_profile(const Structure& structure, char chain_id);

/// Diagonal of the Kirchhoff pseudo-inverse. Throws TooFewResidues (< 3)
/// and DisconnectedContactGraph.
FlexibilityProfile gnm_fluctuations(const CaTrace& trace, double cutoff = 10.0);

/// Trace of each 3x3 diagonal block of the Hessian pseudo-inverse. Throws
/// TooFewResidues (< 4) and IllConditioned.
FlexibilityProfile anm_fluctuations(const CaTrace& trace, double cutoff = 15.0);

enum class Weighting { Uniform, AtomCount };

/// Contiguous run of chain residue indices, [first, last].
struct FlexElement {
  std::string id;
  std::size_t first = 0;
  std::size_t last = 0;
};

std::vector<FlexElement> elements_of(const std::vector<Loop>& loops);
/// Segments named "{chain}{class}{first_seq}", e.g. "AH12".
std::vector<FlexElement> elements_of(const SSAssignment& assignment);

struct ElementFlexibility {
  std::string element_id;
  FlexMethod method = FlexMethod::PdbB;
  double coarse_value = 0.0;
};

/// Weighted mean of the normalized values of member residues. AtomCount
/// weighting needs `chain`. Throws EmptyElement.
std::vector<ElementFlexibility> aggregate_flexibility(const FlexibilityProfile& profile,
                                                      const std::vector<FlexElement>& elements,
                                                      Weighting weighting = Weighting::Uniform,
                                                      const Chain* chain = nullptr);

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;
  bool zero_variance = false;
};

/// Pearson r with a two-sided p from Student's t on n - 2 degrees of freedom.
/// Zero variance yields r = 0, p = 1. Throws LengthMismatch.
PearsonResult pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct MethodCorrelation {
  std::vector<FlexMethod> methods;
  Eigen::MatrixXd r;
  Eigen::MatrixXd p;
  /// p above the threshold (rendered with a fuzzy border).
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> low_significance;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> zero_variance;
  double threshold = 0.5;
};

/// Throws LengthMismatch, or TooFewResidues for fewer than two profiles.
MethodCorrelation method_correlation(const std::vector<FlexibilityProfile>& profiles,
                                     double significance_threshold = 0.5);

struct CorrelationOptions {
  double cutoff = 10.0;
  int modes = 20;
};

struct MotionCorrelationSet {
  /// Residue-level C over the trace points.
  Eigen::MatrixXd residue;
  std::vector<std::string> row_ids;
  std::vector<std::string> column_ids;
  /// rows x columns loop-pair aggregates.
  Eigen::MatrixXd ss_corr;
  Eigen::MatrixXd loop_corr;
  Eigen::MatrixXd ss_to_coil;
};

/// GNM cross-correlation restricted to the lowest nonzero modes.
Eigen::MatrixXd residue_cross_correlation(const CaTrace& trace,
                                          const CorrelationOptions& options = {});

/// Loop-pair aggregates of C. For a row loop a and column loop b:
/// ss_corr averages periodic(a) x periodic(b), loop_corr all(a) x all(b),
/// ss_to_coil periodic(a) x coil(b); an empty coil uses its two junction
/// residues.
MotionCorrelationSet motion_cross_correlation(const CaTrace& trace,
                                              const std::vector<Loop>& rows,
                                              const std::vector<Loop>& columns,
                                              const CorrelationOptions& options = {});

/// Same aggregation from a precomputed residue matrix.
MotionCorrelationSet aggregate_motion(Eigen::MatrixXd residue, const CaTrace& trace,
                                      const std::vector<Loop>& rows,
                                      const std::vector<Loop>& columns);

/// Row permutation. metric: "ss_corr", "loop_corr", "ss_to_coil" (key is the
/// row maximum over columns), "position" or "id". Stable. Throws
/// UnknownMetric.
std::vector<std::size_t> sort_correlation_rows(const MotionCorrelationSet& set,
                                               const std::vector<Loop>& rows,
                                               std::string_view metric, bool descending = true);

}  // namespace loopgraft
