#include "loopgraft/dynamics.hpp"

#include "loopgraft/enm.hpp"
#include "loopgraft/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace loopgraft {

std::string_view to_string(FlexMethod m) {
  switch (m) {
    case FlexMethod::PdbB: return "PDB_B";
    case FlexMethod::Gnm: return "GNM";
    case FlexMethod::Anm: return "ANM";
  }
  return "PDB_B";
}

FlexMethod flex_method_from_string(std::string_view s) {
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "b" || lower == "pdb_b" || lower == "bfactor") return FlexMethod::PdbB;
  if (lower == "gnm") return FlexMethod::Gnm;
  if (lower == "anm") return FlexMethod::Anm;
  fail(ErrorCode::BadRequest, "unknown flexibility method '" + std::string(s) + "'");
}

Eigen::VectorXd min_max_normalize(const Eigen::VectorXd& v) {
  if (v.size() == 0) return v;
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)))) return Eigen::VectorXd::Constant(v.size(), 0.5);
  return (v.array() - lo) / (hi - lo);
}

namespace {

FlexibilityProfile skeleton(const CaTrace& trace, FlexMethod method) {
  FlexibilityProfile p;
  p.method = method;
  p.chain_id = trace.chain_id;
  p.keys = trace.residue_keys;
  p.residue_index = trace.residue_index;
  return p;
}

}  // namespace

FlexibilityProfile bfactor_profile(const Structure& structure, char chain_id) {
  const Chain& chain = structure.chain(chain_id);
  const CaTrace trace = ca_trace(structure, chain_id);
  FlexibilityProfile p = skeleton(trace, FlexMethod::PdbB);
  p.values.resize(static_cast<Eigen::Index>(trace.size()));
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto& atoms = chain.residues[trace.residue_index[k]].atoms;
    double sum = 0.0;
    for (const auto& a : atoms) sum += a.b_factor;
    p.values(static_cast<Eigen::Index>(k)) = sum / static_cast<double>(atoms.size());
  }
  p.missing_bfactors = p.values.size() == 0 || p.values.cwiseAbs().maxCoeff() == 0.0;
  p.normalized = min_max_normalize(p.values);
  return p;
}

FlexibilityProfile gnm_fluctuations(const CaTrace& trace, double cutoff) {
  if (trace.size() < 3)
    fail(ErrorCode::TooFewResidues, "GNM needs at least 3 Cα, got " + std::to_string(trace.size()));
  FlexibilityProfile p = skeleton(trace, FlexMethod::Gnm);
  p.values = enm::gnm_pseudo_inverse(trace.positions, cutoff).diagonal();
  p.normalized = min_max_normalize(p.values);
  return p;
}

FlexibilityProfile anm_fluctuations(const CaTrace& trace, double cutoff) {
  if (trace.size() < 4)
    fail(ErrorCode::TooFewResidues, "ANM needs at least 4 Cα, got " + std::to_string(trace.size()));
  FlexibilityProfile p = skeleton(trace, FlexMethod::Anm);
  const auto pinv = enm::anm_pseudo_inverse(trace.positions, cutoff);
  const auto n = static_cast<Eigen::Index>(trace.size());
  p.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) p.values(i) = pinv.block<3, 3>(3 * i, 3 * i).trace();
  p.normalized = min_max_normalize(p.values);
  return p;
}

std::vector<FlexElement> elements_of(const std::vector<Loop>& loops) {
  std::vector<FlexElement> out;
  for (const auto& l : loops) out.push_back({l.id, l.first_index(), l.last_index()});
  return out;
}

std::vector<FlexElement> elements_of(const SSAssignment& assignment) {
  std::vector<FlexElement> out;
  for (const auto& s : segments_of(assignment)) {
    std::string id(1, assignment.chain_id == ' ' ? '_' : assignment.chain_id);
    id += to_char(s.ss_class);
    id += std::to_string(assignment.keys[s.start].seq_num);
    out.push_back({id, s.start, s.end});
  }
  return out;
}

std::vector<ElementFlexibility> aggregate_flexibility(const FlexibilityProfile& profile,
                                                      const std::vector<FlexElement>& elements,
                                                      Weighting weighting, const Chain* chain) {
  if (weighting == Weighting::AtomCount && !chain)
    fail(ErrorCode::BadRequest, "atom-count weighting needs the chain");
  std::vector<ElementFlexibility> out;
  for (const auto& e : elements) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < profile.size(); ++k) {
      const std::size_t r = profile.residue_index[k];
      if (r < e.first || r > e.last) continue;
      double w = 1.0;
      if (weighting == Weighting::AtomCount) {
        if (r >= chain->residues.size())
          fail(ErrorCode::BadRequest, "element " + e.id + " lies outside the chain");
        w = static_cast<double>(chain->residues[r].atoms.size());
      }
      num += w * profile.normalized(static_cast<Eigen::Index>(k));
      den += w;
    }
    if (den <= 0.0)
      fail(ErrorCode::EmptyElement, "element " + e.id + " has no residues in the profile");
    out.push_back({e.id, profile.method, num / den});
  }
  return out;
}

PearsonResult pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    fail(ErrorCode::LengthMismatch, "profiles of length " + std::to_string(a.size()) + " and " +
                                        std::to_string(b.size()));
  PearsonResult out;
  const auto n = a.size();
  if (n < 2) {
    out.zero_variance = true;
    return out;
  }
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double saa = (da * da).sum();
  const double sbb = (db * db).sum();
  if (saa <= 0.0 || sbb <= 0.0) {
    out.zero_variance = true;
    return out;
  }
  out.r = std::clamp((da * db).sum() / std::sqrt(saa * sbb), -1.0, 1.0);
  const double dof = static_cast<double>(n - 2);
  if (dof < 1.0) {
    out.p = 1.0;
  } else if (1.0 - std::abs(out.r) < 1e-15) {
    out.p = 0.0;
  } else {
    const double t = out.r * std::sqrt(dof / (1.0 - out.r * out.r));
    boost::math::students_t dist(dof);
    out.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
  }
  return out;
}

MethodCorrelation method_correlation(const std::vector<FlexibilityProfile>& profiles,
                                     double significance_threshold) {
  if (profiles.size() < 2)
    fail(ErrorCode::TooFewResidues, "method correlation needs at least two profiles");
  const auto m = static_cast<Eigen::Index>(profiles.size());
  MethodCorrelation out;
  out.threshold = significance_threshold;
  out.r = Eigen::MatrixXd::Identity(m, m);
  out.p = Eigen::MatrixXd::Zero(m, m);
  out.low_significance.setConstant(m, m, false);
  out.zero_variance.setConstant(m, m, false);
  for (const auto& p : profiles) out.methods.push_back(p.method);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto res = pearson(profiles[static_cast<std::size_t>(i)].values,
                               profiles[static_cast<std::size_t>(j)].values);
      out.r(i, j) = out.r(j, i) = res.r;
      out.p(i, j) = out.p(j, i) = res.p;
      out.low_significance(i, j) = out.low_significance(j, i) = res.p > significance_threshold;
      out.zero_variance(i, j) = out.zero_variance(j, i) = res.zero_variance;
    }
  }
  return out;
}

Eigen::MatrixXd residue_cross_correlation(const CaTrace& trace, const CorrelationOptions& options) {
  if (trace.size() < 3)
    fail(ErrorCode::TooFewResidues, "cross-correlation needs at least 3 Cα");
  return enm::normalized_covariance<double>(
      enm::gnm_mode_pseudo_inverse(trace.positions, options.cutoff, options.modes));
}

namespace {

struct LoopPoints {
  std::vector<std::size_t> periodic;
  std::vector<std::size_t> coil;
  std::vector<std::size_t> all;
};

LoopPoints points_of(const Loop& loop, const CaTrace& trace) {
  LoopPoints p;
  p.periodic = trace.points_in(loop.ss1.start, loop.ss1.end);
  for (auto k : trace.points_in(loop.ss2.start, loop.ss2.end)) p.periodic.push_back(k);
  if (loop.coil_empty())
    p.coil = trace.points_in(loop.ss1.end, loop.ss2.start);
  else
    p.coil = trace.points_in(loop.coil.start, loop.coil.end);
  p.all = trace.points_in(loop.first_index(), loop.last_index());
  return p;
}

double block_mean(const Eigen::MatrixXd& c, const std::vector<std::size_t>& rows,
                  const std::vector<std::size_t>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  double sum = 0.0;
  for (auto i : rows)
    for (auto j : cols) sum += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return sum / static_cast<double>(rows.size() * cols.size());
}

}  // namespace

MotionCorrelationSet aggregate_motion(Eigen::MatrixXd residue, const CaTrace& trace,
                                      const std::vector<Loop>& rows,
                                      const std::vector<Loop>& columns) {
  MotionCorrelationSet out;
  out.residue = std::move(residue);
  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(columns.size());
  out.ss_corr.resize(nr, nc);
  out.loop_corr.resize(nr, nc);
  out.ss_to_coil.resize(nr, nc);
  std::vector<LoopPoints> cp;
  for (const auto& l : columns) {
    out.column_ids.push_back(l.id);
    cp.push_back(points_of(l, trace));
  }
  for (Eigen::Index i = 0; i < nr; ++i) {
    const Loop& a = rows[static_cast<std::size_t>(i)];
    out.row_ids.push_back(a.id);
    const LoopPoints ap = points_of(a, trace);
    for (Eigen::Index j = 0; j < nc; ++j) {
      const LoopPoints& bp = cp[static_cast<std::size_t>(j)];
      out.ss_corr(i, j) = block_mean(out.residue, ap.periodic, bp.periodic);
      out.loop_corr(i, j) = block_mean(out.residue, ap.all, bp.all);
      out.ss_to_coil(i, j) = block_mean(out.residue, ap.periodic, bp.coil);
    }
  }
  return out;
}

MotionCorrelationSet motion_cross_correlation(const CaTrace& trace, const std::vector<Loop>& rows,
                                              const std::vector<Loop>& columns,
                                              const CorrelationOptions& options) {
  return aggregate_motion(residue_cross_correlation(trace, options), trace, rows, columns);
}

std::vector<std::size_t> sort_correlation_rows(const MotionCorrelationSet& set,
                                               const std::vector<Loop>& rows,
                                               std::string_view metric, bool descending) {
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (metric == "position") {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return rows[a].first_index() < rows[b].first_index();
    });
    return idx;
  }
  if (metric == "id") {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return natural_less(rows[a].id, rows[b].id);
    });
    return idx;
  }
  const Eigen::MatrixXd* m = nullptr;
  if (metric == "ss_corr") m = &set.ss_corr;
  if (metric == "loop_corr") m = &set.loop_corr;
  if (metric == "ss_to_coil") m = &set.ss_to_coil;
  if (!m) fail(ErrorCode::UnknownMetric, "unknown sort metric '" + std::string(metric) + "'");
  if (static_cast<std::size_t>(m->rows()) != rows.size())
    fail(ErrorCode::LengthMismatch, "correlation set has " + std::to_string(m->rows()) +
                                        " rows, " + std::to_string(rows.size()) + " loops given");
  std::vector<double> key(rows.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    key[i] = m->cols() > 0 ? m->row(static_cast<Eigen::Index>(i)).maxCoeff() : 0.0;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? key[a] > key[b] : key[a] < key[b];
  });
  return idx;
}

}  // namespace loopgraft
