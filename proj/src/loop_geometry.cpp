#include "loopgraft/loop_geometry.hpp"

#include <numeric>

namespace loopgraft {

namespace {

Eigen::Matrix3Xd gather(const CaTrace& trace, const std::vector<std::size_t>& points) {
  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(points.size()));
  for (std::size_t k = 0; k < points.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = trace.positions.col(static_cast<Eigen::Index>(points[k]));
  return out;
}

Vec3 point(const CaTrace& trace, std::size_t k) {
  return trace.positions.col(static_cast<Eigen::Index>(k));
}

}  // namespace

Axis<double> fit_segment_axis(const Segment& segment, const CaTrace& trace) {
  auto pts = trace.points_in(segment.start, segment.end);
  if (pts.size() < 2)
    fail(ErrorCode::DegenerateSegment, "segment at residue index " +
                                           std::to_string(segment.start) + " has " +
                                           std::to_string(pts.size()) + " Cα atoms");
  return principal_axis(gather(trace, pts));
}

LoopGeometry compute_descriptors(const Loop& loop, const CaTrace& trace) {
  const auto a1 = fit_segment_axis(loop.ss1, trace);
  const auto a2 = fit_segment_axis(loop.ss2, trace);
  const auto ss1_pts = trace.points_in(loop.ss1.start, loop.ss1.end);
  const auto ss2_pts = trace.points_in(loop.ss2.start, loop.ss2.end);
  const Vec3 junction1 = point(trace, ss1_pts.back());
  const Vec3 junction2 = point(trace, ss2_pts.front());

  Vec3 p1 = junction1;
  Vec3 p2 = junction2;
  if (!loop.coil_empty()) {
    auto coil_pts = trace.points_in(loop.coil.start, loop.coil.end);
    if (!coil_pts.empty()) {
      p1 = point(trace, coil_pts.front());
      p2 = point(trace, coil_pts.back());
    }
  }
  Vec3 fallback = junction2 - junction1;
  if (fallback.norm() < 1e-9) fallback = a2.centroid - a1.centroid;
  if (fallback.norm() < 1e-9) fallback = a1.direction;
  return descriptors_from<double>(a1.direction, a2.direction, p1, p2, fallback);
}

void compute_all_descriptors(std::vector<Loop>& loops, const CaTrace& trace) {
  for (auto& l : loops) l.descriptors = compute_descriptors(l, trace);
}

double circular_difference_deg(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

GeometryDelta descriptor_delta(const LoopGeometry& a, const LoopGeometry& b) {
  return GeometryDelta{std::abs(a.D - b.D), std::abs(a.delta - b.delta),
                       std::abs(a.theta - b.theta), circular_difference_deg(a.rho, b.rho)};
}

double pair_score(const GeometryDelta& d, const PairWeights& w) {
  return d.dD / w.sigma_d + (d.dDelta + d.dTheta + d.dRho) / w.sigma_a;
}

std::vector<PairSuggestion> suggest_pairs(const std::vector<Loop>& candidates,
                                          const std::vector<Loop>& insert_loops,
                                          const PairWeights& weights) {
  if (insert_loops.empty()) fail(ErrorCode::EmptyInsertSet, "no insert loops to pair with");
  auto require = [](const Loop& l) {
    if (!l.descriptors) fail(ErrorCode::BadRequest, "loop " + l.id + " has no descriptors");
  };
  for (const auto& l : candidates) require(l);
  for (const auto& l : insert_loops) require(l);

  std::vector<PairSuggestion> out;
  for (const auto& c : candidates) {
    const std::size_t group = out.size();
    for (const auto& i : insert_loops) {
      PairSuggestion s;
      s.scaffold_loop_id = c.id;
      s.insert_loop_id = i.id;
      s.components = descriptor_delta(*c.descriptors, *i.descriptors);
      s.score = pair_score(s.components, weights);
      out.push_back(std::move(s));
    }
    auto first = out.begin() + static_cast<std::ptrdiff_t>(group);
    std::stable_sort(first, out.end(), [](const PairSuggestion& a, const PairSuggestion& b) {
      return a.score < b.score;
    });
    int rank = 1;
    for (auto it = first; it != out.end(); ++it) it->rank = rank++;
  }

  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out[a].score < out[b].score; });
  std::vector<std::string> taken_scaffold, taken_insert;
  auto taken = [](const std::vector<std::string>& v, const std::string& id) {
    return std::find(v.begin(), v.end(), id) != v.end();
  };
  for (std::size_t k : order) {
    auto& s = out[k];
    if (taken(taken_scaffold, s.scaffold_loop_id) || taken(taken_insert, s.insert_loop_id))
      continue;
    s.is_default = true;
    taken_scaffold.push_back(s.scaffold_loop_id);
    taken_insert.push_back(s.insert_loop_id);
  }
  return out;
}

}  // namespace loopgraft
