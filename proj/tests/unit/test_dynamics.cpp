#include "fixtures.hpp"

#include "loopgraft/dynamics.hpp"
#include "loopgraft/error.hpp"
#include "loopgraft/loops.hpp"
#include "loopgraft/secondary_structure.hpp"

#include <doctest.h>

using namespace loopgraft;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

FlexibilityProfile profile_of(FlexMethod m, const Eigen::VectorXd& values) {
  FlexibilityProfile p;
  p.method = m;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    p.keys.push_back({static_cast<int>(i) + 1, ' '});
    p.residue_index.push_back(static_cast<std::size_t>(i));
  }
  p.values = values;
  p.normalized = min_max_normalize(values);
  return p;
}

}  // namespace

TEST_CASE("min-max normalization") {
  const auto n = min_max_normalize(vec({2, 4, 6}));
  CHECK(n(0) == 0.0);
  CHECK(n(1) == doctest::Approx(0.5));
  CHECK(n(2) == 1.0);
  const auto flat = min_max_normalize(vec({3, 3, 3}));
  CHECK(flat(0) == 0.5);
  CHECK(flat(2) == 0.5);
}

TEST_CASE("pearson r and two-sided p against scipy") {
  const auto a = pearson(vec({1, 2, 3, 4, 5}), vec({2, 4, 5, 4, 5}));
  CHECK(a.r == doctest::Approx(0.7745966692414834).epsilon(1e-12));
  CHECK(a.p == doctest::Approx(0.1240270626575546).epsilon(1e-9));
  const auto b = pearson(vec({1, 2, 3, 4, 5, 6, 7, 8}), vec({8, 6, 7, 5, 3, 0, 9, 1}));
  CHECK(b.r == doctest::Approx(-0.5082200529569076).epsilon(1e-12));
  CHECK(b.p == doctest::Approx(0.1984568514591655).epsilon(1e-9));
  const auto self = pearson(vec({1, 5, 2, 8, 3, 9, 4}), vec({1, 5, 2, 8, 3, 9, 4}));
  CHECK(self.r == doctest::Approx(1.0));
  CHECK(self.p < 1e-12);
  const auto flat = pearson(vec({1, 1, 1}), vec({1, 2, 3}));
  CHECK(flat.zero_variance);
  CHECK(flat.r == 0.0);
  CHECK(flat.p == 1.0);
  CHECK_THROWS_AS(pearson(vec({1, 2}), vec({1, 2, 3})), Error);
}

TEST_CASE("method correlation matrix") {
  const std::vector<FlexibilityProfile> ps{profile_of(FlexMethod::PdbB, vec({1, 2, 3, 4, 5})),
                                           profile_of(FlexMethod::Gnm, vec({2, 4, 5, 4, 5})),
                                           profile_of(FlexMethod::Anm, vec({5, 4, 3, 2, 1}))};
  const auto m = method_correlation(ps);
  REQUIRE(m.r.rows() == 3);
  CHECK(m.r(0, 0) == doctest::Approx(1.0));
  CHECK(m.r(0, 1) == doctest::Approx(0.7745966692414834));
  CHECK(m.r(1, 0) == doctest::Approx(m.r(0, 1)));
  CHECK(m.r(0, 2) == doctest::Approx(-1.0));
  CHECK_FALSE(m.low_significance(0, 1));  // p = 0.124 < 0.5
  CHECK(m.threshold == 0.5);
  CHECK_THROWS_AS(method_correlation({ps[0]}), Error);
  CHECK_THROWS_AS(method_correlation({ps[0], profile_of(FlexMethod::Gnm, vec({1, 2}))}), Error);
}

TEST_CASE("element aggregation") {
  Structure s;
  s.chains.push_back(fixtures::ca_chain({{0, 0, 0}, {3.8, 0, 0}, {7.6, 0, 0}, {11.4, 0, 0}}));
  s.chains[0].residues[3].atoms.resize(1);  // CA only
  const auto p = profile_of(FlexMethod::PdbB, vec({0, 1, 2, 3}));
  const std::vector<FlexElement> el{{"a", 0, 1}, {"b", 2, 3}, {"all", 0, 3}};
  const auto u = aggregate_flexibility(p, el);
  CHECK(u[0].coarse_value == doctest::Approx(1.0 / 6.0));
  CHECK(u[1].coarse_value == doctest::Approx(5.0 / 6.0));
  CHECK(u[2].coarse_value == doctest::Approx(0.5));
  const auto w = aggregate_flexibility(p, el, Weighting::AtomCount, &s.chains[0]);
  CHECK(w[1].coarse_value == doctest::Approx((4.0 * 2.0 / 3.0 + 1.0 * 1.0) / 5.0));
  CHECK_THROWS_AS(aggregate_flexibility(p, {{"none", 10, 12}}), Error);
  CHECK_THROWS_AS(aggregate_flexibility(p, el, Weighting::AtomCount), Error);
}

TEST_CASE("segment elements are named by chain, class and first residue") {
  const auto el = elements_of(make_assignment("CCHHHEE", 'B', 12));
  REQUIRE(el.size() == 3);
  CHECK(el[0].id == "BC12");
  CHECK(el[1].id == "BH14");
  CHECK(el[2].id == "BE17");
  CHECK(el[2].first == 5);
  CHECK(el[2].last == 6);
}

TEST_CASE("B-factor profile averages atoms per residue") {
  const Structure s = fixtures::load("pdb/1ake.pdb");
  const auto p = bfactor_profile(s, 'A');
  const auto& atoms = s.chain('A').residues[0].atoms;
  double sum = 0.0;
  for (const auto& a : atoms) sum += a.b_factor;
  CHECK(p.values(0) == doctest::Approx(sum / static_cast<double>(atoms.size())));
  CHECK_FALSE(p.missing_bfactors);

  Structure zero;
  zero.chains.push_back(fixtures::ca_chain({{0, 0, 0}, {3.8, 0, 0}, {7.6, 0, 0}}));
  for (auto& r : zero.chains[0].residues)
    for (auto& a : r.atoms) a.b_factor = 0.0;
  CHECK(bfactor_profile(zero, 'A').missing_bfactors);
}

TEST_CASE("motion cross-correlation aggregates and sorting on 1ake") {
  const Structure s = fixtures::load("pdb/1ake.pdb");
  const CaTrace t = ca_trace(s, 'A');
  const auto loops = extract_loops(assign_secondary_structure(s, 'A'), "1ake");
  REQUIRE(loops.size() >= 6);
  const std::vector<Loop> cols{loops[2]};
  const std::vector<Loop> rows(loops.begin() + 3, loops.end());

  const Eigen::MatrixXd c = residue_cross_correlation(t);
  CHECK(c.rows() == static_cast<Eigen::Index>(t.size()));
  CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(c.diagonal().isOnes(1e-12));
  CHECK(c.maxCoeff() <= 1.0);
  CHECK(c.minCoeff() >= -1.0);

  const auto set = motion_cross_correlation(t, rows, cols);
  CHECK(set.row_ids.size() == rows.size());
  CHECK(set.column_ids == std::vector<std::string>{loops[2].id});
  // a loop correlates with itself positively in every aggregate
  const auto self = motion_cross_correlation(t, cols, cols);
  CHECK(self.loop_corr(0, 0) > 0.0);
  CHECK(self.ss_corr(0, 0) > 0.0);

  const auto order = sort_correlation_rows(set, rows, "ss_to_coil", true);
  for (std::size_t k = 1; k < order.size(); ++k)
    CHECK(set.ss_to_coil(static_cast<Eigen::Index>(order[k - 1]), 0) >=
          set.ss_to_coil(static_cast<Eigen::Index>(order[k]), 0));
  const auto asc = sort_correlation_rows(set, rows, "loop_corr", false);
  for (std::size_t k = 1; k < asc.size(); ++k)
    CHECK(set.loop_corr(static_cast<Eigen::Index>(asc[k - 1]), 0) <=
          set.loop_corr(static_cast<Eigen::Index>(asc[k]), 0));
  const auto pos = sort_correlation_rows(set, rows, "position");
  for (std::size_t k = 0; k < pos.size(); ++k) CHECK(pos[k] == k);
  CHECK_THROWS_AS(sort_correlation_rows(set, rows, "bogus"), Error);

  // aggregation from a precomputed matrix equals the direct route
  const auto again = aggregate_motion(c, t, rows, cols);
  CHECK((again.ss_to_coil - set.ss_to_coil).cwiseAbs().maxCoeff() < 1e-12);
}
