#include "fixtures.hpp"

#include "loopgraft/error.hpp"
#include "loopgraft/loop_geometry.hpp"
#include "loopgraft/secondary_structure.hpp"

#include <doctest.h>

#include <fstream>

using namespace loopgraft;

namespace {

// tests/oracles/ideal_helix.py, 12-residue ideal alpha helix.
constexpr double kE40 = -2.1580976498;
constexpr double kE30 = 0.1409849805;
constexpr double kE51 = -2.1571044182;
const Vec3 kScrewAxis(0.6300608630, 0.5077340221, 0.5875623130);

std::string reference_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line.substr(0, line.find(' '));
}

char collapse(SSClass c) { return collapse_three_state(to_char(c)); }

}  // namespace

TEST_CASE("hydrogen bond energies match the ideal-helix oracle") {
  const Structure s = fixtures::load("synthetic/ideal_helix_12.pdb");
  const HBondMap m = hbond_map(s.chains.at(0));
  REQUIRE(m.n == 12);
  CHECK(m.at(4, 0) == doctest::Approx(kE40).epsilon(1e-6));
  CHECK(m.at(3, 0) == doctest::Approx(kE30).epsilon(1e-6));
  CHECK(m.at(5, 1) == doctest::Approx(kE51).epsilon(1e-6));
  // residue 0 has no preceding C=O, so no donor hydrogen
  for (std::size_t a = 0; a < 12; ++a) CHECK(m.at(0, a) == 0.0);
}

TEST_CASE("hbond energy floor and sign") {
  const Vec3 n(0, 0, 0), h(1, 0, 0), o(1.01, 0, 0), c(2.2, 0, 0);
  CHECK(hbond_energy(n, h, c, o) == doctest::Approx(-9.9));
  CHECK(hbond_energy(n, h, Vec3(20, 0, 0), Vec3(19, 0, 0)) < 0.0);
}

TEST_CASE("ideal helix assignment and axis") {
  const Structure s = fixtures::load("synthetic/ideal_helix_12.pdb");
  const char chain = s.chains.at(0).id;
  const SSAssignment a = assign_secondary_structure(s, chain);
  CHECK(a.class_string() == "CHHHHHHHHHHC");
  const CaTrace t = ca_trace(s, chain);
  const Segment helix{SSClass::Helix, 1, 10};
  const auto axis = fit_segment_axis(helix, t);
  // numpy eigh of the same ten Ca read back from the PDB file
  CHECK((axis.direction - Vec3(0.58393725, 0.45976878, 0.66905154)).norm() < 1e-6);
  // 2.8 turns: the principal axis tilts a few degrees off the screw axis
  const double cosang = std::abs(axis.direction.dot(kScrewAxis.normalized()));
  CHECK(std::acos(std::min(1.0, cosang)) * 180.0 / M_PI < 8.0);
}

TEST_CASE("three-state agreement with reference DSSP on every fixture chain") {
  double total = 0.0;
  int chains = 0;
  for (const auto& e : std::filesystem::directory_iterator(fixtures::data("dssp"))) {
    if (e.path().extension() != ".pdb") continue;
    CAPTURE(e.path().filename().string());
    const Structure s = parse_pdb(read_file(e.path().string()));
    const std::string stem = e.path().stem().string();
    const char chain = stem.back();
    const SSAssignment a = assign_secondary_structure(s, s.has_chain(chain) ? chain : s.chains.at(0).id);
    const std::string ref = reference_line(e.path().string() + ".dssp");
    REQUIRE(ref.size() == a.size());
    int agree = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) agree += collapse(a.classes[i]) == ref[i];
    const double frac = static_cast<double>(agree) / static_cast<double>(ref.size());
    CHECK(frac >= 0.80);
    total += frac;
    ++chains;
  }
  REQUIRE(chains >= 10);
  CHECK(total / chains >= 0.90);
}

TEST_CASE("manual reassignment") {
  SSAssignment a = make_assignment("CHHHHHCCCEEEEC", 'A', 10);
  SSAssignment b = reassign_region(a, 16, 18, SSClass::Strand);
  CHECK(b.class_string() == "CHHHHHEEEEEEEC");
  CHECK(b.provenance[6] == Provenance::Manual);
  CHECK(b.provenance[1] == Provenance::Automatic);
  CHECK_THROWS_AS(reassign_region(a, 18, 16, SSClass::Coil), Error);
  try {
    reassign_region(a, 5, 12, SSClass::Coil);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RangeOutOfChain);
  }
}

TEST_CASE("segments cover the chain") {
  const SSAssignment a = make_assignment("CCHHHGGGEEC");
  const auto segs = segments_of(a);
  REQUIRE(segs.size() == 5);
  CHECK(segs[0] == Segment{SSClass::Coil, 0, 1});
  CHECK(segs[1] == Segment{SSClass::Helix, 2, 4});
  CHECK(segs[2] == Segment{SSClass::Helix310, 5, 7});
  CHECK(segs[3] == Segment{SSClass::Strand, 8, 9});
  CHECK(segs[4] == Segment{SSClass::Coil, 10, 10});
}

TEST_CASE("missing backbone is reported") {
  Structure s;
  s.chains.push_back(fixtures::ca_chain({{0, 0, 0}, {3.8, 0, 0}, {7.6, 0, 0}, {11.4, 0, 0}, {15.2, 0, 0}, {19, 0, 0}}));
  for (auto& r : s.chains[0].residues)
    r.atoms.erase(std::remove_if(r.atoms.begin(), r.atoms.end(), [](const Atom& a) { return a.name == "N"; }),
                  r.atoms.end());
  try {
    assign_secondary_structure(s, 'A');
    FAIL("expected MissingBackbone");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingBackbone);
  }
  // very short chains are coil
  Structure tiny;
  tiny.chains.push_back(fixtures::ca_chain({{0, 0, 0}, {3.8, 0, 0}, {7.6, 0, 0}}));
  CHECK(assign_secondary_structure(tiny, 'A').class_string() == "CCC");
}

TEST_CASE("classic DSSP output parsing") {
  const std::string text =
      "  #  RESIDUE AA STRUCTURE BP1 BP2  ACC\n"
      "    1    1 A M              0   0  100\n"
      "    2    2 A K  H  >        0   0   50\n"
      "    3        !              0   0    0\n"
      "    4    4AA L  E           0   0   10\n";
  const auto recs = parse_dssp_output(text);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].code == ' ');
  CHECK(recs[1].code == 'H');
  CHECK(recs[2].key.seq_num == 4);
  CHECK(recs[2].key.insertion_code == 'A');
  CHECK(collapse_three_state('G') == 'H');
  CHECK(collapse_three_state('T') == '-');
}
