#include "loopgraft/secondary_structure.hpp"

#include "loopgraft/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace loopgraft {

char to_char(SSClass c) { return static_cast<char>(c); }

SSClass ss_class_from_char(char c) {
  switch (c) {
    case 'H': return SSClass::Helix;
    case 'G': return SSClass::Helix310;
    case 'E': return SSClass::Strand;
    case 'C':
    case '-':
    case ' ': return SSClass::Coil;
    default: fail(ErrorCode::BadRequest, std::string("unknown secondary structure class '") + c + "'");
  }
}

std::string SSAssignment::class_string() const {
  std::string out;
  out.reserve(classes.size());
  for (auto c : classes) out += to_char(c);
  return out;
}

std::optional<std::size_t> SSAssignment::index_of(int seq_num) const {
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (keys[i].seq_num == seq_num) return i;
  return std::nullopt;
}

SSAssignment make_assignment(std::string_view classes, char chain_id, int first_seq) {
  SSAssignment a;
  a.chain_id = chain_id;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    a.keys.push_back(ResidueKey{first_seq + static_cast<int>(i), ' '});
    a.classes.push_back(ss_class_from_char(classes[i]));
    a.provenance.push_back(Provenance::Automatic);
    a.has_ca.push_back(true);
  }
  return a;
}

double hbond_energy(const Vec3& n, const Vec3& h, const Vec3& c, const Vec3& o) {
  constexpr double kCoupling = 0.084 * 332.0;
  constexpr double kMinimal = -9.9;
  const double e = kCoupling * (1.0 / (o - n).norm() + 1.0 / (c - h).norm() -
                                1.0 / (o - h).norm() - 1.0 / (c - n).norm());
  return std::max(e, kMinimal);
}

namespace {

struct Backbone {
  Vec3 n, ca, c, o, h;
  bool complete = false;
  bool has_h = false;
};

constexpr double kMaxPeptideBond = 2.5;  // Å, C(i-1)-N(i)
constexpr double kMaxCaContact = 9.0;    // Å, pairs farther apart cannot H-bond

struct ChainBackbone {
  std::vector<Backbone> residues;
  std::vector<bool> break_before;  // peptide bond to the previous residue missing

  bool no_break(std::size_t from, std::size_t to) const {
    for (std::size_t k = from + 1; k <= to; ++k)
      if (break_before[k]) return false;
    return true;
  }
};

ChainBackbone backbone_of(const Chain& chain) {
  ChainBackbone bb;
  const std::size_t n = chain.residues.size();
  bb.residues.resize(n);
  bb.break_before.assign(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    const Residue& r = chain.residues[i];
    const Atom* N = r.find_atom("N");
    const Atom* CA = r.find_atom("CA");
    const Atom* C = r.find_atom("C");
    const Atom* O = r.find_atom("O");
    if (!O) O = r.find_atom("OXT");
    auto& b = bb.residues[i];
    if (N && CA && C && O) {
      b.n = N->position;
      b.ca = CA->position;
      b.c = C->position;
      b.o = O->position;
      b.complete = true;
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    const auto& prev = bb.residues[i - 1];
    auto& cur = bb.residues[i];
    if (!prev.complete || !cur.complete) continue;
    bb.break_before[i] = (prev.c - cur.n).norm() > kMaxPeptideBond;
    if (!bb.break_before[i] && chain.residues[i].name != "PRO") {
      // ideal amide H opposite the preceding carbonyl, 1 Å from N
      cur.h = cur.n + (prev.c - prev.o).normalized();
      cur.has_h = true;
    }
  }
  return bb;
}

HBondMap energies(const ChainBackbone& bb) {
  HBondMap map;
  map.n = bb.residues.size();
  map.energy.assign(map.n * map.n, 0.0);
  for (std::size_t d = 0; d < map.n; ++d) {
    const auto& donor = bb.residues[d];
    if (!donor.has_h) continue;
    for (std::size_t a = 0; a < map.n; ++a) {
      if (a + 1 >= d && a <= d + 1) continue;  // |d - a| < 2
      const auto& acc = bb.residues[a];
      if (!acc.complete || (donor.ca - acc.ca).norm() >= kMaxCaContact) continue;
      map.energy[d * map.n + a] = hbond_energy(donor.n, donor.h, acc.c, acc.o);
    }
  }
  return map;
}

enum class BridgeType { Parallel, Antiparallel };

struct Ladder {
  BridgeType type;
  std::size_t i_start, i_end;  // first strand, ascending
  std::size_t j_lo, j_hi;      // partner strand span
  std::size_t last_j;          // partner of i_end
  std::size_t bridges = 1;
  bool linked = false;
};

void mark_run(std::vector<SSClass>& classes, std::size_t from, std::size_t to, SSClass c) {
  for (std::size_t k = from; k <= to; ++k) classes[k] = c;
}

void enforce_min_length(std::vector<SSClass>& classes, std::vector<Provenance> const& prov,
                        SSClass target, std::size_t min_len) {
  for (const auto& seg : segments_of(classes)) {
    if (seg.ss_class != target || seg.length() >= min_len) continue;
    bool manual = false;
    for (std::size_t k = seg.start; k <= seg.end; ++k) manual |= prov[k] == Provenance::Manual;
    if (!manual) mark_run(classes, seg.start, seg.end, SSClass::Coil);
  }
}

}  // namespace

HBondMap hbond_map(const Chain& chain) { return energies(backbone_of(chain)); }

SSAssignment assign_secondary_structure(const Structure& structure, char chain_id,
                                        const DsspOptions& options) {
  const Chain& chain = structure.chain(chain_id);
  const std::size_t n = chain.residues.size();

  SSAssignment out;
  out.chain_id = chain_id;
  out.classes.assign(n, SSClass::Coil);
  out.provenance.assign(n, Provenance::Automatic);
  for (const auto& r : chain.residues) {
    out.keys.push_back(r.key);
    out.has_ca.push_back(r.has_ca());
  }
  if (n < 5) return out;

  const ChainBackbone bb = backbone_of(chain);
  std::size_t run = 0, best_run = 0;
  for (std::size_t i = 0; i < n; ++i) {
    run = bb.residues[i].complete ? run + 1 : 0;
    best_run = std::max(best_run, run);
  }
  if (best_run < 5)
    fail(ErrorCode::MissingBackbone,
         "chain " + std::string(1, chain_id) +
             " lacks five consecutive residues with N, CA, C and O");

  const HBondMap map = energies(bb);
  // CO of `acceptor` bonded to NH of `donor`
  auto hb = [&](std::size_t acceptor, std::size_t donor) {
    return acceptor < n && donor < n && map.at(donor, acceptor) < options.hbond_cutoff;
  };
  auto turn = [&](std::size_t k, std::size_t i) {
    return i + k < n && bb.no_break(i, i + k) && hb(i, i + k);
  };

  auto& classes = out.classes;

  // bridges and ladders
  std::vector<Ladder> ladders;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!bb.no_break(i - 1, i + 1)) continue;
    for (std::size_t j = i + 3; j + 1 < n; ++j) {
      if (!bb.no_break(j - 1, j + 1)) continue;
      std::optional<BridgeType> type;
      if ((hb(i - 1, j) && hb(j, i + 1)) || (hb(j - 1, i) && hb(i, j + 1)))
        type = BridgeType::Parallel;
      else if ((hb(i, j) && hb(j, i)) || (hb(i - 1, j + 1) && hb(j - 1, i + 1)))
        type = BridgeType::Antiparallel;
      if (!type) continue;

      bool extended = false;
      for (auto& l : ladders) {
        if (l.type != *type || l.i_end + 1 != i) continue;
        bool next = *type == BridgeType::Parallel ? j == l.last_j + 1 : j + 1 == l.last_j;
        if (!next) continue;
        l.i_end = i;
        l.last_j = j;
        l.j_lo = std::min(l.j_lo, j);
        l.j_hi = std::max(l.j_hi, j);
        ++l.bridges;
        extended = true;
        break;
      }
      if (!extended) ladders.push_back(Ladder{*type, i, i, j, j, j});
    }
  }

  // bulge links: gap of at most 1 on one strand and at most 4 on the other
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t a = 0; a < ladders.size(); ++a) {
    for (std::size_t b = 0; b < ladders.size(); ++b) {
      const auto& la = ladders[a];
      const auto& lb = ladders[b];
      if (a == b || la.type != lb.type || lb.i_start <= la.i_end) continue;
      long gap_i = static_cast<long>(lb.i_start) - static_cast<long>(la.i_end) - 1;
      long gap_j = la.type == BridgeType::Parallel
                       ? static_cast<long>(lb.j_lo) - static_cast<long>(la.j_hi) - 1
                       : static_cast<long>(la.j_lo) - static_cast<long>(lb.j_hi) - 1;
      if (gap_i < 0 || gap_j < 0) continue;
      if (!((gap_i <= 1 && gap_j <= 4) || (gap_i <= 4 && gap_j <= 1))) continue;
      if (!bb.no_break(la.i_end, lb.i_start)) continue;
      links.emplace_back(a, b);
      ladders[a].linked = ladders[b].linked = true;
    }
  }
  for (const auto& l : ladders) {
    if (l.bridges < 2 && !l.linked) continue;  // isolated bridge
    mark_run(classes, l.i_start, l.i_end, SSClass::Strand);
    mark_run(classes, l.j_lo, l.j_hi, SSClass::Strand);
  }
  for (auto [a, b] : links) {
    const auto& la = ladders[a];
    const auto& lb = ladders[b];
    mark_run(classes, la.i_end, lb.i_start, SSClass::Strand);
    if (la.type == BridgeType::Parallel)
      mark_run(classes, la.j_hi, lb.j_lo, SSClass::Strand);
    else
      mark_run(classes, lb.j_hi, la.j_lo, SSClass::Strand);
  }

  // alpha helices override strands
  for (std::size_t i = 1; i + 4 < n; ++i)
    if (turn(4, i - 1) && turn(4, i)) mark_run(classes, i, i + 3, SSClass::Helix);

  // 3-10 helices only where nothing stronger was assigned
  for (std::size_t i = 1; i + 3 < n; ++i) {
    if (!(turn(3, i - 1) && turn(3, i))) continue;
    bool empty = true;
    for (std::size_t k = i; k <= i + 2; ++k)
      empty &= classes[k] == SSClass::Coil || classes[k] == SSClass::Helix310;
    if (empty) mark_run(classes, i, i + 2, SSClass::Helix310);
  }

  enforce_min_length(classes, out.provenance, SSClass::Helix, options.min_helix_length);
  enforce_min_length(classes, out.provenance, SSClass::Strand, options.min_strand_length);
  return out;
}

SSAssignment reassign_region(SSAssignment assignment, int start_seq, int end_seq,
                             SSClass new_class) {
  if (start_seq > end_seq)
    fail(ErrorCode::InvertedRange, "range " + std::to_string(start_seq) + "-" +
                                       std::to_string(end_seq) + " is inverted");
  std::optional<std::size_t> first, last;
  for (std::size_t i = 0; i < assignment.keys.size(); ++i) {
    if (!first && assignment.keys[i].seq_num == start_seq) first = i;
    if (assignment.keys[i].seq_num == end_seq) last = i;
  }
  if (!first || !last)
    fail(ErrorCode::RangeOutOfChain,
         "range " + std::to_string(start_seq) + "-" + std::to_string(end_seq) +
             " does not resolve to residues of chain " + std::string(1, assignment.chain_id));
  for (std::size_t k = *first; k <= *last; ++k) {
    assignment.classes[k] = new_class;
    assignment.provenance[k] = Provenance::Manual;
  }
  return assignment;
}

std::vector<Segment> segments_of(std::span<const SSClass> classes) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!out.empty() && out.back().ss_class == classes[i])
      out.back().end = i;
    else
      out.push_back(Segment{classes[i], i, i});
  }
  return out;
}

std::vector<Segment> segments_of(const SSAssignment& assignment) {
  return segments_of(std::span<const SSClass>(assignment.classes));
}

std::vector<DsspRecord> parse_dssp_output(std::string_view text) {
  std::vector<DsspRecord> out;
  bool in_body = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!in_body) {
      in_body = line.rfind("  #  RESIDUE", 0) == 0;
      continue;
    }
    if (line.size() < 17 || line[13] == '!') continue;
    DsspRecord rec{};
    auto num = line.substr(5, 5);
    while (!num.empty() && num.front() == ' ') num.remove_prefix(1);
    std::from_chars(num.data(), num.data() + num.size(), rec.key.seq_num);
    rec.key.insertion_code = line[10];
    rec.chain_id = line[11];
    rec.code = line[16];
    out.push_back(rec);
  }
  return out;
}

char collapse_three_state(char code) {
  switch (code) {
    case 'H':
    case 'G':
    case 'I': return 'H';
    case 'E': return 'E';
    default: return '-';
  }
}

}  // namespace loopgraft
