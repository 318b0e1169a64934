#pragma once

#include "loopgraft/structure.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loopgraft {

enum class SSClass : char { Helix = 'H', Helix310 = 'G', Strand = 'E', Coil = 'C' };

/// H and E enclose loops; G and C are aperiodic.
constexpr bool is_periodic(SSClass c) { return c == SSClass::Helix || c == SSClass::Strand; }

char to_char(SSClass c);
/// Accepts H, G, E, C (and '-' / ' ' as coil). Throws BadRequest otherwise.
SSClass ss_class_from_char(char c);

enum class Provenance : unsigned char { Automatic, Manual };

struct SSAssignment {
  char chain_id = 'A';
  std::vector<ResidueKey> keys;
  std::vector<SSClass> classes;
  std::vector<Provenance> provenance;
  /// Residue possesses a Cα; a missing Cα marks a chain break for loop pairing.
  std::vector<bool> has_ca;

  std::size_t size() const { return classes.size(); }
  std::string class_string() const;
  /// First residue index with this sequence number.
  std::optional<std::size_t> index_of(int seq_num) const;
};

/// Builds an assignment from a class string, numbering residues from
/// `first_seq`. Used for hand-made fixtures and imported references.
SSAssignment make_assignment(std::string_view classes, char chain_id = 'A',
                             int first_seq = 1);

struct Segment {
  SSClass ss_class = SSClass::Coil;
  std::size_t start = 0;  // inclusive residue index
  std::size_t end = 0;    // inclusive residue index

  std::size_t length() const { return end + 1 - start; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct DsspOptions {
  double hbond_cutoff = -0.5;        // kcal/mol
  std::size_t min_helix_length = 4;  // shorter automatic H runs become C
  std::size_t min_strand_length = 3; // shorter automatic E runs become C
};

/// Electrostatic Kabsch-Sander energy (kcal/mol) between donor N-H and
/// acceptor C=O, floored at -9.9.
double hbond_energy(const Vec3& n, const Vec3& h, const Vec3& c, const Vec3& o);

/// Per-residue donor/acceptor energy matrix of a chain, E(donor, acceptor);
/// entries without a valid donor hydrogen or complete backbone are 0.
/// Exposed for inspection and tests.
struct HBondMap {
  std::size_t n = 0;
  std::vector<double> energy;  // row-major n*n, [donor * n + acceptor]
  double at(std::size_t donor, std::size_t acceptor) const { return energy[donor * n + acceptor]; }
};
HBondMap hbond_map(const Chain& chain);

/// Simplified DSSP emitting H, G, E, C. Chains shorter than five residues
/// are all coil; longer chains need five consecutive residues with complete
/// backbone or MissingBackbone is thrown.
SSAssignment assign_secondary_structure(const Structure& structure, char chain_id,
                                        const DsspOptions& options = {});

/// Sets [start_seq, end_seq] to `new_class` with manual provenance.
/// Throws InvertedRange or RangeOutOfChain.
SSAssignment reassign_region(SSAssignment assignment, int start_seq, int end_seq,
                             SSClass new_class);

std::vector<Segment> segments_of(std::span<const SSClass> classes);
std::vector<Segment> segments_of(const SSAssignment& assignment);

/// Secondary structure column of a classic DSSP output file, one entry per
/// residue line (chain-break '!' lines skipped).
struct DsspRecord {
  char chain_id;
  ResidueKey key;
  char code;  // raw DSSP code, ' ' for none
};
std::vector<DsspRecord> parse_dssp_output(std::string_view text);

/// {H,G,I} -> 'H', E -> 'E', anything else -> '-'.
char collapse_three_state(char code);

}  // namespace loopgraft
