#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loopgraft {

using Vec3 = Eigen::Vector3d;

/// Author numbering of a residue. Insertion code ' ' means none.
struct ResidueKey {
  int seq_num = 0;
  char insertion_code = ' ';

  friend auto operator<=>(const ResidueKey&, const ResidueKey&) = default;
};

std::string to_string(const ResidueKey& key);

struct Atom {
  std::string name;
  std::string element;
  Vec3 position = Vec3::Zero();
  double b_factor = 0.0;
  double occupancy = 1.0;

  bool is_hydrogen() const { return element == "H" || element == "D"; }
};

struct Residue {
  ResidueKey key;
  std::string name;
  std::vector<Atom> atoms;

  const Atom* find_atom(std::string_view atom_name) const;
  bool has_ca() const { return find_atom("CA") != nullptr; }
};

struct Chain {
  char id = 'A';
  std::vector<Residue> residues;

  /// Index of the first residue with this sequence number, if any.
  std::optional<std::size_t> index_of(int seq_num) const;
  std::optional<std::size_t> index_of(const ResidueKey& key) const;
};

enum class StructureSource { File, RemoteFetch };

struct Structure {
  std::string pdb_id;  // lowercase, may be empty for anonymous files
  std::vector<Chain> chains;
  StructureSource source = StructureSource::File;

  /// Throws Error{UnknownChain}.
  const Chain& chain(char id) const;
  Chain& chain(char id);
  bool has_chain(char id) const;
};

/// Cα positions of one chain, one column per residue possessing a Cα.
struct CaTrace {
  char chain_id = 'A';
  Eigen::Matrix3Xd positions;
  std::vector<ResidueKey> residue_keys;
  /// Index of each trace point in Chain::residues.
  std::vector<std::size_t> residue_index;

  std::size_t size() const { return residue_keys.size(); }

  /// Trace indices whose chain residue index lies in [first, last].
  std::vector<std::size_t> points_in(std::size_t first, std::size_t last) const;
  std::optional<std::size_t> point_of(std::size_t chain_residue) const;
};

/// Parses legacy fixed-column PDB text. Keeps ATOM records of the first MODEL,
/// resolves alternate locations by occupancy (first wins ties) and drops
/// HETATM records and waters. Throws NoAtoms or MalformedRecord; the latter
/// lists every offending line number.
Structure parse_pdb(std::string_view text,
                    StructureSource source = StructureSource::File);

/// Serializes ATOM/TER/END records. parse_pdb(write_pdb(s)) reproduces s for
/// everything the parser retains.
std::string write_pdb(const Structure& structure);

/// Throws UnknownChain.
CaTrace ca_trace(const Structure& structure, char chain_id);

std::string read_file(const std::string& path);

}  // namespace loopgraft
