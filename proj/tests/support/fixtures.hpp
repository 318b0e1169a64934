#pragma once

#include "loopgraft/structure.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

inline std::filesystem::path data(const std::string& rel) {
  return std::filesystem::path(LOOPGRAFT_TEST_DATA) / rel;
}

inline loopgraft::Structure load(const std::string& rel) {
  return loopgraft::parse_pdb(loopgraft::read_file(data(rel).string()));
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("loopgraft-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

/// Backbone-only chain with the given CA positions; N, C and O are offset so
/// that residues have complete backbones.
inline loopgraft::Chain ca_chain(const std::vector<loopgraft::Vec3>& cas, char id = 'A', int first_seq = 1) {
  loopgraft::Chain c;
  c.id = id;
  for (std::size_t i = 0; i < cas.size(); ++i) {
    loopgraft::Residue r;
    r.key = {first_seq + static_cast<int>(i), ' '};
    r.name = "ALA";
    const loopgraft::Vec3 p = cas[i];
    r.atoms.push_back({"N", "N", p + loopgraft::Vec3(-1.0, 0.3, 0.0), 10.0, 1.0});
    r.atoms.push_back({"CA", "C", p, 10.0 + static_cast<double>(i), 1.0});
    r.atoms.push_back({"C", "C", p + loopgraft::Vec3(1.0, 0.3, 0.0), 10.0, 1.0});
    r.atoms.push_back({"O", "O", p + loopgraft::Vec3(1.2, 1.4, 0.0), 10.0, 1.0});
    c.residues.push_back(std::move(r));
  }
  return c;
}

/// All fixture PDB files (case-study, real-data and DSSP chains).
inline std::vector<std::filesystem::path> all_pdb_fixtures() {
  std::vector<std::filesystem::path> out;
  for (const char* dir : {"pdb", "dssp", "synthetic"})
    for (const auto& e : std::filesystem::directory_iterator(data(dir)))
      if (e.path().extension() == ".pdb") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fixtures
