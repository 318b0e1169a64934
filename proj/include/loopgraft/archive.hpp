#pragma once

#include "loopgraft/structure.hpp"

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace loopgraft {

/// Where structures come from. Environment overrides:
///   LOOPGRAFT_ARCHIVE_URL   base URL, entries at <base>/<id>.pdb
///   LOOPGRAFT_CACHE_DIR     on-disk cache, files named <id>.pdb
///   LOOPGRAFT_FETCH_RETRIES transport retries before NetworkFailure
struct ArchiveConfig {
  std::string base_url = "https://files.rcsb.org/download";
  std::filesystem::path cache_dir = "loopgraft-cache";
  int retries = 3;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds retry_delay{500};

  static ArchiveConfig from_env();
};

/// Lowercases and validates `[0-9][a-z0-9]{3}`; throws InvalidId.
std::string normalize_pdb_id(std::string_view id);

/// Returns the cached file path, downloading on a cache miss. Writes for the
/// same id are serialized; the file appears atomically.
std::filesystem::path fetch_to_cache(std::string_view pdb_id,
                                     const ArchiveConfig& config);

/// fetch_to_cache followed by parse_pdb. Throws NotFound, NetworkFailure,
/// InvalidId and parse errors.
Structure fetch_structure(std::string_view pdb_id, const ArchiveConfig& config);

std::string sha256_hex(std::string_view bytes);

struct LoadedStructure {
  std::shared_ptr<const Structure> structure;
  std::string content_hash;
  std::filesystem::path path;
};

/// Resolves structure references for sessions and the CLI. A reference is a
/// readable file path or a PDB id; ids are looked up in `local_dirs` first
/// (as <id>.pdb, pdb<id>.ent, <id>.ent) and then fetched through the cache.
class StructureRepository {
 public:
  explicit StructureRepository(ArchiveConfig config = ArchiveConfig::from_env(),
                               std::vector<std::filesystem::path> local_dirs = {});

  LoadedStructure load(std::string_view reference) const;

  const ArchiveConfig& config() const { return config_; }

 private:
  ArchiveConfig config_;
  std::vector<std::filesystem::path> local_dirs_;
};

}  // namespace loopgraft
