#include "loopgraft/archive.hpp"

#include "loopgraft/error.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <thread>

namespace loopgraft {

namespace fs = std::filesystem;

ArchiveConfig ArchiveConfig::from_env() {
  ArchiveConfig config;
  if (const char* url = std::getenv("LOOPGRAFT_ARCHIVE_URL"); url && *url)
    config.base_url = url;
  if (const char* dir = std::getenv("LOOPGRAFT_CACHE_DIR"); dir && *dir)
    config.cache_dir = dir;
  if (const char* retries = std::getenv("LOOPGRAFT_FETCH_RETRIES"); retries && *retries)
    config.retries = std::max(0, std::atoi(retries));
  return config;
}

std::string normalize_pdb_id(std::string_view id) {
  std::string out;
  for (char c : id) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  static const std::regex pattern("[0-9][a-z0-9]{3}");
  if (!std::regex_match(out, pattern))
    fail(ErrorCode::InvalidId, "'" + std::string(id) + "' is not a 4-character PDB id");
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

namespace {

std::mutex& id_mutex(const std::string& id) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::unique_ptr<std::mutex>> registry;
  std::lock_guard lock(registry_mutex);
  auto& slot = registry[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

ParsedUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    fail(ErrorCode::NetworkFailure, "archive URL lacks a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  out.path_prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

std::string download(const std::string& id, const ArchiveConfig& config) {
  auto url = split_url(config.base_url);
  httplib::Client client(url.scheme_host_port);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_follow_location(true);
  const std::string path = url.path_prefix + "/" + id + ".pdb";

  std::string last_error;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config.retry_delay);
    auto res = client.Get(path);
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 404)
      fail(ErrorCode::NotFound, "entry " + id + " not found at " + config.base_url);
    if (res->status == 200) return res->body;
    last_error = "HTTP " + std::to_string(res->status);
  }
  fail(ErrorCode::NetworkFailure, "fetching " + id + " from " + config.base_url +
                                      " failed after " + std::to_string(config.retries + 1) +
                                      " attempts: " + last_error);
}

}  // namespace

fs::path fetch_to_cache(std::string_view pdb_id, const ArchiveConfig& config) {
  const std::string id = normalize_pdb_id(pdb_id);
  const fs::path target = config.cache_dir / (id + ".pdb");
  std::lock_guard lock(id_mutex(id));
  if (fs::exists(target)) return target;

  std::string body = download(id, config);
  fs::create_directories(config.cache_dir);
  static std::atomic<unsigned> counter{0};
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) fail(ErrorCode::NetworkFailure, "cannot write cache file " + tmp.string());
  }
  fs::rename(tmp, target);
  return target;
}

Structure fetch_structure(std::string_view pdb_id, const ArchiveConfig& config) {
  auto path = fetch_to_cache(pdb_id, config);
  Structure s = parse_pdb(read_file(path.string()), StructureSource::RemoteFetch);
  s.pdb_id = normalize_pdb_id(pdb_id);
  return s;
}

StructureRepository::StructureRepository(ArchiveConfig config,
                                         std::vector<fs::path> local_dirs)
    : config_(std::move(config)), local_dirs_(std::move(local_dirs)) {}

namespace {

std::string id_from_filename(const fs::path& path) {
  std::string stem = path.filename().string();
  if (auto dot = stem.find('.'); dot != std::string::npos) stem.resize(dot);
  for (auto& c : stem) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (stem.size() == 7 && stem.rfind("pdb", 0) == 0) stem = stem.substr(3);
  return stem;
}

LoadedStructure load_file(const fs::path& path, StructureSource source,
                          const std::string& forced_id) {
  std::string text = read_file(path.string());
  auto s = std::make_shared<Structure>(parse_pdb(text, source));
  if (!forced_id.empty()) s->pdb_id = forced_id;
  if (s->pdb_id.empty()) s->pdb_id = id_from_filename(path);
  return LoadedStructure{std::move(s), sha256_hex(text), path};
}

}  // namespace

LoadedStructure StructureRepository::load(std::string_view reference) const {
  fs::path as_path(reference);
  if (reference.size() != 4 && fs::is_regular_file(as_path))
    return load_file(as_path, StructureSource::File, "");

  const std::string id = normalize_pdb_id(reference);
  for (const auto& dir : local_dirs_) {
    for (const auto& name : {id + ".pdb", "pdb" + id + ".ent", id + ".ent"}) {
      auto candidate = dir / name;
      if (fs::is_regular_file(candidate)) return load_file(candidate, StructureSource::File, id);
    }
  }
  auto path = fetch_to_cache(id, config_);
  return load_file(path, StructureSource::RemoteFetch, id);
}

}  // namespace loopgraft
