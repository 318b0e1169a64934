#include "loopgraft/grafting.hpp"

#include "loopgraft/error.hpp"
#include "loopgraft/superpose.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <cstdint>
#include <unordered_map>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace loopgraft {

VariantBounds variant_bounds(const Chain& scaffold, const Chain& insert, int anchor_len) {
  auto bounds_of = [&](const Chain& c, int& first, int& last) {
    if (c.residues.size() <= static_cast<std::size_t>(2 * anchor_len)) {
      first = 1;
      last = 0;
      return;
    }
    first = c.residues[static_cast<std::size_t>(anchor_len)].key.seq_num;
    last = c.residues[c.residues.size() - 1 - static_cast<std::size_t>(anchor_len)].key.seq_num;
  };
  VariantBounds b;
  bounds_of(scaffold, b.scaffold_first, b.scaffold_last);
  bounds_of(insert, b.insert_first, b.insert_last);
  return b;
}

namespace {

bool scaffold_overlap(const std::vector<GraftPair>& pairs) {
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (std::size_t j = i + 1; j < pairs.size(); ++j)
      if (pairs[i].scaffold_start <= pairs[j].scaffold_end &&
          pairs[j].scaffold_start <= pairs[i].scaffold_end)
        return true;
  return false;
}

}  // namespace

std::vector<GraftSpec> enumerate_variants(const GraftSpec& base, int window,
                                          const VariantBounds& bounds,
                                          std::size_t max_variants) {
  if (window < 0) fail(ErrorCode::BadRequest, "variant window must be >= 0");
  const std::size_t boundaries = 4 * base.pairs.size();
  const std::size_t width = static_cast<std::size_t>(2 * window + 1);
  double combos = std::pow(static_cast<double>(width), static_cast<double>(boundaries));
  if (combos > static_cast<double>(max_variants))
    fail(ErrorCode::BadRequest, "window " + std::to_string(window) + " over " +
                                    std::to_string(base.pairs.size()) + " pairs gives " +
                                    std::to_string(combos) + " variants");

  std::vector<GraftSpec> out;
  std::set<std::vector<int>> seen;
  std::vector<int> offsets(boundaries, -window);
  const std::size_t total = static_cast<std::size_t>(combos);
  for (std::size_t n = 0; n < total; ++n) {
    GraftSpec spec = base;
    bool valid = true;
    std::vector<int> signature;
    for (std::size_t p = 0; p < spec.pairs.size() && valid; ++p) {
      auto& pr = spec.pairs[p];
      pr.scaffold_start = std::clamp(pr.scaffold_start + offsets[4 * p + 0], bounds.scaffold_first,
                                     bounds.scaffold_last);
      pr.scaffold_end = std::clamp(pr.scaffold_end + offsets[4 * p + 1], bounds.scaffold_first,
                                   bounds.scaffold_last);
      pr.insert_start = std::clamp(pr.insert_start + offsets[4 * p + 2], bounds.insert_first,
                                   bounds.insert_last);
      pr.insert_end = std::clamp(pr.insert_end + offsets[4 * p + 3], bounds.insert_first,
                                 bounds.insert_last);
      valid = bounds.scaffold_first <= bounds.scaffold_last &&
              bounds.insert_first <= bounds.insert_last &&
              pr.scaffold_start <= pr.scaffold_end && pr.insert_start <= pr.insert_end;
      signature.insert(signature.end(),
                       {pr.scaffold_start, pr.scaffold_end, pr.insert_start, pr.insert_end});
    }
    if (valid && !scaffold_overlap(spec.pairs) && seen.insert(signature).second)
      out.push_back(std::move(spec));
    // odometer increment, last boundary fastest
    for (std::size_t k = boundaries; k-- > 0;) {
      if (++offsets[k] <= window) break;
      offsets[k] = -window;
    }
  }
  if (out.empty())
    fail(ErrorCode::DegenerateRange, "no valid variant survives clipping to the chain bounds");
  return out;
}

namespace {

struct ResolvedPair {
  const GraftPair* pair = nullptr;
  std::size_t s_first = 0, s_last = 0, i_first = 0, i_last = 0;
};

std::size_t resolve(const Chain& chain, int seq, const char* what) {
  auto idx = chain.index_of(seq);
  if (!idx)
    fail(ErrorCode::RangeOutOfChain, std::string(what) + " residue " + std::to_string(seq) +
                                         " is not in chain " + std::string(1, chain.id));
  return *idx;
}

Eigen::Matrix3Xd anchor_ca(const Chain& chain, std::size_t first, std::size_t last, int anchor_len,
                           const char* what) {
  const auto a = static_cast<std::size_t>(anchor_len);
  if (first < a || last + a >= chain.residues.size())
    fail(ErrorCode::ClippedAnchor, std::string(what) + " anchors of range " +
                                       to_string(chain.residues[first].key) + "-" +
                                       to_string(chain.residues[last].key) +
                                       " extend past the chain end");
  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(2 * a));
  Eigen::Index col = 0;
  auto take = [&](std::size_t r) {
    const Atom* ca = chain.residues[r].find_atom("CA");
    if (!ca)
      fail(ErrorCode::MissingAnchorAtoms, std::string(what) + " anchor residue " +
                                              to_string(chain.residues[r].key) + " has no CA");
    out.col(col++) = ca->position;
  };
  for (std::size_t r = first - a; r < first; ++r) take(r);
  for (std::size_t r = last + 1; r <= last + a; ++r) take(r);
  return out;
}

}  // namespace

ChimericModel splice(const Structure& scaffold, char scaffold_chain, const Structure& insert,
                     char insert_chain, const GraftSpec& spec, int baseline_clashes) {
  const Chain& sc = scaffold.chain(scaffold_chain);
  const Chain& ic = insert.chain(insert_chain);
  if (spec.anchor_len < 1) fail(ErrorCode::BadRequest, "anchor_len must be >= 1");
  if (scaffold_overlap(spec.pairs))
    fail(ErrorCode::DegenerateRange, "scaffold ranges of the spec overlap");

  std::vector<ResolvedPair> resolved;
  for (const auto& p : spec.pairs) {
    if (p.scaffold_start > p.scaffold_end || p.insert_start > p.insert_end)
      fail(ErrorCode::InvertedRange, "graft pair " + p.scaffold_loop_id + "/" + p.insert_loop_id +
                                         " has an inverted range");
    ResolvedPair r;
    r.pair = &p;
    r.s_first = resolve(sc, p.scaffold_start, "scaffold");
    r.s_last = resolve(sc, p.scaffold_end, "scaffold");
    r.i_first = resolve(ic, p.insert_start, "insert");
    r.i_last = resolve(ic, p.insert_end, "insert");
    resolved.push_back(r);
  }
  std::sort(resolved.begin(), resolved.end(),
            [](const ResolvedPair& a, const ResolvedPair& b) { return a.s_first < b.s_first; });

  ChimericModel model;
  model.spec = spec;
  model.chain_id = sc.id;
  model.structure.pdb_id = scaffold.pdb_id;
  model.structure.source = scaffold.source;
  model.baseline_clashes = baseline_clashes >= 0 ? baseline_clashes : count_clashes(sc);
  Chain out;
  out.id = sc.id;

  const int first_seq = sc.residues.empty() ? 1 : sc.residues.front().key.seq_num;
  auto emit = [&](Residue r, Origin origin) {
    r.key = ResidueKey{first_seq + static_cast<int>(out.residues.size()), ' '};
    out.residues.push_back(std::move(r));
    model.origin_mask.push_back(origin);
  };

  std::size_t next = 0;
  for (const auto& r : resolved) {
    const auto target = anchor_ca(sc, r.s_first, r.s_last, spec.anchor_len, "scaffold");
    const auto mobile = anchor_ca(ic, r.i_first, r.i_last, spec.anchor_len, "insert");
    const auto fit = kabsch(mobile, target);
    for (; next < r.s_first; ++next) emit(sc.residues[next], Origin::Scaffold);
    Junction j;
    j.scaffold_anchor = target;
    j.insert_anchor = fit(mobile);
    j.first_residue = out.residues.size();
    for (std::size_t k = r.i_first; k <= r.i_last; ++k) {
      Residue res = ic.residues[k];
      for (auto& a : res.atoms) a.position = fit.apply(a.position);
      emit(std::move(res), Origin::Grafted);
    }
    j.last_residue = out.residues.size() - 1;
    model.junctions.push_back(std::move(j));
    next = r.s_last + 1;
  }
  for (; next < sc.residues.size(); ++next) emit(sc.residues[next], Origin::Scaffold);
  model.structure.chains.push_back(std::move(out));
  return model;
}

int count_clashes(const Chain& chain, double threshold) {
  struct Entry {
    Vec3 p;
    int seq;
  };
  std::vector<Entry> atoms;
  for (const auto& r : chain.residues)
    for (const auto& a : r.atoms)
      if (!a.is_hydrogen()) atoms.push_back({a.position, r.key.seq_num});

  // Exact 21-bit-per-axis cell keys, so the 27 neighbours are distinct.
  auto cell_of = [&](const Vec3& p) {
    return Eigen::Vector3i((p / threshold).array().floor().cast<int>());
  };
  auto key = [](const Eigen::Vector3i& c) {
    constexpr std::uint64_t mask = (1u << 21) - 1;
    constexpr int bias = 1 << 20;
    return (static_cast<std::uint64_t>(c.x() + bias) & mask) << 42 |
           (static_cast<std::uint64_t>(c.y() + bias) & mask) << 21 |
           (static_cast<std::uint64_t>(c.z() + bias) & mask);
  };
  std::vector<Eigen::Vector3i> cells(atoms.size());
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  grid.reserve(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    cells[i] = cell_of(atoms[i].p);
    grid[key(cells[i])].push_back(i);
  }

  const double t2 = threshold * threshold;
  int count = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = grid.find(key(cells[i] + Eigen::Vector3i(dx, dy, dz)));
          if (it == grid.end()) continue;
          for (std::size_t j : it->second) {
            if (j <= i || std::abs(atoms[i].seq - atoms[j].seq) < 2) continue;
            if ((atoms[i].p - atoms[j].p).squaredNorm() < t2) ++count;
          }
        }
  }
  return count;
}

ScoreReport surrogate_score(const ChimericModel& model) {
  ScoreReport s;
  double sq = 0.0;
  Eigen::Index n = 0;
  for (const auto& j : model.junctions) {
    sq += (j.scaffold_anchor - j.insert_anchor).colwise().squaredNorm().sum();
    n += j.scaffold_anchor.cols();
  }
  s.anchor_rmsd = n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
  s.clash_count = std::max(0, count_clashes(model.chain()) - model.baseline_clashes);
  s.composite = s.anchor_rmsd + 0.5 * s.clash_count;
  for (const auto& [k, v] : model.scores)
    if (k != "anchor_rmsd" && k != "clash_count" && k != "composite") s.external[k] = v;
  return s;
}

void apply_surrogate(ChimericModel& model) {
  const auto s = surrogate_score(model);
  model.scores["anchor_rmsd"] = s.anchor_rmsd;
  model.scores["clash_count"] = s.clash_count;
  model.scores["composite"] = s.composite;
}

void translate_grafted(ChimericModel& model, const Vec3& shift) {
  auto& residues = model.structure.chains.front().residues;
  for (std::size_t k = 0; k < residues.size(); ++k)
    if (model.origin_mask[k] == Origin::Grafted)
      for (auto& a : residues[k].atoms) a.position += shift;
  for (auto& j : model.junctions) j.insert_anchor.colwise() += shift;
}

std::string model_pdb(const ChimericModel& model) {
  Structure copy = model.structure;
  auto& residues = copy.chains.front().residues;
  for (std::size_t k = 0; k < residues.size(); ++k)
    for (auto& a : residues[k].atoms)
      a.b_factor = model.origin_mask[k] == Origin::Grafted ? 1.0 : 0.0;
  return write_pdb(copy);
}

std::string model_mask_table(const ChimericModel& model) {
  std::ostringstream out;
  out << "index\tseq\tresidue\torigin\n";
  const auto& residues = model.chain().residues;
  for (std::size_t k = 0; k < residues.size(); ++k)
    out << k << '\t' << residues[k].key.seq_num << '\t' << residues[k].name << '\t'
        << (model.origin_mask[k] == Origin::Grafted ? "grafted" : "scaffold") << '\n';
  return out.str();
}

AdapterConfig AdapterConfig::from_env() {
  AdapterConfig c;
  if (const char* cmd = std::getenv("LOOPGRAFT_ADAPTER_CMD"); cmd && *cmd) c.command = cmd;
  if (const char* t = std::getenv("LOOPGRAFT_ADAPTER_TIMEOUT_MS"); t && *t)
    c.timeout = std::chrono::milliseconds(std::max(1, std::atoi(t)));
  if (const char* p = std::getenv("LOOPGRAFT_ADAPTER_PARALLELISM"); p && *p)
    c.max_concurrent = std::max(1, std::atoi(p));
  return c;
}

namespace {

class ProcessSlots {
 public:
  void acquire(int limit) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return active_ < std::max(1, limit); });
    ++active_;
  }
  void release() {
    {
      std::lock_guard lock(mutex_);
      --active_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int active_ = 0;
};

ProcessSlots& slots() {
  static ProcessSlots s;
  return s;
}

struct SlotGuard {
  explicit SlotGuard(int limit) { slots().acquire(limit); }
  ~SlotGuard() { slots().release(); }
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

struct TempFile {
  std::filesystem::path path;
  ~TempFile() {
    std::error_code ec;
    if (!path.empty()) std::filesystem::remove(path, ec);
  }
};

}  // namespace

std::map<std::string, double> external_score(ChimericModel& model, const AdapterConfig& config) {
  if (config.command.empty())
    fail(ErrorCode::AdapterLaunchFailure, "no adapter command configured");

  TempFile tmp;
  {
    std::string pattern = (std::filesystem::temp_directory_path() / "loopgraft-XXXXXX.pdb").string();
    int fd = ::mkstemps(pattern.data(), 4);
    if (fd < 0) fail(ErrorCode::AdapterLaunchFailure, "cannot create a temporary model file");
    ::close(fd);
    tmp.path = pattern;
    std::ofstream out(tmp.path);
    out << model_pdb(model);
    if (!out) fail(ErrorCode::AdapterLaunchFailure, "cannot write " + tmp.path.string());
  }

  SlotGuard slot(config.max_concurrent);
  int pipefd[2];
  if (::pipe(pipefd) != 0) fail(ErrorCode::AdapterLaunchFailure, "pipe() failed");
  const std::string cmd = config.command + " " + shell_quote(tmp.path.string());
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(pipefd[0]);
    ::close(pipefd[1]);
    fail(ErrorCode::AdapterLaunchFailure, "fork() failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(pipefd[1], STDOUT_FILENO);
    int devnull = ::open("/dev/null", O_RDWR);
    if (devnull >= 0) {
      ::dup2(devnull, STDIN_FILENO);
      ::dup2(devnull, STDERR_FILENO);
    }
    ::close(pipefd[0]);
    ::close(pipefd[1]);
    ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(pipefd[1]);

  std::string output;
  const auto deadline = std::chrono::steady_clock::now() + config.timeout;
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd p{pipefd[0], POLLIN, 0};
    int ready = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    ssize_t got = ::read(pipefd[0], buf, sizeof buf);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) break;
    output.append(buf, static_cast<std::size_t>(got));
  }
  ::close(pipefd[0]);
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out)
    fail(ErrorCode::AdapterTimeout, "adapter exceeded " + std::to_string(config.timeout.count()) +
                                        " ms: " + config.command);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    fail(ErrorCode::AdapterLaunchFailure,
         "adapter '" + config.command + "' exited with status " +
             std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

  std::map<std::string, double> scores;
  std::istringstream lines(output);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string name, value, extra;
    if (!(fields >> name >> value) || (fields >> extra)) continue;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) continue;
    scores[name] = v;
  }
  if (scores.empty())
    fail(ErrorCode::AdapterParseFailure, "adapter printed no 'NAME VALUE' line");
  for (const auto& [k, v] : scores) model.scores[k] = v;
  return scores;
}

std::vector<std::size_t> rank_models(const std::vector<std::map<std::string, double>>& scores,
                                     const std::string& key) {
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!scores[i].count(key))
      fail(ErrorCode::MissingScoreKey, "model " + std::to_string(i) + " has no score '" + key + "'");
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a].at(key) < scores[b].at(key);
  });
  return idx;
}

std::vector<std::size_t> rank_models(const std::vector<ChimericModel>& models,
                                     const std::string& key) {
  std::vector<std::map<std::string, double>> scores;
  scores.reserve(models.size());
  for (const auto& m : models) scores.push_back(m.scores);
  return rank_models(scores, key);
}

}  // namespace loopgraft
