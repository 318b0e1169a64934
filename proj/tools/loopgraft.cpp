#include "loopgraft/archive.hpp"
#include "loopgraft/dynamics.hpp"
#include "loopgraft/error.hpp"
#include "loopgraft/json_io.hpp"
#include "loopgraft/loop_geometry.hpp"
#include "loopgraft/loops.hpp"
#include "loopgraft/pipeline.hpp"
#include "loopgraft/secondary_structure.hpp"
#include "loopgraft/service.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace loopgraft;
using nlohmann::json;

namespace {

char chain_of(const std::string& c) {
  if (c.empty()) return 0;
  return c == "_" ? ' ' : c[0];
}

std::pair<std::string, char> split_ref(const std::string& ref) {
  // "1isp:A", "path/to/file.pdb:B"; a trailing ":_" selects a blank chain.
  const auto colon = ref.rfind(':');
  if (colon == std::string::npos || colon + 2 != ref.size()) return {ref, 0};
  return {ref.substr(0, colon), chain_of(ref.substr(colon + 1))};
}

struct Loaded {
  LoadedStructure file;
  char chain = 'A';
  SSAssignment assignment;
  CaTrace trace;
  std::vector<Loop> loops;
};

Loaded load(const std::string& ref, const std::string& chain, const std::vector<std::string>& overrides) {
  StructureRepository repo(ArchiveConfig::from_env(), ServiceConfig::from_env().local_dirs);
  Loaded l;
  l.file = repo.load(ref);
  l.chain = chain_of(chain);
  if (l.chain == 0) l.chain = l.file.structure->chains.at(0).id;
  l.assignment = assign_secondary_structure(*l.file.structure, l.chain);
  for (const auto& o : overrides) {
    const RoleOverride r = parse_role_override("scaffold:" + o);
    l.assignment = reassign_region(std::move(l.assignment), r.start_seq, r.end_seq, r.ss_class);
  }
  l.trace = ca_trace(*l.file.structure, l.chain);
  l.loops = extract_loops(l.assignment, l.file.structure->pdb_id);
  compute_all_descriptors(l.loops, l.trace);
  return l;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loopgraft: loop exploration and grafting between two protein structures"};
  app.require_subcommand(1);

  // fetch
  auto* fetch = app.add_subcommand("fetch", "download a PDB entry into the cache");
  std::string fetch_id, cache_dir;
  fetch->add_option("id", fetch_id, "PDB id")->required();
  fetch->add_option("--cache-dir", cache_dir, "cache directory (default LOOPGRAFT_CACHE_DIR)");

  // ss
  auto* ss = app.add_subcommand("ss", "print the secondary structure assignment");
  std::string ss_ref, ss_chain;
  ss->add_option("pdb", ss_ref, "PDB id or file")->required();
  ss->add_option("chain", ss_chain, "chain id, '_' for blank");

  // geometry
  auto* geometry = app.add_subcommand("geometry", "per-loop D, delta, theta, rho");
  std::string geo_ref, geo_chain;
  std::vector<std::string> geo_overrides;
  bool geo_json = false, geo_csv = false;
  geometry->add_option("pdb", geo_ref, "PDB id or file")->required();
  geometry->add_option("chain", geo_chain, "chain id, '_' for blank");
  geometry->add_option("--override", geo_overrides, "start-end:class reassignment");
  auto* gj = geometry->add_flag("--json", geo_json);
  geometry->add_flag("--csv", geo_csv)->excludes(gj);

  // flex
  auto* flex = app.add_subcommand("flex", "per-residue flexibility profiles");
  std::string flex_ref, flex_chain, flex_method = "all";
  bool flex_csv = false;
  flex->add_option("pdb", flex_ref, "PDB id or file")->required();
  flex->add_option("chain", flex_chain, "chain id, '_' for blank");
  flex->add_option("--method", flex_method, "b, gnm, anm or all")
      ->check(CLI::IsMember({"b", "gnm", "anm", "all"}));
  flex->add_flag("--csv", flex_csv);

  // xcorr
  auto* xcorr = app.add_subcommand("xcorr", "loop motion cross-correlation against candidates");
  std::string xc_ref, xc_chain, xc_candidates, xc_sort = "ss_to_coil";
  std::vector<std::string> xc_overrides;
  int xc_modes = 20;
  double xc_cutoff = 10.0;
  xcorr->add_option("pdb", xc_ref, "PDB id or file")->required();
  xcorr->add_option("chain", xc_chain, "chain id, '_' for blank");
  xcorr->add_option("--candidates", xc_candidates, "loop ids or seq ranges, comma separated")->required();
  xcorr->add_option("--sort", xc_sort, "ss_to_coil, ss_corr, loop_corr, position or id");
  xcorr->add_option("--modes", xc_modes, "GNM modes used");
  xcorr->add_option("--cutoff", xc_cutoff, "GNM contact cutoff in angstrom");
  xcorr->add_option("--override", xc_overrides, "start-end:class reassignment");

  // run
  auto* run = app.add_subcommand("run", "headless pipeline from loading to ranked chimeras");
  std::string run_scaffold, run_insert, run_candidates, run_out = "loopgraft-out", run_key = "composite";
  std::vector<std::string> run_overrides;
  bool run_auto = false;
  int run_window = 3;
  std::size_t run_keep = 5;
  run->add_option("--scaffold", run_scaffold, "id:chain")->required();
  run->add_option("--insert", run_insert, "id:chain")->required();
  run->add_flag("--auto", run_auto, "pair loops automatically")->required();
  run->add_option("--override", run_overrides, "role:start-end:class, repeatable");
  run->add_option("--candidates", run_candidates, "scaffold loop ids or seq ranges (default all)");
  run->add_option("--window", run_window, "boundary offset window")->check(CLI::Range(0, 10));
  run->add_option("--keep", run_keep, "chimeras written");
  run->add_option("--rank-by", run_key, "score key for ranking");
  run->add_option("--out", run_out, "output directory");

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP/JSON API");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fetch) {
      ArchiveConfig cfg = ArchiveConfig::from_env();
      if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
      std::cout << fetch_to_cache(fetch_id, cfg).string() << '\n';
    } else if (*ss) {
      const Loaded l = load(ss_ref, ss_chain, {});
      std::cout << l.assignment.class_string() << '\n';
    } else if (*geometry) {
      const Loaded l = load(geo_ref, geo_chain, geo_overrides);
      if (geo_json) {
        json out = json::array();
        for (const auto& loop : l.loops) out.push_back(io::loop_json(loop, l.assignment));
        std::cout << out.dump(2) << '\n';
      } else {
        const char sep = geo_csv ? ',' : '\t';
        std::cout << "id" << sep << "first" << sep << "last" << sep << "D" << sep << "delta" << sep << "theta"
                  << sep << "rho\n";
        std::cout << std::fixed << std::setprecision(2);
        for (const auto& loop : l.loops) {
          std::cout << loop.id << sep << l.assignment.keys[loop.first_index()].seq_num << sep
                    << l.assignment.keys[loop.last_index()].seq_num;
          if (loop.descriptors)
            std::cout << sep << loop.descriptors->D << sep << loop.descriptors->delta << sep
                      << loop.descriptors->theta << sep << loop.descriptors->rho;
          else
            std::cout << sep << sep << sep;
          std::cout << '\n';
        }
      }
    } else if (*flex) {
      const Loaded l = load(flex_ref, flex_chain, {});
      std::vector<FlexMethod> methods;
      if (flex_method == "all") methods = {FlexMethod::PdbB, FlexMethod::Gnm, FlexMethod::Anm};
      else methods = {flex_method_from_string(flex_method)};
      std::vector<FlexibilityProfile> profiles;
      for (auto m : methods) {
        switch (m) {
          case FlexMethod::PdbB: profiles.push_back(bfactor_profile(*l.file.structure, l.chain)); break;
          case FlexMethod::Gnm: profiles.push_back(gnm_fluctuations(l.trace)); break;
          case FlexMethod::Anm: profiles.push_back(anm_fluctuations(l.trace)); break;
        }
      }
      if (flex_csv) {
        std::cout << "residue";
        for (const auto& p : profiles) std::cout << ',' << to_string(p.method);
        std::cout << '\n' << std::setprecision(6);
        for (std::size_t i = 0; i < profiles.front().keys.size(); ++i) {
          std::cout << to_string(profiles.front().keys[i]);
          for (const auto& p : profiles) std::cout << ',' << p.values[static_cast<Eigen::Index>(i)];
          std::cout << '\n';
        }
      } else {
        json out = {{"profiles", json::array()}};
        for (const auto& p : profiles) out["profiles"].push_back(io::profile_json(p));
        if (profiles.size() >= 2) out["correlation"] = io::method_correlation_json(method_correlation(profiles));
        std::cout << out.dump(2) << '\n';
      }
    } else if (*xcorr) {
      const Loaded l = load(xc_ref, xc_chain, xc_overrides);
      std::vector<Loop> columns, rows;
      std::vector<std::string> chosen;
      ProteinState p;
      p.assignment = l.assignment;
      p.loops = l.loops;
      for (const auto& tok : split_list(xc_candidates)) chosen.push_back(resolve_loop_token(p, tok));
      for (const auto& loop : l.loops) {
        const bool cand = std::find(chosen.begin(), chosen.end(), loop.id) != chosen.end();
        (cand ? columns : rows).push_back(loop);
      }
      const auto set = motion_cross_correlation(l.trace, rows, columns, {xc_cutoff, xc_modes});
      const auto order = sort_correlation_rows(set, rows, xc_sort, true);
      std::cout << "row";
      for (const auto& c : set.column_ids) std::cout << '\t' << c << ":ss_corr\t" << c << ":loop_corr\t" << c << ":ss_to_coil";
      std::cout << '\n' << std::fixed << std::setprecision(3);
      for (auto r : order) {
        std::cout << set.row_ids[r];
        for (Eigen::Index c = 0; c < set.ss_corr.cols(); ++c)
          std::cout << '\t' << set.ss_corr(static_cast<Eigen::Index>(r), c) << '\t'
                    << set.loop_corr(static_cast<Eigen::Index>(r), c) << '\t'
                    << set.ss_to_coil(static_cast<Eigen::Index>(r), c);
        std::cout << '\n';
      }
    } else if (*run) {
      (void)run_auto;
      RunOptions opt;
      std::tie(opt.scaffold, opt.scaffold_chain) = split_ref(run_scaffold);
      std::tie(opt.insert, opt.insert_chain) = split_ref(run_insert);
      for (const auto& o : run_overrides) opt.overrides.push_back(parse_role_override(o));
      opt.candidates = split_list(run_candidates);
      opt.window = run_window;
      opt.keep = run_keep;
      opt.rank_key = run_key;
      opt.adapter = AdapterConfig::from_env();
      opt.out_dir = run_out;
      const auto t0 = std::chrono::steady_clock::now();
      StructureRepository repo(ArchiveConfig::from_env(), ServiceConfig::from_env().local_dirs);
      const RunResult r = run_pipeline(repo, opt);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cerr << "pairings:";
      for (const auto& p : r.session.pairings) std::cerr << ' ' << p.scaffold_loop_id << "<-" << p.insert_loop_id;
      std::cerr << "\nspecs: " << r.spec_count << ", models: " << r.ranked.size()
                << ", failed: " << r.failed_specs << ", " << std::fixed << std::setprecision(1) << secs
                << " s\n";
      for (const auto& path : r.written) std::cout << path.string() << '\n';
      if (r.ranked.empty()) return 3;
    } else if (*serve) {
      Service service;
      HttpServer server(service);
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      const int bound = server.start(host, port);
      std::cerr << "listening on " << host << ':' << bound << '\n';
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      server.stop();
    }
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
