#include "loopgraft/structure.hpp"

#include "loopgraft/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace loopgraft {

std::string to_string(const ResidueKey& key) {
  std::string out = std::to_string(key.seq_num);
  if (key.insertion_code != ' ') out += key.insertion_code;
  return out;
}

const Atom* Residue::find_atom(std::string_view atom_name) const {
  for (const auto& atom : atoms)
    if (atom.name == atom_name) return &atom;
  return nullptr;
}

std::optional<std::size_t> Chain::index_of(int seq_num) const {
  for (std::size_t i = 0; i < residues.size(); ++i)
    if (residues[i].key.seq_num == seq_num) return i;
  return std::nullopt;
}

std::optional<std::size_t> Chain::index_of(const ResidueKey& key) const {
  auto it = std::lower_bound(
      residues.begin(), residues.end(), key,
      [](const Residue& r, const ResidueKey& k) { return r.key < k; });
  if (it == residues.end() || it->key != key) return std::nullopt;
  return static_cast<std::size_t>(it - residues.begin());
}

const Chain& Structure::chain(char id) const {
  for (const auto& c : chains)
    if (c.id == id) return c;
  fail(ErrorCode::UnknownChain,
       "chain '" + std::string(1, id) + "' not present in " +
           (pdb_id.empty() ? std::string("structure") : pdb_id));
}

Chain& Structure::chain(char id) {
  return const_cast<Chain&>(std::as_const(*this).chain(id));
}

bool Structure::has_chain(char id) const {
  return std::any_of(chains.begin(), chains.end(),
                     [id](const Chain& c) { return c.id == id; });
}

std::vector<std::size_t> CaTrace::points_in(std::size_t first,
                                            std::size_t last) const {
  std::vector<std::size_t> out;
  auto lo = std::lower_bound(residue_index.begin(), residue_index.end(), first);
  for (auto it = lo; it != residue_index.end() && *it <= last; ++it)
    out.push_back(static_cast<std::size_t>(it - residue_index.begin()));
  return out;
}

std::optional<std::size_t> CaTrace::point_of(std::size_t chain_residue) const {
  auto it = std::lower_bound(residue_index.begin(), residue_index.end(),
                             chain_residue);
  if (it == residue_index.end() || *it != chain_residue) return std::nullopt;
  return static_cast<std::size_t>(it - residue_index.begin());
}

namespace {

std::string_view columns(std::string_view line, std::size_t first,
                         std::size_t last) {
  // 1-based inclusive column range, truncated at line end
  if (line.size() < first) return {};
  return line.substr(first - 1, std::min(last, line.size()) - (first - 1));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

bool is_water(std::string_view res_name) {
  return res_name == "HOH" || res_name == "WAT" || res_name == "DOD" ||
         res_name == "H2O";
}

std::string element_from_name(std::string_view name) {
  for (char c : name)
    if (std::isalpha(static_cast<unsigned char>(c)))
      return std::string(1, static_cast<char>(std::toupper(c)));
  return {};
}

struct PendingAtom {
  Atom atom;
  bool from_alt_loc = false;
};

}  // namespace

Structure parse_pdb(std::string_view text, StructureSource source) {
  Structure structure;
  structure.source = source;

  struct ChainBuild {
    char id;
    std::map<ResidueKey, Residue> residues;
    std::map<ResidueKey, std::vector<bool>> alt_flags;
  };
  std::vector<ChainBuild> chains;
  std::vector<std::size_t> malformed;
  std::string first_malformed;

  int models_seen = 0;
  bool done = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size() && !done) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }

    std::string_view record = trim(columns(line, 1, 6));
    if (record == "HEADER") {
      auto id = trim(columns(line, 63, 66));
      structure.pdb_id.clear();
      for (char c : id)
        structure.pdb_id += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      continue;
    }
    if (record == "MODEL") {
      if (++models_seen > 1) done = true;
      continue;
    }
    if (record == "ENDMDL") {
      done = true;
      continue;
    }
    if (record != "ATOM") continue;

    if (line.size() < 54) {
      malformed.push_back(line_no);
      if (first_malformed.empty()) first_malformed = "line shorter than 54 columns";
      continue;
    }
    std::string_view res_name = trim(columns(line, 18, 20));
    if (is_water(res_name)) continue;

    Atom atom;
    atom.name = std::string(trim(columns(line, 13, 16)));
    char alt_loc = line[16];
    char chain_id = line[21];
    ResidueKey key;
    key.insertion_code = line.size() >= 27 ? line[26] : ' ';
    double x = 0, y = 0, z = 0;
    bool ok = parse_number(columns(line, 23, 26), key.seq_num) &&
              parse_number(columns(line, 31, 38), x) &&
              parse_number(columns(line, 39, 46), y) &&
              parse_number(columns(line, 47, 54), z) && !atom.name.empty();
    if (ok) {
      atom.position = Vec3(x, y, z);
      auto occ = trim(columns(line, 55, 60));
      auto bf = trim(columns(line, 61, 66));
      if (!occ.empty()) ok = parse_number(occ, atom.occupancy);
      if (ok && !bf.empty()) ok = parse_number(bf, atom.b_factor);
      ok = ok && atom.position.allFinite() && std::isfinite(atom.b_factor) &&
           atom.b_factor >= 0.0 && atom.occupancy >= 0.0 && atom.occupancy <= 1.0;
    }
    if (!ok) {
      malformed.push_back(line_no);
      if (first_malformed.empty()) first_malformed = "unparsable field";
      continue;
    }
    auto element = trim(columns(line, 77, 78));
    atom.element = element.empty() ? element_from_name(atom.name)
                                   : std::string(element);
    for (auto& c : atom.element) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));

    auto cit = std::find_if(chains.begin(), chains.end(),
                            [chain_id](const ChainBuild& c) { return c.id == chain_id; });
    if (cit == chains.end()) {
      chains.push_back(ChainBuild{chain_id, {}, {}});
      cit = chains.end() - 1;
    }
    auto [rit, inserted] = cit->residues.try_emplace(key);
    Residue& residue = rit->second;
    auto& alt = cit->alt_flags[key];
    if (inserted) {
      residue.key = key;
      residue.name = std::string(res_name);
    }
    bool is_alt = alt_loc != ' ';
    auto existing = std::find_if(residue.atoms.begin(), residue.atoms.end(),
                                 [&](const Atom& a) { return a.name == atom.name; });
    if (existing == residue.atoms.end()) {
      residue.atoms.push_back(std::move(atom));
      alt.push_back(is_alt);
    } else {
      auto idx = static_cast<std::size_t>(existing - residue.atoms.begin());
      // strictly greater occupancy replaces; ties keep the first occurrence
      if (is_alt && alt[idx] && atom.occupancy > existing->occupancy)
        *existing = std::move(atom);
    }
  }

  if (!malformed.empty()) {
    std::ostringstream msg;
    msg << "malformed ATOM record (" << first_malformed << ") at line";
    if (malformed.size() > 1) msg << 's';
    for (std::size_t i = 0; i < malformed.size(); ++i)
      msg << (i ? ", " : " ") << malformed[i];
    fail(ErrorCode::MalformedRecord, msg.str());
  }

  for (auto& build : chains) {
    Chain chain;
    chain.id = build.id;
    chain.residues.reserve(build.residues.size());
    for (auto& [key, residue] : build.residues) chain.residues.push_back(std::move(residue));
    structure.chains.push_back(std::move(chain));
  }
  if (structure.chains.empty()) fail(ErrorCode::NoAtoms, "no parsable ATOM record");
  return structure;
}

std::string write_pdb(const Structure& structure) {
  std::string out;
  char buf[128];
  if (!structure.pdb_id.empty()) {
    std::string id = structure.pdb_id;
    for (auto& c : id) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    // id occupies columns 63-66
    std::snprintf(buf, sizeof buf, "HEADER%56s%-4.4s\n", "", id.c_str());
    out += buf;
  }
  int serial = 1;
  for (const auto& chain : structure.chains) {
    const Residue* last = nullptr;
    for (const auto& residue : chain.residues) {
      for (const auto& atom : residue.atoms) {
        std::string name = atom.name;
        if (name.size() < 4 && atom.element.size() <= 1) name = " " + name;
        std::snprintf(buf, sizeof buf,
                      "ATOM  %5d %-4.4s %3.3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f          %2.2s\n",
                      serial % 100000, name.c_str(), residue.name.c_str(), chain.id,
                      residue.key.seq_num, residue.key.insertion_code,
                      atom.position.x(), atom.position.y(), atom.position.z(),
                      atom.occupancy, atom.b_factor, atom.element.c_str());
        out += buf;
        ++serial;
      }
      last = &residue;
    }
    if (last) {
      std::snprintf(buf, sizeof buf, "TER   %5d      %3.3s %c%4d%c\n", serial % 100000,
                    last->name.c_str(), chain.id, last->key.seq_num,
                    last->key.insertion_code);
      out += buf;
      ++serial;
    }
  }
  out += "END\n";
  return out;
}

CaTrace ca_trace(const Structure& structure, char chain_id) {
  const Chain& chain = structure.chain(chain_id);
  CaTrace trace;
  trace.chain_id = chain_id;
  std::vector<Vec3> points;
  for (std::size_t i = 0; i < chain.residues.size(); ++i) {
    const Atom* ca = chain.residues[i].find_atom("CA");
    if (!ca) continue;
    points.push_back(ca->position);
    trace.residue_keys.push_back(chain.residues[i].key);
    trace.residue_index.push_back(i);
  }
  trace.positions.resize(3, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    trace.positions.col(static_cast<Eigen::Index>(i)) = points[i];
  return trace;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace loopgraft
