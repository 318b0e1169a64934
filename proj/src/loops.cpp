#include "loopgraft/loops.hpp"

#include "loopgraft/error.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace loopgraft {

std::string_view to_string(TriageState s) {
  switch (s) {
    case TriageState::Candidate: return "candidate";
    case TriageState::Preserved: return "preserved";
    case TriageState::Unsuitable: return "unsuitable";
  }
  return "preserved";
}

TriageState triage_from_string(std::string_view s) {
  if (s == "candidate") return TriageState::Candidate;
  if (s == "preserved") return TriageState::Preserved;
  if (s == "unsuitable") return TriageState::Unsuitable;
  fail(ErrorCode::BadRequest, "unknown triage state '" + std::string(s) + "'");
}

std::string loop_id(std::string_view pdb_id, char chain_id, int seq_num) {
  std::string out;
  for (char c : pdb_id) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  out += '_';
  out += chain_id == ' ' ? '_' : chain_id;
  out += '_';
  out += std::to_string(seq_num);
  return out;
}

namespace {

bool broken_between(const SSAssignment& a, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i <= to; ++i) {
    if (!a.has_ca[i]) return true;
    if (i > from && a.keys[i].seq_num - a.keys[i - 1].seq_num > 1) return true;
  }
  return false;
}

std::vector<Segment> periodic_segments(const SSAssignment& a) {
  std::vector<Segment> out;
  for (const auto& s : segments_of(a))
    if (is_periodic(s.ss_class)) out.push_back(s);
  return out;
}

}  // namespace

std::vector<Loop> extract_loops(const SSAssignment& assignment, std::string_view pdb_id) {
  const auto periodic = periodic_segments(assignment);
  if (periodic.size() < 2)
    fail(ErrorCode::TooFewSegments, "chain " + std::string(1, assignment.chain_id) + " has " +
                                         std::to_string(periodic.size()) +
                                         " periodic segments, need at least 2");
  std::vector<Loop> loops;
  for (std::size_t k = 0; k + 1 < periodic.size(); ++k) {
    const Segment& ss1 = periodic[k];
    const Segment& ss2 = periodic[k + 1];
    if (broken_between(assignment, ss1.end, ss2.start)) continue;
    Loop loop;
    loop.ss1 = ss1;
    loop.ss2 = ss2;
    loop.coil = Segment{SSClass::Coil, ss1.end + 1, ss2.start - 1};
    loop.id = loop_id(pdb_id, assignment.chain_id, assignment.keys[ss1.start].seq_num);
    loop.ordinal = static_cast<int>(loops.size()) + 1;
    loops.push_back(std::move(loop));
  }
  return loops;
}

Loop define_custom_loop(const SSAssignment& assignment, std::string_view pdb_id,
                        int start_seq, int end_seq) {
  if (start_seq > end_seq)
    fail(ErrorCode::InvertedRange, "custom loop range " + std::to_string(start_seq) + "-" +
                                       std::to_string(end_seq) + " is inverted");
  auto first = assignment.index_of(start_seq);
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment.keys[i].seq_num == end_seq) last = i;
  if (!first || !last)
    fail(ErrorCode::RangeOutOfChain, "custom loop range " + std::to_string(start_seq) + "-" +
                                         std::to_string(end_seq) + " is outside the chain");

  bool aperiodic = false;
  for (std::size_t i = *first; i <= *last; ++i)
    aperiodic = aperiodic || !is_periodic(assignment.classes[i]);
  if (!aperiodic)
    fail(ErrorCode::NoAperiodicContent, "range " + std::to_string(start_seq) + "-" +
                                            std::to_string(end_seq) +
                                            " contains only periodic residues");

  const auto periodic = periodic_segments(assignment);
  const Segment* ss1 = nullptr;
  const Segment* ss2 = nullptr;
  for (const auto& s : periodic) {
    if (s.start <= *first) ss1 = &s;
    if (!ss2 && s.end >= *last) ss2 = &s;
  }
  // ss1 must end before the first aperiodic residue of the range, ss2 start after the last.
  if (ss1 && ss1->end >= *last) ss1 = nullptr;
  if (ss2 && ss2->start <= *first) ss2 = nullptr;
  if (!ss1 || !ss2 || ss1 == ss2)
    fail(ErrorCode::RangeOutOfChain, "range " + std::to_string(start_seq) + "-" +
                                         std::to_string(end_seq) +
                                         " is not enclosed by two periodic segments");
  Loop loop;
  loop.ss1 = *ss1;
  loop.ss2 = *ss2;
  loop.coil = Segment{SSClass::Coil, ss1->end + 1, ss2->start - 1};
  loop.custom = true;
  loop.id = loop_id(pdb_id, assignment.chain_id, assignment.keys[ss1->start].seq_num) + "c";
  return loop;
}

std::optional<std::size_t> find_loop_covering(const std::vector<Loop>& loops,
                                              const SSAssignment& assignment,
                                              int first_seq, int last_seq) {
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t k = 0; k < loops.size(); ++k) {
    const auto& l = loops[k];
    const std::size_t lo = l.ss1.end;
    const std::size_t hi = l.ss2.start;
    std::size_t inter = 0;
    std::size_t in_range = 0;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      const int s = assignment.keys[i].seq_num;
      const bool r = s >= first_seq && s <= last_seq;
      const bool c = i >= lo && i <= hi;
      in_range += r;
      inter += r && c;
    }
    const double uni = static_cast<double>(in_range + (hi - lo + 1) - inter);
    const double score = uni > 0 ? static_cast<double>(inter) / uni : 0.0;
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  return best;
}

std::vector<std::size_t> loops_containing(const std::vector<Loop>& loops,
                                          const SSAssignment& assignment, int seq) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < loops.size(); ++k) {
    for (std::size_t i = loops[k].first_index(); i <= loops[k].last_index(); ++i) {
      if (assignment.keys[i].seq_num == seq) {
        out.push_back(k);
        break;
      }
    }
  }
  return out;
}

bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ei = i, ej = j;
      while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei]))) ++ei;
      while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej]))) ++ej;
      auto na = a.substr(i, ei - i);
      auto nb = b.substr(j, ej - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ei;
      j = ej;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

LoopList::LoopList(std::vector<Loop> loops) {
  for (auto& l : loops) add(std::move(l));
}

bool LoopList::contains(std::string_view id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.loop.id == id; });
}

const LoopList::Entry& LoopList::at(std::string_view id) const {
  for (const auto& e : entries_)
    if (e.loop.id == id) return e;
  fail(ErrorCode::UnknownLoop, "no loop '" + std::string(id) + "'");
}

LoopList::Entry& LoopList::at(std::string_view id) {
  return const_cast<Entry&>(std::as_const(*this).at(id));
}

void LoopList::add(Loop loop) {
  if (contains(loop.id)) fail(ErrorCode::BadRequest, "duplicate loop id '" + loop.id + "'");
  entries_.push_back(Entry{std::move(loop), TriageState::Preserved});
}

void LoopList::remove(std::string_view id) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const Entry& e) { return e.loop.id == id; });
  if (it == entries_.end()) fail(ErrorCode::UnknownLoop, "no loop '" + std::string(id) + "'");
  entries_.erase(it);
}

std::vector<const Loop*> LoopList::in_state(TriageState state) const {
  std::vector<const Loop*> out;
  for (const auto& e : entries_)
    if (e.state == state) out.push_back(&e.loop);
  return out;
}

std::vector<std::size_t> LoopList::order(LoopSortKey key,
                                         const std::map<std::string, double>* metric,
                                         bool descending) const {
  std::vector<std::size_t> idx(entries_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto pos_less = [&](std::size_t a, std::size_t b) {
    const auto& la = entries_[a].loop;
    const auto& lb = entries_[b].loop;
    if (la.first_index() != lb.first_index()) return la.first_index() < lb.first_index();
    return la.last_index() < lb.last_index();
  };
  switch (key) {
    case LoopSortKey::Position:
      std::stable_sort(idx.begin(), idx.end(), pos_less);
      break;
    case LoopSortKey::Id:
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return natural_less(entries_[a].loop.id, entries_[b].loop.id);
      });
      break;
    case LoopSortKey::Metric: {
      if (!metric) fail(ErrorCode::UnknownMetric, "metric sort without metric values");
      auto value = [&](std::size_t i) -> std::optional<double> {
        auto it = metric->find(entries_[i].loop.id);
        if (it == metric->end()) return std::nullopt;
        return it->second;
      };
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        auto va = value(a), vb = value(b);
        if (!va || !vb) return va.has_value() && !vb.has_value();
        return descending ? *va > *vb : *va < *vb;
      });
      break;
    }
  }
  return idx;
}

LoopList set_triage(LoopList list, std::string_view loop_id, TriageState state) {
  list.at(loop_id).state = state;
  return list;
}

}  // namespace loopgraft
