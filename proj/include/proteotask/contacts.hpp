#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "proteotask/binning.hpp"
#include "proteotask/errors.hpp"
#include "proteotask/sasa.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

constexpr double kContactDist = 8.0;        // reference-atom contact rule
constexpr double kAtomContactDist = 5.0;    // heavy-atom interface rule
constexpr double kSaltBridgeDist = 4.0;
constexpr int kShortRangeSep = 6;           // |i-j| <= 6 is short-range
constexpr int kInteractionThreshold = 10;   // contacting residue pairs per chain pair

inline PairClass classify_pair(const ResidueRef& a, const ResidueRef& b) {
  if (a.chain != b.chain) return PairClass::cross_chain;
  return std::abs(a.pos - b.pos) <= kShortRangeSep ? PairClass::short_range : PairClass::long_range;
}

struct PairGeometry {
  double dist = 0.0;
  PairClass pair_class = PairClass::short_range;
  bool contact = false;
  std::string dist_bin;
};

inline PairGeometry pair_geometry(const Complex& cx, const ResidueRef& a, const ResidueRef& b) {
  auto ca = cx.residue_at(a).cbeta();
  auto cb = cx.residue_at(b).cbeta();
  if (!ca || !cb)
    fail(Errc::missing_reference_atom, "no reference atom for " + (ca ? b.chain : a.chain) +
                                           std::to_string((ca ? b : a).pos));
  PairGeometry g;
  g.dist = dist(*ca, *cb);
  g.pair_class = classify_pair(a, b);
  g.contact = g.dist < kContactDist;
  g.dist_bin = dist_bin_label(g.dist, g.pair_class);
  return g;
}

namespace detail {

struct RefPoint {
  Vec3 pos;
  size_t chain;
  int pos1;  // dense 1-based
};

inline std::vector<RefPoint> reference_points(const Complex& cx) {
  std::vector<RefPoint> pts;
  for (size_t ci = 0; ci < cx.chains.size(); ++ci)
    for (const auto& r : cx.chains[ci].residues)
      if (auto cb = r.cbeta()) pts.push_back({*cb, ci, r.pos});
  return pts;
}

}  // namespace detail

// All residue pairs in reference-atom contact (dist < 8 A), as index pairs
// into the complex. Symmetric pairs listed once, i < j in flat order.
inline std::vector<std::pair<ResidueRef, ResidueRef>> contacting_pairs(const Complex& cx) {
  auto pts = detail::reference_points(cx);
  std::vector<std::pair<ResidueRef, ResidueRef>> out;
  // Cell grid at the contact cutoff.
  std::map<std::array<int, 3>, std::vector<size_t>> grid;
  auto cell_of = [](const Vec3& p) {
    return std::array<int, 3>{static_cast<int>(std::floor(p.x / kContactDist)),
                              static_cast<int>(std::floor(p.y / kContactDist)),
                              static_cast<int>(std::floor(p.z / kContactDist))};
  };
  for (size_t i = 0; i < pts.size(); ++i) grid[cell_of(pts[i].pos)].push_back(i);
  for (size_t i = 0; i < pts.size(); ++i) {
    auto c = cell_of(pts[i].pos);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = grid.find({c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == grid.end()) continue;
          for (size_t j : it->second) {
            if (j <= i) continue;
            if (dist2(pts[i].pos, pts[j].pos) >= kContactDist * kContactDist) continue;
            out.push_back({{cx.chains[pts[i].chain].id, pts[i].pos1},
                           {cx.chains[pts[j].chain].id, pts[j].pos1}});
          }
        }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ChainPair {
  std::string chain_i, chain_j;  // chain_i < chain_j
  bool operator==(const ChainPair& o) const { return chain_i == o.chain_i && chain_j == o.chain_j; }
  bool operator<(const ChainPair& o) const {
    return chain_i != o.chain_i ? chain_i < o.chain_i : chain_j < o.chain_j;
  }
};

struct ChainPairGraph {
  std::map<ChainPair, int> pair_counts;   // contacting residue pairs, all chain pairs
  std::vector<ChainPair> interacting;     // count >= threshold, sorted
  std::optional<ChainPair> top;           // argmax count, lexicographic tie-break
};

inline ChainPairGraph chain_pair_graph(const Complex& cx, int threshold = kInteractionThreshold) {
  ChainPairGraph g;
  for (const auto& [a, b] : contacting_pairs(cx)) {
    if (a.chain == b.chain) continue;
    ChainPair p = a.chain < b.chain ? ChainPair{a.chain, b.chain} : ChainPair{b.chain, a.chain};
    g.pair_counts[p]++;
  }
  for (const auto& [p, n] : g.pair_counts)
    if (n >= threshold) g.interacting.push_back(p);
  int best = -1;
  for (size_t i = 0; i + 1 < cx.chains.size(); ++i)
    for (size_t j = i + 1; j < cx.chains.size(); ++j) {
      ChainPair p = cx.chains[i].id < cx.chains[j].id
                        ? ChainPair{cx.chains[i].id, cx.chains[j].id}
                        : ChainPair{cx.chains[j].id, cx.chains[i].id};
      auto it = g.pair_counts.find(p);
      int n = it == g.pair_counts.end() ? 0 : it->second;
      if (n > best || (n == best && g.top && p < *g.top)) {
        best = n;
        g.top = p;
      }
    }
  return g;
}

inline ChainPair top_chain_pair(const Complex& cx) {
  auto g = chain_pair_graph(cx);
  if (!g.top) fail(Errc::no_chain_pairs, "complex " + cx.id + " has a single chain");
  return *g.top;
}

namespace detail {

// Charged side-chain atoms: basic N (K/R/H) or carboxylate O (D/E).
inline std::vector<Vec3> charged_side_atoms(const Residue& r, bool basic) {
  static const std::map<char, std::vector<std::string>> basic_n = {
      {'K', {"NZ"}}, {'R', {"NE", "NH1", "NH2"}}, {'H', {"ND1", "NE2"}}};
  static const std::map<char, std::vector<std::string>> acidic_o = {
      {'D', {"OD1", "OD2"}}, {'E', {"OE1", "OE2"}}};
  const auto& table = basic ? basic_n : acidic_o;
  auto it = table.find(r.aa);
  std::vector<Vec3> out;
  if (it == table.end()) return out;
  for (const auto& name : it->second)
    if (const Atom* at = r.find_atom(name)) out.push_back(at->pos);
  return out;
}

}  // namespace detail

// True if some basic N of one residue sits within 4 A of an acidic O of the
// other, in either direction.
inline bool residues_salt_bridged(const Residue& a, const Residue& b) {
  auto check = [](const Residue& base, const Residue& acid) {
    auto ns = detail::charged_side_atoms(base, true);
    auto os = detail::charged_side_atoms(acid, false);
    for (const auto& n : ns)
      for (const auto& o : os)
        if (dist(n, o) < kSaltBridgeDist) return true;
    return false;
  };
  return check(a, b) || check(b, a);
}

// Salt bridges between two chains: basic side-chain N (K/R/H) within 4 A of a
// carboxylate O (D/E); one bridge per residue pair.
inline int salt_bridge_count(const Complex& cx, const std::string& chain_a,
                             const std::string& chain_b) {
  const Chain& a = cx.chain_or_fail(chain_a);
  const Chain& b = cx.chain_or_fail(chain_b);
  int count = 0;
  bool same = chain_a == chain_b;
  for (const auto& ra : a.residues) {
    for (const auto& rb : b.residues) {
      if (same && rb.pos <= ra.pos) continue;
      if (residues_salt_bridged(ra, rb)) ++count;
    }
  }
  return count;
}

inline std::string salt_bridge_bin(const Complex& cx, const std::string& chain_a,
                                   const std::string& chain_b) {
  return salt_bridge_bin_label(salt_bridge_count(cx, chain_a, chain_b));
}

struct InterfaceScore {
  int pos = 0;
  int atomic_contact_count = 0;
  double delta_sasa = 0.0;
};

struct InterfaceScores {
  ChainPair pair;
  std::vector<InterfaceScore> side_i;  // residues of pair.chain_i vs chain_j
  std::vector<InterfaceScore> side_j;
};

// Heavy-atom contact counts (< 5 A) per residue across one chain pair, plus
// the surface each residue buries when the partner chain is added. Burial is
// computed on the two-chain subcomplex so other chains do not interfere.
inline InterfaceScores interface_scores(const Complex& cx, const ChainPair& pair) {
  const Chain& a = cx.chain_or_fail(pair.chain_i);
  const Chain& b = cx.chain_or_fail(pair.chain_j);

  Complex sub;
  sub.id = cx.id;
  sub.source_format = cx.source_format;
  sub.chains = {a, b};
  auto bound = compute_asa_bound(sub);
  auto unbound = compute_asa_unbound(sub);

  InterfaceScores out;
  out.pair = pair;
  out.side_i.resize(a.residues.size());
  out.side_j.resize(b.residues.size());
  for (size_t ri = 0; ri < a.residues.size(); ++ri) {
    out.side_i[ri].pos = a.residues[ri].pos;
    out.side_i[ri].delta_sasa = unbound[0][ri] - bound[0][ri];
  }
  for (size_t rj = 0; rj < b.residues.size(); ++rj) {
    out.side_j[rj].pos = b.residues[rj].pos;
    out.side_j[rj].delta_sasa = unbound[1][rj] - bound[1][rj];
  }

  for (size_t ri = 0; ri < a.residues.size(); ++ri) {
    for (size_t rj = 0; rj < b.residues.size(); ++rj) {
      int pairs_within = 0;
      for (const auto& aa : a.residues[ri].atoms) {
        if (is_hydrogen(aa)) continue;
        for (const auto& ab : b.residues[rj].atoms) {
          if (is_hydrogen(ab)) continue;
          if (dist2(aa.pos, ab.pos) < kAtomContactDist * kAtomContactDist) ++pairs_within;
        }
      }
      out.side_i[ri].atomic_contact_count += pairs_within;
      out.side_j[rj].atomic_contact_count += pairs_within;
    }
  }
  return out;
}

enum class RankMode { interface, hotspot };

// Ranked interface positions for one side. Only residues with at least one
// cross-chain atomic contact qualify; the list may be shorter than k.
inline std::vector<int> rank_side(const std::vector<InterfaceScore>& side, int k, RankMode mode) {
  std::vector<const InterfaceScore*> qual;
  for (const auto& s : side)
    if (s.atomic_contact_count > 0) qual.push_back(&s);
  std::sort(qual.begin(), qual.end(), [&](const InterfaceScore* x, const InterfaceScore* y) {
    if (x->atomic_contact_count != y->atomic_contact_count)
      return x->atomic_contact_count > y->atomic_contact_count;
    if (mode == RankMode::hotspot && x->delta_sasa != y->delta_sasa)
      return x->delta_sasa > y->delta_sasa;
    return x->pos < y->pos;
  });
  std::vector<int> out;
  for (const auto* s : qual) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(s->pos);
  }
  return out;
}

}  // namespace proteotask
