#pragma once

#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "proteotask/geom.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

enum class Ss3 : char { H = 'H', E = 'E', C = 'C', NA = 'N' };

inline std::string ss3_token(Ss3 s) {
  switch (s) {
    case Ss3::H: return "H";
    case Ss3::E: return "E";
    case Ss3::C: return "C";
    case Ss3::NA: return "NA";
  }
  return "NA";
}

namespace detail {

struct BackboneRes {
  size_t chain = 0;
  int pos = 0;
  bool complete = false;   // N, CA, C, O all present
  bool has_n = false, has_ca = false, has_c = false, has_o = false;
  Vec3 n, ca, c, o, h;
  bool has_h = false;      // amide H placed from the previous peptide plane
  bool is_pro = false;
};

// Hydrogen-bond energy of donor NH(j) to acceptor CO(i), kcal/mol.
inline double hbond_energy(const BackboneRes& acc, const BackboneRes& don) {
  if (!don.has_h) return 0.0;
  double r_on = dist(acc.o, don.n);
  double r_ch = dist(acc.c, don.h);
  double r_oh = dist(acc.o, don.h);
  double r_cn = dist(acc.c, don.n);
  double dmin = std::min(std::min(r_on, r_ch), std::min(r_oh, r_cn));
  if (dmin < 0.5) return -9.9;
  return 27.888 * (1.0 / r_on + 1.0 / r_ch - 1.0 / r_oh - 1.0 / r_cn);
}

}  // namespace detail

// Three-state secondary structure per chain. Helix/strand patterns follow the
// classic hydrogen-bond rules (energy < -0.5 kcal/mol, two best partners per
// donor); eight-state classes reduce as H,G,I -> H and E,B -> E, rest coil.
// A residue is NA iff its backbone (N, CA, C, O) is incomplete.
inline std::vector<std::vector<Ss3>> compute_ss3(const Complex& cx) {
  using detail::BackboneRes;
  std::vector<BackboneRes> res;
  std::vector<std::vector<Ss3>> out(cx.chains.size());

  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    out[ci].assign(cx.chains[ci].residues.size(), Ss3::NA);
    for (const auto& r : cx.chains[ci].residues) {
      BackboneRes b;
      b.chain = ci;
      b.pos = r.pos;
      b.is_pro = r.name == "PRO";
      if (const Atom* a = r.find_atom("N")) b.n = a->pos, b.has_n = true;
      if (const Atom* a = r.find_atom("CA")) b.ca = a->pos, b.has_ca = true;
      if (const Atom* a = r.find_atom("C")) b.c = a->pos, b.has_c = true;
      if (const Atom* a = r.find_atom("O")) b.o = a->pos, b.has_o = true;
      b.complete = b.has_n && b.has_ca && b.has_c && b.has_o;
      res.push_back(b);
    }
  }
  size_t n = res.size();

  // Peptide continuity i -> i+1 (same chain, C-N distance sane).
  std::vector<bool> cont(n, false);
  for (size_t i = 0; i + 1 < n; ++i) {
    cont[i] = res[i].chain == res[i + 1].chain && res[i].has_c && res[i + 1].has_n &&
              dist(res[i].c, res[i + 1].n) < 2.5;
  }
  for (size_t i = 1; i < n; ++i) {
    if (cont[i - 1] && res[i].has_n && !res[i].is_pro && res[i - 1].has_c && res[i - 1].has_o) {
      res[i].h = res[i].n + (res[i - 1].c - res[i - 1].o).normalized();
      res[i].has_h = true;
    }
  }

  // hb[j] = best two acceptor indices for donor NH(j).
  struct Partner {
    int idx = -1;
    double e = 0.0;
  };
  std::vector<std::array<Partner, 2>> hb(n);
  for (size_t j = 0; j < n; ++j) {
    if (!res[j].has_h || !res[j].complete) continue;
    for (size_t i = 0; i < n; ++i) {
      if (i == j || !res[i].complete) continue;
      if (res[i].chain == res[j].chain && (i + 1 == j && cont[i])) continue;
      if (dist2(res[i].ca, res[j].ca) > 81.0) continue;
      double e = detail::hbond_energy(res[i], res[j]);
      if (e >= -0.5) continue;
      auto& best = hb[j];
      if (best[0].idx < 0 || e < best[0].e) {
        best[1] = best[0];
        best[0] = {static_cast<int>(i), e};
      } else if (best[1].idx < 0 || e < best[1].e) {
        best[1] = {static_cast<int>(i), e};
      }
    }
  }
  auto hbond = [&](long long i, long long j) {
    if (i < 0 || j < 0 || i >= static_cast<long long>(n) || j >= static_cast<long long>(n))
      return false;
    return hb[j][0].idx == i || hb[j][1].idx == i;
  };
  auto run = [&](long long a, long long b) {  // contiguous peptide from a to b
    if (a < 0 || b >= static_cast<long long>(n) || a > b) return false;
    for (long long k = a; k < b; ++k)
      if (!cont[k]) return false;
    return true;
  };

  auto turn = [&](long long i, int len) { return run(i, i + len) && hbond(i, i + len); };

  enum class S8 { none, H, G, I, E, B };
  std::vector<S8> s8(n, S8::none);

  std::vector<bool> helix4(n, false), helix3(n, false), helix5(n, false);
  for (long long i = 1; i < static_cast<long long>(n); ++i) {
    if (turn(i - 1, 4) && turn(i, 4))
      for (int k = 0; k < 4; ++k) helix4[i + k] = true;
    if (turn(i - 1, 3) && turn(i, 3))
      for (int k = 0; k < 3; ++k) helix3[i + k] = true;
    if (turn(i - 1, 5) && turn(i, 5))
      for (int k = 0; k < 5; ++k) helix5[i + k] = true;
  }

  std::set<std::pair<long long, long long>> bridges;  // antiparallel or parallel
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    for (long long j = i + 3; j < static_cast<long long>(n); ++j) {
      if (res[i].chain == res[j].chain && j - i < 3) continue;
      if (!res[i].complete || !res[j].complete) continue;
      if (dist2(res[i].ca, res[j].ca) > 49.0) continue;  // bridge CA spacing < 7 A
      bool para = (run(i - 1, i + 1) && hbond(i - 1, j) && hbond(j, i + 1)) ||
                  (run(j - 1, j + 1) && hbond(j - 1, i) && hbond(i, j + 1));
      bool anti = (hbond(i, j) && hbond(j, i)) ||
                  (run(i - 1, i + 1) && run(j - 1, j + 1) && hbond(i - 1, j + 1) &&
                   hbond(j - 1, i + 1));
      if (para || anti) bridges.insert({i, j});
    }
  }
  std::vector<bool> in_bridge(n, false), in_ladder(n, false);
  for (const auto& [i, j] : bridges) {
    in_bridge[i] = in_bridge[j] = true;
    bool extended = bridges.count({i + 1, j + 1}) || bridges.count({i - 1, j - 1}) ||
                    bridges.count({i + 1, j - 1}) || bridges.count({i - 1, j + 1});
    if (extended) in_ladder[i] = in_ladder[j] = true;
  }

  for (size_t i = 0; i < n; ++i) {
    if (helix4[i]) s8[i] = S8::H;
    else if (in_ladder[i]) s8[i] = S8::E;
    else if (in_bridge[i]) s8[i] = S8::B;
    else if (helix3[i]) s8[i] = S8::G;
    else if (helix5[i]) s8[i] = S8::I;
  }

  size_t flat = 0;
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    for (size_t ri = 0; ri < cx.chains[ci].residues.size(); ++ri, ++flat) {
      if (!res[flat].complete) continue;  // stays NA
      switch (s8[flat]) {
        case S8::H:
        case S8::G:
        case S8::I: out[ci][ri] = Ss3::H; break;
        case S8::E:
        case S8::B: out[ci][ri] = Ss3::E; break;
        default: out[ci][ri] = Ss3::C;
      }
    }
  }
  return out;
}

// Backbone dihedrals in degrees; NaN where undefined (chain ends, breaks,
// missing atoms).
struct PhiPsi {
  double phi = std::nan("");
  double psi = std::nan("");
};

inline std::vector<std::vector<PhiPsi>> compute_phi_psi(const Complex& cx) {
  std::vector<std::vector<PhiPsi>> out(cx.chains.size());
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    const auto& rs = cx.chains[ci].residues;
    out[ci].resize(rs.size());
    for (size_t i = 0; i < rs.size(); ++i) {
      const Atom* n = rs[i].find_atom("N");
      const Atom* ca = rs[i].find_atom("CA");
      const Atom* c = rs[i].find_atom("C");
      if (!n || !ca || !c) continue;
      if (i > 0) {
        const Atom* pc = rs[i - 1].find_atom("C");
        if (pc && dist(pc->pos, n->pos) < 2.5)
          out[ci][i].phi = dihedral_deg(pc->pos, n->pos, ca->pos, c->pos);
      }
      if (i + 1 < rs.size()) {
        const Atom* nn = rs[i + 1].find_atom("N");
        if (nn && dist(c->pos, nn->pos) < 2.5)
          out[ci][i].psi = dihedral_deg(n->pos, ca->pos, c->pos, nn->pos);
      }
    }
  }
  return out;
}

}  // namespace proteotask
