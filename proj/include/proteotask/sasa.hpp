#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "proteotask/geom.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

constexpr double kSasaProbeRadius = 1.4;
constexpr int kSasaSamplePoints = 960;

inline double vdw_radius(const std::string& element) {
  if (element == "C") return 1.70;
  if (element == "N") return 1.55;
  if (element == "O") return 1.52;
  if (element == "S") return 1.80;
  if (element == "P") return 1.80;
  if (element == "SE") return 1.90;
  return 1.70;
}

// Theoretical maximum accessible surface per residue type (A^2), used for
// relative accessibility.
inline double max_asa(char aa) {
  switch (aa) {
    case 'A': return 129.0;
    case 'R': return 274.0;
    case 'N': return 195.0;
    case 'D': return 193.0;
    case 'C': return 167.0;
    case 'E': return 223.0;
    case 'Q': return 225.0;
    case 'G': return 104.0;
    case 'H': return 224.0;
    case 'I': return 197.0;
    case 'L': return 201.0;
    case 'K': return 236.0;
    case 'M': return 224.0;
    case 'F': return 240.0;
    case 'P': return 159.0;
    case 'S': return 155.0;
    case 'T': return 172.0;
    case 'W': return 285.0;
    case 'Y': return 263.0;
    case 'V': return 174.0;
    default: return 0.0;  // X: relative accessibility undefined
  }
}

enum class RsaBin : char { B = 'B', M = 'M', E = 'E', NA = 'N' };

inline std::string rsa_token(RsaBin b) {
  switch (b) {
    case RsaBin::B: return "B";
    case RsaBin::M: return "M";
    case RsaBin::E: return "E";
    case RsaBin::NA: return "NA";
  }
  return "NA";
}

inline RsaBin rsa_bin_from_rel(double rel) {
  if (rel < 0.10) return RsaBin::B;
  if (rel > 0.40) return RsaBin::E;
  return RsaBin::M;
}

namespace detail {

inline const std::vector<Vec3>& sphere_points() {
  static const std::vector<Vec3> pts = [] {
    std::vector<Vec3> p(kSasaSamplePoints);
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < kSasaSamplePoints; ++k) {
      double z = 1.0 - 2.0 * (k + 0.5) / kSasaSamplePoints;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double t = golden * k;
      p[k] = {r * std::cos(t), r * std::sin(t), z};
    }
    return p;
  }();
  return pts;
}

struct SasaAtom {
  Vec3 pos;
  double ext_r;  // vdw + probe
  size_t chain, residue;
};

// Shrake-Rupley over one atom set. Neighbors come from a uniform grid and are
// scanned nearest-first so buried sample points exit early.
inline std::vector<double> sample_asa(const std::vector<SasaAtom>& atoms) {
  const auto& unit = sphere_points();
  size_t n = atoms.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;

  double max_ext = 0.0;
  Vec3 lo = atoms[0].pos, hi = atoms[0].pos;
  for (const auto& a : atoms) {
    max_ext = std::max(max_ext, a.ext_r);
    lo = {std::min(lo.x, a.pos.x), std::min(lo.y, a.pos.y), std::min(lo.z, a.pos.z)};
    hi = {std::max(hi.x, a.pos.x), std::max(hi.y, a.pos.y), std::max(hi.z, a.pos.z)};
  }
  const double cell = 2.0 * max_ext;
  auto cell_of = [&](const Vec3& p) {
    return std::array<int, 3>{static_cast<int>((p.x - lo.x) / cell),
                              static_cast<int>((p.y - lo.y) / cell),
                              static_cast<int>((p.z - lo.z) / cell)};
  };
  std::unordered_map<uint64_t, std::vector<uint32_t>> grid;
  auto key = [](const std::array<int, 3>& c) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(c[0])) << 42) ^
           (static_cast<uint64_t>(static_cast<uint32_t>(c[1])) << 21) ^
           static_cast<uint64_t>(static_cast<uint32_t>(c[2]));
  };
  for (size_t i = 0; i < n; ++i) grid[key(cell_of(atoms[i].pos))].push_back(i);

  struct Neighbor {
    double d2;
    Vec3 pos;
    double ext_r2;
  };
  std::vector<Neighbor> nb;
  for (size_t i = 0; i < n; ++i) {
    const auto& ai = atoms[i];
    nb.clear();
    auto c = cell_of(ai.pos);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = grid.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == grid.end()) continue;
          for (uint32_t jj : it->second) {
            if (jj == i) continue;
            const auto& aj = atoms[jj];
            double cut = ai.ext_r + aj.ext_r;
            double d2 = dist2(ai.pos, aj.pos);
            if (d2 < cut * cut) nb.push_back({d2, aj.pos, aj.ext_r * aj.ext_r});
          }
        }
    std::sort(nb.begin(), nb.end(), [](const Neighbor& a, const Neighbor& b) { return a.d2 < b.d2; });

    int accessible = 0;
    for (const auto& u : unit) {
      Vec3 p = ai.pos + u * ai.ext_r;
      bool free_point = true;
      for (const auto& j : nb) {
        if (dist2(p, j.pos) < j.ext_r2) {
          free_point = false;
          break;
        }
      }
      accessible += free_point;
    }
    out[i] = 4.0 * M_PI * ai.ext_r * ai.ext_r * accessible / kSasaSamplePoints;
  }
  return out;
}

inline std::vector<SasaAtom> collect_heavy_atoms(const Complex& cx, int only_chain = -1) {
  std::vector<SasaAtom> atoms;
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    if (only_chain >= 0 && ci != static_cast<size_t>(only_chain)) continue;
    for (size_t ri = 0; ri < cx.chains[ci].residues.size(); ++ri)
      for (const auto& a : cx.chains[ci].residues[ri].atoms)
        if (!is_hydrogen(a))
          atoms.push_back({a.pos, vdw_radius(a.element) + kSasaProbeRadius, ci, ri});
  }
  return atoms;
}

inline std::vector<std::vector<double>> reduce_per_residue(const Complex& cx,
                                                           const std::vector<SasaAtom>& atoms,
                                                           const std::vector<double>& per_atom) {
  std::vector<std::vector<double>> out(cx.chains.size());
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) out[ci].assign(cx.chains[ci].residues.size(), 0.0);
  for (size_t i = 0; i < atoms.size(); ++i) out[atoms[i].chain][atoms[i].residue] += per_atom[i];
  return out;
}

}  // namespace detail

// Per-residue accessible surface of the full complex (bound state).
inline std::vector<std::vector<double>> compute_asa_bound(const Complex& cx) {
  auto atoms = detail::collect_heavy_atoms(cx);
  return detail::reduce_per_residue(cx, atoms, detail::sample_asa(atoms));
}

// Per-residue accessible surface of each chain in isolation.
inline std::vector<std::vector<double>> compute_asa_unbound(const Complex& cx) {
  std::vector<std::vector<double>> out(cx.chains.size());
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    auto atoms = detail::collect_heavy_atoms(cx, static_cast<int>(ci));
    out[ci] = detail::reduce_per_residue(cx, atoms, detail::sample_asa(atoms))[ci];
  }
  return out;
}

struct RsaLabels {
  std::vector<std::vector<double>> asa_bound;
  std::vector<std::vector<double>> asa_unbound;
  std::vector<std::vector<RsaBin>> bin;  // from bound-state relative accessibility
};

inline RsaLabels compute_rsa(const Complex& cx) {
  RsaLabels out;
  out.asa_bound = compute_asa_bound(cx);
  out.asa_unbound = compute_asa_unbound(cx);
  out.bin.resize(cx.chains.size());
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    const auto& rs = cx.chains[ci].residues;
    out.bin[ci].assign(rs.size(), RsaBin::NA);
    for (size_t ri = 0; ri < rs.size(); ++ri) {
      double mx = max_asa(rs[ri].aa);
      bool has_heavy = false;
      for (const auto& a : rs[ri].atoms)
        if (!is_hydrogen(a)) {
          has_heavy = true;
          break;
        }
      if (mx <= 0.0 || !has_heavy) continue;  // undefined -> NA
      out.bin[ci][ri] = rsa_bin_from_rel(out.asa_bound[ci][ri] / mx);
    }
  }
  return out;
}

}  // namespace proteotask
