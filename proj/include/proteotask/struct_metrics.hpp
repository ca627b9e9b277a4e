#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "proteotask/errors.hpp"
#include "proteotask/geom.hpp"

namespace proteotask {

inline constexpr double kClashDist = 3.6574;
inline constexpr int kDihedralBins = 36;  // 10 degree bins over [-180, 180)
inline constexpr double kPeptideBondMax = 2.5;

enum class RegionTag { designed, context };

// Aligned residue lists for a reference/generated pair. Backbone triples
// (N, CA, C) are optional per residue and only needed for dihedral metrics.
struct StructurePair {
  std::vector<Vec3> ref_ca, gen_ca;
  std::vector<RegionTag> tags;
  std::vector<std::optional<std::array<Vec3, 3>>> ref_bb, gen_bb;
};

inline void validate_pair(const StructurePair& p) {
  if (p.ref_ca.size() != p.gen_ca.size() || p.ref_ca.size() != p.tags.size())
    fail(Errc::dim_mismatch, "aligned lists differ in length");
  if (!p.ref_bb.empty() && p.ref_bb.size() != p.ref_ca.size())
    fail(Errc::dim_mismatch, "reference backbone list length mismatch");
  if (!p.gen_bb.empty() && p.gen_bb.size() != p.gen_ca.size())
    fail(Errc::dim_mismatch, "generated backbone list length mismatch");
  auto finite = [](const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
  };
  for (const auto& v : p.ref_ca)
    if (!finite(v)) fail(Errc::config_error, "non-finite coordinate");
  for (const auto& v : p.gen_ca)
    if (!finite(v)) fail(Errc::config_error, "non-finite coordinate");
}

// ---------------------------------------------------------------------------
// Optimal proper superposition (Kabsch) and region RMSD.
// ---------------------------------------------------------------------------

struct RigidMotion {
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  Eigen::Vector3d shift = Eigen::Vector3d::Zero();

  Vec3 apply(const Vec3& v) const {
    Eigen::Vector3d r = rot * Eigen::Vector3d(v.x, v.y, v.z) + shift;
    return {r.x(), r.y(), r.z()};
  }
};

// Least-squares rotation+translation mapping mobile onto target, restricted
// to proper rotations (det +1, reflections rejected).
inline RigidMotion kabsch(const std::vector<Vec3>& mobile, const std::vector<Vec3>& target) {
  if (mobile.size() != target.size()) fail(Errc::dim_mismatch, "point lists differ in length");
  if (mobile.size() < 2) fail(Errc::too_few_points, "superposition needs at least 2 points");

  Eigen::Vector3d cm = Eigen::Vector3d::Zero(), ct = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < mobile.size(); ++i) {
    cm += Eigen::Vector3d(mobile[i].x, mobile[i].y, mobile[i].z);
    ct += Eigen::Vector3d(target[i].x, target[i].y, target[i].z);
  }
  cm /= static_cast<double>(mobile.size());
  ct /= static_cast<double>(target.size());

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < mobile.size(); ++i) {
    Eigen::Vector3d pm = Eigen::Vector3d(mobile[i].x, mobile[i].y, mobile[i].z) - cm;
    Eigen::Vector3d pt = Eigen::Vector3d(target[i].x, target[i].y, target[i].z) - ct;
    h += pm * pt.transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  double d = (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0;
  Eigen::Matrix3d flip = Eigen::Vector3d(1, 1, d).asDiagonal();

  RigidMotion rm;
  rm.rot = v * flip * u.transpose();
  rm.shift = ct - rm.rot * cm;
  return rm;
}

enum class AlignFrame { global, region };

// Superpose generated onto reference (all aligned residues or the region
// itself, by frame), then RMS over the region.
inline double rmsd_ca(const StructurePair& pair, const std::set<size_t>& region,
                      AlignFrame frame = AlignFrame::global) {
  validate_pair(pair);
  if (region.empty()) fail(Errc::empty_region, "rmsd region is empty");
  for (size_t i : region)
    if (i >= pair.ref_ca.size()) fail(Errc::out_of_range, "region index beyond aligned length");

  std::vector<Vec3> mob, tgt;
  if (frame == AlignFrame::global) {
    mob = pair.gen_ca;
    tgt = pair.ref_ca;
  } else {
    for (size_t i : region) {
      mob.push_back(pair.gen_ca[i]);
      tgt.push_back(pair.ref_ca[i]);
    }
  }
  RigidMotion rm = kabsch(mob, tgt);

  double sum = 0;
  for (size_t i : region) sum += dist2(rm.apply(pair.gen_ca[i]), pair.ref_ca[i]);
  return std::sqrt(sum / region.size());
}

// ---------------------------------------------------------------------------
// Clash fractions on the generated coordinates.
// ---------------------------------------------------------------------------

struct ClashCounts {
  double clash_in = 0;   // designed-designed pairs under the threshold
  double clash_out = 0;  // designed-context pairs under the threshold
  size_t pairs_in = 0;
  size_t pairs_out = 0;
};

// Sequence neighbors (|i-j| <= 1) are excluded from both denominators.
inline ClashCounts clash_counts(const StructurePair& pair) {
  validate_pair(pair);
  ClashCounts out;
  size_t in_hits = 0, out_hits = 0;
  const double thr2 = kClashDist * kClashDist;
  for (size_t i = 0; i < pair.gen_ca.size(); ++i) {
    if (pair.tags[i] != RegionTag::designed) continue;
    for (size_t j = 0; j < pair.gen_ca.size(); ++j) {
      if (j + 1 >= i && j <= i + 1) continue;  // skip self and sequence neighbors
      bool designed_j = pair.tags[j] == RegionTag::designed;
      if (designed_j && j < i) continue;  // count designed-designed once
      bool clash = dist2(pair.gen_ca[i], pair.gen_ca[j]) < thr2;
      if (designed_j) {
        ++out.pairs_in;
        if (clash) ++in_hits;
      } else {
        ++out.pairs_out;
        if (clash) ++out_hits;
      }
    }
  }
  out.clash_in = out.pairs_in ? static_cast<double>(in_hits) / out.pairs_in : 0.0;
  out.clash_out = out.pairs_out ? static_cast<double>(out_hits) / out.pairs_out : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Backbone dihedral histograms and Jensen-Shannon divergence.
// ---------------------------------------------------------------------------

struct DihedralSet {
  std::vector<double> phi, psi;
};

// Phi/psi over consecutive residues with complete backbones; a C->N distance
// above the peptide-bond cutoff is treated as a chain break.
inline DihedralSet collect_dihedrals(const std::vector<std::optional<std::array<Vec3, 3>>>& bb) {
  DihedralSet out;
  for (size_t i = 0; i + 1 < bb.size(); ++i) {
    if (!bb[i] || !bb[i + 1]) continue;
    const auto& a = *bb[i];
    const auto& b = *bb[i + 1];
    if (dist(a[2], b[0]) > kPeptideBondMax) continue;
    out.phi.push_back(dihedral_deg(a[2], b[0], b[1], b[2]));
    out.psi.push_back(dihedral_deg(a[0], a[1], a[2], b[0]));
  }
  return out;
}

inline std::array<double, kDihedralBins> dihedral_histogram(const std::vector<double>& angles) {
  std::array<double, kDihedralBins> h{};
  if (angles.empty()) return h;
  for (double a : angles) {
    int bin = static_cast<int>(std::floor((a + 180.0) / 10.0));
    if (bin >= kDihedralBins) bin = 0;  // +180 wraps onto -180
    if (bin < 0) bin = 0;
    h[static_cast<size_t>(bin)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(angles.size());
  return h;
}

// Base-2 JSD between two normalized histograms; 0 iff identical, 1 for
// disjoint support.
template <size_t N>
inline double jsd(const std::array<double, N>& p, const std::array<double, N>& q) {
  auto kl_to_mid = [&](const std::array<double, N>& x) {
    double s = 0;
    for (size_t i = 0; i < N; ++i) {
      if (x[i] <= 0) continue;
      double m = 0.5 * (p[i] + q[i]);
      s += x[i] * std::log2(x[i] / m);
    }
    return s;
  };
  return 0.5 * (kl_to_mid(p) + kl_to_mid(q));
}

inline double jsd_between(const DihedralSet& ref, const DihedralSet& gen) {
  if (ref.phi.empty() || gen.phi.empty())
    fail(Errc::insufficient_backbone, "need at least one dihedral on each side");
  double dphi = jsd(dihedral_histogram(ref.phi), dihedral_histogram(gen.phi));
  double dpsi = jsd(dihedral_histogram(ref.psi), dihedral_histogram(gen.psi));
  return 0.5 * (dphi + dpsi);
}

inline double jsd_backbone(const StructurePair& pair) {
  validate_pair(pair);
  if (pair.ref_bb.empty() || pair.gen_bb.empty())
    fail(Errc::insufficient_backbone, "backbone coordinates missing");
  return jsd_between(collect_dihedrals(pair.ref_bb), collect_dihedrals(pair.gen_bb));
}

}  // namespace proteotask
