#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "proteotask/align.hpp"
#include "proteotask/errors.hpp"

namespace proteotask {

inline int edit_distance(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

inline int lcs_length(const std::string& a, const std::string& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[m];
}

struct SequenceMetrics {
  double emr = 0;           // exact-match rate for this pair, 0 or 1
  double edit_sim = 0;      // 1 - d_edit / max(|pred|, |gt|)
  double lcs_norm = 0;      // LCS / |gt|
  double length_match = 0;  // 0 or 1
};

inline SequenceMetrics sequence_metrics(const std::string& pred, const std::string& gt) {
  if (gt.empty()) fail(Errc::empty_ground_truth, "ground-truth sequence is empty");
  SequenceMetrics m;
  m.emr = pred == gt ? 1.0 : 0.0;
  m.edit_sim = 1.0 - static_cast<double>(edit_distance(pred, gt)) / std::max(pred.size(), gt.size());
  m.lcs_norm = static_cast<double>(lcs_length(pred, gt)) / gt.size();
  m.length_match = pred.size() == gt.size() ? 1.0 : 0.0;
  return m;
}

struct ResidueMetrics {
  double pos_acc = 0;       // identical columns / all alignment columns
  double precision = 0;     // identical columns / predicted residues
  double recall = 0;        // identical columns / ground-truth residues
  double f1 = 0;
  double blosum62_mean = 0; // mean substitution score over non-gap columns
};

inline ResidueMetrics residue_metrics(const std::string& pred, const std::string& gt) {
  if (gt.empty()) fail(Errc::empty_ground_truth, "ground-truth sequence is empty");
  ResidueMetrics m;
  Alignment aln = global_align(pred, gt);
  size_t columns = aln.a.size();
  size_t ident = 0, paired = 0;
  double blosum_sum = 0;
  for (size_t t = 0; t < columns; ++t) {
    if (aln.a[t] == '-' || aln.b[t] == '-') continue;
    ++paired;
    blosum_sum += blosum62(aln.a[t], aln.b[t]);
    if (aln.a[t] == aln.b[t]) ++ident;
  }
  m.pos_acc = columns ? static_cast<double>(ident) / columns : 1.0;
  m.precision = pred.empty() ? 0.0 : static_cast<double>(ident) / pred.size();
  m.recall = static_cast<double>(ident) / gt.size();
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.blosum62_mean = paired ? blosum_sum / paired : 0.0;
  return m;
}

// ---------------------------------------------------------------------------
// CDR detection: each loop is a set of within-chain residue indices plus
// (optionally) the sequence read off those positions.
// ---------------------------------------------------------------------------

struct CdrPrediction {
  std::map<std::string, std::set<int>> loop_indices;  // keyed by loop name
  std::map<std::string, std::string> loop_sequences;
};

inline void validate_prediction(const CdrPrediction& pred) {
  for (const auto& [name, seq] : pred.loop_sequences) {
    auto it = pred.loop_indices.find(name);
    if (it != pred.loop_indices.end() && seq.size() != it->second.size())
      fail(Errc::config_error, "loop " + name + " sequence length != index count");
  }
}

struct DetectionMetrics {
  double recall = 0;
  double precision = 0;
  double set_match = 0;
  bool degenerate_precision = false;  // some loop had an empty prediction
};

// Averaged over the ground-truth loops; a loop missing from the prediction
// counts as an empty set.
inline DetectionMetrics detection_metrics(const CdrPrediction& pred, const CdrPrediction& gt) {
  if (gt.loop_indices.empty()) fail(Errc::empty_ground_truth, "no ground-truth loops");
  validate_prediction(pred);
  DetectionMetrics out;
  size_t loops = 0;
  for (const auto& [name, gt_set] : gt.loop_indices) {
    if (gt_set.empty()) fail(Errc::empty_ground_truth, "loop " + name + " has no residues");
    static const std::set<int> none;
    auto it = pred.loop_indices.find(name);
    const std::set<int>& p = it == pred.loop_indices.end() ? none : it->second;
    std::vector<int> inter;
    std::set_intersection(p.begin(), p.end(), gt_set.begin(), gt_set.end(),
                          std::back_inserter(inter));
    out.recall += static_cast<double>(inter.size()) / gt_set.size();
    if (p.empty()) {
      out.degenerate_precision = true;  // precision undefined, reported as 0
    } else {
      out.precision += static_cast<double>(inter.size()) / p.size();
    }
    out.set_match += p == gt_set ? 1.0 : 0.0;
    ++loops;
  }
  out.recall /= loops;
  out.precision /= loops;
  out.set_match /= loops;
  return out;
}

// ---------------------------------------------------------------------------
// Amino-acid recovery over a region, and the inverse-folding consistency gap.
// ---------------------------------------------------------------------------

inline double aar(const std::string& pred, const std::string& gt, const std::set<size_t>& region) {
  if (region.empty()) fail(Errc::empty_region, "aar region is empty");
  size_t hit = 0;
  for (size_t i : region) {
    if (i >= pred.size() || i >= gt.size())
      fail(Errc::out_of_range, "region index beyond sequence length");
    if (pred[i] == gt[i]) ++hit;
  }
  return static_cast<double>(hit) / region.size();
}

inline double if_aar_delta(double aar_value, double if_aar_value) {
  return if_aar_value - aar_value;
}

}  // namespace proteotask
