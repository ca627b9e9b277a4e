#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proteotask/cdr.hpp"
#include "proteotask/seq_metrics.hpp"
#include "proteotask/struct_metrics.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

// An aligned reference/generated pair plus the bookkeeping needed to slice
// metrics by CDR loop: per aligned residue its (chain, pos), identity on both
// sides, and the loop name when the residue is designed.
struct PairedResidues {
  StructurePair geometry;
  std::vector<ResidueRef> refs;
  std::string ref_seq, gen_seq;
  std::map<std::string, std::set<size_t>> loop_regions;  // aligned indices per loop
};

inline PairedResidues pair_structures(const Complex& ref, const Complex& gen,
                                      const CdrAnnotation& ann) {
  validate_annotation(ann, ref);
  PairedResidues out;
  for (const auto& rc : ref.chains) {
    const Chain* gc = gen.find_chain(rc.id);
    if (!gc) continue;
    std::map<int, const Residue*> gen_by_pos;
    for (const auto& r : gc->residues) gen_by_pos[r.pos] = &r;
    for (const auto& rr : rc.residues) {
      auto it = gen_by_pos.find(rr.pos);
      if (it == gen_by_pos.end()) continue;
      const Residue& gr = *it->second;
      const Atom* rca = rr.find_atom("CA");
      const Atom* gca = gr.find_atom("CA");
      if (!rca || !gca) continue;

      size_t idx = out.refs.size();
      out.refs.push_back({rc.id, rr.pos});
      out.ref_seq += rr.aa;
      out.gen_seq += gr.aa;
      out.geometry.ref_ca.push_back(rca->pos);
      out.geometry.gen_ca.push_back(gca->pos);
      const std::string* loop = ann.loop_name_at(rc.id, rr.pos);
      out.geometry.tags.push_back(loop ? RegionTag::designed : RegionTag::context);
      if (loop) out.loop_regions[*loop].insert(idx);

      auto backbone = [](const Residue& r) -> std::optional<std::array<Vec3, 3>> {
        const Atom* n = r.find_atom("N");
        const Atom* ca = r.find_atom("CA");
        const Atom* c = r.find_atom("C");
        if (!n || !ca || !c) return std::nullopt;
        return std::array<Vec3, 3>{n->pos, ca->pos, c->pos};
      };
      out.geometry.ref_bb.push_back(backbone(rr));
      out.geometry.gen_bb.push_back(backbone(gr));
    }
  }
  validate_pair(out.geometry);
  return out;
}

inline CdrPrediction ground_truth_prediction(const Complex& cx, const CdrAnnotation& ann) {
  validate_annotation(ann, cx);
  CdrPrediction gt;
  for (const auto& [name, loop] : ann.loops) {
    const Chain& chain = *cx.find_chain(loop.chain);
    std::string seq;
    for (int pos = loop.start; pos <= loop.end; ++pos) {
      gt.loop_indices[name].insert(pos);
      seq += chain.residues[static_cast<size_t>(pos - 1)].aa;
    }
    gt.loop_sequences[name] = seq;
  }
  return gt;
}

inline CdrPrediction prediction_from_json(const nlohmann::ordered_json& j) {
  CdrPrediction pred;
  try {
    if (j.contains("loops")) {
      for (const auto& [name, jl] : j.at("loops").items()) {
        if (jl.contains("indices"))
          for (const auto& v : jl.at("indices")) pred.loop_indices[name].insert(v.get<int>());
        if (jl.contains("sequence"))
          pred.loop_sequences[name] = jl.at("sequence").get<std::string>();
      }
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    fail(Errc::parse_error, std::string("bad prediction JSON: ") + e.what());
  }
  validate_prediction(pred);
  return pred;
}

// ---------------------------------------------------------------------------
// Per-pair evaluation report.
// ---------------------------------------------------------------------------

struct EvalOptions {
  std::optional<CdrPrediction> prediction;  // for detection metrics
  std::optional<double> if_aar;             // inverse-folding AAR, external
};

namespace detail {

inline nlohmann::ordered_json loop_metrics_json(const PairedResidues& pr,
                                                const std::set<size_t>& region) {
  nlohmann::ordered_json j;
  std::string ref_seq, gen_seq;
  for (size_t i : region) {
    ref_seq += pr.ref_seq[i];
    gen_seq += pr.gen_seq[i];
  }
  j["aar"] = aar(pr.gen_seq, pr.ref_seq, region);
  j["rmsd_global"] = rmsd_ca(pr.geometry, region, AlignFrame::global);
  try {
    j["rmsd_local"] = rmsd_ca(pr.geometry, region, AlignFrame::region);
  } catch (const Error&) {
    j["rmsd_local"] = nullptr;  // single-residue region cannot self-align
  }
  SequenceMetrics sm = sequence_metrics(gen_seq, ref_seq);
  j["emr"] = sm.emr;
  j["edit_sim"] = sm.edit_sim;
  j["lcs_norm"] = sm.lcs_norm;
  j["length_match"] = sm.length_match;
  ResidueMetrics rm = residue_metrics(gen_seq, ref_seq);
  j["pos_acc"] = rm.pos_acc;
  j["precision"] = rm.precision;
  j["recall"] = rm.recall;
  j["f1"] = rm.f1;
  j["blosum62_mean"] = rm.blosum62_mean;
  return j;
}

inline std::vector<std::optional<std::array<Vec3, 3>>> mask_to_region(
    const std::vector<std::optional<std::array<Vec3, 3>>>& bb, const std::vector<RegionTag>& tags) {
  std::vector<std::optional<std::array<Vec3, 3>>> out(bb.size());
  for (size_t i = 0; i < bb.size(); ++i)
    if (tags[i] == RegionTag::designed) out[i] = bb[i];
  return out;
}

}  // namespace detail

inline nlohmann::ordered_json evaluate_pair(const Complex& ref, const Complex& gen,
                                            const CdrAnnotation& ann,
                                            const EvalOptions& opt = {}) {
  PairedResidues pr = pair_structures(ref, gen, ann);
  nlohmann::ordered_json rep;
  rep["aligned_residues"] = pr.refs.size();

  nlohmann::ordered_json loops;
  std::set<size_t> all_cdr;
  for (const auto& name : kLoopOrder) {
    auto it = pr.loop_regions.find(name);
    if (it == pr.loop_regions.end()) continue;
    loops[name] = detail::loop_metrics_json(pr, it->second);
    all_cdr.insert(it->second.begin(), it->second.end());
  }
  rep["loops"] = std::move(loops);
  if (!all_cdr.empty()) rep["cdr"] = detail::loop_metrics_json(pr, all_cdr);

  ClashCounts cc = clash_counts(pr.geometry);
  rep["clash"] = {{"clash_in", cc.clash_in},
                  {"clash_out", cc.clash_out},
                  {"pairs_in", cc.pairs_in},
                  {"pairs_out", cc.pairs_out}};

  try {
    rep["jsd_bb_all"] = jsd_backbone(pr.geometry);
  } catch (const Error&) {
    rep["jsd_bb_all"] = nullptr;
  }
  try {
    StructurePair designed = pr.geometry;
    designed.ref_bb = detail::mask_to_region(pr.geometry.ref_bb, pr.geometry.tags);
    designed.gen_bb = detail::mask_to_region(pr.geometry.gen_bb, pr.geometry.tags);
    rep["jsd_bb_designed"] = jsd_backbone(designed);
  } catch (const Error&) {
    rep["jsd_bb_designed"] = nullptr;
  }

  if (opt.prediction) {
    DetectionMetrics dm = detection_metrics(*opt.prediction, ground_truth_prediction(ref, ann));
    rep["detection"] = {{"recall", dm.recall},
                        {"precision", dm.precision},
                        {"set_match", dm.set_match},
                        {"degenerate_precision", dm.degenerate_precision}};
  }

  if (opt.if_aar && !all_cdr.empty()) {
    double a = rep["cdr"]["aar"].get<double>();
    rep["if_aar"] = *opt.if_aar;
    rep["if_aar_delta"] = if_aar_delta(a, *opt.if_aar);
  }
  return rep;
}

// Mean of every numeric leaf across per-pair reports, walking matching paths.
inline void accumulate_numeric(const nlohmann::ordered_json& src, nlohmann::ordered_json& sums,
                               nlohmann::ordered_json& counts) {
  for (const auto& [key, value] : src.items()) {
    if (value.is_object()) {
      accumulate_numeric(value, sums[key], counts[key]);
    } else if (value.is_number()) {
      double s = sums.contains(key) && sums[key].is_number() ? sums[key].get<double>() : 0.0;
      double c = counts.contains(key) && counts[key].is_number() ? counts[key].get<double>() : 0.0;
      sums[key] = s + value.get<double>();
      counts[key] = c + 1;
    }
  }
}

inline nlohmann::ordered_json divide_sums(const nlohmann::ordered_json& sums,
                                          const nlohmann::ordered_json& counts) {
  nlohmann::ordered_json out;
  for (const auto& [key, value] : sums.items()) {
    if (value.is_object())
      out[key] = divide_sums(value, counts.at(key));
    else
      out[key] = value.get<double>() / counts.at(key).get<double>();
  }
  return out;
}

inline nlohmann::ordered_json aggregate_eval(const std::vector<nlohmann::ordered_json>& reports) {
  if (reports.empty()) fail(Errc::empty_results, "no evaluation reports to aggregate");
  nlohmann::ordered_json sums, counts;
  for (const auto& r : reports) accumulate_numeric(r, sums, counts);
  nlohmann::ordered_json out;
  out["pairs"] = reports.size();
  out["mean"] = divide_sums(sums, counts);
  return out;
}

inline std::string eval_report_text(const nlohmann::ordered_json& agg) {
  char buf[200];
  std::string out;
  const nlohmann::ordered_json& mean = agg.at("mean");
  std::snprintf(buf, sizeof buf, "%-6s %8s %12s %10s %10s %10s\n", "loop", "aar",
                "rmsd_global", "emr", "edit_sim", "lcs_norm");
  out += buf;
  out += std::string(62, '-') + "\n";
  auto row = [&](const std::string& name, const nlohmann::ordered_json& j) {
    auto num = [&](const char* key) {
      return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : 0.0;
    };
    std::snprintf(buf, sizeof buf, "%-6s %8.4f %12.4f %10.4f %10.4f %10.4f\n", name.c_str(),
                  num("aar"), num("rmsd_global"), num("emr"), num("edit_sim"), num("lcs_norm"));
    out += buf;
  };
  if (mean.contains("loops"))
    for (const auto& [name, j] : mean.at("loops").items()) row(name, j);
  if (mean.contains("cdr")) row("all", mean.at("cdr"));
  if (mean.contains("clash")) {
    std::snprintf(buf, sizeof buf, "\nclash_in %.6f  clash_out %.6f\n",
                  mean.at("clash").at("clash_in").get<double>(),
                  mean.at("clash").at("clash_out").get<double>());
    out += buf;
  }
  if (mean.contains("jsd_bb_all") && mean.at("jsd_bb_all").is_number()) {
    std::snprintf(buf, sizeof buf, "jsd_bb %.6f\n", mean.at("jsd_bb_all").get<double>());
    out += buf;
  }
  if (mean.contains("if_aar_delta")) {
    std::snprintf(buf, sizeof buf, "if_aar_delta %+.4f\n", mean.at("if_aar_delta").get<double>());
    out += buf;
  }
  return out;
}

}  // namespace proteotask
