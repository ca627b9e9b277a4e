#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "proteotask/cdr.hpp"
#include "proteotask/contacts.hpp"
#include "proteotask/errors.hpp"
#include "proteotask/labels.hpp"
#include "proteotask/rng.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

using Json = nlohmann::ordered_json;

enum class TaskType {
  alignment_schema_b1,
  alignment_schema_b2,
  alignment_caption_b1,
  alignment_caption_b2,
  residue_retrieval,
  dssp_seq,
  rsa_seq,
  pair_dist_bin,
  pair_contact_yn,
  pair_batch,
  saltbridge_bin,
  chainpair_graph,
  top_chainpair,
  interface_topk,
  hotspot_topk,
  lddt_bin,
  ab_cdr_redesign,
};

// Canonical order: Stage I variants, Stage II tasks, Stage III.
inline const std::vector<std::pair<TaskType, std::string>>& task_type_table() {
  static const std::vector<std::pair<TaskType, std::string>> table = {
      {TaskType::alignment_schema_b1, "ALIGNMENT_SCHEMA_B1_V2"},
      {TaskType::alignment_schema_b2, "ALIGNMENT_SCHEMA_B2_V2"},
      {TaskType::alignment_caption_b1, "ALIGNMENT_CAPTION_B1_V2"},
      {TaskType::alignment_caption_b2, "ALIGNMENT_CAPTION_B2_V2"},
      {TaskType::residue_retrieval, "RESIDUE_RETRIEVAL_V1"},
      {TaskType::dssp_seq, "DSSP_SEQ_V1"},
      {TaskType::rsa_seq, "RSA_SEQ_V1"},
      {TaskType::pair_dist_bin, "PAIR_DIST_BIN_V1"},
      {TaskType::pair_contact_yn, "PAIR_CONTACT_YN_V1"},
      {TaskType::pair_batch, "PAIR_BATCH_V1"},
      {TaskType::saltbridge_bin, "SALTBRIDGE_BIN_V1"},
      {TaskType::chainpair_graph, "CHAINPAIR_GRAPH_V1"},
      {TaskType::top_chainpair, "TOP_CHAINPAIR_V1"},
      {TaskType::interface_topk, "INTERFACE_TOPK_V1"},
      {TaskType::hotspot_topk, "HOTSPOT_TOPK_V1"},
      {TaskType::lddt_bin, "LDDT_BIN_V1"},
      {TaskType::ab_cdr_redesign, "AB_CDR_REDESIGN_SFT_V1"},
  };
  return table;
}

inline const std::string& task_type_name(TaskType t) {
  for (const auto& [type, name] : task_type_table())
    if (type == t) return name;
  fail(Errc::config_error, "unknown task type enumerator");
}

inline TaskType task_type_from_name(const std::string& name) {
  for (const auto& [type, n] : task_type_table())
    if (n == name) return type;
  fail(Errc::config_error, "unknown task type: " + name);
}

inline std::vector<TaskType> all_task_types() {
  std::vector<TaskType> out;
  for (const auto& [type, name] : task_type_table()) out.push_back(type);
  return out;
}

struct TaskInstance {
  std::string task_type;
  std::string structure_id;
  uint64_t seed = 0;
  Json prompt;
  Json target;
};

// Parsed complex plus every label the generators read. Interface scores are
// cached per chain pair because several task types query the same pair.
struct StructureContext {
  Complex complex;
  LabelSet labels;
  std::optional<CdrAnnotation> annotation;
  mutable std::map<ChainPair, InterfaceScores> iface_cache;

  const InterfaceScores& interface_for(const ChainPair& p) const {
    auto it = iface_cache.find(p);
    if (it == iface_cache.end()) it = iface_cache.emplace(p, interface_scores(complex, p)).first;
    return it->second;
  }
};

inline StructureContext make_context(Complex cx, std::optional<CdrAnnotation> ann = {}) {
  StructureContext ctx;
  if (ann) validate_annotation(*ann, cx);
  ctx.complex = std::move(cx);
  ctx.labels = compute_labels(ctx.complex);
  ctx.annotation = std::move(ann);
  return ctx;
}

namespace detail {

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string task_tag(TaskType t) { return "<TASK=" + task_type_name(t) + ">\n"; }

inline Json text_prompt(TaskType t, const std::string& body) {
  Json p;
  p["text"] = task_tag(t) + body;
  return p;
}

// ---- Stage I rendering ----

inline std::string length_phrase(const std::string& bin) {
  if (bin == ">800") return "more than 800 residues long";
  return "about " + bin + " residues long";
}

inline std::string length_phrase_short(const std::string& bin) {
  if (bin == ">800") return "more than 800 residues";
  return "about " + bin + " residues";
}

inline std::string dominance_phrase(const std::string& major) {
  if (major == "H") return "helix-dominant";
  if (major == "E") return "strand-dominant";
  if (major == "C") return "coil-dominant";
  return "mostly unresolved";
}

inline std::string run_phrase(const std::string& bin) {
  if (bin == "0") return "absent";
  if (bin == ">30") return "longer than 30 residues";
  return "about " + bin + " residues";
}

inline std::string chain_body_sentences(const ChainSummary& s) {
  std::string out = "its secondary structure is " + dominance_phrase(s.major_ss) +
                    ", with roughly " + s.fraction_bins.at('H') + "% helix, " +
                    s.fraction_bins.at('E') + "% strand, and " + s.fraction_bins.at('C') +
                    "% coil. The longest helix stretch is " + run_phrase(s.longest_run_bins.at('H')) +
                    ", while the longest strand stretch is " + run_phrase(s.longest_run_bins.at('E')) +
                    " and the longest coil stretch is " + run_phrase(s.longest_run_bins.at('C')) + ".";
  return out;
}

inline std::string caption_b1(const std::vector<ChainSummary>& summaries) {
  if (summaries.size() == 1) {
    const ChainSummary& s = summaries[0];
    std::string body = chain_body_sentences(s);
    body[0] = 'I';  // "its" -> "Its" at sentence start
    return "This structure has a single chain (Chain " + s.chain_id + "), " +
           length_phrase(s.length_bin) + ". " + body;
  }
  std::vector<std::string> ids;
  for (const auto& s : summaries) ids.push_back("Chain " + s.chain_id);
  std::string out = "This structure has " + std::to_string(summaries.size()) + " chains (" +
                    join(ids, ", ") + ").";
  for (const auto& s : summaries)
    out += "\nChain " + s.chain_id + " is " + length_phrase(s.length_bin) + "; " +
           chain_body_sentences(s);
  return out;
}

inline std::string caption_b2(const std::vector<ChainSummary>& summaries) {
  if (summaries.size() == 1) {
    const ChainSummary& s = summaries[0];
    return "Single-chain structure (Chain " + s.chain_id + "): " +
           length_phrase_short(s.length_bin) + ", " + dominance_phrase(s.major_ss) + ".";
  }
  std::vector<std::string> ids;
  for (const auto& s : summaries) ids.push_back("Chain " + s.chain_id);
  std::string out = std::to_string(summaries.size()) + "-chain assembly (" + join(ids, ", ") + ")";
  for (const auto& s : summaries)
    out += "; Chain " + s.chain_id + ": " + length_phrase_short(s.length_bin) + ", " +
           dominance_phrase(s.major_ss);
  return out + ".";
}

// ---- Stage II sampling ----

inline std::pair<size_t, size_t> flat_residue(Rng& rng, const Complex& cx) {
  size_t total = cx.total_residues();
  size_t k = rng.index(total);
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    size_t n = cx.chains[ci].residues.size();
    if (k < n) return {ci, k};
    k -= n;
  }
  return {cx.chains.size() - 1, cx.chains.back().residues.size() - 1};
}

constexpr int kWindowLen = 5;

struct Window {
  size_t chain = 0;
  int start = 1;  // canonical position of the first residue
};

// Uniform over all valid window starts; windows that are entirely NA are
// rejected and resampled.
template <typename LabelTokens>
inline Window sample_window(Rng& rng, const Complex& cx, LabelTokens has_label) {
  std::vector<std::pair<size_t, int>> spans;  // (chain index, start count)
  long long total = 0;
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    int n = static_cast<int>(cx.chains[ci].residues.size());
    if (n >= kWindowLen) {
      spans.push_back({ci, n - kWindowLen + 1});
      total += n - kWindowLen + 1;
    }
  }
  if (total == 0) fail(Errc::task_not_applicable, "no chain long enough for a window");

  auto pick = [&](long long flat) {
    for (const auto& [ci, count] : spans) {
      if (flat < count) return Window{ci, static_cast<int>(flat) + 1};
      flat -= count;
    }
    return Window{spans.back().first, 1};
  };
  auto usable = [&](const Window& w) {
    for (int k = 0; k < kWindowLen; ++k)
      if (has_label(w.chain, w.start - 1 + k)) return true;
    return false;
  };

  for (int attempt = 0; attempt < 64; ++attempt) {
    Window w = pick(static_cast<long long>(rng.below(static_cast<uint64_t>(total))));
    if (usable(w)) return w;
  }
  for (long long flat = 0; flat < total; ++flat) {
    Window w = pick(flat);
    if (usable(w)) return w;
  }
  fail(Errc::task_not_applicable, "every window is entirely unlabeled");
}

struct SampledPair {
  ResidueRef a, b;
  PairClass cls;
};

inline std::vector<PairClass> available_pair_classes(const Complex& cx) {
  std::vector<PairClass> out;
  bool short_ok = false, long_ok = false;
  for (const auto& ch : cx.chains) {
    if (ch.residues.size() >= 2) short_ok = true;
    if (ch.residues.size() >= static_cast<size_t>(kShortRangeSep + 2)) long_ok = true;
  }
  if (short_ok) out.push_back(PairClass::short_range);
  if (long_ok) out.push_back(PairClass::long_range);
  if (cx.chains.size() >= 2) out.push_back(PairClass::cross_chain);
  return out;
}

// One pair of the requested class with both reference atoms present.
inline std::optional<SampledPair> try_sample_pair(Rng& rng, const Complex& cx, PairClass cls) {
  const int sep_min = cls == PairClass::long_range ? kShortRangeSep + 1 : 1;
  for (int attempt = 0; attempt < 64; ++attempt) {
    SampledPair sp;
    sp.cls = cls;
    if (cls == PairClass::cross_chain) {
      if (cx.chains.size() < 2) return std::nullopt;
      size_t ci = rng.index(cx.chains.size());
      size_t cj = rng.index(cx.chains.size() - 1);
      if (cj >= ci) ++cj;
      if (ci > cj) std::swap(ci, cj);
      const Chain& a = cx.chains[ci];
      const Chain& b = cx.chains[cj];
      sp.a = {a.id, static_cast<int>(rng.index(a.residues.size())) + 1};
      sp.b = {b.id, static_cast<int>(rng.index(b.residues.size())) + 1};
    } else {
      std::vector<size_t> eligible;
      for (size_t ci = 0; ci < cx.chains.size(); ++ci)
        if (static_cast<int>(cx.chains[ci].residues.size()) >= sep_min + 1) eligible.push_back(ci);
      if (eligible.empty()) return std::nullopt;
      const Chain& ch = cx.chains[eligible[rng.index(eligible.size())]];
      int n = static_cast<int>(ch.residues.size());
      int i = static_cast<int>(rng.index(static_cast<size_t>(n - sep_min))) + 1;
      int max_sep = cls == PairClass::short_range ? std::min(kShortRangeSep, n - i) : n - i;
      if (max_sep < sep_min) continue;
      int sep = sep_min + static_cast<int>(rng.index(static_cast<size_t>(max_sep - sep_min + 1)));
      sp.a = {ch.id, i};
      sp.b = {ch.id, i + sep};
    }
    const Residue& ra = cx.residue_at(sp.a);
    const Residue& rb = cx.residue_at(sp.b);
    if (ra.cbeta() && rb.cbeta()) return sp;
  }
  return std::nullopt;
}

inline SampledPair sample_pair(Rng& rng, const Complex& cx) {
  auto classes = available_pair_classes(cx);
  if (classes.empty()) fail(Errc::task_not_applicable, "no residue pairs available");
  for (int attempt = 0; attempt < 64; ++attempt) {
    PairClass cls = classes[rng.index(classes.size())];
    if (auto sp = try_sample_pair(rng, cx, cls)) return *sp;
  }
  fail(Errc::task_not_applicable, "could not sample a residue pair with reference atoms");
}

inline Json ref_json(const ResidueRef& r) {
  Json j;
  j["chain"] = r.chain;
  j["pos"] = r.pos;
  return j;
}

inline long long pair_count_for_class(const Complex& cx, PairClass cls) {
  long long total = 0;
  if (cls == PairClass::cross_chain) {
    for (size_t i = 0; i < cx.chains.size(); ++i)
      for (size_t j = i + 1; j < cx.chains.size(); ++j)
        total += static_cast<long long>(cx.chains[i].residues.size()) *
                 static_cast<long long>(cx.chains[j].residues.size());
    return total;
  }
  for (const auto& ch : cx.chains) {
    long long n = static_cast<long long>(ch.residues.size());
    if (cls == PairClass::short_range) {
      for (int s = 1; s <= kShortRangeSep && s < n; ++s) total += n - s;
    } else if (n >= kShortRangeSep + 2) {
      long long m = n - (kShortRangeSep + 1);
      total += m * (m + 1) / 2;
    }
  }
  return total;
}

inline ChainPair require_top_pair(const StructureContext& ctx) {
  if (!ctx.labels.graph.top)
    fail(Errc::task_not_applicable, "structure has fewer than two chains");
  return *ctx.labels.graph.top;
}

inline std::string pair_prompt_prefix(const StructureContext& ctx) {
  bool antibody = ctx.annotation && !ctx.annotation->loops.empty();
  return antibody ? "For the antibody-antigen chain pair (" : "For the chain pair (";
}

// ---- Stage III helpers ----

inline bool chain_in(const std::set<std::string>& s, const std::string& id) {
  return s.find(id) != s.end();
}

// Heavy-atom pairs closer than 5 A between one residue and every residue of
// the selected chains.
inline int residue_heavy_contacts(const Complex& cx, const ResidueRef& ref,
                                  const std::set<std::string>& target_chains) {
  const Residue& r = cx.residue_at(ref);
  int count = 0;
  for (const auto& ch : cx.chains) {
    if (!chain_in(target_chains, ch.id)) continue;
    for (const auto& other : ch.residues) {
      for (const auto& a : r.atoms) {
        if (is_hydrogen(a)) continue;
        for (const auto& b : other.atoms) {
          if (is_hydrogen(b)) continue;
          if (dist(a.pos, b.pos) < kAtomContactDist) ++count;
        }
      }
    }
  }
  return count;
}

inline bool residue_has_polar_contact(const Complex& cx, const ResidueRef& ref,
                                      const std::set<std::string>& target_chains) {
  const Residue& r = cx.residue_at(ref);
  auto polar = [](const Atom& a) { return a.element == "N" || a.element == "O"; };
  for (const auto& ch : cx.chains) {
    if (!chain_in(target_chains, ch.id)) continue;
    for (const auto& other : ch.residues)
      for (const auto& a : r.atoms) {
        if (!polar(a)) continue;
        for (const auto& b : other.atoms)
          if (polar(b) && dist(a.pos, b.pos) < 3.5) return true;
      }
  }
  return false;
}

inline bool residue_has_salt_bridge(const Complex& cx, const ResidueRef& ref,
                                    const std::set<std::string>& target_chains) {
  const Residue& r = cx.residue_at(ref);
  for (const auto& ch : cx.chains) {
    if (!chain_in(target_chains, ch.id)) continue;
    for (const auto& other : ch.residues)
      if (residues_salt_bridged(r, other)) return true;
  }
  return false;
}

inline int residue_charge(char aa) {
  if (aa == 'K' || aa == 'R' || aa == 'H') return 1;
  if (aa == 'D' || aa == 'E') return -1;
  return 0;
}

inline std::string rsa_label_word(RsaBin b) {
  switch (b) {
    case RsaBin::B: return "Buried";
    case RsaBin::M: return "Mid";
    case RsaBin::E: return "Exposed";
    default: return "NA";
  }
}

inline std::string loop_tag(const std::string& loop) {
  // H1 -> HCDR1, L3 -> LCDR3
  return std::string(1, loop[0]) + "CDR" + loop.substr(1);
}

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage I: schema completion and captioning over per-chain summaries.
// ---------------------------------------------------------------------------

inline TaskInstance gen_stage1(const StructureContext& ctx, TaskType variant, uint64_t seed) {
  const auto& summaries = ctx.labels.chain_summaries;
  TaskInstance inst;
  inst.task_type = task_type_name(variant);
  inst.structure_id = ctx.complex.id;
  inst.seed = seed;

  switch (variant) {
    case TaskType::alignment_schema_b1: {
      inst.prompt = detail::text_prompt(variant, "Return the schema for this structure in JSON format.");
      Json t;
      t["task_type"] = inst.task_type;
      t["global"] = Json{{"num_chains", summaries.size()}};
      Json chains = Json::array();
      for (const auto& s : summaries) chains.push_back(chain_summary_to_json(s));
      t["chains"] = std::move(chains);
      inst.target = std::move(t);
      break;
    }
    case TaskType::alignment_schema_b2: {
      inst.prompt = detail::text_prompt(
          variant, "Return the compact chain-profile schema for this structure in JSON format.");
      Json t;
      t["task_type"] = inst.task_type;
      t["num_chains"] = summaries.size();
      Json profile;
      for (const auto& s : summaries)
        profile[s.chain_id] = Json{{"length_bin", s.length_bin},
                                   {"major_secondary_structure", s.major_ss}};
      t["chain_profile"] = std::move(profile);
      inst.target = std::move(t);
      break;
    }
    case TaskType::alignment_caption_b1:
      inst.prompt = detail::text_prompt(variant, "Return the alignment caption for this structure.");
      inst.target = detail::caption_b1(summaries);
      break;
    case TaskType::alignment_caption_b2:
      inst.prompt = detail::text_prompt(variant, "Return a compact alignment caption for this structure.");
      inst.target = detail::caption_b2(summaries);
      break;
    default:
      fail(Errc::config_error, "gen_stage1 called with a non-alignment task type");
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Stage II: meta-tasks over residues, pairs, chains, and interfaces.
// ---------------------------------------------------------------------------

inline TaskInstance gen_stage2(const StructureContext& ctx, TaskType type, uint64_t seed) {
  const Complex& cx = ctx.complex;
  Rng rng(seed);
  TaskInstance inst;
  inst.task_type = task_type_name(type);
  inst.structure_id = cx.id;
  inst.seed = seed;

  switch (type) {
    case TaskType::residue_retrieval: {
      auto [ci, ri] = detail::flat_residue(rng, cx);
      const Chain& ch = cx.chains[ci];
      const Residue& r = ch.residues[ri];
      inst.prompt = detail::text_prompt(
          type, "What is the amino-acid type at residue (chain " + ch.id + ", position " +
                    std::to_string(r.pos) +
                    ")? Choose one option: {A,C,D,E,F,G,H,I,K,L,M,N,P,Q,R,S,T,V,W,Y,X}.");
      inst.target = Json{{"aa", std::string(1, r.aa)}};
      break;
    }
    case TaskType::dssp_seq: {
      auto w = detail::sample_window(rng, cx, [&](size_t ci, int idx) {
        return ctx.labels.ss3[ci][idx] != Ss3::NA;
      });
      const Chain& ch = cx.chains[w.chain];
      inst.prompt = detail::text_prompt(
          type, "What are the secondary-structure labels for chain " + ch.id + " residues " +
                    std::to_string(w.start) + " through " +
                    std::to_string(w.start + detail::kWindowLen - 1) +
                    " (inclusive)? Output a 5-character string using {H,E,C,NA}.");
      std::string labels;
      for (int k = 0; k < detail::kWindowLen; ++k)
        labels += ss3_token(ctx.labels.ss3[w.chain][w.start - 1 + k]);
      inst.target = Json{{"labels", labels}};
      break;
    }
    case TaskType::rsa_seq: {
      auto w = detail::sample_window(rng, cx, [&](size_t ci, int idx) {
        return ctx.labels.rsa.bin[ci][idx] != RsaBin::NA;
      });
      const Chain& ch = cx.chains[w.chain];
      inst.prompt = detail::text_prompt(
          type, "What are the solvent-accessibility bins for chain " + ch.id + " residues " +
                    std::to_string(w.start) + " through " +
                    std::to_string(w.start + detail::kWindowLen - 1) +
                    " (inclusive)? Output a 5-character string using {B,M,E,NA}.");
      std::string labels;
      for (int k = 0; k < detail::kWindowLen; ++k)
        labels += rsa_token(ctx.labels.rsa.bin[w.chain][w.start - 1 + k]);
      inst.target = Json{{"labels", labels}};
      break;
    }
    case TaskType::pair_dist_bin: {
      auto sp = detail::sample_pair(rng, cx);
      PairGeometry g = pair_geometry(cx, sp.a, sp.b);
      inst.prompt = detail::text_prompt(
          type, "What is the distance bin between residue (chain " + sp.a.chain + ", position " +
                    std::to_string(sp.a.pos) + ") and residue (chain " + sp.b.chain +
                    ", position " + std::to_string(sp.b.pos) + ")? Pair class: " +
                    pair_class_name(g.pair_class) + ". Choose one option: {" +
                    detail::join(dist_bin_labels(g.pair_class), ", ") + "}.");
      inst.target = Json{{"dist_bin", g.dist_bin}};
      break;
    }
    case TaskType::pair_contact_yn: {
      bool want_contact = rng.coin();
      detail::SampledPair sp = detail::sample_pair(rng, cx);
      PairGeometry g = pair_geometry(cx, sp.a, sp.b);
      for (int attempt = 0; attempt < 64 && g.contact != want_contact; ++attempt) {
        sp = detail::sample_pair(rng, cx);
        g = pair_geometry(cx, sp.a, sp.b);
      }
      inst.prompt = detail::text_prompt(
          type, "Are residue (chain " + sp.a.chain + ", position " + std::to_string(sp.a.pos) +
                    ") and residue (chain " + sp.b.chain + ", position " +
                    std::to_string(sp.b.pos) +
                    ") in contact under the <8.0A Cbeta (Calpha for Gly) rule? "
                    "Choose one option: {Contact, NotContact}.");
      inst.target = Json{{"choice", g.contact ? "Contact" : "NotContact"}};
      break;
    }
    case TaskType::pair_batch: {
      constexpr int kBatch = 30;
      const std::vector<PairClass> order = {PairClass::short_range, PairClass::long_range,
                                            PairClass::cross_chain};
      std::map<PairClass, long long> avail;
      long long total_avail = 0;
      for (PairClass c : order) {
        avail[c] = detail::pair_count_for_class(cx, c);
        total_avail += avail[c];
      }
      if (total_avail < kBatch)
        fail(Errc::task_not_applicable, "fewer than 30 distinct residue pairs");

      std::map<PairClass, int> quota = {{PairClass::short_range, 15},
                                        {PairClass::long_range, 8},
                                        {PairClass::cross_chain, 7}};
      int assigned = 0;
      for (PairClass c : order) {
        quota[c] = static_cast<int>(std::min<long long>(quota[c], avail[c]));
        assigned += quota[c];
      }
      for (PairClass c : order) {
        if (assigned >= kBatch) break;
        int room = static_cast<int>(std::min<long long>(avail[c] - quota[c], kBatch - assigned));
        quota[c] += room;
        assigned += room;
      }

      std::set<std::pair<ResidueRef, ResidueRef>> seen;
      std::vector<detail::SampledPair> picked;
      for (PairClass c : order) {
        int got = 0;
        for (int attempt = 0; attempt < 20000 && got < quota[c]; ++attempt) {
          auto sp = detail::try_sample_pair(rng, cx, c);
          if (!sp) break;
          auto key = std::minmax(sp->a, sp->b);
          if (!seen.insert({key.first, key.second}).second) continue;
          picked.push_back(*sp);
          ++got;
        }
      }
      if (static_cast<int>(picked.size()) < kBatch)
        fail(Errc::task_not_applicable, "could not assemble 30 distinct pairs");

      Json in_pairs = Json::array();
      Json out_pairs = Json::array();
      for (size_t k = 0; k < picked.size(); ++k) {
        std::string pid = "p" + std::to_string(k + 1);
        Json q;
        q["pair_id"] = pid;
        q["i"] = detail::ref_json(picked[k].a);
        q["j"] = detail::ref_json(picked[k].b);
        in_pairs.push_back(std::move(q));
        PairGeometry g = pair_geometry(cx, picked[k].a, picked[k].b);
        out_pairs.push_back(Json{{"pair_id", pid}, {"dist_bin", g.dist_bin}});
      }
      inst.prompt = detail::text_prompt(
          type,
          "For each residue pair below, what is the distance bin (using the bin set for its "
          "pair class)? Return JSON only.");
      inst.prompt["pairs"] = std::move(in_pairs);
      inst.target = Json{{"pairs", std::move(out_pairs)}};
      break;
    }
    case TaskType::saltbridge_bin: {
      ChainPair top = detail::require_top_pair(ctx);
      inst.prompt = detail::text_prompt(
          type, "For the chain pair (" + top.chain_i + "," + top.chain_j +
                    "), what is the salt-bridge count bin under the dataset generator's "
                    "salt-bridge rule? Choose one option: {" +
                    detail::join(salt_bridge_bin_labels(), ", ") + "}.");
      inst.target = Json{{"salt_bridge_bin", salt_bridge_bin(cx, top.chain_i, top.chain_j)}};
      break;
    }
    case TaskType::chainpair_graph: {
      if (cx.chains.size() < 2)
        fail(Errc::task_not_applicable, "structure has fewer than two chains");
      inst.prompt = detail::text_prompt(
          type,
          "Which chain pairs are interacting in this complex under the strength threshold used "
          "by the dataset generator? Return JSON only.");
      Json pairs = Json::array();
      for (const auto& p : ctx.labels.graph.interacting)
        pairs.push_back(Json{{"chain_i", p.chain_i}, {"chain_j", p.chain_j}});
      inst.target = Json{{"pairs", std::move(pairs)}};
      break;
    }
    case TaskType::top_chainpair: {
      ChainPair top = detail::require_top_pair(ctx);
      inst.prompt = detail::text_prompt(
          type,
          "Which chain pair has the strongest interaction in this complex under the dataset "
          "generator's contact-strength rule? Return JSON only.");
      inst.target =
          Json{{"top_chain_pair", Json{{"chain_i", top.chain_i}, {"chain_j", top.chain_j}}}};
      break;
    }
    case TaskType::interface_topk:
    case TaskType::hotspot_topk: {
      ChainPair top = detail::require_top_pair(ctx);
      const InterfaceScores& scores = ctx.interface_for(top);
      bool hotspot = type == TaskType::hotspot_topk;
      int k = hotspot ? 5 : 10;
      RankMode mode = hotspot ? RankMode::hotspot : RankMode::interface;
      std::string what = hotspot
                             ? "), which residues are the top-5 hotspots on each chain under the "
                               "dataset generator's hotspot proxy rule? Return JSON only."
                             : "), which residues form the top-10 interface on each chain under "
                               "the dataset generator's interface rule? Return JSON only.";
      inst.prompt = detail::text_prompt(
          type, detail::pair_prompt_prefix(ctx) + top.chain_i + "," + top.chain_j + what);
      Json t;
      t["chain_pair"] = Json{{"chain_i", top.chain_i}, {"chain_j", top.chain_j}};
      t["topk"] = k;
      t[top.chain_i] = rank_side(scores.side_i, k, mode);
      t[top.chain_j] = rank_side(scores.side_j, k, mode);
      inst.target = std::move(t);
      break;
    }
    case TaskType::lddt_bin: {
      if (!ctx.annotation || !ctx.annotation->lddt)
        fail(Errc::task_not_applicable, "no lDDT metadata for this structure");
      inst.prompt = detail::text_prompt(
          type, "Predict the CDR LDDT score bin for this antibody structure. Choose one option: {" +
                    detail::join(lddt_bin_labels(), ", ") + "}.");
      inst.target = Json{{"lddt_bin", lddt_bin_label(*ctx.annotation->lddt)}};
      break;
    }
    default:
      fail(Errc::config_error, "gen_stage2 called with a non-stage-II task type");
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Stage III: CDR redesign records with a structured reasoning block.
// ---------------------------------------------------------------------------

inline TaskInstance gen_stage3(const StructureContext& ctx, uint64_t seed) {
  if (!ctx.annotation || ctx.annotation->loops.empty())
    fail(Errc::missing_annotation, "CDR redesign requires loop annotations");
  const Complex& cx = ctx.complex;
  const CdrAnnotation& ann = *ctx.annotation;
  std::set<std::string> ab_chains = ann.antibody_chains();
  std::set<std::string> ag_chains;
  for (const auto& ch : cx.chains)
    if (!detail::chain_in(ab_chains, ch.id)) ag_chains.insert(ch.id);

  TaskInstance inst;
  inst.task_type = task_type_name(TaskType::ab_cdr_redesign);
  inst.structure_id = cx.id;
  inst.seed = seed;

  std::string points_text;
  Json points = Json::array();
  for (const auto& h : ann.hotspots) {
    if (!points_text.empty()) points_text += ", ";
    points_text += "[" + h.chain + "," + std::to_string(h.pos) + "]";
    points.push_back(Json{{"ag_chain", h.chain}, {"ag_pos", h.pos}});
  }
  if (points_text.empty()) points_text = "none";
  inst.prompt = detail::text_prompt(
      TaskType::ab_cdr_redesign,
      "You are redesigning masked CDR regions of an antibody to improve binding to the "
      "antigen.\nDesign points (antigen hotspots): " +
          points_text + ".\nOutput JSON with keys: task, thinking, answer.");
  inst.prompt["design_points"] = points;

  Json thinking;
  thinking["design_points"] = points;

  Json where = Json::array();
  Json shape = Json::array();
  Json chem = Json::array();
  Json binder = Json::array();
  for (const auto& h : ann.hotspots) {
    int contacts = detail::residue_heavy_contacts(cx, h, ab_chains);
    size_t ci = 0, ri = 0;
    for (size_t c = 0; c < cx.chains.size(); ++c)
      if (cx.chains[c].id == h.chain) {
        ci = c;
        ri = static_cast<size_t>(h.pos - 1);
      }
    double delta = ctx.labels.rsa.asa_unbound[ci][ri] - ctx.labels.rsa.asa_bound[ci][ri];
    where.push_back(Json{{"ag_chain", h.chain},
                         {"ag_pos", h.pos},
                         {"atomic_contact_count", contacts},
                         {"delta_sasa_A2", detail::round2(delta)},
                         {"is_hotspot", contacts >= 1}});
    shape.push_back(Json{{"ag_chain", h.chain},
                         {"ag_pos", h.pos},
                         {"rsa_label", detail::rsa_label_word(ctx.labels.rsa.bin[ci][ri])}});

    const Residue& res = cx.residue_at(h);
    Json itypes = Json::array();
    if (contacts >= 1) itypes.push_back("Van der Waals");
    if (detail::residue_has_polar_contact(cx, h, ab_chains)) itypes.push_back("Hydrogen bond");
    if (detail::residue_has_salt_bridge(cx, h, ab_chains)) itypes.push_back("Salt bridge");
    chem.push_back(Json{{"ag_chain", h.chain},
                        {"ag_pos", h.pos},
                        {"ag_res", std::string(1, res.aa)},
                        {"ag_charge", detail::residue_charge(res.aa)},
                        {"interaction_types", std::move(itypes)}});

    Json contacts_list = Json::array();
    for (const auto& ch : cx.chains) {
      if (!detail::chain_in(ab_chains, ch.id)) continue;
      for (const auto& r : ch.residues) {
        const std::string* loop = ann.loop_name_at(ch.id, r.pos);
        if (!loop) continue;
        bool touching = false;
        for (const auto& a : res.atoms) {
          if (is_hydrogen(a) || touching) continue;
          for (const auto& b : r.atoms)
            if (!is_hydrogen(b) && dist(a.pos, b.pos) < kAtomContactDist) {
              touching = true;
              break;
            }
        }
        if (touching)
          contacts_list.push_back(
              Json{{"ab_chain", ch.id}, {"ab_pos", r.pos}, {"cdr", *loop}});
      }
    }
    binder.push_back(
        Json{{"ag_chain", h.chain}, {"ag_pos", h.pos}, {"binder_contacts", std::move(contacts_list)}});
  }
  thinking["hotspots_where"] = std::move(where);
  thinking["shape_context"] = std::move(shape);
  thinking["chemistry_logic"] = std::move(chem);
  thinking["binder_solution"] = std::move(binder);

  Json answer;
  answer["cdrs_present"] = ann.loops_present();
  Json seqs;
  for (const auto& name : kLoopOrder) {
    auto it = ann.loops.find(name);
    if (it == ann.loops.end()) continue;
    const CdrLoop& loop = it->second;
    std::string seq;
    Json filled = Json::array();
    for (int pos = loop.start; pos <= loop.end; ++pos) {
      const Residue& r = cx.residue_at({loop.chain, pos});
      bool contacting = detail::residue_heavy_contacts(cx, {loop.chain, pos}, ag_chains) >= 1;
      if (contacting) {
        seq += r.aa;
        filled.push_back(Json{{"pos", pos - loop.start + 1}, {"aa", std::string(1, r.aa)}});
      } else {
        seq += 'X';
      }
    }
    std::string tag = detail::loop_tag(name);
    seqs[name] = Json{{"len", loop.length()},
                      {"seq", "<" + tag + ">" + seq + "</" + tag + ">"},
                      {"filled_positions", std::move(filled)}};
  }
  answer["cdr_sequences"] = std::move(seqs);

  Json t;
  t["task"] = inst.task_type;
  t["thinking"] = std::move(thinking);
  t["answer"] = std::move(answer);
  inst.target = std::move(t);
  return inst;
}

// ---------------------------------------------------------------------------
// Per-structure driver.
// ---------------------------------------------------------------------------

struct GenOptions {
  int stage = 0;  // 0 = all stages
  int per_type = 1;
};

inline std::vector<TaskType> stage_task_types(int stage) {
  switch (stage) {
    case 1:
      return {TaskType::alignment_schema_b1, TaskType::alignment_schema_b2,
              TaskType::alignment_caption_b1, TaskType::alignment_caption_b2};
    case 2:
      return {TaskType::residue_retrieval, TaskType::dssp_seq, TaskType::rsa_seq,
              TaskType::pair_dist_bin, TaskType::pair_contact_yn, TaskType::pair_batch,
              TaskType::saltbridge_bin, TaskType::chainpair_graph, TaskType::top_chainpair,
              TaskType::interface_topk, TaskType::hotspot_topk, TaskType::lddt_bin};
    case 3:
      return {TaskType::ab_cdr_redesign};
    default:
      fail(Errc::config_error, "stage must be 1, 2, or 3");
  }
}

inline TaskInstance generate_one(const StructureContext& ctx, TaskType type, uint64_t seed) {
  switch (type) {
    case TaskType::alignment_schema_b1:
    case TaskType::alignment_schema_b2:
    case TaskType::alignment_caption_b1:
    case TaskType::alignment_caption_b2:
      return gen_stage1(ctx, type, seed);
    case TaskType::ab_cdr_redesign:
      return gen_stage3(ctx, seed);
    default:
      return gen_stage2(ctx, type, seed);
  }
}

// Emits per_type instances of every applicable task type, in canonical type
// order. Inapplicable types (single-chain cross tasks, missing annotations)
// are skipped. Each instance's seed mixes the structure id, type, and the
// instance's index within its type, so generation is order-independent.
inline std::vector<TaskInstance> generate_for_structure(const StructureContext& ctx,
                                                        uint64_t global_seed,
                                                        const GenOptions& opt = {}) {
  std::vector<int> stages;
  if (opt.stage == 0)
    stages = {1, 2, 3};
  else
    stages = {opt.stage};

  std::vector<TaskInstance> out;
  for (int stage : stages) {
    for (TaskType type : stage_task_types(stage)) {
      for (int k = 0; k < opt.per_type; ++k) {
        uint64_t seed =
            instance_seed(global_seed, ctx.complex.id, task_type_name(type), k);
        try {
          out.push_back(generate_one(ctx, type, seed));
        } catch (const Error& e) {
          if (e.code() == Errc::task_not_applicable || e.code() == Errc::missing_annotation)
            break;
          throw;
        }
      }
    }
  }
  return out;
}

}  // namespace proteotask
