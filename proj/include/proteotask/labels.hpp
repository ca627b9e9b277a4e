#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proteotask/chain_summary.hpp"
#include "proteotask/contacts.hpp"
#include "proteotask/sasa.hpp"
#include "proteotask/ss3.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

// Per-complex label bundle. Pairwise/interface quantities are computed on
// demand (see contacts.hpp); this holds the per-residue and per-chain labels.
struct LabelSet {
  std::vector<std::vector<Ss3>> ss3;
  RsaLabels rsa;
  std::vector<ChainSummary> chain_summaries;
  ChainPairGraph graph;
};

inline LabelSet compute_labels(const Complex& cx) {
  LabelSet ls;
  ls.ss3 = compute_ss3(cx);
  ls.rsa = compute_rsa(cx);
  for (size_t ci = 0; ci < cx.chains.size(); ++ci)
    ls.chain_summaries.push_back(summarize_chain(cx.chains[ci].id, ls.ss3[ci]));
  ls.graph = chain_pair_graph(cx);
  return ls;
}

inline nlohmann::ordered_json labels_to_json(const Complex& cx, const LabelSet& ls) {
  nlohmann::ordered_json j;
  j["id"] = cx.id;
  nlohmann::ordered_json chains = nlohmann::ordered_json::array();
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    nlohmann::ordered_json jc;
    jc["chain_id"] = cx.chains[ci].id;
    std::string ss;
    std::string rsa;
    for (size_t ri = 0; ri < cx.chains[ci].residues.size(); ++ri) {
      ss += ss3_token(ls.ss3[ci][ri]);
      rsa += rsa_token(ls.rsa.bin[ci][ri]);
    }
    jc["ss3"] = ss;
    jc["rsa_bins"] = rsa;
    nlohmann::ordered_json asa = nlohmann::ordered_json::array();
    for (size_t ri = 0; ri < cx.chains[ci].residues.size(); ++ri) {
      asa.push_back({{"pos", cx.chains[ci].residues[ri].pos},
                     {"asa_bound", ls.rsa.asa_bound[ci][ri]},
                     {"asa_unbound", ls.rsa.asa_unbound[ci][ri]}});
    }
    jc["asa"] = std::move(asa);
    jc["summary"] = chain_summary_to_json(ls.chain_summaries[ci]);
    chains.push_back(std::move(jc));
  }
  j["chains"] = std::move(chains);
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const auto& p : ls.graph.interacting)
    pairs.push_back({{"chain_i", p.chain_i}, {"chain_j", p.chain_j}});
  j["interacting_chain_pairs"] = std::move(pairs);
  if (ls.graph.top)
    j["top_chain_pair"] = {{"chain_i", ls.graph.top->chain_i}, {"chain_j", ls.graph.top->chain_j}};
  return j;
}

}  // namespace proteotask
