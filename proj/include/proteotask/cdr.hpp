#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proteotask/errors.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

inline const std::vector<std::string> kLoopOrder = {"H1", "H2", "H3", "L1", "L2", "L3"};

struct CdrLoop {
  std::string chain;
  int start = 0;  // dense 1-based, inclusive
  int end = 0;

  int length() const { return end - start + 1; }
  bool contains(const std::string& c, int pos) const {
    return c == chain && pos >= start && pos <= end;
  }
};

struct CdrAnnotation {
  std::map<std::string, CdrLoop> loops;  // keyed by loop name (H1..L3)
  std::vector<ResidueRef> hotspots;
  std::optional<double> lddt;

  bool in_cdr(const std::string& chain, int pos) const {
    for (const auto& [name, loop] : loops)
      if (loop.contains(chain, pos)) return true;
    return false;
  }

  const std::string* loop_name_at(const std::string& chain, int pos) const {
    for (const auto& name : kLoopOrder) {
      auto it = loops.find(name);
      if (it != loops.end() && it->second.contains(chain, pos)) return &it->first;
    }
    return nullptr;
  }

  std::set<std::string> antibody_chains() const {
    std::set<std::string> out;
    for (const auto& [name, loop] : loops) out.insert(loop.chain);
    return out;
  }

  std::vector<std::string> loops_present() const {
    std::vector<std::string> out;
    for (const auto& name : kLoopOrder)
      if (loops.count(name)) out.push_back(name);
    return out;
  }
};

inline void validate_annotation(const CdrAnnotation& ann, const Complex& cx) {
  std::vector<const CdrLoop*> seen;
  for (const auto& [name, loop] : ann.loops) {
    const Chain* chain = cx.find_chain(loop.chain);
    if (!chain) fail(Errc::unknown_chain, "loop " + name + " on missing chain " + loop.chain);
    int len = static_cast<int>(chain->residues.size());
    if (loop.start < 1 || loop.end > len || loop.start > loop.end)
      fail(Errc::out_of_range, "loop " + name + " span [" + std::to_string(loop.start) + "," +
                                   std::to_string(loop.end) + "] outside chain " + loop.chain);
    for (const CdrLoop* other : seen) {
      if (other->chain == loop.chain && loop.start <= other->end && other->start <= loop.end)
        fail(Errc::overlapping_loops, "loop " + name + " overlaps another loop on chain " + loop.chain);
    }
    seen.push_back(&loop);
  }
  for (const auto& h : ann.hotspots) cx.residue_at(h);
}

inline CdrAnnotation annotation_from_json(const nlohmann::ordered_json& j) {
  try {
    CdrAnnotation ann;
    if (j.contains("loops")) {
      for (const auto& [name, jl] : j.at("loops").items()) {
        if (std::find(kLoopOrder.begin(), kLoopOrder.end(), name) == kLoopOrder.end())
          fail(Errc::parse_error, "unknown loop name '" + name + "'");
        CdrLoop loop;
        loop.chain = jl.at("chain").get<std::string>();
        loop.start = jl.at("start").get<int>();
        loop.end = jl.at("end").get<int>();
        ann.loops[name] = loop;
      }
    }
    if (j.contains("hotspots")) {
      for (const auto& jh : j.at("hotspots"))
        ann.hotspots.push_back({jh.at("chain").get<std::string>(), jh.at("pos").get<int>()});
    }
    if (j.contains("lddt")) ann.lddt = j.at("lddt").get<double>();
    return ann;
  } catch (const nlohmann::ordered_json::exception& e) {
    fail(Errc::parse_error, std::string("bad annotation JSON: ") + e.what());
  }
}

inline nlohmann::ordered_json annotation_to_json(const CdrAnnotation& ann) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json loops = nlohmann::ordered_json::object();
  for (const auto& name : kLoopOrder) {
    auto it = ann.loops.find(name);
    if (it == ann.loops.end()) continue;
    loops[name] = {{"chain", it->second.chain}, {"start", it->second.start}, {"end", it->second.end}};
  }
  j["loops"] = std::move(loops);
  nlohmann::ordered_json hs = nlohmann::ordered_json::array();
  for (const auto& h : ann.hotspots) hs.push_back({{"chain", h.chain}, {"pos", h.pos}});
  j["hotspots"] = std::move(hs);
  if (ann.lddt) j["lddt"] = *ann.lddt;
  return j;
}

// Masks CDR identities to X; coordinates untouched. Idempotent.
inline Complex apply_cdr_mask(const Complex& cx, const CdrAnnotation& ann) {
  validate_annotation(ann, cx);
  Complex out = cx;
  for (auto& chain : out.chains)
    for (auto& res : chain.residues)
      if (ann.in_cdr(chain.id, res.pos)) res.aa = 'X';
  return out;
}

}  // namespace proteotask
