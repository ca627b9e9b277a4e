#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "proteotask/errors.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

using Json = nlohmann::ordered_json;

// Canonical complex JSON. Doubles survive the round trip exactly
// (shortest-round-trip serialization on both ends).
inline Json complex_to_json(const Complex& cx) {
  Json j;
  j["format_version"] = 1;
  j["id"] = cx.id;
  j["source_format"] = cx.source_format;
  Json chains = Json::array();
  for (const auto& chain : cx.chains) {
    Json jc;
    jc["chain_id"] = chain.id;
    Json residues = Json::array();
    for (const auto& res : chain.residues) {
      Json jr;
      jr["pos"] = res.pos;
      jr["aa"] = std::string(1, res.aa);
      jr["name"] = res.name;
      jr["auth_seq"] = res.auth_seq;
      Json atoms = Json::array();
      for (const auto& a : res.atoms) {
        Json ja;
        ja["name"] = a.name;
        ja["element"] = a.element;
        ja["x"] = a.pos.x;
        ja["y"] = a.pos.y;
        ja["z"] = a.pos.z;
        ja["occupancy"] = a.occupancy;
        if (a.alt_loc != ' ') ja["alt_loc"] = std::string(1, a.alt_loc);
        atoms.push_back(std::move(ja));
      }
      jr["atoms"] = std::move(atoms);
      residues.push_back(std::move(jr));
    }
    jc["residues"] = std::move(residues);
    chains.push_back(std::move(jc));
  }
  j["chains"] = std::move(chains);
  return j;
}

inline Complex complex_from_json(const Json& j) {
  try {
    Complex cx;
    cx.id = j.at("id").get<std::string>();
    cx.source_format = j.at("source_format").get<std::string>();
    for (const auto& jc : j.at("chains")) {
      Chain chain;
      chain.id = jc.at("chain_id").get<std::string>();
      for (const auto& jr : jc.at("residues")) {
        Residue res;
        res.pos = jr.at("pos").get<int>();
        res.aa = jr.at("aa").get<std::string>().at(0);
        res.name = jr.at("name").get<std::string>();
        res.auth_seq = jr.at("auth_seq").get<std::string>();
        for (const auto& ja : jr.at("atoms")) {
          Atom a;
          a.name = ja.at("name").get<std::string>();
          a.element = ja.at("element").get<std::string>();
          a.pos = {ja.at("x").get<double>(), ja.at("y").get<double>(), ja.at("z").get<double>()};
          a.occupancy = ja.at("occupancy").get<double>();
          if (ja.contains("alt_loc")) a.alt_loc = ja.at("alt_loc").get<std::string>().at(0);
          res.atoms.push_back(std::move(a));
        }
        chain.residues.push_back(std::move(res));
      }
      cx.chains.push_back(std::move(chain));
    }
    if (cx.chains.empty()) fail(Errc::empty_complex, "no chains in complex JSON");
    return cx;
  } catch (const Json::exception& e) {
    fail(Errc::parse_error, std::string("bad complex JSON: ") + e.what());
  }
}

}  // namespace proteotask
