#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proteotask/binning.hpp"
#include "proteotask/ss3.hpp"

namespace proteotask {

struct ChainSummary {
  std::string chain_id;
  std::string length_bin;
  std::map<char, std::string> fraction_bins;    // H, E, C
  std::string major_ss;                         // tie order H > E > C
  std::map<char, std::string> longest_run_bins; // H, E, C
  std::map<char, std::string> segment_bins;     // H, E only
};

// Fractions and the major class are over assigned (non-NA) residues; an
// unassigned chain gets major "NA" and zero fractions.
inline ChainSummary summarize_chain(const std::string& chain_id, const std::vector<Ss3>& ss) {
  ChainSummary s;
  s.chain_id = chain_id;
  s.length_bin = chain_length_bin_label(static_cast<int>(ss.size()));

  const char classes[3] = {'H', 'E', 'C'};
  std::map<char, int> count, longest, segments;
  for (char c : classes) count[c] = longest[c] = segments[c] = 0;

  int assigned = 0;
  char prev = 0;
  int run = 0;
  auto flush = [&](char cls, int len) {
    if (cls == 0 || len == 0) return;
    longest[cls] = std::max(longest[cls], len);
    segments[cls]++;
  };
  for (Ss3 v : ss) {
    char c = v == Ss3::NA ? 0 : static_cast<char>(v);
    if (c != 0) {
      ++assigned;
      ++count[c];
    }
    if (c == prev) {
      ++run;
    } else {
      flush(prev, run);
      prev = c;
      run = c == 0 ? 0 : 1;
    }
  }
  flush(prev, run);

  double denom = assigned > 0 ? assigned : 1;
  for (char c : classes) s.fraction_bins[c] = percent_bin_label(count[c] / denom);
  if (assigned == 0) {
    s.major_ss = "NA";
  } else {
    char major = 'H';
    for (char c : classes)
      if (count[c] > count[major]) major = c;
    s.major_ss = std::string(1, major);
  }
  for (char c : classes) s.longest_run_bins[c] = run_length_bin_label(longest[c]);
  s.segment_bins['H'] = segment_count_bin_label(segments['H']);
  s.segment_bins['E'] = segment_count_bin_label(segments['E']);
  return s;
}

inline nlohmann::ordered_json chain_summary_to_json(const ChainSummary& s) {
  nlohmann::ordered_json j;
  j["chain_id"] = s.chain_id;
  j["length_bin"] = s.length_bin;
  j["secondary_structure_fraction_bins"] = {{"H", s.fraction_bins.at('H')},
                                            {"E", s.fraction_bins.at('E')},
                                            {"C", s.fraction_bins.at('C')}};
  j["major_secondary_structure"] = s.major_ss;
  j["secondary_structure_longest_run_bins"] = {{"H", s.longest_run_bins.at('H')},
                                               {"E", s.longest_run_bins.at('E')},
                                               {"C", s.longest_run_bins.at('C')}};
  j["secondary_structure_segment_count_bins"] = {{"H", s.segment_bins.at('H')},
                                                 {"E", s.segment_bins.at('E')}};
  return j;
}

}  // namespace proteotask
