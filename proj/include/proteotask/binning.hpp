#pragma once

#include <array>
#include <string>
#include <vector>

namespace proteotask {

// All real-valued bins are left-closed right-open; a value equal to an edge
// falls in the upper bin. Labels are fixed strings, never formatted floats.

inline std::string edge_bin_label(double v, const std::vector<double>& edges,
                                  const std::vector<std::string>& labels) {
  size_t i = 0;
  while (i < edges.size() && v >= edges[i]) ++i;
  return labels[i];
}

enum class PairClass { short_range, long_range, cross_chain };

inline const char* pair_class_name(PairClass c) {
  switch (c) {
    case PairClass::short_range: return "short";
    case PairClass::long_range: return "long";
    case PairClass::cross_chain: return "cross_chain";
  }
  return "";
}

inline std::string dist_bin_label(double d, PairClass c) {
  switch (c) {
    case PairClass::cross_chain:
      return edge_bin_label(d, {4, 6, 8, 10, 14}, {"<4", "4-6", "6-8", "8-10", "10-14", ">14"});
    case PairClass::long_range:
      return edge_bin_label(d, {6, 8, 10, 12, 16}, {"<6", "6-8", "8-10", "10-12", "12-16", ">16"});
    case PairClass::short_range:
      return edge_bin_label(d, {3.5, 5, 7, 9, 12}, {"<3.5", "3.5-5", "5-7", "7-9", "9-12", ">12"});
  }
  return "";
}

inline const std::vector<std::string>& dist_bin_labels(PairClass c) {
  static const std::vector<std::string> cross = {"<4", "4-6", "6-8", "8-10", "10-14", ">14"};
  static const std::vector<std::string> longr = {"<6", "6-8", "8-10", "10-12", "12-16", ">16"};
  static const std::vector<std::string> shortr = {"<3.5", "3.5-5", "5-7", "7-9", "9-12", ">12"};
  switch (c) {
    case PairClass::cross_chain: return cross;
    case PairClass::long_range: return longr;
    default: return shortr;
  }
}

inline std::string salt_bridge_bin_label(int n) {
  if (n <= 0) return "0";
  if (n <= 2) return "1-2";
  if (n <= 5) return "3-5";
  if (n <= 10) return "6-10";
  if (n <= 20) return "11-20";
  return ">20";
}

inline const std::vector<std::string>& salt_bridge_bin_labels() {
  static const std::vector<std::string> labels = {"0", "1-2", "3-5", "6-10", "11-20", ">20"};
  return labels;
}

inline std::string chain_length_bin_label(int n) {
  return edge_bin_label(static_cast<double>(n), {50, 100, 200, 300, 500, 800},
                        {"0-50", "50-100", "100-200", "200-300", "300-500", "500-800", ">800"});
}

// Fraction in [0,1]; decade bins, top bin closed.
inline std::string percent_bin_label(double frac) {
  double pct = frac * 100.0;
  if (pct >= 90.0) return "90-100";
  static const std::array<const char*, 9> labels = {"0-10",  "10-20", "20-30", "30-40", "40-50",
                                                    "50-60", "60-70", "70-80", "80-90"};
  int i = static_cast<int>(pct / 10.0);
  if (i < 0) i = 0;
  if (i > 8) i = 8;
  return labels[i];
}

inline std::string run_length_bin_label(int n) {
  if (n <= 0) return "0";
  if (n <= 4) return "1-4";
  if (n <= 8) return "5-8";
  if (n <= 15) return "9-15";
  if (n <= 30) return "16-30";
  return ">30";
}

inline std::string segment_count_bin_label(int n) {
  if (n <= 0) return "0";
  if (n == 1) return "1";
  if (n == 2) return "2";
  if (n <= 5) return "3-5";
  return ">5";
}

inline std::string lddt_bin_label(double v) {
  return edge_bin_label(v, {0.5, 0.6, 0.7, 0.8},
                        {"<0.5", "0.5-0.6", "0.6-0.7", "0.7-0.8", ">0.8"});
}

inline const std::vector<std::string>& lddt_bin_labels() {
  static const std::vector<std::string> labels = {"<0.5", "0.5-0.6", "0.6-0.7", "0.7-0.8", ">0.8"};
  return labels;
}

}  // namespace proteotask
