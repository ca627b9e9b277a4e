#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proteotask/cdr.hpp"
#include "proteotask/errors.hpp"
#include "proteotask/rng.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

// Identity embeddings for the 20 amino acids plus the masked-unknown row.
struct EmbeddingTable {
  size_t d_gen = 0;
  std::map<char, std::vector<double>> rows;
  std::vector<double> mask_row;

  const std::vector<double>& row(char aa) const {
    auto it = rows.find(aa);
    return it == rows.end() ? mask_row : it->second;
  }
};

struct ProjectionMatrix {
  size_t d_gen = 0, d_llm = 0;
  std::vector<double> values;  // row-major, d_gen x d_llm

  std::vector<double> apply(const std::vector<double>& h) const {
    if (h.size() != d_llm) fail(Errc::dim_mismatch, "hidden vector length != d_llm");
    std::vector<double> out(d_gen, 0.0);
    for (size_t r = 0; r < d_gen; ++r) {
      const double* row = values.data() + r * d_llm;
      double acc = 0.0;
      for (size_t c = 0; c < d_llm; ++c) acc += row[c] * h[c];
      out[r] = acc;
    }
    return out;
  }
};

struct AnchorParams {
  EmbeddingTable table;
  ProjectionMatrix proj;
};

// Flattened-residue anchor specification: which residues are redesigned
// (cdr_set), which of those are clamped (key_set), and the clamped identity
// plus external hidden vector for every key residue.
struct AnchorSpec {
  std::set<size_t> cdr_set;
  std::set<size_t> key_set;
  std::map<size_t, char> identities;
  std::map<size_t, std::vector<double>> hidden;
};

struct AnchorOutput {
  std::string k_gen;                        // per-residue token, aa or X
  std::vector<std::vector<double>> e_gen;   // per-residue, length d_gen
};

inline void validate_spec(const AnchorSpec& spec, size_t n_residues, size_t d_llm) {
  for (size_t i : spec.cdr_set)
    if (i >= n_residues) fail(Errc::out_of_range, "cdr index beyond residue count");
  for (size_t i : spec.key_set)
    if (!spec.cdr_set.count(i))
      fail(Errc::key_outside_cdr, "key residue " + std::to_string(i) + " not in the CDR set");
  for (size_t i : spec.key_set) {
    auto id = spec.identities.find(i);
    if (id == spec.identities.end() || !spec.hidden.count(i))
      fail(Errc::missing_hidden, "key residue " + std::to_string(i) + " lacks identity or hidden");
    if (kAaAlphabet.find(id->second) == std::string::npos)
      fail(Errc::config_error, "clamped identity must be one of the 20 amino acids");
  }
  if (spec.identities.size() != spec.key_set.size() || spec.hidden.size() != spec.key_set.size())
    fail(Errc::config_error, "identities and hidden must be defined exactly on the key set");
  for (const auto& [i, h] : spec.hidden)
    if (h.size() != d_llm) fail(Errc::dim_mismatch, "hidden vector length != d_llm");
}

// Key residues: clamp identity and add the projected hidden state onto the
// identity embedding. Remaining CDR residues: masked token and mask row.
// Everything else passes through untouched.
inline AnchorOutput build_anchors(const std::string& native, const AnchorSpec& spec,
                                  const EmbeddingTable& table, const ProjectionMatrix& proj) {
  if (table.d_gen != proj.d_gen) fail(Errc::dim_mismatch, "table and projection d_gen differ");
  validate_spec(spec, native.size(), proj.d_llm);

  AnchorOutput out;
  out.k_gen.reserve(native.size());
  out.e_gen.reserve(native.size());
  for (size_t i = 0; i < native.size(); ++i) {
    if (spec.key_set.count(i)) {
      char k = spec.identities.at(i);
      std::vector<double> e = table.row(k);
      std::vector<double> delta = proj.apply(spec.hidden.at(i));
      for (size_t d = 0; d < e.size(); ++d) e[d] += delta[d];
      out.k_gen += k;
      out.e_gen.push_back(std::move(e));
    } else if (spec.cdr_set.count(i)) {
      out.k_gen += 'X';
      out.e_gen.push_back(table.mask_row);
    } else {
      out.k_gen += native[i];
      out.e_gen.push_back(table.row(native[i]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter init and the tensor file format: one JSON header line, then a
// little-endian float payload (embedding rows in header order, then the
// projection matrix row-major).
// ---------------------------------------------------------------------------

inline AnchorParams init_params(size_t d_gen, size_t d_llm, uint64_t seed) {
  if (d_gen == 0 || d_llm == 0) fail(Errc::config_error, "dims must be positive");
  Rng rng(seed);
  auto draw = [&](size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-0.02, 0.02);
    return v;
  };
  AnchorParams p;
  p.table.d_gen = d_gen;
  for (char aa : kAaAlphabet) p.table.rows[aa] = draw(d_gen);
  p.table.mask_row = draw(d_gen);
  p.proj.d_gen = d_gen;
  p.proj.d_llm = d_llm;
  p.proj.values = draw(d_gen * d_llm);
  return p;
}

namespace detail {

inline void put_f64(std::string& out, double v) {
  uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int k = 0; k < 8; ++k) out += static_cast<char>((bits >> (8 * k)) & 0xff);
}

inline void put_f32(std::string& out, double v) {
  uint32_t bits = std::bit_cast<uint32_t>(static_cast<float>(v));
  for (int k = 0; k < 4; ++k) out += static_cast<char>((bits >> (8 * k)) & 0xff);
}

inline double take_f64(const std::string& in, size_t& off) {
  uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<uint64_t>(static_cast<unsigned char>(in[off++])) << (8 * k);
  return std::bit_cast<double>(bits);
}

inline double take_f32(const std::string& in, size_t& off) {
  uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) bits |= static_cast<uint32_t>(static_cast<unsigned char>(in[off++])) << (8 * k);
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace detail

inline void save_params(const std::string& path, const AnchorParams& p,
                        const std::string& dtype = "f64") {
  if (dtype != "f64" && dtype != "f32") fail(Errc::config_error, "dtype must be f32 or f64");
  nlohmann::ordered_json header;
  header["format_version"] = 1;
  header["d_gen"] = p.table.d_gen;
  header["d_llm"] = p.proj.d_llm;
  header["dtype"] = dtype;
  nlohmann::ordered_json order = nlohmann::ordered_json::array();
  for (char aa : kAaAlphabet) order.push_back(std::string(1, aa));
  order.push_back("X");
  header["row_order"] = std::move(order);

  std::string payload;
  auto put = [&](double v) { dtype == "f64" ? detail::put_f64(payload, v) : detail::put_f32(payload, v); };
  for (char aa : kAaAlphabet)
    for (double v : p.table.rows.at(aa)) put(v);
  for (double v : p.table.mask_row) put(v);
  for (double v : p.proj.values) put(v);

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << header.dump() << '\n' << payload;
}

inline AnchorParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot read " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) fail(Errc::parse_error, path + ": missing header");
  auto header = nlohmann::ordered_json::parse(header_line, nullptr, false);
  if (header.is_discarded()) fail(Errc::parse_error, path + ": header is not JSON");

  size_t d_gen = 0, d_llm = 0;
  std::string dtype;
  try {
    d_gen = header.at("d_gen").get<size_t>();
    d_llm = header.at("d_llm").get<size_t>();
    dtype = header.at("dtype").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, path + ": bad header: " + e.what());
  }
  if (dtype != "f64" && dtype != "f32") fail(Errc::parse_error, path + ": unknown dtype " + dtype);

  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  size_t unit = dtype == "f64" ? 8 : 4;
  size_t need = (21 * d_gen + d_gen * d_llm) * unit;
  if (payload.size() != need)
    fail(Errc::parse_error, path + ": payload size " + std::to_string(payload.size()) +
                                ", expected " + std::to_string(need));

  size_t off = 0;
  auto take = [&]() { return dtype == "f64" ? detail::take_f64(payload, off) : detail::take_f32(payload, off); };
  AnchorParams p;
  p.table.d_gen = d_gen;
  for (char aa : kAaAlphabet) {
    std::vector<double> v(d_gen);
    for (auto& x : v) x = take();
    p.table.rows[aa] = std::move(v);
  }
  p.table.mask_row.resize(d_gen);
  for (auto& x : p.table.mask_row) x = take();
  p.proj.d_gen = d_gen;
  p.proj.d_llm = d_llm;
  p.proj.values.resize(d_gen * d_llm);
  for (auto& x : p.proj.values) x = take();
  return p;
}

inline AnchorParams load_or_init_params(const std::optional<std::string>& source, size_t d_gen,
                                        size_t d_llm, uint64_t seed) {
  if (!source) return init_params(d_gen, d_llm, seed);
  AnchorParams p = load_params(*source);
  if (p.table.d_gen != d_gen || p.proj.d_llm != d_llm)
    fail(Errc::dim_mismatch, "file dims (" + std::to_string(p.table.d_gen) + "," +
                                 std::to_string(p.proj.d_llm) + ") do not match requested (" +
                                 std::to_string(d_gen) + "," + std::to_string(d_llm) + ")");
  return p;
}

// ---------------------------------------------------------------------------
// Complex-level plumbing: hidden-state sidecar and the flattened residue view.
// ---------------------------------------------------------------------------

struct HiddenEntry {
  char identity = 'X';
  std::vector<double> hidden;
};

using HiddenMap = std::map<ResidueRef, HiddenEntry>;

// Sidecar JSONL: {structure_id, chain, pos, identity, hidden: [...]} per line.
inline std::map<std::string, HiddenMap> load_hidden_sidecar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot read " + path);
  std::map<std::string, HiddenMap> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::ordered_json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(Errc::parse_error, path + ":" + std::to_string(lineno) + ": invalid JSON");
    try {
      std::string sid = j.at("structure_id").get<std::string>();
      ResidueRef ref{j.at("chain").get<std::string>(), j.at("pos").get<int>()};
      HiddenEntry entry;
      std::string id = j.at("identity").get<std::string>();
      if (id.size() != 1) fail(Errc::parse_error, "identity must be a single letter");
      entry.identity = id[0];
      entry.hidden = j.at("hidden").get<std::vector<double>>();
      out[sid][ref] = std::move(entry);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse_error, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::string flattened_identities(const Complex& cx) {
  std::string out;
  for (const auto& ch : cx.chains)
    for (const auto& r : ch.residues) out += r.aa;
  return out;
}

inline std::vector<ResidueRef> flattened_refs(const Complex& cx) {
  std::vector<ResidueRef> out;
  for (const auto& ch : cx.chains)
    for (const auto& r : ch.residues) out.push_back({ch.id, r.pos});
  return out;
}

// CDR residues come from the annotation; hidden entries make them keys.
inline AnchorSpec make_anchor_spec(const Complex& cx, const CdrAnnotation& ann,
                                   const HiddenMap& hidden) {
  validate_annotation(ann, cx);
  AnchorSpec spec;
  std::map<ResidueRef, size_t> index;
  size_t flat = 0;
  for (const auto& ch : cx.chains)
    for (const auto& r : ch.residues) index[{ch.id, r.pos}] = flat++;
  for (const auto& [name, loop] : ann.loops)
    for (int pos = loop.start; pos <= loop.end; ++pos) spec.cdr_set.insert(index.at({loop.chain, pos}));
  for (const auto& [ref, entry] : hidden) {
    auto it = index.find(ref);
    if (it == index.end()) fail(Errc::unknown_chain, "hidden entry for unknown residue");
    if (!spec.cdr_set.count(it->second))
      fail(Errc::key_outside_cdr, "hidden entry outside the CDR set at " + ref.chain + ":" +
                                      std::to_string(ref.pos));
    spec.key_set.insert(it->second);
    spec.identities[it->second] = entry.identity;
    spec.hidden[it->second] = entry.hidden;
  }
  return spec;
}

inline void export_anchor_output(const std::string& path, const std::vector<ResidueRef>& refs,
                                 const AnchorOutput& out) {
  if (refs.size() != out.k_gen.size() || refs.size() != out.e_gen.size())
    fail(Errc::dim_mismatch, "refs and anchor output length differ");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot write " + path);
  for (size_t i = 0; i < refs.size(); ++i) {
    nlohmann::ordered_json j;
    j["chain"] = refs[i].chain;
    j["pos"] = refs[i].pos;
    j["k_gen"] = std::string(1, out.k_gen[i]);
    j["e_gen"] = out.e_gen[i];
    f << j.dump() << '\n';
  }
}

}  // namespace proteotask
