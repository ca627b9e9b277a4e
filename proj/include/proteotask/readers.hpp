#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "proteotask/errors.hpp"
#include "proteotask/structure.hpp"

namespace proteotask {

namespace detail {

struct RawAtom {
  std::string chain;
  std::string seq;      // author residue number
  char icode = ' ';
  std::string res_name;
  std::string atom_name;
  char alt_loc = ' ';
  std::string element;
  Vec3 pos;
  double occupancy = 1.0;
};

inline std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_float(const std::string& s, const std::string& what, size_t line_no) {
  std::string t = strip(s);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    fail(Errc::parse_error, "bad " + what + " '" + t + "' at line " + std::to_string(line_no));
  return v;
}

// Shared residue assembly: polymer filtering, alt-loc resolution, dense
// per-chain reindexing. Raw atoms must be in file order.
inline Complex assemble_complex(const std::vector<RawAtom>& raw, const std::string& id,
                                const std::string& source_format) {
  struct ResKey {
    std::string chain, seq;
    char icode;
    bool operator==(const ResKey& o) const {
      return chain == o.chain && seq == o.seq && icode == o.icode;
    }
  };

  Complex cx;
  cx.id = id;
  cx.source_format = source_format;

  std::map<std::string, size_t> chain_index;
  std::vector<std::vector<std::vector<const RawAtom*>>> grouped;  // [chain][residue][atom]
  std::vector<std::vector<ResKey>> keys;

  ResKey last{"", "", ' '};
  for (const auto& a : raw) {
    auto it = chain_index.find(a.chain);
    if (it == chain_index.end()) {
      it = chain_index.emplace(a.chain, cx.chains.size()).first;
      cx.chains.push_back(Chain{a.chain, {}});
      grouped.emplace_back();
      keys.emplace_back();
    }
    size_t ci = it->second;
    ResKey k{a.chain, a.seq, a.icode};
    if (grouped[ci].empty() || !(keys[ci].back() == k)) {
      grouped[ci].emplace_back();
      keys[ci].push_back(k);
    } else if (!(last == k)) {
      // Residue key reappearing non-contiguously would scramble ordering.
      fail(Errc::parse_error, "residue " + a.chain + "/" + a.seq + " split across the file");
    }
    grouped[ci].back().push_back(&a);
    last = k;
  }

  for (size_t ci = 0; ci < grouped.size(); ++ci) {
    Chain& chain = cx.chains[ci];
    for (size_t ri = 0; ri < grouped[ci].size(); ++ri) {
      const auto& atoms = grouped[ci][ri];
      const std::string& res_name = atoms.front()->res_name;
      if (is_water(res_name)) continue;

      Residue res;
      res.name = res_name;
      res.aa = three_to_one(res_name);
      res.auth_seq = keys[ci][ri].seq;
      if (keys[ci][ri].icode != ' ') res.auth_seq.push_back(keys[ci][ri].icode);

      // Alt-loc policy: lettered zero-occupancy atoms dropped; per atom name
      // keep highest occupancy, ties to the alphabetically first alt-loc.
      std::map<std::string, const RawAtom*> by_name;
      for (const RawAtom* a : atoms) {
        if (a->alt_loc != ' ' && a->occupancy <= 0.0) continue;
        auto [pos, fresh] = by_name.emplace(a->atom_name, a);
        if (fresh) continue;
        const RawAtom* prev = pos->second;
        if (a->occupancy > prev->occupancy ||
            (a->occupancy == prev->occupancy && a->alt_loc < prev->alt_loc))
          pos->second = a;
      }
      for (const RawAtom* a : atoms) {
        auto it = by_name.find(a->atom_name);
        if (it == by_name.end() || it->second != a) continue;
        Atom atom;
        atom.name = a->atom_name;
        atom.element = a->element.empty() ? element_from_atom_name(a->atom_name) : a->element;
        atom.pos = a->pos;
        atom.occupancy = a->occupancy;
        atom.alt_loc = a->alt_loc;
        res.atoms.push_back(std::move(atom));
      }

      bool polymer = is_standard_aa(res_name) || res.has_backbone();
      if (!polymer || res.atoms.empty()) continue;
      res.pos = static_cast<int>(chain.residues.size()) + 1;
      chain.residues.push_back(std::move(res));
    }
  }

  std::erase_if(cx.chains, [](const Chain& c) { return c.residues.empty(); });
  if (cx.chains.empty()) fail(Errc::empty_complex, "no polymer residues in " + id);
  return cx;
}

}  // namespace detail

inline Complex read_pdb_string(const std::string& text, const std::string& id) {
  std::vector<detail::RawAtom> raw;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  bool past_first_model = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.size() >= 6 && line.compare(0, 6, "ENDMDL") == 0) {
      past_first_model = true;
      continue;
    }
    if (past_first_model) continue;
    bool is_atom = line.compare(0, 6, "ATOM  ") == 0;
    bool is_het = line.compare(0, 6, "HETATM") == 0;
    if (!is_atom && !is_het) continue;
    if (line.size() < 54)
      fail(Errc::parse_error, "truncated atom record at line " + std::to_string(line_no));

    auto field = [&](size_t col, size_t len) {
      return col < line.size() ? line.substr(col, std::min(len, line.size() - col)) : std::string();
    };

    detail::RawAtom a;
    a.atom_name = detail::strip(field(12, 4));
    a.alt_loc = line[16] == ' ' ? ' ' : line[16];
    a.res_name = detail::strip(field(17, 3));
    a.chain = detail::strip(field(21, 1));
    if (a.chain.empty()) a.chain = "A";
    a.seq = detail::strip(field(22, 4));
    a.icode = line.size() > 26 && line[26] != ' ' ? line[26] : ' ';
    a.pos.x = detail::parse_float(field(30, 8), "x", line_no);
    a.pos.y = detail::parse_float(field(38, 8), "y", line_no);
    a.pos.z = detail::parse_float(field(46, 8), "z", line_no);
    std::string occ = detail::strip(field(54, 6));
    a.occupancy = occ.empty() ? 1.0 : detail::parse_float(occ, "occupancy", line_no);
    a.element = detail::strip(field(76, 2));
    raw.push_back(std::move(a));
  }
  return detail::assemble_complex(raw, id, "pdb");
}

namespace detail {

// Minimal CIF tokenizer: comments, quoted strings, semicolon text fields.
class CifTokenizer {
 public:
  explicit CifTokenizer(const std::string& text) : text_(text) {}

  // Returns false at end of input. Sets is_value=false for keywords/tags.
  bool next(std::string& token, bool& is_quoted) {
    for (;;) {
      if (pos_ >= text_.size()) return false;
      char c = text_[pos_];
      if (c == '\n') {
        at_line_start_ = true;
        ++pos_;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
        continue;
      }
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        continue;
      }
      if (c == ';' && at_line_start_) {
        ++pos_;
        size_t start = pos_;
        for (;;) {
          size_t nl = text_.find('\n', pos_);
          if (nl == std::string::npos) fail(Errc::parse_error, "unterminated text field");
          if (nl + 1 < text_.size() && text_[nl + 1] == ';') {
            token = text_.substr(start, nl - start);
            pos_ = nl + 2;
            at_line_start_ = false;
            is_quoted = true;
            return true;
          }
          pos_ = nl + 1;
        }
      }
      at_line_start_ = false;
      if (c == '\'' || c == '"') {
        size_t start = ++pos_;
        while (pos_ < text_.size()) {
          if (text_[pos_] == c &&
              (pos_ + 1 >= text_.size() || std::isspace(static_cast<unsigned char>(text_[pos_ + 1]))))
            break;
          ++pos_;
        }
        if (pos_ >= text_.size()) fail(Errc::parse_error, "unterminated quoted string");
        token = text_.substr(start, pos_ - start);
        ++pos_;
        is_quoted = true;
        return true;
      }
      size_t start = pos_;
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      token = text_.substr(start, pos_ - start);
      is_quoted = false;
      return true;
    }
  }

 private:
  const std::string& text_;
  size_t pos_ = 0;
  bool at_line_start_ = true;
};

inline bool cif_null(const std::string& v, bool quoted) {
  return !quoted && (v == "." || v == "?");
}

}  // namespace detail

inline Complex read_mmcif_string(const std::string& text, const std::string& id) {
  struct Tok {
    std::string value;
    bool quoted;
  };
  std::vector<Tok> toks;
  {
    detail::CifTokenizer tz(text);
    std::string t;
    bool q = false;
    while (tz.next(t, q)) toks.push_back({t, q});
  }
  auto is_keyword = [](const Tok& t) {
    return !t.quoted && !t.value.empty() &&
           (t.value[0] == '_' || t.value == "loop_" || t.value == "stop_" ||
            t.value.rfind("data_", 0) == 0 || t.value.rfind("save_", 0) == 0);
  };

  std::vector<std::string> tags;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<bool>> row_quoted;

  for (size_t i = 0; i < toks.size() && rows.empty(); ++i) {
    if (toks[i].quoted || toks[i].value != "loop_") continue;
    size_t j = i + 1;
    std::vector<std::string> loop_tags;
    while (j < toks.size() && !toks[j].quoted && !toks[j].value.empty() && toks[j].value[0] == '_')
      loop_tags.push_back(toks[j++].value);
    if (loop_tags.empty() || loop_tags[0].rfind("_atom_site.", 0) != 0) continue;

    tags = loop_tags;
    size_t ncol = tags.size();
    std::vector<std::string> row;
    std::vector<bool> rq;
    while (j < toks.size() && !is_keyword(toks[j])) {
      row.push_back(toks[j].value);
      rq.push_back(toks[j].quoted);
      ++j;
      if (row.size() == ncol) {
        rows.push_back(std::move(row));
        row_quoted.push_back(std::move(rq));
        row.clear();
        rq.clear();
      }
    }
    if (!row.empty()) fail(Errc::parse_error, "ragged _atom_site loop in " + id);
  }

  if (rows.empty()) fail(Errc::parse_error, "no _atom_site loop in " + id);

  auto col = [&](const std::string& name) -> int {
    std::string full = "_atom_site." + name;
    for (size_t i = 0; i < tags.size(); ++i)
      if (tags[i] == full) return static_cast<int>(i);
    return -1;
  };
  int c_group = col("group_PDB");
  int c_chain = col("auth_asym_id");
  if (c_chain < 0) c_chain = col("label_asym_id");
  int c_seq = col("auth_seq_id");
  if (c_seq < 0) c_seq = col("label_seq_id");
  int c_icode = col("pdbx_PDB_ins_code");
  int c_res = col("label_comp_id");
  if (c_res < 0) c_res = col("auth_comp_id");
  int c_atom = col("label_atom_id");
  if (c_atom < 0) c_atom = col("auth_atom_id");
  int c_alt = col("label_alt_id");
  int c_x = col("Cartn_x"), c_y = col("Cartn_y"), c_z = col("Cartn_z");
  int c_occ = col("occupancy");
  int c_elem = col("type_symbol");
  int c_model = col("pdbx_PDB_model_num");
  if (c_chain < 0 || c_seq < 0 || c_res < 0 || c_atom < 0 || c_x < 0 || c_y < 0 || c_z < 0)
    fail(Errc::parse_error, "missing required _atom_site columns in " + id);

  std::vector<detail::RawAtom> raw;
  std::string first_model;
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto& rq = row_quoted[r];
    auto null_at = [&](int c) { return detail::cif_null(row[c], rq[c]); };

    if (c_model >= 0 && !null_at(c_model)) {
      if (first_model.empty()) first_model = row[c_model];
      if (row[c_model] != first_model) continue;
    }
    if (c_group >= 0 && !null_at(c_group) && row[c_group] != "ATOM" && row[c_group] != "HETATM")
      continue;

    detail::RawAtom a;
    a.chain = null_at(c_chain) ? "A" : row[c_chain];
    a.seq = null_at(c_seq) ? "" : row[c_seq];
    a.icode = (c_icode >= 0 && !null_at(c_icode) && !row[c_icode].empty()) ? row[c_icode][0] : ' ';
    a.res_name = row[c_res];
    a.atom_name = row[c_atom];
    a.alt_loc = (c_alt >= 0 && !null_at(c_alt) && !row[c_alt].empty()) ? row[c_alt][0] : ' ';
    a.pos.x = detail::parse_float(row[c_x], "Cartn_x", r);
    a.pos.y = detail::parse_float(row[c_y], "Cartn_y", r);
    a.pos.z = detail::parse_float(row[c_z], "Cartn_z", r);
    a.occupancy = (c_occ >= 0 && !null_at(c_occ)) ? detail::parse_float(row[c_occ], "occupancy", r) : 1.0;
    a.element = (c_elem >= 0 && !null_at(c_elem)) ? row[c_elem] : "";
    raw.push_back(std::move(a));
  }
  return detail::assemble_complex(raw, id, "mmcif");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string structure_id_from_path(const std::string& path) {
  size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  size_t dot = base.find('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

// Dispatch on extension: .cif/.mmcif are mmCIF, .pdb/.ent are PDB.
inline Complex read_structure_file(const std::string& path) {
  std::string id = structure_id_from_path(path);
  std::string text = read_text_file(path);
  if (path.size() >= 4 && (path.ends_with(".cif") || path.ends_with(".mmcif")))
    return read_mmcif_string(text, id);
  if (path.ends_with(".pdb") || path.ends_with(".ent")) return read_pdb_string(text, id);
  fail(Errc::parse_error, "unrecognized structure extension: " + path);
}

}  // namespace proteotask
