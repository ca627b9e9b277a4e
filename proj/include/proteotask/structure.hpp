#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proteotask/errors.hpp"
#include "proteotask/geom.hpp"

namespace proteotask {

inline const std::string kAaAlphabet = "ACDEFGHIKLMNPQRSTVWY";

inline char three_to_one(const std::string& name) {
  static const std::map<std::string, char> table = {
      {"ALA", 'A'}, {"ARG", 'R'}, {"ASN", 'N'}, {"ASP", 'D'}, {"CYS", 'C'},
      {"GLN", 'Q'}, {"GLU", 'E'}, {"GLY", 'G'}, {"HIS", 'H'}, {"ILE", 'I'},
      {"LEU", 'L'}, {"LYS", 'K'}, {"MET", 'M'}, {"PHE", 'F'}, {"PRO", 'P'},
      {"SER", 'S'}, {"THR", 'T'}, {"TRP", 'W'}, {"TYR", 'Y'}, {"VAL", 'V'}};
  auto it = table.find(name);
  return it == table.end() ? 'X' : it->second;
}

inline bool is_standard_aa(const std::string& name) { return three_to_one(name) != 'X'; }

inline std::string one_to_three(char aa) {
  static const std::map<char, std::string> table = {
      {'A', "ALA"}, {'R', "ARG"}, {'N', "ASN"}, {'D', "ASP"}, {'C', "CYS"},
      {'Q', "GLN"}, {'E', "GLU"}, {'G', "GLY"}, {'H', "HIS"}, {'I', "ILE"},
      {'L', "LEU"}, {'K', "LYS"}, {'M', "MET"}, {'F', "PHE"}, {'P', "PRO"},
      {'S', "SER"}, {'T', "THR"}, {'W', "TRP"}, {'Y', "TYR"}, {'V', "VAL"}};
  auto it = table.find(aa);
  return it == table.end() ? "UNK" : it->second;
}

inline bool is_water(const std::string& name) {
  return name == "HOH" || name == "WAT" || name == "DOD" || name == "H2O";
}

struct Atom {
  std::string name;
  std::string element;
  Vec3 pos;
  double occupancy = 1.0;
  char alt_loc = ' ';

  bool operator==(const Atom& o) const {
    return name == o.name && element == o.element && pos == o.pos &&
           occupancy == o.occupancy && alt_loc == o.alt_loc;
  }
};

inline bool is_hydrogen(const Atom& a) { return a.element == "H" || a.element == "D"; }

// Fallback when the element column is blank: skip leading digits, take the
// first letter; names like "1HB" are hydrogens, " CA " is carbon.
inline std::string element_from_atom_name(const std::string& name) {
  for (char c : name) {
    if (std::isdigit(static_cast<unsigned char>(c)) || c == ' ') continue;
    return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return "";
}

struct Residue {
  int pos = 0;             // dense 1-based index within the chain
  char aa = 'X';           // one-letter, X for nonstandard
  std::string name;        // original residue name
  std::string auth_seq;    // author numbering (with insertion code) for diagnostics
  std::vector<Atom> atoms;

  bool operator==(const Residue& o) const {
    return pos == o.pos && aa == o.aa && name == o.name && auth_seq == o.auth_seq &&
           atoms == o.atoms;
  }

  const Atom* find_atom(const std::string& atom_name) const {
    for (const auto& a : atoms)
      if (a.name == atom_name) return &a;
    return nullptr;
  }

  bool has_backbone() const {
    return find_atom("N") && find_atom("CA") && find_atom("C");
  }

  bool has_full_backbone() const { return has_backbone() && find_atom("O"); }

  // Contact reference point: CB, or CA for glycine.
  std::optional<Vec3> cbeta() const {
    if (aa == 'G') {
      const Atom* ca = find_atom("CA");
      return ca ? std::optional<Vec3>(ca->pos) : std::nullopt;
    }
    const Atom* cb = find_atom("CB");
    return cb ? std::optional<Vec3>(cb->pos) : std::nullopt;
  }
};

struct Chain {
  std::string id;
  std::vector<Residue> residues;

  bool operator==(const Chain& o) const { return id == o.id && residues == o.residues; }

  std::string sequence() const {
    std::string s;
    s.reserve(residues.size());
    for (const auto& r : residues) s.push_back(r.aa);
    return s;
  }
};

struct ResidueRef {
  std::string chain;
  int pos = 0;

  bool operator==(const ResidueRef& o) const { return chain == o.chain && pos == o.pos; }
  bool operator<(const ResidueRef& o) const {
    return chain != o.chain ? chain < o.chain : pos < o.pos;
  }
};

struct Complex {
  std::string id;
  std::string source_format;  // "pdb" or "mmcif"
  std::vector<Chain> chains;

  bool operator==(const Complex& o) const {
    return id == o.id && source_format == o.source_format && chains == o.chains;
  }

  const Chain* find_chain(const std::string& chain_id) const {
    for (const auto& c : chains)
      if (c.id == chain_id) return &c;
    return nullptr;
  }

  const Chain& chain_or_fail(const std::string& chain_id) const {
    const Chain* c = find_chain(chain_id);
    if (!c) fail(Errc::unknown_chain, "no chain '" + chain_id + "' in " + id);
    return *c;
  }

  const Residue& residue_at(const ResidueRef& ref) const {
    const Chain& c = chain_or_fail(ref.chain);
    if (ref.pos < 1 || ref.pos > static_cast<int>(c.residues.size()))
      fail(Errc::out_of_range,
           "position " + std::to_string(ref.pos) + " outside chain " + ref.chain);
    return c.residues[ref.pos - 1];
  }

  size_t total_residues() const {
    size_t n = 0;
    for (const auto& c : chains) n += c.residues.size();
    return n;
  }
};

}  // namespace proteotask
