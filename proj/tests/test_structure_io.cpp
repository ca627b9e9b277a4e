#include <gtest/gtest.h>

#include <cmath>

#include "proteotask/cdr.hpp"
#include "proteotask/complex_json.hpp"
#include "proteotask/readers.hpp"
#include "support/synthetic.hpp"

using namespace proteotask;

namespace {

const char* kTwoGlyPdb =
    "ATOM      1  N   GLY A   1       0.000   0.000   0.000  1.00  0.00           N\n"
    "ATOM      2  CA  GLY A   1       1.458   0.000   0.000  1.00  0.00           C\n"
    "ATOM      3  C   GLY A   1       2.009   1.420   0.000  1.00  0.00           C\n"
    "ATOM      4  O   GLY A   1       1.251   2.390   0.000  1.00  0.00           O\n"
    "ATOM      5  N   GLY A   2       3.332   1.536   0.000  1.00  0.00           N\n"
    "ATOM      6  CA  GLY A   2       3.988   2.835   0.000  1.00  0.00           C\n"
    "ATOM      7  C   GLY A   2       5.504   2.693   0.000  1.00  0.00           C\n"
    "ATOM      8  O   GLY A   2       6.030   1.581   0.000  1.00  0.00           O\n"
    "END\n";

// Same structure, mmCIF flavor, with distractor blocks the tokenizer must
// skip: comments, a preceding loop, quoted values, a semicolon text field.
const char* kTwoGlyCif = R"(data_twogly
# comment line
_entry.id twogly
_struct.title 'two glycines, hand written'
_struct.details
;multi-line text field
second line; with a semicolon
;
loop_
_entity.id
_entity.pdbx_description
1 'polymer entity'
loop_
_atom_site.group_PDB
_atom_site.id
_atom_site.type_symbol
_atom_site.label_atom_id
_atom_site.label_alt_id
_atom_site.label_comp_id
_atom_site.label_asym_id
_atom_site.label_seq_id
_atom_site.pdbx_PDB_ins_code
_atom_site.Cartn_x
_atom_site.Cartn_y
_atom_site.Cartn_z
_atom_site.occupancy
_atom_site.auth_seq_id
_atom_site.auth_asym_id
_atom_site.pdbx_PDB_model_num
ATOM 1 N N . GLY A 1 ? 0.000 0.000 0.000 1.00 1 A 1
ATOM 2 C CA . GLY A 1 ? 1.458 0.000 0.000 1.00 1 A 1
ATOM 3 C C . GLY A 1 ? 2.009 1.420 0.000 1.00 1 A 1
ATOM 4 O O . GLY A 1 ? 1.251 2.390 0.000 1.00 1 A 1
ATOM 5 N N . GLY A 2 ? 3.332 1.536 0.000 1.00 2 A 1
ATOM 6 C CA . GLY A 2 ? 3.988 2.835 0.000 1.00 2 A 1
ATOM 7 C C . GLY A 2 ? 5.504 2.693 0.000 1.00 2 A 1
ATOM 8 O O . GLY A 2 ? 6.030 1.581 0.000 1.00 2 A 1
)";

TEST(PdbReader, TwoGlycines) {
  Complex cx = read_pdb_string(kTwoGlyPdb, "twogly");
  ASSERT_EQ(cx.chains.size(), 1u);
  EXPECT_EQ(cx.chains[0].id, "A");
  ASSERT_EQ(cx.chains[0].residues.size(), 2u);
  EXPECT_EQ(cx.chains[0].sequence(), "GG");
  EXPECT_EQ(cx.chains[0].residues[0].pos, 1);
  EXPECT_EQ(cx.chains[0].residues[1].pos, 2);
  EXPECT_EQ(cx.chains[0].residues[0].auth_seq, "1");
  ASSERT_EQ(cx.chains[0].residues[0].atoms.size(), 4u);
  EXPECT_EQ(cx.chains[0].residues[0].atoms[1].name, "CA");
  EXPECT_DOUBLE_EQ(cx.chains[0].residues[0].atoms[1].pos.x, 1.458);
  EXPECT_EQ(cx.chains[0].residues[0].atoms[0].element, "N");
  EXPECT_TRUE(cx.chains[0].residues[0].has_full_backbone());
}

TEST(MmcifReader, MatchesPdbOnSameStructure) {
  Complex pdb = read_pdb_string(kTwoGlyPdb, "twogly");
  Complex cif = read_mmcif_string(kTwoGlyCif, "twogly");
  ASSERT_EQ(cif.chains.size(), 1u);
  ASSERT_EQ(cif.chains[0].residues.size(), 2u);
  EXPECT_EQ(cif.source_format, "mmcif");
  cif.source_format = pdb.source_format;
  EXPECT_EQ(pdb, cif);
}

TEST(MmcifReader, KeepsFirstModelOnly) {
  std::string cif =
      "data_x\nloop_\n_atom_site.group_PDB\n_atom_site.label_atom_id\n"
      "_atom_site.label_comp_id\n_atom_site.auth_asym_id\n_atom_site.auth_seq_id\n"
      "_atom_site.Cartn_x\n_atom_site.Cartn_y\n_atom_site.Cartn_z\n"
      "_atom_site.type_symbol\n_atom_site.pdbx_PDB_model_num\n"
      "ATOM N GLY A 1 0.0 0.0 0.0 N 1\n"
      "ATOM CA GLY A 1 1.5 0.0 0.0 C 1\n"
      "ATOM C GLY A 1 2.0 1.4 0.0 C 1\n"
      "ATOM N GLY A 1 9.0 9.0 9.0 N 2\n"
      "ATOM CA GLY A 1 9.5 9.0 9.0 C 2\n"
      "ATOM C GLY A 1 9.9 9.9 9.0 C 2\n";
  Complex cx = read_mmcif_string(cif, "x");
  ASSERT_EQ(cx.chains.size(), 1u);
  ASSERT_EQ(cx.chains[0].residues.size(), 1u);
  EXPECT_DOUBLE_EQ(cx.chains[0].residues[0].atoms[0].pos.x, 0.0);
}

TEST(PdbReader, FirstModelOnly) {
  std::string pdb = "MODEL        1\n";
  pdb += kTwoGlyPdb;
  pdb += "ENDMDL\nMODEL        2\n";
  pdb += "ATOM      9  N   ALA A   9      99.000  99.000  99.000  1.00  0.00           N\n";
  pdb += "ENDMDL\n";
  Complex cx = read_pdb_string(pdb, "m");
  ASSERT_EQ(cx.chains[0].residues.size(), 2u);
}

TEST(PdbReader, AltLocHighestOccupancyTiesAlphabetical) {
  std::string pdb =
      "ATOM      1  N  AGLY A   1       0.000   0.000   0.000  0.40  0.00           N\n"
      "ATOM      2  N  BGLY A   1       5.000   0.000   0.000  0.60  0.00           N\n"
      "ATOM      3  CA AGLY A   1       1.000   0.000   0.000  0.50  0.00           C\n"
      "ATOM      4  CA BGLY A   1       6.000   0.000   0.000  0.50  0.00           C\n"
      "ATOM      5  C  AGLY A   1       2.000   1.000   0.000  0.50  0.00           C\n"
      "ATOM      6  O  CGLY A   1       2.500   2.000   0.000  0.00  0.00           O\n"
      "END\n";
  Complex cx = read_pdb_string(pdb, "alt");
  const Residue& r = cx.chains[0].residues[0];
  // N: occupancy 0.6 wins; CA: tie, alt A wins; O: zero-occupancy alt dropped.
  EXPECT_DOUBLE_EQ(r.find_atom("N")->pos.x, 5.0);
  EXPECT_DOUBLE_EQ(r.find_atom("CA")->pos.x, 1.0);
  EXPECT_EQ(r.find_atom("O"), nullptr);
  EXPECT_EQ(r.atoms.size(), 3u);
}

TEST(PdbReader, PolymerFiltering) {
  std::string pdb =
      "ATOM      1  N   GLY A   1       0.000   0.000   0.000  1.00  0.00           N\n"
      "ATOM      2  CA  GLY A   1       1.458   0.000   0.000  1.00  0.00           C\n"
      "ATOM      3  C   GLY A   1       2.009   1.420   0.000  1.00  0.00           C\n"
      "HETATM    4  N   MSE A   2       3.300   1.500   0.000  1.00  0.00           N\n"
      "HETATM    5  CA  MSE A   2       4.000   2.800   0.000  1.00  0.00           C\n"
      "HETATM    6  C   MSE A   2       5.500   2.700   0.000  1.00  0.00           C\n"
      "HETATM    7 SE   MSE A   2       4.400   4.400   1.000  1.00  0.00          SE\n"
      "HETATM    8  O   HOH A 101      20.000  20.000  20.000  1.00  0.00           O\n"
      "HETATM    9  C1  NAG A 201      30.000  30.000  30.000  1.00  0.00           C\n"
      "END\n";
  Complex cx = read_pdb_string(pdb, "het");
  ASSERT_EQ(cx.chains.size(), 1u);
  ASSERT_EQ(cx.chains[0].residues.size(), 2u);
  // Nonstandard residue with a real backbone is kept and mapped to X.
  EXPECT_EQ(cx.chains[0].sequence(), "GX");
  EXPECT_EQ(cx.chains[0].residues[1].name, "MSE");
}

TEST(PdbReader, InsertionCodesReindexDensely) {
  std::string pdb =
      "ATOM      1  CA  GLY A  99       0.000   0.000   0.000  1.00  0.00           C\n"
      "ATOM      2  N   GLY A  99       1.100   0.000   0.000  1.00  0.00           N\n"
      "ATOM      3  C   GLY A  99       2.100   0.000   0.000  1.00  0.00           C\n"
      "ATOM      4  CA  GLY A 100A      4.000   0.000   0.000  1.00  0.00           C\n"
      "ATOM      5  N   GLY A 100A      5.100   0.000   0.000  1.00  0.00           N\n"
      "ATOM      6  C   GLY A 100A      6.100   0.000   0.000  1.00  0.00           C\n"
      "END\n";
  Complex cx = read_pdb_string(pdb, "ins");
  ASSERT_EQ(cx.chains[0].residues.size(), 2u);
  EXPECT_EQ(cx.chains[0].residues[0].pos, 1);
  EXPECT_EQ(cx.chains[0].residues[0].auth_seq, "99");
  EXPECT_EQ(cx.chains[0].residues[1].pos, 2);
  EXPECT_EQ(cx.chains[0].residues[1].auth_seq, "100A");
}

TEST(Readers, ErrorCases) {
  try {
    read_pdb_string("END\n", "empty");
    FAIL() << "expected EmptyComplex";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_complex);
  }
  try {
    read_pdb_string("ATOM      1  N   GLY A   1       x.xxx   0.000   0.000\n", "bad");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
  }
  try {
    read_mmcif_string("data_x\n_entry.id x\n", "nocif");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
  }
}

TEST(Readers, SyntheticRoundTripThroughPdb) {
  Complex cx = testsupport::two_chain_complex("rt", 12, 10);
  Complex back = read_pdb_string(testsupport::write_pdb(cx), "rt");
  ASSERT_EQ(back.chains.size(), 2u);
  ASSERT_EQ(back.chains[0].residues.size(), 12u);
  ASSERT_EQ(back.chains[1].residues.size(), 10u);
  EXPECT_EQ(back.chains[0].sequence(), cx.chains[0].sequence());
  EXPECT_EQ(back.chains[1].sequence(), cx.chains[1].sequence());
  for (size_t ri = 0; ri < 12; ++ri) {
    const auto& a = cx.chains[0].residues[ri];
    const auto& b = back.chains[0].residues[ri];
    ASSERT_EQ(a.atoms.size(), b.atoms.size());
    for (size_t k = 0; k < a.atoms.size(); ++k) {
      EXPECT_EQ(a.atoms[k].name, b.atoms[k].name);
      EXPECT_NEAR(a.atoms[k].pos.x, b.atoms[k].pos.x, 5e-4);  // 3-decimal PDB fields
      EXPECT_NEAR(a.atoms[k].pos.y, b.atoms[k].pos.y, 5e-4);
      EXPECT_NEAR(a.atoms[k].pos.z, b.atoms[k].pos.z, 5e-4);
    }
  }
}

TEST(ComplexJson, ExactRoundTrip) {
  Complex cx = testsupport::two_chain_complex("json", 8, 6);
  cx.chains[0].residues[0].atoms[0].pos = {0.1, -2.3456789012345, 1e-7};
  Json j = complex_to_json(cx);
  std::string text = j.dump();
  Complex back = complex_from_json(Json::parse(text));
  EXPECT_EQ(cx, back);  // bit-exact doubles through serialization
}

TEST(Cdr, LoadValidateMask) {
  Complex cx = testsupport::two_chain_complex("ab", 20, 15);
  auto ann = annotation_from_json(Json::parse(
      R"({"loops": {"H1": {"chain": "A", "start": 3, "end": 7},
                    "H2": {"chain": "A", "start": 10, "end": 12}},
          "hotspots": [{"chain": "B", "pos": 2}],
          "lddt": 0.74})"));
  validate_annotation(ann, cx);
  EXPECT_EQ(ann.loops_present(), (std::vector<std::string>{"H1", "H2"}));
  ASSERT_TRUE(ann.lddt.has_value());

  Complex masked = apply_cdr_mask(cx, ann);
  for (int p = 3; p <= 7; ++p) EXPECT_EQ(masked.chains[0].residues[p - 1].aa, 'X');
  EXPECT_EQ(masked.chains[0].residues[1].aa, cx.chains[0].residues[1].aa);
  EXPECT_EQ(masked.chains[1].residues, cx.chains[1].residues);
  for (size_t ri = 0; ri < 20; ++ri)
    EXPECT_EQ(masked.chains[0].residues[ri].atoms, cx.chains[0].residues[ri].atoms);
  EXPECT_EQ(apply_cdr_mask(masked, ann), masked);  // idempotent
}

TEST(Cdr, ValidationErrors) {
  Complex cx = testsupport::two_chain_complex("abv", 10, 8);
  auto bad_chain = annotation_from_json(Json::parse(
      R"({"loops": {"H1": {"chain": "Z", "start": 1, "end": 3}}})"));
  try {
    validate_annotation(bad_chain, cx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_chain);
  }
  auto bad_range = annotation_from_json(Json::parse(
      R"({"loops": {"H1": {"chain": "A", "start": 8, "end": 11}}})"));
  try {
    validate_annotation(bad_range, cx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::out_of_range);
  }
  auto overlap = annotation_from_json(Json::parse(
      R"({"loops": {"H1": {"chain": "A", "start": 2, "end": 5},
                    "H2": {"chain": "A", "start": 5, "end": 7}}})"));
  try {
    validate_annotation(overlap, cx);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::overlapping_loops);
  }
}

TEST(Readers, PathHelpers) {
  EXPECT_EQ(structure_id_from_path("/a/b/8jrk.cif"), "8jrk");
  EXPECT_EQ(structure_id_from_path("x.pdb"), "x");
  EXPECT_EQ(structure_id_from_path("dir/name.tar.gz"), "name");
}

}  // namespace
