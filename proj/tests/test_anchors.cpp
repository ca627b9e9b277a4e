#include <bit>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "proteotask/anchors.hpp"
#include "support/synthetic.hpp"

namespace pt = proteotask;
namespace ts = testsupport;

namespace {

pt::EmbeddingTable tiny_table() {
  pt::EmbeddingTable t;
  t.d_gen = 3;
  int k = 0;
  for (char aa : pt::kAaAlphabet) {
    t.rows[aa] = {1.0 + k, 0.5 * k, -0.25 * k};
    ++k;
  }
  t.rows['A'] = {1.0, 0.0, 0.0};
  t.mask_row = {-9.0, -9.0, -9.0};
  return t;
}

pt::ProjectionMatrix tiny_proj() {
  pt::ProjectionMatrix w;
  w.d_gen = 3;
  w.d_llm = 2;
  w.values = {1.0, 0.0,
              0.0, 1.0,
              1.0, 1.0};
  return w;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<uint64_t>(a[i]) != std::bit_cast<uint64_t>(b[i])) return false;
  return true;
}

std::vector<double> random_vec(pt::Rng& rng, size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST(Init, DeterministicSeededAndBounded) {
  auto a = pt::init_params(8, 4, 77);
  auto b = pt::init_params(8, 4, 77);
  auto c = pt::init_params(8, 4, 78);

  ASSERT_EQ(a.table.rows.size(), 20u);
  ASSERT_EQ(a.table.mask_row.size(), 8u);
  ASSERT_EQ(a.proj.values.size(), 32u);
  for (char aa : pt::kAaAlphabet) {
    ASSERT_EQ(a.table.rows.at(aa).size(), 8u);
    EXPECT_TRUE(bit_equal(a.table.rows.at(aa), b.table.rows.at(aa)));
    for (double v : a.table.rows.at(aa)) {
      EXPECT_GE(v, -0.02);
      EXPECT_LE(v, 0.02);
    }
  }
  EXPECT_TRUE(bit_equal(a.proj.values, b.proj.values));
  EXPECT_FALSE(bit_equal(a.proj.values, c.proj.values));
  for (double v : a.proj.values) {
    EXPECT_GE(v, -0.02);
    EXPECT_LE(v, 0.02);
  }

  EXPECT_THROW(pt::init_params(0, 4, 1), pt::Error);
}

TEST(Io, RoundTripF64IsBitExact) {
  auto p = pt::init_params(6, 5, 2024);
  std::string path = testing::TempDir() + "anchor_params_f64.bin";
  pt::save_params(path, p, "f64");
  auto q = pt::load_params(path);

  ASSERT_EQ(q.table.d_gen, 6u);
  ASSERT_EQ(q.proj.d_llm, 5u);
  for (char aa : pt::kAaAlphabet) EXPECT_TRUE(bit_equal(p.table.rows.at(aa), q.table.rows.at(aa)));
  EXPECT_TRUE(bit_equal(p.table.mask_row, q.table.mask_row));
  EXPECT_TRUE(bit_equal(p.proj.values, q.proj.values));
}

TEST(Io, RoundTripF32StaysClose) {
  auto p = pt::init_params(6, 5, 11);
  std::string path = testing::TempDir() + "anchor_params_f32.bin";
  pt::save_params(path, p, "f32");
  auto q = pt::load_params(path);
  for (char aa : pt::kAaAlphabet) {
    const auto& pr = p.table.rows.at(aa);
    const auto& qr = q.table.rows.at(aa);
    ASSERT_EQ(pr.size(), qr.size());
    for (size_t i = 0; i < pr.size(); ++i) EXPECT_NEAR(pr[i], qr[i], 1e-8);
  }
  for (size_t i = 0; i < p.proj.values.size(); ++i)
    EXPECT_NEAR(p.proj.values[i], q.proj.values[i], 1e-8);
}

TEST(Io, LoadOrInitValidatesDims) {
  auto p = pt::init_params(4, 3, 5);
  std::string path = testing::TempDir() + "anchor_params_dims.bin";
  pt::save_params(path, p);

  auto q = pt::load_or_init_params(path, 4, 3, 99);
  EXPECT_TRUE(bit_equal(p.proj.values, q.proj.values));

  try {
    pt::load_or_init_params(path, 4, 8, 99);
    FAIL() << "expected DimMismatch";
  } catch (const pt::Error& e) {
    EXPECT_EQ(e.code(), pt::Errc::dim_mismatch);
  }

  auto fresh = pt::load_or_init_params(std::nullopt, 4, 3, 5);
  EXPECT_TRUE(bit_equal(fresh.proj.values, p.proj.values));
}

TEST(Io, RejectsCorruptFiles) {
  std::string dir = testing::TempDir();
  ts::write_file(dir + "anchor_bad_header.bin", "not json\n\x01\x02");
  try {
    pt::load_params(dir + "anchor_bad_header.bin");
    FAIL() << "expected ParseError";
  } catch (const pt::Error& e) {
    EXPECT_EQ(e.code(), pt::Errc::parse_error);
  }

  auto p = pt::init_params(3, 2, 1);
  std::string path = dir + "anchor_truncated.bin";
  pt::save_params(path, p);
  std::ifstream in(path, std::ios::binary);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  ts::write_file(path, blob.substr(0, blob.size() - 7));
  try {
    pt::load_params(path);
    FAIL() << "expected ParseError";
  } catch (const pt::Error& e) {
    EXPECT_EQ(e.code(), pt::Errc::parse_error);
  }
}

TEST(Build, HandWorkedProjection) {
  auto table = tiny_table();
  auto proj = tiny_proj();

  pt::AnchorSpec spec;
  spec.cdr_set = {1, 2, 3};
  spec.key_set = {2};
  spec.identities[2] = 'A';
  spec.hidden[2] = {2.0, 3.0};

  auto out = pt::build_anchors("GGGGG", spec, table, proj);
  ASSERT_EQ(out.k_gen, "GXAXG");
  ASSERT_EQ(out.e_gen.size(), 5u);
  EXPECT_EQ(out.e_gen[2], (std::vector<double>{3.0, 3.0, 5.0}));
  EXPECT_TRUE(bit_equal(out.e_gen[1], table.mask_row));
  EXPECT_TRUE(bit_equal(out.e_gen[3], table.mask_row));
  EXPECT_TRUE(bit_equal(out.e_gen[0], table.rows.at('G')));
  EXPECT_TRUE(bit_equal(out.e_gen[4], table.rows.at('G')));
}

TEST(Build, MaskSparsityMatchesKeySet) {
  auto table = tiny_table();
  auto proj = tiny_proj();

  pt::AnchorSpec spec;
  spec.cdr_set = {2, 3, 4, 5, 6};
  spec.key_set = {3, 5};
  spec.identities = {{3, 'W'}, {5, 'C'}};
  spec.hidden = {{3, {0.5, -0.5}}, {5, {0.0, 0.0}}};

  std::string native = "ACDEFGHIK";
  auto out = pt::build_anchors(native, spec, table, proj);

  pt::AnchorSpec empty;
  auto baseline = pt::build_anchors(native, empty, table, proj);
  for (size_t i = 0; i < native.size(); ++i) {
    if (spec.cdr_set.count(i)) continue;
    EXPECT_EQ(out.k_gen[i], baseline.k_gen[i]);
    EXPECT_TRUE(bit_equal(out.e_gen[i], baseline.e_gen[i]));
  }

  std::set<size_t> lit;
  for (size_t i : spec.cdr_set)
    if (!bit_equal(out.e_gen[i], table.mask_row)) lit.insert(i);
  EXPECT_EQ(lit, spec.key_set);
  EXPECT_EQ(out.k_gen, "ACXWXCXIK");
}

TEST(Build, ZeroProjectionGivesExactEmbeddings) {
  auto table = tiny_table();
  pt::ProjectionMatrix zero;
  zero.d_gen = 3;
  zero.d_llm = 2;
  zero.values.assign(6, 0.0);

  pt::AnchorSpec spec;
  spec.cdr_set = {0, 1};
  spec.key_set = {0, 1};
  spec.identities = {{0, 'M'}, {1, 'A'}};
  spec.hidden = {{0, {123.0, -456.0}}, {1, {0.25, 0.75}}};

  auto out = pt::build_anchors("GG", spec, table, zero);
  EXPECT_TRUE(bit_equal(out.e_gen[0], table.rows.at('M')));
  EXPECT_TRUE(bit_equal(out.e_gen[1], table.rows.at('A')));
}

TEST(Build, LinearInHiddenAndProjectionScale) {
  auto params = pt::init_params(7, 4, 31);
  pt::Rng rng(90);

  for (int trial = 0; trial < 25; ++trial) {
    auto h1 = random_vec(rng, 4, -2.0, 2.0);
    auto h2 = random_vec(rng, 4, -2.0, 2.0);
    double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);

    auto run = [&](const std::vector<double>& h, const pt::ProjectionMatrix& w) {
      pt::AnchorSpec spec;
      spec.cdr_set = {1};
      spec.key_set = {1};
      spec.identities[1] = 'K';
      spec.hidden[1] = h;
      return pt::build_anchors("AKL", spec, params.table, w).e_gen[1];
    };

    std::vector<double> combo(4);
    for (size_t i = 0; i < 4; ++i) combo[i] = a * h1[i] + b * h2[i];
    auto base = params.table.rows.at('K');
    auto ya = run(h1, params.proj);
    auto yb = run(h2, params.proj);
    auto yc = run(combo, params.proj);
    for (size_t d = 0; d < 7; ++d) {
      double expect = base[d] + a * (ya[d] - base[d]) + b * (yb[d] - base[d]);
      EXPECT_NEAR(yc[d], expect, 1e-12);
    }

    double alpha = rng.uniform(-2.0, 2.0);
    pt::ProjectionMatrix scaled = params.proj;
    for (auto& v : scaled.values) v *= alpha;
    auto ys = run(h1, scaled);
    for (size_t d = 0; d < 7; ++d)
      EXPECT_NEAR(ys[d] - base[d], alpha * (ya[d] - base[d]), 1e-12);
  }
}

TEST(Build, ErrorPaths) {
  auto table = tiny_table();
  auto proj = tiny_proj();

  auto expect_code = [&](const pt::AnchorSpec& spec, pt::Errc code) {
    try {
      pt::build_anchors("ACDEF", spec, table, proj);
      FAIL() << "expected " << pt::errc_name(code);
    } catch (const pt::Error& e) {
      EXPECT_EQ(e.code(), code);
    }
  };

  pt::AnchorSpec outside;
  outside.cdr_set = {1};
  outside.key_set = {3};
  outside.identities[3] = 'A';
  outside.hidden[3] = {0.0, 0.0};
  expect_code(outside, pt::Errc::key_outside_cdr);

  pt::AnchorSpec missing;
  missing.cdr_set = {1, 2};
  missing.key_set = {1};
  missing.identities[1] = 'A';
  expect_code(missing, pt::Errc::missing_hidden);

  pt::AnchorSpec short_hidden;
  short_hidden.cdr_set = {1};
  short_hidden.key_set = {1};
  short_hidden.identities[1] = 'A';
  short_hidden.hidden[1] = {0.0, 0.0, 0.0};
  expect_code(short_hidden, pt::Errc::dim_mismatch);

  pt::AnchorSpec masked_clamp;
  masked_clamp.cdr_set = {1};
  masked_clamp.key_set = {1};
  masked_clamp.identities[1] = 'X';
  masked_clamp.hidden[1] = {0.0, 0.0};
  expect_code(masked_clamp, pt::Errc::config_error);

  pt::AnchorSpec stray;
  stray.cdr_set = {1, 2};
  stray.key_set = {1};
  stray.identities = {{1, 'A'}};
  stray.hidden = {{1, {0.0, 0.0}}, {2, {0.0, 0.0}}};
  expect_code(stray, pt::Errc::config_error);

  pt::ProjectionMatrix wrong;
  wrong.d_gen = 2;
  wrong.d_llm = 2;
  wrong.values.assign(4, 0.0);
  pt::AnchorSpec ok;
  try {
    pt::build_anchors("ACDEF", ok, table, wrong);
    FAIL() << "expected DimMismatch";
  } catch (const pt::Error& e) {
    EXPECT_EQ(e.code(), pt::Errc::dim_mismatch);
  }
}

TEST(Build, RandomizedSpecInvariants) {
  auto params = pt::init_params(5, 3, 404);
  pt::Rng rng(405);
  std::string native;
  for (int i = 0; i < 40; ++i) native += pt::kAaAlphabet[rng.index(20)];

  pt::AnchorSpec empty;
  auto baseline = pt::build_anchors(native, empty, params.table, params.proj);

  for (int trial = 0; trial < 50; ++trial) {
    pt::AnchorSpec spec;
    size_t lo = rng.index(30), len = 1 + rng.index(10);
    for (size_t i = lo; i < lo + len; ++i) spec.cdr_set.insert(i);
    for (size_t i : spec.cdr_set) {
      if (rng.coin()) {
        spec.key_set.insert(i);
        spec.identities[i] = pt::kAaAlphabet[rng.index(20)];
        spec.hidden[i] = random_vec(rng, 3, -1.0, 1.0);
      }
    }

    auto out = pt::build_anchors(native, spec, params.table, params.proj);
    for (size_t i = 0; i < native.size(); ++i) {
      if (spec.cdr_set.count(i)) continue;
      ASSERT_TRUE(bit_equal(out.e_gen[i], baseline.e_gen[i]));
      ASSERT_EQ(out.k_gen[i], baseline.k_gen[i]);
    }
    std::set<size_t> lit;
    for (size_t i : spec.cdr_set)
      if (!bit_equal(out.e_gen[i], params.table.mask_row)) lit.insert(i);
    ASSERT_EQ(lit, spec.key_set);
    for (size_t i : spec.key_set) {
      auto expect = params.table.rows.at(spec.identities[i]);
      auto delta = params.proj.apply(spec.hidden[i]);
      for (size_t d = 0; d < 5; ++d)
        ASSERT_NEAR(out.e_gen[i][d], expect[d] + delta[d], 1e-12);
    }
  }
}

TEST(Sidecar, SpecFromComplexAndAnnotation) {
  auto cx = ts::two_chain_complex("twochain");
  pt::CdrAnnotation ann;
  ann.loops["H1"] = {"A", 4, 6};
  ann.loops["H3"] = {"A", 10, 12};

  std::string path = testing::TempDir() + "hidden_sidecar.jsonl";
  std::ostringstream lines;
  lines << R"({"structure_id":"twochain","chain":"A","pos":5,"identity":"W","hidden":[0.1,0.2]})" << "\n";
  lines << R"({"structure_id":"twochain","chain":"A","pos":11,"identity":"D","hidden":[0.3,0.4]})" << "\n";
  lines << R"({"structure_id":"other","chain":"Q","pos":1,"identity":"A","hidden":[9.0,9.0]})" << "\n";
  ts::write_file(path, lines.str());

  auto by_structure = pt::load_hidden_sidecar(path);
  ASSERT_EQ(by_structure.size(), 2u);
  const auto& hidden = by_structure.at("twochain");
  ASSERT_EQ(hidden.size(), 2u);

  auto spec = pt::make_anchor_spec(cx, ann, hidden);
  EXPECT_EQ(spec.cdr_set, (std::set<size_t>{3, 4, 5, 9, 10, 11}));
  EXPECT_EQ(spec.key_set, (std::set<size_t>{4, 10}));
  EXPECT_EQ(spec.identities.at(4), 'W');
  EXPECT_EQ(spec.hidden.at(10), (std::vector<double>{0.3, 0.4}));

  auto params = pt::init_params(4, 2, 7);
  auto out = pt::build_anchors(pt::flattened_identities(cx), spec, params.table, params.proj);
  ASSERT_EQ(out.k_gen.size(), cx.total_residues());
  EXPECT_EQ(out.k_gen[4], 'W');
  EXPECT_EQ(out.k_gen[3], 'X');

  pt::HiddenMap stray = hidden;
  stray[{"B", 2}] = {'A', {0.0, 0.0}};
  try {
    pt::make_anchor_spec(cx, ann, stray);
    FAIL() << "expected KeyOutsideCdr";
  } catch (const pt::Error& e) {
    EXPECT_EQ(e.code(), pt::Errc::key_outside_cdr);
  }
}

TEST(Sidecar, ExportedAnchorsRoundTrip) {
  auto cx = ts::two_chain_complex("twochain");
  auto params = pt::init_params(3, 2, 12);
  pt::AnchorSpec spec;
  spec.cdr_set = {0, 1};
  spec.key_set = {0};
  spec.identities[0] = 'R';
  spec.hidden[0] = {1.0, -1.0};

  auto refs = pt::flattened_refs(cx);
  auto out = pt::build_anchors(pt::flattened_identities(cx), spec, params.table, params.proj);
  std::string path = testing::TempDir() + "anchors_out.jsonl";
  pt::export_anchor_output(path, refs, out);

  std::ifstream in(path);
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::ordered_json::parse(line);
    ASSERT_EQ(j.at("chain").get<std::string>(), refs[n].chain);
    ASSERT_EQ(j.at("pos").get<int>(), refs[n].pos);
    ASSERT_EQ(j.at("e_gen").size(), 3u);
    if (n == 0) {
      EXPECT_EQ(j.at("k_gen").get<std::string>(), "R");
    } else if (n == 1) {
      EXPECT_EQ(j.at("k_gen").get<std::string>(), "X");
      EXPECT_EQ(j.at("e_gen").get<std::vector<double>>(), params.table.mask_row);
    }
    ++n;
  }
  EXPECT_EQ(n, refs.size());
}
