#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "proteotask/design_eval.hpp"
#include "support/synthetic.hpp"

using namespace proteotask;
using Json = nlohmann::ordered_json;

namespace {

// Independent recursive oracles, deliberately structured differently from the
// production iterative DP.

int brute_edit(const std::string& a, const std::string& b, size_t i, size_t j,
               std::map<std::pair<size_t, size_t>, int>& memo) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  auto key = std::make_pair(i, j);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  int best = brute_edit(a, b, i + 1, j + 1, memo) + (a[i] == b[j] ? 0 : 1);
  best = std::min(best, brute_edit(a, b, i + 1, j, memo) + 1);
  best = std::min(best, brute_edit(a, b, i, j + 1, memo) + 1);
  memo[key] = best;
  return best;
}

int brute_lcs(const std::string& a, const std::string& b, size_t i, size_t j,
              std::map<std::pair<size_t, size_t>, int>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  auto key = std::make_pair(i, j);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  int best;
  if (a[i] == b[j])
    best = brute_lcs(a, b, i + 1, j + 1, memo) + 1;
  else
    best = std::max(brute_lcs(a, b, i + 1, j, memo), brute_lcs(a, b, i, j + 1, memo));
  memo[key] = best;
  return best;
}

std::string random_seq(Rng& rng, size_t max_len, const std::string& alphabet) {
  size_t len = rng.index(max_len + 1);
  std::string s;
  for (size_t i = 0; i < len; ++i) s += alphabet[rng.index(alphabet.size())];
  return s;
}

Vec3 random_point(Rng& rng, double span) {
  return {rng.uniform(-span, span), rng.uniform(-span, span), rng.uniform(-span, span)};
}

RigidMotion random_motion(Rng& rng) {
  Eigen::Vector3d axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  axis.normalize();
  RigidMotion m;
  m.rot = Eigen::AngleAxisd(rng.uniform(-M_PI, M_PI), axis).toRotationMatrix();
  m.shift = Eigen::Vector3d(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
  return m;
}

}  // namespace

TEST(Blosum, SpotValuesSymmetryAndUnknowns) {
  EXPECT_EQ(blosum62('A', 'A'), 4);
  EXPECT_EQ(blosum62('R', 'R'), 5);
  EXPECT_EQ(blosum62('W', 'W'), 11);
  EXPECT_EQ(blosum62('A', 'R'), -1);
  EXPECT_EQ(blosum62('W', 'F'), 1);
  EXPECT_EQ(blosum62('D', 'E'), 2);
  EXPECT_EQ(blosum62('X', 'A'), -1);
  EXPECT_EQ(blosum62('A', 'X'), -1);
  EXPECT_EQ(blosum62('X', 'X'), -1);
  for (char a : kAaAlphabet)
    for (char b : kAaAlphabet) EXPECT_EQ(blosum62(a, b), blosum62(b, a)) << a << b;
}

TEST(Align, EqualLengthMismatchStaysGapFree) {
  Alignment aln = global_align("AAAA", "AATA");
  EXPECT_EQ(aln.a, "AAAA");
  EXPECT_EQ(aln.b, "AATA");

  ResidueMetrics rm = residue_metrics("AAAA", "AATA");
  EXPECT_DOUBLE_EQ(rm.pos_acc, 0.75);
  EXPECT_DOUBLE_EQ(rm.precision, 0.75);
  EXPECT_DOUBLE_EQ(rm.recall, 0.75);
  EXPECT_DOUBLE_EQ(rm.f1, 0.75);
}

TEST(Align, AffineGapScoreAndDeterminism) {
  Alignment aln = global_align("ACDEFG", "ACFG");
  EXPECT_EQ(aln.a.size(), aln.b.size());
  std::string b_nogap = aln.b;
  b_nogap.erase(std::remove(b_nogap.begin(), b_nogap.end(), '-'), b_nogap.end());
  EXPECT_EQ(b_nogap, "ACFG");
  int expected = blosum62('A', 'A') + blosum62('C', 'C') + kGapOpen + kGapExtend +
                 blosum62('F', 'F') + blosum62('G', 'G');
  EXPECT_EQ(aln.score, expected);

  Alignment again = global_align("ACDEFG", "ACFG");
  EXPECT_EQ(aln.a, again.a);
  EXPECT_EQ(aln.b, again.b);

  Alignment empty = global_align("", "ACE");
  EXPECT_EQ(empty.a, "---");
  EXPECT_EQ(empty.b, "ACE");
  EXPECT_EQ(empty.score, kGapOpen + 2 * kGapExtend);
}

TEST(Align, IdenticalAlignsWithoutGaps) {
  ResidueMetrics rm = residue_metrics("ARNDC", "ARNDC");
  EXPECT_DOUBLE_EQ(rm.pos_acc, 1.0);
  EXPECT_DOUBLE_EQ(rm.f1, 1.0);
  double expect = (4 + 5 + 6 + 6 + 9) / 5.0;
  EXPECT_DOUBLE_EQ(rm.blosum62_mean, expect);
  EXPECT_DOUBLE_EQ(residue_metrics("AR", "AR").blosum62_mean, 4.5);
}

TEST(SeqMetrics, WorkedExamples) {
  SequenceMetrics m = sequence_metrics("kitten", "sitting");
  EXPECT_DOUBLE_EQ(m.emr, 0.0);
  EXPECT_NEAR(m.edit_sim, 1.0 - 3.0 / 7.0, 1e-12);
  EXPECT_NEAR(m.lcs_norm, 4.0 / 7.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.length_match, 0.0);

  SequenceMetrics same = sequence_metrics("ACDE", "ACDE");
  EXPECT_DOUBLE_EQ(same.emr, 1.0);
  EXPECT_DOUBLE_EQ(same.edit_sim, 1.0);
  EXPECT_DOUBLE_EQ(same.lcs_norm, 1.0);
  EXPECT_DOUBLE_EQ(same.length_match, 1.0);

  SequenceMetrics empty = sequence_metrics("", "ACE");
  EXPECT_DOUBLE_EQ(empty.edit_sim, 0.0);
  EXPECT_DOUBLE_EQ(empty.lcs_norm, 0.0);
  EXPECT_DOUBLE_EQ(empty.length_match, 0.0);

  EXPECT_THROW(sequence_metrics("A", ""), Error);
}

TEST(SeqMetrics, MatchesBruteForceOracles) {
  Rng rng(777);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string a = random_seq(rng, 12, "ACGT");
    std::string b = random_seq(rng, 12, "ACGT");
    std::map<std::pair<size_t, size_t>, int> memo_e, memo_l;
    int de = brute_edit(a, b, 0, 0, memo_e);
    int lc = brute_lcs(a, b, 0, 0, memo_l);
    EXPECT_EQ(edit_distance(a, b), de) << a << " vs " << b;
    EXPECT_EQ(lcs_length(a, b), lc) << a << " vs " << b;
    if (!b.empty()) {
      SequenceMetrics m = sequence_metrics(a, b);
      double want_sim = 1.0 - static_cast<double>(de) / std::max(a.size(), b.size());
      EXPECT_DOUBLE_EQ(m.edit_sim, want_sim);
      EXPECT_DOUBLE_EQ(m.lcs_norm, static_cast<double>(lc) / b.size());
    }
  }
}

TEST(Detection, SetArithmeticAndDegenerates) {
  CdrPrediction gt;
  gt.loop_indices["H1"] = {10, 11, 12, 13, 14};

  CdrPrediction exact = gt;
  DetectionMetrics m = detection_metrics(exact, gt);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.set_match, 1.0);
  EXPECT_FALSE(m.degenerate_precision);

  CdrPrediction partial;
  partial.loop_indices["H1"] = {10, 11, 12, 99};
  m = detection_metrics(partial, gt);
  EXPECT_DOUBLE_EQ(m.recall, 0.6);
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.set_match, 0.0);

  CdrPrediction empty;
  m = detection_metrics(empty, gt);
  EXPECT_DOUBLE_EQ(m.recall, 0.0);
  EXPECT_DOUBLE_EQ(m.precision, 0.0);
  EXPECT_TRUE(m.degenerate_precision);

  gt.loop_indices["H2"] = {30, 31};
  CdrPrediction half = gt;
  half.loop_indices["H2"] = {30, 31, 32};
  m = detection_metrics(half, gt);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_NEAR(m.precision, (1.0 + 2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.set_match, 0.5);

  CdrPrediction no_gt;
  EXPECT_THROW(detection_metrics(exact, no_gt), Error);

  CdrPrediction bad;
  bad.loop_indices["H1"] = {1, 2};
  bad.loop_sequences["H1"] = "ACD";
  EXPECT_THROW(validate_prediction(bad), Error);
}

TEST(Aar, RegionFractionAndDelta) {
  EXPECT_DOUBLE_EQ(aar("ACDEF", "ACDEF", {0, 1, 2, 3, 4}), 1.0);
  EXPECT_DOUBLE_EQ(aar("ACDEF", "ACDEA", {3, 4}), 0.5);
  EXPECT_DOUBLE_EQ(aar("A", "C", {0}), 0.0);
  EXPECT_THROW(aar("A", "C", {}), Error);
  EXPECT_THROW(aar("A", "C", {5}), Error);

  EXPECT_NEAR(if_aar_delta(0.1506, 0.1927), 0.0421, 1e-12);
  EXPECT_NEAR(100.0 * if_aar_delta(0.1506, 0.1927), 4.21, 0.01);
  EXPECT_NEAR(100.0 * if_aar_delta(0.6504, 0.1973), -45.31, 0.01);
  EXPECT_DOUBLE_EQ(if_aar_delta(0.3, 0.3), 0.0);
}

TEST(Rmsd, RigidMotionInvariance) {
  Rng rng(2025);
  for (int trial = 0; trial < 20; ++trial) {
    size_t n = 4 + rng.index(47);
    StructurePair pair;
    for (size_t i = 0; i < n; ++i) {
      Vec3 p = random_point(rng, 30.0);
      pair.ref_ca.push_back(p);
      pair.gen_ca.push_back(p);
      pair.tags.push_back(RegionTag::designed);
    }
    RigidMotion m = random_motion(rng);
    for (auto& p : pair.gen_ca) p = m.apply(p);

    std::set<size_t> all;
    for (size_t i = 0; i < n; ++i) all.insert(i);
    EXPECT_LT(rmsd_ca(pair, all), 1e-6);
    EXPECT_LT(rmsd_ca(pair, all, AlignFrame::region), 1e-6);
  }
}

TEST(Rmsd, TwoPointWorkedExampleAndErrors) {
  StructurePair pair;
  pair.ref_ca = {{0, 0, 0}, {1, 0, 0}};
  pair.gen_ca = {{0, 0, 0}, {3, 0, 0}};
  pair.tags = {RegionTag::designed, RegionTag::designed};
  EXPECT_NEAR(rmsd_ca(pair, {0, 1}), 1.0, 1e-9);

  StructurePair ident;
  ident.ref_ca = {{0, 0, 0}, {1, 2, 3}, {4, 5, 6}};
  ident.gen_ca = ident.ref_ca;
  ident.tags.assign(3, RegionTag::context);
  EXPECT_NEAR(rmsd_ca(ident, {0, 1, 2}), 0.0, 1e-9);

  StructurePair tiny;
  tiny.ref_ca = {{0, 0, 0}};
  tiny.gen_ca = {{1, 0, 0}};
  tiny.tags = {RegionTag::designed};
  try {
    rmsd_ca(tiny, {0});
    FAIL() << "expected TooFewPoints";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_few_points);
  }
  EXPECT_THROW(rmsd_ca(ident, {}), Error);
  EXPECT_THROW(rmsd_ca(ident, {9}), Error);
}

TEST(Rmsd, NeverUsesReflection) {
  // A chiral 4-point frame against its mirror image: a proper rotation cannot
  // superpose them, so the RMSD must stay clearly positive.
  StructurePair pair;
  pair.ref_ca = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (const auto& p : pair.ref_ca) pair.gen_ca.push_back({-p.x, p.y, p.z});
  pair.tags.assign(4, RegionTag::designed);
  EXPECT_GT(rmsd_ca(pair, {0, 1, 2, 3}), 0.1);
}

TEST(Clash, BoundariesAndSmallCases) {
  StructurePair pair;
  pair.gen_ca = {{0, 0, 0}, {3.8, 0, 0}, {3.8, 3.0, 0}, {50, 50, 50}};
  pair.ref_ca = pair.gen_ca;
  pair.tags = {RegionTag::designed, RegionTag::context, RegionTag::designed, RegionTag::context};

  // Adjacent indices are excluded, so the only designed-designed pair is
  // (0,2) at 4.84 and the only mixed pair is (0,3), far away.
  ClashCounts cc = clash_counts(pair);
  EXPECT_EQ(cc.pairs_in, 1u);
  EXPECT_EQ(cc.pairs_out, 1u);
  EXPECT_DOUBLE_EQ(cc.clash_in, 0.0);
  EXPECT_DOUBLE_EQ(cc.clash_out, 0.0);

  pair.gen_ca[2] = {3.0, 0, 0.1};  // 3.0 from designed 0, well under threshold
  cc = clash_counts(pair);
  EXPECT_DOUBLE_EQ(cc.clash_in, 1.0);

  StructurePair boundary;
  boundary.gen_ca = {{0, 0, 0}, {100, 0, 0}, {3.66, 0, 0}};
  boundary.ref_ca = boundary.gen_ca;
  boundary.tags = {RegionTag::designed, RegionTag::context, RegionTag::designed};
  EXPECT_DOUBLE_EQ(clash_counts(boundary).clash_in, 0.0);
  boundary.gen_ca[2] = {3.65, 0, 0};
  EXPECT_DOUBLE_EQ(clash_counts(boundary).clash_in, 1.0);

  StructurePair lone;
  lone.gen_ca = {{0, 0, 0}};
  lone.ref_ca = lone.gen_ca;
  lone.tags = {RegionTag::designed};
  cc = clash_counts(lone);
  EXPECT_EQ(cc.pairs_in, 0u);
  EXPECT_DOUBLE_EQ(cc.clash_in, 0.0);
}

TEST(Clash, MatchesBruteForceOnRandomClouds) {
  Rng rng(31337);
  for (int trial = 0; trial < 25; ++trial) {
    size_t n = 2 + rng.index(79);
    StructurePair pair;
    for (size_t i = 0; i < n; ++i) {
      pair.gen_ca.push_back(random_point(rng, 8.0));
      pair.tags.push_back(rng.coin() ? RegionTag::designed : RegionTag::context);
    }
    pair.ref_ca = pair.gen_ca;

    size_t in_hits = 0, in_pairs = 0, out_hits = 0, out_pairs = 0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 2; j < n; ++j) {
        bool di = pair.tags[i] == RegionTag::designed;
        bool dj = pair.tags[j] == RegionTag::designed;
        if (!di && !dj) continue;
        bool clash = dist(pair.gen_ca[i], pair.gen_ca[j]) < kClashDist;
        if (di && dj) {
          ++in_pairs;
          if (clash) ++in_hits;
        } else {
          ++out_pairs;
          if (clash) ++out_hits;
        }
      }
    }
    ClashCounts cc = clash_counts(pair);
    EXPECT_EQ(cc.pairs_in, in_pairs);
    EXPECT_EQ(cc.pairs_out, out_pairs);
    double want_in = in_pairs ? static_cast<double>(in_hits) / in_pairs : 0.0;
    double want_out = out_pairs ? static_cast<double>(out_hits) / out_pairs : 0.0;
    EXPECT_DOUBLE_EQ(cc.clash_in, want_in);
    EXPECT_DOUBLE_EQ(cc.clash_out, want_out);
  }
}

TEST(Jsd, ToyValueIdentityAndSymmetry) {
  std::array<double, 2> p{1.0, 0.0}, q{0.5, 0.5};
  EXPECT_NEAR(jsd(p, q), 0.311278, 1e-3);
  EXPECT_NEAR(jsd(p, q), jsd(q, p), 1e-12);
  EXPECT_NEAR(jsd(p, p), 0.0, 1e-12);
  EXPECT_NEAR(jsd(q, q), 0.0, 1e-12);

  std::array<double, 2> r{0.0, 1.0};
  EXPECT_NEAR(jsd(p, r), 1.0, 1e-12);

  std::array<double, 36> h1{}, h2{};
  h1[0] = 1.0;
  h2[35] = 1.0;
  EXPECT_NEAR(jsd(h1, h2), 1.0, 1e-12);
  EXPECT_NEAR(jsd(h1, h1), 0.0, 1e-12);
}

TEST(Jsd, HistogramBinningWrapsAtBoundary) {
  auto h = dihedral_histogram({-180.0, -179.9, 179.9, 180.0, 0.0});
  EXPECT_NEAR(h[0], 3.0 / 5.0, 1e-12);  // -180, -179.9, and the +180 wrap
  EXPECT_NEAR(h[35], 1.0 / 5.0, 1e-12);
  EXPECT_NEAR(h[18], 1.0 / 5.0, 1e-12);
  double total = 0;
  for (double v : h) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Jsd, BackbonePipelineOnSyntheticChains) {
  Chain helix = testsupport::build_chain("A", testsupport::helix_spec(10));
  Chain coil = testsupport::build_chain("A", testsupport::coil_spec(10, 5));

  auto bb_of = [](const Chain& ch) {
    std::vector<std::optional<std::array<Vec3, 3>>> bb;
    for (const auto& r : ch.residues)
      bb.push_back(std::array<Vec3, 3>{r.find_atom("N")->pos, r.find_atom("CA")->pos,
                                       r.find_atom("C")->pos});
    return bb;
  };

  DihedralSet helix_set = collect_dihedrals(bb_of(helix));
  ASSERT_EQ(helix_set.phi.size(), 9u);
  for (double v : helix_set.phi) EXPECT_NEAR(v, -57.0, 1e-6);
  for (double v : helix_set.psi) EXPECT_NEAR(v, -47.0, 1e-6);

  EXPECT_NEAR(jsd_between(helix_set, helix_set), 0.0, 1e-12);
  DihedralSet coil_set = collect_dihedrals(bb_of(coil));
  double d = jsd_between(helix_set, coil_set);
  EXPECT_GT(d, 0.5);
  EXPECT_LE(d, 1.0);

  auto broken = bb_of(helix);
  broken[4] = std::nullopt;
  EXPECT_EQ(collect_dihedrals(broken).phi.size(), 7u);

  DihedralSet none;
  EXPECT_THROW(jsd_between(none, helix_set), Error);

  StructurePair pair;
  pair.ref_ca = {{0, 0, 0}};
  pair.gen_ca = {{0, 0, 0}};
  pair.tags = {RegionTag::context};
  try {
    jsd_backbone(pair);
    FAIL() << "expected InsufficientBackbone";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_backbone);
  }
}

TEST(PairStructures, AlignsSharedResiduesAndTagsLoops) {
  Complex ref = testsupport::two_chain_complex("evalref");
  Complex gen = ref;

  CdrAnnotation ann;
  ann.loops["H1"] = {"A", 4, 8};
  ann.loops["H3"] = {"A", 12, 15};

  gen.chains[0].residues[4].aa = 'A';  // inside H1
  gen.chains[1].residues.erase(gen.chains[1].residues.begin());  // drop B:1

  PairedResidues pr = pair_structures(ref, gen, ann);
  EXPECT_EQ(pr.refs.size(), ref.total_residues() - 1);
  ASSERT_EQ(pr.loop_regions.count("H1"), 1u);
  ASSERT_EQ(pr.loop_regions.count("H3"), 1u);
  EXPECT_EQ(pr.loop_regions["H1"].size(), 5u);
  EXPECT_EQ(pr.loop_regions["H3"].size(), 4u);

  size_t designed = 0;
  for (auto t : pr.geometry.tags)
    if (t == RegionTag::designed) ++designed;
  EXPECT_EQ(designed, 9u);

  double a = aar(pr.gen_seq, pr.ref_seq, pr.loop_regions["H1"]);
  EXPECT_DOUBLE_EQ(a, 0.8);
  EXPECT_DOUBLE_EQ(aar(pr.gen_seq, pr.ref_seq, pr.loop_regions["H3"]), 1.0);
}

TEST(Evaluate, EndToEndReportAndAggregation) {
  Complex ref = testsupport::two_chain_complex("evalpair");
  Complex gen = ref;
  CdrAnnotation ann;
  ann.loops["H1"] = {"A", 4, 8};
  ann.loops["H3"] = {"A", 12, 15};

  EvalOptions opt;
  opt.prediction = ground_truth_prediction(ref, ann);
  opt.if_aar = 0.8;

  Json rep = evaluate_pair(ref, gen, ann, opt);
  EXPECT_EQ(rep.at("aligned_residues").get<size_t>(), ref.total_residues());
  ASSERT_TRUE(rep.contains("loops"));
  ASSERT_TRUE(rep.at("loops").contains("H1"));
  EXPECT_DOUBLE_EQ(rep["loops"]["H1"]["aar"].get<double>(), 1.0);
  EXPECT_NEAR(rep["loops"]["H1"]["rmsd_global"].get<double>(), 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(rep["cdr"]["aar"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(rep["cdr"]["emr"].get<double>(), 1.0);
  EXPECT_NEAR(rep["jsd_bb_all"].get<double>(), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(rep["detection"]["set_match"].get<double>(), 1.0);
  EXPECT_NEAR(rep["if_aar_delta"].get<double>(), -0.2, 1e-12);

  Json rep2 = rep;
  rep2["cdr"]["aar"] = 0.5;
  Json agg = aggregate_eval({rep, rep2});
  EXPECT_EQ(agg.at("pairs").get<size_t>(), 2u);
  EXPECT_DOUBLE_EQ(agg["mean"]["cdr"]["aar"].get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(agg["mean"]["loops"]["H1"]["aar"].get<double>(), 1.0);

  std::string text = eval_report_text(agg);
  EXPECT_NE(text.find("H1"), std::string::npos);
  EXPECT_NE(text.find("all"), std::string::npos);
  EXPECT_NE(text.find("clash_in"), std::string::npos);

  CdrPrediction parsed = prediction_from_json(Json::parse(
      R"({"loops":{"H1":{"indices":[4,5,6,7,8],"sequence":"FGHIK"}}})"));
  EXPECT_EQ(parsed.loop_indices["H1"].size(), 5u);
  EXPECT_EQ(parsed.loop_sequences["H1"], "FGHIK");
}
