#include "scorelint/scorelint.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"
#include "support/points.hpp"
#include "support/random_scores.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace scorelint;
using gen::four_by_four;
using gen::incompressible;
using gen::random_points;

namespace {

std::vector<oracle::BruteTec> as_brute(const std::vector<TEC>& tecs) {
  std::vector<oracle::BruteTec> out;
  for (const auto& t : tecs) out.push_back({t.pattern, t.translators});
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Siatec, MatchesBruteForce) {
  gen::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    // small spans so that repeated vectors are common
    auto ps = random_points(rng, 12, 8, 6);
    EXPECT_EQ(as_brute(siatec(ps)), oracle::brute_siatec(ps)) << "trial " << trial;
  }
}

TEST(Siatec, TecInvariants) {
  gen::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    auto ps = random_points(rng, 12, 10, 8);
    for (const auto& tec : siatec(ps)) {
      EXPECT_EQ(tec.translators.front(), (Point{0, 0}));
      std::set<Point> covered;
      for (const auto& t : tec.translators)
        for (const auto& p : tec.pattern) {
          EXPECT_TRUE(std::binary_search(ps.begin(), ps.end(), p + t));
          covered.insert(p + t);
        }
      EXPECT_EQ(PointSet(covered.begin(), covered.end()), tec.covered);
    }
  }
}

TEST(Cosiatec, RepeatedPatternFixture) {
  auto r = cosiatec_cover(four_by_four());
  EXPECT_EQ(r.structure_score, Rational(16, 7));
  EXPECT_EQ(r.cover.size(), 1u);
}

TEST(Cosiatec, IncompressibleSetsScoreOne) {
  gen::Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    auto ps = incompressible(rng, rng.uniform(1, 12));
    EXPECT_EQ(cosiatec_cover(ps).structure_score, Rational(1)) << "trial " << trial;
  }
}

TEST(Cosiatec, TranslationInvariant) {
  gen::Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    auto ps = random_points(rng, 12, 12, 8);
    Point shift{rng.uniform(0, 100), rng.uniform(-20, 20)};
    auto moved = gen::translated(ps, shift);
    auto a = cosiatec_cover(ps);
    auto b = cosiatec_cover(moved);
    EXPECT_EQ(a.structure_score, b.structure_score);
    ASSERT_EQ(a.cover.size(), b.cover.size());
    for (std::size_t i = 0; i < a.cover.size(); ++i) EXPECT_EQ(a.cover[i].translators, b.cover[i].translators);
  }
}

TEST(Cosiatec, CoverPartitionsThePoints) {
  gen::Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    auto ps = random_points(rng, 20, 16, 10);
    auto r = cosiatec_cover(ps);
    std::size_t total = 0;
    for (const auto& t : r.cover) total += t.covered.size();
    EXPECT_EQ(total, ps.size());
    EXPECT_GE(r.structure_score, Rational(1));
  }
}

TEST(Cosiatec, EmptyInputThrows) { EXPECT_THROW(cosiatec_cover({}), EmptyScoreError); }

TEST(Structure, ScoreToPoints) {
  using build::note;
  auto tied = note(3, 1, {64});
  tied.tie_forward = true;
  auto cont = note(0, 1, {64});
  cont.tie_backward = true;
  auto part = build::part("1", "Piano", {build::measure(0, {note(0, 1, {60, 67}), tied}),
                                         build::measure(1, {cont, note(Rational(1, 3), 1, {62})})});
  auto ps = part_to_points(part);
  // 1/3 quarter at 16 per quarter is 5.33, rounded to 5
  EXPECT_EQ(ps, (PointSet{{0, 60}, {0, 67}, {48, 64}, {69, 62}}));
}

TEST(Structure, DecimationKeepsLowerOctave) {
  PointSet ps{{0, 48}, {0, 60}, {1, 50}, {2, 52}};
  EXPECT_EQ(decimate(ps, 3), (PointSet{{0, 48}, {1, 50}, {2, 52}}));
  EXPECT_EQ(decimate(ps, 2), (PointSet{{0, 48}, {1, 50}}));
  EXPECT_EQ(decimate(ps, 10), ps);
  auto r = structure_of_points(ps, 2);
  EXPECT_TRUE(r.decimated);
  EXPECT_EQ(r.input_points, 4u);
  EXPECT_EQ(r.points, 2u);
}

TEST(Structure, PerPartMean) {
  using build::note;
  std::vector<NoteEvent> rep;
  for (int i = 0; i < 4; ++i) rep.push_back(note(i, 1, {60}));
  auto a = build::part("1", "Flute", {build::measure(0, rep)});
  auto b = build::part("2", "Flute", {build::measure(0, {note(0, 1, {60}), note(1, 1, {61}), note(3, 1, {65})})});
  auto s = build::score({a, b});
  auto r = evaluate_structure(s, {true, kDefaultMaxStructurePoints});
  Rational sa = cosiatec_cover(part_to_points(a)).structure_score;
  Rational sb = cosiatec_cover(part_to_points(b)).structure_score;
  EXPECT_EQ(r.score, (sa + sb) / 2);
}
