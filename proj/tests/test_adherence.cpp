#include "scorelint/scorelint.hpp"
#include "support/builders.hpp"

#include <gtest/gtest.h>

using namespace scorelint;

namespace {

KeySignature key(Step step, int alter, Mode mode) { return KeySignature::from_tonic({step, alter}, mode); }

class AlwaysSame : public InstrumentJudge {
 public:
  std::optional<bool> same_instrument(const std::string&, const std::string&) override { return true; }
};

}  // namespace

TEST(Adherence, KeyEquivalence) {
  auto a_minor = key(Step::A, 0, Mode::minor);
  auto c_major = key(Step::C, 0, Mode::major);
  auto g_major = key(Step::G, 0, Mode::major);
  EXPECT_EQ(key_match(a_minor, c_major).level, KeyEquivalence::relative);
  EXPECT_EQ(key_match(c_major, a_minor).level, KeyEquivalence::relative);
  EXPECT_EQ(key_match(c_major, c_major).level, KeyEquivalence::exact);
  EXPECT_FALSE(key_match(c_major, g_major).match());
  EXPECT_FALSE(key_match(g_major, c_major).match());
  EXPECT_FALSE(key_match(c_major, key(Step::C, 0, Mode::minor)).match());
}

TEST(Adherence, TimeSignatureIsLiteral) {
  EXPECT_TRUE(time_match({3, 4}, {3, 4}));
  EXPECT_FALSE(time_match({6, 8}, {3, 4}));
  EXPECT_FALSE(time_match({2, 2}, {4, 4}));
}

TEST(Adherence, TempoTolerance) {
  EXPECT_TRUE(tempo_match(100, Rational(102)).match);
  EXPECT_FALSE(tempo_match(100, Rational(103)).match);
  EXPECT_TRUE(tempo_match(100, Rational(103), Rational(1, 20)).match);
  auto missing = tempo_match(100, std::nullopt);
  EXPECT_FALSE(missing.match);
  EXPECT_EQ(missing.warnings.size(), 1u);
}

TEST(Adherence, TempoNormalizesBeatUnit) {
  // an eighth-note beat at 150 is 75 quarters per minute
  auto s = abc::parse_abc("X:1\nM:4/4\nL:1/8\nQ:1/8=150\nK:C\nCDEF GABc|\n");
  auto qpm = first_tempo(s);
  ASSERT_TRUE(qpm.has_value());
  EXPECT_EQ(*qpm, Rational(75));
  EXPECT_TRUE(tempo_match(75, qpm).match);

  auto doubled = tempo_match(75, Rational(150));
  EXPECT_FALSE(doubled.match);
  EXPECT_TRUE(doubled.near_miss);
  EXPECT_TRUE(tempo_match(150, Rational(75)).near_miss);
  EXPECT_FALSE(tempo_match(150, Rational(100)).near_miss);
}

TEST(Adherence, InstrumentAliases) {
  const auto& table = default_constraint_table();
  auto r = instrument_match({"Violoncello"}, {"Cello"}, table);
  EXPECT_EQ(r.pct, Rational(100));
  EXPECT_EQ(r.plan_set, (std::set<std::string>{"Cello"}));
  EXPECT_EQ(instrument_match({"Flute", "Violin"}, {"Flute", "Oboe"}, table).pct, Rational(100, 3));
  EXPECT_EQ(instrument_match({}, {}, table).pct, Rational(100));
  EXPECT_EQ(instrument_match({"Flute"}, {}, table).pct, Rational(0));
}

TEST(Adherence, JudgeOnlyForUnresolvedNames) {
  const auto& table = default_constraint_table();
  NullJudge null_judge;
  EXPECT_EQ(instrument_match({"Glockenspielish"}, {"Flute"}, table, &null_judge).pct, Rational(0));
  AlwaysSame yes;
  auto r = instrument_match({"Glockenspielish"}, {"Flute"}, table, &yes);
  EXPECT_EQ(r.pct, Rational(100));
  EXPECT_EQ(r.trace.back().via, "judge");
  // resolved names are never sent to the judge
  EXPECT_EQ(instrument_match({"Oboe"}, {"Flute"}, table, &yes).pct, Rational(0));
}

TEST(Adherence, EvaluateAgainstPlan) {
  const char* text =
      "X:1\nM:4/4\nL:1/8\nQ:1/4=96\nK:Am\n"
      "V:1 name=\"Violoncello\"\n"
      "[V:1] A,2B,2 C2D2|E8|\n";
  auto score = abc::parse_abc(text);
  PlanDocument plan;
  plan.n_measures = 2;
  plan.instrumentation = {"Cello"};
  MeasurePlan first;
  first.index = 0;
  first.instruments = {"Cello"};
  first.tempo_qpm = 96;
  first.time_signature = {4, 4};
  first.key_signature = key(Step::C, 0, Mode::major);
  plan.measures.push_back(first);
  auto r = evaluate_adherence(plan, score, default_constraint_table());
  EXPECT_TRUE(r.tempo.match);
  EXPECT_EQ(r.key.level, KeyEquivalence::relative);
  EXPECT_TRUE(r.time_match);
  EXPECT_EQ(r.instruments.pct, Rational(100));
  EXPECT_TRUE(r.notes.empty());
}

TEST(Adherence, MidPieceChangesAreNotes) {
  auto score = abc::parse_abc("X:1\nM:4/4\nL:1/8\nQ:1/4=96\nK:C\nCDEF GABc|[K:G][M:3/4]GABc d2|\n");
  PlanDocument plan = extract_plan(score, default_constraint_table());
  auto r = evaluate_adherence(plan, score, default_constraint_table());
  EXPECT_TRUE(r.key.match());
  EXPECT_TRUE(r.time_match);
  ASSERT_EQ(r.notes.size(), 2u);
}
