#include "scorelint/scorelint.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"
#include "support/random_scores.hpp"

#include <gtest/gtest.h>

using namespace scorelint;
using build::measure;
using build::note;

namespace {

const InstrumentConstraints& instrument(const char* name) {
  const auto* c = default_constraint_table().find_canonical(name);
  if (c == nullptr) throw std::runtime_error(name);
  return *c;
}

Part one_measure(std::vector<NoteEvent> notes, KeySignature key = {}) {
  return build::part("X", "X", {measure(0, std::move(notes), {4, 4}, key)});
}

}  // namespace

// ---------------------------------------------------------------------------
// Playability

TEST(Playability, PitchRange) {
  auto p = one_measure({note(0, 1, {72}), note(1, 1, {74}), note(2, 1, {59})});
  EXPECT_EQ(pitch_range_score(p, instrument("Flute")), Rational(200, 3));
  EXPECT_EQ(format_fixed(*pitch_range_score(p, instrument("Flute"))), "66.67");
  EXPECT_EQ(pitch_range_score(one_measure({note(0, 1, {60})}), instrument("Flute")), Rational(100));
  EXPECT_FALSE(pitch_range_score(one_measure({}), instrument("Flute")).has_value());
}

TEST(Playability, PitchSpan) {
  const auto& piano = instrument("Piano");
  EXPECT_EQ(pitch_span_score(one_measure({note(0, 1, {60, 76})}), piano), Rational(0));
  EXPECT_EQ(pitch_span_score(one_measure({note(0, 1, {60, 72})}), piano), Rational(100));
  EXPECT_EQ(pitch_span_score(one_measure({note(0, 1, {60, 75})}), piano), Rational(100));
  EXPECT_EQ(pitch_span_score(one_measure({note(0, 1, {60, 72}), note(1, 1, {60, 76})}), piano), Rational(50));
  EXPECT_FALSE(pitch_span_score(one_measure({note(0, 1, {60})}), piano).has_value());
  InstrumentConstraints unbounded = permissive_constraints("Synth");
  EXPECT_EQ(pitch_span_score(one_measure({note(0, 1, {20, 110})}), unbounded), Rational(100));
}

TEST(Playability, Monophonic) {
  std::vector<NoteEvent> notes;
  for (int i = 0; i < 10; ++i) notes.push_back(i < 2 ? note(Rational(i, 2), Rational(1, 2), {72, 76})
                                                     : note(Rational(i, 2), Rational(1, 2), {72}));
  auto flute = build::part("F", "Flute", {measure(0, notes, {5, 4})});
  EXPECT_EQ(monophonic_score(flute, instrument("Flute")), Rational(80));
  EXPECT_EQ(monophonic_score(one_measure({note(0, 1, {72}), note(1, 1, {74})}), instrument("Flute")), Rational(100));
  EXPECT_FALSE(monophonic_score(one_measure({note(0, 1, {60})}), instrument("Piano")).has_value());
}

TEST(Playability, MonophonicCountsSustainedOverlap) {
  // the second onset falls while the first note still sounds
  auto p = one_measure({note(0, 2, {72}), note(1, 1, {74})});
  EXPECT_EQ(monophonic_score(p, instrument("Flute")), Rational(50));
}

TEST(Playability, RhythmicOverlap) {
  const auto& flute = instrument("Flute");
  EXPECT_EQ(rhythmic_overlap_score(one_measure({note(0, Rational(3, 2), {72}), note(1, 1, {74})}), flute), Rational(0));
  EXPECT_EQ(rhythmic_overlap_score(one_measure({note(0, 1, {72}), note(1, 1, {74})}), flute), Rational(100));
  EXPECT_EQ(rhythmic_overlap_score(
                one_measure({note(0, 1, {72}), note(1, Rational(3, 2), {74}), note(2, 1, {76})}), flute),
            Rational(50));
  EXPECT_FALSE(rhythmic_overlap_score(one_measure({note(0, 1, {72})}), flute).has_value());
  EXPECT_FALSE(rhythmic_overlap_score(one_measure({note(0, 1, {60}), note(0, 1, {64})}), instrument("Piano")));
}

TEST(Playability, TiesAreNotOverlaps) {
  auto a = note(0, 2, {72});
  a.tie_forward = true;
  auto b = note(2, 2, {72});
  b.tie_backward = true;
  auto c = note(0, 1, {74});
  auto p = build::part("F", "Flute", {measure(0, {a, b}), measure(1, {c})});
  EXPECT_EQ(rhythmic_overlap_score(p, instrument("Flute")), Rational(100));
}

TEST(Playability, TotalIsMacroAverage) {
  PartPlayability flute{"1", "Flute", true, true, Rational(100), std::nullopt, Rational(80), Rational(100)};
  PartPlayability piano{"2", "Piano", true, true, Rational(100), Rational(0), std::nullopt, std::nullopt};
  EXPECT_EQ(total_playability({flute, piano}), Rational(76));
  PartPlayability only{"1", "Flute", true, true, Rational(100), std::nullopt, Rational(100), Rational(100)};
  EXPECT_EQ(total_playability({only}), Rational(100));
  EXPECT_THROW(total_playability({}), NoApplicableMetrics);
}

TEST(Playability, UnknownInstrumentFallsBackWithWarning) {
  auto s = build::score({build::part("1", "Kazoo", {measure(0, {note(0, 4, {10})})})});
  auto r = evaluate_playability(s, default_constraint_table());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_FALSE(r.parts[0].resolved);
  EXPECT_EQ(r.parts[0].pitch_range, Rational(100));
}

// ---------------------------------------------------------------------------
// Readability

TEST(Readability, Jitter) {
  EXPECT_EQ(rhythmic_jitter_score(one_measure({note(0, Rational(1, 32), {60})})), Rational(0));
  EXPECT_EQ(rhythmic_jitter_score(one_measure({note(0, Rational(1, 16), {60})})), Rational(0));
  EXPECT_EQ(rhythmic_jitter_score(one_measure({note(0, Rational(1, 8), {60})})), Rational(100));
  EXPECT_EQ(rhythmic_jitter_score(one_measure({note(0, 1, {60}), note(1, 1, {62}), note(2, 2, {64})})), Rational(100));
  EXPECT_EQ(rhythmic_jitter_score(one_measure({note(Rational(1, 48), 1, {60})})), Rational(0));
}

TEST(Readability, TupletGridExemption) {
  std::vector<NoteEvent> notes;
  for (int k = 0; k < 3; ++k) {
    auto e = note(Rational(k, 3), Rational(1, 3), {60 + k});
    e.tuplet = TupletInfo{3, 2, Rational(0)};
    notes.push_back(e);
  }
  auto p = one_measure(notes);
  EXPECT_EQ(rhythmic_jitter_score(p), Rational(100));
  EXPECT_EQ(rhythmic_jitter_score(p, JitterOptions{true}), Rational(100, 3));
}

TEST(Readability, TieComplexity) {
  std::vector<NoteEvent> notes;
  for (int i = 0; i < 10; ++i) notes.push_back(note(Rational(i, 4), Rational(1, 4), {60}));
  notes[3].tie_forward = true;
  notes[4].tie_backward = true;
  EXPECT_EQ(tie_complexity_score(one_measure(notes)), Rational(80));
  for (auto& n : notes) n.tie_forward = true;
  EXPECT_EQ(tie_complexity_score(one_measure(notes)), Rational(0));
}

TEST(Readability, AccidentalConsistency) {
  auto c_major = KeySignature::from_tonic({Step::C, 0}, Mode::major);
  auto p = one_measure({note(0, 1, {60}), note(1, 1, {64}), note(2, 1, {67}), note(3, 1, {66})}, c_major);
  EXPECT_EQ(accidental_consistency_score(p), Rational(75));
  auto a_minor = KeySignature::from_tonic({Step::A, 0}, Mode::minor);
  std::vector<NoteEvent> line;
  int midis[] = {69, 71, 72, 74, 76, 77, 68};
  for (int i = 0; i < 7; ++i) line.push_back(note(Rational(i, 2), Rational(1, 2), {midis[i]}));
  auto minor = one_measure(line, a_minor);
  EXPECT_EQ(accidental_consistency_score(minor), Rational(600, 7));
  EXPECT_EQ(format_fixed(*accidental_consistency_score(minor)), "85.71");
}

TEST(Readability, EnharmonicDirection) {
  auto d_major = KeySignature::from_tonic({Step::D, 0}, Mode::major);
  auto flat = note(0, 1, {70});
  flat.heads[0] = NoteHead{SpelledPitch{Step::B, -1, 4}, true};
  EXPECT_EQ(enharmonic_directionality_score(one_measure({flat}, d_major)), Rational(0));
  auto sharp = note(0, 1, {70});
  sharp.heads[0] = NoteHead{SpelledPitch{Step::A, 1, 4}, true};
  EXPECT_EQ(enharmonic_directionality_score(one_measure({sharp}, d_major)), Rational(100));
  EXPECT_EQ(enharmonic_directionality_score(one_measure({note(0, 1, {60})}, d_major)), Rational(100));
  EXPECT_EQ(enharmonic_directionality_score(one_measure({flat}, KeySignature{})), Rational(100));
}

TEST(Readability, TotalIsMacroAverage) {
  PartReadability a{"1", "A", true, Rational(100), Rational(80), Rational(100), Rational(100)};
  PartReadability b{"2", "B", true, Rational(60), Rational(100), Rational(100), Rational(100)};
  EXPECT_EQ(total_readability({a, b}), Rational(185, 2));
  EXPECT_THROW(total_readability({}), NoApplicableMetrics);
}

TEST(Readability, TranspositionCovariance) {
  gen::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Part p = gen::random_metric_part(rng);
    auto q = build::transposed(p, rng.uniform(-6, 6));
    if (!q) continue;
    EXPECT_EQ(accidental_consistency_score(p), accidental_consistency_score(*q)) << "trial " << trial;
  }
}

// ---------------------------------------------------------------------------
// Utilization

TEST(Utilization, CoverageAndDensity) {
  EXPECT_EQ(coverage_ratio(build::active_in("Horn", {2, 5, 9}, 10), 10), Rational(80));
  EXPECT_EQ(coverage_ratio(build::active_in("Horn", {0, 1, 2}, 3), 3), Rational(100));
  EXPECT_EQ(coverage_ratio(build::active_in("Horn", {}, 4), 4), Rational(0));
  EXPECT_EQ(active_density(build::active_in("Horn", {0, 1, 3, 4, 6, 8}, 10), 10), Rational(60));
  auto sparse = build::active_in("Horn", {0, 9}, 10);
  EXPECT_EQ(active_density(sparse, 10), Rational(20));
  EXPECT_EQ(coverage_ratio(sparse, 10), Rational(100));
  EXPECT_EQ(active_density(build::active_in("Horn", {}, 4), 4), Rational(0));
}

// ---------------------------------------------------------------------------
// Oracle equivalence on random parts

TEST(MetricOracles, RandomPartsMatchBruteForce) {
  gen::Rng rng(2024);
  const auto& table = default_constraint_table();
  std::vector<const InstrumentConstraints*> kinds{table.find_canonical("Flute"), table.find_canonical("Piano"),
                                                  table.find_canonical("Violin"), table.find_canonical("Trumpet")};
  for (int trial = 0; trial < 300; ++trial) {
    Part p = gen::random_metric_part(rng);
    const auto& c = *kinds[static_cast<std::size_t>(trial) % kinds.size()];
    int total = static_cast<int>(p.measures.size()) + rng.uniform(0, 3);
    EXPECT_EQ(pitch_range_score(p, c), oracle::pitch_range(p, c.lowest_midi, c.highest_midi)) << trial;
    EXPECT_EQ(pitch_span_score(p, c), oracle::pitch_span(p, c.max_span_semitones)) << trial;
    EXPECT_EQ(monophonic_score(p, c), oracle::monophonic(p, c.monophonic)) << trial;
    EXPECT_EQ(rhythmic_overlap_score(p, c), oracle::overlap(p, c.monophonic)) << trial;
    EXPECT_EQ(rhythmic_jitter_score(p), oracle::jitter(p, false)) << trial;
    EXPECT_EQ(rhythmic_jitter_score(p, JitterOptions{true}), oracle::jitter(p, true)) << trial;
    EXPECT_EQ(tie_complexity_score(p), oracle::ties(p)) << trial;
    EXPECT_EQ(accidental_consistency_score(p), oracle::accidentals(p)) << trial;
    EXPECT_EQ(enharmonic_directionality_score(p), oracle::enharmonic(p)) << trial;
    EXPECT_EQ(coverage_ratio(p, total), oracle::coverage(p, total)) << trial;
    EXPECT_EQ(active_density(p, total), oracle::density(p, total)) << trial;
    if (p.has_notes()) {
      EXPECT_LE(active_density(p, total), coverage_ratio(p, total));
    }
  }
}

TEST(MetricProperties, TranspositionLeavesMonophonyAndOverlap) {
  gen::Rng rng(99);
  const auto& flute = *default_constraint_table().find_canonical("Flute");
  for (int trial = 0; trial < 100; ++trial) {
    Part p = gen::random_metric_part(rng);
    auto q = build::transposed(p, 1);
    if (!q) continue;
    EXPECT_EQ(monophonic_score(p, flute), monophonic_score(*q, flute));
    EXPECT_EQ(rhythmic_overlap_score(p, flute), rhythmic_overlap_score(*q, flute));
  }
}

TEST(MetricProperties, AddingViolationNeverRaisesScore) {
  gen::Rng rng(5);
  const auto& flute = *default_constraint_table().find_canonical("Flute");
  for (int trial = 0; trial < 100; ++trial) {
    Part p = gen::random_metric_part(rng);
    Part q = p;
    q.measures.back().notes.push_back(note(0, Rational(1, 32), {20}));  // out of range, jittery
    auto before_range = pitch_range_score(p, flute).value_or(Rational(100));
    auto before_jitter = rhythmic_jitter_score(p).value_or(Rational(100));
    EXPECT_LE(*pitch_range_score(q, flute), before_range);
    EXPECT_LE(*rhythmic_jitter_score(q), before_jitter);
  }
}
