#include "scorelint/scorelint.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace scorelint;

TEST(Rational, NormalizesAndCompares) {
  EXPECT_EQ(Rational(2, 4), Rational(1, 2));
  EXPECT_EQ(Rational(3, -6), Rational(-1, 2));
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_EQ(Rational(1, 3) + Rational(1, 6), Rational(1, 2));
  EXPECT_EQ(Rational(2, 3) * 3, Rational(2));
  EXPECT_TRUE(Rational(4) == 4);
  EXPECT_THROW(Rational(1, 0), std::domain_error);
}

TEST(Rational, Rounding) {
  EXPECT_EQ(format_fixed(Rational(200, 3)), "66.67");
  EXPECT_EQ(format_fixed(Rational(80)), "80.00");
  EXPECT_EQ(format_fixed(Rational(1, 8)), "0.12");   // half to even
  EXPECT_EQ(format_fixed(Rational(3, 8)), "0.38");
  EXPECT_EQ(round_half_down(Rational(5, 2)), 2);
  EXPECT_EQ(round_half_down(Rational(-5, 2)), -3);
  EXPECT_EQ(round_half_even(Rational(5, 2)), 2);
  EXPECT_EQ(round_half_even(Rational(7, 2)), 4);
}

TEST(Rational, ParsingAndApproximation) {
  EXPECT_EQ(parse_rational("3/4"), Rational(3, 4));
  EXPECT_EQ(parse_rational("75.5"), Rational(151, 2));
  EXPECT_EQ(rational_from_double(66.66666666666667), Rational(200, 3));
  EXPECT_EQ(rational_from_double(0.0625), Rational(1, 16));
}

TEST(Rational, OverflowIsReported) {
  Rational big(INT64_MAX / 2);
  EXPECT_THROW(big * big, RationalOverflow);
}

TEST(ScoreModel, SpelledPitchMidi) {
  EXPECT_EQ((SpelledPitch{Step::C, 0, 4}).midi(), 60);
  EXPECT_EQ((SpelledPitch{Step::B, 1, 3}).midi(), 60);
  EXPECT_EQ((SpelledPitch{Step::D, -1, 4}).midi(), 61);
  EXPECT_EQ((SpelledPitch{Step::A, 0, 4}).midi(), 69);
}

TEST(ScoreModel, KeySignatures) {
  auto a_minor = KeySignature::from_tonic({Step::A, 0}, Mode::minor);
  auto c_major = KeySignature::from_tonic({Step::C, 0}, Mode::major);
  EXPECT_EQ(a_minor.fifths, 0);
  EXPECT_EQ(a_minor.relative(), c_major);
  EXPECT_EQ(KeySignature::from_tonic({Step::F, 1}, Mode::minor).fifths, 3);
  EXPECT_EQ(KeySignature::from_tonic({Step::B, -1}, Mode::major).fifths, -2);
  EXPECT_EQ(KeySignature::from_tonic({Step::D, 0}, Mode::major).alter_for(Step::F), 1);
  EXPECT_EQ(KeySignature::from_fifths(-3, Mode::minor).to_string(), "Cm");
  EXPECT_THROW(KeySignature::from_tonic({Step::G, 1}, Mode::major), Error);  // 8 sharps
}

TEST(ScoreModel, DiatonicSets) {
  auto c = KeySignature::from_tonic({Step::C, 0}, Mode::major);
  EXPECT_EQ(diatonic_pitch_classes(c), (std::set<int>{0, 2, 4, 5, 7, 9, 11}));
  auto a = KeySignature::from_tonic({Step::A, 0}, Mode::minor);
  EXPECT_EQ(diatonic_pitch_classes(a), (std::set<int>{0, 2, 4, 5, 7, 9, 11}));
  auto e = KeySignature::from_tonic({Step::E, 0}, Mode::minor);
  EXPECT_TRUE(diatonic_pitch_classes(e).count(6));
  EXPECT_FALSE(diatonic_pitch_classes(e).count(3));
  EXPECT_EQ(key_direction(c), KeyDirection::neutral);
  EXPECT_EQ(key_direction(e), KeyDirection::sharp);
  EXPECT_EQ(key_direction(KeySignature::from_fifths(-1, Mode::major)), KeyDirection::flat);
}

TEST(ScoreModel, TimeSignatureCapacity) {
  EXPECT_EQ((TimeSignature{4, 4}).capacity(), Rational(4));
  EXPECT_EQ((TimeSignature{6, 8}).capacity(), Rational(3));
  EXPECT_EQ((TimeSignature{3, 8}).capacity(), Rational(3, 2));
}

TEST(Instruments, NameNormalization) {
  EXPECT_EQ(normalize_instrument_name("Violin II"), "violin");
  EXPECT_EQ(normalize_instrument_name("  VIOLONCELLO "), "violoncello");
  EXPECT_EQ(normalize_instrument_name("Clarinet in Bb"), "clarinet");
  EXPECT_EQ(normalize_instrument_name("Horn 1"), "horn");
  EXPECT_EQ(normalize_instrument_name("2nd Flute"), "flute");
}

TEST(Instruments, AliasLookup) {
  const auto& table = default_constraint_table();
  ASSERT_NE(table.find_by_name("Violoncello"), nullptr);
  EXPECT_EQ(table.find_by_name("Violoncello")->canonical_name, "Cello");
  EXPECT_EQ(table.find_by_name("Violin I")->canonical_name, "Violin");
  EXPECT_EQ(table.find_by_program(73)->canonical_name, "Flute");
  EXPECT_EQ(table.find_by_name("Theremin"), nullptr);
  const auto* piano = table.find_canonical("Piano");
  ASSERT_NE(piano, nullptr);
  EXPECT_EQ(piano->max_span_semitones, 15);
  EXPECT_GE(table.entries().size(), 30u);
}

TEST(Instruments, BindingOrder) {
  const auto& table = default_constraint_table();
  Part p;
  p.part_id = "V1";
  p.declared_name = "Flute";
  p.midi_program = 42;  // cello in General MIDI
  EXPECT_EQ(bind_instrument(p, table).instrument, "Cello");
  p.midi_program.reset();
  EXPECT_EQ(bind_instrument(p, table).instrument, "Flute");
  p.declared_name = "Kazoo";
  auto b = bind_instrument(p, table);
  EXPECT_EQ(b.via, Binding::unresolved);
  EXPECT_EQ(b.instrument, "Kazoo");
  EXPECT_EQ(b.constraints.lowest_midi, 0);
  EXPECT_EQ(b.constraints.highest_midi, 127);
  EXPECT_FALSE(b.constraints.max_span_semitones.has_value());
}

TEST(Instruments, ShippedConfigMatchesDefaults) {
  auto path = std::filesystem::path(SCORELINT_SOURCE_DIR) / "config" / "scorelint.json";
  auto shipped = config_from_text(read_file(path));
  EvaluationConfig defaults;
  EXPECT_EQ(to_json(shipped), to_json(defaults));
  EXPECT_EQ(config_fingerprint(shipped), config_fingerprint(defaults));
}

TEST(Config, OverridesAndFingerprint) {
  EvaluationConfig base;
  auto fp = config_fingerprint(base);
  auto changed = config_from_text(R"({"tempo_tolerance": "1/20", "instruments": [
      {"canonical": "Theremin", "aliases": ["aetherphone"], "L": 36, "U": 96, "S_max": "inf", "monophonic": true}]})");
  EXPECT_EQ(changed.tempo_tolerance, Rational(1, 20));
  ASSERT_NE(changed.instruments.find_by_name("Aetherphone"), nullptr);
  EXPECT_NE(config_fingerprint(changed), fp);
  EXPECT_THROW(config_from_text(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(config_from_text(R"({"weight_profiles": [{"id": "x", "weights": {"tempo": 1}}]})"), ConfigError);
  EXPECT_THROW(config_from_text("{"), ConfigError);
}
