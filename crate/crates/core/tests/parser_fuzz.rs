//! Parser totality: any input produces statements or a positioned syntax
//! error, never a panic, and valid generated programs always parse.

use bazaar_core::sql::parse_program;
use bazaar_core::testkit;
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        let _ = parse_program(&text);
    }

    #[test]
    fn keyword_soup_never_panics(words in proptest::collection::vec(
        prop_oneof![
            Just("SELECT"), Just("FROM"), Just("WHERE"), Just("AND"), Just("GROUP"),
            Just("BY"), Just("AT"), Just("REGISTER"), Just("TABLE"), Just("CARD"),
            Just("ROWBYTES"), Just("COLS"), Just("CONSTRAINT"), Just("DENY"), Just("SHIP"),
            Just("TO"), Just("ANY"), Just("EU"), Just("NA"), Just("("), Just(")"),
            Just(","), Just(";"), Just("."), Just("*"), Just("="), Just("<="), Just("!="),
            Just("t0"), Just("k"), Just("42"), Just("1.5"), Just("'x'"), Just("INT"),
            Just("DISTINCT"), Just("COUNT"), Just("SUM"),
        ],
        0..40,
    )) {
        let text = words.join(" ");
        let _ = parse_program(&text);
    }
}

#[test]
fn generated_programs_always_parse() {
    let cfg = testkit::GenConfig::default();
    for seed in 0..300 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = testkit::random_program(&mut rng, &cfg);
        parse_program(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    }
}

#[test]
fn error_positions_point_at_real_tokens() {
    for (text, line, column) in [
        ("SELECT FROM;", 1, 8),
        ("REGISTER TABLE t AT XX CARD 1 ROWBYTES 1 COLS (a INT);", 1, 21),
        ("SELECT a\nFROM t\nWHERE ;", 3, 7),
    ] {
        let err = parse_program(text).unwrap_err();
        assert_eq!((err.line, err.column), (line, column), "{text}: {err}");
    }
}
