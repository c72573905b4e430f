mod common;

use hpx_core::bench::{generate_bomb, generate_rings, generate_sickness};
use hpx_core::parser::{parse_domain, render_domain, ParseError};
use proptest::prelude::*;

fn round_trips(d: &hpx_core::model::PlanningDomain) {
    let text = render_domain(d);
    let back = parse_domain(&text).unwrap_or_else(|e| panic!("rendered domain does not parse: {e}\n{text}"));
    assert_eq!(&back, d, "round trip changed the domain:\n{text}");
}

#[test]
fn benchmark_domains_round_trip() {
    round_trips(&generate_bomb(2));
    round_trips(&generate_bomb(1));
    round_trips(&generate_rings(3));
    round_trips(&generate_sickness(3));
}

#[test]
fn smart_home_round_trips() {
    round_trips(&common::smart_home());
}

#[test]
fn error_kinds() {
    let unbalanced = parse_domain("(:action a :effect f").unwrap_err();
    assert!(matches!(unbalanced, ParseError::Unbalanced { .. }), "{unbalanced:?}");
    let dup = parse_domain("(:action a :effect f)\n(:action a :effect g)").unwrap_err();
    assert!(matches!(dup, ParseError::DuplicateAction { ref name, .. } if name == "a"), "{dup:?}");
    assert_eq!(dup.span().line, 2);
    let lexical = parse_domain("(:action a :effect f$)").unwrap_err();
    assert!(matches!(lexical, ParseError::Lexical { .. }), "{lexical:?}");
}

const TOKENS: &[&str] = &[
    "(",
    ")",
    "(",
    ")",
    ":action",
    ":effect",
    ":observe",
    ":executable",
    ":init",
    ":goal",
    ":fluents",
    ":static",
    "oneof",
    "when",
    "and",
    "not",
    "weak",
    "strong",
    "f",
    "g",
    "¬f",
    "-g",
    "a",
    "b",
    ";c\n",
    "\n",
    " ",
];

proptest! {
    #[test]
    fn random_domains_round_trip(seed in any::<u64>()) {
        round_trips(&common::random_domain(seed));
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let text = String::from_utf8_lossy(&bytes);
        if let Err(e) = parse_domain(&text) {
            prop_assert!(e.span().line >= 1 && e.span().column >= 1);
        }
    }

    #[test]
    fn token_soup_never_panics(picks in proptest::collection::vec(0..TOKENS.len(), 0..40)) {
        let text: String = picks.iter().map(|&i| TOKENS[i]).collect::<Vec<_>>().join(" ");
        match parse_domain(&text) {
            Ok(d) => {
                // Whatever parses must render to something that parses back.
                let back = parse_domain(&render_domain(&d));
                prop_assert_eq!(back, Ok(d));
            }
            Err(e) => prop_assert!(e.span().line >= 1),
        }
    }
}
