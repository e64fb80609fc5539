use proptest::prelude::*;
use stverif_core::syntax::{lex, parse, SourceUnit};
use stverif_core::testing::random_program;

/// Text that looks a little like Structured Text, with junk mixed in.
fn st_like() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("IF ".to_string()),
        Just("THEN".to_string()),
        Just(":=".to_string()),
        Just("(* c *)".to_string()),
        Just("//#ASSERT a\n".to_string()),
        Just("16#FF".to_string()),
        Just("1_000".to_string()),
        Just("<>".to_string()),
        Just("'".to_string()),
        Just("(*".to_string()),
        "[a-zA-Z_][a-zA-Z0-9_]{0,6}",
        "[0-9]{1,5}",
        "[ \t\r\n]{1,3}",
        "[-+*/<>=;:,.()\\[\\]#&$%@!?~^|{}\"]",
        any::<char>().prop_map(String::from),
    ];
    prop::collection::vec(piece, 0..40).prop_map(|v| v.concat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn tokens_cover_everything_but_whitespace(text in st_like()) {
        let (tokens, _) = lex(&text, 0);
        let mut rebuilt = String::new();
        let mut pos = 0usize;
        for t in &tokens {
            let (s, e) = (t.span.start as usize, t.span.end as usize);
            prop_assert!(s >= pos && e >= s);
            prop_assert_eq!(&text[s..e], t.lexeme);
            let gap = &text[pos..s];
            prop_assert!(gap.chars().all(char::is_whitespace), "gap {:?}", gap);
            rebuilt.push_str(gap);
            rebuilt.push_str(t.lexeme);
            pos = e;
        }
        let tail = &text[pos..];
        prop_assert!(tail.chars().all(char::is_whitespace), "tail {:?}", tail);
        rebuilt.push_str(tail);
        prop_assert_eq!(rebuilt, text);
    }

    #[test]
    fn parsing_is_deterministic(text in st_like()) {
        let u = SourceUnit::new("f.st", text);
        prop_assert_eq!(parse(&u), parse(&u));
    }

    #[test]
    fn generated_programs_parse_identically(seed in 0u64..1000) {
        let g = random_program(seed);
        let u = SourceUnit::new("g.st", g.source.clone());
        let a = parse(&u);
        prop_assert!(a.is_ok());
        prop_assert_eq!(a, parse(&u));
    }
}
