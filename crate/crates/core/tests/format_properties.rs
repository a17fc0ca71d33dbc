#[path = "support/oracles.rs"]
mod oracles;

use std::collections::BTreeSet;

use pimp_core::convert;
use pimp_core::io::{
    export_dot, export_pim_text, load_project, parse_pim_text, save_project, FormatError,
};
use pimp_core::testkit::{random_pim, random_project, rng};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn project_round_trip(seed in any::<u64>()) {
        let p = random_project(&mut rng(seed), 8, 5);
        let bytes = save_project(&p);
        let back = load_project(&bytes).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(save_project(&back), bytes);
    }

    #[test]
    fn pim_text_round_trip(seed in any::<u64>()) {
        let pim = random_pim(&mut rng(seed), 10);
        let text = export_pim_text(&pim).unwrap();
        prop_assert_eq!(parse_pim_text(&text).unwrap(), pim.canonical());
        prop_assert_eq!(export_pim_text(&pim.canonical()).unwrap(), text);
    }

    #[test]
    fn converted_pim_text_round_trip(seed in any::<u64>()) {
        let pim = convert(&random_project(&mut rng(seed), 8, 5)).unwrap().pim;
        let text = export_pim_text(&pim).unwrap();
        prop_assert_eq!(parse_pim_text(&text).unwrap(), pim.canonical());
    }

    #[test]
    fn dot_export_is_well_formed(seed in any::<u64>()) {
        let pim = random_pim(&mut rng(seed), 10);
        let dot = export_dot(&pim).unwrap();
        prop_assert_eq!(&dot, &export_dot(&pim).unwrap());
        let text = String::from_utf8(dot).unwrap();
        let (nodes, edges) = oracles::check_dot(&text).map_err(TestCaseError::fail)?;
        let states: BTreeSet<_> = pim.states.iter().map(|s| s.name.clone()).collect();
        prop_assert_eq!(nodes, states);
        let got: BTreeSet<_> = edges.into_iter().map(|(s, t, l)| (s, l.unwrap(), t)).collect();
        let want: BTreeSet<_> = pim
            .transitions
            .iter()
            .map(|t| (t.source.clone(), t.behaviour.clone(), t.target.clone()))
            .collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn mangled_pim_text_fails_with_a_position(seed in any::<u64>(), cut in any::<prop::sample::Index>(), junk in "[ a-z_>\\-]{1,6}") {
        let pim = random_pim(&mut rng(seed), 6);
        let mut text = String::from_utf8(export_pim_text(&pim).unwrap()).unwrap();
        let at = cut.index(text.len() + 1);
        text.insert_str(at, &junk);
        // any failure must be positioned or a model-level complaint
        if let Err(e) = parse_pim_text(text.as_bytes()) {
            match e {
                FormatError::Parse { line, column, .. } => prop_assert!(line >= 1 && column >= 1),
                FormatError::PimInvariant(v) => prop_assert!(!v.is_empty()),
                other => prop_assert!(false, "unexpected error {other:?}"),
            }
        }
    }
}

#[test]
fn truncated_project_files_report_positions() {
    let p = random_project(&mut rng(7), 4, 3);
    let bytes = save_project(&p);
    for len in (0..bytes.len()).step_by(37) {
        match load_project(&bytes[..len]) {
            Err(FormatError::Parse { line, column, .. }) => assert!(line >= 1 && column >= 1),
            other => panic!("prefix of {len} bytes gave {other:?}"),
        }
    }
}
