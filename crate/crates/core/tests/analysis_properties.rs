#[path = "support/oracles.rs"]
mod oracles;

use std::collections::BTreeSet;

use pimp_core::analysis::immediate_dominators;
use pimp_core::testkit::{random_pim, random_project, rng};
use pimp_core::{
    convert, generate_tests, must_pass_through, reachability, AnalysisError, SimulationSession,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn reachability_matches_closure(seed in any::<u64>()) {
        let pim = random_pim(&mut rng(seed), 10);
        let report = reachability(&pim).unwrap();
        let expected = oracles::closure_reachable(&pim);
        prop_assert_eq!(&report.reachable, &expected);
        let all: BTreeSet<_> = pim.states.iter().map(|s| s.name.clone()).collect();
        let unreachable: BTreeSet<_> = all.difference(&expected).cloned().collect();
        prop_assert_eq!(&report.unreachable, &unreachable);
        prop_assert!(report.reachable.contains(&pim.initial));
    }

    #[test]
    fn must_pass_through_matches_path_enumeration(seed in any::<u64>()) {
        let pim = random_pim(&mut rng(seed), 8);
        for gate in &pim.states {
            for target in &pim.states {
                let res = must_pass_through(&pim, &gate.name, &target.name);
                if target.name == pim.initial {
                    prop_assert!(matches!(res, Err(AnalysisError::TargetIsInitial(_))));
                    continue;
                }
                let check = res.unwrap();
                let (holds, vacuous) = oracles::must_pass_by_enumeration(&pim, &gate.name, &target.name);
                prop_assert_eq!(
                    (check.holds, check.vacuous),
                    (holds, vacuous),
                    "gate {} target {}", gate.name, target.name
                );
            }
        }
    }

    #[test]
    fn immediate_dominators_dominate(seed in any::<u64>()) {
        let pim = random_pim(&mut rng(seed), 8);
        for (node, idom) in immediate_dominators(&pim).unwrap() {
            prop_assert_eq!(oracles::must_pass_by_enumeration(&pim, &idom, &node), (true, false));
        }
    }

    #[test]
    fn tests_cover_exactly_the_reachable_transitions(seed in any::<u64>()) {
        let pim = random_pim(&mut rng(seed), 10);
        let suite = generate_tests(&pim).unwrap();
        let covered: BTreeSet<_> = suite
            .tests
            .iter()
            .flat_map(|t| &t.covered_transitions)
            .map(|k| (k.source.clone(), k.behaviour.clone()))
            .collect();
        let reachable = oracles::reachable_transitions(&pim);
        prop_assert_eq!(&covered, &reachable);
        let uncovered: BTreeSet<_> = suite.uncovered.iter().map(|k| (k.source.clone(), k.behaviour.clone())).collect();
        prop_assert!(uncovered.is_disjoint(&covered));
        prop_assert_eq!(covered.len() + uncovered.len(), pim.transitions.len());
        for t in &suite.tests {
            prop_assert_eq!(&t.steps[0].state, &pim.initial);
            for w in t.steps.windows(2) {
                prop_assert_eq!(&w[0].next, &w[1].state);
            }
            for s in &t.steps {
                let tr = pim.transition(&s.state, &s.behaviour).unwrap();
                prop_assert_eq!(&tr.target, &s.next);
            }
        }
        prop_assert_eq!(generate_tests(&pim).unwrap(), suite);
    }

    #[test]
    fn generated_tests_replay_on_the_simulator(seed in any::<u64>()) {
        let project = random_project(&mut rng(seed), 8, 5);
        let pim = convert(&project).unwrap().pim;
        let suite = generate_tests(&pim).unwrap();
        for test in &suite.tests {
            let mut session = SimulationSession::start(&project).unwrap();
            for step in &test.steps {
                prop_assert_eq!(session.current(), step.state.as_str());
                session.step(&step.behaviour).unwrap();
            }
            prop_assert_eq!(Some(session.current()), test.final_state());
        }
    }
}
