mod common;

use hpx_core::bench::{generate_bomb, generate_rings};
use hpx_core::emit::{
    emit_domain_rules, emit_foundational_theory, emit_program, ground_rule_estimate, template_counts, EmitError,
    EmitOptions,
};
use hpx_core::engine::Mode;
use hpx_core::model::{Action, Literal, PlanningDomain};
use proptest::prelude::*;

/// Statements of the domain-independent theory: 33 listed statements, a
/// second known-false-condition rule, and ten mirrors.
const THEORY_STATEMENTS: usize = 44;

/// Template cardinalities computed from the domain alone.
fn expected_domain_count(d: &PlanningDomain) -> usize {
    let eps: Vec<_> = d.actions.iter().flat_map(|a| &a.effects).collect();
    let conditions: usize = eps.iter().map(|e| e.conditions.len()).sum();
    let t1 = d.fluents.len() + d.actions.len();
    let t2 = d.init.len();
    let t3a: usize = d.oneofs.iter().map(|o| o.literals.len()).sum();
    let t3b: usize = d.oneofs.iter().map(|o| o.literals.len() * (o.literals.len() - 1)).sum();
    let t4: usize = d.actions.iter().map(|a| a.executable.len()).sum();
    let t5 = 2 * eps.len() + conditions;
    let t6 = eps.len() + 2 * conditions;
    let t7 = d.actions.iter().filter(|a| a.is_sensing()).count();
    let t8 = if d.goals.is_empty() { 0 } else { 2 };
    t1 + t2 + t3a + t3b + t4 + t5 + t6 + t7 + t8
}

#[test]
fn bomb_rule_count_matches_closed_form() {
    let d = generate_bomb(2);
    let program = emit_program(&d, 2, 0, Mode::Sequential, EmitOptions::default()).unwrap();
    // 2 fluents + 2 actions, 2 + 2 oneof rules, 2 x (hasEP, hasEff), 2 effect
    // rules, 2 goal rules.
    assert_eq!(expected_domain_count(&d), 16);
    assert_eq!(program.lines().count(), 16 + THEORY_STATEMENTS);
}

#[test]
fn theory_size_is_fixed() {
    for (s, b) in [(1, 0), (4, 1), (9, 30)] {
        for mode in [Mode::Sequential, Mode::Concurrent] {
            assert_eq!(emit_foundational_theory(s, b, mode).unwrap().len(), THEORY_STATEMENTS);
        }
    }
}

#[test]
fn concurrent_generation_has_no_upper_bound() {
    let seq = emit_foundational_theory(3, 1, Mode::Sequential).unwrap();
    let conc = emit_foundational_theory(3, 1, Mode::Concurrent).unwrap();
    let generation = |rules: &[hpx_core::emit::RuleTemplateInstance]| {
        rules.iter().find(|r| r.template_id == "F-listing-line-32").unwrap().text.clone()
    };
    assert!(generation(&seq).starts_with("1{occ(A,T,BR) : action(A)}1 :-"));
    assert!(generation(&conc).starts_with("1{occ(A,T,BR) : action(A)} :-"));
}

#[test]
fn zero_steps_is_rejected() {
    assert!(matches!(emit_foundational_theory(0, 0, Mode::Sequential), Err(EmitError::NoSteps)));
}

#[test]
fn invalid_domain_is_rejected() {
    let mut d = PlanningDomain::default();
    d.actions.push(Action::new("a").with_effect(vec![], Literal::pos("f")));
    // `f` is not declared.
    assert!(matches!(emit_domain_rules(&d, EmitOptions::default()), Err(EmitError::InvalidDomain(_))));
}

#[test]
fn every_line_is_tagged_with_a_known_template() {
    let d = generate_rings(2);
    for optimize in [false, true] {
        let program = emit_program(&d, 5, 2, Mode::Sequential, EmitOptions { optimize }).unwrap();
        for line in program.lines() {
            let (_, tag) = line.split_once("  % ").unwrap_or_else(|| panic!("untagged line {line}"));
            let known = tag.starts_with("F-listing-line-")
                || ["T1", "T2", "T3a", "T3b", "T4", "T5", "T6a", "T6b", "T6c", "T7", "T8a", "T8b", "opt-prune"]
                    .contains(&tag);
            assert!(known, "unknown tag in {line}");
        }
    }
}

#[test]
fn static_fluents_become_holds_facts_when_optimizing() {
    let d = generate_rings(2);
    let plain = emit_program(&d, 5, 2, Mode::Sequential, EmitOptions::default()).unwrap();
    let opt = emit_program(&d, 5, 2, Mode::Sequential, EmitOptions { optimize: true }).unwrap();
    assert!(plain.contains("knows(connected_1_2,0,0,0).  % T2"));
    assert!(!plain.contains("holds("));
    assert!(opt.contains("holds(connected_1_2).  % T2"));
    assert!(opt.contains(":- occ(move_1_2,T,BR), not holds(connected_1_2).  % T4"));
    assert!(opt.contains(":- occ(close_1,T,BR), -knows(open_1,T,T,BR).  % opt-prune"));
    assert!(opt.contains(":- occ(sense_window_1,T,BR), kw(open_1,T,T,BR).  % opt-prune"));
}

#[test]
fn facts_precede_rules_in_the_domain_part() {
    let rules = emit_domain_rules(&common::smart_home(), EmitOptions::default()).unwrap();
    let first_rule = rules.iter().position(|r| !r.is_fact()).unwrap();
    assert!(rules[first_rule..].iter().all(|r| !r.is_fact()));
}

#[test]
fn ground_estimate_grows_with_bounds() {
    let d = generate_bomb(3);
    let estimate = |s: usize, b: usize| {
        let program = emit_program(&d, s, b, Mode::Sequential, EmitOptions::default()).unwrap();
        ground_rule_estimate(&d, &program, s, b)
    };
    assert!(estimate(3, 0) < estimate(4, 0));
    assert!(estimate(3, 0) < estimate(3, 1));
}

proptest! {
    #[test]
    fn rule_count_law(seed in any::<u64>()) {
        let d = common::random_domain(seed);
        let rules = emit_domain_rules(&d, EmitOptions::default()).unwrap();
        let counts = template_counts(&rules);
        let count = |id: &str| counts.get(id).copied().unwrap_or(0);
        let eps = d.actions.iter().map(|a| a.effects.len()).sum::<usize>();
        let conditions = d.actions.iter().flat_map(|a| &a.effects).map(|e| e.conditions.len()).sum::<usize>();
        prop_assert_eq!(count("T6a"), eps);
        prop_assert_eq!(count("T6b"), conditions);
        prop_assert_eq!(count("T6c"), conditions);
        prop_assert_eq!(count("T2"), d.init.len());
        prop_assert_eq!(rules.len(), expected_domain_count(&d));
    }

    #[test]
    fn emission_is_deterministic(seed in any::<u64>()) {
        let d = common::random_domain(seed);
        let a = emit_program(&d, 3, 2, Mode::Sequential, EmitOptions::default()).unwrap();
        let b = emit_program(&d.clone(), 3, 2, Mode::Sequential, EmitOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}
