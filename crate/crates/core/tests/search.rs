mod common;

use hpx_core::bench::{generate_bomb, generate_rings, generate_sickness, Benchmark};
use hpx_core::engine::{CompiledDomain, Mode};
use hpx_core::parser::parse_domain;
use hpx_core::plan::{verify_plan, ConditionalPlan};
use hpx_core::search::{default_max_branches, find_optimal_plan, find_plan, SearchOptions};

const PLAIN: SearchOptions = SearchOptions { optimize: false, jobs: 1 };

#[test]
fn smart_home_optimal_plan_has_three_occurrences() {
    let d = common::smart_home();
    let plan = find_optimal_plan(&d, 4, 1, Mode::Sequential, PLAIN).unwrap().unwrap();
    assert_eq!(plan.occ_count(), 3);
    assert_eq!(common::exhaustive_min_cost(&CompiledDomain::new(&d).unwrap(), 4), Some(3));
}

#[test]
fn bomb_of_one_needs_a_single_dunk() {
    let d = generate_bomb(1);
    let plan = find_plan(&d, 1, 0, Mode::Sequential, PLAIN).unwrap().unwrap();
    assert_eq!(plan, ConditionalPlan::sequence(&["dunk_1"]));
}

#[test]
fn bomb_of_two_needs_both_dunks() {
    let d = generate_bomb(2);
    let plan = find_optimal_plan(&d, 3, 0, Mode::Sequential, PLAIN).unwrap().unwrap();
    assert_eq!(plan.occ_count(), 2);
    assert_eq!(common::exhaustive_min_cost(&CompiledDomain::new(&d).unwrap(), 3), Some(2));
    assert!(find_plan(&d, 1, 0, Mode::Sequential, PLAIN).unwrap().is_none());
}

#[test]
fn sickness_of_two_costs_stain_sense_and_one_cure_per_branch() {
    let d = generate_sickness(2);
    let plan = find_optimal_plan(&d, 3, 1, Mode::Sequential, PLAIN).unwrap().unwrap();
    assert_eq!(plan.occ_count(), 4);
    assert_eq!(plan.to_compact(), "stain; sense_color_1; [if color_1 then medicate_1 else medicate_2]");
    assert_eq!(common::exhaustive_min_cost(&CompiledDomain::new(&d).unwrap(), 3), Some(4));
}

#[test]
fn sickness_has_one_leaf_per_disease() {
    for n in 2..=4 {
        let d = generate_sickness(n);
        let s = Benchmark::Sickness.max_steps(n);
        let plan = find_plan(&d, s, default_max_branches(&d, s), Mode::Sequential, PLAIN).unwrap().unwrap();
        assert_eq!(plan.leaf_count(), n, "{plan}");
        assert_eq!(plan.branch_count() + 1, n);
    }
}

#[test]
fn known_goal_needs_no_plan() {
    let d = parse_domain("(:action a :effect f) (:init f) (:goal strong f)").unwrap();
    assert_eq!(find_plan(&d, 2, 0, Mode::Sequential, PLAIN).unwrap(), Some(ConditionalPlan::Leaf));
    assert_eq!(find_optimal_plan(&d, 2, 0, Mode::Sequential, PLAIN).unwrap().unwrap().occ_count(), 0);
}

#[test]
fn optimization_never_changes_solvability_on_benchmarks() {
    let cases = [(Benchmark::Bomb, 1..=5), (Benchmark::Rings, 2..=2), (Benchmark::Sickness, 2..=3)];
    for (b, sizes) in cases {
        for n in sizes {
            let d = b.generate(n).unwrap();
            let s = b.max_steps(n);
            let br = default_max_branches(&d, s);
            for steps in [s - 1, s] {
                let plain = find_plan(&d, steps, br, Mode::Sequential, PLAIN).unwrap();
                let opt =
                    find_plan(&d, steps, br, Mode::Sequential, SearchOptions { optimize: true, jobs: 1 }).unwrap();
                assert_eq!(plain.is_some(), opt.is_some(), "{}({n}) with {steps} steps", b.name());
                if let Some(p) = opt {
                    assert!(verify_plan(&d, &p, steps, br, Mode::Sequential).unwrap().plan_found);
                }
            }
        }
    }
}

#[test]
fn static_relations_leave_the_rings_plan_unchanged() {
    let d = generate_rings(2);
    let plain = find_plan(&d, 5, 2, Mode::Sequential, PLAIN).unwrap().unwrap();
    let opt = find_plan(&d, 5, 2, Mode::Sequential, SearchOptions { optimize: true, jobs: 1 }).unwrap().unwrap();
    assert_eq!(plain, opt);
}

#[test]
fn threads_do_not_change_the_result() {
    for seed in 0..150 {
        let d = common::random_domain(seed);
        for optimal in [false, true] {
            let run = |jobs| {
                let o = SearchOptions { optimize: false, jobs };
                if optimal {
                    find_optimal_plan(&d, 3, 7, Mode::Sequential, o).unwrap()
                } else {
                    find_plan(&d, 3, 7, Mode::Sequential, o).unwrap()
                }
            };
            assert_eq!(run(1), run(4), "seed {seed}");
        }
    }
    let d = generate_sickness(3);
    let run = |jobs| find_plan(&d, 4, 3, Mode::Sequential, SearchOptions { optimize: false, jobs }).unwrap();
    assert_eq!(run(1), run(3));
}

#[test]
fn found_plans_verify() {
    for seed in 0..300 {
        let d = common::random_domain(seed);
        for mode in [Mode::Sequential, Mode::Concurrent] {
            if let Some(plan) = find_plan(&d, 3, 7, mode, PLAIN).unwrap() {
                let report = verify_plan(&d, &plan, 3, 7, mode).unwrap();
                assert!(report.plan_found, "seed {seed} {mode}: {plan}");
            }
        }
    }
}

#[test]
fn concurrency_can_shorten_plans() {
    let d = parse_domain("(:action a :effect f) (:action b :effect g) (:goal strong f g)").unwrap();
    assert!(find_plan(&d, 1, 0, Mode::Sequential, PLAIN).unwrap().is_none());
    let plan = find_plan(&d, 1, 0, Mode::Concurrent, PLAIN).unwrap().unwrap();
    assert_eq!(plan.to_compact(), "{a, b}");
}
