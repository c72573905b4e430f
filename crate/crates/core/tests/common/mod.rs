//! Helpers shared by the integration tests: a random domain generator,
//! exhaustive enumeration of action sequences, and an exhaustive minimum
//! plan cost.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hpx_core::engine::{Advance, CompiledDomain, Engine, EngineConfig, EpistemicState, Lineage};
use hpx_core::model::{validate_domain, Action, GoalKind, GoalProposition, Literal, OneofConstraint, PlanningDomain};
use hpx_core::parser::parse_domain;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const SMART_HOME: &str = include_str!("../../domains/smarthome.hpx");

pub fn smart_home() -> PlanningDomain {
    parse_domain(SMART_HOME).expect("smart home parses")
}

fn random_literal(rng: &mut StdRng, nf: usize) -> Literal {
    let f = format!("f{}", rng.gen_range(0..nf));
    if rng.gen_bool(0.5) {
        Literal::pos(f)
    } else {
        Literal::neg(f)
    }
}

/// A small random domain: at most 4 fluents, 3 actions, 2 effect
/// propositions per action, 1 condition per effect and 1 sensing action.
pub fn random_domain(seed: u64) -> PlanningDomain {
    let mut rng = StdRng::seed_from_u64(seed);
    let nf = rng.gen_range(1..=4);
    let na = rng.gen_range(1..=3);
    let sensing = if rng.gen_bool(0.6) { Some(rng.gen_range(0..na)) } else { None };
    let mut d = PlanningDomain::default();
    for i in 0..na {
        let mut a = Action::new(format!("a{i}"));
        if sensing == Some(i) {
            a = a.with_observe(format!("f{}", rng.gen_range(0..nf)));
        } else {
            let mut used = Vec::new();
            for _ in 0..rng.gen_range(1..=2) {
                let effect = random_literal(&mut rng, nf);
                // One effect per fluent keeps the action free of clashes.
                if used.contains(&effect.fluent) {
                    continue;
                }
                used.push(effect.fluent.clone());
                let conditions = if rng.gen_bool(0.5) { vec![random_literal(&mut rng, nf)] } else { vec![] };
                a = a.with_effect(conditions, effect);
            }
        }
        if rng.gen_bool(0.3) {
            a = a.with_executable(vec![random_literal(&mut rng, nf)]);
        }
        d.actions.push(a);
    }
    let mut unknown = Vec::new();
    for f in 0..nf {
        match rng.gen_range(0..3) {
            0 => d.init.push(Literal::pos(format!("f{f}"))),
            1 => d.init.push(Literal::neg(format!("f{f}"))),
            _ => unknown.push(f),
        }
    }
    if unknown.len() >= 2 && rng.gen_bool(0.3) {
        d.oneofs
            .push(OneofConstraint { literals: unknown[..2].iter().map(|f| Literal::pos(format!("f{f}"))).collect() });
    }
    let goal = |rng: &mut StdRng| {
        let mut lits: Vec<Literal> = Vec::new();
        for _ in 0..rng.gen_range(1..=2) {
            let l = random_literal(rng, nf);
            if !lits.iter().any(|x| x.fluent == l.fluent) {
                lits.push(l);
            }
        }
        lits
    };
    let strong = rng.gen_bool(0.7);
    if strong {
        d.goals.push(GoalProposition { kind: GoalKind::Strong, literals: goal(&mut rng) });
    }
    if !strong || rng.gen_bool(0.5) {
        d.goals.push(GoalProposition { kind: GoalKind::Weak, literals: goal(&mut rng) });
    }
    // Declare every fluent, including unmentioned ones.
    d.fluents = (0..nf).map(|f| hpx_core::model::Fluent::new(format!("f{f}"))).collect();
    let report = validate_domain(&d);
    assert!(report.is_ok(), "generator produced an invalid domain (seed {seed}): {report}");
    d
}

/// Runs every executable action sequence of length 1..=`max_len`, with
/// every branch doing the same action at every step, and calls `visit` on
/// each resulting state. Each branch's knowledge depends on its own history
/// only, so these states cover every branch of every plan of that depth.
pub fn for_each_sequence(
    engine: &Engine,
    d: &PlanningDomain,
    max_len: usize,
    visit: &mut dyn FnMut(&[String], &EpistemicState),
) {
    let s = engine.init_state().expect("consistent init");
    let names: Vec<String> = d.actions.iter().map(|a| a.name.clone()).collect();
    let mut prefix = Vec::new();
    walk(engine, &names, &s, max_len, &mut prefix, visit);
}

fn walk(
    engine: &Engine,
    names: &[String],
    s: &EpistemicState,
    remaining: usize,
    prefix: &mut Vec<String>,
    visit: &mut dyn FnMut(&[String], &EpistemicState),
) {
    if remaining == 0 {
        return;
    }
    for name in names {
        let occ: BTreeMap<usize, Vec<String>> = (0..s.branches.len()).map(|br| (br, vec![name.clone()])).collect();
        let Ok(next) = engine.step(s, &occ) else { continue };
        prefix.push(name.clone());
        visit(prefix, &next);
        walk(engine, names, &next, remaining - 1, prefix, visit);
        prefix.pop();
    }
}

pub fn fuzz_engine(d: &PlanningDomain, max_steps: usize) -> Engine {
    // Enough branch budget for a split at every step.
    Engine::new(d, EngineConfig::new(max_steps, (1 << max_steps) - 1)).expect("valid domain")
}

/// Minimum occurrence count of a sequential plan of at most `max_steps`
/// steps, by trying every action in every branch at every step. Returns
/// `None` when no plan exists. Branch budget is unlimited.
pub fn exhaustive_min_cost(cd: &CompiledDomain, max_steps: usize) -> Option<usize> {
    let root = Lineage::root(cd);
    let need_weak = !cd.weak_goal.is_empty();
    let (strong_only, with_weak) = min_costs(cd, &root, max_steps);
    if need_weak {
        with_weak
    } else {
        strong_only
    }
}

/// (cheapest plan whose leaves all satisfy the strong goal, cheapest such
/// plan where in addition some leaf satisfies the weak goal).
fn min_costs(cd: &CompiledDomain, lin: &Lineage, max_steps: usize) -> (Option<usize>, Option<usize>) {
    if !lin.is_consistent() {
        return (None, None);
    }
    let strong = lin.strong_goal(cd);
    let weak = lin.weak_goal(cd);
    if strong && weak {
        return (Some(0), Some(0));
    }
    let mut best_strong = strong.then_some(0);
    let mut best_weak = None;
    if lin.eval() >= max_steps {
        return (best_strong, best_weak);
    }
    let min = |a: Option<usize>, b: Option<usize>| match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    };
    for a in 0..cd.actions.len() {
        let Ok(adv) = lin.advance(cd, &[a]) else { continue };
        let (s, w) = match adv {
            Advance::Single { next, .. } => min_costs(cd, &next, max_steps),
            Advance::Split { positive, negative, .. } => {
                let (ps, pw) = min_costs(cd, &positive, max_steps);
                let (ns, nw) = min_costs(cd, &negative, max_steps);
                let sum = |x: Option<usize>, y: Option<usize>| Some(x? + y?);
                (sum(ps, ns), min(sum(pw, ns), sum(ps, nw)))
            }
        };
        best_strong = min(best_strong, s.map(|c| c + 1));
        best_weak = min(best_weak, w.map(|c| c + 1));
    }
    (best_strong, best_weak)
}
