//! Conditional plan generation.
//!
//! The search works on [`Lineage`]s: after a split the two outcome branches
//! evolve independently and only share the branch budget, so the plan is an
//! AND-OR tree over lineages. Horizons are deepened one step at a time; the
//! optimal variant additionally bounds the total occurrence count and raises
//! that bound until a plan appears.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::engine::{Advance, CompiledDomain, EngineConfig, EngineError, Lineage, Mode};
use crate::model::PlanningDomain;
use crate::plan::ConditionalPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SearchOptions {
    /// Skip physical actions whose effects are all known already and sensing
    /// of fluents whose value is known; evaluate static fluents as facts.
    pub optimize: bool,
    /// Worker threads for the first step's alternatives. 0 and 1 both mean
    /// single-threaded.
    pub jobs: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: usize,
    pub horizon: usize,
}

#[derive(Clone, Debug)]
struct Found {
    plan: ConditionalPlan,
    cost: usize,
    branches: usize,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    lineage: Lineage,
    remaining: usize,
    need_weak: bool,
}

struct Searcher<'a> {
    cd: &'a CompiledDomain,
    options: SearchOptions,
    horizon: usize,
    /// Whether the occurrence count is bounded (optimal search).
    bounded: bool,
    /// Budget/cost pairs known to be insufficient for a key.
    failed: HashMap<Key, Vec<(usize, usize)>>,
    solved: HashMap<(Key, usize, usize), Option<Found>>,
    nodes: usize,
    /// Candidate occurrence sets, in the order they are tried.
    candidates: Vec<Vec<usize>>,
}

impl<'a> Searcher<'a> {
    fn new(cd: &'a CompiledDomain, mode: Mode, options: SearchOptions) -> Self {
        let candidates = candidate_sets(cd, mode);
        Searcher {
            cd,
            options,
            horizon: 0,
            bounded: false,
            failed: HashMap::new(),
            solved: HashMap::new(),
            nodes: 0,
            candidates,
        }
    }

    fn known_failure(&self, key: &Key, budget: usize, cost: usize) -> bool {
        self.failed.get(key).is_some_and(|v| v.iter().any(|&(b, c)| budget <= b && cost <= c))
    }

    fn useful(&self, lin: &Lineage, set: &[usize]) -> bool {
        let cd = self.cd;
        set.iter().all(|&a| {
            let act = &cd.actions[a];
            if act.is_noop() {
                return false;
            }
            if !self.options.optimize {
                return true;
            }
            match act.sensed {
                Some(f) => {
                    !lin.knows_now(cd, crate::engine::compiled::lit(f, true))
                        && !lin.knows_now(cd, crate::engine::compiled::lit(f, false))
                }
                None => !act.effects.iter().all(|&e| lin.knows_now(cd, cd.effects[e].effect)),
            }
        })
    }

    /// Successor lineages of `lin` under occurrence set `set`, or `None` when
    /// the set cannot occur.
    fn expand(&self, lin: &Lineage, set: &[usize]) -> Option<Advance> {
        if !self.useful(lin, set) {
            return None;
        }
        lin.advance(self.cd, set).ok()
    }

    fn solve(&mut self, lin: &Lineage, budget: usize, need_weak: bool, cost: usize) -> Option<Found> {
        if !lin.is_consistent() {
            return None;
        }
        let (weak, strong) = (lin.weak_goal(self.cd), lin.strong_goal(self.cd));
        if strong && (weak || !need_weak) {
            return Some(Found { plan: ConditionalPlan::Leaf, cost: 0, branches: 0 });
        }
        let t = lin.eval();
        if t >= self.horizon || cost == 0 {
            return None;
        }
        let key = Key { lineage: lin.clone(), remaining: self.horizon - t, need_weak };
        if self.known_failure(&key, budget, cost) {
            return None;
        }
        let memo_key = (key, budget, cost);
        if let Some(hit) = self.solved.get(&memo_key) {
            return hit.clone();
        }
        self.nodes += 1;
        let mut result = None;
        for i in 0..self.candidates.len() {
            let set = self.candidates[i].clone();
            if set.len() > cost {
                continue;
            }
            if let Some(found) = self.try_set(lin, &set, budget, need_weak, cost) {
                result = Some(found);
                break;
            }
        }
        let (key, budget, cost) = memo_key;
        if result.is_none() {
            self.failed.entry(key.clone()).or_default().push((budget, cost));
        }
        self.solved.insert((key, budget, cost), result.clone());
        result
    }

    fn try_set(&mut self, lin: &Lineage, set: &[usize], budget: usize, need_weak: bool, cost: usize) -> Option<Found> {
        let names: Vec<String> = set.iter().map(|&a| self.cd.actions[a].name.clone()).collect();
        let rest = cost - set.len();
        match self.expand(lin, set)? {
            Advance::Single { next, confirmed } => {
                let found = self.solve(&next, budget, need_weak, rest)?;
                Some(Found {
                    plan: ConditionalPlan::Seq {
                        actions: names,
                        confirmed: confirmed.map(|f| self.cd.fluents[f].clone()),
                        next: Box::new(found.plan),
                    },
                    cost: found.cost + set.len(),
                    branches: found.branches,
                })
            }
            Advance::Split { fluent, positive, negative } => {
                if budget == 0 {
                    return None;
                }
                let rem = budget - 1;
                let assignments: &[(bool, bool)] =
                    if need_weak { &[(true, false), (false, true)] } else { &[(false, false)] };
                for &(pos_weak, neg_weak) in assignments {
                    if let Some((p, n)) = self.solve_pair(&positive, pos_weak, &negative, neg_weak, rem, rest) {
                        return Some(Found {
                            cost: p.cost + n.cost + set.len(),
                            branches: p.branches + n.branches + 1,
                            plan: ConditionalPlan::Branch {
                                actions: names,
                                sensed: self.cd.fluents[fluent].clone(),
                                if_true: Box::new(p.plan),
                                if_false: Box::new(n.plan),
                            },
                        });
                    }
                }
                None
            }
        }
    }

    /// Solves both outcomes of a split within a shared budget and cost. The
    /// first outcome is given the smallest budget, and for that budget the
    /// smallest cost, that it can work with; the second takes what is left.
    fn solve_pair(
        &mut self,
        first: &Lineage,
        first_weak: bool,
        second: &Lineage,
        second_weak: bool,
        budget: usize,
        cost: usize,
    ) -> Option<(Found, Found)> {
        let bounded = self.bounded;
        for b1 in 0..=budget {
            let p = if bounded {
                (0..=cost).find_map(|c1| self.solve(first, b1, first_weak, c1))
            } else {
                self.solve(first, b1, first_weak, cost)
            };
            let Some(p) = p else { continue };
            let rest_cost = if bounded { cost - p.cost } else { cost };
            if let Some(n) = self.solve(second, budget - p.branches, second_weak, rest_cost) {
                return Some((p, n));
            }
        }
        None
    }
}

/// Occurrence sets tried at every node: single actions by name in
/// sequential mode; in concurrent mode every nonempty set of actions, by
/// size and then by names.
fn candidate_sets(cd: &CompiledDomain, mode: Mode) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..cd.actions.len()).filter(|&a| !cd.actions[a].is_noop()).collect();
    order.sort_by(|&a, &b| cd.actions[a].name.cmp(&cd.actions[b].name));
    match mode {
        Mode::Sequential => order.into_iter().map(|a| vec![a]).collect(),
        Mode::Concurrent => {
            let n = order.len();
            assert!(n < 24, "concurrent search supports at most 23 actions");
            let mut sets: Vec<Vec<usize>> = (1u32..(1 << n))
                .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| order[i]).collect())
                .collect();
            let name_key = |s: &Vec<usize>| s.iter().map(|&a| cd.actions[a].name.clone()).collect::<Vec<_>>();
            sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| name_key(a).cmp(&name_key(b))));
            sets
        }
    }
}

fn compile(d: &PlanningDomain, options: SearchOptions) -> Result<CompiledDomain, EngineError> {
    if options.optimize {
        CompiledDomain::with_static_facts(d)
    } else {
        CompiledDomain::new(d)
    }
}

/// Searches with the first step's alternatives spread over worker threads.
/// The result is the one of the lowest-ordered alternative, as in a
/// single-threaded run.
fn solve_root(
    cd: &CompiledDomain,
    mode: Mode,
    options: SearchOptions,
    horizon: usize,
    budget: usize,
    cost: usize,
) -> (Option<Found>, usize) {
    let root = Lineage::root(cd);
    let mut probe = Searcher::new(cd, mode, options);
    probe.horizon = horizon;
    probe.bounded = cost != usize::MAX;
    let jobs = options.jobs.max(1);
    if jobs == 1 {
        let r = probe.solve(&root, budget, !cd.weak_goal.is_empty(), cost);
        return (r, probe.nodes);
    }
    // Goal already reached or nothing to do: no fan out needed.
    if let Some(r) = probe.solve(&root, budget, !cd.weak_goal.is_empty(), 0) {
        return (Some(r), probe.nodes);
    }
    if horizon == 0 || cost == 0 {
        return (None, probe.nodes);
    }
    let candidates = probe.candidates.clone();
    let results: Mutex<Vec<Option<Found>>> = Mutex::new(vec![None; candidates.len()]);
    let next = AtomicUsize::new(0);
    let nodes = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| {
                let mut s = Searcher::new(cd, mode, options);
                s.horizon = horizon;
                s.bounded = cost != usize::MAX;
                loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= candidates.len() {
                        break;
                    }
                    if candidates[i].len() > cost {
                        continue;
                    }
                    let r = s.try_set(&root, &candidates[i], budget, !cd.weak_goal.is_empty(), cost);
                    results.lock().expect("result lock")[i] = r;
                }
                nodes.fetch_add(s.nodes, Ordering::SeqCst);
            });
        }
    });
    let found = results.into_inner().expect("result lock").into_iter().flatten().next();
    (found, nodes.into_inner() + probe.nodes)
}

/// Finds a plan whose weak goal holds in some branch and whose strong goal
/// holds in every branch, within `max_steps` steps and `max_branches` branch
/// events. Shorter horizons are tried first.
pub fn find_plan(
    d: &PlanningDomain,
    max_steps: usize,
    max_branches: usize,
    mode: Mode,
    options: SearchOptions,
) -> Result<Option<ConditionalPlan>, EngineError> {
    Ok(find_plan_with_stats(d, max_steps, max_branches, mode, options)?.0)
}

pub fn find_plan_with_stats(
    d: &PlanningDomain,
    max_steps: usize,
    max_branches: usize,
    mode: Mode,
    options: SearchOptions,
) -> Result<(Option<ConditionalPlan>, SearchStats), EngineError> {
    let cd = compile(d, options)?;
    if Lineage::root(&cd).contradiction.is_some() {
        return Ok((None, SearchStats::default()));
    }
    let mut stats = SearchStats::default();
    for h in 0..=max_steps {
        let (found, nodes) = solve_root(&cd, mode, options, h, max_branches, usize::MAX);
        stats.nodes += nodes;
        stats.horizon = h;
        if let Some(f) = found {
            return Ok((Some(f.plan), stats));
        }
    }
    Ok((None, stats))
}

/// Like [`find_plan`] but minimizes the total number of occurrences over
/// all branches.
pub fn find_optimal_plan(
    d: &PlanningDomain,
    max_steps: usize,
    max_branches: usize,
    mode: Mode,
    options: SearchOptions,
) -> Result<Option<ConditionalPlan>, EngineError> {
    Ok(find_optimal_plan_with_stats(d, max_steps, max_branches, mode, options)?.0)
}

pub fn find_optimal_plan_with_stats(
    d: &PlanningDomain,
    max_steps: usize,
    max_branches: usize,
    mode: Mode,
    options: SearchOptions,
) -> Result<(Option<ConditionalPlan>, SearchStats), EngineError> {
    let cd = compile(d, options)?;
    if Lineage::root(&cd).contradiction.is_some() {
        return Ok((None, SearchStats::default()));
    }
    let mut stats = SearchStats { nodes: 0, horizon: max_steps };
    // Existence first: it bounds the cost search and rules out hopeless cases.
    let (any, nodes) = solve_root(&cd, mode, options, max_steps, max_branches, usize::MAX);
    stats.nodes += nodes;
    let Some(any) = any else { return Ok((None, stats)) };
    for c in 0..any.cost {
        let (found, nodes) = solve_root(&cd, mode, options, max_steps, max_branches, c);
        stats.nodes += nodes;
        if let Some(f) = found {
            return Ok((Some(f.plan), stats));
        }
    }
    Ok((Some(any.plan), stats))
}

/// Default branch budget: sensing actions times steps.
pub fn default_max_branches(d: &PlanningDomain, max_steps: usize) -> usize {
    d.actions.iter().filter(|a| a.is_sensing()).count() * max_steps
}

/// Engine settings matching a search run.
pub fn engine_config(max_steps: usize, max_branches: usize, mode: Mode, options: SearchOptions) -> EngineConfig {
    EngineConfig { max_steps, max_branches, mode, static_facts: options.optimize }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_domain;

    const SMART_HOME: &str = "
        (:action open_door :effect when ¬ab_open open)
        (:action drive :executable (and open ¬in_liv) :effect in_liv)
        (:action sense_open :observe open)
        (:init ¬in_liv ¬open)
        (:goal weak in_liv)";

    #[test]
    fn smart_home_plan() {
        let d = parse_domain(SMART_HOME).unwrap();
        let p = find_plan(&d, 4, 1, Mode::Sequential, SearchOptions::default()).unwrap().unwrap();
        assert_eq!(p.to_compact(), "open_door; sense_open; [if open then drive else []]");
        let o = find_optimal_plan(&d, 4, 1, Mode::Sequential, SearchOptions::default()).unwrap().unwrap();
        assert_eq!(o.occ_count(), 3);
    }

    #[test]
    fn goal_known_initially_gives_leaf() {
        let d = parse_domain("(:fluents f) (:init f) (:goal strong f)").unwrap();
        let p = find_plan(&d, 2, 0, Mode::Sequential, SearchOptions::default()).unwrap().unwrap();
        assert!(p.is_leaf());
    }

    #[test]
    fn parallel_search_matches_sequential() {
        let d = parse_domain(SMART_HOME).unwrap();
        let single = find_plan(&d, 4, 1, Mode::Sequential, SearchOptions::default()).unwrap();
        let multi = find_plan(&d, 4, 1, Mode::Sequential, SearchOptions { optimize: false, jobs: 3 }).unwrap();
        assert_eq!(single, multi);
    }

    #[test]
    fn too_few_steps_yields_none() {
        let d = parse_domain(SMART_HOME).unwrap();
        assert!(find_plan(&d, 2, 1, Mode::Sequential, SearchOptions::default()).unwrap().is_none());
    }
}
