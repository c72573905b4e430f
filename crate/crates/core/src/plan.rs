//! Conditional plans, their atom form, replay and verification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{Engine, EngineConfig, EngineError, EpistemicState, Mode, StepError};
use crate::model::{Literal, PlanningDomain};

/// A branching plan. Each node is the occurrence set of one step; the
/// depth of a node is its step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ConditionalPlan {
    Leaf,
    /// A step without a branch. `confirmed` names a sensed fluent that was
    /// already known true, so the sensing yields one result and no branch.
    Seq {
        actions: Vec<String>,
        confirmed: Option<String>,
        next: Box<ConditionalPlan>,
    },
    /// A step whose sensing action splits the plan on `sensed`.
    Branch {
        actions: Vec<String>,
        sensed: String,
        if_true: Box<ConditionalPlan>,
        if_false: Box<ConditionalPlan>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlanAtom {
    Occ { action: String, step: usize, branch: usize },
    NextBr { step: usize, parent: usize, child: usize },
    SRes { literal: Literal, step: usize, branch: usize },
}

impl fmt::Display for PlanAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanAtom::Occ { action, step, branch } => write!(f, "occ({action},{step},{branch})"),
            PlanAtom::NextBr { step, parent, child } => write!(f, "nextBr({step},{parent},{child})"),
            PlanAtom::SRes { literal, step, branch } => write!(f, "sRes({literal},{step},{branch})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("nextBr({step},{parent},{child}) has no sensing occurrence in its parent branch")]
    DanglingBranch { step: usize, parent: usize, child: usize },
    #[error("sensing at step {step} in branch {branch} lacks a matching pair of results")]
    MissingSensingResult { step: usize, branch: usize },
    #[error("atom `{0}` is not reachable from occurrences in branch 0")]
    Unreachable(String),
    #[error("branches are not numbered in allocation order (expected `{expected}`)")]
    NonCanonical { expected: String },
    #[error("empty occurrence set at step {step} in branch {branch}")]
    EmptyStep { step: usize, branch: usize },
}

impl ConditionalPlan {
    pub fn seq(actions: &[&str], next: ConditionalPlan) -> Self {
        ConditionalPlan::Seq { actions: to_strings(actions), confirmed: None, next: Box::new(next) }
    }

    pub fn branch(actions: &[&str], sensed: &str, if_true: ConditionalPlan, if_false: ConditionalPlan) -> Self {
        ConditionalPlan::Branch {
            actions: to_strings(actions),
            sensed: sensed.to_string(),
            if_true: Box::new(if_true),
            if_false: Box::new(if_false),
        }
    }

    /// A linear plan with one action per step.
    pub fn sequence(actions: &[&str]) -> Self {
        actions.iter().rev().fold(ConditionalPlan::Leaf, |next, a| ConditionalPlan::seq(&[a], next))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, ConditionalPlan::Leaf)
    }

    pub fn actions(&self) -> &[String] {
        match self {
            ConditionalPlan::Leaf => &[],
            ConditionalPlan::Seq { actions, .. } | ConditionalPlan::Branch { actions, .. } => actions,
        }
    }

    /// Total number of occurrences summed over all branches.
    pub fn occ_count(&self) -> usize {
        match self {
            ConditionalPlan::Leaf => 0,
            ConditionalPlan::Seq { actions, next, .. } => actions.len() + next.occ_count(),
            ConditionalPlan::Branch { actions, if_true, if_false, .. } => {
                actions.len() + if_true.occ_count() + if_false.occ_count()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            ConditionalPlan::Leaf => 0,
            ConditionalPlan::Seq { next, .. } => 1 + next.depth(),
            ConditionalPlan::Branch { if_true, if_false, .. } => 1 + if_true.depth().max(if_false.depth()),
        }
    }

    pub fn branch_count(&self) -> usize {
        match self {
            ConditionalPlan::Leaf => 0,
            ConditionalPlan::Seq { next, .. } => next.branch_count(),
            ConditionalPlan::Branch { if_true, if_false, .. } => 1 + if_true.branch_count() + if_false.branch_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.branch_count() + 1
    }

    /// Compact one-line form, e.g. `a; sense_f; [if f then b else []]`.
    pub fn to_compact(&self) -> String {
        fn step(actions: &[String]) -> String {
            if actions.len() == 1 {
                actions[0].clone()
            } else {
                format!("{{{}}}", actions.join(", "))
            }
        }
        match self {
            ConditionalPlan::Leaf => "[]".to_string(),
            ConditionalPlan::Seq { actions, next, .. } if next.is_leaf() => step(actions),
            ConditionalPlan::Seq { actions, next, .. } => format!("{}; {}", step(actions), next.to_compact()),
            ConditionalPlan::Branch { actions, sensed, if_true, if_false } => {
                format!("{}; [if {sensed} then {} else {}]", step(actions), if_true.to_compact(), if_false.to_compact())
            }
        }
    }

    /// Indented multi-line form.
    pub fn render_tree(&self) -> String {
        let mut out = String::new();
        self.write_tree(&mut out, 0);
        if out.is_empty() {
            out.push_str("done\n");
        }
        out
    }

    fn write_tree(&self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        match self {
            ConditionalPlan::Leaf => {}
            ConditionalPlan::Seq { actions, next, .. } => {
                out.push_str(&format!("{pad}{}\n", actions.join(" | ")));
                next.write_tree(out, indent);
            }
            ConditionalPlan::Branch { actions, sensed, if_true, if_false } => {
                out.push_str(&format!("{pad}{}\n{pad}if {sensed}\n", actions.join(" | ")));
                for (arm, label) in [(if_true, None), (if_false, Some("else"))] {
                    if let Some(label) = label {
                        out.push_str(&format!("{pad}{label}\n"));
                    }
                    if arm.is_leaf() {
                        out.push_str(&format!("{pad}  done\n"));
                    } else {
                        arm.write_tree(out, indent + 1);
                    }
                }
            }
        }
    }

    /// The occ/nextBr/sRes atoms of the plan. Child branches are numbered
    /// in allocation order: step by step, parents in ascending order, each
    /// taking the next unused index.
    pub fn extract_atoms(&self) -> BTreeSet<PlanAtom> {
        let mut atoms = BTreeSet::new();
        let all = nodes(self);
        let mut next_free = 1;
        for &(step, branch, node) in &all {
            for a in node.actions() {
                atoms.insert(PlanAtom::Occ { action: a.clone(), step, branch });
            }
            match node {
                ConditionalPlan::Seq { confirmed: Some(f), .. } => {
                    atoms.insert(PlanAtom::SRes { literal: Literal::pos(f.clone()), step, branch });
                }
                ConditionalPlan::Branch { sensed, .. } => {
                    let child = next_free;
                    next_free += 1;
                    atoms.insert(PlanAtom::NextBr { step, parent: branch, child });
                    atoms.insert(PlanAtom::SRes { literal: Literal::pos(sensed.clone()), step, branch });
                    atoms.insert(PlanAtom::SRes { literal: Literal::neg(sensed.clone()), step, branch: child });
                }
                _ => {}
            }
        }
        atoms
    }

    /// One JSON object per occurrence, ordered by step and branch. Sensing
    /// occurrences (as declared in `d`) carry the sensed fluent and, when
    /// they branch, the branches of both outcomes.
    pub fn to_json_lines(&self, d: &PlanningDomain) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            action: &'a str,
            step: usize,
            branch: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            sensed: Option<String>,
            #[serde(skip_serializing_if = "Option::is_none")]
            then_branch: Option<usize>,
            #[serde(skip_serializing_if = "Option::is_none")]
            else_branch: Option<usize>,
        }
        let atoms = self.extract_atoms();
        let mut branches: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for a in &atoms {
            if let PlanAtom::NextBr { step, parent, child } = a {
                branches.insert((*step, *parent), *child);
            }
        }
        let mut occs: Vec<(usize, usize, &str)> = atoms
            .iter()
            .filter_map(|a| match a {
                PlanAtom::Occ { action, step, branch } => Some((*step, *branch, action.as_str())),
                _ => None,
            })
            .collect();
        occs.sort();
        let mut out = String::new();
        for (step, branch, action) in occs {
            let sensing = d.action(action).is_some_and(|a| a.is_sensing());
            let sensed =
                if sensing { d.action(action).and_then(|a| a.sensed()).map(|f| f.name().to_string()) } else { None };
            let child = if sensing { branches.get(&(step, branch)).copied() } else { None };
            let rec = Record { action, step, branch, sensed, then_branch: child.map(|_| branch), else_branch: child };
            out.push_str(&serde_json::to_string(&rec).expect("plan records serialize"));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for ConditionalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_compact())
    }
}

fn to_strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub fn render_atoms(atoms: &BTreeSet<PlanAtom>) -> String {
    let mut lines: Vec<String> = atoms.iter().map(ToString::to_string).collect();
    lines.sort();
    lines.iter().map(|l| format!("{l}\n")).collect()
}

/// Rebuilds a plan from its atom form. The atom set must be exactly the one
/// [`ConditionalPlan::extract_atoms`] produces for the result.
pub fn parse_atoms(atoms: &BTreeSet<PlanAtom>) -> Result<ConditionalPlan, PlanError> {
    let mut occ: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    let mut next_br: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut results: BTreeMap<(usize, usize), Vec<&Literal>> = BTreeMap::new();
    for a in atoms {
        match a {
            PlanAtom::Occ { action, step, branch } => occ.entry((*step, *branch)).or_default().push(action.clone()),
            PlanAtom::NextBr { step, parent, child } => {
                if !occ_exists(atoms, *step, *parent) {
                    return Err(PlanError::DanglingBranch { step: *step, parent: *parent, child: *child });
                }
                next_br.insert((*step, *parent), *child);
            }
            PlanAtom::SRes { literal, step, branch } => results.entry((*step, *branch)).or_default().push(literal),
        }
    }
    let plan = build(&occ, &next_br, &results, 0, 0)?;
    let canonical = plan.extract_atoms();
    if &canonical != atoms {
        if let Some(extra) = atoms.difference(&canonical).next() {
            if !canonical.iter().any(|c| same_shape(c, extra)) {
                return Err(PlanError::Unreachable(extra.to_string()));
            }
        }
        let expected = canonical.difference(atoms).next().map(ToString::to_string).unwrap_or_default();
        return Err(PlanError::NonCanonical { expected });
    }
    Ok(plan)
}

fn same_shape(a: &PlanAtom, b: &PlanAtom) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

fn occ_exists(atoms: &BTreeSet<PlanAtom>, step: usize, branch: usize) -> bool {
    atoms.iter().any(|a| matches!(a, PlanAtom::Occ { step: s, branch: b, .. } if *s == step && *b == branch))
}

fn build(
    occ: &BTreeMap<(usize, usize), Vec<String>>,
    next_br: &BTreeMap<(usize, usize), usize>,
    results: &BTreeMap<(usize, usize), Vec<&Literal>>,
    step: usize,
    branch: usize,
) -> Result<ConditionalPlan, PlanError> {
    let Some(actions) = occ.get(&(step, branch)) else {
        return Ok(ConditionalPlan::Leaf);
    };
    let positive = results.get(&(step, branch)).and_then(|ls| ls.iter().find(|l| l.positive));
    match next_br.get(&(step, branch)) {
        Some(&child) => {
            let pos = positive.ok_or(PlanError::MissingSensingResult { step, branch })?;
            let neg = results.get(&(step, child)).and_then(|ls| ls.iter().find(|l| !l.positive));
            if neg.map(|l| &l.fluent) != Some(&pos.fluent) {
                return Err(PlanError::MissingSensingResult { step, branch });
            }
            Ok(ConditionalPlan::Branch {
                actions: actions.clone(),
                sensed: pos.fluent.name().to_string(),
                if_true: Box::new(build(occ, next_br, results, step + 1, branch)?),
                if_false: Box::new(build(occ, next_br, results, step + 1, child)?),
            })
        }
        None => Ok(ConditionalPlan::Seq {
            actions: actions.clone(),
            confirmed: positive.map(|l| l.fluent.name().to_string()),
            next: Box::new(build(occ, next_br, results, step + 1, branch)?),
        }),
    }
}

/// Reads the plan executed so far off an engine state.
pub fn plan_of_state(s: &EpistemicState) -> Result<ConditionalPlan, PlanError> {
    let mut atoms = BTreeSet::new();
    for o in &s.occurrences {
        atoms.insert(PlanAtom::Occ { action: o.action.clone(), step: o.step, branch: o.branch });
    }
    for e in &s.events {
        atoms.insert(PlanAtom::NextBr { step: e.step, parent: e.parent, child: e.child });
    }
    for r in &s.sensing {
        atoms.insert(PlanAtom::SRes { literal: r.literal.clone(), step: r.step, branch: r.branch });
    }
    parse_atoms(&atoms)
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("plan is deeper ({depth}) than the step bound {max}")]
    TooDeep { depth: usize, max: usize },
    #[error("at step {step} in branch {branch} the plan expects {expected} but sensing gave {actual}")]
    SensingMismatch { step: usize, branch: usize, expected: String, actual: String },
    #[error("knowledge becomes inconsistent about `{fluent}` at step {step} (eval step {eval}) in branch {branch}")]
    Inconsistent { branch: usize, step: usize, eval: usize, fluent: String },
}

/// Executes `plan` through the engine, padding with idle steps up to the
/// engine's step bound.
pub fn replay(engine: &Engine, plan: &ConditionalPlan) -> Result<EpistemicState, ReplayError> {
    replay_steps(engine, plan, engine.config().max_steps)
}

/// Executes `plan` for `steps` steps (at least the plan's depth).
pub fn replay_steps(engine: &Engine, plan: &ConditionalPlan, steps: usize) -> Result<EpistemicState, ReplayError> {
    let max = engine.config().max_steps;
    if plan.depth() > max {
        return Err(ReplayError::TooDeep { depth: plan.depth(), max });
    }
    let mut s = engine.init_state()?;
    let mut nodes: BTreeMap<usize, &ConditionalPlan> = BTreeMap::from([(0, plan)]);
    for t in 0..steps.max(plan.depth()) {
        let occ: BTreeMap<usize, Vec<String>> =
            nodes.iter().filter(|(_, n)| !n.is_leaf()).map(|(&br, n)| (br, n.actions().to_vec())).collect();
        if let Some((&branch, _)) = occ.iter().find(|(_, a)| a.is_empty()) {
            return Err(PlanError::EmptyStep { step: t, branch }.into());
        }
        let next = engine.step(&s, &occ)?;
        let mut following = BTreeMap::new();
        for (&br, node) in &nodes {
            let event = next.events.iter().find(|e| e.step == t && e.parent == br);
            let confirmed = next.sensing.iter().any(|r| r.step == t && r.branch == br && r.literal.positive);
            let mismatch = |expected: &str, actual: &str| ReplayError::SensingMismatch {
                step: t,
                branch: br,
                expected: expected.to_string(),
                actual: actual.to_string(),
            };
            match node {
                ConditionalPlan::Leaf => {
                    following.insert(br, *node);
                }
                ConditionalPlan::Seq { confirmed: c, next: n, .. } => {
                    if event.is_some() {
                        return Err(mismatch("no branch", "a branch"));
                    }
                    if c.is_some() != confirmed {
                        return Err(mismatch(
                            if c.is_some() { "a confirmed result" } else { "no result" },
                            if confirmed { "a confirmed result" } else { "no result" },
                        ));
                    }
                    following.insert(br, n.as_ref());
                }
                ConditionalPlan::Branch { if_true, if_false, .. } => {
                    let Some(ev) = event else {
                        return Err(mismatch("a branch", "no branch"));
                    };
                    following.insert(br, if_true.as_ref());
                    following.insert(ev.child, if_false.as_ref());
                }
            }
        }
        for br in 0..next.branches.len() {
            following.entry(br).or_insert(&ConditionalPlan::Leaf);
        }
        nodes = following;
        s = next;
    }
    if let Some((branch, c)) = s.inconsistency {
        return Err(ReplayError::Inconsistent {
            branch,
            step: c.step,
            eval: c.eval,
            fluent: engine.compiled().fluents[c.fluent].clone(),
        });
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchVerdict {
    pub branch: usize,
    pub weak: bool,
    pub strong: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub branches: Vec<BranchVerdict>,
    pub plan_found: bool,
}

/// Replays `plan` to the step bound and evaluates the goals of every used
/// branch at the final step: the weak goal must hold in some branch and the
/// strong goal in all of them.
pub fn verify_plan(
    d: &PlanningDomain,
    plan: &ConditionalPlan,
    max_steps: usize,
    max_branches: usize,
    mode: Mode,
) -> Result<VerificationReport, ReplayError> {
    let config = EngineConfig { max_steps, max_branches, mode, static_facts: false };
    let engine = Engine::new(d, config)?;
    let s = replay(&engine, plan)?;
    Ok(verdict(&engine, &s))
}

pub fn verdict(engine: &Engine, s: &EpistemicState) -> VerificationReport {
    let cd = engine.compiled();
    let n = s.horizon;
    let branches: Vec<BranchVerdict> = (0..s.branches.len())
        .map(|br| {
            let holds =
                |lits: &[usize]| lits.iter().all(|&l| s.branches[br].layer(n).is_some_and(|x| x.knows(cd, l, n)));
            BranchVerdict { branch: br, weak: holds(&cd.weak_goal), strong: holds(&cd.strong_goal) }
        })
        .collect();
    let plan_found = branches.iter().any(|b| b.weak) && branches.iter().all(|b| b.strong);
    VerificationReport { branches, plan_found }
}

/// Every non-leaf node as `(step, branch, node)`, ordered by step and
/// then branch, with branches numbered in allocation order.
pub fn nodes(plan: &ConditionalPlan) -> Vec<(usize, usize, &ConditionalPlan)> {
    let mut result = Vec::new();
    let mut frontier = vec![(0usize, plan)];
    let mut next_free = 1;
    let mut step = 0;
    while !frontier.is_empty() {
        frontier.sort_by_key(|x| x.0);
        let mut following = Vec::new();
        for (br, node) in frontier {
            match node {
                ConditionalPlan::Leaf => continue,
                ConditionalPlan::Seq { next, .. } => following.push((br, next.as_ref())),
                ConditionalPlan::Branch { if_true, if_false, .. } => {
                    following.push((br, if_true.as_ref()));
                    following.push((next_free, if_false.as_ref()));
                    next_free += 1;
                }
            }
            result.push((step, br, node));
        }
        frontier = following;
        step += 1;
    }
    result
}
