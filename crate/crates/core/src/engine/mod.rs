//! Native evaluation of the h-approximation: knowledge histories per branch,
//! computed step by step as a stratified least fixpoint.
//!
//! Each branch keeps one [`Layer`] per evaluation step. Occurrence sets are
//! fixed inputs for a step, so the default-negated conditions (executability,
//! "not initiated", "not known whether") are decided against the closed
//! layers of earlier steps, and every rule within a layer is positive.

pub mod compiled;
pub mod layer;
pub mod lineage;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Fluent, Literal, PlanningDomain, ValidationReport};

pub use compiled::{CompiledDomain, Lit};
pub use layer::{close_layer, Contradiction, Layer};
pub use lineage::{Advance, Lineage, OccurrenceError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid domain:\n{0}")]
    InvalidDomain(ValidationReport),
    #[error("inconsistent init: `{0}` is both known true and known false")]
    InconsistentInit(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("step budget exhausted: horizon already at {max}")]
    StepBudget { max: usize },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("branch {branch} is not in use at step {step}")]
    UnknownBranch { step: usize, branch: usize },
    #[error("sequential mode allows one action per branch and step, got {count} in branch {branch} at step {step}")]
    TooManyActions { step: usize, branch: usize, count: usize },
    #[error("`{action}` is not executable at step {step} in branch {branch}: `{literal}` is not known")]
    NotExecutable { action: String, step: usize, branch: usize, literal: String },
    #[error("concurrency violation at step {step} in branch {branch}: {detail}")]
    Concurrency { step: usize, branch: usize, detail: String },
    #[error("sensing at step {step} in branch {branch} needs a new branch but the budget is {max}")]
    BranchBudget { step: usize, branch: usize, max: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Sequential,
    Concurrent,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sequential => "sequential",
            Mode::Concurrent => "concurrent",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub max_steps: usize,
    pub max_branches: usize,
    pub mode: Mode,
    /// Evaluate static fluents as plain facts.
    pub static_facts: bool,
}

impl EngineConfig {
    pub fn new(max_steps: usize, max_branches: usize) -> Self {
        EngineConfig { max_steps, max_branches, mode: Mode::Sequential, static_facts: false }
    }

    pub fn concurrent(mut self) -> Self {
        self.mode = Mode::Concurrent;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct KnowledgeAtom {
    pub literal: Literal,
    pub step: usize,
    pub eval: usize,
    pub branch: usize,
}

impl fmt::Display for KnowledgeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "knows({},{},{},{})", self.literal, self.step, self.eval, self.branch)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Occurrence {
    pub action: String,
    pub step: usize,
    pub branch: usize,
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "occ({},{},{})", self.action, self.step, self.branch)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BranchEvent {
    pub step: usize,
    pub parent: usize,
    pub child: usize,
    pub sensed: Fluent,
}

impl fmt::Display for BranchEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "nextBr({},{},{})", self.step, self.parent, self.child)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SensingResult {
    pub literal: Literal,
    pub step: usize,
    pub branch: usize,
}

impl fmt::Display for SensingResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sRes({},{},{})", self.literal, self.step, self.branch)
    }
}

/// Knowledge history of one branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchHistory {
    /// First evaluation step with atoms in this branch (the step of the
    /// sensing event that created it; 0 for the root branch).
    pub first_eval: usize,
    /// `layers[i]` is the closed layer at evaluation step `first_eval + i`.
    pub layers: Vec<Layer>,
    pub current: Lineage,
}

impl BranchHistory {
    pub fn layer(&self, eval: usize) -> Option<&Layer> {
        eval.checked_sub(self.first_eval).and_then(|i| self.layers.get(i))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpistemicState {
    pub horizon: usize,
    pub max_steps: usize,
    pub max_branches: usize,
    /// Indexed by branch id; used branches always form a prefix `0..n`.
    pub branches: Vec<BranchHistory>,
    pub occurrences: Vec<Occurrence>,
    pub events: Vec<BranchEvent>,
    pub sensing: Vec<SensingResult>,
    pub inconsistency: Option<(usize, Contradiction)>,
}

impl EpistemicState {
    pub fn is_consistent(&self) -> bool {
        self.inconsistency.is_none()
    }

    pub fn used_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn is_used(&self, step: usize, branch: usize) -> bool {
        self.branches.get(branch).is_some_and(|b| b.layer(step).is_some() && (branch == 0 || step > b.first_eval))
    }

    pub fn occurrences_at(&self, step: usize, branch: usize) -> impl Iterator<Item = &Occurrence> {
        self.occurrences.iter().filter(move |o| o.step == step && o.branch == branch)
    }

    /// Number of knowledge atoms at each evaluation step, summed over branches.
    pub fn atom_counts(&self) -> Vec<usize> {
        (0..=self.horizon)
            .map(|e| self.branches.iter().filter_map(|b| b.layer(e)).map(Layer::atom_count).sum())
            .collect()
    }

    pub fn atom_total(&self) -> usize {
        self.branches.iter().flat_map(|b| &b.layers).map(Layer::atom_count).sum()
    }
}

pub struct Engine {
    cd: CompiledDomain,
    config: EngineConfig,
}

impl Engine {
    pub fn new(domain: &PlanningDomain, config: EngineConfig) -> Result<Self, EngineError> {
        let cd =
            if config.static_facts { CompiledDomain::with_static_facts(domain)? } else { CompiledDomain::new(domain)? };
        Ok(Engine { cd, config })
    }

    pub fn compiled(&self) -> &CompiledDomain {
        &self.cd
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn init_state(&self) -> Result<EpistemicState, EngineError> {
        let root = Lineage::root(&self.cd);
        if let Some(c) = root.contradiction {
            return Err(EngineError::InconsistentInit(self.cd.fluents[c.fluent].clone()));
        }
        Ok(EpistemicState {
            horizon: 0,
            max_steps: self.config.max_steps,
            max_branches: self.config.max_branches,
            branches: vec![BranchHistory { first_eval: 0, layers: vec![root.layer.clone()], current: root }],
            occurrences: Vec::new(),
            events: Vec::new(),
            sensing: Vec::new(),
            inconsistency: None,
        })
    }

    /// Recloses every layer of every branch. Stored layers are already
    /// closed, so this returns an equal state.
    pub fn closure(&self, s: &EpistemicState) -> EpistemicState {
        let mut out = s.clone();
        for (br, b) in out.branches.iter_mut().enumerate() {
            for layer in &mut b.layers {
                let applied = &b.current.applied;
                if let Err(c) = close_layer(&self.cd, layer, applied) {
                    out.inconsistency.get_or_insert((br, c));
                }
            }
        }
        out
    }

    pub fn check_executable(&self, s: &EpistemicState, action: &str, step: usize, branch: usize) -> bool {
        let Some(a) = self.cd.action_index(action) else { return false };
        self.cd.actions[a].executable.iter().all(|&l| self.knows_lit(s, l, step, step, branch))
    }

    pub fn knows(&self, s: &EpistemicState, l: &Literal, step: usize, eval: usize, branch: usize) -> bool {
        self.cd.lit_of(l).is_some_and(|code| self.knows_lit(s, code, step, eval, branch))
    }

    fn knows_lit(&self, s: &EpistemicState, l: Lit, step: usize, eval: usize, branch: usize) -> bool {
        step <= eval
            && s.branches.get(branch).and_then(|b| b.layer(eval)).is_some_and(|layer| layer.knows(&self.cd, l, step))
    }

    fn resolve(&self, names: &[String]) -> Result<Vec<usize>, StepError> {
        names.iter().map(|n| self.cd.action_index(n).ok_or_else(|| StepError::UnknownAction(n.clone()))).collect()
    }

    fn occurrence_error(&self, e: OccurrenceError, step: usize, branch: usize) -> StepError {
        let cd = &self.cd;
        let concurrency = |detail: String| StepError::Concurrency { step, branch, detail };
        match e {
            OccurrenceError::NotExecutable { action, literal } => StepError::NotExecutable {
                action: cd.actions[action].name.clone(),
                step,
                branch,
                literal: cd.literal(literal).to_string(),
            },
            OccurrenceError::DuplicateAction(a) => concurrency(format!("`{}` occurs twice", cd.actions[a].name)),
            OccurrenceError::ConcurrentSensing(a, b) => concurrency(format!(
                "sensing actions `{}` and `{}` occur together",
                cd.actions[a].name, cd.actions[b].name
            )),
            OccurrenceError::SimilarEffects(a, b) => {
                concurrency(format!("`{}` and `{}` have the same effect", cd.effects[a].id, cd.effects[b].id))
            }
            OccurrenceError::ContradictoryEffects(a, b) => {
                concurrency(format!("`{}` and `{}` have complementary effects", cd.effects[a].id, cd.effects[b].id))
            }
        }
    }

    /// Executes the occurrence sets given per branch at the current horizon
    /// and advances every used branch by one step. Branches without an entry
    /// stay idle.
    pub fn step(
        &self,
        s: &EpistemicState,
        occurrences: &BTreeMap<usize, Vec<String>>,
    ) -> Result<EpistemicState, StepError> {
        let t = s.horizon;
        if t >= self.config.max_steps {
            return Err(StepError::StepBudget { max: self.config.max_steps });
        }
        if let Some(&branch) = occurrences.keys().find(|&&b| !s.is_used(t, b)) {
            return Err(StepError::UnknownBranch { step: t, branch });
        }
        let mut next = s.clone();
        next.horizon = t + 1;
        let used = s.branches.len();
        for br in 0..used {
            let names = occurrences.get(&br).map(Vec::as_slice).unwrap_or(&[]);
            if self.config.mode == Mode::Sequential && names.len() > 1 {
                return Err(StepError::TooManyActions { step: t, branch: br, count: names.len() });
            }
            let actions = self.resolve(names)?;
            let lineage = s.branches[br].current.clone();
            let advance = lineage.advance(&self.cd, &actions).map_err(|e| self.occurrence_error(e, t, br))?;
            for name in names {
                next.occurrences.push(Occurrence { action: name.clone(), step: t, branch: br });
            }
            match advance {
                Advance::Single { next: lin, confirmed } => {
                    if let Some(f) = confirmed {
                        next.sensing.push(SensingResult {
                            literal: self.cd.literal(compiled::lit(f, true)),
                            step: t,
                            branch: br,
                        });
                    }
                    Self::note(&mut next, br, &lin);
                    let b = &mut next.branches[br];
                    b.layers.push(lin.layer.clone());
                    b.current = lin;
                }
                Advance::Split { fluent, positive, negative } => {
                    let child = next.branches.len();
                    if child > self.config.max_branches {
                        return Err(StepError::BranchBudget { step: t, branch: br, max: self.config.max_branches });
                    }
                    let sensed = Fluent::new(self.cd.fluents[fluent].clone());
                    next.events.push(BranchEvent { step: t, parent: br, child, sensed });
                    next.sensing.push(SensingResult {
                        literal: self.cd.literal(compiled::lit(fluent, true)),
                        step: t,
                        branch: br,
                    });
                    next.sensing.push(SensingResult {
                        literal: self.cd.literal(compiled::lit(fluent, false)),
                        step: t,
                        branch: child,
                    });
                    Self::note(&mut next, br, &positive);
                    Self::note(&mut next, child, &negative);
                    let inherited = lineage.layer.clone();
                    next.branches.push(BranchHistory {
                        first_eval: t,
                        layers: vec![inherited, negative.layer.clone()],
                        current: negative,
                    });
                    let b = &mut next.branches[br];
                    b.layers.push(positive.layer.clone());
                    b.current = positive;
                }
            }
        }
        debug_assert!(self.check_invariants(&next).is_empty(), "{:?}", self.check_invariants(&next));
        Ok(next)
    }

    fn note(s: &mut EpistemicState, branch: usize, lin: &Lineage) {
        if let Some(c) = lin.contradiction {
            s.inconsistency.get_or_insert((branch, c));
        }
    }

    /// Every knowledge atom of the state, ordered by branch, eval step, step.
    pub fn atoms(&self, s: &EpistemicState) -> Vec<KnowledgeAtom> {
        let mut out = Vec::new();
        for (br, b) in s.branches.iter().enumerate() {
            for (i, layer) in b.layers.iter().enumerate() {
                for (t, set) in layer.steps.iter().enumerate() {
                    for l in set.ones() {
                        out.push(KnowledgeAtom {
                            literal: self.cd.literal(l),
                            step: t,
                            eval: b.first_eval + i,
                            branch: br,
                        });
                    }
                }
            }
        }
        out
    }

    /// One atom per line, sorted lexicographically.
    pub fn trace(&self, s: &EpistemicState) -> String {
        let mut lines: Vec<String> = self.atoms(s).iter().map(ToString::to_string).collect();
        lines.extend(s.sensing.iter().map(ToString::to_string));
        lines.extend(s.events.iter().map(ToString::to_string));
        lines.extend(s.occurrences.iter().map(ToString::to_string));
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// Checks the structural properties every reachable state must have:
    /// closed layers, monotone growth along eval steps, `t <= t1`, a
    /// well-formed branch tree, and complete inheritance at branch events.
    /// Returns a description of each violation.
    pub fn check_invariants(&self, s: &EpistemicState) -> Vec<String> {
        let mut out = Vec::new();
        for (br, b) in s.branches.iter().enumerate() {
            for (i, layer) in b.layers.iter().enumerate() {
                let eval = b.first_eval + i;
                if layer.eval != eval || layer.steps.len() != eval + 1 {
                    out.push(format!("branch {br}: layer {eval} has the wrong shape"));
                }
                let mut reclosed = layer.clone();
                let _ = close_layer(&self.cd, &mut reclosed, &b.current.applied);
                if &reclosed != layer {
                    out.push(format!("branch {br}: layer {eval} is not a fixpoint"));
                }
                if let Some(next) = b.layers.get(i + 1) {
                    for (t, set) in layer.steps.iter().enumerate() {
                        if !set.is_subset(&next.steps[t]) {
                            out.push(format!("branch {br}: knowledge about step {t} shrinks after eval step {eval}"));
                        }
                    }
                }
            }
            if b.first_eval + b.layers.len() != s.horizon + 1 {
                out.push(format!("branch {br}: history does not reach the horizon"));
            }
        }
        let mut children = vec![0usize; s.branches.len()];
        for ev in &s.events {
            if ev.child <= ev.parent {
                out.push(format!("{ev}: child is not greater than its parent"));
            }
            match children.get_mut(ev.child) {
                Some(n) => *n += 1,
                None => out.push(format!("{ev}: child branch not in use")),
            }
            if let (Some(p), Some(c)) = (s.branches.get(ev.parent), s.branches.get(ev.child)) {
                if c.first_eval != ev.step || p.layer(ev.step) != c.layers.first() {
                    out.push(format!("{ev}: child did not inherit the parent's knowledge"));
                }
            }
        }
        for (br, &n) in children.iter().enumerate() {
            let expected = usize::from(br != 0);
            if n != expected {
                out.push(format!("branch {br} is created by {n} events"));
            }
        }
        out
    }
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

    fn run(engine: &Engine, steps: &[&[(usize, &str)]]) -> EpistemicState {
        let mut s = engine.init_state().unwrap();
        for occ in steps {
            let mut m: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for &(br, a) in *occ {
                m.entry(br).or_default().push(a.to_string());
            }
            s = engine.step(&s, &m).unwrap();
        }
        s
    }

    fn smart_home() -> Engine {
        Engine::new(&parse_domain(SMART_HOME).unwrap(), EngineConfig::new(4, 1)).unwrap()
    }

    #[test]
    fn init_state_holds_init_literals() {
        let e = smart_home();
        let s = e.init_state().unwrap();
        assert_eq!(e.trace(&s), "knows(¬in_liv,0,0,0)\nknows(¬open,0,0,0)\n");
    }

    #[test]
    fn oneof_forces_remaining_literal() {
        let d = parse_domain("(:fluents a b) (:init ¬a (oneof a b))").unwrap();
        let e = Engine::new(&d, EngineConfig::new(1, 0)).unwrap();
        let s = e.init_state().unwrap();
        assert!(e.knows(&s, &Literal::pos("b"), 0, 0, 0));
    }

    #[test]
    fn smart_home_plan_trace() {
        let e = smart_home();
        let s = run(&e, &[&[(0, "open_door")], &[(0, "sense_open")], &[(0, "drive")]]);
        let trace = e.trace(&s);
        for atom in [
            "knows(¬in_liv,1,1,0)",
            "sRes(open,1,0)",
            "sRes(¬open,1,1)",
            "nextBr(1,0,1)",
            "knows(¬open,1,2,1)",
            "knows(ab_open,0,2,1)",
            "knows(¬ab_open,0,2,0)",
            "knows(in_liv,3,3,0)",
        ] {
            assert!(trace.lines().any(|l| l == atom), "missing {atom}");
        }
        assert!(!e.knows(&s, &Literal::pos("ab_open"), 0, 2, 0));
        assert!(e.check_invariants(&s).is_empty());
        assert_eq!(e.closure(&s), s);
    }

    #[test]
    fn executability_requires_knowledge() {
        let e = smart_home();
        let s = run(&e, &[&[(0, "open_door")], &[(0, "sense_open")]]);
        assert!(e.check_executable(&s, "drive", 2, 0));
        assert!(!e.check_executable(&s, "drive", 0, 0));
        assert!(e.check_executable(&s, "sense_open", 0, 0));
        let s0 = e.init_state().unwrap();
        let err = e.step(&s0, &BTreeMap::from([(0, vec!["drive".to_string()])])).unwrap_err();
        assert!(matches!(err, StepError::NotExecutable { .. }));
    }

    #[test]
    fn query_with_step_after_eval_is_false() {
        let e = smart_home();
        let s = run(&e, &[&[(0, "open_door")]]);
        assert!(e.knows(&s, &Literal::neg("in_liv"), 1, 1, 0));
        assert!(!e.knows(&s, &Literal::neg("in_liv"), 1, 0, 0));
    }

    #[test]
    fn branch_budget_is_enforced() {
        let d = parse_domain("(:action sense :observe f)").unwrap();
        let e = Engine::new(&d, EngineConfig::new(4, 0)).unwrap();
        let s = e.init_state().unwrap();
        let err = e.step(&s, &BTreeMap::from([(0, vec!["sense".to_string()])])).unwrap_err();
        assert!(matches!(err, StepError::BranchBudget { .. }));
    }

    #[test]
    fn sensing_known_true_does_not_branch() {
        let d = parse_domain("(:action sense :observe f) (:init f)").unwrap();
        let e = Engine::new(&d, EngineConfig::new(2, 1)).unwrap();
        let s = run(&e, &[&[(0, "sense")]]);
        assert!(s.events.is_empty());
        assert_eq!(s.sensing.len(), 1);
        let d = parse_domain("(:action sense :observe f) (:init ¬f)").unwrap();
        let e = Engine::new(&d, EngineConfig::new(2, 1)).unwrap();
        let s = run(&e, &[&[(0, "sense")]]);
        assert!(s.events.is_empty() && s.sensing.is_empty());
    }

    #[test]
    fn concurrency_rules() {
        let d = parse_domain(
            "(:action a :effect f) (:action b :effect f) (:action c :effect ¬f)
             (:action d :effect when g ¬f) (:action e :effect when ¬g f)
             (:action s1 :observe g) (:action s2 :observe g)",
        )
        .unwrap();
        let e = Engine::new(&d, EngineConfig::new(2, 2).concurrent()).unwrap();
        let s = e.init_state().unwrap();
        let occ = |names: &[&str]| BTreeMap::from([(0, names.iter().map(|n| n.to_string()).collect())]);
        assert!(matches!(e.step(&s, &occ(&["a", "b"])), Err(StepError::Concurrency { .. })));
        assert!(matches!(e.step(&s, &occ(&["a", "c"])), Err(StepError::Concurrency { .. })));
        assert!(matches!(e.step(&s, &occ(&["s1", "s2"])), Err(StepError::Concurrency { .. })));
        assert!(e.step(&s, &occ(&["d", "e"])).is_ok());
        assert!(e.step(&s, &occ(&["a", "s1"])).is_ok());
        let seq = Engine::new(&d, EngineConfig::new(2, 2)).unwrap();
        assert!(matches!(seq.step(&s, &occ(&["a", "s1"])), Err(StepError::TooManyActions { .. })));
    }
}
