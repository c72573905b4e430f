//! Brute-force possible-worlds semantics with temporal queries.
//!
//! A world is a bitmask over the domain's fluents. Knowledge after an action
//! sequence is the set of worlds still possible; knowledge about an earlier
//! step `t` is read off the initial worlds that survived every observation,
//! replayed for `t` steps. Executability is ignored.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::engine::{Engine, EngineConfig, EngineError, EpistemicState, KnowledgeAtom, Mode};
use crate::model::{Literal, PlanningDomain};
use crate::plan::{replay, ConditionalPlan, ReplayError};

pub const MAX_FLUENTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct WorldState(pub u64);

impl WorldState {
    pub fn contains(self, fluent: usize) -> bool {
        self.0 >> fluent & 1 == 1
    }

    pub fn with(self, fluent: usize, value: bool) -> WorldState {
        if value {
            WorldState(self.0 | 1 << fluent)
        } else {
            WorldState(self.0 & !(1 << fluent))
        }
    }
}

/// A real world together with the worlds the agent considers possible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CState {
    pub u: WorldState,
    pub sigma: BTreeSet<WorldState>,
}

impl CState {
    pub fn is_grounded(&self) -> bool {
        self.sigma.contains(&self.u)
    }
}

/// One step of an action sequence: the actions executed together and, when
/// one of them senses, the observed value of the sensed fluent.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TraceStep {
    pub actions: Vec<String>,
    pub observed: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OutcomeTrace {
    pub steps: Vec<TraceStep>,
}

impl OutcomeTrace {
    pub fn new() -> Self {
        OutcomeTrace::default()
    }

    pub fn then(mut self, action: &str) -> Self {
        self.steps.push(TraceStep { actions: vec![action.to_string()], observed: None });
        self
    }

    pub fn then_sense(mut self, action: &str, value: bool) -> Self {
        self.steps.push(TraceStep { actions: vec![action.to_string()], observed: Some(value) });
        self
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn prefix(&self, n: usize) -> OutcomeTrace {
        OutcomeTrace { steps: self.steps[..n.min(self.steps.len())].to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("the oracle handles at most {MAX_FLUENTS} fluents, domain has {0}")]
    TooManyFluents(usize),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown fluent `{0}`")]
    UnknownFluent(String),
    #[error("`{0}` is both added and removed by the same step")]
    EffectClash(String),
    #[error("no possible world is left")]
    EmptySigma,
    #[error("inconsistent init: no initial world satisfies the initial knowledge")]
    InconsistentInit,
    #[error("query step {step} is beyond the trace length {len}")]
    StepOutOfRange { step: usize, len: usize },
    #[error("trace observes a value at step {0} but no action senses there")]
    NoSensing(usize),
}

pub struct Oracle<'d> {
    d: &'d PlanningDomain,
    index: HashMap<&'d str, usize>,
}

impl<'d> Oracle<'d> {
    pub fn new(d: &'d PlanningDomain) -> Result<Self, OracleError> {
        if d.fluents.len() > MAX_FLUENTS {
            return Err(OracleError::TooManyFluents(d.fluents.len()));
        }
        let index = d.fluents.iter().enumerate().map(|(i, f)| (f.name(), i)).collect();
        Ok(Oracle { d, index })
    }

    fn fluent(&self, name: &str) -> Result<usize, OracleError> {
        self.index.get(name).copied().ok_or_else(|| OracleError::UnknownFluent(name.to_string()))
    }

    pub fn holds(&self, s: WorldState, l: &Literal) -> Result<bool, OracleError> {
        Ok(s.contains(self.fluent(l.fluent.name())?) == l.positive)
    }

    pub fn state(&self, true_fluents: &[&str]) -> Result<WorldState, OracleError> {
        true_fluents.iter().try_fold(WorldState(0), |s, f| Ok(s.with(self.fluent(f)?, true)))
    }

    /// Result of executing `actions` together in `s`: every effect whose
    /// conditions hold in `s` takes place. Sensing actions change nothing.
    pub fn res(&self, actions: &[String], s: WorldState) -> Result<WorldState, OracleError> {
        let mut add = 0u64;
        let mut del = 0u64;
        for name in actions {
            let a = self.d.action(name).ok_or_else(|| OracleError::UnknownAction(name.clone()))?;
            for ep in &a.effects {
                let mut fires = true;
                for c in &ep.conditions {
                    fires &= self.holds(s, c)?;
                }
                if fires {
                    let bit = 1u64 << self.fluent(ep.effect.fluent.name())?;
                    if ep.effect.positive {
                        add |= bit;
                    } else {
                        del |= bit;
                    }
                }
            }
        }
        if add & del != 0 {
            let f = (add & del).trailing_zeros() as usize;
            return Err(OracleError::EffectClash(self.d.fluents[f].name().to_string()));
        }
        Ok(WorldState((s.0 | add) & !del))
    }

    fn sensed(&self, actions: &[String]) -> Result<Option<usize>, OracleError> {
        for name in actions {
            let a = self.d.action(name).ok_or_else(|| OracleError::UnknownAction(name.clone()))?;
            if let Some(f) = a.sensed() {
                return Ok(Some(self.fluent(f.name())?));
            }
        }
        Ok(None)
    }

    /// Sensing keeps the worlds that agree with the real one on the sensed
    /// fluent (observed before the step's effects); effects apply pointwise.
    pub fn transition(&self, actions: &[String], c: &CState) -> Result<CState, OracleError> {
        let mut sigma: Vec<WorldState> = c.sigma.iter().copied().collect();
        if let Some(f) = self.sensed(actions)? {
            sigma.retain(|s| s.contains(f) == c.u.contains(f));
        }
        let u = self.res(actions, c.u)?;
        let sigma = sigma.into_iter().map(|s| self.res(actions, s)).collect::<Result<_, _>>()?;
        Ok(CState { u, sigma })
    }

    pub fn entails<'a>(
        &self,
        sigma: impl IntoIterator<Item = &'a WorldState>,
        l: &Literal,
    ) -> Result<bool, OracleError> {
        let mut any = false;
        for &s in sigma {
            any = true;
            if !self.holds(s, l)? {
                return Ok(false);
            }
        }
        if any {
            Ok(true)
        } else {
            Err(OracleError::EmptySigma)
        }
    }

    /// All worlds agreeing with the initial literals and oneof groups.
    pub fn initial_sigma(&self) -> Result<BTreeSet<WorldState>, OracleError> {
        let n = self.d.fluents.len();
        let mut out = BTreeSet::new();
        for bits in 0..(1u64 << n) {
            let s = WorldState(bits);
            let mut ok = true;
            for l in &self.d.init {
                ok &= self.holds(s, l)?;
            }
            for o in &self.d.oneofs {
                let mut count = 0;
                for l in &o.literals {
                    count += usize::from(self.holds(s, l)?);
                }
                ok &= count == 1;
            }
            if ok {
                out.insert(s);
            }
        }
        if out.is_empty() {
            return Err(OracleError::InconsistentInit);
        }
        Ok(out)
    }

    /// Initial worlds whose run agrees with every observation of the trace.
    pub fn surviving_initial(&self, trace: &OutcomeTrace) -> Result<BTreeSet<WorldState>, OracleError> {
        let mut out = BTreeSet::new();
        'worlds: for s0 in self.initial_sigma()? {
            let mut s = s0;
            for (i, step) in trace.steps.iter().enumerate() {
                if let Some(v) = step.observed {
                    let f = self.sensed(&step.actions)?.ok_or(OracleError::NoSensing(i))?;
                    if s.contains(f) != v {
                        continue 'worlds;
                    }
                }
                s = self.res(&step.actions, s)?;
            }
            out.insert(s0);
        }
        Ok(out)
    }

    /// The worlds possible at step `t` given everything observed in the trace.
    pub fn tqs_sigma(&self, trace: &OutcomeTrace, t: usize) -> Result<BTreeSet<WorldState>, OracleError> {
        if t > trace.len() {
            return Err(OracleError::StepOutOfRange { step: t, len: trace.len() });
        }
        let mut sigma = self.surviving_initial(trace)?;
        if sigma.is_empty() {
            return Err(OracleError::EmptySigma);
        }
        for step in &trace.steps[..t] {
            sigma = sigma.into_iter().map(|s| self.res(&step.actions, s)).collect::<Result<_, _>>()?;
        }
        Ok(sigma)
    }

    /// Whether `l` is known to hold at step `t` after the whole trace.
    pub fn tqs_entails(&self, trace: &OutcomeTrace, l: &Literal, t: usize) -> Result<bool, OracleError> {
        let sigma = self.tqs_sigma(trace, t)?;
        self.entails(&sigma, l)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SoundnessViolation {
    pub atom: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SoundnessReport {
    /// Knowledge atoms compared against the oracle.
    pub checked: usize,
    /// Atoms whose branch prefix no initial world survives; nothing to check.
    pub impossible: usize,
    pub violations: Vec<SoundnessViolation>,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum SoundnessError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// The action sequence and observations leading to the end of `branch`.
/// A sensing occurrence without a recorded result observed `false`.
pub fn branch_trace(d: &PlanningDomain, s: &EpistemicState, branch: usize) -> OutcomeTrace {
    // Walk up the branch tree to know which branch carried the lineage at
    // every step.
    let mut owner = vec![branch; s.horizon];
    let mut current = branch;
    while let Some(ev) = s.events.iter().find(|e| e.child == current) {
        for o in owner.iter_mut().take(ev.step) {
            *o = ev.parent;
        }
        current = ev.parent;
    }
    // Branch at each step is the owner of that step, except the step that
    // created a child, whose occurrences belong to the parent.
    let mut steps = Vec::with_capacity(s.horizon);
    for (t, &own) in owner.iter().enumerate() {
        let mut acting = own;
        if let Some(ev) = s.events.iter().find(|e| e.step == t && e.child == own) {
            acting = ev.parent;
        }
        let mut actions: Vec<String> = s.occurrences_at(t, acting).map(|o| o.action.clone()).collect();
        actions.sort();
        let sensing = actions.iter().any(|a| d.action(a).is_some_and(|a| a.is_sensing()));
        let observed = sensing
            .then(|| s.sensing.iter().find(|r| r.step == t && r.branch == own).is_some_and(|r| r.literal.positive));
        steps.push(TraceStep { actions, observed });
    }
    OutcomeTrace { steps }
}

/// Compares every knowledge atom of a replayed state with the oracle: an
/// atom `knows(l,t,e,br)` must be entailed at step `t` by the first `e`
/// steps of branch `br`'s trace.
pub fn check_state(d: &PlanningDomain, engine: &Engine, s: &EpistemicState) -> Result<SoundnessReport, OracleError> {
    let oracle = Oracle::new(d)?;
    let mut report = SoundnessReport::default();
    let mut sigmas: HashMap<(usize, usize, usize), Option<BTreeSet<WorldState>>> = HashMap::new();
    let traces: Vec<OutcomeTrace> = (0..s.branches.len()).map(|br| branch_trace(d, s, br)).collect();
    for KnowledgeAtom { literal, step, eval, branch } in engine.atoms(s) {
        let sigma = match sigmas.get(&(branch, eval, step)) {
            Some(x) => x.clone(),
            None => {
                let x = match oracle.tqs_sigma(&traces[branch].prefix(eval), step) {
                    Ok(x) => Some(x),
                    Err(OracleError::EmptySigma) => None,
                    Err(e) => return Err(e),
                };
                sigmas.insert((branch, eval, step), x.clone());
                x
            }
        };
        let Some(sigma) = sigma else {
            report.impossible += 1;
            continue;
        };
        report.checked += 1;
        if !oracle.entails(&sigma, &literal)? {
            let atom = KnowledgeAtom { literal, step, eval, branch };
            report.violations.push(SoundnessViolation { atom: atom.to_string() });
        }
    }
    Ok(report)
}

/// Replays `plan` and checks every knowledge atom of every branch against
/// the oracle.
pub fn soundness_check(
    d: &PlanningDomain,
    plan: &ConditionalPlan,
    max_steps: usize,
    max_branches: usize,
    mode: Mode,
) -> Result<SoundnessReport, SoundnessError> {
    let engine = Engine::new(d, EngineConfig { max_steps, max_branches, mode, static_facts: false })?;
    let s = replay(&engine, plan)?;
    Ok(check_state(d, &engine, &s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_domain;

    fn smart_home() -> PlanningDomain {
        parse_domain(
            "(:action open_door :effect when ¬ab_open open)
             (:action drive :executable (and open ¬in_liv) :effect in_liv)
             (:action sense_open :observe open)
             (:init ¬in_liv ¬open)",
        )
        .unwrap()
    }

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn res_examples() {
        let d = smart_home();
        let o = Oracle::new(&d).unwrap();
        let empty = WorldState(0);
        assert_eq!(o.res(&names(&["open_door"]), empty).unwrap(), o.state(&["open"]).unwrap());
        let ab = o.state(&["ab_open"]).unwrap();
        assert_eq!(o.res(&names(&["open_door"]), ab).unwrap(), ab);
        assert_eq!(
            o.res(&names(&["drive"]), o.state(&["open"]).unwrap()).unwrap(),
            o.state(&["open", "in_liv"]).unwrap()
        );
    }

    #[test]
    fn initial_sigma_of_smart_home() {
        let d = smart_home();
        let o = Oracle::new(&d).unwrap();
        let sigma = o.initial_sigma().unwrap();
        assert_eq!(sigma, BTreeSet::from([WorldState(0), o.state(&["ab_open"]).unwrap()]));
    }

    #[test]
    fn sensing_filters_sigma() {
        let d = smart_home();
        let o = Oracle::new(&d).unwrap();
        let open = o.state(&["open"]).unwrap();
        let c = CState { u: open, sigma: BTreeSet::from([open, WorldState(0)]) };
        let next = o.transition(&names(&["sense_open"]), &c).unwrap();
        assert_eq!(next.sigma, BTreeSet::from([open]));
        assert_eq!(next.u, open);
    }

    #[test]
    fn postdiction_examples() {
        let d = smart_home();
        let o = Oracle::new(&d).unwrap();
        let tr = OutcomeTrace::new().then("open_door").then_sense("sense_open", true);
        assert!(o.tqs_entails(&tr, &Literal::neg("ab_open"), 0).unwrap());
        let tr = OutcomeTrace::new().then("open_door").then_sense("sense_open", false);
        assert!(o.tqs_entails(&tr, &Literal::pos("ab_open"), 0).unwrap());
    }

    #[test]
    fn entails_empty_sigma_is_an_error() {
        let d = smart_home();
        let o = Oracle::new(&d).unwrap();
        assert_eq!(o.entails(&BTreeSet::new(), &Literal::pos("open")), Err(OracleError::EmptySigma));
    }
}
