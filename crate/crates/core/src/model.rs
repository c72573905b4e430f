//! Domain vocabulary: fluents, literals, effect and knowledge propositions,
//! actions, goals and the planning domain that ties them together.
//!
//! Everything here is plain data. Inference lives in [`crate::engine`] and
//! [`crate::oracle`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// An atomic time-varying proposition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fluent(String);

impl Fluent {
    pub fn new(name: impl Into<String>) -> Self {
        Fluent(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Fluent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A signed fluent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub fluent: Fluent,
    pub positive: bool,
}

impl Literal {
    pub fn pos(fluent: impl Into<String>) -> Self {
        Literal { fluent: Fluent::new(fluent), positive: true }
    }

    pub fn neg(fluent: impl Into<String>) -> Self {
        Literal { fluent: Fluent::new(fluent), positive: false }
    }

    pub fn complement(&self) -> Literal {
        complement(self)
    }

    /// The positive literal over the same fluent.
    pub fn positify(&self) -> Literal {
        Literal { fluent: self.fluent.clone(), positive: true }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.fluent)
        } else {
            write!(f, "¬{}", self.fluent)
        }
    }
}

/// Flips the sign of a literal, keeping its fluent.
pub fn complement(l: &Literal) -> Literal {
    Literal { fluent: l.fluent.clone(), positive: !l.positive }
}

/// `when (and c1 .. cn) effect`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectProposition {
    pub id: String,
    pub effect: Literal,
    pub conditions: Vec<Literal>,
}

/// `:observe f`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeProposition {
    pub fluent: Fluent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub name: String,
    pub effects: Vec<EffectProposition>,
    pub observes: Vec<KnowledgeProposition>,
    /// Literals the agent must know to hold before executing the action.
    pub executable: Vec<Literal>,
}

impl Action {
    pub fn new(name: impl Into<String>) -> Self {
        Action { name: name.into(), effects: Vec::new(), observes: Vec::new(), executable: Vec::new() }
    }

    /// Adds an effect proposition with a synthesized id (`<action>_ep<ordinal>`).
    pub fn with_effect(mut self, conditions: Vec<Literal>, effect: Literal) -> Self {
        let id = effect_id(&self.name, self.effects.len() + 1);
        self.effects.push(EffectProposition { id, effect, conditions });
        self
    }

    pub fn with_observe(mut self, fluent: impl Into<String>) -> Self {
        self.observes.push(KnowledgeProposition { fluent: Fluent::new(fluent) });
        self
    }

    pub fn with_executable(mut self, literals: Vec<Literal>) -> Self {
        self.executable.extend(literals);
        self
    }

    pub fn is_sensing(&self) -> bool {
        !self.observes.is_empty()
    }

    pub fn sensed(&self) -> Option<&Fluent> {
        self.observes.first().map(|kp| &kp.fluent)
    }

    /// An action that neither changes nor senses anything.
    pub fn is_noop(&self) -> bool {
        self.effects.is_empty() && self.observes.is_empty()
    }
}

/// Id of the `ordinal`-th (1-based) effect proposition of an action.
pub fn effect_id(action: &str, ordinal: usize) -> String {
    format!("{action}_ep{ordinal}")
}

/// Exclusive-or over initial literals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneofConstraint {
    pub literals: Vec<Literal>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalKind {
    /// Achieved in at least one branch.
    Weak,
    /// Achieved in every branch.
    Strong,
}

impl fmt::Display for GoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalKind::Weak => f.write_str("weak"),
            GoalKind::Strong => f.write_str("strong"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalProposition {
    pub kind: GoalKind,
    pub literals: Vec<Literal>,
}

/// Initial knowledge, actions and goals of a ground planning problem.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanningDomain {
    pub fluents: Vec<Fluent>,
    pub actions: Vec<Action>,
    pub init: Vec<Literal>,
    pub oneofs: Vec<OneofConstraint>,
    pub goals: Vec<GoalProposition>,
    /// Fluents that never change; their initial values are plain facts.
    pub static_fluents: Vec<Fluent>,
}

impl PlanningDomain {
    pub fn action(&self, name: &str) -> Option<&Action> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn has_fluent(&self, name: &str) -> bool {
        self.fluents.iter().any(|f| f.name() == name)
    }

    pub fn is_static(&self, fluent: &Fluent) -> bool {
        self.static_fluents.contains(fluent)
    }

    /// Conjunction of every goal proposition of the given kind.
    pub fn goal_literals(&self, kind: GoalKind) -> Vec<Literal> {
        let mut out: Vec<Literal> = Vec::new();
        for g in self.goals.iter().filter(|g| g.kind == kind) {
            for l in &g.literals {
                if !out.contains(l) {
                    out.push(l.clone());
                }
            }
        }
        out
    }

    pub fn effect_propositions(&self) -> impl Iterator<Item = (&Action, &EffectProposition)> {
        self.actions.iter().flat_map(|a| a.effects.iter().map(move |ep| (a, ep)))
    }

    /// Adds every fluent mentioned anywhere that is not declared yet, in
    /// order of first appearance.
    pub fn declare_used_fluents(&mut self) {
        let mut seen: HashSet<Fluent> = self.fluents.iter().cloned().collect();
        let mut extra = Vec::new();
        for f in self.mentioned_fluents() {
            if seen.insert(f.clone()) {
                extra.push(f);
            }
        }
        self.fluents.extend(extra);
    }

    /// Every fluent occurrence in propositions, in textual order.
    pub fn mentioned_fluents(&self) -> Vec<Fluent> {
        let mut out = Vec::new();
        for a in &self.actions {
            out.extend(a.executable.iter().map(|l| l.fluent.clone()));
            for ep in &a.effects {
                out.extend(ep.conditions.iter().map(|l| l.fluent.clone()));
                out.push(ep.effect.fluent.clone());
            }
            out.extend(a.observes.iter().map(|kp| kp.fluent.clone()));
        }
        out.extend(self.init.iter().map(|l| l.fluent.clone()));
        out.extend(self.static_fluents.iter().cloned());
        for o in &self.oneofs {
            out.extend(o.literals.iter().map(|l| l.fluent.clone()));
        }
        for g in &self.goals {
            out.extend(g.literals.iter().map(|l| l.fluent.clone()));
        }
        out
    }
}

/// A broken domain invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateFluent(String),
    DuplicateAction(String),
    DuplicateEffectId(String),
    UndeclaredFluent { fluent: String, context: String },
    MixedSensingPhysical(String),
    MultipleObserve(String),
    ConflictingConditions { effect_id: String, fluent: String },
    OneofTooSmall(usize),
    OneofDuplicateLiteral(String),
    InconsistentInit(String),
    StaticFluentChanged { fluent: String, effect_id: String },
    StaticFluentUninitialized(String),
    StaticFluentInOneof(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateFluent(n) => write!(f, "duplicate fluent `{n}`"),
            Violation::DuplicateAction(n) => write!(f, "duplicate action `{n}`"),
            Violation::DuplicateEffectId(n) => write!(f, "duplicate effect proposition id `{n}`"),
            Violation::UndeclaredFluent { fluent, context } => {
                write!(f, "undeclared fluent `{fluent}` in {context}")
            }
            Violation::MixedSensingPhysical(a) => {
                write!(f, "mixed sensing/physical action `{a}`")
            }
            Violation::MultipleObserve(a) => write!(f, "action `{a}` observes more than one fluent"),
            Violation::ConflictingConditions { effect_id, fluent } => {
                write!(f, "effect proposition `{effect_id}` requires `{fluent}` both true and false")
            }
            Violation::OneofTooSmall(n) => write!(f, "oneof constraint with {n} literal(s); at least 2 required"),
            Violation::OneofDuplicateLiteral(l) => write!(f, "oneof constraint repeats literal `{l}`"),
            Violation::InconsistentInit(fl) => write!(f, "inconsistent init: `{fl}` is both true and false"),
            Violation::StaticFluentChanged { fluent, effect_id } => {
                write!(f, "static fluent `{fluent}` is changed by `{effect_id}`")
            }
            Violation::StaticFluentUninitialized(fl) => {
                write!(f, "static fluent `{fl}` has no initial value")
            }
            Violation::StaticFluentInOneof(fl) => write!(f, "static fluent `{fl}` appears in a oneof constraint"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a domain. An empty report means the
/// domain is well formed.
pub fn validate_domain(d: &PlanningDomain) -> ValidationReport {
    let mut violations = Vec::new();

    let mut declared = HashSet::new();
    for f in &d.fluents {
        if !declared.insert(f.name()) {
            violations.push(Violation::DuplicateFluent(f.name().to_string()));
        }
    }
    let check = |l: &Literal, context: &dyn Fn() -> String, out: &mut Vec<Violation>| {
        if !declared.contains(l.fluent.name()) {
            out.push(Violation::UndeclaredFluent { fluent: l.fluent.name().to_string(), context: context() });
        }
    };

    let mut action_names = HashSet::new();
    let mut ep_ids = HashSet::new();
    for a in &d.actions {
        if !action_names.insert(a.name.as_str()) {
            violations.push(Violation::DuplicateAction(a.name.clone()));
        }
        if !a.effects.is_empty() && !a.observes.is_empty() {
            violations.push(Violation::MixedSensingPhysical(a.name.clone()));
        }
        if a.observes.len() > 1 {
            violations.push(Violation::MultipleObserve(a.name.clone()));
        }
        for l in &a.executable {
            check(l, &|| format!("executability of `{}`", a.name), &mut violations);
        }
        for kp in &a.observes {
            check(
                &Literal { fluent: kp.fluent.clone(), positive: true },
                &|| format!("observation of `{}`", a.name),
                &mut violations,
            );
        }
        for ep in &a.effects {
            if !ep_ids.insert(ep.id.as_str()) {
                violations.push(Violation::DuplicateEffectId(ep.id.clone()));
            }
            check(&ep.effect, &|| format!("effect `{}`", ep.id), &mut violations);
            let mut signs: HashMap<&str, bool> = HashMap::new();
            for c in &ep.conditions {
                check(c, &|| format!("condition of `{}`", ep.id), &mut violations);
                if let Some(&prev) = signs.get(c.fluent.name()) {
                    if prev != c.positive {
                        violations.push(Violation::ConflictingConditions {
                            effect_id: ep.id.clone(),
                            fluent: c.fluent.name().to_string(),
                        });
                    }
                } else {
                    signs.insert(c.fluent.name(), c.positive);
                }
            }
            if d.is_static(&ep.effect.fluent) {
                violations.push(Violation::StaticFluentChanged {
                    fluent: ep.effect.fluent.name().to_string(),
                    effect_id: ep.id.clone(),
                });
            }
        }
    }

    let mut init_signs: HashMap<&str, bool> = HashMap::new();
    let mut reported = BTreeSet::new();
    for l in &d.init {
        check(l, &|| "init".to_string(), &mut violations);
        match init_signs.get(l.fluent.name()) {
            Some(&s) if s != l.positive => {
                if reported.insert(l.fluent.name()) {
                    violations.push(Violation::InconsistentInit(l.fluent.name().to_string()));
                }
            }
            _ => {
                init_signs.insert(l.fluent.name(), l.positive);
            }
        }
    }

    for o in &d.oneofs {
        if o.literals.len() < 2 {
            violations.push(Violation::OneofTooSmall(o.literals.len()));
        }
        let mut seen = HashSet::new();
        for l in &o.literals {
            check(l, &|| "oneof".to_string(), &mut violations);
            if !seen.insert(l) {
                violations.push(Violation::OneofDuplicateLiteral(l.to_string()));
            }
            if d.is_static(&l.fluent) {
                violations.push(Violation::StaticFluentInOneof(l.fluent.name().to_string()));
            }
        }
    }

    for g in &d.goals {
        for l in &g.literals {
            check(l, &|| format!("{} goal", g.kind), &mut violations);
        }
    }

    for s in &d.static_fluents {
        check(&Literal { fluent: s.clone(), positive: true }, &|| "static declaration".to_string(), &mut violations);
        if !init_signs.contains_key(s.name()) {
            violations.push(Violation::StaticFluentUninitialized(s.name().to_string()));
        }
    }

    ValidationReport { violations }
}
