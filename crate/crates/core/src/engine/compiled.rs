//! Index-based form of a [`PlanningDomain`] used by the fixpoint engine and
//! the planner.
//!
//! Literals are encoded as `2 * fluent + negated`, so the complement of a
//! literal code is `code ^ 1`.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::model::{validate_domain, Fluent, GoalKind, Literal, PlanningDomain};

use super::EngineError;

pub type Lit = usize;

pub fn lit(fluent: usize, positive: bool) -> Lit {
    fluent * 2 + usize::from(!positive)
}

pub fn compl(l: Lit) -> Lit {
    l ^ 1
}

pub fn fluent_of(l: Lit) -> usize {
    l >> 1
}

pub fn is_positive(l: Lit) -> bool {
    l & 1 == 0
}

#[derive(Clone, Debug)]
pub struct CompiledEffect {
    pub id: String,
    pub action: usize,
    pub effect: Lit,
    pub conditions: Vec<Lit>,
}

impl CompiledEffect {
    /// Fluents required true by the conditions.
    pub fn positive_conditions(&self) -> impl Iterator<Item = usize> + '_ {
        self.conditions.iter().filter(|&&c| is_positive(c)).map(|&c| fluent_of(c))
    }

    pub fn negative_conditions(&self) -> impl Iterator<Item = usize> + '_ {
        self.conditions.iter().filter(|&&c| !is_positive(c)).map(|&c| fluent_of(c))
    }
}

#[derive(Clone, Debug)]
pub struct CompiledAction {
    pub name: String,
    pub effects: Vec<usize>,
    pub sensed: Option<usize>,
    pub executable: Vec<Lit>,
}

impl CompiledAction {
    pub fn is_noop(&self) -> bool {
        self.effects.is_empty() && self.sensed.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct CompiledDomain {
    pub domain: PlanningDomain,
    pub fluents: Vec<String>,
    index: HashMap<String, usize>,
    pub actions: Vec<CompiledAction>,
    pub effects: Vec<CompiledEffect>,
    pub init: Vec<Lit>,
    pub oneofs: Vec<Vec<Lit>>,
    pub weak_goal: Vec<Lit>,
    pub strong_goal: Vec<Lit>,
    /// Values of static fluents, when static relations are evaluated as
    /// plain facts rather than tracked as knowledge.
    pub static_holds: Option<FixedBitSet>,
    pub is_static: Vec<bool>,
}

impl CompiledDomain {
    pub fn new(d: &PlanningDomain) -> Result<Self, EngineError> {
        Self::build(d, false)
    }

    /// Like [`CompiledDomain::new`] but static fluents become facts that are
    /// looked up instead of being carried in every knowledge layer.
    pub fn with_static_facts(d: &PlanningDomain) -> Result<Self, EngineError> {
        Self::build(d, true)
    }

    fn build(d: &PlanningDomain, static_facts: bool) -> Result<Self, EngineError> {
        let report = validate_domain(d);
        if !report.is_ok() {
            return Err(EngineError::InvalidDomain(report));
        }
        let fluents: Vec<String> = d.fluents.iter().map(|f| f.name().to_string()).collect();
        let index: HashMap<String, usize> = fluents.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let code = |l: &Literal| lit(index[l.fluent.name()], l.positive);

        let mut actions = Vec::new();
        let mut effects = Vec::new();
        for (ai, a) in d.actions.iter().enumerate() {
            let mut eps = Vec::new();
            for ep in &a.effects {
                eps.push(effects.len());
                effects.push(CompiledEffect {
                    id: ep.id.clone(),
                    action: ai,
                    effect: code(&ep.effect),
                    conditions: ep.conditions.iter().map(code).collect(),
                });
            }
            actions.push(CompiledAction {
                name: a.name.clone(),
                effects: eps,
                sensed: a.sensed().map(|f| index[f.name()]),
                executable: a.executable.iter().map(code).collect(),
            });
        }

        let is_static: Vec<bool> = d.fluents.iter().map(|f| static_facts && d.is_static(f)).collect();
        let static_holds = static_facts.then(|| {
            let mut holds = FixedBitSet::with_capacity(fluents.len() * 2);
            for l in &d.init {
                let c = code(l);
                if is_static[fluent_of(c)] {
                    holds.insert(c);
                }
            }
            holds
        });

        Ok(CompiledDomain {
            domain: d.clone(),
            init: d.init.iter().map(code).collect(),
            oneofs: d.oneofs.iter().map(|o| o.literals.iter().map(code).collect()).collect(),
            weak_goal: d.goal_literals(GoalKind::Weak).iter().map(code).collect(),
            strong_goal: d.goal_literals(GoalKind::Strong).iter().map(code).collect(),
            fluents,
            index,
            actions,
            effects,
            static_holds,
            is_static,
        })
    }

    pub fn num_fluents(&self) -> usize {
        self.fluents.len()
    }

    pub fn num_literals(&self) -> usize {
        self.fluents.len() * 2
    }

    pub fn fluent_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn lit_of(&self, l: &Literal) -> Option<Lit> {
        self.fluent_index(l.fluent.name()).map(|f| lit(f, l.positive))
    }

    pub fn literal(&self, l: Lit) -> Literal {
        Literal { fluent: Fluent::new(self.fluents[fluent_of(l)].clone()), positive: is_positive(l) }
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    pub fn uses_static_facts(&self) -> bool {
        self.static_holds.is_some()
    }

    pub fn lit_is_static(&self, l: Lit) -> bool {
        self.is_static[fluent_of(l)]
    }
}
