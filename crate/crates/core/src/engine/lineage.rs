//! The knowledge history of a single branch, reduced to what its future
//! depends on: the current layer plus the effect propositions applied so far.

use super::compiled::{compl, CompiledDomain, Lit};
use super::layer::{close_layer, Contradiction, Layer};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lineage {
    pub layer: Layer,
    /// `applied[t]`: effect propositions applied at step `t`.
    pub applied: Vec<Vec<usize>>,
    pub contradiction: Option<Contradiction>,
}

/// Why an occurrence set cannot happen at the current step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OccurrenceError {
    NotExecutable { action: usize, literal: Lit },
    DuplicateAction(usize),
    ConcurrentSensing(usize, usize),
    SimilarEffects(usize, usize),
    ContradictoryEffects(usize, usize),
}

#[derive(Clone, Debug)]
pub enum Advance {
    /// No branching. `confirmed` is set when a sensing action observed a
    /// fluent already known to be true.
    Single { next: Lineage, confirmed: Option<usize> },
    /// Sensing of an unknown fluent: the positive outcome stays in the
    /// current branch, the negative one moves to a child branch.
    Split { fluent: usize, positive: Lineage, negative: Lineage },
}

/// Checks the pairwise concurrency restrictions on a set of effect
/// propositions applied together: no two share an effect literal, and
/// complementary effects are only allowed when the one that sets `¬f` has a
/// positive condition which the one that sets `f` requires false.
pub fn check_effect_concurrency(cd: &CompiledDomain, eps: &[usize]) -> Result<(), OccurrenceError> {
    for (i, &a) in eps.iter().enumerate() {
        for &b in &eps[i + 1..] {
            let (ea, eb) = (&cd.effects[a], &cd.effects[b]);
            if ea.effect == eb.effect {
                return Err(OccurrenceError::SimilarEffects(a, b));
            }
            if ea.effect == compl(eb.effect) {
                let (sets, clears) = if super::compiled::is_positive(ea.effect) { (ea, eb) } else { (eb, ea) };
                let contra = clears.positive_conditions().any(|g| sets.negative_conditions().any(|h| h == g));
                if !contra {
                    return Err(OccurrenceError::ContradictoryEffects(a, b));
                }
            }
        }
    }
    Ok(())
}

impl Lineage {
    pub fn root(cd: &CompiledDomain) -> Lineage {
        let mut layer = Layer::initial(cd);
        let contradiction = close_layer(cd, &mut layer, &[]).err();
        Lineage { layer, applied: Vec::new(), contradiction }
    }

    pub fn eval(&self) -> usize {
        self.layer.eval
    }

    pub fn is_consistent(&self) -> bool {
        self.contradiction.is_none()
    }

    /// Known at the current step about the current step.
    pub fn knows_now(&self, cd: &CompiledDomain, l: Lit) -> bool {
        self.layer.knows(cd, l, self.layer.eval)
    }

    pub fn weak_goal(&self, cd: &CompiledDomain) -> bool {
        cd.weak_goal.iter().all(|&l| self.knows_now(cd, l))
    }

    pub fn strong_goal(&self, cd: &CompiledDomain) -> bool {
        cd.strong_goal.iter().all(|&l| self.knows_now(cd, l))
    }

    pub fn executable(&self, cd: &CompiledDomain, action: usize) -> Result<(), OccurrenceError> {
        match cd.actions[action].executable.iter().find(|&&l| !self.knows_now(cd, l)) {
            Some(&literal) => Err(OccurrenceError::NotExecutable { action, literal }),
            None => Ok(()),
        }
    }

    /// Validates an occurrence set at the current step and returns the
    /// effect propositions it applies and the sensed fluent, if any.
    pub fn prepare(
        &self,
        cd: &CompiledDomain,
        actions: &[usize],
    ) -> Result<(Vec<usize>, Option<usize>), OccurrenceError> {
        let mut eps = Vec::new();
        let mut sensing: Option<usize> = None;
        for (i, &a) in actions.iter().enumerate() {
            if actions[..i].contains(&a) {
                return Err(OccurrenceError::DuplicateAction(a));
            }
            self.executable(cd, a)?;
            let act = &cd.actions[a];
            if act.sensed.is_some() {
                if let Some(prev) = sensing {
                    return Err(OccurrenceError::ConcurrentSensing(prev, a));
                }
                sensing = Some(a);
            }
            eps.extend_from_slice(&act.effects);
        }
        check_effect_concurrency(cd, &eps)?;
        Ok((eps, sensing.and_then(|a| cd.actions[a].sensed)))
    }

    fn successor(&self, cd: &CompiledDomain, base: &Layer, applied: &[Vec<usize>], observed: Option<Lit>) -> Lineage {
        let mut layer = base.propagate(cd);
        if let Some(l) = observed {
            if !cd.lit_is_static(l) {
                layer.steps[base.eval].insert(l);
            }
        }
        let mut contradiction = self.contradiction;
        if let Err(c) = close_layer(cd, &mut layer, applied) {
            contradiction.get_or_insert(c);
        }
        Lineage { layer, applied: applied.to_vec(), contradiction }
    }

    /// Executes an occurrence set at the current step and closes the next
    /// layer. Sensing an unknown fluent splits the lineage; sensing a fluent
    /// known false yields no observation.
    pub fn advance(&self, cd: &CompiledDomain, actions: &[usize]) -> Result<Advance, OccurrenceError> {
        let (eps, sensed) = self.prepare(cd, actions)?;
        let t = self.eval();
        let mut applied = self.applied.clone();
        applied.resize(t, Vec::new());
        applied.push(eps);
        let Some(f) = sensed else {
            return Ok(Advance::Single { next: self.successor(cd, &self.layer, &applied, None), confirmed: None });
        };
        let (p, n) = (super::compiled::lit(f, true), super::compiled::lit(f, false));
        if self.knows_now(cd, p) {
            let next = self.successor(cd, &self.layer, &applied, Some(p));
            return Ok(Advance::Single { next, confirmed: Some(f) });
        }
        if self.knows_now(cd, n) {
            return Ok(Advance::Single { next: self.successor(cd, &self.layer, &applied, None), confirmed: None });
        }
        Ok(Advance::Split {
            fluent: f,
            positive: self.successor(cd, &self.layer, &applied, Some(p)),
            negative: self.successor(cd, &self.layer, &applied, Some(n)),
        })
    }
}
