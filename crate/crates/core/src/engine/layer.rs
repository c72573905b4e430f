//! One evaluation step of a branch's knowledge history and the monotone
//! fixpoint that closes it.
//!
//! A [`Layer`] at evaluation step `e` holds, for every step `t <= e`, the set
//! of literals known at `e` to have held at `t`. Closing a layer applies the
//! oneof rules, causation, both postdiction rules, and forward and backward
//! inertia (for true and false fluents) until nothing new is derived. The
//! applied effect propositions of steps `< e` are fixed inputs, so every rule
//! in this stratum is positive and the fixpoint is unique.

use fixedbitset::FixedBitSet;

use super::compiled::{compl, fluent_of, lit, CompiledDomain, Lit};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Layer {
    pub eval: usize,
    pub steps: Vec<FixedBitSet>,
}

/// A literal and its complement were both derived for the same step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Contradiction {
    pub step: usize,
    pub eval: usize,
    pub fluent: usize,
}

impl Layer {
    pub fn initial(cd: &CompiledDomain) -> Layer {
        let mut step0 = FixedBitSet::with_capacity(cd.num_literals());
        for &l in &cd.init {
            if !cd.lit_is_static(l) {
                step0.insert(l);
            }
        }
        Layer { eval: 0, steps: vec![step0] }
    }

    /// Forward propagation: everything known at `e` is known at `e + 1`,
    /// with an empty slot for step `e + 1`.
    pub fn propagate(&self, cd: &CompiledDomain) -> Layer {
        let mut steps = self.steps.clone();
        steps.push(FixedBitSet::with_capacity(cd.num_literals()));
        Layer { eval: self.eval + 1, steps }
    }

    pub fn knows(&self, cd: &CompiledDomain, l: Lit, t: usize) -> bool {
        if let Some(holds) = &cd.static_holds {
            if cd.lit_is_static(l) {
                return holds.contains(l);
            }
        }
        self.steps.get(t).is_some_and(|s| s.contains(l))
    }

    pub fn atom_count(&self) -> usize {
        self.steps.iter().map(|s| s.count_ones(..)).sum()
    }

    pub fn contradiction(&self, cd: &CompiledDomain) -> Option<Contradiction> {
        for (t, s) in self.steps.iter().enumerate() {
            for f in 0..cd.num_fluents() {
                if s.contains(lit(f, true)) && s.contains(lit(f, false)) {
                    return Some(Contradiction { step: t, eval: self.eval, fluent: f });
                }
            }
        }
        None
    }
}

struct Closer<'a> {
    cd: &'a CompiledDomain,
    layer: &'a mut Layer,
    changed: bool,
    static_conflict: Option<Contradiction>,
}

impl Closer<'_> {
    fn knows(&self, l: Lit, t: usize) -> bool {
        self.layer.knows(self.cd, l, t)
    }

    fn add(&mut self, l: Lit, t: usize) {
        if self.cd.lit_is_static(l) {
            if self.static_conflict.is_none() && !self.knows(l, t) && self.knows(compl(l), t) {
                self.static_conflict = Some(Contradiction { step: t, eval: self.layer.eval, fluent: fluent_of(l) });
            }
            return;
        }
        let set = &mut self.layer.steps[t];
        if !set.contains(l) {
            set.insert(l);
            self.changed = true;
        }
    }

    fn all_known(&self, lits: &[Lit], t: usize) -> bool {
        lits.iter().all(|&c| self.knows(c, t))
    }

    /// `kNotInit` for `effect = f`, `kNotTerm` for `effect = ¬f`: either no
    /// applied effect proposition has this effect, or each that does has a
    /// condition known to be false.
    fn known_unaffected(&self, applied: &[usize], effect: Lit, t: usize) -> bool {
        applied
            .iter()
            .map(|&e| &self.cd.effects[e])
            .filter(|ep| ep.effect == effect)
            .all(|ep| ep.conditions.iter().any(|&c| self.knows(compl(c), t)))
    }

    fn oneof_pass(&mut self) {
        let cd = self.cd;
        for group in &cd.oneofs {
            for (i, &li) in group.iter().enumerate() {
                let others_false = group.iter().enumerate().all(|(j, &lj)| j == i || self.knows(compl(lj), 0));
                if others_false {
                    self.add(li, 0);
                }
                if self.knows(li, 0) {
                    for (j, &lj) in group.iter().enumerate() {
                        if j != i {
                            self.add(compl(lj), 0);
                        }
                    }
                }
            }
        }
    }

    fn step_pass(&mut self, t: usize, applied: &[usize]) {
        let cd = self.cd;
        for &e in applied {
            let ep = &cd.effects[e];
            // causation
            if self.all_known(&ep.conditions, t) {
                self.add(ep.effect, t + 1);
            }
            // positive postdiction
            if self.knows(ep.effect, t + 1) && self.knows(compl(ep.effect), t) {
                for &c in &ep.conditions {
                    self.add(c, t);
                }
            }
            // negative postdiction
            if self.knows(compl(ep.effect), t + 1) {
                for (i, &ci) in ep.conditions.iter().enumerate() {
                    let rest = ep.conditions.iter().enumerate().all(|(j, &cj)| j == i || self.knows(cj, t));
                    if rest {
                        self.add(compl(ci), t);
                    }
                }
            }
        }
        for f in 0..cd.num_fluents() {
            if cd.is_static[f] {
                continue;
            }
            let (p, n) = (lit(f, true), lit(f, false));
            let not_init = self.known_unaffected(applied, p, t);
            let not_term = self.known_unaffected(applied, n, t);
            if not_term && self.knows(p, t) {
                self.add(p, t + 1);
            }
            if not_init && self.knows(n, t) {
                self.add(n, t + 1);
            }
            if not_init && self.knows(p, t + 1) {
                self.add(p, t);
            }
            if not_term && self.knows(n, t + 1) {
                self.add(n, t);
            }
        }
    }
}

/// Closes `layer` under the knowledge rules given the effect propositions
/// applied at each step before `layer.eval`. Returns the first contradiction
/// found, if any; the layer is closed either way.
pub fn close_layer(cd: &CompiledDomain, layer: &mut Layer, applied: &[Vec<usize>]) -> Result<(), Contradiction> {
    let eval = layer.eval;
    let mut closer = Closer { cd, layer, changed: true, static_conflict: None };
    while closer.changed {
        closer.changed = false;
        closer.oneof_pass();
        for t in 0..eval {
            let eps = applied.get(t).map(Vec::as_slice).unwrap_or(&[]);
            closer.step_pass(t, eps);
        }
    }
    if let Some(c) = closer.static_conflict {
        return Err(c);
    }
    match layer.contradiction(cd) {
        Some(c) => Err(c),
        None => Ok(()),
    }
}
