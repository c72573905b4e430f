//! Generators for the scalable benchmark domains.
//!
//! * `bomb(n)`: `armed_i` for n packages, exactly one of which holds the
//!   bomb. `dunk_i` disarms package i. Strong goal: every package disarmed.
//!   With one package the bomb's location is simply known.
//! * `rings(n)`: n rooms connected in a ring, a robot known to be in room 1
//!   and windows of unknown state. `move_i_j` follows a connection,
//!   `close_i` shuts the window of the current room, `lock_i` locks a closed
//!   window and `sense_window_i` observes it. Connections are static.
//!   Strong goal: every window locked.
//! * `sickness(n)`: exactly one of n diseases. `stain` colors the test paper
//!   with the color of the disease (one boolean per color), `sense_color_i`
//!   observes color i and `medicate_i` cures disease i. Strong goal: cured.
//!   Telling n diseases apart takes n-1 observations and leaves n branches.

use crate::model::{Action, GoalKind, GoalProposition, Literal, OneofConstraint, PlanningDomain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Benchmark {
    Bomb,
    Rings,
    Sickness,
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Bomb => "bomb",
            Benchmark::Rings => "rings",
            Benchmark::Sickness => "sickness",
        }
    }

    pub fn min_size(self) -> usize {
        match self {
            Benchmark::Bomb => 1,
            Benchmark::Rings | Benchmark::Sickness => 2,
        }
    }

    /// `None` when `n` is below the benchmark's minimum size.
    pub fn generate(self, n: usize) -> Option<PlanningDomain> {
        if n < self.min_size() {
            return None;
        }
        Some(match self {
            Benchmark::Bomb => generate_bomb(n),
            Benchmark::Rings => generate_rings(n),
            Benchmark::Sickness => generate_sickness(n),
        })
    }

    /// A step bound that admits the standard solution.
    pub fn max_steps(self, n: usize) -> usize {
        match self {
            Benchmark::Bomb => n,
            // Close and lock each window, moving between all rooms.
            Benchmark::Rings => 3 * n - 1,
            Benchmark::Sickness => n + 1,
        }
    }
}

fn finish(mut d: PlanningDomain) -> PlanningDomain {
    d.declare_used_fluents();
    d
}

/// # Panics
/// Panics if `n == 0`.
pub fn generate_bomb(n: usize) -> PlanningDomain {
    assert!(n >= 1, "bomb needs at least one package");
    let armed = |i: usize| format!("armed_{i}");
    let mut d = PlanningDomain::default();
    for i in 1..=n {
        d.actions.push(Action::new(format!("dunk_{i}")).with_effect(vec![], Literal::neg(armed(i))));
    }
    if n == 1 {
        d.init.push(Literal::pos(armed(1)));
    } else {
        d.oneofs.push(OneofConstraint { literals: (1..=n).map(|i| Literal::pos(armed(i))).collect() });
    }
    d.goals
        .push(GoalProposition { kind: GoalKind::Strong, literals: (1..=n).map(|i| Literal::neg(armed(i))).collect() });
    finish(d)
}

/// # Panics
/// Panics if `n < 2`.
pub fn generate_rings(n: usize) -> PlanningDomain {
    assert!(n >= 2, "rings needs at least two rooms");
    let mut d = PlanningDomain::default();
    let mut neighbours: Vec<(usize, usize)> = Vec::new();
    for i in 1..=n {
        let next = i % n + 1;
        let prev = (i + n - 2) % n + 1;
        for j in [next, prev] {
            if !neighbours.contains(&(i, j)) {
                neighbours.push((i, j));
            }
        }
    }
    neighbours.sort_unstable();
    for &(i, j) in &neighbours {
        let link = format!("connected_{i}_{j}");
        d.actions.push(
            Action::new(format!("move_{i}_{j}"))
                .with_executable(vec![Literal::pos(format!("at_{i}")), Literal::pos(link.clone())])
                .with_effect(vec![], Literal::pos(format!("at_{j}")))
                .with_effect(vec![], Literal::neg(format!("at_{i}"))),
        );
        d.init.push(Literal::pos(link.clone()));
        d.static_fluents.push(crate::model::Fluent::new(link));
    }
    for i in 1..=n {
        let at = Literal::pos(format!("at_{i}"));
        d.actions.push(
            Action::new(format!("close_{i}"))
                .with_executable(vec![at.clone()])
                .with_effect(vec![], Literal::neg(format!("open_{i}"))),
        );
        d.actions.push(
            Action::new(format!("lock_{i}"))
                .with_executable(vec![at.clone(), Literal::neg(format!("open_{i}"))])
                .with_effect(vec![], Literal::pos(format!("locked_{i}"))),
        );
        d.actions
            .push(Action::new(format!("sense_window_{i}")).with_executable(vec![at]).with_observe(format!("open_{i}")));
        d.init.push(if i == 1 { Literal::pos("at_1") } else { Literal::neg(format!("at_{i}")) });
        d.init.push(Literal::neg(format!("locked_{i}")));
    }
    d.goals.push(GoalProposition {
        kind: GoalKind::Strong,
        literals: (1..=n).map(|i| Literal::pos(format!("locked_{i}"))).collect(),
    });
    finish(d)
}

/// # Panics
/// Panics if `n < 2`.
pub fn generate_sickness(n: usize) -> PlanningDomain {
    assert!(n >= 2, "sickness needs at least two diseases");
    let mut d = PlanningDomain::default();
    let mut stain = Action::new("stain");
    for i in 1..=n {
        stain = stain.with_effect(vec![Literal::pos(format!("ill_{i}"))], Literal::pos(format!("color_{i}")));
    }
    d.actions.push(stain);
    for i in 1..=n {
        d.actions.push(Action::new(format!("sense_color_{i}")).with_observe(format!("color_{i}")));
    }
    for i in 1..=n {
        d.actions.push(
            Action::new(format!("medicate_{i}"))
                .with_effect(vec![Literal::pos(format!("ill_{i}"))], Literal::pos("cured")),
        );
    }
    d.oneofs.push(OneofConstraint { literals: (1..=n).map(|i| Literal::pos(format!("ill_{i}"))).collect() });
    for i in 1..=n {
        d.init.push(Literal::neg(format!("color_{i}")));
    }
    d.init.push(Literal::neg("cured"));
    d.goals.push(GoalProposition { kind: GoalKind::Strong, literals: vec![Literal::pos("cured")] });
    finish(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_domain;

    #[test]
    fn generators_validate() {
        for n in 1..=8 {
            for b in [Benchmark::Bomb, Benchmark::Rings, Benchmark::Sickness] {
                if let Some(d) = b.generate(n) {
                    let report = validate_domain(&d);
                    assert!(report.is_ok(), "{}({n}): {report}", b.name());
                }
            }
        }
    }

    #[test]
    fn below_minimum_is_rejected() {
        assert!(Benchmark::Rings.generate(1).is_none());
        assert!(Benchmark::Sickness.generate(1).is_none());
        assert!(Benchmark::Bomb.generate(0).is_none());
    }

    #[test]
    fn ring_of_two_has_one_link_each_way() {
        let d = generate_rings(2);
        let moves: Vec<&str> =
            d.actions.iter().filter(|a| a.name.starts_with("move")).map(|a| a.name.as_str()).collect();
        assert_eq!(moves, ["move_1_2", "move_2_1"]);
        assert_eq!(d.fluents.len(), 8);
    }
}
