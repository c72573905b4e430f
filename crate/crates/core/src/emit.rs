//! Emits the planning problem as a logic program for a stable-model solver.
//!
//! Literal arguments use strong negation: `knows(¬f,…)` is written
//! `-knows(f,…)`, likewise for `hasEff`, `sRes` and `holds`. Every
//! statement is tagged with the translation template it instantiates.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::Mode;
use crate::model::{validate_domain, GoalKind, Literal, PlanningDomain, ValidationReport};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleTemplateInstance {
    pub template_id: String,
    pub text: String,
}

impl RuleTemplateInstance {
    fn new(template_id: impl Into<String>, text: impl Into<String>) -> Self {
        RuleTemplateInstance { template_id: template_id.into(), text: text.into() }
    }

    pub fn is_fact(&self) -> bool {
        !self.text.contains(":-") && !self.text.starts_with('#')
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Static fluents become `holds/1` facts, and occurrences that cannot
    /// change anything are ruled out by constraints.
    pub optimize: bool,
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("invalid domain:\n{0}")]
    InvalidDomain(ValidationReport),
    #[error("the step bound must be at least 1")]
    NoSteps,
}

const TEMPLATE_ORDER: &[&str] =
    &["T1", "T2", "T3a", "T3b", "T4", "T5", "T6a", "T6b", "T6c", "T7", "T8a", "T8b", "opt-prune"];

fn template_rank(id: &str) -> usize {
    TEMPLATE_ORDER.iter().position(|&t| t == id).unwrap_or(TEMPLATE_ORDER.len())
}

/// `pred(args)` for a literal argument in front, with strong negation for
/// negative literals.
fn atom(pred: &str, l: &Literal, rest: &str) -> String {
    let sign = if l.positive { "" } else { "-" };
    if rest.is_empty() {
        format!("{sign}{pred}({})", l.fluent)
    } else {
        format!("{sign}{pred}({},{rest})", l.fluent)
    }
}

struct DomainEmitter<'a> {
    d: &'a PlanningDomain,
    optimize: bool,
}

impl DomainEmitter<'_> {
    fn is_static(&self, l: &Literal) -> bool {
        self.optimize && self.d.is_static(&l.fluent)
    }

    /// Knowledge of `l` at `args`, or plain truth for static fluents.
    fn known(&self, l: &Literal, args: &str) -> String {
        if self.is_static(l) {
            atom("holds", l, "")
        } else {
            atom("knows", l, args)
        }
    }

    fn emit(&self) -> Vec<RuleTemplateInstance> {
        let d = self.d;
        let mut out = Vec::new();
        for f in &d.fluents {
            out.push(RuleTemplateInstance::new("T1", format!("fluent({f}).")));
        }
        for a in &d.actions {
            out.push(RuleTemplateInstance::new("T1", format!("action({}).", a.name)));
        }
        for l in &d.init {
            let text = if self.is_static(l) { atom("holds", l, "") } else { atom("knows", l, "0,0,0") };
            out.push(RuleTemplateInstance::new("T2", format!("{text}.")));
        }
        for o in &d.oneofs {
            for (i, li) in o.literals.iter().enumerate() {
                let others: Vec<&Literal> =
                    o.literals.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, l)| l).collect();
                let mut body: Vec<String> = others.iter().map(|l| atom("knows", &l.complement(), "0,T,BR")).collect();
                if body.is_empty() {
                    body = vec!["s(T)".into(), "br(BR)".into()];
                }
                out.push(RuleTemplateInstance::new(
                    "T3a",
                    format!("{} :- {}.", atom("knows", li, "0,T,BR"), body.join(", ")),
                ));
                for l in others {
                    out.push(RuleTemplateInstance::new(
                        "T3b",
                        format!("{} :- {}.", atom("knows", &l.complement(), "0,T,BR"), atom("knows", li, "0,T,BR")),
                    ));
                }
            }
        }
        for a in &d.actions {
            for l in &a.executable {
                out.push(RuleTemplateInstance::new(
                    "T4",
                    format!(":- occ({},T,BR), not {}.", a.name, self.known(l, "T,T,BR")),
                ));
            }
            for ep in &a.effects {
                out.push(RuleTemplateInstance::new("T5", format!("hasEP({},{}).", a.name, ep.id)));
                let sign = if ep.effect.positive { "" } else { "-" };
                out.push(RuleTemplateInstance::new("T5", format!("{sign}hasEff({},{}).", ep.id, ep.effect.fluent)));
                for c in &ep.conditions {
                    let pred = if c.positive { "hasPC" } else { "hasNC" };
                    out.push(RuleTemplateInstance::new("T5", format!("{pred}({},{}).", ep.id, c.fluent)));
                }
                self.emit_effect_rules(&ep.id, &ep.effect, &ep.conditions, &mut out);
            }
            if let Some(f) = a.sensed() {
                out.push(RuleTemplateInstance::new("T7", format!("hasKP({},{f}).", a.name)));
            }
            if self.optimize {
                self.emit_pruning(a, &mut out);
            }
        }
        let any_goal = !d.goals.is_empty();
        for (kind, id, head) in [(GoalKind::Strong, "T8a", "sGoal"), (GoalKind::Weak, "T8b", "wGoal")] {
            if !any_goal {
                continue;
            }
            let mut body: Vec<String> = d.goal_literals(kind).iter().map(|l| self.known(l, "T,T,BR")).collect();
            body.push("s(T)".into());
            body.push("br(BR)".into());
            out.push(RuleTemplateInstance::new(id, format!("{head}(T,BR) :- {}.", body.join(", "))));
        }
        out
    }

    fn emit_effect_rules(
        &self,
        ep: &str,
        effect: &Literal,
        conditions: &[Literal],
        out: &mut Vec<RuleTemplateInstance>,
    ) {
        let apply = format!("apply({ep},T,BR)");
        let mut body = vec![apply.clone(), "s(T1)".to_string(), "T1>T".to_string()];
        body.extend(conditions.iter().map(|c| self.known(c, "T,T1,BR")));
        out.push(RuleTemplateInstance::new(
            "T6a",
            format!("{} :- {}.", atom("knows", effect, "T+1,T1,BR"), body.join(", ")),
        ));
        for c in conditions {
            out.push(RuleTemplateInstance::new(
                "T6b",
                format!(
                    "{} :- {apply}, {}, {}.",
                    atom("knows", c, "T,T1,BR"),
                    atom("knows", effect, "T+1,T1,BR"),
                    atom("knows", &effect.complement(), "T,T1,BR")
                ),
            ));
        }
        for (i, c) in conditions.iter().enumerate() {
            let mut body = vec![apply.clone(), atom("knows", &effect.complement(), "T+1,T1,BR")];
            body.extend(conditions.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, o)| self.known(o, "T,T1,BR")));
            out.push(RuleTemplateInstance::new(
                "T6c",
                format!("{} :- {}.", atom("knows", &c.complement(), "T,T1,BR"), body.join(", ")),
            ));
        }
    }

    /// Occurrences that cannot change anything: physical actions whose
    /// effects are all known already, and sensing of known fluents.
    fn emit_pruning(&self, a: &crate::model::Action, out: &mut Vec<RuleTemplateInstance>) {
        if let Some(f) = a.sensed() {
            out.push(RuleTemplateInstance::new("opt-prune", format!(":- occ({},T,BR), kw({f},T,T,BR).", a.name)));
        } else if !a.effects.is_empty() {
            let effects: BTreeSet<&Literal> = a.effects.iter().map(|e| &e.effect).collect();
            let body: Vec<String> = effects.iter().map(|l| self.known(l, "T,T,BR")).collect();
            out.push(RuleTemplateInstance::new("opt-prune", format!(":- occ({},T,BR), {}.", a.name, body.join(", "))));
        }
    }
}

/// The domain-dependent part of the program, ordered facts first, then by
/// template, then lexically.
pub fn emit_domain_rules(d: &PlanningDomain, options: EmitOptions) -> Result<Vec<RuleTemplateInstance>, EmitError> {
    let report = validate_domain(d);
    if !report.is_ok() {
        return Err(EmitError::InvalidDomain(report));
    }
    let mut rules = DomainEmitter { d, optimize: options.optimize }.emit();
    rules.sort_by(|a, b| {
        (!a.is_fact(), template_rank(&a.template_id), &a.text).cmp(&(
            !b.is_fact(),
            template_rank(&b.template_id),
            &b.text,
        ))
    });
    rules.dedup();
    Ok(rules)
}

/// The domain-independent theory for the given bounds. Each rule is tagged
/// with its line number in the reference theory; the terminated-fluent and
/// false-fluent counterparts of a line carry a `-mirror` suffix.
pub fn emit_foundational_theory(
    max_steps: usize,
    max_branches: usize,
    mode: Mode,
) -> Result<Vec<RuleTemplateInstance>, EmitError> {
    if max_steps == 0 {
        return Err(EmitError::NoSteps);
    }
    let m = max_steps;
    let mut out = Vec::new();
    let mut line = |k: usize, text: String| out.push(RuleTemplateInstance::new(format!("F-listing-line-{k}"), text));
    line(1, format!("s(0..{m}). ss(0..{}). br(0..{max_branches}).", m - 1));
    line(2, "apply(EP,T,BR) :- hasEP(A,EP), occ(A,T,BR).".into());
    line(3, "contra(EP1,EP) :- hasPC(EP1,F), hasNC(EP,F).".into());
    line(4, ":- 2{apply(EP,T,BR) : hasEff(EP,F)}, br(BR), s(T), fluent(F).".into());
    line(5, ":- apply(EP,T,BR), hasEff(EP,F), apply(EP1,T,BR), -hasEff(EP1,F), EP != EP1, not contra(EP1,EP).".into());
    line(6, "initApp(F,T,BR) :- apply(EP,T,BR), hasEff(EP,F).".into());
    line(7, "kNotInit(F,T,T1,BR) :- not initApp(F,T,BR), uBr(T1,BR), s(T), fluent(F).".into());
    line(8, "kNotInit(F,T,T1,BR) :- apply(EP,T,BR), hasPC(EP,F1), hasEff(EP,F), -knows(F1,T,T1,BR), T1>=T.".into());
    line(8, "kNotInit(F,T,T1,BR) :- apply(EP,T,BR), hasNC(EP,F1), hasEff(EP,F), knows(F1,T,T1,BR), T1>=T.".into());
    line(9, "knows(F,T+1,T1,BR) :- knows(F,T,T1,BR), kNotTerm(F,T,T1,BR), T<T1, s(T).".into());
    line(10, "knows(F,T-1,T1,BR) :- knows(F,T,T1,BR), kNotInit(F,T-1,T1,BR), T>0, T1>=T, s(T).".into());
    line(11, format!("knows(F,T,T1+1,BR) :- knows(F,T,T1,BR), T1<{m}, s(T1)."));
    line(12, "uBr(0,0). uBr(T+1,BR) :- uBr(T,BR), s(T).".into());
    line(13, "kw(F,T,T1,BR) :- knows(F,T,T1,BR).".into());
    line(14, "kw(F,T,T1,BR) :- -knows(F,T,T1,BR).".into());
    line(15, "sOcc(T,BR) :- occ(A,T,BR), hasKP(A,_).".into());
    line(16, "leq(BR,BR1) :- BR <= BR1, br(BR), br(BR1).".into());
    line(17, "1{nextBr(T,BR,BR1) : leq(BR,BR1)}1 :- sOcc(T,BR).".into());
    line(18, ":- 2{nextBr(T,BR,BR1) : br(BR) : s(T)}, br(BR1).".into());
    line(19, "uBr(T+1,BR) :- -sRes(F,T,BR).".into());
    line(20, "sRes(F,T,BR) :- occ(A,T,BR), hasKP(A,F), not -knows(F,T,T,BR).".into());
    line(21, "-sRes(F,T,BR1) :- occ(A,T,BR), hasKP(A,F), not kw(F,T,T,BR), nextBr(T,BR,BR1).".into());
    line(22, "knows(F,T,T+1,BR) :- sRes(F,T,BR).".into());
    line(23, "knows(F1,T,T1,BR1) :- sOcc(T1,BR), nextBr(T1,BR,BR1), knows(F1,T,T1,BR), T1>=T.".into());
    line(24, "apply(EP,T,BR1) :- sOcc(T1,BR), nextBr(T1,BR,BR1), uBr(T1,BR), apply(EP,T,BR), T1>=T.".into());
    line(25, ":- 2{occ(A,T,BR) : hasKP(A,_)}, br(BR), s(T).".into());
    line(26, format!("allWGsAchieved :- uBr({m},BR), wGoal({m},BR)."));
    line(27, format!("notAllSGAchieved :- uBr({m},BR), not sGoal({m},BR)."));
    line(28, "planFound :- allWGsAchieved, not notAllSGAchieved.".into());
    line(29, ":- not planFound.".into());
    line(30, "notGoal(T,BR) :- not wGoal(T,BR), uBr(T,BR).".into());
    line(31, "notGoal(T,BR) :- not sGoal(T,BR), uBr(T,BR).".into());
    line(
        32,
        match mode {
            Mode::Sequential => "1{occ(A,T,BR) : action(A)}1 :- uBr(T,BR), notGoal(T,BR), br(BR), ss(T).".into(),
            Mode::Concurrent => "1{occ(A,T,BR) : action(A)} :- uBr(T,BR), notGoal(T,BR), br(BR), ss(T).".into(),
        },
    );
    line(33, "#minimize {occ(_,_,_) @ 1}.".into());

    let mut mirror =
        |k: usize, text: &str| out.push(RuleTemplateInstance::new(format!("F-listing-line-{k}-mirror"), text));
    mirror(4, ":- 2{apply(EP,T,BR) : -hasEff(EP,F)}, br(BR), s(T), fluent(F).");
    mirror(6, "termApp(F,T,BR) :- apply(EP,T,BR), -hasEff(EP,F).");
    mirror(7, "kNotTerm(F,T,T1,BR) :- not termApp(F,T,BR), uBr(T1,BR), s(T), fluent(F).");
    mirror(8, "kNotTerm(F,T,T1,BR) :- apply(EP,T,BR), hasPC(EP,F1), -hasEff(EP,F), -knows(F1,T,T1,BR), T1>=T.");
    mirror(8, "kNotTerm(F,T,T1,BR) :- apply(EP,T,BR), hasNC(EP,F1), -hasEff(EP,F), knows(F1,T,T1,BR), T1>=T.");
    mirror(9, "-knows(F,T+1,T1,BR) :- -knows(F,T,T1,BR), kNotInit(F,T,T1,BR), T<T1, s(T).");
    mirror(10, "-knows(F,T-1,T1,BR) :- -knows(F,T,T1,BR), kNotTerm(F,T-1,T1,BR), T>0, T1>=T, s(T).");
    mirror(11, &format!("-knows(F,T,T1+1,BR) :- -knows(F,T,T1,BR), T1<{m}, s(T1)."));
    mirror(22, "-knows(F,T,T+1,BR) :- -sRes(F,T,BR).");
    mirror(23, "-knows(F1,T,T1,BR1) :- sOcc(T1,BR), nextBr(T1,BR,BR1), -knows(F1,T,T1,BR), T1>=T.");
    // Keep each mirror next to the line it mirrors.
    out.sort_by_key(|r| listing_line(&r.template_id));
    Ok(out)
}

fn listing_line(id: &str) -> (usize, bool) {
    let rest = id.trim_start_matches("F-listing-line-");
    let (num, mirror) = match rest.strip_suffix("-mirror") {
        Some(n) => (n, true),
        None => (rest, false),
    };
    (num.parse().unwrap_or(usize::MAX), mirror)
}

/// The complete program: domain facts, domain rules, then the theory. One
/// statement per line, each followed by a `%` comment with its template.
pub fn emit_program(
    d: &PlanningDomain,
    max_steps: usize,
    max_branches: usize,
    mode: Mode,
    options: EmitOptions,
) -> Result<String, EmitError> {
    let mut out = String::new();
    for r in emit_domain_rules(d, options)?.iter().chain(&emit_foundational_theory(max_steps, max_branches, mode)?) {
        writeln!(out, "{}  % {}", r.text, r.template_id).expect("write to string");
    }
    Ok(out)
}

/// Number of instances per template.
pub fn template_counts(rules: &[RuleTemplateInstance]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in rules {
        *out.entry(r.template_id.clone()).or_insert(0) += 1;
    }
    out
}

/// Upper bound on the ground rules a grounder produces for the program:
/// every statement is instantiated for each assignment of its variables
/// that satisfies the body atoms fixed by facts (domain declarations, step
/// and branch ranges) and the arithmetic comparisons. Atoms whose truth
/// depends on the plan are assumed possibly true.
pub fn ground_rule_estimate(d: &PlanningDomain, program: &str, max_steps: usize, max_branches: usize) -> usize {
    let facts = StaticFacts::collect(program);
    let ranges = VarRanges {
        fluents: d.fluents.iter().map(|f| f.name().to_string()).collect(),
        actions: d.actions.iter().map(|a| a.name.clone()).collect(),
        effects: d.effect_propositions().map(|(_, ep)| ep.id.clone()).collect(),
        steps: max_steps,
        branches: max_branches,
    };
    program
        .lines()
        .map(|l| l.split("  %").next().unwrap_or(""))
        .flat_map(split_statements)
        .map(|stmt| count_instances(&stmt, &facts, &ranges))
        .sum()
}

fn split_statements(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = line.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        cur.push(c);
        if c == '.' {
            let prev = i.checked_sub(1).map(|j| chars[j]);
            let next = chars.get(i + 1).copied();
            if prev != Some('.') && next != Some('.') && next.is_none_or(char::is_whitespace) {
                out.push(cur.trim().to_string());
                cur.clear();
            }
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

#[derive(Default)]
struct StaticFacts {
    /// Relation name (with sign) to its tuples.
    tuples: HashMap<String, BTreeSet<Vec<String>>>,
}

const STATIC_PREDICATES: &[&str] =
    &["fluent", "action", "hasEP", "hasEff", "-hasEff", "hasPC", "hasNC", "hasKP", "holds", "-holds", "s", "ss", "br"];

impl StaticFacts {
    fn collect(program: &str) -> Self {
        let mut facts = StaticFacts::default();
        for stmt in program.lines().map(|l| l.split("  %").next().unwrap_or("")).flat_map(split_statements) {
            if stmt.contains(":-") || stmt.starts_with('#') {
                continue;
            }
            let Some((pred, args)) = parse_atom(stmt.trim_end_matches('.')) else { continue };
            if !STATIC_PREDICATES.contains(&pred.as_str()) {
                continue;
            }
            if let [single] = args.as_slice() {
                if let Some((lo, hi)) = single.split_once("..") {
                    let (lo, hi): (i64, i64) = (lo.parse().unwrap_or(0), hi.parse().unwrap_or(-1));
                    for v in lo..=hi {
                        facts.tuples.entry(pred.clone()).or_default().insert(vec![v.to_string()]);
                    }
                    continue;
                }
            }
            facts.tuples.entry(pred).or_default().insert(args);
        }
        facts
    }

    fn holds(&self, pred: &str, args: &[String]) -> bool {
        match pred {
            "contra" => {
                let pc = self.tuples.get("hasPC");
                let nc = self.tuples.get("hasNC");
                pc.zip(nc).is_some_and(|(pc, nc)| {
                    pc.iter().any(|p| p[0] == args[0] && nc.contains(&vec![args[1].clone(), p[1].clone()]))
                })
            }
            "leq" => match (args[0].parse::<i64>(), args[1].parse::<i64>()) {
                (Ok(a), Ok(b)) => a <= b,
                _ => false,
            },
            _ => self.tuples.get(pred).is_some_and(|t| t.contains(args)),
        }
    }

    fn is_static(pred: &str) -> bool {
        STATIC_PREDICATES.contains(&pred) || pred == "contra" || pred == "leq"
    }
}

struct VarRanges {
    fluents: Vec<String>,
    actions: Vec<String>,
    effects: Vec<String>,
    steps: usize,
    branches: usize,
}

impl VarRanges {
    fn values(&self, var: &str) -> Vec<String> {
        let base = var.trim_end_matches(|c: char| c.is_ascii_digit());
        match base {
            "F" => self.fluents.clone(),
            "A" => self.actions.clone(),
            "EP" => self.effects.clone(),
            "T" => (0..=self.steps).map(|t| t.to_string()).collect(),
            "BR" => (0..=self.branches).map(|b| b.to_string()).collect(),
            _ => vec![String::new()],
        }
    }
}

/// Splits `pred(a,b,c)` into its (signed) predicate and top-level arguments.
fn parse_atom(text: &str) -> Option<(String, Vec<String>)> {
    let text = text.trim();
    let open = text.find('(')?;
    let pred = text[..open].trim().to_string();
    let inner = text[open + 1..].strip_suffix(')')?;
    Some((pred, split_top(inner, ',')))
}

fn split_top(text: &str, sep: char) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' | '{' => depth += 1,
            ')' | '}' => depth -= 1,
            _ => {}
        }
        if c == sep && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(c);
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn is_var(tok: &str) -> bool {
    tok.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

fn vars_in(text: &str, out: &mut Vec<String>) {
    for tok in text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
        if is_var(tok) && !out.iter().any(|v| v == tok) {
            out.push(tok.to_string());
        }
    }
}

enum Condition {
    Static { pred: String, args: Vec<String> },
    Compare { left: String, op: String, right: String },
}

fn count_instances(stmt: &str, facts: &StaticFacts, ranges: &VarRanges) -> usize {
    let stmt = stmt.trim_end_matches('.');
    if stmt.starts_with('#') {
        return 1;
    }
    let (head, body) = match stmt.split_once(":-") {
        Some((h, b)) => (h.trim(), b.trim()),
        None => (stmt, ""),
    };
    if body.is_empty() {
        // A fact; ranges expand to one fact per value.
        return match parse_atom(head) {
            Some((_, args)) if args.len() == 1 && args[0].contains("..") => {
                let (lo, hi) = args[0].split_once("..").expect("range");
                let (lo, hi): (i64, i64) = (lo.parse().unwrap_or(0), hi.parse().unwrap_or(-1));
                usize::try_from(hi - lo + 1).unwrap_or(0)
            }
            _ => 1,
        };
    }
    let mut vars = Vec::new();
    if !head.contains('{') {
        vars_in(head, &mut vars);
    }
    let mut conditions = Vec::new();
    for lit in split_top(body, ',') {
        if lit.contains('{') {
            continue;
        }
        if let Some(negated) = lit.strip_prefix("not ") {
            vars_in(negated, &mut vars);
            continue;
        }
        vars_in(&lit, &mut vars);
        if let Some((left, op, right)) = split_comparison(&lit) {
            conditions.push(Condition::Compare { left, op, right });
        } else if let Some((pred, args)) = parse_atom(&lit) {
            if StaticFacts::is_static(&pred) {
                conditions.push(Condition::Static { pred, args });
            }
        }
    }
    vars.retain(|v| v != "_");
    let mut assignment: HashMap<String, String> = HashMap::new();
    enumerate(&vars, 0, &mut assignment, &conditions, facts, ranges)
}

fn split_comparison(lit: &str) -> Option<(String, String, String)> {
    for op in ["!=", "<=", ">=", "<", ">", "="] {
        if let Some((l, r)) = lit.split_once(op) {
            if !l.contains('(') && !r.contains('(') {
                return Some((l.trim().to_string(), op.to_string(), r.trim().to_string()));
            }
        }
    }
    None
}

fn eval_term(term: &str, assignment: &HashMap<String, String>) -> Option<String> {
    let term = term.trim();
    for op in ['+', '-'] {
        if let Some((l, r)) = term.split_once(op) {
            let l: i64 = eval_term(l, assignment)?.parse().ok()?;
            let r: i64 = eval_term(r, assignment)?.parse().ok()?;
            return Some(if op == '+' { l + r } else { l - r }.to_string());
        }
    }
    if is_var(term) {
        assignment.get(term).cloned()
    } else {
        Some(term.to_string())
    }
}

fn check(cond: &Condition, assignment: &HashMap<String, String>, facts: &StaticFacts) -> Option<bool> {
    match cond {
        Condition::Static { pred, args } => {
            let vals: Option<Vec<String>> = args.iter().map(|a| eval_term(a, assignment)).collect();
            Some(facts.holds(pred, &vals?))
        }
        Condition::Compare { left, op, right } => {
            let (l, r) = (eval_term(left, assignment)?, eval_term(right, assignment)?);
            let ord = match (l.parse::<i64>(), r.parse::<i64>()) {
                (Ok(a), Ok(b)) => a.cmp(&b),
                _ => l.cmp(&r),
            };
            Some(match op.as_str() {
                "!=" => ord.is_ne(),
                "<=" => ord.is_le(),
                ">=" => ord.is_ge(),
                "<" => ord.is_lt(),
                ">" => ord.is_gt(),
                _ => ord.is_eq(),
            })
        }
    }
}

fn enumerate(
    vars: &[String],
    i: usize,
    assignment: &mut HashMap<String, String>,
    conditions: &[Condition],
    facts: &StaticFacts,
    ranges: &VarRanges,
) -> usize {
    // Prune as soon as a fully assigned condition fails.
    for c in conditions {
        if check(c, assignment, facts) == Some(false) {
            return 0;
        }
    }
    if i == vars.len() {
        return 1;
    }
    let mut total = 0;
    for v in ranges.values(&vars[i]) {
        assignment.insert(vars[i].clone(), v);
        total += enumerate(vars, i + 1, assignment, conditions, facts, ranges);
    }
    assignment.remove(&vars[i]);
    total
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
             (:init ¬in_liv ¬open)
             (:goal weak in_liv)",
        )
        .unwrap()
    }

    #[test]
    fn init_literal_becomes_fact() {
        let d = parse_domain("(:fluents open) (:init ¬open)").unwrap();
        let rules = emit_domain_rules(&d, EmitOptions::default()).unwrap();
        assert!(rules.iter().any(|r| r.template_id == "T2" && r.text == "-knows(open,0,0,0)."));
    }

    #[test]
    fn effect_proposition_facts() {
        let rules = emit_domain_rules(&smart_home(), EmitOptions::default()).unwrap();
        let t5: Vec<&str> = rules.iter().filter(|r| r.template_id == "T5").map(|r| r.text.as_str()).collect();
        for fact in ["hasEP(open_door,open_door_ep1).", "hasEff(open_door_ep1,open).", "hasNC(open_door_ep1,ab_open)."]
        {
            assert!(t5.contains(&fact), "{fact} missing from {t5:?}");
        }
    }

    #[test]
    fn no_executability_no_constraints() {
        let d = parse_domain("(:action a :effect f)").unwrap();
        let rules = emit_domain_rules(&d, EmitOptions::default()).unwrap();
        assert!(rules.iter().all(|r| r.template_id != "T4"));
    }

    #[test]
    fn theory_first_line_and_minimize() {
        let rules = emit_foundational_theory(3, 1, Mode::Sequential).unwrap();
        assert_eq!(rules[0].text, "s(0..3). ss(0..2). br(0..1).");
        assert!(rules.iter().any(|r| r.text.starts_with("#minimize {occ(_,_,_)")));
        assert!(rules.iter().any(|r| r.text.starts_with("kNotTerm(F,T,T1,BR) :- not termApp")));
    }

    #[test]
    fn empty_domain_is_theory_only() {
        let text = emit_program(&PlanningDomain::default(), 2, 0, Mode::Sequential, EmitOptions::default()).unwrap();
        assert!(text.lines().all(|l| l.contains("% F-listing-line-")));
    }

    #[test]
    fn statement_splitting() {
        assert_eq!(split_statements("s(0..3). ss(0..2). br(0..1)."), ["s(0..3).", "ss(0..2).", "br(0..1)."]);
    }

    #[test]
    fn ground_estimate_counts_ranges_and_joins() {
        let d = parse_domain("(:fluents f) (:action a :effect f)").unwrap();
        // s has 3 values, T1 in T1>T pairs: 3 pairs for one EP.
        let prog = "s(0..2).\nknows(f,T+1,T1,BR) :- apply(a_ep1,T,BR), s(T1), T1>T.\n";
        assert_eq!(ground_rule_estimate(&d, prog, 2, 0), 3 + 3);
    }
}
