//! Reader and writer for the s-expression domain dialect.
//!
//! ```text
//! (:action open_door :effect when ¬ab_open open)
//! (:action drive :executable (and open ¬in_liv) :effect in_liv)
//! (:action sense_open :observe open)
//! (:init ¬in_liv ¬open)
//! (:goal weak in_liv)
//! ```
//!
//! A literal is a bare identifier (positive), an identifier prefixed with `¬`
//! or `-`, or `(not f)`. `;` starts a comment. `(oneof ..)` may appear at top
//! level or inside `:init`; `(:static f ..)` inside `:init` marks static
//! fluents. `(:fluents ..)` optionally declares the fluent vocabulary; without
//! it every mentioned fluent is declared implicitly.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    effect_id, Action, EffectProposition, Fluent, GoalKind, GoalProposition, KnowledgeProposition, Literal,
    OneofConstraint, PlanningDomain,
};

/// 1-based position in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{span}: lexical error: unexpected `{found}`")]
    Lexical { span: SourceSpan, found: String },
    #[error("{span}: unbalanced parentheses: {detail}")]
    Unbalanced { span: SourceSpan, detail: &'static str },
    #[error("{span}: unknown keyword `{keyword}`")]
    UnknownKeyword { span: SourceSpan, keyword: String },
    #[error("{span}: duplicate action `{name}`")]
    DuplicateAction { span: SourceSpan, name: String },
    #[error("{span}: action `{action}` observes more than one fluent")]
    MultipleObserve { span: SourceSpan, action: String },
    #[error("{span}: expected {expected}, found {found}")]
    Syntax { span: SourceSpan, expected: &'static str, found: String },
}

impl ParseError {
    pub fn span(&self) -> SourceSpan {
        match self {
            ParseError::Lexical { span, .. }
            | ParseError::Unbalanced { span, .. }
            | ParseError::UnknownKeyword { span, .. }
            | ParseError::DuplicateAction { span, .. }
            | ParseError::MultipleObserve { span, .. }
            | ParseError::Syntax { span, .. } => *span,
        }
    }
}

const RESERVED: &[&str] = &["and", "not", "when", "oneof", "weak", "strong", "executable"];

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, SourceSpan),
    List(Vec<Sexp>, SourceSpan),
}

impl Sexp {
    fn span(&self) -> SourceSpan {
        match self {
            Sexp::Atom(_, s) | Sexp::List(_, s) => *s,
        }
    }

    fn describe(&self) -> String {
        match self {
            Sexp::Atom(a, _) => format!("`{a}`"),
            Sexp::List(..) => "a list".to_string(),
        }
    }

    fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            Sexp::List(..) => None,
        }
    }
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, SourceSpan)> = Vec::new();
    let mut top = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let span = SourceSpan { line, column };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                column += 1;
                stack.push((Vec::new(), span));
            }
            ')' => {
                chars.next();
                column += 1;
                let (items, open) = stack
                    .pop()
                    .ok_or(ParseError::Unbalanced { span, detail: "closing parenthesis without opening" })?;
                let list = Sexp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => {
                let mut tok = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    tok.push(c);
                    chars.next();
                    column += 1;
                }
                check_token(&tok, span)?;
                let atom = Sexp::Atom(tok, span);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((_, open)) = stack.pop() {
        return Err(ParseError::Unbalanced { span: open, detail: "unclosed parenthesis" });
    }
    Ok(top)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_token(tok: &str, span: SourceSpan) -> Result<(), ParseError> {
    let body = tok.strip_prefix(':').or_else(|| tok.strip_prefix('¬')).or_else(|| tok.strip_prefix('-')).unwrap_or(tok);
    // a lone negation marker applies to the next token
    if body.is_empty() && (tok == "¬" || tok == "-") {
        return Ok(());
    }
    if is_identifier(body) {
        Ok(())
    } else {
        Err(ParseError::Lexical { span, found: tok.to_string() })
    }
}

fn syntax(at: &Sexp, expected: &'static str) -> ParseError {
    ParseError::Syntax { span: at.span(), expected, found: at.describe() }
}

fn end_of(span: SourceSpan, expected: &'static str) -> ParseError {
    ParseError::Syntax { span, expected, found: "end of form".to_string() }
}

fn identifier(tok: &str, span: SourceSpan) -> Result<String, ParseError> {
    if RESERVED.contains(&tok) {
        return Err(ParseError::Syntax { span, expected: "an identifier", found: format!("reserved word `{tok}`") });
    }
    if is_identifier(tok) {
        Ok(tok.to_string())
    } else {
        Err(ParseError::Syntax { span, expected: "an identifier", found: format!("`{tok}`") })
    }
}

/// Cursor over the items of one list.
struct Items<'a> {
    items: &'a [Sexp],
    pos: usize,
    span: SourceSpan,
}

impl<'a> Items<'a> {
    fn new(items: &'a [Sexp], span: SourceSpan) -> Self {
        Items { items, pos: 0, span }
    }

    fn peek(&self) -> Option<&'a Sexp> {
        self.items.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Sexp> {
        let it = self.items.get(self.pos);
        self.pos += 1;
        it
    }

    fn expect(&mut self, what: &'static str) -> Result<&'a Sexp, ParseError> {
        self.next().ok_or_else(|| end_of(self.span, what))
    }
}

/// Reads one literal starting at the cursor.
fn literal(items: &mut Items<'_>) -> Result<Literal, ParseError> {
    let first = items.expect("a literal")?;
    match first {
        Sexp::Atom(tok, span) => {
            if tok == "¬" || tok == "-" {
                let next = items.expect("a fluent after the negation marker")?;
                let name = next.as_atom().ok_or_else(|| syntax(next, "a fluent after the negation marker"))?;
                return Ok(Literal::neg(identifier(name, next.span())?));
            }
            if let Some(rest) = tok.strip_prefix('¬').or_else(|| tok.strip_prefix('-')) {
                return Ok(Literal::neg(identifier(rest, *span)?));
            }
            if tok.starts_with(':') {
                return Err(syntax(first, "a literal"));
            }
            Ok(Literal::pos(identifier(tok, *span)?))
        }
        Sexp::List(inner, span) => {
            let mut inner = Items::new(inner, *span);
            match inner.next() {
                Some(Sexp::Atom(kw, _)) if kw == "not" => {
                    let l = literal(&mut inner)?;
                    if let Some(extra) = inner.next() {
                        return Err(syntax(extra, "`)` after negated literal"));
                    }
                    Ok(l.complement())
                }
                _ => Err(syntax(first, "a literal")),
            }
        }
    }
}

/// A literal or `(and l1 .. ln)`.
fn conjunction(items: &mut Items<'_>) -> Result<Vec<Literal>, ParseError> {
    if let Some(Sexp::List(inner, span)) = items.peek() {
        if inner.first().and_then(Sexp::as_atom) == Some("and") {
            items.next();
            let mut inner = Items::new(&inner[1..], *span);
            let mut out = Vec::new();
            while inner.peek().is_some() {
                out.push(literal(&mut inner)?);
            }
            return Ok(out);
        }
    }
    Ok(vec![literal(items)?])
}

/// Effect of `:effect`: `when <cond> <lit>`, `(when <cond> <lit>)`, a bare
/// literal, or `(and <effect>..)`.
fn effects(items: &mut Items<'_>) -> Result<Vec<(Vec<Literal>, Literal)>, ParseError> {
    match items.peek() {
        Some(Sexp::Atom(tok, _)) if tok == "when" => {
            items.next();
            let cond = conjunction(items)?;
            let eff = literal(items)?;
            Ok(vec![(cond, eff)])
        }
        Some(Sexp::List(inner, span)) => match inner.first().and_then(Sexp::as_atom) {
            Some("when") => {
                items.next();
                let mut inner = Items::new(&inner[1..], *span);
                let cond = conjunction(&mut inner)?;
                let eff = literal(&mut inner)?;
                if let Some(extra) = inner.next() {
                    return Err(syntax(extra, "`)` after conditional effect"));
                }
                Ok(vec![(cond, eff)])
            }
            Some("and") => {
                items.next();
                let mut inner = Items::new(&inner[1..], *span);
                let mut out = Vec::new();
                while inner.peek().is_some() {
                    out.extend(effects(&mut inner)?);
                }
                Ok(out)
            }
            _ => Ok(vec![(Vec::new(), literal(items)?)]),
        },
        _ => Ok(vec![(Vec::new(), literal(items)?)]),
    }
}

fn action(items: &mut Items<'_>) -> Result<Action, ParseError> {
    let name_sexp = items.expect("an action name")?;
    let name = name_sexp.as_atom().ok_or_else(|| syntax(name_sexp, "an action name"))?;
    let mut act = Action::new(identifier(name, name_sexp.span())?);
    while let Some(kw) = items.next() {
        let Sexp::Atom(tok, span) = kw else {
            return Err(syntax(kw, "an action keyword"));
        };
        match tok.as_str() {
            ":effect" => {
                for (conditions, effect) in effects(items)? {
                    let id = effect_id(&act.name, act.effects.len() + 1);
                    act.effects.push(EffectProposition { id, effect, conditions });
                }
            }
            ":executable" | "executable" => act.executable.extend(conjunction(items)?),
            ":observe" => {
                let f = items.expect("an observed fluent")?;
                let fname = f.as_atom().ok_or_else(|| syntax(f, "an observed fluent"))?;
                let fname = identifier(fname, f.span())?;
                if !act.observes.is_empty() {
                    return Err(ParseError::MultipleObserve { span: *span, action: act.name.clone() });
                }
                act.observes.push(KnowledgeProposition { fluent: Fluent::new(fname) });
            }
            other if other.starts_with(':') => {
                return Err(ParseError::UnknownKeyword { span: *span, keyword: other.to_string() })
            }
            _ => return Err(syntax(kw, "an action keyword")),
        }
    }
    Ok(act)
}

fn oneof(items: &mut Items<'_>) -> Result<OneofConstraint, ParseError> {
    let mut literals = Vec::new();
    while items.peek().is_some() {
        literals.push(literal(items)?);
    }
    Ok(OneofConstraint { literals })
}

fn head_keyword(list: &[Sexp]) -> Option<(&str, SourceSpan)> {
    match list.first() {
        Some(Sexp::Atom(a, s)) => Some((a.as_str(), *s)),
        _ => None,
    }
}

/// Parses domain text. Fails with a positioned error on the first problem.
pub fn parse_domain(text: &str) -> Result<PlanningDomain, ParseError> {
    let forms = read_sexps(text)?;
    let mut d = PlanningDomain::default();
    let mut explicit_fluents = false;
    let mut action_names = HashSet::new();
    for form in &forms {
        let Sexp::List(list, span) = form else {
            return Err(syntax(form, "a top-level form"));
        };
        let Some((head, head_span)) = head_keyword(list) else {
            return Err(end_of(*span, "a keyword"));
        };
        let mut items = Items::new(&list[1..], *span);
        match head {
            ":action" => {
                let a = action(&mut items)?;
                if !action_names.insert(a.name.clone()) {
                    return Err(ParseError::DuplicateAction { span: *span, name: a.name });
                }
                d.actions.push(a);
            }
            ":init" => {
                while let Some(it) = items.peek() {
                    match it {
                        Sexp::List(inner, ispan) if head_keyword(inner).map(|h| h.0) == Some("oneof") => {
                            items.next();
                            d.oneofs.push(oneof(&mut Items::new(&inner[1..], *ispan))?);
                        }
                        Sexp::List(inner, ispan) if head_keyword(inner).map(|h| h.0) == Some(":static") => {
                            items.next();
                            for f in &inner[1..] {
                                let name = f.as_atom().ok_or_else(|| syntax(f, "a static fluent"))?;
                                d.static_fluents.push(Fluent::new(identifier(name, f.span())?));
                            }
                            let _ = ispan;
                        }
                        Sexp::List(inner, _) => match head_keyword(inner) {
                            Some((kw, kspan)) if kw.starts_with(':') => {
                                return Err(ParseError::UnknownKeyword { span: kspan, keyword: kw.to_string() })
                            }
                            _ => d.init.push(literal(&mut items)?),
                        },
                        Sexp::Atom(..) => d.init.push(literal(&mut items)?),
                    }
                }
            }
            "oneof" => d.oneofs.push(oneof(&mut items)?),
            ":goal" => {
                let k = items.expect("`weak` or `strong`")?;
                let kind = match k.as_atom() {
                    Some("weak") => GoalKind::Weak,
                    Some("strong") => GoalKind::Strong,
                    _ => return Err(syntax(k, "`weak` or `strong`")),
                };
                let mut literals = Vec::new();
                while items.peek().is_some() {
                    literals.extend(conjunction(&mut items)?);
                }
                d.goals.push(GoalProposition { kind, literals });
            }
            ":fluents" => {
                explicit_fluents = true;
                for f in items.items {
                    let name = f.as_atom().ok_or_else(|| syntax(f, "a fluent name"))?;
                    d.fluents.push(Fluent::new(identifier(name, f.span())?));
                }
            }
            other if other.starts_with(':') => {
                return Err(ParseError::UnknownKeyword { span: head_span, keyword: other.to_string() })
            }
            _ => return Err(syntax(&list[0], "a keyword such as `:action`")),
        }
    }
    if !explicit_fluents {
        d.declare_used_fluents();
    }
    Ok(d)
}

fn write_conjunction(out: &mut String, lits: &[Literal]) {
    match lits {
        [single] => {
            let _ = write!(out, "{single}");
        }
        _ => {
            out.push_str("(and");
            for l in lits {
                let _ = write!(out, " {l}");
            }
            out.push(')');
        }
    }
}

/// Writes a domain back to dialect text; `parse_domain` of the result yields
/// an equal domain provided effect ids follow the `<action>_ep<n>` scheme.
pub fn render_domain(d: &PlanningDomain) -> String {
    let mut out = String::new();
    out.push_str("(:fluents");
    for f in &d.fluents {
        let _ = write!(out, " {f}");
    }
    out.push_str(")\n");
    for a in &d.actions {
        let _ = write!(out, "(:action {}", a.name);
        if !a.executable.is_empty() {
            out.push_str(" :executable ");
            write_conjunction(&mut out, &a.executable);
        }
        for ep in &a.effects {
            out.push_str(" :effect ");
            if !ep.conditions.is_empty() {
                out.push_str("when ");
                write_conjunction(&mut out, &ep.conditions);
                out.push(' ');
            }
            let _ = write!(out, "{}", ep.effect);
        }
        for kp in &a.observes {
            let _ = write!(out, " :observe {}", kp.fluent);
        }
        out.push_str(")\n");
    }
    if !d.init.is_empty() || !d.oneofs.is_empty() || !d.static_fluents.is_empty() {
        out.push_str("(:init");
        for l in &d.init {
            let _ = write!(out, " {l}");
        }
        for o in &d.oneofs {
            out.push_str(" (oneof");
            for l in &o.literals {
                let _ = write!(out, " {l}");
            }
            out.push(')');
        }
        if !d.static_fluents.is_empty() {
            out.push_str(" (:static");
            for f in &d.static_fluents {
                let _ = write!(out, " {f}");
            }
            out.push(')');
        }
        out.push_str(")\n");
    }
    for g in &d.goals {
        let _ = write!(out, "(:goal {} ", g.kind);
        write_conjunction(&mut out, &g.literals);
        out.push_str(")\n");
    }
    out
}
