//! Quantifier-free formulas over the mapping signature: one unary function
//! `f`, unary colors `M1, M2, ..`, equality, and the connectives `! & |`.
//!
//! Concrete syntax (precedence `!` over `&` over `|`, both binary connectives
//! left-associative):
//!
//! ```text
//! f(x1) = f(x2)
//! f^2(x1) = x1 & !(M1(x2) | x1 != x2)
//! ```
//!
//! Terms are normalized to the form `f^a(x_i)`; `f(f(x1))` parses to the same
//! term as `f^2(x1)`. Quantifier keywords are rejected with a dedicated error
//! so callers can tell "out of fragment" apart from a typo.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::mapping::ColoredMapping;
use crate::model::SampleModel;

/// A term `f^iterate(x_var)`; variables are 1-based (`x1, x2, ..`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FTerm {
    pub var: usize,
    pub iterate: usize,
}

impl FTerm {
    pub fn new(var: usize, iterate: usize) -> Self {
        assert!(var >= 1, "variables are numbered from x1");
        FTerm { var, iterate }
    }
}

impl fmt::Display for FTerm {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.iterate {
            0 => write!(out, "x{}", self.var),
            1 => write!(out, "f(x{})", self.var),
            a => write!(out, "f^{}(x{})", a, self.var),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum QfFormula {
    True,
    False,
    Eq(FTerm, FTerm),
    Neq(FTerm, FTerm),
    /// `Color(m, t)`: term `t` carries color `M_m`.
    Color(usize, FTerm),
    Not(Box<QfFormula>),
    And(Box<QfFormula>, Box<QfFormula>),
    Or(Box<QfFormula>, Box<QfFormula>),
}

impl QfFormula {
    /// Conjunction with unit/absorbing simplification.
    pub fn and(a: QfFormula, b: QfFormula) -> QfFormula {
        match (a, b) {
            (QfFormula::True, b) => b,
            (a, QfFormula::True) => a,
            (QfFormula::False, _) | (_, QfFormula::False) => QfFormula::False,
            (a, b) => QfFormula::And(Box::new(a), Box::new(b)),
        }
    }

    /// Disjunction with unit/absorbing simplification.
    pub fn or(a: QfFormula, b: QfFormula) -> QfFormula {
        match (a, b) {
            (QfFormula::False, b) => b,
            (a, QfFormula::False) => a,
            (QfFormula::True, _) | (_, QfFormula::True) => QfFormula::True,
            (a, b) => QfFormula::Or(Box::new(a), Box::new(b)),
        }
    }

    /// Negation pushed through connectives and atoms (colors keep a `Not`).
    pub fn negated(&self) -> QfFormula {
        match self {
            QfFormula::True => QfFormula::False,
            QfFormula::False => QfFormula::True,
            QfFormula::Eq(s, t) => QfFormula::Neq(*s, *t),
            QfFormula::Neq(s, t) => QfFormula::Eq(*s, *t),
            QfFormula::Color(..) => QfFormula::Not(Box::new(self.clone())),
            QfFormula::Not(inner) => (**inner).clone(),
            QfFormula::And(a, b) => QfFormula::or(a.negated(), b.negated()),
            QfFormula::Or(a, b) => QfFormula::and(a.negated(), b.negated()),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<usize> {
        let mut vars = BTreeSet::new();
        self.visit_terms(&mut |t| {
            vars.insert(t.var);
        });
        vars
    }

    /// Arity p: the largest variable index occurring (0 for closed formulas
    /// such as `true`).
    pub fn arity(&self) -> usize {
        self.free_vars().into_iter().max().unwrap_or(0)
    }

    /// Total number of `f` symbols across all term occurrences.
    pub fn function_symbol_count(&self) -> usize {
        let mut total = 0;
        self.visit_terms(&mut |t| total += t.iterate);
        total
    }

    /// Largest iterate depth q of any single term.
    pub fn max_iterate(&self) -> usize {
        let mut q = 0;
        self.visit_terms(&mut |t| q = q.max(t.iterate));
        q
    }

    pub fn visit_terms(&self, visit: &mut impl FnMut(&FTerm)) {
        match self {
            QfFormula::True | QfFormula::False => {}
            QfFormula::Eq(s, t) | QfFormula::Neq(s, t) => {
                visit(s);
                visit(t);
            }
            QfFormula::Color(_, t) => visit(t),
            QfFormula::Not(a) => a.visit_terms(visit),
            QfFormula::And(a, b) | QfFormula::Or(a, b) => {
                a.visit_terms(visit);
                b.visit_terms(visit);
            }
        }
    }

    /// Structure-preserving term rewrite (used for iterate shifts and
    /// variable renaming during substitution).
    pub fn map_terms(&self, rewrite: &impl Fn(FTerm) -> FTerm) -> QfFormula {
        match self {
            QfFormula::True => QfFormula::True,
            QfFormula::False => QfFormula::False,
            QfFormula::Eq(s, t) => QfFormula::Eq(rewrite(*s), rewrite(*t)),
            QfFormula::Neq(s, t) => QfFormula::Neq(rewrite(*s), rewrite(*t)),
            QfFormula::Color(m, t) => QfFormula::Color(*m, rewrite(*t)),
            QfFormula::Not(a) => QfFormula::Not(Box::new(a.map_terms(rewrite))),
            QfFormula::And(a, b) => {
                QfFormula::And(Box::new(a.map_terms(rewrite)), Box::new(b.map_terms(rewrite)))
            }
            QfFormula::Or(a, b) => {
                QfFormula::Or(Box::new(a.map_terms(rewrite)), Box::new(b.map_terms(rewrite)))
            }
        }
    }

    /// Evaluate over any model; `points[i]` interprets `x_{i+1}`.
    pub fn eval_model<M: SampleModel>(&self, model: &M, points: &[M::Point]) -> bool {
        let term = |t: &FTerm| -> M::Point {
            let mut cur = points[t.var - 1].clone();
            for _ in 0..t.iterate {
                cur = model.step(&cur);
            }
            cur
        };
        match self {
            QfFormula::True => true,
            QfFormula::False => false,
            QfFormula::Eq(s, t) => term(s) == term(t),
            QfFormula::Neq(s, t) => term(s) != term(t),
            QfFormula::Color(m, t) => model.has_color(*m, &term(t)),
            QfFormula::Not(a) => !a.eval_model(model, points),
            QfFormula::And(a, b) => a.eval_model(model, points) && b.eval_model(model, points),
            QfFormula::Or(a, b) => a.eval_model(model, points) || b.eval_model(model, points),
        }
    }

    /// Evaluate on a finite mapping; `assignment[i]` interprets `x_{i+1}` and
    /// must cover the formula's arity.
    pub fn evaluate(&self, mapping: &ColoredMapping, assignment: &[usize]) -> bool {
        self.eval_model(mapping, assignment)
    }
}

fn precedence(f: &QfFormula) -> u8 {
    match f {
        QfFormula::Or(..) => 0,
        QfFormula::And(..) => 1,
        QfFormula::Not(..) => 2,
        _ => 3,
    }
}

impl fmt::Display for QfFormula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        // children are parenthesized when their precedence drops below what
        // the position requires; right operands of & and | need strictly
        // higher precedence because both parse left-associatively.
        fn write_at(out: &mut fmt::Formatter<'_>, f: &QfFormula, required: u8) -> fmt::Result {
            let p = precedence(f);
            if p < required {
                write!(out, "(")?;
                write_at(out, f, 0)?;
                return write!(out, ")");
            }
            match f {
                QfFormula::True => write!(out, "true"),
                QfFormula::False => write!(out, "false"),
                QfFormula::Eq(s, t) => write!(out, "{s} = {t}"),
                QfFormula::Neq(s, t) => write!(out, "{s} != {t}"),
                QfFormula::Color(m, t) => write!(out, "M{m}({t})"),
                QfFormula::Not(a) => {
                    write!(out, "!")?;
                    write_at(out, a, 2)
                }
                QfFormula::And(a, b) => {
                    write_at(out, a, 1)?;
                    write!(out, " & ")?;
                    write_at(out, b, 2)
                }
                QfFormula::Or(a, b) => {
                    write_at(out, a, 0)?;
                    write!(out, " | ")?;
                    write_at(out, b, 1)
                }
            }
        }
        write_at(out, self, 0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaParseError {
    #[error("parse error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("offset {pos}: `{word}` is a quantifier; only the quantifier-free fragment is supported")]
    Quantifier { pos: usize, word: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    LPar,
    RPar,
    Bang,
    Amp,
    Pipe,
    Eq,
    Neq,
    Caret,
    True,
    False,
    FSym,
    Var(usize),
    Color(usize),
    Int(usize),
}

impl fmt::Display for Tok {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::LPar => "(",
            Tok::RPar => ")",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Eq => "=",
            Tok::Neq => "!=",
            Tok::Caret => "^",
            Tok::True => "true",
            Tok::False => "false",
            Tok::FSym => "f",
            Tok::Var(i) => return write!(out, "x{i}"),
            Tok::Color(m) => return write!(out, "M{m}"),
            Tok::Int(k) => return write!(out, "{k}"),
        };
        write!(out, "{s}")
    }
}

const QUANTIFIER_WORDS: &[&str] = &["forall", "exists", "all", "some", "A", "E"];

fn lex(input: &str) -> Result<Vec<(Tok, usize)>, FormulaParseError> {
    let bytes: Vec<char> = input.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let pos = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
            }
            '(' => {
                toks.push((Tok::LPar, pos));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RPar, pos));
                i += 1;
            }
            '&' => {
                toks.push((Tok::Amp, pos));
                i += 1;
            }
            '|' => {
                toks.push((Tok::Pipe, pos));
                i += 1;
            }
            '=' => {
                toks.push((Tok::Eq, pos));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, pos));
                i += 1;
            }
            '!' => {
                if bytes.get(i + 1) == Some(&'=') {
                    toks.push((Tok::Neq, pos));
                    i += 2;
                } else {
                    toks.push((Tok::Bang, pos));
                    i += 1;
                }
            }
            '∀' | '∃' => {
                return Err(FormulaParseError::Quantifier {
                    pos,
                    word: c.to_string(),
                });
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let word: String = bytes[i..j].iter().collect();
                toks.push((Tok::Int(word.parse().unwrap()), pos));
                i = j;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == '_') {
                    j += 1;
                }
                let word: String = bytes[i..j].iter().collect();
                i = j;
                let tok = match word.as_str() {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "f" => Tok::FSym,
                    w if QUANTIFIER_WORDS.contains(&w) => {
                        return Err(FormulaParseError::Quantifier {
                            pos,
                            word: word.clone(),
                        })
                    }
                    w if w.starts_with('x') && w[1..].bytes().all(|b| b.is_ascii_digit()) => {
                        let idx: usize = w[1..].parse().map_err(|_| FormulaParseError::Syntax {
                            pos,
                            msg: format!("variable index out of range in `{w}`"),
                        })?;
                        if idx == 0 {
                            return Err(FormulaParseError::Syntax {
                                pos,
                                msg: "variables are numbered from x1".into(),
                            });
                        }
                        Tok::Var(idx)
                    }
                    w if w.starts_with('M') && w[1..].bytes().all(|b| b.is_ascii_digit()) => {
                        let idx: usize = w[1..].parse().map_err(|_| FormulaParseError::Syntax {
                            pos,
                            msg: format!("color index out of range in `{w}`"),
                        })?;
                        if idx == 0 {
                            return Err(FormulaParseError::Syntax {
                                pos,
                                msg: "colors are numbered from M1".into(),
                            });
                        }
                        Tok::Color(idx)
                    }
                    w => {
                        return Err(FormulaParseError::Syntax {
                            pos,
                            msg: format!("unknown identifier `{w}`"),
                        })
                    }
                };
                toks.push((tok, pos));
            }
            c => {
                return Err(FormulaParseError::Syntax {
                    pos,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    cursor: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.cursor).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks
            .get(self.cursor)
            .map(|&(_, p)| p)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.cursor).map(|(t, _)| t.clone());
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), FormulaParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.cursor += 1;
                Ok(())
            }
            Some(t) => Err(FormulaParseError::Syntax {
                pos: self.pos(),
                msg: format!("expected `{want}`, found `{t}`"),
            }),
            None => Err(FormulaParseError::Syntax {
                pos: self.pos(),
                msg: format!("expected `{want}`, found end of input"),
            }),
        }
    }

    fn parse_or(&mut self) -> Result<QfFormula, FormulaParseError> {
        let mut acc = self.parse_and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.cursor += 1;
            let rhs = self.parse_and()?;
            acc = QfFormula::Or(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn parse_and(&mut self) -> Result<QfFormula, FormulaParseError> {
        let mut acc = self.parse_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.cursor += 1;
            let rhs = self.parse_unary()?;
            acc = QfFormula::And(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<QfFormula, FormulaParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.cursor += 1;
                Ok(QfFormula::Not(Box::new(self.parse_unary()?)))
            }
            Some(Tok::LPar) => {
                self.cursor += 1;
                let inner = self.parse_or()?;
                self.expect(Tok::RPar)?;
                Ok(inner)
            }
            Some(Tok::True) => {
                self.cursor += 1;
                Ok(QfFormula::True)
            }
            Some(Tok::False) => {
                self.cursor += 1;
                Ok(QfFormula::False)
            }
            Some(Tok::Color(_)) => {
                let m = match self.bump() {
                    Some(Tok::Color(m)) => m,
                    _ => unreachable!(),
                };
                self.expect(Tok::LPar)?;
                let t = self.parse_term()?;
                self.expect(Tok::RPar)?;
                Ok(QfFormula::Color(m, t))
            }
            Some(Tok::Var(_) | Tok::FSym) => {
                let lhs = self.parse_term()?;
                match self.bump() {
                    Some(Tok::Eq) => Ok(QfFormula::Eq(lhs, self.parse_term()?)),
                    Some(Tok::Neq) => Ok(QfFormula::Neq(lhs, self.parse_term()?)),
                    Some(t) => Err(FormulaParseError::Syntax {
                        pos: self.pos(),
                        msg: format!("expected `=` or `!=` after a term, found `{t}`"),
                    }),
                    None => Err(FormulaParseError::Syntax {
                        pos: self.pos(),
                        msg: "expected `=` or `!=` after a term, found end of input".into(),
                    }),
                }
            }
            Some(t) => Err(FormulaParseError::Syntax {
                pos: self.pos(),
                msg: format!("expected a formula, found `{t}`"),
            }),
            None => Err(FormulaParseError::Syntax {
                pos: self.pos(),
                msg: "expected a formula, found end of input".into(),
            }),
        }
    }

    /// term := x<i> | f(term) | f^<a>(term); nested applications accumulate.
    fn parse_term(&mut self) -> Result<FTerm, FormulaParseError> {
        match self.bump() {
            Some(Tok::Var(i)) => Ok(FTerm::new(i, 0)),
            Some(Tok::FSym) => {
                let extra = if self.peek() == Some(&Tok::Caret) {
                    self.cursor += 1;
                    match self.bump() {
                        Some(Tok::Int(a)) => a,
                        Some(t) => {
                            return Err(FormulaParseError::Syntax {
                                pos: self.pos(),
                                msg: format!("expected an iterate after `^`, found `{t}`"),
                            })
                        }
                        None => {
                            return Err(FormulaParseError::Syntax {
                                pos: self.pos(),
                                msg: "expected an iterate after `^`".into(),
                            })
                        }
                    }
                } else {
                    1
                };
                self.expect(Tok::LPar)?;
                let inner = self.parse_term()?;
                self.expect(Tok::RPar)?;
                Ok(FTerm::new(inner.var, inner.iterate + extra))
            }
            Some(t) => Err(FormulaParseError::Syntax {
                pos: self.pos(),
                msg: format!("expected a term, found `{t}`"),
            }),
            None => Err(FormulaParseError::Syntax {
                pos: self.pos(),
                msg: "expected a term, found end of input".into(),
            }),
        }
    }
}

pub fn parse_formula(input: &str) -> Result<QfFormula, FormulaParseError> {
    let toks = lex(input)?;
    let mut parser = Parser {
        toks,
        cursor: 0,
        end: input.chars().count(),
    };
    let formula = parser.parse_or()?;
    if let Some(t) = parser.peek() {
        return Err(FormulaParseError::Syntax {
            pos: parser.pos(),
            msg: format!("trailing input starting at `{t}`"),
        });
    }
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::ColoredMapping;

    fn p(s: &str) -> QfFormula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn parses_and_normalizes_terms() {
        assert_eq!(p("f(f(x1)) = x2"), p("f^2(x1) = x2"));
        assert_eq!(p("f^0(x3) = x3"), p("x3 = x3"));
        assert_eq!(p("f^2(f(x1)) = x1"), p("f^3(x1) = x1"));
        let eq = p("f(x1) = f(x2)");
        assert_eq!(
            eq,
            QfFormula::Eq(FTerm::new(1, 1), FTerm::new(2, 1))
        );
    }

    #[test]
    fn precedence_is_not_over_and_over_or() {
        // a | b & !c parses as a | (b & (!c))
        let f = p("x1 = x1 | x2 = x2 & !x3 = x3");
        match f {
            QfFormula::Or(_, rhs) => match *rhs {
                QfFormula::And(_, not) => assert!(matches!(*not, QfFormula::Not(_))),
                other => panic!("expected And on the right, got {other}"),
            },
            other => panic!("expected Or at top, got {other}"),
        }
        // both connectives associate left
        let g = p("x1 = x1 & x2 = x2 & x3 = x3");
        assert!(matches!(g, QfFormula::And(ref l, _) if matches!(**l, QfFormula::And(..))));
    }

    #[test]
    fn quantifiers_are_rejected_distinctly() {
        for bad in ["forall x1 f(x1) = x1", "exists x2 x2 = x2", "∀x1 x1 = x1"] {
            match parse_formula(bad) {
                Err(FormulaParseError::Quantifier { .. }) => {}
                other => panic!("expected quantifier rejection for `{bad}`, got {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_formula("f(x1) = ") {
            Err(FormulaParseError::Syntax { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("{other:?}"),
        }
        assert!(parse_formula("x0 = x0").is_err());
        assert!(parse_formula("g(x1) = x1").is_err());
        assert!(parse_formula("x1 = x2 x3").is_err());
        assert!(parse_formula("").is_err());
    }

    #[test]
    fn arity_and_symbol_counts() {
        let f = p("f^2(x1) = f(x3) & M2(x1)");
        assert_eq!(f.arity(), 3);
        assert_eq!(f.free_vars().into_iter().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(f.function_symbol_count(), 3);
        assert_eq!(f.max_iterate(), 2);
        assert_eq!(p("true").arity(), 0);
    }

    #[test]
    fn evaluation_on_a_small_mapping() {
        // 0 -> 1 -> 2 -> 1, color M1 = {2}
        let m = ColoredMapping::with_colors(vec![1, 2, 1], 1, vec![0, 0, 1]).unwrap();
        let f = p("f(x1) = f(x2)");
        assert!(f.evaluate(&m, &[0, 2]));
        assert!(!f.evaluate(&m, &[0, 1]));
        assert!(p("M1(f(x1))").evaluate(&m, &[1]));
        assert!(!p("M1(x1)").evaluate(&m, &[1]));
        assert!(p("!(x1 = x2 | f(x1) != f(x2))").evaluate(&m, &[0, 2]));
        assert!(p("true").evaluate(&m, &[]));
    }

    #[test]
    fn negation_pushes_through() {
        let f = p("f(x1) = x1 & !M1(x2)");
        assert_eq!(f.negated(), p("f(x1) != x1 | M1(x2)"));
        assert_eq!(f.negated().negated(), f);
    }

    #[test]
    fn display_round_trips_handwritten_cases() {
        for s in [
            "f(x1) = f(x2)",
            "f^2(x1) = x1",
            "x1 != x2 & (M1(x1) | M2(f(x2)))",
            "!(x1 = x2 & x2 = x3)",
            "!!x1 = x1",
            "x1 = x1 | (x2 = x2 | x3 = x3)",
            "true & false",
        ] {
            let f = p(s);
            let printed = f.to_string();
            assert_eq!(p(&printed), f, "round trip failed for `{s}` -> `{printed}`");
        }
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        fn arb_term() -> impl Strategy<Value = FTerm> {
            (1usize..4, 0usize..4).prop_map(|(v, a)| FTerm::new(v, a))
        }

        fn arb_formula() -> impl Strategy<Value = QfFormula> {
            let leaf = prop_oneof![
                Just(QfFormula::True),
                Just(QfFormula::False),
                (arb_term(), arb_term()).prop_map(|(s, t)| QfFormula::Eq(s, t)),
                (arb_term(), arb_term()).prop_map(|(s, t)| QfFormula::Neq(s, t)),
                (1usize..3, arb_term()).prop_map(|(m, t)| QfFormula::Color(m, t)),
            ];
            leaf.prop_recursive(5, 48, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|a| QfFormula::Not(Box::new(a))),
                    (inner.clone(), inner.clone())
                        .prop_map(|(a, b)| QfFormula::And(Box::new(a), Box::new(b))),
                    (inner.clone(), inner)
                        .prop_map(|(a, b)| QfFormula::Or(Box::new(a), Box::new(b))),
                ]
            })
        }

        proptest! {
            #[test]
            fn print_then_parse_is_identity(f in arb_formula()) {
                let printed = f.to_string();
                let reparsed = parse_formula(&printed).unwrap();
                prop_assert_eq!(reparsed, f);
            }

            #[test]
            fn negation_is_involutive_semantically(f in arb_formula(), seed in 0u64..1000) {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let n = rng.gen_range(1..6);
                let func: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let masks: Vec<u64> = (0..n).map(|_| rng.gen_range(0..4)).collect();
                let m = ColoredMapping::with_colors(func, 2, masks).unwrap();
                let p = f.arity().max(1);
                let asg: Vec<usize> = (0..p).map(|_| rng.gen_range(0..n)).collect();
                prop_assert_eq!(
                    f.negated().evaluate(&m, &asg),
                    !f.evaluate(&m, &asg)
                );
            }
        }
    }
}
