//! Functions definable from `f` by quantifier-free case switches, the cycle
//! shifts built from them, and substitution of such functions into formulas.
//!
//! A definable function acts on every mapping at once: on any given element it
//! agrees with some iterate `f^c`, where the case split is governed by
//! quantifier-free guards in one variable. The cycle shifts
//! `zeta_k = "apply f on k-cycles, fix everything else"` generate a finite
//! abelian group isomorphic to Z/1 x Z/2 x .. x Z/q, which is what the
//! approximation pipeline averages over.

use std::fmt;

use thiserror::Error;

use crate::formula::{FTerm, QfFormula};
use crate::mapping::ColoredMapping;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DefinableError {
    #[error("switch condition must have exactly one free variable, found {found:?}")]
    SwitchArity { found: Vec<usize> },
    #[error("cycle shift length must be at least 1")]
    ZeroCycleLength,
    #[error("substitution needs {needed} functions, got {got}")]
    NotEnoughFunctions { needed: usize, got: usize },
}

/// A function definable from `f` by quantifier-free one-variable guards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DefinableFn {
    Identity,
    /// The base function `f` itself.
    BaseF,
    /// `Compose(g, h)` is `g . h` (apply `h` first).
    Compose(Box<DefinableFn>, Box<DefinableFn>),
    /// `Switch(cond, g, h)`: apply `g` where `cond` holds, `h` elsewhere.
    /// The condition has exactly one free variable.
    Switch(Box<QfFormula>, Box<DefinableFn>, Box<DefinableFn>),
}

impl DefinableFn {
    pub fn switch(
        cond: QfFormula,
        then_fn: DefinableFn,
        else_fn: DefinableFn,
    ) -> Result<DefinableFn, DefinableError> {
        let vars: Vec<usize> = cond.free_vars().into_iter().collect();
        if vars.len() != 1 {
            return Err(DefinableError::SwitchArity { found: vars });
        }
        Ok(DefinableFn::Switch(
            Box::new(cond),
            Box::new(then_fn),
            Box::new(else_fn),
        ))
    }

    pub fn compose(g: DefinableFn, h: DefinableFn) -> DefinableFn {
        DefinableFn::Compose(Box::new(g), Box::new(h))
    }

    /// Apply to one element of a finite mapping.
    pub fn eval(&self, mapping: &ColoredMapping, v: usize) -> usize {
        match self {
            DefinableFn::Identity => v,
            DefinableFn::BaseF => mapping.f(v),
            DefinableFn::Compose(g, h) => g.eval(mapping, h.eval(mapping, v)),
            DefinableFn::Switch(cond, g, h) => {
                let var = *cond
                    .free_vars()
                    .iter()
                    .next()
                    .expect("switch condition has one free variable");
                // pad the assignment up to the guard's variable index
                let assignment = vec![v; var];
                if cond.evaluate(mapping, &assignment) {
                    g.eval(mapping, v)
                } else {
                    h.eval(mapping, v)
                }
            }
        }
    }

    /// Flatten into guarded iterate branches `(guard in x1, c)` meaning
    /// "where guard holds, this function is f^c". The guards are pairwise
    /// exclusive and exhaustive by construction.
    pub fn flatten(&self) -> Vec<(QfFormula, usize)> {
        match self {
            DefinableFn::Identity => vec![(QfFormula::True, 0)],
            DefinableFn::BaseF => vec![(QfFormula::True, 1)],
            DefinableFn::Compose(g, h) => {
                let hb = h.flatten();
                let gb = g.flatten();
                let mut out = Vec::with_capacity(hb.len() * gb.len());
                for (psi, c) in &hb {
                    for (chi, d) in &gb {
                        // after h acted as f^c, g's guard watches f^c(x1)
                        let shifted =
                            chi.map_terms(&|t| FTerm::new(t.var, t.iterate + c));
                        out.push((QfFormula::and(psi.clone(), shifted), c + d));
                    }
                }
                out
            }
            DefinableFn::Switch(cond, g, h) => {
                let phi = rename_single_var(cond, 1);
                let mut out = Vec::new();
                for (gamma, c) in g.flatten() {
                    out.push((QfFormula::and(phi.clone(), gamma), c));
                }
                for (gamma, c) in h.flatten() {
                    out.push((QfFormula::and(phi.negated(), gamma), c));
                }
                out
            }
        }
    }
}

impl fmt::Display for DefinableFn {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefinableFn::Identity => write!(out, "id"),
            DefinableFn::BaseF => write!(out, "f"),
            DefinableFn::Compose(g, h) => write!(out, "({g} . {h})"),
            DefinableFn::Switch(c, g, h) => write!(out, "[{c} ? {g} : {h}]"),
        }
    }
}

fn rename_single_var(f: &QfFormula, to: usize) -> QfFormula {
    f.map_terms(&|t| FTerm::new(to, t.iterate))
}

/// The shift `zeta_k`: apply `f` on elements of cycles of length exactly `k`,
/// fix everything else. Rejects `k = 0`.
pub fn cycle_shift(k: usize) -> Result<DefinableFn, DefinableError> {
    if k == 0 {
        return Err(DefinableError::ZeroCycleLength);
    }
    // guard: f^k(x1) = x1 and no earlier return
    let mut guard = QfFormula::Eq(FTerm::new(1, k), FTerm::new(1, 0));
    for i in 1..k {
        guard = QfFormula::and(
            guard,
            QfFormula::Neq(FTerm::new(1, i), FTerm::new(1, 0)),
        );
    }
    DefinableFn::switch(guard, DefinableFn::BaseF, DefinableFn::Identity)
}

/// The group generated by `zeta_1 .. zeta_q`, represented by exponent vectors
/// `(e_1, .., e_q)` with `0 <= e_k < k`; composition is componentwise addition
/// mod k, so the group is abelian of order q!.
#[derive(Clone, Debug)]
pub struct CycleShiftGroup {
    q: usize,
    elements: Vec<Vec<usize>>,
}

/// Enumerate the full group for a given iterate depth `q`.
pub fn group_elements(q: usize) -> CycleShiftGroup {
    let mut elements = vec![Vec::new()];
    for k in 1..=q {
        let mut next = Vec::with_capacity(elements.len() * k);
        for prefix in &elements {
            for e in 0..k {
                let mut v = prefix.clone();
                v.push(e);
                next.push(v);
            }
        }
        elements = next;
    }
    CycleShiftGroup { q, elements }
}

impl CycleShiftGroup {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn identity(&self) -> Vec<usize> {
        vec![0; self.q]
    }

    pub fn compose(&self, a: &[usize], b: &[usize]) -> Vec<usize> {
        (0..self.q).map(|i| (a[i] + b[i]) % (i + 1)).collect()
    }

    pub fn inverse(&self, a: &[usize]) -> Vec<usize> {
        (0..self.q).map(|i| (i + 1 - a[i]) % (i + 1)).collect()
    }

    /// Apply a group element directly: an element on a cycle of length
    /// `k <= q` advances `e_k` steps along `f`, everything else is fixed.
    pub fn apply(&self, mapping: &ColoredMapping, elem: &[usize], v: usize) -> usize {
        let cs = mapping.cycle_structure();
        match cs.cycle_len[v] {
            Some(k) if k <= self.q => mapping.apply_iterate(v, elem[k - 1]),
            _ => v,
        }
    }

    /// The same element as an explicit composition of cycle shifts.
    pub fn to_definable(&self, elem: &[usize]) -> DefinableFn {
        let mut acc = DefinableFn::Identity;
        for k in 1..=self.q {
            let zeta = cycle_shift(k).expect("k >= 1");
            for _ in 0..elem[k - 1] {
                acc = match acc {
                    DefinableFn::Identity => zeta.clone(),
                    other => DefinableFn::compose(zeta.clone(), other),
                };
            }
        }
        acc
    }
}

/// Substitute definable functions for the variables of `phi`: the result is a
/// quantifier-free formula equivalent to `phi(g_1(x_1), .., g_p(x_p))`. Each
/// `g_i` is flattened into guarded iterate branches; the result is the
/// disjunction, over branch combinations, of the combined guards conjoined
/// with `phi` under the corresponding iterate shifts.
pub fn substitute(phi: &QfFormula, gs: &[DefinableFn]) -> Result<QfFormula, DefinableError> {
    let p = phi.arity();
    if gs.len() < p {
        return Err(DefinableError::NotEnoughFunctions {
            needed: p,
            got: gs.len(),
        });
    }
    let occurring: Vec<usize> = phi.free_vars().into_iter().collect();
    let branch_lists: Vec<Vec<(QfFormula, usize)>> = occurring
        .iter()
        .map(|&i| {
            gs[i - 1]
                .flatten()
                .into_iter()
                .map(|(guard, c)| (rename_single_var(&guard, i), c))
                .collect()
        })
        .collect();

    let mut result = QfFormula::False;
    let mut choice = vec![0usize; occurring.len()];
    loop {
        let mut guard = QfFormula::True;
        let mut shift = vec![0usize; p + 1];
        for (slot, &var) in occurring.iter().enumerate() {
            let (g, c) = &branch_lists[slot][choice[slot]];
            guard = QfFormula::and(guard, g.clone());
            shift[var] = *c;
        }
        let shifted = phi.map_terms(&|t| FTerm::new(t.var, t.iterate + shift[t.var]));
        result = QfFormula::or(result, QfFormula::and(guard, shifted));

        // odometer over branch choices
        let mut slot = 0;
        loop {
            if slot == choice.len() {
                return Ok(result);
            }
            choice[slot] += 1;
            if choice[slot] < branch_lists[slot].len() {
                break;
            }
            choice[slot] = 0;
            slot += 1;
        }
    }
}
