//! Piecewise-affine self-maps of [0,1) as concrete limit objects: exact
//! iterate evaluation, refinement into cells on which every iterate up to a
//! chosen depth is a single affine map, exact almost-everywhere satisfaction
//! densities, cyclic-part extraction, and the measure-preservation check that
//! gates the approximation pipeline.
//!
//! Density semantics are almost-everywhere: an atom `f^a(x_i) = f^b(x_j)`
//! holds on a product cell when it holds on a positive-measure subset, i.e.
//! for `i = j` when the two affine forms coincide on the cell, and for
//! `i != j` when both sides are constant and equal. Nondegenerate affine
//! constraint sets are null for the product measure, so these rules compute
//! the exact measure of the satisfaction set.
//!
//! All interval endpoints, slopes, and intercepts are exact rationals. Pieces
//! and color intervals are half-open `[lo, hi)`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::RngCore;
use thiserror::Error;

use crate::exec::{self, ExecMode};
use crate::formula::{FTerm, QfFormula};
use crate::ratio::{dyadic, format_ratio_explicit, parse_ratio, rat_int, DYADIC_BITS};

/// Cap on refinement output; splits stop with an error beyond this.
pub const DEFAULT_CELL_LIMIT: usize = 200_000;
/// Cap on product-cell tuples in exact interval densities.
pub const DEFAULT_CELL_TUPLE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum IntervalError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("pieces must tile [0,1) exactly: {msg}")]
    BadPartition { msg: String },
    #[error("piece {index} maps outside [0,1): {msg}")]
    ImageOutOfUnit { index: usize, msg: String },
    #[error("color M{m} has an ill-formed interval ({lo}, {hi})")]
    BadColorInterval {
        m: usize,
        lo: BigRational,
        hi: BigRational,
    },
    #[error("at most 64 colors are supported, got {got}")]
    TooManyColors { got: usize },
    #[error("point {x} lies outside [0,1)")]
    PointOutOfDomain { x: BigRational },
    #[error("refinement produced more than {limit} cells")]
    CellBudget { limit: usize },
    #[error("enumeration needs {required} cell tuples, over the budget of {budget}; use Monte-Carlo estimation instead")]
    BudgetExceeded { required: u128, budget: u64 },
}

/// One affine piece: `f(x) = slope * x + intercept` on `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffinePiece {
    pub lo: BigRational,
    pub hi: BigRational,
    pub slope: BigRational,
    pub intercept: BigRational,
}

impl AffinePiece {
    fn value(&self, x: &BigRational) -> BigRational {
        &self.slope * x + &self.intercept
    }
}

/// A piecewise-affine mapping of [0,1) with half-open color intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalMapping {
    pieces: Vec<AffinePiece>,
    /// per color (1-based outside), a sorted disjoint union of [lo, hi)
    colors: Vec<Vec<(BigRational, BigRational)>>,
}

impl IntervalMapping {
    pub fn new(
        pieces: Vec<AffinePiece>,
        colors: Vec<Vec<(BigRational, BigRational)>>,
    ) -> Result<Self, IntervalError> {
        if pieces.is_empty() {
            return Err(IntervalError::BadPartition {
                msg: "no pieces".into(),
            });
        }
        if colors.len() > 64 {
            return Err(IntervalError::TooManyColors { got: colors.len() });
        }
        let zero = BigRational::zero();
        let one = BigRational::one();
        if pieces[0].lo != zero {
            return Err(IntervalError::BadPartition {
                msg: format!("first piece starts at {}, not 0", pieces[0].lo),
            });
        }
        if pieces[pieces.len() - 1].hi != one {
            return Err(IntervalError::BadPartition {
                msg: format!(
                    "last piece ends at {}, not 1",
                    pieces[pieces.len() - 1].hi
                ),
            });
        }
        for i in 0..pieces.len() {
            if pieces[i].lo >= pieces[i].hi {
                return Err(IntervalError::BadPartition {
                    msg: format!("piece {i} is empty or reversed"),
                });
            }
            if i + 1 < pieces.len() && pieces[i].hi != pieces[i + 1].lo {
                return Err(IntervalError::BadPartition {
                    msg: format!(
                        "gap or overlap between piece {i} (ends {}) and piece {} (starts {})",
                        pieces[i].hi,
                        i + 1,
                        pieces[i + 1].lo
                    ),
                });
            }
        }
        for (index, piece) in pieces.iter().enumerate() {
            let at_lo = piece.value(&piece.lo);
            let at_hi = piece.value(&piece.hi);
            // [lo, hi) is half-open: the value at lo is attained, the value
            // at hi only approached.
            let bad = if piece.slope.is_zero() {
                at_lo < zero || at_lo >= one
            } else if piece.slope.is_positive() {
                at_lo < zero || at_hi > one
            } else {
                at_lo >= one || at_lo < zero || at_hi < zero
            };
            if bad {
                return Err(IntervalError::ImageOutOfUnit {
                    index,
                    msg: format!("values run from {at_lo} toward {at_hi}"),
                });
            }
        }
        let mut normalized_colors = Vec::with_capacity(colors.len());
        for (ci, set) in colors.into_iter().enumerate() {
            let mut set = set;
            for (lo, hi) in &set {
                if lo < &zero || hi > &one || lo >= hi {
                    return Err(IntervalError::BadColorInterval {
                        m: ci + 1,
                        lo: lo.clone(),
                        hi: hi.clone(),
                    });
                }
            }
            set.sort();
            // merge touching or overlapping intervals
            let mut merged: Vec<(BigRational, BigRational)> = Vec::new();
            for (lo, hi) in set {
                match merged.last_mut() {
                    Some((_, prev_hi)) if *prev_hi >= lo => {
                        if hi > *prev_hi {
                            *prev_hi = hi;
                        }
                    }
                    _ => merged.push((lo, hi)),
                }
            }
            normalized_colors.push(merged);
        }
        Ok(IntervalMapping {
            pieces,
            colors: normalized_colors,
        })
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn color_count(&self) -> usize {
        self.colors.len()
    }

    pub fn color_intervals(&self, m: usize) -> &[(BigRational, BigRational)] {
        &self.colors[m - 1]
    }

    /// Index of the piece containing `x` (requires `0 <= x < 1`).
    pub fn piece_index_at(&self, x: &BigRational) -> usize {
        self.pieces.partition_point(|p| p.hi <= *x)
    }

    fn piece_at(&self, x: &BigRational) -> &AffinePiece {
        &self.pieces[self.piece_index_at(x)]
    }

    fn in_domain(x: &BigRational) -> bool {
        !x.is_negative() && *x < BigRational::one()
    }

    /// One application of f (requires `x` in [0,1)).
    pub fn apply(&self, x: &BigRational) -> BigRational {
        self.piece_at(x).value(x)
    }

    /// Exact f^a(x).
    pub fn eval_point(&self, x: &BigRational, a: usize) -> Result<BigRational, IntervalError> {
        if !Self::in_domain(x) {
            return Err(IntervalError::PointOutOfDomain { x: x.clone() });
        }
        let mut cur = x.clone();
        for _ in 0..a {
            cur = self.apply(&cur);
        }
        Ok(cur)
    }

    pub fn has_color(&self, m: usize, x: &BigRational) -> bool {
        if m == 0 || m > self.colors.len() {
            return false;
        }
        self.colors[m - 1]
            .iter()
            .any(|(lo, hi)| lo <= x && x < hi)
    }

    /// Color bitmask at a point (bit m-1 set iff x carries color m).
    pub fn color_mask_at(&self, x: &BigRational) -> u64 {
        let mut mask = 0u64;
        for m in 1..=self.colors.len() {
            if self.has_color(m, x) {
                mask |= 1 << (m - 1);
            }
        }
        mask
    }

    /// Uniform dyadic sample in [0,1) at the given precision.
    pub fn sample_with_precision(&self, rng: &mut dyn RngCore, bits: u32) -> BigRational {
        dyadic(rng, bits)
    }

    /// Uniform dyadic sample at the default precision.
    pub fn sample(&self, rng: &mut dyn RngCore) -> BigRational {
        self.sample_with_precision(rng, DYADIC_BITS)
    }

    // ---- canonical mappings used across tests and docs ----

    /// Rotation x -> x + theta (mod 1); every point is periodic when theta
    /// is rational.
    pub fn rotation(theta: BigRational) -> Self {
        assert!(
            theta.is_positive() && theta < BigRational::one(),
            "rotation angle must be in (0,1)"
        );
        let one = BigRational::one();
        let split = &one - &theta;
        IntervalMapping::new(
            vec![
                AffinePiece {
                    lo: BigRational::zero(),
                    hi: split.clone(),
                    slope: one.clone(),
                    intercept: theta.clone(),
                },
                AffinePiece {
                    lo: split,
                    hi: one.clone(),
                    slope: one,
                    intercept: theta - BigRational::one(),
                },
            ],
            Vec::new(),
        )
        .expect("rotation is well-formed")
    }

    /// Contraction x -> factor * x (factor in (0,1)).
    pub fn scaling(factor: BigRational) -> Self {
        assert!(
            factor.is_positive() && factor < BigRational::one(),
            "scaling factor must be in (0,1)"
        );
        IntervalMapping::new(
            vec![AffinePiece {
                lo: BigRational::zero(),
                hi: BigRational::one(),
                slope: factor,
                intercept: BigRational::zero(),
            }],
            Vec::new(),
        )
        .expect("scaling is well-formed")
    }

    /// Constant map x -> value.
    pub fn constant(value: BigRational) -> Self {
        assert!(
            !value.is_negative() && value < BigRational::one(),
            "constant value must be in [0,1)"
        );
        IntervalMapping::new(
            vec![AffinePiece {
                lo: BigRational::zero(),
                hi: BigRational::one(),
                slope: BigRational::zero(),
                intercept: value,
            }],
            Vec::new(),
        )
        .expect("constant is well-formed")
    }

    /// The slope-2 / slope-1/2 pair: 2x on [0,1/2), x/2 on [1/2,1).
    /// f^2 = id on [1/4,1), so the map has a positive-measure cyclic part on
    /// pieces whose slopes do not preserve length.
    pub fn stretch_fold() -> Self {
        IntervalMapping::new(
            vec![
                AffinePiece {
                    lo: rat_int(0),
                    hi: BigRational::new(1.into(), 2.into()),
                    slope: rat_int(2),
                    intercept: rat_int(0),
                },
                AffinePiece {
                    lo: BigRational::new(1.into(), 2.into()),
                    hi: rat_int(1),
                    slope: BigRational::new(1.into(), 2.into()),
                    intercept: rat_int(0),
                },
            ],
            Vec::new(),
        )
        .expect("stretch/fold is well-formed")
    }

    pub fn serialize(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        if self.colors.is_empty() {
            let _ = writeln!(out, "{}", self.pieces.len());
        } else {
            let _ = writeln!(out, "{} {}", self.pieces.len(), self.colors.len());
        }
        for p in &self.pieces {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                format_ratio_explicit(&p.lo),
                format_ratio_explicit(&p.hi),
                format_ratio_explicit(&p.slope),
                format_ratio_explicit(&p.intercept)
            );
        }
        for (i, set) in self.colors.iter().enumerate() {
            let body = set
                .iter()
                .map(|(lo, hi)| {
                    format!(
                        "{} {}",
                        format_ratio_explicit(lo),
                        format_ratio_explicit(hi)
                    )
                })
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(out, "M{}: {}", i + 1, body);
        }
        out
    }
}

/// Parse the interval-mapping file format: a header `piece_count [color_count]`,
/// one line per piece with four rationals `lo hi slope intercept`, then one
/// line per color `M<m>: lo hi, lo hi, ..`. `#` comments and blank lines are
/// skipped.
pub fn parse_interval(text: &str) -> Result<IntervalMapping, IntervalError> {
    let syntax = |line: usize, msg: String| IntervalError::Syntax { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_no, header) = lines
        .next()
        .ok_or_else(|| syntax(1, "missing header line".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (piece_count, color_count) = match fields.as_slice() {
        [p] => (parse_count(p, header_no, "piece count")?, 0),
        [p, c] => (
            parse_count(p, header_no, "piece count")?,
            parse_count(c, header_no, "color count")?,
        ),
        _ => {
            return Err(syntax(
                header_no,
                format!("expected `piece_count` or `piece_count color_count`, got `{header}`"),
            ))
        }
    };

    let mut pieces = Vec::with_capacity(piece_count);
    for _ in 0..piece_count {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| syntax(header_no, format!("expected {piece_count} piece lines")))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(syntax(
                line_no,
                format!("expected `lo hi slope intercept`, got `{line}`"),
            ));
        }
        let mut vals = Vec::with_capacity(4);
        for part in parts {
            vals.push(parse_ratio(part).map_err(|e| syntax(line_no, e))?);
        }
        let intercept = vals.pop().unwrap();
        let slope = vals.pop().unwrap();
        let hi = vals.pop().unwrap();
        let lo = vals.pop().unwrap();
        pieces.push(AffinePiece {
            lo,
            hi,
            slope,
            intercept,
        });
    }

    let mut colors: Vec<Vec<(BigRational, BigRational)>> = vec![Vec::new(); color_count];
    let mut seen = vec![false; color_count];
    for _ in 0..color_count {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| syntax(header_no, format!("expected {color_count} color lines")))?;
        let (name, body) = line
            .split_once(':')
            .ok_or_else(|| syntax(line_no, format!("expected `M<m>: ..`, got `{line}`")))?;
        let name = name.trim();
        let m: usize = name
            .strip_prefix('M')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| syntax(line_no, format!("bad color name `{name}`")))?;
        if m == 0 || m > color_count {
            return Err(syntax(
                line_no,
                format!("color {name} out of range 1..={color_count}"),
            ));
        }
        if seen[m - 1] {
            return Err(syntax(line_no, format!("duplicate color line for {name}")));
        }
        seen[m - 1] = true;
        let body = body.trim();
        if !body.is_empty() {
            for chunk in body.split(',') {
                let ends: Vec<&str> = chunk.split_whitespace().collect();
                if ends.len() != 2 {
                    return Err(syntax(
                        line_no,
                        format!("expected `lo hi` in color interval, got `{chunk}`"),
                    ));
                }
                let lo = parse_ratio(ends[0]).map_err(|e| syntax(line_no, e))?;
                let hi = parse_ratio(ends[1]).map_err(|e| syntax(line_no, e))?;
                colors[m - 1].push((lo, hi));
            }
        }
    }

    if let Some((line_no, line)) = lines.next() {
        return Err(syntax(line_no, format!("unexpected trailing line `{line}`")));
    }

    IntervalMapping::new(pieces, colors)
}

fn parse_count(s: &str, line: usize, what: &str) -> Result<usize, IntervalError> {
    s.parse::<usize>().map_err(|_| IntervalError::Syntax {
        line,
        msg: format!("bad {what} `{s}`"),
    })
}

/// A refinement cell `[lo, hi)`: `affine[a]` is the pair `(alpha, beta)` with
/// `f^a(x) = alpha*x + beta` on the cell's interior, `colors[a]` the constant
/// color mask of `f^a` there. The data also holds at `lo` except for the
/// finitely many audited points listed in `CellDecomposition::exceptional`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub lo: BigRational,
    pub hi: BigRational,
    pub affine: Vec<(BigRational, BigRational)>,
    pub colors: Vec<u64>,
}

impl Cell {
    pub fn length(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

/// An isolated point where the enclosing cell's affine data does not apply
/// (a half-open boundary mismatch); its iterate values and colors are stored
/// pointwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointCell {
    pub x: BigRational,
    pub values: Vec<BigRational>,
    pub colors: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct CellDecomposition {
    pub depth: usize,
    pub cells: Vec<Cell>,
    pub exceptional: Vec<PointCell>,
}

impl CellDecomposition {
    pub fn cell_index_at(&self, x: &BigRational) -> Option<usize> {
        if x.is_negative() || *x >= BigRational::one() {
            return None;
        }
        Some(self.cells.partition_point(|c| c.hi <= *x))
    }

    /// Exact f^a(x) via the decomposition (point cells override cell data).
    pub fn eval(&self, x: &BigRational, a: usize) -> Option<BigRational> {
        if a > self.depth {
            return None;
        }
        if let Some(pc) = self.exceptional.iter().find(|pc| pc.x == *x) {
            return Some(pc.values[a].clone());
        }
        let idx = self.cell_index_at(x)?;
        let (alpha, beta) = &self.cells[idx].affine[a];
        Some(alpha * x + beta)
    }
}

/// Split each cell at the given interior points (keeping per-cell data).
fn split_cells(
    cells: Vec<Cell>,
    breaks_for: impl Fn(&Cell) -> Vec<BigRational>,
    limit: usize,
) -> Result<Vec<Cell>, IntervalError> {
    let mut out = Vec::with_capacity(cells.len());
    for cell in cells {
        let mut pts: Vec<BigRational> = breaks_for(&cell)
            .into_iter()
            .filter(|x| cell.lo < *x && *x < cell.hi)
            .collect();
        pts.sort();
        pts.dedup();
        let mut left = cell.lo.clone();
        for p in pts {
            out.push(Cell {
                lo: left,
                hi: p.clone(),
                affine: cell.affine.clone(),
                colors: cell.colors.clone(),
            });
            left = p;
        }
        out.push(Cell {
            lo: left,
            hi: cell.hi,
            affine: cell.affine,
            colors: cell.colors,
        });
        if out.len() > limit {
            return Err(IntervalError::CellBudget { limit });
        }
    }
    Ok(out)
}

fn pullbacks(
    affine: &(BigRational, BigRational),
    bounds: &[BigRational],
) -> Vec<BigRational> {
    let (alpha, beta) = affine;
    if alpha.is_zero() {
        return Vec::new();
    }
    bounds.iter().map(|t| (t - beta) / alpha).collect()
}

/// Refine `[0,1)` so that every iterate `f^0..f^q` is affine and every
/// iterate-color indicator is constant on each cell. Boundary points whose
/// behavior deviates from their cell (possible where a decreasing or exactly
/// aligned piece meets a half-open boundary) are audited into point cells.
pub fn refine(l: &IntervalMapping, q: usize) -> Result<CellDecomposition, IntervalError> {
    refine_budgeted(l, q, DEFAULT_CELL_LIMIT)
}

pub fn refine_budgeted(
    l: &IntervalMapping,
    q: usize,
    cell_limit: usize,
) -> Result<CellDecomposition, IntervalError> {
    let one = BigRational::one();
    let two = rat_int(2);

    let piece_bounds: Vec<BigRational> = l
        .pieces
        .iter()
        .map(|p| p.lo.clone())
        .chain(std::iter::once(one.clone()))
        .collect();
    let color_bounds: Vec<BigRational> = l
        .colors
        .iter()
        .flat_map(|set| set.iter().flat_map(|(a, b)| [a.clone(), b.clone()]))
        .collect();

    // depth 0: piece boundaries and color boundaries, identity iterate
    let mut breaks: Vec<BigRational> = piece_bounds
        .iter()
        .chain(color_bounds.iter())
        .filter(|x| !x.is_negative() && **x <= one)
        .cloned()
        .collect();
    breaks.push(BigRational::zero());
    breaks.sort();
    breaks.dedup();
    let mut cells: Vec<Cell> = breaks
        .windows(2)
        .map(|w| Cell {
            lo: w[0].clone(),
            hi: w[1].clone(),
            affine: vec![(one.clone(), BigRational::zero())],
            colors: Vec::new(),
        })
        .collect();
    if cells.len() > cell_limit {
        return Err(IntervalError::CellBudget { limit: cell_limit });
    }
    for cell in &mut cells {
        let mid = (&cell.lo + &cell.hi) / &two;
        cell.colors.push(l.color_mask_at(&mid));
    }

    for a in 1..=q {
        // new breakpoints wherever f^{a-1} crosses a piece boundary
        cells = split_cells(
            cells,
            |cell| pullbacks(&cell.affine[a - 1], &piece_bounds),
            cell_limit,
        )?;
        // compose with the piece active on the cell's interior
        for cell in &mut cells {
            let (alpha, beta) = cell.affine[a - 1].clone();
            let mid = (&cell.lo + &cell.hi) / &two;
            let vm = &alpha * &mid + &beta;
            let piece = l.piece_at(&vm);
            cell.affine.push((
                &piece.slope * &alpha,
                &piece.slope * &beta + &piece.intercept,
            ));
        }
        // and wherever f^a crosses a color boundary
        if !color_bounds.is_empty() {
            cells = split_cells(
                cells,
                |cell| pullbacks(&cell.affine[a], &color_bounds),
                cell_limit,
            )?;
        }
        for cell in &mut cells {
            let (alpha, beta) = &cell.affine[a];
            let mid = (&cell.lo + &cell.hi) / &two;
            let vm = alpha * &mid + beta;
            cell.colors.push(l.color_mask_at(&vm));
        }
    }

    // endpoint audit: cell data describes interiors exactly; the attained
    // left endpoint can disagree when an iterate lands exactly on a piece or
    // color boundary. Such points become explicit point cells.
    let mut exceptional = Vec::new();
    for cell in &cells {
        let mut values = Vec::with_capacity(q + 1);
        let mut v = cell.lo.clone();
        values.push(v.clone());
        for _ in 0..q {
            v = l.apply(&v);
            values.push(v.clone());
        }
        let mismatch = (0..=q).any(|a| {
            let (alpha, beta) = &cell.affine[a];
            alpha * &cell.lo + beta != values[a]
                || cell.colors[a] != l.color_mask_at(&values[a])
        });
        if mismatch {
            let colors = values.iter().map(|x| l.color_mask_at(x)).collect();
            exceptional.push(PointCell {
                x: cell.lo.clone(),
                values,
                colors,
            });
        }
    }

    Ok(CellDecomposition {
        depth: q,
        cells,
        exceptional,
    })
}

fn atom_eq_on_cells(cd: &CellDecomposition, combo: &[usize], s: &FTerm, t: &FTerm) -> bool {
    if s.var == t.var {
        let cell = &cd.cells[combo[s.var - 1]];
        cell.affine[s.iterate] == cell.affine[t.iterate]
    } else {
        let (a1, b1) = &cd.cells[combo[s.var - 1]].affine[s.iterate];
        let (a2, b2) = &cd.cells[combo[t.var - 1]].affine[t.iterate];
        a1.is_zero() && a2.is_zero() && b1 == b2
    }
}

fn holds_on_cells(phi: &QfFormula, cd: &CellDecomposition, combo: &[usize]) -> bool {
    match phi {
        QfFormula::True => true,
        QfFormula::False => false,
        QfFormula::Eq(s, t) => atom_eq_on_cells(cd, combo, s, t),
        QfFormula::Neq(s, t) => !atom_eq_on_cells(cd, combo, s, t),
        QfFormula::Color(m, t) => {
            *m >= 1 && *m <= 64 && cd.cells[combo[t.var - 1]].colors[t.iterate] >> (m - 1) & 1 == 1
        }
        QfFormula::Not(a) => !holds_on_cells(a, cd, combo),
        QfFormula::And(a, b) => holds_on_cells(a, cd, combo) && holds_on_cells(b, cd, combo),
        QfFormula::Or(a, b) => holds_on_cells(a, cd, combo) || holds_on_cells(b, cd, combo),
    }
}

/// Exact almost-everywhere density of `phi` over the interval mapping.
pub fn density_exact_interval(
    phi: &QfFormula,
    l: &IntervalMapping,
) -> Result<BigRational, IntervalError> {
    density_interval_impl(l, phi, DEFAULT_CELL_TUPLE_BUDGET, ExecMode::Auto)
}

/// Sequential twin of [`density_exact_interval`] with identical output.
pub fn density_exact_interval_seq(
    phi: &QfFormula,
    l: &IntervalMapping,
) -> Result<BigRational, IntervalError> {
    density_interval_impl(l, phi, DEFAULT_CELL_TUPLE_BUDGET, ExecMode::Sequential)
}

pub fn density_exact_interval_budgeted(
    phi: &QfFormula,
    l: &IntervalMapping,
    budget: u64,
) -> Result<BigRational, IntervalError> {
    density_interval_impl(l, phi, budget, ExecMode::Auto)
}

fn density_interval_impl(
    l: &IntervalMapping,
    phi: &QfFormula,
    budget: u64,
    mode: ExecMode,
) -> Result<BigRational, IntervalError> {
    let cd = refine(l, phi.max_iterate())?;
    let p = phi.arity();
    if p == 0 {
        let combo: Vec<usize> = Vec::new();
        return Ok(if holds_on_cells(phi, &cd, &combo) {
            BigRational::one()
        } else {
            BigRational::zero()
        });
    }
    let m = cd.cells.len();
    let required = (m as u128).checked_pow(p as u32).unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(IntervalError::BudgetExceeded { required, budget });
    }
    let lengths: Vec<BigRational> = cd.cells.iter().map(Cell::length).collect();

    fn sum_rec(
        phi: &QfFormula,
        cd: &CellDecomposition,
        lengths: &[BigRational],
        combo: &mut Vec<usize>,
        depth: usize,
        p: usize,
        partial: BigRational,
    ) -> BigRational {
        if depth == p {
            return if holds_on_cells(phi, cd, combo) {
                partial
            } else {
                BigRational::zero()
            };
        }
        let mut total = BigRational::zero();
        for c in 0..cd.cells.len() {
            combo[depth] = c;
            total += sum_rec(
                phi,
                cd,
                lengths,
                combo,
                depth + 1,
                p,
                partial.clone() * &lengths[c],
            );
        }
        total
    }

    let total = exec::sum_over(mode, m, |c0| {
        let mut combo = vec![0usize; p];
        combo[0] = c0;
        sum_rec(phi, &cd, &lengths, &mut combo, 1, p, lengths[c0].clone())
    });
    Ok(total)
}

/// The cyclic part up to `kmax`: positive-measure interval unions per cycle
/// length, plus the finitely many isolated cyclic points (reported separately,
/// never folded into the unions).
#[derive(Clone, Debug)]
pub struct CyclicPart {
    pub kmax: usize,
    /// cycle length -> disjoint sorted union of [lo, hi)
    pub components: BTreeMap<usize, Vec<(BigRational, BigRational)>>,
    /// isolated cyclic points (x, exact cycle length)
    pub exceptional: Vec<(BigRational, usize)>,
}

impl CyclicPart {
    /// Total measure of the positive-measure cyclic part.
    pub fn measure(&self) -> BigRational {
        self.components
            .values()
            .flat_map(|ivs| ivs.iter().map(|(lo, hi)| hi - lo))
            .sum()
    }
}

fn pointwise_cycle_len(l: &IntervalMapping, x: &BigRational, kmax: usize) -> Option<usize> {
    let mut v = x.clone();
    for k in 1..=kmax {
        v = l.apply(&v);
        if v == *x {
            return Some(k);
        }
    }
    None
}

pub fn cyclic_part(l: &IntervalMapping, kmax: usize) -> Result<CyclicPart, IntervalError> {
    let cd = refine(l, kmax)?;
    let one = BigRational::one();
    let mut components: BTreeMap<usize, Vec<(BigRational, BigRational)>> = BTreeMap::new();
    let mut isolated: BTreeMap<BigRational, usize> = BTreeMap::new();
    let mut note_isolated = |x: BigRational, len: usize| {
        isolated
            .entry(x)
            .and_modify(|cur| *cur = (*cur).min(len))
            .or_insert(len);
    };

    for cell in &cd.cells {
        let period = (1..=kmax).find(|&k| {
            let (alpha, beta) = &cell.affine[k];
            alpha.is_one() && beta.is_zero()
        });
        let scan_to = period.unwrap_or(kmax + 1);
        // isolated solutions of f^i(x) = x for i below the cell's period
        for i in 1..scan_to {
            let (alpha, beta) = &cell.affine[i];
            if !alpha.is_one() {
                let root = beta / (&one - alpha);
                if cell.lo <= root && root < cell.hi {
                    if let Some(len) = pointwise_cycle_len(l, &root, kmax) {
                        note_isolated(root, len);
                    }
                }
            }
        }
        if let Some(k) = period {
            components
                .entry(k)
                .or_default()
                .push((cell.lo.clone(), cell.hi.clone()));
        }
    }

    // audited boundary points bypass their cell's affine data entirely
    for pc in &cd.exceptional {
        if let Some(len) = pointwise_cycle_len(l, &pc.x, kmax) {
            note_isolated(pc.x.clone(), len);
        }
    }

    for ivs in components.values_mut() {
        ivs.sort();
        let mut merged: Vec<(BigRational, BigRational)> = Vec::new();
        for (lo, hi) in ivs.drain(..) {
            match merged.last_mut() {
                Some((_, prev_hi)) if *prev_hi == lo => *prev_hi = hi,
                _ => merged.push((lo, hi)),
            }
        }
        *ivs = merged;
    }

    Ok(CyclicPart {
        kmax,
        components,
        exceptional: isolated.into_iter().collect(),
    })
}

/// A piece with |slope| != 1 meeting the cyclic part in positive measure.
#[derive(Clone, Debug)]
pub struct CycleViolation {
    pub piece_index: usize,
    pub slope: BigRational,
    pub cycle_length: usize,
    pub overlap: (BigRational, BigRational),
}

#[derive(Clone, Debug)]
pub struct PreservationReport {
    pub holds: bool,
    pub kmax: usize,
    pub violations: Vec<CycleViolation>,
}

/// Measure-preservation on the cyclic part: every piece meeting `Z(L)` (up to
/// `kmax`) in positive measure must have |slope| = 1. For piecewise-affine
/// maps this is equivalent to `measure(f(X)) = measure(X)` for measurable
/// `X` inside the cyclic part, since f is injective on each Z_k up to measure
/// zero and scales lengths by |slope|.
pub fn check_cycle_preservation(
    l: &IntervalMapping,
    kmax: usize,
) -> Result<PreservationReport, IntervalError> {
    let parts = cyclic_part(l, kmax)?;
    let mut violations: Vec<CycleViolation> = Vec::new();
    for (&k, intervals) in &parts.components {
        for (lo, hi) in intervals {
            for (piece_index, piece) in l.pieces.iter().enumerate() {
                let abs_slope = piece.slope.abs();
                if abs_slope.is_one() {
                    continue;
                }
                let olo = if &piece.lo > lo { &piece.lo } else { lo };
                let ohi = if &piece.hi < hi { &piece.hi } else { hi };
                if olo < ohi && !violations.iter().any(|v| v.piece_index == piece_index) {
                    violations.push(CycleViolation {
                        piece_index,
                        slope: piece.slope.clone(),
                        cycle_length: k,
                        overlap: (olo.clone(), ohi.clone()),
                    });
                }
            }
        }
    }
    violations.sort_by_key(|v| v.piece_index);
    Ok(PreservationReport {
        holds: violations.is_empty(),
        kmax,
        violations,
    })
}
