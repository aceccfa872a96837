//! Satisfaction densities: the probability that a uniformly (or ν-) random
//! assignment to a formula's variables satisfies it on a given structure.
//!
//! Exact enumeration is guarded by a tuple budget (`n^p` against
//! [`DEFAULT_TUPLE_BUDGET`]); single-atom formulas take closed-form O(n)
//! paths (bucket counting for cross-variable atoms), which is what makes
//! exact densities practical on blown-up structures with ~10^5 elements.
//! Beyond the budget, Monte-Carlo estimation with a Hoeffding radius is
//! available for any structure that supports sampling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exec::{self, ExecMode};
use crate::formula::QfFormula;
use crate::interval::{self, IntervalError, IntervalMapping};
use crate::mapping::{ColoredMapping, WeightedMapping};
use crate::model::SampleModel;

/// Default cap on enumerated assignment tuples.
pub const DEFAULT_TUPLE_BUDGET: u64 = 100_000_000;

/// Samples per deterministic Monte-Carlo chunk; each chunk derives its RNG
/// from the base seed and its own stream id, so results are independent of
/// thread count and chunk scheduling.
const MC_CHUNK: u64 = 1024;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("enumeration needs {required} tuples, over the budget of {budget}; use Monte-Carlo estimation instead")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("convergence analysis needs at least two structures, got {got}")]
    ShortSequence { got: usize },
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// How a reported density was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityMethod {
    Enumeration,
    WeightedEnumeration,
    IntervalCells,
    MonteCarlo,
}

impl DensityMethod {
    pub fn tag(self) -> &'static str {
        match self {
            DensityMethod::Enumeration => "exact",
            DensityMethod::WeightedEnumeration => "weighted-exact",
            DensityMethod::IntervalCells => "interval-exact",
            DensityMethod::MonteCarlo => "mc",
        }
    }
}

#[derive(Clone, Debug)]
pub enum DensityValue {
    Exact(BigRational),
    Estimate {
        value: BigRational,
        radius: f64,
        samples: u64,
    },
}

/// One density evaluation, ready for reporting.
#[derive(Clone, Debug)]
pub struct DensityReport {
    pub formula: String,
    pub arity: usize,
    pub max_iterate: usize,
    pub method: DensityMethod,
    pub value: DensityValue,
}

impl DensityReport {
    pub fn exact(phi: &QfFormula, method: DensityMethod, value: BigRational) -> Self {
        DensityReport {
            formula: phi.to_string(),
            arity: phi.arity(),
            max_iterate: phi.max_iterate(),
            method,
            value: DensityValue::Exact(value),
        }
    }

    pub fn estimate(phi: &QfFormula, est: McEstimate) -> Self {
        DensityReport {
            formula: phi.to_string(),
            arity: phi.arity(),
            max_iterate: phi.max_iterate(),
            method: DensityMethod::MonteCarlo,
            value: DensityValue::Estimate {
                value: est.value,
                radius: est.radius,
                samples: est.samples,
            },
        }
    }
}

// ---------------------------------------------------------------- exact

/// Exact uniform density `|phi(F)| / n^p` with the default tuple budget.
pub fn density_exact(phi: &QfFormula, f: &ColoredMapping) -> Result<BigRational, DensityError> {
    density_exact_impl(phi, f, DEFAULT_TUPLE_BUDGET, ExecMode::Auto)
}

/// Sequential twin of [`density_exact`] with identical output.
pub fn density_exact_seq(
    phi: &QfFormula,
    f: &ColoredMapping,
) -> Result<BigRational, DensityError> {
    density_exact_impl(phi, f, DEFAULT_TUPLE_BUDGET, ExecMode::Sequential)
}

pub fn density_exact_budgeted(
    phi: &QfFormula,
    f: &ColoredMapping,
    budget: u64,
) -> Result<BigRational, DensityError> {
    density_exact_impl(phi, f, budget, ExecMode::Auto)
}

fn density_exact_impl(
    phi: &QfFormula,
    f: &ColoredMapping,
    budget: u64,
    mode: ExecMode,
) -> Result<BigRational, DensityError> {
    let n = f.n();
    if let Some(v) = closed_form_uniform(phi, f) {
        return Ok(v);
    }
    let p = phi.arity();
    if p == 0 {
        return Ok(if phi.evaluate(f, &[]) {
            BigRational::one()
        } else {
            BigRational::zero()
        });
    }
    let required = (n as u128).checked_pow(p as u32).unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(DensityError::BudgetExceeded { required, budget });
    }
    let tables = f.iterate_tables(phi.max_iterate());

    fn count_rec(
        phi: &QfFormula,
        tables: &[Vec<usize>],
        f: &ColoredMapping,
        asg: &mut Vec<usize>,
        depth: usize,
        p: usize,
        n: usize,
    ) -> u64 {
        if depth == p {
            return u64::from(eval_tables(phi, tables, f, asg));
        }
        let mut total = 0;
        for v in 0..n {
            asg[depth] = v;
            total += count_rec(phi, tables, f, asg, depth + 1, p, n);
        }
        total
    }

    let matched: u64 = exec::sum_over(mode, n, |v0| {
        let mut asg = vec![0usize; p];
        asg[0] = v0;
        count_rec(phi, &tables, f, &mut asg, 1, p, n)
    });
    Ok(BigRational::new(
        BigInt::from(matched),
        BigInt::from(n).pow(p as u32),
    ))
}

fn eval_tables(phi: &QfFormula, tables: &[Vec<usize>], f: &ColoredMapping, asg: &[usize]) -> bool {
    match phi {
        QfFormula::True => true,
        QfFormula::False => false,
        QfFormula::Eq(s, t) => {
            tables[s.iterate][asg[s.var - 1]] == tables[t.iterate][asg[t.var - 1]]
        }
        QfFormula::Neq(s, t) => {
            tables[s.iterate][asg[s.var - 1]] != tables[t.iterate][asg[t.var - 1]]
        }
        QfFormula::Color(m, t) => f.has_color(*m, tables[t.iterate][asg[t.var - 1]]),
        QfFormula::Not(a) => !eval_tables(a, tables, f, asg),
        QfFormula::And(a, b) => eval_tables(a, tables, f, asg) && eval_tables(b, tables, f, asg),
        QfFormula::Or(a, b) => eval_tables(a, tables, f, asg) || eval_tables(b, tables, f, asg),
    }
}

/// Closed forms for single-atom formulas (and their negations): all are O(n)
/// regardless of arity, because dummy variables cancel between numerator and
/// denominator. Cross-variable equalities use bucket counting over images.
fn closed_form_uniform(phi: &QfFormula, f: &ColoredMapping) -> Option<BigRational> {
    let n = f.n();
    let nn = BigRational::from_integer(BigInt::from(n));
    match phi {
        QfFormula::True => Some(BigRational::one()),
        QfFormula::False => Some(BigRational::zero()),
        QfFormula::Not(inner) => {
            closed_form_uniform(inner, f).map(|v| BigRational::one() - v)
        }
        QfFormula::Neq(s, t) => {
            closed_form_uniform(&QfFormula::Eq(*s, *t), f).map(|v| BigRational::one() - v)
        }
        QfFormula::Color(m, t) => {
            let table = last_iterate_table(f, t.iterate);
            let hits = (0..n).filter(|&v| f.has_color(*m, table[v])).count();
            Some(BigRational::from_integer(BigInt::from(hits)) / nn)
        }
        QfFormula::Eq(s, t) => {
            if s.var == t.var {
                let ta = last_iterate_table(f, s.iterate);
                let tb = last_iterate_table(f, t.iterate);
                let hits = (0..n).filter(|&v| ta[v] == tb[v]).count();
                Some(BigRational::from_integer(BigInt::from(hits)) / nn)
            } else {
                // bucket by image value: matches = sum_y |f^-a(y)| * |f^-b(y)|
                let ta = last_iterate_table(f, s.iterate);
                let tb = last_iterate_table(f, t.iterate);
                let mut ca = vec![0u64; n];
                let mut cb = vec![0u64; n];
                for v in 0..n {
                    ca[ta[v]] += 1;
                    cb[tb[v]] += 1;
                }
                let matches: u128 = (0..n).map(|y| ca[y] as u128 * cb[y] as u128).sum();
                Some(BigRational::new(
                    BigInt::from(matches),
                    BigInt::from(n) * BigInt::from(n),
                ))
            }
        }
        _ => None,
    }
}

fn last_iterate_table(f: &ColoredMapping, a: usize) -> Vec<usize> {
    f.iterate_tables(a).pop().expect("tables are nonempty")
}

// ---------------------------------------------------------------- weighted

/// Exact ν-weighted density: the ν^⊗p measure of the satisfaction set.
pub fn density_weighted(
    phi: &QfFormula,
    f: &WeightedMapping,
) -> Result<BigRational, DensityError> {
    density_weighted_impl(phi, f, DEFAULT_TUPLE_BUDGET, ExecMode::Auto)
}

/// Sequential twin of [`density_weighted`] with identical output.
pub fn density_weighted_seq(
    phi: &QfFormula,
    f: &WeightedMapping,
) -> Result<BigRational, DensityError> {
    density_weighted_impl(phi, f, DEFAULT_TUPLE_BUDGET, ExecMode::Sequential)
}

pub fn density_weighted_budgeted(
    phi: &QfFormula,
    f: &WeightedMapping,
    budget: u64,
) -> Result<BigRational, DensityError> {
    density_weighted_impl(phi, f, budget, ExecMode::Auto)
}

fn density_weighted_impl(
    phi: &QfFormula,
    f: &WeightedMapping,
    budget: u64,
    mode: ExecMode,
) -> Result<BigRational, DensityError> {
    let n = f.n();
    if let Some(v) = closed_form_weighted(phi, f) {
        return Ok(v);
    }
    let p = phi.arity();
    if p == 0 {
        return Ok(if phi.evaluate(f.base(), &[]) {
            BigRational::one()
        } else {
            BigRational::zero()
        });
    }
    let required = (n as u128).checked_pow(p as u32).unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(DensityError::BudgetExceeded { required, budget });
    }
    let tables = f.base().iterate_tables(phi.max_iterate());

    fn sum_rec(
        phi: &QfFormula,
        tables: &[Vec<usize>],
        f: &WeightedMapping,
        asg: &mut Vec<usize>,
        depth: usize,
        p: usize,
        partial: BigRational,
    ) -> BigRational {
        if depth == p {
            return if eval_tables(phi, tables, f.base(), asg) {
                partial
            } else {
                BigRational::zero()
            };
        }
        let mut total = BigRational::zero();
        for v in 0..f.n() {
            asg[depth] = v;
            total += sum_rec(
                phi,
                tables,
                f,
                asg,
                depth + 1,
                p,
                partial.clone() * f.weight(v),
            );
        }
        total
    }

    let total = exec::sum_over(mode, n, |v0| {
        let mut asg = vec![0usize; p];
        asg[0] = v0;
        sum_rec(phi, &tables, f, &mut asg, 1, p, f.weight(v0).clone())
    });
    Ok(total)
}

fn closed_form_weighted(phi: &QfFormula, f: &WeightedMapping) -> Option<BigRational> {
    let n = f.n();
    match phi {
        QfFormula::True => Some(BigRational::one()),
        QfFormula::False => Some(BigRational::zero()),
        QfFormula::Not(inner) => {
            closed_form_weighted(inner, f).map(|v| BigRational::one() - v)
        }
        QfFormula::Neq(s, t) => {
            closed_form_weighted(&QfFormula::Eq(*s, *t), f).map(|v| BigRational::one() - v)
        }
        QfFormula::Color(m, t) => {
            let table = last_iterate_table(f.base(), t.iterate);
            Some(
                (0..n)
                    .filter(|&v| f.base().has_color(*m, table[v]))
                    .map(|v| f.weight(v).clone())
                    .sum(),
            )
        }
        QfFormula::Eq(s, t) => {
            let ta = last_iterate_table(f.base(), s.iterate);
            let tb = last_iterate_table(f.base(), t.iterate);
            if s.var == t.var {
                Some(
                    (0..n)
                        .filter(|&v| ta[v] == tb[v])
                        .map(|v| f.weight(v).clone())
                        .sum(),
                )
            } else {
                let mut ma = vec![BigRational::zero(); n];
                let mut mb = vec![BigRational::zero(); n];
                for v in 0..n {
                    ma[ta[v]] += f.weight(v);
                    mb[tb[v]] += f.weight(v);
                }
                Some((0..n).map(|y| ma[y].clone() * &mb[y]).sum())
            }
        }
        _ => None,
    }
}

// ---------------------------------------------------------------- Monte Carlo

/// A Monte-Carlo density estimate with its two-sided Hoeffding radius:
/// `P(|estimate - truth| > radius) <= delta` with
/// `radius = sqrt(ln(2/delta) / (2 * samples))`.
#[derive(Clone, Debug)]
pub struct McEstimate {
    pub value: BigRational,
    pub radius: f64,
    pub samples: u64,
}

pub fn hoeffding_radius(samples: u64, delta: f64) -> f64 {
    assert!(delta > 0.0 && delta < 1.0, "delta must be in (0,1)");
    assert!(samples > 0, "need at least one sample");
    ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt()
}

/// Estimate the density of `phi` by sampling assignments from the model.
/// Deterministic given the seed and independent of thread count: samples are
/// partitioned into fixed chunks, each driven by its own RNG stream.
pub fn density_mc<M>(
    phi: &QfFormula,
    model: &M,
    samples: u64,
    delta: f64,
    seed: u64,
) -> McEstimate
where
    M: SampleModel + Sync,
{
    density_mc_impl(phi, model, samples, delta, seed, ExecMode::Auto)
}

/// Sequential twin of [`density_mc`] with identical output.
pub fn density_mc_seq<M>(
    phi: &QfFormula,
    model: &M,
    samples: u64,
    delta: f64,
    seed: u64,
) -> McEstimate
where
    M: SampleModel + Sync,
{
    density_mc_impl(phi, model, samples, delta, seed, ExecMode::Sequential)
}

fn density_mc_impl<M>(
    phi: &QfFormula,
    model: &M,
    samples: u64,
    delta: f64,
    seed: u64,
    mode: ExecMode,
) -> McEstimate
where
    M: SampleModel + Sync,
{
    let radius = hoeffding_radius(samples, delta);
    let p = phi.arity();
    let chunks = samples.div_ceil(MC_CHUNK) as usize;
    let hits: u64 = exec::sum_over(mode, chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64 + 1);
        let lo = chunk as u64 * MC_CHUNK;
        let hi = (lo + MC_CHUNK).min(samples);
        let mut local = 0u64;
        let mut points: Vec<M::Point> = Vec::with_capacity(p);
        for _ in lo..hi {
            points.clear();
            for _ in 0..p {
                points.push(model.draw(&mut rng));
            }
            if phi.eval_model(model, &points) {
                local += 1;
            }
        }
        local
    });
    McEstimate {
        value: BigRational::new(BigInt::from(hits), BigInt::from(samples)),
        radius,
        samples,
    }
}

// ---------------------------------------------------------------- structures

/// Any structure a density can be taken over; what the CLI dispatches on.
#[derive(Clone, Debug)]
pub enum Structure {
    Finite(ColoredMapping),
    Weighted(WeightedMapping),
    Interval(IntervalMapping),
}

impl Structure {
    pub fn density(&self, phi: &QfFormula) -> Result<BigRational, DensityError> {
        self.density_budgeted(phi, DEFAULT_TUPLE_BUDGET)
    }

    pub fn density_budgeted(
        &self,
        phi: &QfFormula,
        budget: u64,
    ) -> Result<BigRational, DensityError> {
        match self {
            Structure::Finite(f) => density_exact_budgeted(phi, f, budget),
            Structure::Weighted(w) => density_weighted_budgeted(phi, w, budget),
            Structure::Interval(l) => {
                Ok(interval::density_exact_interval_budgeted(phi, l, budget)?)
            }
        }
    }

    pub fn method(&self) -> DensityMethod {
        match self {
            Structure::Finite(_) => DensityMethod::Enumeration,
            Structure::Weighted(_) => DensityMethod::WeightedEnumeration,
            Structure::Interval(_) => DensityMethod::IntervalCells,
        }
    }

    /// Short label for report columns.
    pub fn label(&self) -> String {
        match self {
            Structure::Finite(f) => format!("n={}", f.n()),
            Structure::Weighted(w) => format!("n={}w", w.n()),
            Structure::Interval(l) => format!("interval({} pieces)", l.pieces().len()),
        }
    }
}

// ---------------------------------------------------------------- convergence

/// Densities of a formula battery along a structure sequence, with successive
/// deviations and a flag for formulas whose tail deviation stays above the
/// threshold.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub formulas: Vec<String>,
    /// densities[i][j]: i-th formula on the j-th structure
    pub densities: Vec<Vec<BigRational>>,
    /// absolute successive differences, one shorter than the sequence
    pub deltas: Vec<Vec<BigRational>>,
    /// max delta over the tail window, per formula
    pub tail_deviation: Vec<BigRational>,
    pub flagged: Vec<bool>,
    pub window: usize,
    pub threshold: BigRational,
}

pub fn converge(
    formulas: &[QfFormula],
    structures: &[Structure],
    window: usize,
    threshold: &BigRational,
) -> Result<ConvergenceReport, DensityError> {
    converge_budgeted(formulas, structures, window, threshold, DEFAULT_TUPLE_BUDGET)
}

pub fn converge_budgeted(
    formulas: &[QfFormula],
    structures: &[Structure],
    window: usize,
    threshold: &BigRational,
    budget: u64,
) -> Result<ConvergenceReport, DensityError> {
    if structures.len() < 2 {
        return Err(DensityError::ShortSequence {
            got: structures.len(),
        });
    }
    let mut densities = Vec::with_capacity(formulas.len());
    let mut deltas = Vec::with_capacity(formulas.len());
    let mut tail_deviation = Vec::with_capacity(formulas.len());
    let mut flagged = Vec::with_capacity(formulas.len());
    let window = window.max(1);
    for phi in formulas {
        let row: Vec<BigRational> = structures
            .iter()
            .map(|s| s.density_budgeted(phi, budget))
            .collect::<Result<_, _>>()?;
        let drow: Vec<BigRational> = row
            .windows(2)
            .map(|w| {
                let d = &w[1] - &w[0];
                if d < BigRational::zero() {
                    -d
                } else {
                    d
                }
            })
            .collect();
        let w = window.min(drow.len());
        let tail = drow[drow.len() - w..]
            .iter()
            .cloned()
            .max()
            .unwrap_or_else(BigRational::zero);
        flagged.push(tail > *threshold);
        tail_deviation.push(tail);
        densities.push(row);
        deltas.push(drow);
    }
    Ok(ConvergenceReport {
        formulas: formulas.iter().map(|f| f.to_string()).collect(),
        densities,
        deltas,
        tail_deviation,
        flagged,
        window,
        threshold: threshold.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::ratio::{rat, rat_int};
    use num_traits::ToPrimitive;
    use rand::Rng;

    fn p(s: &str) -> QfFormula {
        parse_formula(s).unwrap()
    }

    fn e1() -> ColoredMapping {
        ColoredMapping::new(vec![1, 2, 1]).unwrap()
    }

    /// Same atom, but shaped so the closed-form shortcut does not apply.
    fn defeat_closed_form(phi: &QfFormula) -> QfFormula {
        QfFormula::And(Box::new(phi.clone()), Box::new(QfFormula::True))
    }

    #[test]
    fn collision_density_on_the_rho_mapping() {
        let phi = p("f(x1) = f(x2)");
        let d = density_exact(&phi, &e1()).unwrap();
        assert_eq!(d, rat(5, 9));
        // the generic enumerator agrees with the bucket shortcut
        let generic = density_exact(&defeat_closed_form(&phi), &e1()).unwrap();
        assert_eq!(generic, rat(5, 9));
    }

    #[test]
    fn closed_forms_on_stars_and_cycles() {
        for n in [3usize, 10, 57] {
            let star = ColoredMapping::star(n);
            assert_eq!(
                density_exact(&p("f(x1) = f(x2)"), &star).unwrap(),
                rat_int(1)
            );
            assert_eq!(
                density_exact(&p("f(x1) = x2"), &star).unwrap(),
                rat(1, n as i64)
            );
            let cyc = ColoredMapping::cycle(n);
            assert_eq!(
                density_exact(&p("f(x1) = f(x2)"), &cyc).unwrap(),
                rat(1, n as i64)
            );
            assert_eq!(
                density_exact(&p("x1 = x2"), &cyc).unwrap(),
                rat(1, n as i64)
            );
        }
        // f^2 = id exactly on 2-cycles
        assert_eq!(
            density_exact(&p("f^2(x1) = x1"), &ColoredMapping::cycle(2)).unwrap(),
            rat_int(1)
        );
        assert_eq!(
            density_exact(&p("f^2(x1) = x1"), &ColoredMapping::cycle(4)).unwrap(),
            rat_int(0)
        );
    }

    #[test]
    fn weighted_density_matches_the_frozen_value() {
        let w = WeightedMapping::new(e1(), vec![rat(1, 2), rat(1, 4), rat(1, 4)]).unwrap();
        let phi = p("f(x1) = f(x2)");
        assert_eq!(density_weighted(&phi, &w).unwrap(), rat(5, 8));
        assert_eq!(
            density_weighted(&defeat_closed_form(&phi), &w).unwrap(),
            rat(5, 8)
        );
    }

    #[test]
    fn uniform_weights_reproduce_unweighted_densities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let formulas = [
            p("f(x1) = f(x2)"),
            p("f^2(x1) = x1 | M1(x2)"),
            p("f(x1) != x2 & f^3(x2) = x2"),
        ];
        for _ in 0..15 {
            let n = rng.gen_range(1..12);
            let f: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let masks: Vec<u64> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let m = ColoredMapping::with_colors(f, 1, masks).unwrap();
            let w = WeightedMapping::uniform(m.clone());
            for phi in &formulas {
                assert_eq!(
                    density_exact(phi, &m).unwrap(),
                    density_weighted(phi, &w).unwrap()
                );
            }
        }
    }

    #[test]
    fn boolean_identities_hold_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..25 {
            let n = rng.gen_range(1..10);
            let f: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let m = ColoredMapping::new(f).unwrap();
            let a = p("f(x1) = x2");
            let b = p("f^2(x2) = x1");
            let da = density_exact(&a, &m).unwrap();
            let dnot = density_exact(&a.negated(), &m).unwrap();
            assert_eq!(da.clone() + dnot, rat_int(1));
            let dor = density_exact(&QfFormula::or(a.clone(), b.clone()), &m).unwrap();
            let dand = density_exact(&QfFormula::and(a.clone(), b.clone()), &m).unwrap();
            let db = density_exact(&b, &m).unwrap();
            assert_eq!(dor + dand, da + db);
        }
    }

    #[test]
    fn dummy_variables_do_not_change_density() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..10 {
            let n = rng.gen_range(2..9);
            let f: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let m = ColoredMapping::new(f).unwrap();
            let base = p("f(x1) = f(x2)");
            let padded = p("f(x1) = f(x2) & x3 = x3");
            assert_eq!(
                density_exact(&base, &m).unwrap(),
                density_exact(&padded, &m).unwrap()
            );
        }
    }

    #[test]
    fn budget_guard_refuses_large_plain_enumerations() {
        let m = ColoredMapping::star(50);
        let wide = p("x1 = x2 & x3 = x4 & x5 = x5");
        match density_exact(&wide, &m) {
            Err(DensityError::BudgetExceeded { required, .. }) => {
                assert_eq!(required, 50u128.pow(5));
            }
            other => panic!("expected budget refusal, got {other:?}"),
        }
        // single atoms stay in closed form no matter the size
        let big = ColoredMapping::cycle(20_000);
        assert_eq!(
            density_exact(&p("x1 = x2"), &big).unwrap(),
            rat(1, 20_000)
        );
    }

    #[test]
    fn mc_estimates_are_deterministic_and_calibrated() {
        let star = ColoredMapping::star(100);
        let phi = p("f(x1) = f(x2)");
        let est = density_mc(&phi, &star, 10_000, 0.01, 7);
        // the formula is a tautology on stars, so sampling cannot miss
        assert_eq!(est.value, rat_int(1));
        let expected_radius = ((2.0f64 / 0.01).ln() / (2.0 * 10_000.0)).sqrt();
        assert!((est.radius - expected_radius).abs() < 1e-12);
        assert!((expected_radius - 0.016_276).abs() < 1e-4);

        let again = density_mc(&phi, &star, 10_000, 0.01, 7);
        assert_eq!(est.value, again.value);
        let seq = density_mc_seq(&phi, &star, 10_000, 0.01, 7);
        assert_eq!(est.value, seq.value, "thread count must not affect draws");
    }

    #[test]
    fn mc_lands_within_the_radius_of_exact_values() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let phi = p("f(x1) = f(x2)");
        for case in 0..10 {
            let n = rng.gen_range(5..40);
            let f: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let m = ColoredMapping::new(f).unwrap();
            let exact = density_exact(&phi, &m).unwrap();
            let est = density_mc(&phi, &m, 20_000, 1e-6, 1000 + case);
            let diff = (est.value.clone() - exact).to_f64().unwrap().abs();
            assert!(
                diff <= est.radius,
                "estimate strayed {diff} > {} on case {case}",
                est.radius
            );
        }
    }

    #[test]
    fn convergence_table_tracks_star_densities() {
        let formulas = [p("f(x1) = x2")];
        let structures: Vec<Structure> = [8usize, 16, 32, 64]
            .iter()
            .map(|&n| Structure::Finite(ColoredMapping::star(n)))
            .collect();
        let report = converge(&formulas, &structures, 2, &rat(1, 10)).unwrap();
        assert_eq!(
            report.densities[0],
            vec![rat(1, 8), rat(1, 16), rat(1, 32), rat(1, 64)]
        );
        assert_eq!(
            report.deltas[0],
            vec![rat(1, 16), rat(1, 32), rat(1, 64)]
        );
        assert_eq!(report.tail_deviation[0], rat(1, 32));
        assert!(!report.flagged[0]);
        let strict = converge(&formulas, &structures, 2, &rat(1, 100)).unwrap();
        assert!(strict.flagged[0]);
        assert!(matches!(
            converge(&formulas, &structures[..1], 2, &rat(1, 10)),
            Err(DensityError::ShortSequence { got: 1 })
        ));
    }

    #[test]
    fn structure_dispatch_covers_intervals() {
        let s = Structure::Interval(IntervalMapping::rotation(rat(1, 2)));
        assert_eq!(s.density(&p("f^2(x1) = x1")).unwrap(), rat_int(1));
        assert_eq!(s.method().tag(), "interval-exact");
    }

    #[test]
    fn parallel_and_sequential_enumeration_agree() {
        let m = ColoredMapping::union_of_cycles(&[2, 3, 4]);
        let w = WeightedMapping::uniform(m.clone());
        let phi = p("f(x1) = f(x2) & f^2(x2) != x1");
        assert_eq!(
            density_exact(&phi, &m).unwrap(),
            density_exact_seq(&phi, &m).unwrap()
        );
        assert_eq!(
            density_weighted(&phi, &w).unwrap(),
            density_weighted_seq(&phi, &w).unwrap()
        );
    }
}
