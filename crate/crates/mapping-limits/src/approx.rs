//! Finite approximation of measure-preserving interval mappings: sample a
//! weighted finite structure, uniformize weights along short cycles, then
//! blow it up into an unweighted mapping whose densities approximate the
//! limit's, with an explicit certified error bound
//! `(1/N)·(p²(q+1)/|F| + 2p) + 2ε`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::interval::{check_cycle_preservation, IntervalError, IntervalMapping, PreservationReport};
use crate::mapping::{ColoredMapping, WeightedMapping};

/// Per-formula failure probability used to turn a tolerance into a sample
/// count: `Nsamples = ceil(ln(2/DELTA0) / (2 eps^2))`.
const DELTA0: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("free-variable and function-symbol budgets must both be at least 1")]
    BudgetTooSmall,
    #[error("sampling tolerance must be positive")]
    NonPositiveTolerance,
    #[error("blow factor must be at least 1")]
    ZeroBlowFactor,
    #[error("weights are not uniform along the cycle through elements {cycle:?}; run uniformize first")]
    NotUniform { cycle: Vec<usize> },
    #[error("mapping does not preserve its cyclic part: {}", describe_violations(.0))]
    CyclePreservation(PreservationReport),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

fn describe_violations(report: &PreservationReport) -> String {
    let parts: Vec<String> = report
        .violations
        .iter()
        .map(|v| {
            format!(
                "piece {} (slope {}) meets recurrent points of period {}",
                v.piece_index, v.slope, v.cycle_length
            )
        })
        .collect();
    parts.join("; ")
}

/// Budgets and knobs for one approximation run.
#[derive(Clone, Debug)]
pub struct ApproxParams {
    /// free-variable budget p
    pub free_vars: usize,
    /// function-symbol (iteration-depth) budget q
    pub function_symbols: usize,
    /// sampling tolerance epsilon
    pub epsilon: BigRational,
    /// blow factor N
    pub blow_factor: usize,
    pub seed: u64,
}

impl ApproxParams {
    pub fn new(
        free_vars: usize,
        function_symbols: usize,
        epsilon: BigRational,
        blow_factor: usize,
        seed: u64,
    ) -> Result<Self, ApproxError> {
        let params = ApproxParams {
            free_vars,
            function_symbols,
            epsilon,
            blow_factor,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ApproxError> {
        if self.free_vars < 1 || self.function_symbols < 1 {
            return Err(ApproxError::BudgetTooSmall);
        }
        if self.epsilon <= BigRational::zero() {
            return Err(ApproxError::NonPositiveTolerance);
        }
        if self.blow_factor < 1 {
            return Err(ApproxError::ZeroBlowFactor);
        }
        Ok(())
    }

    /// Sample count calibrated so each estimated density lands within
    /// `epsilon` except with probability `DELTA0` (Hoeffding).
    pub fn n_samples(&self) -> u64 {
        let eps = self.epsilon.to_f64().expect("tolerance fits in f64");
        let raw = (2.0 / DELTA0).ln() / (2.0 * eps * eps);
        (raw.ceil() as u64).max(1)
    }
}

/// An unweighted finite mapping produced by blowing up a weighted one.
#[derive(Clone, Debug)]
pub struct BlowResult {
    pub structure: ColoredMapping,
    /// provenance[i] = (base element, copy index) of blown element i
    pub provenance: Vec<(usize, usize)>,
    /// number of elements of the weighted structure that was blown
    pub base_size: usize,
    pub blow_factor: usize,
    /// certified error bound, attached when produced by [`approximate`]
    pub bound: Option<BigRational>,
}

impl BlowResult {
    pub fn n(&self) -> usize {
        self.structure.n()
    }

    /// Empirical measure of the blown copies of base element `v`:
    /// the count `⌊N·ν(v)·|F|⌋+1` over `|F̂|`.
    pub fn induced_weight(&self, v: usize) -> BigRational {
        let copies = self.provenance.iter().filter(|&&(u, _)| u == v).count();
        BigRational::new(BigInt::from(copies), BigInt::from(self.n()))
    }
}

/// Everything an approximation run produces, ready for certification.
#[derive(Clone, Debug)]
pub struct ApproxOutcome {
    pub params: ApproxParams,
    pub n_samples: u64,
    /// the uniformized weighted sample the blow-up came from
    pub sampled: WeightedMapping,
    pub blown: BlowResult,
    pub preservation: PreservationReport,
}

// ---------------------------------------------------------------- sampling

/// Draw `nsamples` points i.i.d. from Lebesgue measure on [0,1) and build the
/// sampled weighted structure (see [`sample_structure_from_points`]).
pub fn sample_structure(
    l: &IntervalMapping,
    nsamples: u64,
    q: usize,
    seed: u64,
) -> WeightedMapping {
    assert!(nsamples >= 1, "need at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<BigRational> = (0..nsamples).map(|_| l.sample(&mut rng)).collect();
    sample_structure_from_points(l, &points, q).0
}

/// Deterministic core of [`sample_structure`]: intern the given points along
/// with their forward trajectories up to depth `q`. Sampled points carry
/// weight `1/nsamples` each (accumulated when draws coincide); points added
/// only by closure carry weight 0. The finite `f` follows `l` wherever the
/// image is an element, and pins each depth-`q` chain end to itself. Colors
/// are inherited pointwise. Returns the structure and the interned points in
/// element order.
pub fn sample_structure_from_points(
    l: &IntervalMapping,
    points: &[BigRational],
    q: usize,
) -> (WeightedMapping, Vec<BigRational>) {
    assert!(!points.is_empty(), "need at least one sample");
    let mut elems: Vec<BigRational> = Vec::new();
    let mut index: BTreeMap<BigRational, usize> = BTreeMap::new();
    let mut weights: Vec<BigRational> = Vec::new();
    let share = BigRational::new(BigInt::from(1), BigInt::from(points.len()));
    let mut intern = |x: BigRational, elems: &mut Vec<BigRational>, weights: &mut Vec<BigRational>| -> usize {
        if let Some(&i) = index.get(&x) {
            return i;
        }
        let i = elems.len();
        index.insert(x.clone(), i);
        elems.push(x);
        weights.push(BigRational::zero());
        i
    };
    for x in points {
        let i = intern(x.clone(), &mut elems, &mut weights);
        weights[i] += &share;
        let mut cur = x.clone();
        for _ in 0..q {
            cur = l.apply(&cur);
            intern(cur.clone(), &mut elems, &mut weights);
        }
    }
    let f: Vec<usize> = elems
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let y = l.apply(x);
            *index.get(&y).unwrap_or(&i)
        })
        .collect();
    let masks: Vec<u64> = elems.iter().map(|x| l.color_mask_at(x)).collect();
    let base = ColoredMapping::with_colors(f, l.color_count(), masks)
        .expect("interned images are in range by construction");
    let weighted = WeightedMapping::new(base, weights)
        .expect("sample shares sum to one by construction");
    (weighted, elems)
}

// ---------------------------------------------------------------- uniformize

/// Replace the weight of every element on a cycle of length at most `q` by
/// the average over its cycle. Off-cycle weights are untouched. The result is
/// invariant under all cycle shifts of order at most `q`.
pub fn uniformize(f: &WeightedMapping, q: usize) -> WeightedMapping {
    assert!(q >= 1, "uniformize needs a depth budget of at least 1");
    let cs = f.base().cycle_structure();
    let mut weights = f.weights().to_vec();
    for cycle in &cs.cycles {
        if cycle.len() > q {
            continue;
        }
        let total: BigRational = cycle.iter().map(|&v| f.weight(v).clone()).sum();
        let avg = total / BigRational::from_integer(BigInt::from(cycle.len()));
        for &v in cycle {
            weights[v] = avg.clone();
        }
    }
    WeightedMapping::new(f.base().clone(), weights).expect("averaging preserves total mass")
}

// ---------------------------------------------------------------- blow-up

/// Blow a cycle-uniform weighted mapping into an unweighted one: element `v`
/// becomes copies `(v, 0..=⌊N·ν(v)·|F|⌋)`; the copy index rides along cycles
/// of length at most `q` and collapses to 0 elsewhere. Rejects weights that
/// are not uniform along some short cycle, naming it.
pub fn blow(f: &WeightedMapping, n: usize, q: usize) -> Result<BlowResult, ApproxError> {
    if n < 1 {
        return Err(ApproxError::ZeroBlowFactor);
    }
    let cs = f.base().cycle_structure();
    for cycle in &cs.cycles {
        if cycle.len() <= q {
            let w0 = f.weight(cycle[0]);
            if cycle.iter().any(|&v| f.weight(v) != w0) {
                return Err(ApproxError::NotUniform {
                    cycle: cycle.clone(),
                });
            }
        }
    }
    let nf = f.n();
    let size = BigRational::from_integer(BigInt::from(nf));
    let scale = BigRational::from_integer(BigInt::from(n));
    let copies: Vec<usize> = (0..nf)
        .map(|v| {
            let scaled = scale.clone() * f.weight(v) * &size;
            scaled
                .floor()
                .to_integer()
                .to_usize()
                .expect("copy count fits in usize")
                + 1
        })
        .collect();
    let mut offsets = Vec::with_capacity(nf);
    let mut total = 0usize;
    for &c in &copies {
        offsets.push(total);
        total += c;
    }
    let mut f_hat = vec![0usize; total];
    let mut masks = vec![0u64; total];
    let mut provenance = Vec::with_capacity(total);
    for v in 0..nf {
        let fv = f.base().f(v);
        let rides = cs.cycle_len[v].is_some_and(|k| k <= q);
        for j in 0..copies[v] {
            // along short cycles the counts agree by the uniformity check,
            // so `offsets[fv] + j` is a valid copy of f(v)
            f_hat[offsets[v] + j] = if rides { offsets[fv] + j } else { offsets[fv] };
            masks[offsets[v] + j] = f.base().color_mask(v);
            provenance.push((v, j));
        }
    }
    let structure = ColoredMapping::with_colors(f_hat, f.base().color_count(), masks)
        .expect("blown images are in range by construction");
    Ok(BlowResult {
        structure,
        provenance,
        base_size: nf,
        blow_factor: n,
        bound: None,
    })
}

// ---------------------------------------------------------------- the bound

/// The certified approximation error `(1/N)·(p²(q+1)/size_f + 2p) + 2ε`,
/// exact. `eps` may be zero to inspect the structural part alone.
pub fn error_bound(
    p: usize,
    q: usize,
    size_f: usize,
    blow_factor: usize,
    eps: &BigRational,
) -> BigRational {
    assert!(p >= 1 && q >= 1 && size_f >= 1 && blow_factor >= 1);
    assert!(!eps.is_negative(), "tolerance cannot be negative");
    let p = BigRational::from_integer(BigInt::from(p));
    let q1 = BigRational::from_integer(BigInt::from(q + 1));
    let size = BigRational::from_integer(BigInt::from(size_f));
    let n = BigRational::from_integer(BigInt::from(blow_factor));
    let two = BigRational::from_integer(BigInt::from(2));
    (p.clone() * &p * q1 / size + two.clone() * p) / n + two * eps
}

// ---------------------------------------------------------------- pipeline

/// Full pipeline: check the cycle-preservation hypothesis, sample, uniformize,
/// blow, and attach the certified bound.
pub fn approximate(
    l: &IntervalMapping,
    params: &ApproxParams,
) -> Result<ApproxOutcome, ApproxError> {
    params.validate()?;
    let q = params.function_symbols;
    let preservation = check_cycle_preservation(l, q)?;
    if !preservation.holds {
        return Err(ApproxError::CyclePreservation(preservation));
    }
    let n_samples = params.n_samples();
    let sampled = sample_structure(l, n_samples, q, params.seed);
    let sampled = uniformize(&sampled, q);
    let mut blown = blow(&sampled, params.blow_factor, q)?;
    blown.bound = Some(error_bound(
        params.free_vars,
        q,
        sampled.n(),
        params.blow_factor,
        &params.epsilon,
    ));
    Ok(ApproxOutcome {
        params: params.clone(),
        n_samples,
        sampled,
        blown,
        preservation,
    })
}
