//! Local convergence diagnostics: canonical codes for rooted balls, their
//! distribution over a structure, and the residuality / dispersion measures.
//!
//! A radius-r ball carries the partial function induced by the edges with
//! both endpoints inside the ball, rooted at its center. Such a graph is
//! connected with out-degrees at most one, so it is either an in-tree hanging
//! from the single vertex whose image escapes the ball, or a single directed
//! cycle with in-trees hanging off it. Codes canonicalize trees by sorting
//! child codes and cycles by taking the lexicographically least rotation, so
//! code equality coincides with root-, function- and color-preserving
//! isomorphism.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use crate::exec::{self, ExecMode};
use crate::mapping::{ColoredMapping, WeightedMapping};

/// Canonical code of a rooted ball: equal codes iff isomorphic balls.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BallType(String);

impl BallType {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BallType {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.write_str(&self.0)
    }
}

/// Canonical code of the radius-`r` ball around `v`.
pub fn ball_canonical(f: &ColoredMapping, v: usize, r: usize) -> BallType {
    let verts = f.ball(v, r);
    BallType(code_of_induced(f, &verts, v))
}

fn code_of_induced(f: &ColoredMapping, verts: &[usize], root: usize) -> String {
    let m = verts.len();
    let local: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let lroot = local[&root];
    // out[i]: image inside the ball, if any; children: its reverse
    let out: Vec<Option<usize>> = verts
        .iter()
        .map(|&u| local.get(&f.f(u)).copied())
        .collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, &img) in out.iter().enumerate() {
        if let Some(j) = img {
            children[j].push(i);
        }
    }
    let payload = |i: usize| -> String {
        let mut s = String::new();
        if i == lroot {
            s.push('*');
        }
        if f.color_count() > 0 {
            s.push_str(&format!("m{:x}", f.color_mask(verts[i])));
        }
        s
    };
    // tree code below `i`, not crossing the edge from `skip` (cycle edge)
    fn tree_code(
        i: usize,
        skip: Option<usize>,
        children: &[Vec<usize>],
        payload: &dyn Fn(usize) -> String,
    ) -> String {
        let mut parts: Vec<String> = children[i]
            .iter()
            .filter(|&&c| Some(c) != skip)
            .map(|&c| tree_code(c, None, children, payload))
            .collect();
        parts.sort();
        format!("({}{})", payload(i), parts.concat())
    }
    match out.iter().position(|o| o.is_none()) {
        Some(sink) => format!("T{}", tree_code(sink, None, &children, &payload)),
        None => {
            // every vertex has an image inside: exactly one directed cycle
            let mut seen = vec![false; m];
            let mut cur = lroot;
            while !seen[cur] {
                seen[cur] = true;
                cur = out[cur].expect("no sink in cycle case");
            }
            let start = cur;
            let mut cycle = vec![start];
            let mut nxt = out[start].unwrap();
            while nxt != start {
                cycle.push(nxt);
                nxt = out[nxt].unwrap();
            }
            let codes: Vec<String> = cycle
                .iter()
                .enumerate()
                .map(|(pos, &c)| {
                    let prev = cycle[(pos + cycle.len() - 1) % cycle.len()];
                    tree_code(c, Some(prev), &children, &payload)
                })
                .collect();
            let k = codes.len();
            let rotation = (0..k)
                .map(|s| {
                    let mut joined = String::new();
                    for idx in 0..k {
                        joined.push_str(&codes[(s + idx) % k]);
                    }
                    joined
                })
                .min()
                .expect("cycle is nonempty");
            format!("C{k}:{rotation}")
        }
    }
}

/// ν-weighted distribution of radius-`r` ball types; masses sum to 1.
pub fn ball_histogram(f: &WeightedMapping, r: usize) -> BTreeMap<BallType, BigRational> {
    ball_histogram_impl(f, r, ExecMode::Auto)
}

/// Sequential twin of [`ball_histogram`] with identical output.
pub fn ball_histogram_seq(f: &WeightedMapping, r: usize) -> BTreeMap<BallType, BigRational> {
    ball_histogram_impl(f, r, ExecMode::Sequential)
}

fn ball_histogram_impl(
    f: &WeightedMapping,
    r: usize,
    mode: ExecMode,
) -> BTreeMap<BallType, BigRational> {
    exec::map_merge(
        mode,
        f.n(),
        |v| {
            let mut one = BTreeMap::new();
            one.insert(ball_canonical(f.base(), v, r), f.weight(v).clone());
            one
        },
        |mut a, b| {
            for (k, w) in b {
                *a.entry(k).or_insert_with(BigRational::zero) += w;
            }
            a
        },
    )
    .unwrap_or_default()
}

/// `max_v ν(B_r(v))` — the residuality statistic. A sequence of structures
/// is residual when this tends to 0 for every fixed radius.
pub fn residuality(f: &WeightedMapping, r: usize) -> BigRational {
    exec::max_over(ExecMode::Auto, f.n(), |v| {
        f.measure_of(&f.base().ball(v, r))
    })
    .unwrap_or_else(BigRational::zero)
}

/// `ν(B_d(root))` — mass within distance `d` of the root. A rooted sequence
/// is non-dispersive when for every ε some `d` keeps this above 1−ε.
pub fn dispersion(f: &WeightedMapping, root: usize, d: usize) -> BigRational {
    f.measure_of(&f.base().ball(root, d))
}

/// Uniform-measure conveniences for plain colored mappings.
pub fn ball_histogram_uniform(f: &ColoredMapping, r: usize) -> BTreeMap<BallType, BigRational> {
    ball_histogram(&WeightedMapping::uniform(f.clone()), r)
}

pub fn residuality_uniform(f: &ColoredMapping, r: usize) -> BigRational {
    residuality(&WeightedMapping::uniform(f.clone()), r)
}

pub fn dispersion_uniform(f: &ColoredMapping, root: usize, d: usize) -> BigRational {
    dispersion(&WeightedMapping::uniform(f.clone()), root, d)
}
