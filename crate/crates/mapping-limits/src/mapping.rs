//! Finite mappings: a set `{0, .., n-1}` with a total endofunction `f`,
//! optional unary colors, and (for the weighted variant) an exact rational
//! probability measure on the elements.
//!
//! The text format, shared by the CLI and the test corpus, is line-oriented:
//!
//! ```text
//! # header: n [color_count]
//! 5 2
//! # one line per element i = 0..n-1:  f(i) [weight num/den] [colormask]
//! 1 1/5 0
//! 2 1/5 1
//! ...
//! ```
//!
//! A file is weighted exactly when the weight column is present; the column
//! count expected on each element line is determined by the header.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::ratio::{format_ratio_explicit, parse_ratio};

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("f({v}) = {image} is out of range for domain size {n}")]
    ImageOutOfRange { v: usize, image: usize, n: usize },
    #[error("element {v} has color mask {mask} but only {count} colors are declared")]
    ColorOutOfRange { v: usize, mask: u64, count: usize },
    #[error("weights sum to {sum}, expected exactly 1")]
    WeightSum { sum: BigRational },
    #[error("element {v} has negative weight {w}")]
    NegativeWeight { v: usize, w: BigRational },
    #[error("domain is empty")]
    EmptyDomain,
    #[error("restriction set is empty")]
    EmptyRestriction,
    #[error("restriction set has total weight zero")]
    ZeroWeightRestriction,
    #[error("restriction set contains {v}, out of range for domain size {n}")]
    RestrictionOutOfRange { v: usize, n: usize },
}

/// A finite mapping with unary colors. Elements are `0..n`, colors are stored
/// as per-element bitmasks over `color_count` colors (color `m` is bit `m-1`,
/// matching the 1-based color syntax `M1, M2, ..` of the formula language).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredMapping {
    f: Vec<usize>,
    color_count: usize,
    color_masks: Vec<u64>,
}

impl ColoredMapping {
    pub fn new(f: Vec<usize>) -> Result<Self, MappingError> {
        Self::with_colors(f, 0, Vec::new())
    }

    pub fn with_colors(
        f: Vec<usize>,
        color_count: usize,
        mut color_masks: Vec<u64>,
    ) -> Result<Self, MappingError> {
        let n = f.len();
        if n == 0 {
            return Err(MappingError::EmptyDomain);
        }
        for (v, &image) in f.iter().enumerate() {
            if image >= n {
                return Err(MappingError::ImageOutOfRange { v, image, n });
            }
        }
        if color_masks.is_empty() {
            color_masks = vec![0; n];
        }
        assert_eq!(color_masks.len(), n, "one color mask per element");
        let limit = if color_count >= 64 {
            u64::MAX
        } else {
            (1u64 << color_count) - 1
        };
        for (v, &mask) in color_masks.iter().enumerate() {
            if mask & !limit != 0 {
                return Err(MappingError::ColorOutOfRange {
                    v,
                    mask,
                    count: color_count,
                });
            }
        }
        Ok(ColoredMapping {
            f,
            color_count,
            color_masks,
        })
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn f(&self, v: usize) -> usize {
        self.f[v]
    }

    pub fn f_table(&self) -> &[usize] {
        &self.f
    }

    pub fn color_count(&self) -> usize {
        self.color_count
    }

    pub fn color_mask(&self, v: usize) -> u64 {
        self.color_masks[v]
    }

    /// Does element `v` carry color `m` (1-based)?
    pub fn has_color(&self, m: usize, v: usize) -> bool {
        m >= 1 && m <= self.color_count && self.color_masks[v] >> (m - 1) & 1 == 1
    }

    /// f^a(v), with cycle shortcutting so large `a` stays O(n).
    pub fn apply_iterate(&self, v: usize, a: usize) -> usize {
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        let mut path = Vec::new();
        let mut cur = v;
        let mut step = 0usize;
        loop {
            if step == a {
                return cur;
            }
            if let Some(&first) = seen.get(&cur) {
                let cycle_len = step - first;
                return path[first + (a - first) % cycle_len];
            }
            seen.insert(cur, step);
            path.push(cur);
            cur = self.f[cur];
            step += 1;
        }
    }

    /// Tables of f^0, f^1, .., f^d as plain vectors (the enumeration cores
    /// index into these instead of walking the orbit per tuple).
    pub fn iterate_tables(&self, d: usize) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut tables = Vec::with_capacity(d + 1);
        tables.push((0..n).collect::<Vec<_>>());
        for a in 1..=d {
            let prev = &tables[a - 1];
            let next: Vec<usize> = (0..n).map(|v| self.f[prev[v]]).collect();
            tables.push(next);
        }
        tables
    }

    /// Decompose the functional graph into cycles: `cycle_len[v]` is `Some(k)`
    /// iff `v` lies on a cycle of length `k`; `cycles` lists each cycle once,
    /// in f-order, in discovery order.
    pub fn cycle_structure(&self) -> CycleStructure {
        let n = self.n();
        let mut state = vec![0u8; n]; // 0 new, 1 on current path, 2 done
        let mut pos_in_path = vec![usize::MAX; n];
        let mut cycle_len = vec![None; n];
        let mut cycles = Vec::new();
        let mut path = Vec::new();
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            path.clear();
            let mut v = start;
            while state[v] == 0 {
                state[v] = 1;
                pos_in_path[v] = path.len();
                path.push(v);
                v = self.f[v];
            }
            if state[v] == 1 {
                let cstart = pos_in_path[v];
                let cyc: Vec<usize> = path[cstart..].to_vec();
                for &u in &cyc {
                    cycle_len[u] = Some(cyc.len());
                }
                cycles.push(cyc);
            }
            for &u in &path {
                state[u] = 2;
            }
        }
        CycleStructure { cycle_len, cycles }
    }

    /// Elements on cycles of length exactly `k`, ascending. Empty for `k = 0`.
    pub fn cyclic_elements(&self, k: usize) -> Vec<usize> {
        let cs = self.cycle_structure();
        (0..self.n())
            .filter(|&v| cs.cycle_len[v] == Some(k))
            .collect()
    }

    /// Neighbor lists of the symmetrized functional graph (edges v -- f(v)).
    fn neighbors(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut adj = vec![Vec::new(); n];
        for v in 0..n {
            let w = self.f[v];
            if w != v {
                adj[v].push(w);
                adj[w].push(v);
            }
        }
        adj
    }

    fn bfs_from(&self, v: usize, radius: Option<usize>) -> Vec<Option<usize>> {
        let adj = self.neighbors();
        let mut dist = vec![None; self.n()];
        dist[v] = Some(0);
        let mut frontier = vec![v];
        let mut d = 0usize;
        while !frontier.is_empty() {
            if let Some(r) = radius {
                if d == r {
                    break;
                }
            }
            d += 1;
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &adj[u] {
                    if dist[w].is_none() {
                        dist[w] = Some(d);
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        dist
    }

    /// Distance in the symmetrized functional graph: the least `a + b` with
    /// `f^a(u) = f^b(v)`, or `None` when the orbits never meet. Computed by
    /// intersecting forward orbits; `gaifman_distance_bfs` is the graph-side
    /// cross-check and the two agree on all inputs.
    pub fn gaifman_distance(&self, u: usize, v: usize) -> Option<usize> {
        let first_hits = |start: usize| {
            let mut hit: Vec<Option<usize>> = vec![None; self.n()];
            let mut cur = start;
            let mut a = 0usize;
            while hit[cur].is_none() {
                hit[cur] = Some(a);
                cur = self.f[cur];
                a += 1;
            }
            hit
        };
        let hu = first_hits(u);
        let hv = first_hits(v);
        (0..self.n())
            .filter_map(|w| match (hu[w], hv[w]) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            })
            .min()
    }

    /// Same distance via breadth-first search on the symmetrized graph.
    pub fn gaifman_distance_bfs(&self, u: usize, v: usize) -> Option<usize> {
        self.bfs_from(u, None)[v]
    }

    /// Elements within distance `r` of `v`, ascending.
    pub fn ball(&self, v: usize, r: usize) -> Vec<usize> {
        self.bfs_from(v, Some(r))
            .iter()
            .enumerate()
            .filter_map(|(w, d)| d.map(|_| w))
            .collect()
    }

    /// Partition of the domain by preimage size |f^-1(v)|.
    pub fn preimage_partition(&self) -> PreimageProfile {
        let mut count = vec![0usize; self.n()];
        for &w in &self.f {
            count[w] += 1;
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &c) in count.iter().enumerate() {
            classes.entry(c).or_default().push(v);
        }
        PreimageProfile { classes }
    }

    // ---- stock constructions used throughout the tests ----

    /// Star: f(0) = 0 and f(i) = 0 for all i.
    pub fn star(n: usize) -> Self {
        ColoredMapping::new(vec![0; n]).expect("star is well-formed for n >= 1")
    }

    /// Identity mapping on n elements.
    pub fn identity(n: usize) -> Self {
        ColoredMapping::new((0..n).collect()).expect("identity is well-formed for n >= 1")
    }

    /// Single n-cycle 0 -> 1 -> .. -> n-1 -> 0.
    pub fn cycle(n: usize) -> Self {
        ColoredMapping::new((0..n).map(|i| (i + 1) % n).collect())
            .expect("cycle is well-formed for n >= 1")
    }

    /// Disjoint cycles of the given lengths, in order.
    pub fn union_of_cycles(lengths: &[usize]) -> Self {
        let mut f = Vec::new();
        let mut base = 0usize;
        for &len in lengths {
            assert!(len >= 1, "cycle length must be positive");
            for i in 0..len {
                f.push(base + (i + 1) % len);
            }
            base += len;
        }
        ColoredMapping::new(f).expect("cycle union is well-formed")
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if self.color_count > 0 {
            let _ = writeln!(out, "{} {}", self.n(), self.color_count);
        } else {
            let _ = writeln!(out, "{}", self.n());
        }
        for v in 0..self.n() {
            if self.color_count > 0 {
                let _ = writeln!(out, "{} {}", self.f[v], self.color_masks[v]);
            } else {
                let _ = writeln!(out, "{}", self.f[v]);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CycleStructure {
    pub cycle_len: Vec<Option<usize>>,
    pub cycles: Vec<Vec<usize>>,
}

impl CycleStructure {
    pub fn is_cyclic(&self, v: usize) -> bool {
        self.cycle_len[v].is_some()
    }
}

/// Domain partition by in-degree under f.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreimageProfile {
    /// preimage size -> elements with that in-degree, ascending.
    pub classes: BTreeMap<usize, Vec<usize>>,
}

/// Outcome of a mass-transport check: for `A, B` the mass `A` sends into `B`
/// against the mass `B` receives from `A`, both as exact rationals.
#[derive(Clone, Debug)]
pub struct TransportReport {
    pub holds: bool,
    pub sent: BigRational,
    pub received: BigRational,
}

/// A colored mapping together with an exact probability measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedMapping {
    base: ColoredMapping,
    weights: Vec<BigRational>,
}

impl WeightedMapping {
    pub fn new(base: ColoredMapping, weights: Vec<BigRational>) -> Result<Self, MappingError> {
        assert_eq!(weights.len(), base.n(), "one weight per element");
        for (v, w) in weights.iter().enumerate() {
            if w.is_negative() {
                return Err(MappingError::NegativeWeight { v, w: w.clone() });
            }
        }
        let sum: BigRational = weights.iter().sum();
        if !sum.is_one() {
            return Err(MappingError::WeightSum { sum });
        }
        Ok(WeightedMapping { base, weights })
    }

    /// Uniform measure 1/n on each element.
    pub fn uniform(base: ColoredMapping) -> Self {
        let n = base.n();
        let w = BigRational::new(1.into(), (n as i64).into());
        WeightedMapping {
            base,
            weights: vec![w; n],
        }
    }

    pub fn base(&self) -> &ColoredMapping {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn weight(&self, v: usize) -> &BigRational {
        &self.weights[v]
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn measure_of(&self, set: &[usize]) -> BigRational {
        let mut member = vec![false; self.n()];
        for &v in set {
            member[v] = true;
        }
        (0..self.n())
            .filter(|&v| member[v])
            .map(|v| self.weights[v].clone())
            .sum()
    }

    /// Restriction to `set` with renormalized weights; f is patched to fix
    /// every element whose image leaves the set.
    pub fn restrict(&self, set: &[usize]) -> Result<WeightedMapping, MappingError> {
        let n = self.n();
        let mut member = vec![false; n];
        for &v in set {
            if v >= n {
                return Err(MappingError::RestrictionOutOfRange { v, n });
            }
            member[v] = true;
        }
        let kept: Vec<usize> = (0..n).filter(|&v| member[v]).collect();
        if kept.is_empty() {
            return Err(MappingError::EmptyRestriction);
        }
        let total: BigRational = kept.iter().map(|&v| self.weights[v].clone()).sum();
        if total.is_zero() {
            return Err(MappingError::ZeroWeightRestriction);
        }
        let mut new_index = vec![usize::MAX; n];
        for (i, &v) in kept.iter().enumerate() {
            new_index[v] = i;
        }
        let f: Vec<usize> = kept
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let img = self.base.f(v);
                if member[img] {
                    new_index[img]
                } else {
                    i
                }
            })
            .collect();
        let masks: Vec<u64> = kept.iter().map(|&v| self.base.color_mask(v)).collect();
        let base = ColoredMapping::with_colors(f, self.base.color_count(), masks)?;
        let weights: Vec<BigRational> = kept
            .iter()
            .map(|&v| self.weights[v].clone() / total.clone())
            .collect();
        Ok(WeightedMapping { base, weights })
    }

    /// Mass-transport balance for the pair (A, B): compares
    /// sum_{v in A, f(v) in B} w(v) with sum_{y in B} |f^-1(y) ∩ A| * w(y).
    pub fn check_fmtp(&self, a: &[usize], b: &[usize]) -> TransportReport {
        let n = self.n();
        let mut in_a = vec![false; n];
        let mut in_b = vec![false; n];
        for &v in a {
            in_a[v] = true;
        }
        for &v in b {
            in_b[v] = true;
        }
        let sent: BigRational = (0..n)
            .filter(|&v| in_a[v] && in_b[self.base.f(v)])
            .map(|v| self.weights[v].clone())
            .sum();
        let mut preimage_from_a = vec![0usize; n];
        for v in 0..n {
            if in_a[v] {
                preimage_from_a[self.base.f(v)] += 1;
            }
        }
        let received: BigRational = (0..n)
            .filter(|&y| in_b[y])
            .map(|y| {
                BigRational::from_integer((preimage_from_a[y] as i64).into())
                    * self.weights[y].clone()
            })
            .sum();
        TransportReport {
            holds: sent == received,
            sent,
            received,
        }
    }

    /// Image-monotonicity check: does w(A) >= w(f(A))? Always true under
    /// uniform weights (a function cannot enlarge a set), and a consequence
    /// of mass transport for weighted ones. Returns both measures.
    pub fn check_image_monotone(&self, a: &[usize]) -> TransportReport {
        let n = self.n();
        let mut in_a = vec![false; n];
        for &v in a {
            in_a[v] = true;
        }
        let mut in_image = vec![false; n];
        for v in 0..n {
            if in_a[v] {
                in_image[self.base.f(v)] = true;
            }
        }
        let sent: BigRational = (0..n)
            .filter(|&v| in_a[v])
            .map(|v| self.weights[v].clone())
            .sum();
        let received: BigRational = (0..n)
            .filter(|&v| in_image[v])
            .map(|v| self.weights[v].clone())
            .sum();
        TransportReport {
            holds: sent >= received,
            sent,
            received,
        }
    }

    pub fn serialize(&self) -> String {
        let base = &self.base;
        let mut out = String::new();
        if base.color_count() > 0 {
            let _ = writeln!(out, "{} {}", base.n(), base.color_count());
        } else {
            let _ = writeln!(out, "{}", base.n());
        }
        for v in 0..base.n() {
            let w = format_ratio_explicit(&self.weights[v]);
            if base.color_count() > 0 {
                let _ = writeln!(out, "{} {} {}", base.f(v), w, base.color_mask(v));
            } else {
                let _ = writeln!(out, "{} {}", base.f(v), w);
            }
        }
        out
    }
}

/// Result of parsing a mapping file: weighted iff the weight column was present.
#[derive(Clone, Debug)]
pub enum ParsedMapping {
    Unweighted(ColoredMapping),
    Weighted(WeightedMapping),
}

impl ParsedMapping {
    /// View as a weighted mapping, taking the uniform measure if none was given.
    pub fn into_weighted(self) -> WeightedMapping {
        match self {
            ParsedMapping::Unweighted(m) => WeightedMapping::uniform(m),
            ParsedMapping::Weighted(w) => w,
        }
    }

    pub fn base(&self) -> &ColoredMapping {
        match self {
            ParsedMapping::Unweighted(m) => m,
            ParsedMapping::Weighted(w) => w.base(),
        }
    }
}

/// Parse the line-oriented mapping format. `#` starts a comment, blank lines
/// are skipped, and reported line numbers refer to the original text.
pub fn parse_mapping(text: &str) -> Result<ParsedMapping, MappingError> {
    let syntax = |line: usize, msg: String| MappingError::Syntax { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_no, header) = lines
        .next()
        .ok_or_else(|| syntax(1, "missing header line".into()))?;
    let header_fields: Vec<&str> = header.split_whitespace().collect();
    let (n, color_count) = match header_fields.as_slice() {
        [n] => (parse_usize(n, header_no, "domain size")?, 0),
        [n, c] => (
            parse_usize(n, header_no, "domain size")?,
            parse_usize(c, header_no, "color count")?,
        ),
        _ => {
            return Err(syntax(
                header_no,
                format!("expected `n` or `n color_count`, got `{header}`"),
            ))
        }
    };
    if n == 0 {
        return Err(MappingError::EmptyDomain);
    }

    let mut f = Vec::with_capacity(n);
    let mut weights: Vec<BigRational> = Vec::new();
    let mut masks = Vec::with_capacity(n);
    let mut weighted: Option<bool> = None;
    let mut last_line = header_no;

    for (line_no, line) in lines {
        last_line = line_no;
        if f.len() == n {
            return Err(syntax(
                line_no,
                format!("more than {n} element lines"),
            ));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        // expected layout: f(i) [weight] [mask]; the header's color count
        // decides whether the trailing mask column is present.
        let has_mask = color_count > 0;
        let expected_unweighted = 1 + usize::from(has_mask);
        let expected_weighted = expected_unweighted + 1;
        let this_weighted = if fields.len() == expected_unweighted {
            false
        } else if fields.len() == expected_weighted {
            true
        } else {
            return Err(syntax(
                line_no,
                format!(
                    "expected {expected_unweighted} or {expected_weighted} fields, got {}",
                    fields.len()
                ),
            ));
        };
        match weighted {
            None => weighted = Some(this_weighted),
            Some(w) if w != this_weighted => {
                return Err(syntax(
                    line_no,
                    "weight column must be present on every line or on none".into(),
                ))
            }
            _ => {}
        }
        let image = parse_usize(fields[0], line_no, "image")?;
        f.push(image);
        let mut next = 1;
        if this_weighted {
            let w = parse_ratio(fields[next])
                .map_err(|e| syntax(line_no, format!("bad weight: {e}")))?;
            weights.push(w);
            next += 1;
        }
        if has_mask {
            let mask = fields[next]
                .parse::<u64>()
                .map_err(|_| syntax(line_no, format!("bad color mask `{}`", fields[next])))?;
            masks.push(mask);
        }
    }

    if f.len() != n {
        return Err(syntax(
            last_line,
            format!("expected {n} element lines, found {}", f.len()),
        ));
    }

    let base = ColoredMapping::with_colors(f, color_count, masks)?;
    if weighted == Some(true) {
        Ok(ParsedMapping::Weighted(WeightedMapping::new(
            base, weights,
        )?))
    } else {
        Ok(ParsedMapping::Unweighted(base))
    }
}

fn parse_usize(s: &str, line: usize, what: &str) -> Result<usize, MappingError> {
    s.parse::<usize>().map_err(|_| MappingError::Syntax {
        line,
        msg: format!("bad {what} `{s}`"),
    })
}
