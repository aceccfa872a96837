//! A minimal structure interface so formulas evaluate uniformly over finite
//! mappings, weighted mappings, and interval mappings.

use num_rational::BigRational;
use rand::RngCore;

use crate::interval::IntervalMapping;
use crate::mapping::{ColoredMapping, WeightedMapping};

/// Anything that looks like a mapping: points, a step function, colors, and a
/// way to draw a point at random (used by Monte-Carlo estimation).
pub trait SampleModel {
    type Point: Clone + PartialEq + Send;

    fn step(&self, x: &Self::Point) -> Self::Point;
    fn has_color(&self, m: usize, x: &Self::Point) -> bool;
    fn draw(&self, rng: &mut dyn RngCore) -> Self::Point;
}

impl SampleModel for ColoredMapping {
    type Point = usize;

    fn step(&self, x: &usize) -> usize {
        self.f(*x)
    }

    fn has_color(&self, m: usize, x: &usize) -> bool {
        ColoredMapping::has_color(self, m, *x)
    }

    fn draw(&self, rng: &mut dyn RngCore) -> usize {
        use rand::Rng;
        rng.gen_range(0..self.n())
    }
}

/// Weighted sampler with a precomputed cumulative table; draws are exact
/// comparisons of a dyadic uniform against rational cumulative weights.
pub struct WeightedSampler<'a> {
    mapping: &'a WeightedMapping,
    cumulative: Vec<BigRational>,
}

impl<'a> WeightedSampler<'a> {
    pub fn new(mapping: &'a WeightedMapping) -> Self {
        let mut acc = BigRational::new(0.into(), 1.into());
        let cumulative = mapping
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc.clone()
            })
            .collect();
        WeightedSampler {
            mapping,
            cumulative,
        }
    }
}

impl SampleModel for WeightedSampler<'_> {
    type Point = usize;

    fn step(&self, x: &usize) -> usize {
        self.mapping.base().f(*x)
    }

    fn has_color(&self, m: usize, x: &usize) -> bool {
        self.mapping.base().has_color(m, *x)
    }

    fn draw(&self, rng: &mut dyn RngCore) -> usize {
        let u = crate::ratio::dyadic(rng, crate::ratio::DYADIC_BITS);
        // first index whose cumulative weight exceeds u
        self.cumulative
            .partition_point(|c| *c <= u)
            .min(self.mapping.n() - 1)
    }
}

impl SampleModel for IntervalMapping {
    type Point = BigRational;

    fn step(&self, x: &BigRational) -> BigRational {
        self.eval_point(x, 1)
            .expect("interval mapping is closed on [0,1)")
    }

    fn has_color(&self, m: usize, x: &BigRational) -> bool {
        IntervalMapping::has_color(self, m, x)
    }

    fn draw(&self, rng: &mut dyn RngCore) -> BigRational {
        crate::ratio::dyadic(rng, crate::ratio::DYADIC_BITS)
    }
}
