//! Satisfaction densities of quantifier-free formulas over finite mappings
//! (sets with a single endofunction and optional unary colors), together with
//! piecewise-affine interval mappings as concrete limit objects and a
//! constructive finite-approximation pipeline (sample, uniformize, blow) with
//! a certified error bound.
//!
//! All measures and densities are exact rationals; Monte-Carlo estimation is
//! available where exact enumeration is out of budget. The heavy enumeration
//! loops are data-parallel (rayon) behind the `parallel` feature (on by
//! default); every parallel entry point has a sequential twin with
//! bit-identical output.

pub mod approx;
pub mod definable;
pub mod density;
mod exec;
pub mod formula;
pub mod interval;
pub mod local_stats;
pub mod mapping;
pub mod model;
pub mod ratio;

pub use approx::{approximate, blow, error_bound, sample_structure, uniformize, ApproxParams};
pub use definable::{cycle_shift, group_elements, substitute, CycleShiftGroup, DefinableFn};
pub use density::{
    converge, density_exact, density_mc, density_weighted, ConvergenceReport, DensityReport,
    DensityValue, Structure,
};
pub use formula::{parse_formula, FTerm, QfFormula};
pub use interval::{
    check_cycle_preservation, cyclic_part, density_exact_interval, refine, IntervalMapping,
};
pub use local_stats::{ball_canonical, ball_histogram, dispersion, residuality, BallType};
pub use mapping::{parse_mapping, ColoredMapping, ParsedMapping, WeightedMapping};

/// The exact number type used for every measure, weight, and density.
pub use num_rational::BigRational;
