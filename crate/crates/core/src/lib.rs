//! Discrete geometry of self-similar Cantor-type sets: Hausdorff dimension,
//! certified best-packing distances, minimal Riesz s-energy estimation over
//! prefractal lattices, a discrete renewal-equation solver, and oscillation
//! diagnostics for the normalized packing/energy sequences.
//!
//! The 1D machinery runs in exact rational arithmetic whenever the defining
//! maps are rational (and embeds IEEE doubles exactly as dyadic rationals
//! otherwise), so packing bounds can be certified with zero tolerance.

pub mod asymptotics;
pub mod config;
pub mod energy;
pub mod error;
pub mod ifs;
pub mod packing;
pub mod rational;
pub mod renewal;

pub use error::{Error, Result};
pub use rational::Rational;

pub use ifs::{
    exponent_structure, solve_dimension, ExponentStructure, FractalSystem, RatioStructure,
    Rotation, Similitude, Word,
};

pub use packing::{
    count_recursion_check, farthest_point_heuristic, fibonacci_table, greedy_count,
    greedy_points, least_point_at_least, packing_distance_bounds, CertifiedPoint, CountBounds,
    DeltaTable, FibonacciTable, PackingBounds, RecursionReport, SweepOptions,
};

pub use energy::{
    increment_bound_check, min_energy_bruteforce, min_energy_search, prefractal_lattice,
    renewal_residuals, riesz_energy, riesz_energy_exact, subadditivity_check, z_sequence,
    DepthSchedule, IncrementReport, Lattice, PointConfig, ResidualReport, SubadditivityReport,
    ZEntry, ZSequence,
};

pub use renewal::{
    limit_estimate, renewal_iterate, validate_renewal, LimitEstimate, PeriodicityVerdict,
    RenewalSystem, RenewalValidation,
};

pub use asymptotics::{
    energy_oscillation, large_s_diagnostic, packing_oscillation, Block, EnergyOscillationReport,
    LargeSDiagnostic, ContractionConstant, OscillationReport,
};
