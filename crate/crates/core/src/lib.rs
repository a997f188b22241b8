//! Two-mode Fock-state toolkit for photon-number path entanglement.
//!
//! Everything here revolves around states of `N` photons split between a
//! horizontal and a vertical polarization mode. The crate builds such states
//! ([`fock`]), projects them onto multi-detector coincidence patterns
//! ([`projection`]), relates pairwise and four-fold fringe visibilities
//! through an indistinguishability model ([`vismodel`]), simulates counting
//! experiments with realistic detector imperfections ([`simkit`]), fits
//! harmonic fringes to counted data ([`fitkit`]), and evaluates the
//! phase-estimation power of a given probe state ([`metrology`]).

pub mod error;
pub mod fitkit;
pub mod fock;
mod math;
pub mod metrology;
pub mod projection;
pub mod simkit;
pub mod vismodel;

pub use error::{Error, Result};
pub use fitkit::{
    fit_fringe, fit_fringe_weighted, subtract_background, FringeFit, RatePoint, SubtractedDataset,
    SubtractedRecord,
};
pub use fock::{vacuum_overlap, PhaseShift, Sign, StateVector};
pub use metrology::{
    orthogonal_phase, phase_uncertainty, projection_success, scaling_exponent, PhasePlan,
};
pub use projection::{
    nfold_coincidence_prob, pairwise_coincidence_prob, synthesize_network, DetectorNetwork,
    IsometryReport, LinearForm, Synthesis,
};
pub use simkit::{
    derive_accidental_dataset, sample_pattern, simulate_counts, CountDataset, CountRecord,
    ExperimentConfig, OutcomeDistribution, PAIR_LABELS,
};
pub use vismodel::{
    accidental_fourfold, ea_from_rates, ea_from_rates_sigma, ea_from_visibility,
    ea_from_visibility_sigma, v4_range, OverlapParams, PairRates,
};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;
