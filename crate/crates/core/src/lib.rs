//! Strict conic feasibility: find `x` with `Ax > 0`, or run out of budget
//! trying.
//!
//! The solver alternates an initial phase (perceptron, smoothed perceptron,
//! or gradient descent on the exponential potential) with a rescaling of
//! the cone whenever the phase returns dual evidence `λ` with small
//! `‖λA‖`. Everything is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom fix the precision.
//!
//! ```
//! use conefeas::{generate_planted, solve, PhaseMode, RescaleKind, SolveConfig};
//!
//! let (instance, witness) = generate_planted::<f64>(6, 24, 1e-2, 1).unwrap();
//! let mut cfg = SolveConfig::new(PhaseMode::MwuModified, RescaleKind::MultiRank);
//! cfg.rho_hint = Some(witness.rho);
//! let result = solve(&instance, &cfg).unwrap();
//! assert!(result.certificate.is_feasible());
//! ```

pub mod direction;
pub mod driver;
pub mod error;
pub mod harness;
pub mod instance;
pub mod linalg;
pub mod norm;
pub mod phases;
pub mod potential;
pub mod rescale;
pub mod rng;
pub mod scalar;
pub mod trace;

pub use direction::{approx_eigen_component, choose_direction, choose_step, step_size, EigenCase};
pub use driver::{john_ellipsoid, roundedness_check, solve, Roundedness, SolveConfig, SolveDocument, SolveResult};
pub use error::{Error, Result};
pub use harness::{bench_sweep, mc_volume_fraction, mc_volume_fractions, BenchSpec, RunReport, VolumeEstimate};
pub use instance::{
    generate_planted, generate_planted_family, load_instance, normalize_rows, pull_back, save_instance,
    verify_certificate, verify_certificate_in, Certificate, CertificateDocument, ConeInstance, PlantedFamily,
    PlantedWitness, TransformLog, TransformStep, VerificationReport,
};
pub use linalg::Matrix;
pub use norm::NormState;
pub use phases::{PhaseConfig, PhaseMode, PhaseOutcome, PhaseResult};
pub use potential::{evaluate, grad_check, second_moment, PotentialEval, SecondMoment};
pub use rescale::{
    derandomized_direction, estimate_width, gaussian_subset_direction, multirank_rescale, norm_update,
    rank1_rescale, RescaleKind, RescaleReport,
};
pub use scalar::Scalar;
pub use trace::TraceRecord;

pub type ConeInstance64 = ConeInstance<f64>;
pub type ConeInstance32 = ConeInstance<f32>;
pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type NormState64 = NormState<f64>;
pub type NormState32 = NormState<f32>;
pub type SolveResult64 = SolveResult<f64>;
pub type SolveResult32 = SolveResult<f32>;
pub type Certificate64 = Certificate<f64>;
pub type Certificate32 = Certificate<f32>;
