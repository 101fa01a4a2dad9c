//! Finite-difference simulation of KdV–Burgers and Kuramoto–Sivashinsky
//! equations on `[0, 1]` with boundary feedback through a fading-memory
//! kernel, together with hypothesis checks and energy-decay diagnostics.

pub mod analysis;
pub mod error;
pub mod history;
pub mod kernels;
pub mod linalg;
pub mod manifest;
pub mod output;
pub mod quadrature;
pub mod stepper;

pub use analysis::{
    discrete_energy, fit_exponential, fit_polynomial, monotonicity_defect, self_convergence, ConvergenceStudy,
    DecayFit, DecayModel, EnergySeries,
};
pub use error::{Error, Result};
pub use history::{ClosureValues, EtaField, HistoryFn, MemoryIntegrals, TraceHistory};
pub use kernels::{
    check_h, check_htilde, decay_rate_predictor, kappa, vartheta, HypothesisCheck, HypothesisReport, KdvbParams,
    KernelFamily, KsParams, Margin, MemoryKernel,
};
pub use linalg::{PentaLU, PentaMatrix, Stencils};
pub use manifest::{expand_sweep, parse_config, preset, preset_full, serialize, RunManifest, SweepAxis, SweepPoint};
pub use stepper::{
    map_coeffs, run, GeneralizedCoeffs, InitialProfile, Model, RunOptions, RunOutput, SimConfig, SimState, Snapshot,
    StepReport, Stepper, TraceRow,
};
