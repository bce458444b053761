//! Backward Darboux problem in the cylinder `B x (0, T]` and the diagnostics
//! built on it.

pub mod eigen;
pub mod extension;
pub mod residual;
pub mod solver;
pub mod vanishing;

pub use eigen::{dirichlet_eigendata, harmonic_extension_coeffs, EigenData};
pub use extension::{
    extension_check, reconstruction_error, recovered_vanishing, solve_modes, Extension, ExtensionConfig, ExtensionReport, ModeReport,
    RecoveredField,
};
pub use residual::darboux_residual;
pub use solver::{backward_solve_mode, sigma_baseline, single_mode_series, ModeProblem, ModeSolution};
pub use vanishing::{max_resolvable_order, vanishing_diagnostic, DerivativeEstimate, VanishingReport, VanishingTag};
