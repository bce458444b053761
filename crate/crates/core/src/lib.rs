//! Spherical mean Radon transform with centers on the unit sphere.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: Bessel functions of the first kind, their zeros, Gamma.
//! * [`quad`]: one-dimensional quadrature rules shared by everything else.
//! * [`harmonics`]: sphere quadrature and real orthonormal spherical harmonics (n = 2, 3).
//! * [`transform`]: phantoms and the forward spherical mean operator.
//! * [`range`]: Fourier–Bessel orthogonality residuals, moment tests, range projection.
//! * [`darboux`]: spectral backward solver for the Darboux equation and the
//!   extension / vanishing diagnostics built on it.
//! * [`opalg`]: exact differential-operator algebra and the boundary
//!   derivative system with its nondegeneracy certificates.

pub mod darboux;
pub mod error;
pub mod harmonics;
pub mod opalg;
pub mod quad;
pub mod range;
pub mod specfun;
pub mod transform;

pub use error::{Error, Result};
pub use harmonics::{AngularCoefficients, HarmonicIndex, SphereGrid};
pub use specfun::{BesselOrder, ZeroTable};
pub use transform::{BoundaryData, MeanMethod, Phantom, ProfileKind, RadialProfile, TGrid};

/// Spatial dimensions supported by the quadrature-based pipelines.
pub const SUPPORTED_DIMENSIONS: [usize; 2] = [2, 3];

/// Total surface measure of the unit sphere in `R^n`.
pub fn sphere_measure(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / specfun::gamma_fn(half).expect("n >= 1")
}

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Self::Pass
    }

    pub fn and(self, other: Self) -> Self {
        Self::from_pass(self.passed() && other.passed())
    }
}
