//! Exact operator algebra for the boundary derivative system.

pub mod diffop;
pub mod laurent;
pub mod system;

pub use diffop::DiffOp;
pub use laurent::{integer, rational, LaurentPoly, Rational};
pub use system::{
    build_l, build_q, certificate_check, certificate_vector, derivative_row, determinant, independence_certificate,
    lemma_entry, lemma_sweep, nondegeneracy_check, shift_coefficient, system_matrix, CertificateReport,
    IndependenceCertificate, LemmaEntry, NondegeneracyReport, M_CAP,
};
