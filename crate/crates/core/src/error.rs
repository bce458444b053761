use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension n = {0}; supported: 2, 3")]
    UnsupportedDimension(usize),

    #[error("harmonic index (m = {m}, k = {k}) out of range for n = {n}")]
    HarmonicIndex { n: usize, m: usize, k: usize },

    #[error("m_max = {m_max} exceeds the exact band of the grid (largest allowed: {limit})")]
    Aliasing { m_max: usize, limit: usize },

    #[error("boundary data is empty")]
    EmptyData,

    #[error("dual system is ill-conditioned (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("derivative order {requested} not resolvable on this grid (max {max})")]
    OrderTooLarge { requested: usize, max: usize },

    #[error("derivative row needs column {needed} but width is {width}")]
    RowWidth { needed: usize, width: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
