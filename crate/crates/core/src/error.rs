use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (‖M − M*‖_F = {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("empty generator list")]
    EmptyInput,
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("basis element {index} lies in the span of the preceding elements")]
    DependentBasis { index: usize },
    #[error("{what} generator {index} has support outside its corner (max stray entry {residual:.3e})")]
    CornerViolation {
        what: &'static str,
        index: usize,
        residual: f64,
    },
    #[error("{product} of generators ({left}, {right}) escapes its corner (residual {residual:.3e})")]
    ProductEscapesCorner {
        product: &'static str,
        left: usize,
        right: usize,
        residual: f64,
    },
    #[error("{corner} does not contain its corner identity (residual {residual:.3e})")]
    MissingIdentity { corner: &'static str, residual: f64 },
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("product is not associative (residual {residual:.3e})")]
    NotAssociative { residual: f64 },
    #[error("no quasimultiplier represents the product (least-squares residual {residual:.3e})")]
    NoQuasimultiplierRepresentation { residual: f64 },
    #[error("γ(F_{left})F_{right} does not lie in X (residual {residual:.3e})")]
    ImageOutsideSpace {
        left: usize,
        right: usize,
        residual: f64,
    },
    #[error("operation requires envelope data")]
    NoEnvelope,
    #[error("operation requires a square ambient, got {rows}×{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not a quasimultiplier of X (residual {residual:.3e})")]
    NotAQuasimultiplier { residual: f64 },
    #[error("r²·1 − zz* is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    RankDeficient { min_eigenvalue: f64 },
    #[error("space is not closed under multiplication (residual {residual:.3e})")]
    NotAnAlgebra { residual: f64 },
    #[error("map is not onto: image rank {rank}, target dimension {expected}")]
    NotOnto { rank: usize, expected: usize },
    #[error("affine system for {what} has no solution in the ambient (residual {residual:.3e}); supply envelope data")]
    NoAmbientSolution { what: &'static str, residual: f64 },
    #[error("solver stopped after {iterations} iterations without a verdict (residual {residual:.3e})")]
    Inconclusive { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
