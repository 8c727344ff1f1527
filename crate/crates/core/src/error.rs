use thiserror::Error;

use crate::mesh::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown mesh family `{0}` (expected tri-alt, tri-uniform, tri-perturbed or quad)")]
    InvalidMeshFamily(String),
    #[error("mesh resolution must be at least 3 points per side, got {0}")]
    InvalidResolution(usize),
    #[error("cell {0} has non-positive area")]
    DegenerateCell(usize),
    #[error("point ({}, {}) lies outside the closed unit square", .0[0], .0[1])]
    PointOutsideDomain(Point),
    #[error("unknown element `{0}` (expected p1, p2, p3, q1 or q2)")]
    InvalidElement(String),
    #[error("element {element} cannot be used on a {mesh} mesh")]
    FamilyMismatch { element: String, mesh: String },
    #[error("no quadrature rule of degree {0} (maximum 12)")]
    UnsupportedQuadrature(usize),
    #[error("non-finite value {value} at ({}, {})", .at[0], .at[1])]
    NonFinite { value: f64, at: Point },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is structurally or numerically singular at pivot {0}")]
    SingularMatrix(usize),
    #[error("linear solver failed: relative residual {residual:e} after {iterations} iterations")]
    SolverBreakdown { residual: f64, iterations: usize },
    #[error("diagonal stabilisation weight is zero at unknown {0}")]
    ZeroWeight(usize),
    #[error("enumeration oracle limited to {max} unknowns, got {got}")]
    OracleTooLarge { max: usize, got: usize },
    #[error("no active-set assignment satisfies the variational inequality")]
    OracleNoSolution,
    #[error("variational inequality has two distinct solutions (difference {0:e})")]
    OracleNotUnique(f64),
    #[error("line does not intersect the closed unit square")]
    EmptyIntersection,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
