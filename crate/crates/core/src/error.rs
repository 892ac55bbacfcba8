use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("surface is degenerate (ac - b^2 = {discriminant:e}): parabolic cylinders and linear functions are not supported")]
    DegenerateSurface { discriminant: f64 },
    #[error("surface coefficients must be finite")]
    NonFiniteCoefficients,
    #[error("triangle has zero area")]
    DegenerateTriangle,
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("shape parameter must be nonzero and finite, got {0}")]
    InvalidShapeParam(f64),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("no lattice cell intersects the region")]
    EmptyRegion,
    #[error("optimal triangle was built for {built:?} but the surface normalises to {surface:?}")]
    CaseMismatch {
        built: crate::quadratic::CanonicalFrame,
        surface: crate::quadratic::CanonicalFrame,
    },
    #[error("invalid search configuration: {0}")]
    InvalidSearchConfig(String),
    #[error("search found no feasible configuration")]
    SearchBudgetExceeded,
    #[error("malformed mesh: {0}")]
    MalformedMesh(String),
}

pub type Result<T> = std::result::Result<T, Error>;
