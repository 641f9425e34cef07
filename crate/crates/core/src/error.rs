use thiserror::Error;

/// Errors surfaced by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A quantity defined through division by sin(theta) was requested at a pole.
    #[error("evaluation at a sphere pole (theta = {theta}) where the requested quantity is undefined")]
    PoleEvaluation { theta: f64 },

    /// The tangent-plane transport F degenerates when the surface normal is
    /// nearly antipodal to the radial direction (1 + cos(psi) < 1e-8).
    #[error("tangent transport is singular: surface normal nearly antipodal to the radial direction (cos = {cos_angle})")]
    FrameSingular { cos_angle: f64 },

    /// Rotation-coefficient recurrences left their validated range.
    #[error("rotation coefficient overflow/underflow at degree {degree}")]
    Overflow { degree: usize },

    /// Sample vector length does not match the quadrature node count.
    #[error("sample count {got} does not match quadrature node count {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    /// Frequency or Lame parameters outside the admissible range.
    #[error("invalid medium: require omega > 0, mu > 0 and lambda + mu > 0 (got omega = {omega}, lambda = {lambda}, mu = {mu})")]
    InvalidMedium { omega: f64, lambda: f64, mu: f64 },

    /// Fundamental-solution evaluation at coincident source and observation points.
    #[error("fundamental solution requested at coincident points")]
    CoincidentPoints,

    /// LU factorization detected rank deficiency.
    #[error("linear system is numerically singular (possible interior eigenvalue of the chosen wavenumbers)")]
    SingularSystem,

    /// Point source placed on (or too close to) the scatterer boundary.
    #[error("point source lies on the obstacle boundary")]
    SourceOnBoundary,

    /// Far-field grids disagree between computed and reference patterns.
    #[error("far-field observation grids do not match: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
