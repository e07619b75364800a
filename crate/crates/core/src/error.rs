use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is off the model quadric (residual {0:e})")]
    OffQuadric(f64),
    #[error("antipodal points have no unique geodesic")]
    AntipodalPoints,
    #[error("zero tangent vector")]
    ZeroTangent,
    #[error("lightlike tangent vector")]
    LightlikeTangent,
    #[error("angle undefined at vertex {0}")]
    DegenerateVertex(usize),
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("degenerate quadrilateral")]
    DegenerateQuadrilateral,
    #[error("too few vertices: {0}")]
    TooFewVertices(usize),
    #[error("repeated consecutive vertex at index {0}")]
    RepeatedVertex(usize),
    #[error("polygon is not convex")]
    NotConvex,
    #[error("operation not supported in geometry {0}")]
    UnsupportedGeometry(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("constraint violated (residual {0:e})")]
    ConstraintViolated(f64),
    #[error("three consecutive vertices are collinear")]
    CollinearTriple,
    #[error("deformation is trivial")]
    TrivialDeformation,
    #[error("infeasible lengths: {0}")]
    Infeasible(String),
    #[error("root finding did not converge")]
    NoConvergence,
    #[error("could not bracket a root")]
    RootBracketFailure,
    #[error("singular operator")]
    SingularOperator,
    #[error("polygon has no flat vertex")]
    NoFlatVertex,
    #[error("base point is not interior")]
    ExteriorBasepoint,
    #[error("invalid vertex {0}")]
    InvalidVertex(usize),
    #[error("polygon is not contained in the open hemisphere around its barycenter")]
    NotInHemisphere,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("singular point")]
    SingularPoint,
    #[error("invalid polyhedron: {0}")]
    InvalidPolyhedron(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
