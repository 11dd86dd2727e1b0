use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A trajectory entered a horn head-on (incidence angle 0) and never
    /// comes back out.
    #[error("trapped: {0}")]
    Trapped(String),

    /// A free flight exceeded the length cap without meeting an obstacle.
    #[error("no collision within length cap {cap} (infinite-horizon direction?)")]
    Horizon { cap: f64 },

    /// Tangent-map evaluation too close to a grazing collision.
    #[error("near-grazing collision: cos(phi) = {cos_phi:.3e} below cutoff")]
    NearGrazing { cos_phi: f64 },

    /// A finite-difference stencil straddled a singularity curve
    /// (perturbed trajectories land on different obstacles).
    #[error("finite-difference stencil crosses a singularity curve at obstacle {obstacle}")]
    StencilCrossesSingularity { obstacle: usize },

    /// Geometric constraint violations in a table configuration.
    #[error("invalid table: {0}")]
    InvalidTable(String),

    /// Argument outside an operation's domain (bad z, phi out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Root-finders / inversions asked for values outside their bracket.
    #[error("out of range: {0}")]
    Range(String),

    /// Statistics on degenerate input (constant tail, zero variance, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The Lyapunov orbit ran out of restart budget near singularities.
    #[error("all {restarts} orbit restarts hit singular neighborhoods")]
    RestartsExhausted { restarts: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;
