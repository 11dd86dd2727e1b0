//! Planar dispersing billiards with hard circular scatterers and
//! trumpet-shaped "horns" (surfaces of revolution r(z) = z^-beta glued into
//! circular holes of the table).
//!
//! The crate provides, bottom up:
//! - [`horn`]: the surface-of-revolution layer — excursion time `T_max`,
//!   rotation angle `Δθ`, its derivative `κ`, asymptotic constants, strip
//!   boundaries, and an independent geodesic-ODE oracle;
//! - [`table`]: table geometry, the free-flight map, reflection laws, and the
//!   composed collision map;
//! - [`tangent`]: the 2×2 derivative cocycle in (dθ, dφ), cone tests,
//!   Lyapunov estimation, distortion and hyperbolicity diagnostics;
//! - [`suspension`]: the suspension flow over the collision map (height
//!   function, invariant-measure sampling, orbits, occupation times, tails);
//! - [`stats`]: estimators (Hill, ACF, KS), α-stable reference sampling, and
//!   the limit-law experiment harness.

pub mod error;
pub mod horn;
pub mod quad;
pub mod reference;
pub mod rng;
pub mod stats;
pub mod suspension;
pub mod table;
pub mod tangent;

pub use error::{Error, Result};
pub use quad::QuadratureSettings;
