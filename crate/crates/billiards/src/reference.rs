//! The bundled reference table.
//!
//! A triangular lattice with unit spacing on the torus [0,1) x [0,√3),
//! alternating rows of scatterers and horns, one of each per fundamental
//! domain. Radius 0.48 exceeds half the row spacing (√3/4 ≈ 0.433), so every
//! free-flight corridor is blocked and flight times are bounded, while
//! nearest neighbors still keep a 0.04 gap.

use crate::table::{Domain, Obstacle, ObstacleKind, TableConfig};
use crate::{Error, Result};

pub const REFERENCE_RADIUS: f64 = 0.48;

/// The reference table with the horn exponent dialed in.
pub fn reference_config(beta: f64) -> Result<TableConfig> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Precondition(format!("horn exponent must be positive, got {beta}")));
    }
    let rt3 = 3.0f64.sqrt();
    Ok(TableConfig {
        domain: Domain::Torus { width: 1.0, height: rt3 },
        obstacles: vec![
            Obstacle {
                center: [0.25, rt3 / 4.0],
                radius: REFERENCE_RADIUS,
                kind: ObstacleKind::Scatterer,
            },
            Obstacle {
                center: [0.75, 3.0 * rt3 / 4.0],
                radius: REFERENCE_RADIUS,
                kind: ObstacleKind::Horn { beta },
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{validate_table, CollisionCoord};

    #[test]
    fn reference_is_valid_with_unit_gaps() {
        let config = reference_config(1.5).unwrap();
        let rep = validate_table(&config).unwrap();
        assert!((rep.min_gap - 0.04).abs() < 1e-12, "gap {}", rep.min_gap);
    }

    #[test]
    fn reference_horizon_is_finite() {
        // every sampled flight lands on an obstacle: no corridor survived
        let config = reference_config(1.5).unwrap();
        let rep = validate_table(&config).unwrap();
        assert_eq!(rep.horizon_warnings, 0);
        assert!(rep.tau_max_sample < 5.0, "tau_max = {}", rep.tau_max_sample);
        assert!(rep.tau_min_sample > 0.03, "tau_min = {}", rep.tau_min_sample);
    }

    #[test]
    fn long_orbit_never_outruns_the_cap() {
        let config = reference_config(1.5).unwrap();
        let q = crate::QuadratureSettings::default();
        let mut x = CollisionCoord::outgoing(0, 0.9, 0.37);
        let mut tau_max: f64 = 0.0;
        for _ in 0..3000 {
            let s = crate::table::billiard_map(&config, &x, &q).unwrap();
            tau_max = tau_max.max(s.tau);
            x = s.out;
        }
        assert!(tau_max < 6.0, "longest observed flight {tau_max}");
    }

    #[test]
    fn rejects_nonpositive_exponent() {
        assert!(reference_config(0.0).is_err());
        assert!(reference_config(-1.0).is_err());
        assert!(reference_config(f64::NAN).is_err());
    }
}
