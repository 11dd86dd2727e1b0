//! Surface-of-revolution layer for a single horn.
//!
//! A horn is the trumpet r(z) = z^-beta, z >= z0, glued along its boundary
//! circle of radius r0 = r(z0) into a hole of the billiard table. Everything
//! about a particle's excursion into the horn reduces, via the Clairaut
//! invariant r(z) sin(phi(z)) = r0 sin(phi0), to one-dimensional integrals in
//! the turning-angle variable; this module evaluates them, their asymptotic
//! constants, and the induced homogeneity-strip geometry, and carries an
//! independent geodesic-ODE oracle used only by tests.

mod excursion;
mod geodesic;
mod strips;

pub use excursion::{asymptotic_constants, delta_theta, excursion, kappa, tmax};
pub use geodesic::{geodesic_oracle, GeodesicSolution};
pub use strips::strip_boundaries;

use crate::{Error, Result};

/// Trumpet profile r(z) = z^-beta truncated at the boundary circle radius
/// `r0`; the truncation height z0 = r0^(-1/beta) is implied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HornProfile {
    beta: f64,
    r0: f64,
    z0: f64,
}

impl HornProfile {
    pub fn new(beta: f64, r0: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("horn exponent must be positive, got {beta}")));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Domain(format!("horn boundary radius must be positive, got {r0}")));
        }
        Ok(HornProfile { beta, r0, z0: r0.powf(-1.0 / beta) })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }
}

/// Excursion data for one entry into the horn at incidence angle `phi0`.
#[derive(Clone, Copy, Debug)]
pub struct ExcursionSolution {
    pub phi0: f64,
    /// Time from the boundary circle to the turning point (half the sojourn).
    pub tmax: f64,
    /// Total rotation angle picked up between entry and exit; odd in phi0.
    pub dtheta: f64,
    /// d(dtheta)/d(phi0); below -2 for every trumpet profile.
    pub kappa: f64,
}

/// Limits of the excursion integrals as the incidence angle goes head-on
/// (tmax ~ i0 * |sin phi0|^(-1/beta), dtheta ~ 2 j0 * |sin phi0|^(-b)) and
/// grazing (kappa -> kappa_grazing).
#[derive(Clone, Copy, Debug)]
pub struct AsymptoticConstants {
    pub i0: f64,
    pub j0: f64,
    pub kappa_grazing: f64,
    /// The rotation-function exponent b = (1 + beta)/beta.
    pub rotation_exponent: f64,
}

/// Profile value and derivatives at height z, plus the Gauss curvature of
/// the surface of revolution there.
#[derive(Clone, Copy, Debug)]
pub struct ProfileEval {
    pub r: f64,
    pub r_prime: f64,
    pub r_second: f64,
    pub gauss_curvature: f64,
}

pub fn profile_eval(p: &HornProfile, z: f64) -> Result<ProfileEval> {
    if z < p.z0 {
        return Err(Error::Domain(format!(
            "z = {z} below the truncation height z0 = {}",
            p.z0
        )));
    }
    let b = p.beta;
    let r = z.powf(-b);
    let r_prime = -b * r / z;
    let r_second = b * (b + 1.0) * r / (z * z);
    let e = 1.0 + r_prime * r_prime;
    let gauss_curvature = -r_second / (r * e * e);
    Ok(ProfileEval { r, r_prime, r_second, gauss_curvature })
}

/// An improper integral over [z0, inf): either its value, or a divergence
/// flag together with the partial integral up to the reported cutoff.
#[derive(Clone, Copy, Debug)]
pub enum ImproperIntegral {
    Convergent(f64),
    Divergent { partial: f64, z_cut: f64 },
}

impl ImproperIntegral {
    pub fn is_finite(&self) -> bool {
        matches!(self, ImproperIntegral::Convergent(_))
    }

    pub fn value(&self) -> f64 {
        match *self {
            ImproperIntegral::Convergent(v) => v,
            ImproperIntegral::Divergent { .. } => f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HornMetrics {
    pub area: ImproperIntegral,
    pub volume: ImproperIntegral,
}

/// Surface area 2π ∫ r √(1+r'²) dz and enclosed volume π ∫ r² dz of the
/// truncated trumpet. Convergence is decided by the tail exponent of the
/// integrand (r² ~ z^(-2β) needs 2β > 1; r√(1+r'²) ~ z^(-β) needs β > 1);
/// convergent integrals are evaluated after mapping [z0, ∞) to (0, 1] by
/// u = z0/z, divergent ones report the partial value up to z_cut = 10⁶ z0.
pub fn horn_metrics(p: &HornProfile, q: &crate::QuadratureSettings) -> HornMetrics {
    let z0 = p.z0;
    let volume_integrand = |z: f64| z.powf(-2.0 * p.beta);
    let area_integrand = |z: f64| {
        let ev = profile_eval(p, z).expect("z >= z0 by construction");
        ev.r * (1.0 + ev.r_prime * ev.r_prime).sqrt()
    };
    let volume = improper(&volume_integrand, z0, 2.0 * p.beta - 2.0, 2.0 * p.beta > 1.0, q);
    let area = improper(&area_integrand, z0, p.beta - 2.0, p.beta > 1.0, q);
    HornMetrics {
        area: scale(area, 2.0 * std::f64::consts::PI),
        volume: scale(volume, std::f64::consts::PI),
    }
}

fn scale(m: ImproperIntegral, c: f64) -> ImproperIntegral {
    match m {
        ImproperIntegral::Convergent(v) => ImproperIntegral::Convergent(c * v),
        ImproperIntegral::Divergent { partial, z_cut } => {
            ImproperIntegral::Divergent { partial: c * partial, z_cut }
        }
    }
}

/// ∫_{z0}^∞ f(z) dz via u = z0/z; `u_exp` is the power of u the transformed
/// integrand carries at u = 0 (i.e. the tail exponent of f shifted by the
/// Jacobian), valid only when `converges`.
fn improper<F: Fn(f64) -> f64>(
    f: &F,
    z0: f64,
    u_exp: f64,
    converges: bool,
    q: &crate::QuadratureSettings,
) -> ImproperIntegral {
    let g = |u: f64| f(z0 / u) * z0 / (u * u);
    if converges {
        let (v, _) = crate::quad::integrate_power_endpoint(&g, 1.0, u_exp, q);
        ImproperIntegral::Convergent(v)
    } else {
        let z_cut = 1e6 * z0;
        let (v, _) = crate::quad::integrate(&g, z0 / z_cut, 1.0, q);
        ImproperIntegral::Divergent { partial: v, z_cut }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::QuadratureSettings;
    use std::f64::consts::PI;

    #[test]
    fn profile_rejects_bad_parameters() {
        assert!(HornProfile::new(0.0, 1.0).is_err());
        assert!(HornProfile::new(1.0, -2.0).is_err());
        assert!(HornProfile::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn truncation_height_matches_radius() {
        let p = HornProfile::new(1.5, 0.5).unwrap();
        assert!((p.z0().powf(-1.5) - 0.5).abs() < 1e-14);
        let p = HornProfile::new(1.0, 1.0).unwrap();
        assert_eq!(p.z0(), 1.0);
    }

    #[test]
    fn eval_at_unit_height_beta_one() {
        let p = HornProfile::new(1.0, 1.0).unwrap();
        let ev = profile_eval(&p, 1.0).unwrap();
        assert!((ev.r - 1.0).abs() < 1e-15);
        assert!((ev.r_prime + 1.0).abs() < 1e-15);
        assert!((ev.r_second - 2.0).abs() < 1e-15);
        assert!((ev.gauss_curvature + 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_at_unit_height_beta_two() {
        let p = HornProfile::new(2.0, 1.0).unwrap();
        let ev = profile_eval(&p, 1.0).unwrap();
        assert!((ev.r - 1.0).abs() < 1e-15);
        assert!((ev.r_prime + 2.0).abs() < 1e-15);
        assert!((ev.r_second - 6.0).abs() < 1e-15);
    }

    #[test]
    fn eval_matches_finite_differences() {
        let p = HornProfile::new(1.5, 1.0).unwrap();
        let z = 2.0;
        let h = 1e-5;
        let r = |z: f64| z.powf(-1.5);
        let ev = profile_eval(&p, z).unwrap();
        let fd1 = (r(z + h) - r(z - h)) / (2.0 * h);
        let fd2 = (r(z + h) - 2.0 * r(z) + r(z - h)) / (h * h);
        assert!((ev.r_prime - fd1).abs() / fd1.abs() < 1e-8);
        assert!((ev.r_second - fd2).abs() / fd2.abs() < 1e-5);
    }

    #[test]
    fn eval_below_truncation_is_domain_error() {
        let p = HornProfile::new(2.0, 0.5).unwrap();
        assert!(profile_eval(&p, 0.9 * p.z0()).is_err());
    }

    #[test]
    fn painters_paradox_beta_one() {
        let p = HornProfile::new(1.0, 1.0).unwrap();
        let m = horn_metrics(&p, &QuadratureSettings::default());
        assert!(!m.area.is_finite());
        assert!(m.volume.is_finite());
        assert!((m.volume.value() - PI).abs() < 1e-8, "V = {}", m.volume.value());
    }

    #[test]
    fn both_infinite_below_half() {
        let p = HornProfile::new(0.4, 1.0).unwrap();
        let m = horn_metrics(&p, &QuadratureSettings::default());
        assert!(!m.area.is_finite());
        assert!(!m.volume.is_finite());
        // partial values are still reported
        match m.volume {
            ImproperIntegral::Divergent { partial, z_cut } => {
                assert!(partial > 0.0 && z_cut > 1e5);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn beta_two_has_finite_area_and_volume() {
        // z0 = 1 for beta = 2 exactly when r0 = 1
        let p = HornProfile::new(2.0, 1.0).unwrap();
        let m = horn_metrics(&p, &QuadratureSettings::default());
        assert!(m.area.is_finite());
        assert!((m.volume.value() - PI / 3.0).abs() < 1e-8);
    }
}
