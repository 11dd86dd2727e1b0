//! Excursion integrals in the turning-angle variable.
//!
//! With s = |sin phi0| and the Clairaut invariant r sin(phi) = r0 sin(phi0),
//! the substitution sin(alpha) = r0 s / r(z) maps the excursion onto
//! alpha in [asin s, pi/2] and removes the turning-point singularity; the
//! remaining integrands are bounded and smooth, with the shorthand
//! e = 2(1+beta)/beta and pe = (r0 s)^e:
//!
//!   T_max  = s^(-1/beta) / (beta r0^(1/beta))
//!            * ∫ (sin a)^(-2) sqrt((sin a)^e + beta^2 pe) da
//!   dtheta = 2 sgn(phi0) s^(-(1+beta)/beta) / (beta r0^((1+beta)/beta))
//!            * ∫ sqrt((sin a)^e + beta^2 pe) da
//!   kappa  = -2 sqrt(1 + r0^(-e)/beta^2)
//!            - (2(1+beta)/beta^2) (cos phi0 / s) (r0 s)^(-(1+beta)/beta)
//!              * ∫ (sin a)^e / sqrt((sin a)^e + beta^2 pe) da
//!
//! kappa is the phi0-derivative of dtheta (checked against central
//! differences in the tests) and is even, capped above by its grazing limit.

use super::{AsymptoticConstants, ExcursionSolution, HornProfile};
use crate::quad::{integrate, integrate_power_endpoint, QuadratureSettings};
use crate::{Error, Result};
use std::f64::consts::FRAC_PI_2;

fn check_phi0(phi0: f64) -> Result<f64> {
    if !phi0.is_finite() || phi0.abs() > FRAC_PI_2 + 1e-15 {
        return Err(Error::Domain(format!(
            "incidence angle {phi0} outside [-pi/2, pi/2]"
        )));
    }
    if phi0 == 0.0 {
        return Err(Error::Trapped(
            "head-on horn entry (phi0 = 0): the excursion never returns".into(),
        ));
    }
    Ok(phi0.abs().sin().min(1.0))
}

/// Time from the boundary circle to the turning point; even in phi0.
pub fn tmax(p: &HornProfile, phi0: f64, q: &QuadratureSettings) -> Result<f64> {
    let s = check_phi0(phi0)?;
    if s == 1.0 {
        return Ok(0.0);
    }
    let beta = p.beta();
    let e = 2.0 * (1.0 + beta) / beta;
    let pe = beta * beta * (p.r0() * s).powf(e);
    let f = |a: f64| {
        let sa = a.sin();
        (sa.powf(e) + pe).sqrt() / (sa * sa)
    };
    let (v, _) = integrate(&f, s.asin(), FRAC_PI_2, q);
    Ok(s.powf(-1.0 / beta) * v / (beta * p.r0().powf(1.0 / beta)))
}

/// Total rotation angle of the excursion; odd in phi0, same sign as phi0.
pub fn delta_theta(p: &HornProfile, phi0: f64, q: &QuadratureSettings) -> Result<f64> {
    let s = check_phi0(phi0)?;
    if s == 1.0 {
        return Ok(0.0);
    }
    let beta = p.beta();
    let b = (1.0 + beta) / beta;
    let pe = beta * beta * (p.r0() * s).powf(2.0 * b);
    let f = |a: f64| (a.sin().powf(2.0 * b) + pe).sqrt();
    let (v, _) = integrate(&f, s.asin(), FRAC_PI_2, q);
    Ok(phi0.signum() * 2.0 * s.powf(-b) * v / (beta * p.r0().powf(b)))
}

/// Derivative of the rotation angle with respect to the incidence angle;
/// even in phi0, strictly below -2, diverging to -inf head-on.
pub fn kappa(p: &HornProfile, phi0: f64, q: &QuadratureSettings) -> Result<f64> {
    let s = check_phi0(phi0)?;
    let beta = p.beta();
    let b = (1.0 + beta) / beta;
    let grazing = -2.0 * (1.0 + p.r0().powf(-2.0 * b) / (beta * beta)).sqrt();
    if s == 1.0 {
        return Ok(grazing);
    }
    let pe = beta * beta * (p.r0() * s).powf(2.0 * b);
    let f = |a: f64| {
        let se = a.sin().powf(2.0 * b);
        se / (se + pe).sqrt()
    };
    let (v, _) = integrate(&f, s.asin(), FRAC_PI_2, q);
    let prefactor = 2.0 * b / beta * (phi0.cos() / s) * (p.r0() * s).powf(-b);
    Ok(grazing - prefactor * v)
}

/// All three excursion quantities at once.
pub fn excursion(p: &HornProfile, phi0: f64, q: &QuadratureSettings) -> Result<ExcursionSolution> {
    Ok(ExcursionSolution {
        phi0,
        tmax: tmax(p, phi0, q)?,
        dtheta: delta_theta(p, phi0, q)?,
        kappa: kappa(p, phi0, q)?,
    })
}

/// Head-on / grazing limits of the excursion integrals.
///
/// i0 and j0 are the limits of the rescaled integrals (the alpha-integrands
/// above with pe -> 0), i.e. T_max * s^(1/beta) -> i0 and
/// |dtheta| * s^b / 2 -> j0 as s -> 0. The i0 integrand (sin a)^((1-beta)/beta)
/// has an integrable endpoint power for beta > 1, absorbed by substitution.
pub fn asymptotic_constants(p: &HornProfile) -> AsymptoticConstants {
    let beta = p.beta();
    let b = (1.0 + beta) / beta;
    let q = QuadratureSettings { rel_tol: 1e-12, max_subdiv: 4000 };
    let qi = (1.0 - beta) / beta;
    let (int_i, _) = integrate_power_endpoint(&|a: f64| a.sin().powf(qi), FRAC_PI_2, qi, &q);
    let (int_j, _) = integrate(&|a: f64| a.sin().powf(b), 0.0, FRAC_PI_2, &q);
    AsymptoticConstants {
        i0: int_i / (beta * p.r0().powf(1.0 / beta)),
        j0: int_j / (beta * p.r0().powf(b)),
        kappa_grazing: -2.0 * (1.0 + p.r0().powf(-2.0 * b) / (beta * beta)).sqrt(),
        rotation_exponent: b,
    }
}
