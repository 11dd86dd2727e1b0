//! Independent geodesic-ODE oracle for the excursion integrals.
//!
//! Integrates the geodesic equations of the surface-of-revolution metric
//! ds² = (1 + r'(z)²) dz² + r(z)² dθ² directly in the (z, θ) chart with a
//! fixed-step RK4 scheme, never touching the quadrature code paths, so the
//! two implementations can check each other. Unit-speed geodesics make
//! elapsed time equal arc length; the Clairaut invariant r² θ̇ and the speed
//! are carried along as conserved-quantity residuals.

use super::HornProfile;
use crate::{Error, Result};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug)]
pub struct GeodesicSolution {
    /// Time from the boundary circle to the turning point (half the return time).
    pub tmax: f64,
    /// Winding angle accumulated over the full excursion.
    pub dtheta: f64,
    /// Angle against the boundary normal at the return crossing; equals -phi0.
    pub exit_angle: f64,
    /// max |r sin(phi) - r0 sin(phi0)| along the orbit.
    pub clairaut_residual: f64,
    /// max | |v| - 1 | along the orbit.
    pub speed_residual: f64,
    pub steps: u64,
}

#[derive(Clone, Copy)]
struct State {
    z: f64,
    th: f64,
    zd: f64,
    thd: f64,
}

fn deriv(p: &HornProfile, s: &State) -> State {
    let beta = p.beta();
    let r = s.z.powf(-beta);
    let rp = -beta * r / s.z;
    let rpp = beta * (beta + 1.0) * r / (s.z * s.z);
    let e = 1.0 + rp * rp;
    State {
        z: s.zd,
        th: s.thd,
        zd: rp * (r * s.thd * s.thd - rpp * s.zd * s.zd) / e,
        thd: -2.0 * (rp / r) * s.zd * s.thd,
    }
}

fn rk4_step(p: &HornProfile, s: &State, h: f64) -> State {
    let k1 = deriv(p, s);
    let k2 = deriv(p, &advance(s, &k1, 0.5 * h));
    let k3 = deriv(p, &advance(s, &k2, 0.5 * h));
    let k4 = deriv(p, &advance(s, &k3, h));
    State {
        z: s.z + h / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z),
        th: s.th + h / 6.0 * (k1.th + 2.0 * k2.th + 2.0 * k3.th + k4.th),
        zd: s.zd + h / 6.0 * (k1.zd + 2.0 * k2.zd + 2.0 * k3.zd + k4.zd),
        thd: s.thd + h / 6.0 * (k1.thd + 2.0 * k2.thd + 2.0 * k3.thd + k4.thd),
    }
}

fn advance(s: &State, d: &State, h: f64) -> State {
    State {
        z: s.z + h * d.z,
        th: s.th + h * d.th,
        zd: s.zd + h * d.zd,
        thd: s.thd + h * d.thd,
    }
}

/// Integrate one excursion from the boundary circle at incidence angle
/// `phi0` until the first return crossing of z = z0, refined by bisection
/// within the crossing step.
pub fn geodesic_oracle(p: &HornProfile, phi0: f64, step: f64) -> Result<GeodesicSolution> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Precondition(format!("step must be positive, got {step}")));
    }
    if phi0 == 0.0 {
        return Err(Error::Trapped(
            "head-on horn entry (phi0 = 0): the excursion never returns".into(),
        ));
    }
    if !phi0.is_finite() || phi0.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(Error::Domain(format!("incidence angle {phi0} outside [-pi/2, pi/2]")));
    }

    let beta = p.beta();
    let r0 = p.r0();
    let z0 = p.z0();
    let s_abs = phi0.sin().abs();
    // Closed-form overestimate of the return time (twice the apex time),
    // derived from bounding the excursion integrand; the factor 10 is slack.
    let cap = 10.0
        * (PI * (r0 * s_abs).powf(-1.0 / beta) * 1.0f64.max(1.0 / beta) + 2.0 * r0)
        + 10.0;

    let rp0 = -beta * r0 / z0;
    let e0 = 1.0 + rp0 * rp0;
    let mut state = State {
        z: z0,
        th: 0.0,
        zd: phi0.cos() / e0.sqrt(),
        thd: phi0.sin() / r0,
    };
    let clairaut0 = r0 * phi0.sin();

    let mut t = 0.0;
    let mut steps: u64 = 0;
    let mut clairaut_residual = 0.0f64;
    let mut speed_residual = 0.0f64;

    loop {
        let next = rk4_step(p, &state, step);
        steps += 1;

        if next.z < z0 {
            // return crossing inside this step: bisect the substep length
            let (mut lo, mut hi) = (0.0f64, step);
            let mut end = next;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let probe = rk4_step(p, &state, mid);
                if probe.z < z0 {
                    hi = mid;
                    end = probe;
                } else {
                    lo = mid;
                }
            }
            let t_return = t + hi;
            let r = end.z.powf(-beta);
            let rp = -beta * r / end.z;
            let e = 1.0 + rp * rp;
            let exit_angle = (-r * end.thd).atan2(-end.zd * e.sqrt());
            return Ok(GeodesicSolution {
                // the excursion is time-symmetric about the apex
                tmax: 0.5 * t_return,
                dtheta: end.th,
                exit_angle,
                clairaut_residual,
                speed_residual,
                steps,
            });
        }

        // conserved-quantity residuals at the accepted step
        let r = next.z.powf(-beta);
        let rp = -beta * r / next.z;
        let e = 1.0 + rp * rp;
        let speed = (e * next.zd * next.zd + r * r * next.thd * next.thd).sqrt();
        speed_residual = speed_residual.max((speed - 1.0).abs());
        clairaut_residual = clairaut_residual.max((r * r * next.thd / speed - clairaut0).abs());

        t += step;
        state = next;
        if t > cap {
            return Err(Error::Trapped(format!(
                "no return to the boundary circle within time cap {cap:.3e} (phi0 = {phi0})"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn head_on_and_bad_step_rejected() {
        let p = HornProfile::new(1.0, 1.0).unwrap();
        assert!(matches!(geodesic_oracle(&p, 0.0, 1e-3), Err(Error::Trapped(_))));
        assert!(geodesic_oracle(&p, 0.5, 0.0).is_err());
        assert!(geodesic_oracle(&p, 2.0, 1e-3).is_err());
    }

    #[test]
    fn quarter_incidence_conserved_quantities() {
        let p = HornProfile::new(1.0, 1.0).unwrap();
        let g = geodesic_oracle(&p, FRAC_PI_4, 1e-4).unwrap();
        assert!(g.clairaut_residual < 1e-8, "clairaut {}", g.clairaut_residual);
        assert!(g.speed_residual < 1e-8, "speed {}", g.speed_residual);
        assert!((g.exit_angle + FRAC_PI_4).abs() < 1e-6, "exit {}", g.exit_angle);
    }

    #[test]
    fn frozen_quarter_incidence_values() {
        let p = HornProfile::new(1.0, 1.0).unwrap();
        let g = geodesic_oracle(&p, FRAC_PI_4, 1e-4).unwrap();
        assert!((g.tmax - 1.322_724_863_996).abs() < 1e-7, "tmax {}", g.tmax);
        assert!((g.dtheta - 3.024_363_471_836).abs() < 1e-7, "dtheta {}", g.dtheta);
    }

    #[test]
    fn negative_incidence_mirrors() {
        let p = HornProfile::new(1.5, 0.8).unwrap();
        let gp = geodesic_oracle(&p, 0.4, 1e-4).unwrap();
        let gm = geodesic_oracle(&p, -0.4, 1e-4).unwrap();
        assert!((gp.tmax - gm.tmax).abs() < 1e-9);
        assert!((gp.dtheta + gm.dtheta).abs() < 1e-9);
        assert!((gp.exit_angle + 0.4).abs() < 1e-6);
        assert!((gm.exit_angle - 0.4).abs() < 1e-6);
    }

    #[test]
    fn near_grazing_returns_quickly() {
        let p = HornProfile::new(2.0, 1.0).unwrap();
        let g = geodesic_oracle(&p, 1.5, 1e-4).unwrap();
        assert!(g.tmax < 1.0);
        assert!(g.dtheta > 0.0 && g.dtheta < FRAC_PI_2);
    }
}
