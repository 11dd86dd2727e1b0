//! Homogeneity strips of the rotation angle.
//!
//! The k-th strip collects incidence angles whose excursion winds between
//! 2πk and 2π(k+1); since |dtheta| blows up like s^(-b) head-on, the strips
//! accumulate at phi = 0 with algebraically shrinking widths.

use super::{asymptotic_constants, delta_theta, HornProfile};
use crate::quad::QuadratureSettings;
use crate::{Error, Result};

/// The positive-side trace (phi_lo, phi_hi) of strip k: the interval on
/// which |dtheta| runs from 2π(k+1) down to 2πk. The negative-side strip is
/// its mirror image.
pub fn strip_boundaries(
    p: &HornProfile,
    k: u32,
    q: &QuadratureSettings,
) -> Result<(f64, f64)> {
    if k < 1 {
        return Err(Error::Precondition("strip index must be at least 1".into()));
    }
    let hi = solve_rotation(p, 2.0 * std::f64::consts::PI * k as f64, q)?;
    let lo = solve_rotation(p, 2.0 * std::f64::consts::PI * (k as f64 + 1.0), q)?;
    Ok((lo, hi))
}

/// Solve |dtheta(phi)| = target on (0, pi/2) by bisection in s = sin(phi);
/// the rotation angle is strictly decreasing there, and the head-on
/// asymptote 2 j0 s^(-b) seeds the bracket.
fn solve_rotation(p: &HornProfile, target: f64, q: &QuadratureSettings) -> Result<f64> {
    let c = asymptotic_constants(p);
    let b = c.rotation_exponent;
    let s_guess = (2.0 * c.j0 / target).powf(1.0 / b);
    if !(s_guess > 1e-280) {
        return Err(Error::Range(format!(
            "rotation target {target} puts the incidence angle below representable range"
        )));
    }

    let f = |s: f64| delta_theta(p, s.asin(), q).expect("s in (0,1) is regular");

    let mut lo = (s_guess / 8.0).max(1e-300);
    let mut hi = (s_guess * 8.0).min(1.0);
    // expand until the target is bracketed: f(lo) > target > f(hi)
    let mut expand = 0;
    while f(lo) <= target {
        lo /= 64.0;
        expand += 1;
        if expand > 8 || lo < 1e-300 {
            return Err(Error::Range(format!("could not bracket rotation target {target}")));
        }
    }
    let mut expand = 0;
    while hi < 1.0 && f(hi) >= target {
        hi = (hi * 64.0).min(1.0);
        expand += 1;
        if expand > 8 {
            return Err(Error::Range(format!("could not bracket rotation target {target}")));
        }
    }
    if f(hi) >= target {
        return Err(Error::Range(format!(
            "rotation target {target} below the grazing value; no strip there"
        )));
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-16 * hi {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn q() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    #[test]
    fn k_zero_rejected() {
        let p = HornProfile::new(1.0, 1.0).unwrap();
        assert!(strip_boundaries(&p, 0, &q()).is_err());
    }

    #[test]
    fn boundaries_solve_the_defining_equation() {
        let p = HornProfile::new(1.0, 1.0).unwrap();
        let (lo, hi) = strip_boundaries(&p, 5, &q()).unwrap();
        assert!(lo < hi);
        let d_lo = delta_theta(&p, lo, &q()).unwrap();
        let d_hi = delta_theta(&p, hi, &q()).unwrap();
        assert!((d_lo - 12.0 * PI).abs() < 1e-8, "dtheta(lo) = {d_lo}");
        assert!((d_hi - 10.0 * PI).abs() < 1e-8, "dtheta(hi) = {d_hi}");
    }

    #[test]
    fn beta_one_boundary_tracks_asymptote() {
        // dtheta ≈ 2 j0 sin(phi)^-2 = (pi/2) phi^-2 for small phi;
        // the k-th boundary sits near phi = sqrt(1/(4k)).
        let p = HornProfile::new(1.0, 1.0).unwrap();
        let k = 200;
        let (_, hi) = strip_boundaries(&p, k, &q()).unwrap();
        let predicted = (1.0 / (4.0 * k as f64)).sqrt();
        assert!(
            (hi - predicted).abs() / predicted < 0.02,
            "hi = {hi}, asymptote {predicted}"
        );
    }

    #[test]
    fn widths_shrink_relative_to_offset() {
        let p = HornProfile::new(1.5, 1.0).unwrap();
        let mut prev_ratio = f64::INFINITY;
        for k in [10u32, 100, 1000] {
            let (lo, hi) = strip_boundaries(&p, k, &q()).unwrap();
            let ratio = (hi - lo) / lo;
            assert!(ratio < prev_ratio, "width/offset must shrink with k");
            prev_ratio = ratio;
        }
        assert!(prev_ratio < 1e-3);
    }

    #[test]
    fn log_width_slope_beta_one() {
        // widths scale like k^-(1 + beta/(1+beta)); beta = 1 gives slope -3/2
        let p = HornProfile::new(1.0, 1.0).unwrap();
        let ks = [100u32, 316, 1000, 3162, 10000];
        let pts: Vec<(f64, f64)> = ks
            .iter()
            .map(|&k| {
                let (lo, hi) = strip_boundaries(&p, k, &q()).unwrap();
                ((k as f64).ln(), (hi - lo).ln())
            })
            .collect();
        let slope = fit_slope(&pts);
        assert!((slope + 1.5).abs() < 0.05, "slope = {slope}");
    }

    fn fit_slope(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}
