//! Adaptive Gauss–Kronrod quadrature (7-point Gauss / 15-point Kronrod pair).
//!
//! All integrands in this crate are smooth after the substitutions done by
//! their callers, so a plain bisection-adaptive G7K15 driver is enough; the
//! Kronrod/Gauss difference on each panel is the error estimate.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Target relative error of the panel sums.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Total number of panel splits allowed per integral.
    #[serde(default = "default_max_subdiv")]
    pub max_subdiv: u32,
}

fn default_rel_tol() -> f64 {
    1e-10
}

fn default_max_subdiv() -> u32 {
    512
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            rel_tol: default_rel_tol(),
            max_subdiv: default_max_subdiv(),
        }
    }
}

impl QuadratureSettings {
    pub fn new(rel_tol: f64, max_subdiv: u32) -> crate::Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
            return Err(crate::Error::Precondition(format!(
                "rel_tol must lie in (0, 1e-3], got {rel_tol}"
            )));
        }
        if max_subdiv < 8 {
            return Err(crate::Error::Precondition(format!(
                "max_subdiv must be at least 8, got {max_subdiv}"
            )));
        }
        Ok(QuadratureSettings { rel_tol, max_subdiv })
    }
}

// Nodes of the 15-point Kronrod rule on [-1, 1] (non-negative half; the rule
// is symmetric). Entries 0, 2, 4, 6 are the embedded 7-point Gauss nodes.
const XK: [f64; 8] = [
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];

const WK: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];

// Gauss weights for nodes XK[0], XK[2], XK[4], XK[6].
const WG: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

/// One G7K15 panel on [a, b]: returns (kronrod, gauss) estimates.
fn g7k15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[0] * fc;
    let mut g = WG[0] * fc;
    for i in 1..8 {
        let fp = f(c + h * XK[i]);
        let fm = f(c - h * XK[i]);
        k += WK[i] * (fp + fm);
        if i % 2 == 0 {
            g += WG[i / 2] * (fp + fm);
        }
    }
    (k * h, g * h)
}

/// Adaptive integral of `f` over [a, b]; returns (value, error estimate).
///
/// Panels whose Kronrod/Gauss difference exceeds `rel_tol` relative to the
/// panel value are bisected, depth-first, until the budget `max_subdiv` runs
/// out; the final error estimate is the sum of accepted panel differences.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, q: &QuadratureSettings) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    if a > b {
        let (v, e) = integrate(f, b, a, q);
        return (-v, e);
    }
    let span = b - a;
    let mut stack = vec![(a, b)];
    let mut total = 0.0;
    let mut err_total = 0.0;
    let mut splits = 0u32;
    while let Some((lo, hi)) = stack.pop() {
        let (k, g) = g7k15(f, lo, hi);
        let err = (k - g).abs();
        let converged = err <= q.rel_tol * k.abs();
        let floor = (hi - lo) < 1e-14 * span;
        if converged || floor || splits >= q.max_subdiv {
            total += k;
            err_total += err;
        } else {
            splits += 1;
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    (total, err_total)
}

/// Integral of `f(u) = u^q_exp * g(u)` over [0, b] where `g` is smooth and
/// `q_exp > -1`: the substitution u = x^m with m chosen from the exponent
/// turns the integrable endpoint power into a C¹ integrand before the
/// adaptive pass.
pub fn integrate_power_endpoint<F: Fn(f64) -> f64>(
    f: &F,
    b: f64,
    q_exp: f64,
    q: &QuadratureSettings,
) -> (f64, f64) {
    assert!(q_exp > -1.0, "endpoint power must be integrable");
    let m = if q_exp >= 1.0 {
        1.0
    } else {
        (2.0 / (1.0 + q_exp)).ceil()
    };
    if m == 1.0 {
        return integrate(f, 0.0, b, q);
    }
    // u = x^m, du = m x^(m-1) dx, x in [0, b^(1/m)].
    let xb = b.powf(1.0 / m);
    let g = |x: f64| {
        if x == 0.0 {
            // integrand ~ x^(m(1+q_exp)-1) with positive exponent by choice of m
            0.0
        } else {
            f(x.powf(m)) * m * x.powf(m - 1.0)
        }
    };
    integrate(&g, 0.0, xb, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let q = QuadratureSettings::default();
        let (v, _) = integrate(&|x| 3.0 * x * x, 0.0, 2.0, &q);
        assert!((v - 8.0).abs() < 1e-13);
    }

    #[test]
    fn sin_over_half_period() {
        let q = QuadratureSettings::default();
        let (v, e) = integrate(&|x| x.sin(), 0.0, PI, &q);
        assert!((v - 2.0).abs() < 1e-12, "v = {v}, err est = {e}");
    }

    #[test]
    fn oscillatory_needs_subdivision() {
        let q = QuadratureSettings::default();
        let (v, _) = integrate(&|x| (40.0 * x).cos(), 0.0, 1.0, &q);
        let exact = (40.0f64).sin() / 40.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = QuadratureSettings::default();
        let (v, _) = integrate(&|x| x, 1.0, 0.0, &q);
        assert!((v + 0.5).abs() < 1e-13);
    }

    #[test]
    fn power_endpoint_singularity() {
        // ∫_0^1 u^(-1/2) du = 2, unreachable for plain panels but smooth after u = x^2.
        let q = QuadratureSettings::default();
        let (v, _) = integrate_power_endpoint(&|u| u.powf(-0.5), 1.0, -0.5, &q);
        assert!((v - 2.0).abs() < 1e-10, "v = {v}");
    }

    #[test]
    fn power_endpoint_with_smooth_factor() {
        // ∫_0^{π/2} (sin α)^(-1/3) dα, computed two ways: substitution handles
        // the α=0 singularity; splitting off [δ, π/2] plus a series bound
        // cross-checks it.
        let q = QuadratureSettings::default();
        let (v, _) = integrate_power_endpoint(&|a| a.sin().powf(-1.0 / 3.0), PI / 2.0, -1.0 / 3.0, &q);
        // reference from the beta-function identity: ∫ sin^p = B((p+1)/2, 1/2)/2
        // with p = -1/3: value 2.1032731579881805
        assert!((v - 2.103_273_157_988_180_5).abs() < 1e-9, "v = {v}");
    }

    #[test]
    fn settings_bounds_enforced() {
        assert!(QuadratureSettings::new(1e-2, 100).is_err());
        assert!(QuadratureSettings::new(1e-8, 4).is_err());
        assert!(QuadratureSettings::new(1e-8, 64).is_ok());
    }
}
