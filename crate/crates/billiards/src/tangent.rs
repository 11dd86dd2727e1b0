//! The derivative cocycle of the collision map and its diagnostics.
//!
//! One step of the map factors as reflection ∘ flight, and so does its
//! derivative: DT = DR·DF in (dθ, dφ) coordinates. DF is the classical
//! flight derivative between circular boundaries; DR is the specular flip,
//! with an extra shear by the winding derivative κ at horns. A geometric
//! finite-difference Jacobian serves as ground truth for both.

use crate::horn::{delta_theta, kappa, HornProfile};
use crate::quad::QuadratureSettings;
use crate::suspension::sample_mu;
use crate::table::{
    billiard_map, flight, CollisionCoord, FlightResult, ObstacleKind, TableConfig,
};
use crate::{Error, Result};
use std::f64::consts::FRAC_PI_2;

/// Near-grazing guard for the analytic flight derivative.
const GRAZING_COS_FLOOR: f64 = 1e-12;
/// Orbit points this close to grazing are skipped by the exponent estimator.
const SKIP_GRAZING_MARGIN: f64 = 1e-4;
/// Orbit points on a horn this close to head-on are skipped likewise.
const SKIP_HEAD_ON_MARGIN: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentMatrix {
    /// Row-major entries acting on column vectors (dθ, dφ).
    pub m: [[f64; 2]; 2],
}

impl TangentMatrix {
    pub fn new(m: [[f64; 2]; 2]) -> Self {
        TangentMatrix { m }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn matmul(&self, rhs: &TangentMatrix) -> TangentMatrix {
        let a = &self.m;
        let b = &rhs.m;
        TangentMatrix::new([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()))
    }
}

/// Derivative of the flight map (outgoing at i to incoming at j).
///
/// With τ the flight time, cᵢ = cos φ at departure, cⱼ = cos φ at arrival,
/// and a = τ + rᵢcᵢ:
///
///   DF = 1/(rⱼcⱼ) · [ −a        −τ       ]
///                    [ a + rⱼcⱼ  τ + rⱼcⱼ ]
///
/// so det DF = −rᵢcᵢ/(rⱼcⱼ). In rectangle mode each wall reflection mirrors
/// the arrival chart, contributing a factor −I per bounce.
pub fn dflight(
    config: &TableConfig,
    out: &CollisionCoord,
    next: &FlightResult,
) -> Result<TangentMatrix> {
    let r_i = config.obstacles[out.obstacle].radius;
    let r_j = config.obstacles[next.hit.obstacle].radius;
    let c_i = out.phi.cos();
    let c_j = next.hit.phi.cos();
    if c_j < GRAZING_COS_FLOOR {
        return Err(Error::NearGrazing { cos_phi: c_j });
    }
    let tau = next.tau;
    let denom = r_j * c_j;
    let a = tau + r_i * c_i;
    let sign = if next.wall_bounces % 2 == 0 { 1.0 } else { -1.0 };
    let s = sign / denom;
    Ok(TangentMatrix::new([
        [-a * s, -tau * s],
        [(a + denom) * s, (tau + denom) * s],
    ]))
}

fn reflection_matrix(
    config: &TableConfig,
    hit: &CollisionCoord,
    q: &QuadratureSettings,
) -> Result<TangentMatrix> {
    let o = &config.obstacles[hit.obstacle];
    match o.kind {
        ObstacleKind::Scatterer => Ok(TangentMatrix::new([[1.0, 0.0], [0.0, -1.0]])),
        ObstacleKind::Horn { beta } => {
            if hit.phi == 0.0 {
                return Err(Error::Trapped(format!(
                    "head-on horn entry at obstacle {}",
                    hit.obstacle
                )));
            }
            let profile = HornProfile::new(beta, o.radius)?;
            let k = kappa(&profile, hit.phi, q)?;
            Ok(TangentMatrix::new([[1.0, -k], [0.0, -1.0]]))
        }
    }
}

/// Analytic derivative of one collision-map step at the outgoing point x.
pub fn dmap(config: &TableConfig, x: &CollisionCoord, q: &QuadratureSettings) -> Result<TangentMatrix> {
    Ok(dmap_with_step(config, x, q)?.0)
}

/// Derivative together with the image point, sharing one flight.
pub fn dmap_with_step(
    config: &TableConfig,
    x: &CollisionCoord,
    q: &QuadratureSettings,
) -> Result<(TangentMatrix, CollisionCoord)> {
    let f = flight(config, x)?;
    let df = dflight(config, x, &f)?;
    let dr = reflection_matrix(config, &f.hit, q)?;
    let next = crate::table::reflect(config, &f.hit, q)?;
    Ok((dr.matmul(&df), next))
}

/// Central-difference Jacobian of the full collision map; the module's
/// ground truth for derivative checks.
///
/// All four perturbed maps must land on the same obstacle as the base point
/// and (at horns) on the same side of the head-on line, otherwise the stencil
/// straddles a singularity curve and no derivative is reported.
pub fn dmap_fd(config: &TableConfig, x: &CollisionCoord, h: f64, q: &QuadratureSettings) -> Result<TangentMatrix> {
    if !(h > 0.0 && h < 0.1) {
        return Err(Error::Precondition(format!("bad finite-difference step {h}")));
    }
    let base = step_signature(config, x, q)?;
    let eval = |theta: f64, phi: f64| -> Result<StepSignature> {
        let y = CollisionCoord::outgoing(x.obstacle, theta, phi);
        let sig = step_signature(config, &y, q)?;
        if sig.obstacle != base.obstacle || (base.is_horn && sig.entry_sign != base.entry_sign) {
            return Err(Error::StencilCrossesSingularity { obstacle: x.obstacle });
        }
        Ok(sig)
    };
    let to_stencil_err = |e: Error| match e {
        Error::StencilCrossesSingularity { obstacle } => Error::StencilCrossesSingularity { obstacle },
        _ => Error::StencilCrossesSingularity { obstacle: x.obstacle },
    };
    let tp = eval(x.theta + h, x.phi).map_err(to_stencil_err)?;
    let tm = eval(x.theta - h, x.phi).map_err(to_stencil_err)?;
    let pp = eval(x.theta, x.phi + h).map_err(to_stencil_err)?;
    let pm = eval(x.theta, x.phi - h).map_err(to_stencil_err)?;
    let half = 0.5 / h;
    // the arrival angle moves only a little across the stencil, so its wrapped
    // difference is safe; the winding shift can move by many turns and must be
    // differenced raw
    let dth = |a: &StepSignature, b: &StepSignature| {
        crate::table::wrap_pi(a.theta_flight - b.theta_flight) + (a.shift - b.shift)
    };
    Ok(TangentMatrix::new([
        [dth(&tp, &tm) * half, dth(&pp, &pm) * half],
        [(tp.phi - tm.phi) * half, (pp.phi - pm.phi) * half],
    ]))
}

struct StepSignature {
    obstacle: usize,
    is_horn: bool,
    /// Sign of the incoming angle at the target (head-on side marker).
    entry_sign: i8,
    /// Arrival boundary angle, before the reflection's winding shift.
    theta_flight: f64,
    /// Raw winding shift added by the reflection (0 at scatterers), kept
    /// unwrapped so stencil differences see every turn.
    shift: f64,
    phi: f64,
}

fn step_signature(config: &TableConfig, x: &CollisionCoord, q: &QuadratureSettings) -> Result<StepSignature> {
    let f = flight(config, x)?;
    let o = &config.obstacles[f.hit.obstacle];
    let phi_out = -f.hit.phi;
    let shift = match o.kind {
        ObstacleKind::Scatterer => 0.0,
        ObstacleKind::Horn { beta } => {
            if f.hit.phi == 0.0 {
                return Err(Error::Trapped(format!(
                    "head-on horn entry at obstacle {}",
                    f.hit.obstacle
                )));
            }
            let profile = HornProfile::new(beta, o.radius)?;
            delta_theta(&profile, phi_out, q)?
        }
    };
    Ok(StepSignature {
        obstacle: f.hit.obstacle,
        is_horn: o.is_horn(),
        entry_sign: if f.hit.phi >= 0.0 { 1 } else { -1 },
        theta_flight: f.hit.theta,
        shift,
        phi: phi_out,
    })
}

/// True iff the matrix maps the quadrant cones strictly inside one quadrant:
/// all four entries carry the same strict sign.
pub fn cone_check(m: &TangentMatrix) -> bool {
    let e = [m.m[0][0], m.m[0][1], m.m[1][0], m.m[1][1]];
    e.iter().all(|&x| x > 0.0) || e.iter().all(|&x| x < 0.0)
}

#[derive(Clone, Copy, Debug)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    pub stderr: f64,
    /// Times the orbit wandered into a singular neighborhood and was
    /// restarted from a fresh invariant-measure sample.
    pub restarts: u64,
    pub steps: u64,
}

const MAX_RESTARTS: u64 = 1000;

fn in_singular_neighborhood(config: &TableConfig, x: &CollisionCoord) -> bool {
    if x.phi.abs() > FRAC_PI_2 - SKIP_GRAZING_MARGIN {
        return true;
    }
    config.obstacles[x.obstacle].is_horn() && x.phi.abs() < SKIP_HEAD_ON_MARGIN
}

/// Top Lyapunov exponent of the collision map by renormalized vector growth
/// along an orbit. Near-singular points trigger a restart from a fresh
/// invariant-measure sample (deterministic in `seed`).
pub fn lyapunov(
    config: &TableConfig,
    x0: &CollisionCoord,
    n: u64,
    seed: u64,
    q: &QuadratureSettings,
) -> Result<LyapunovEstimate> {
    if n < 1000 {
        return Err(Error::Precondition(format!(
            "exponent estimation needs at least 1000 iterations, got {n}"
        )));
    }
    let mut logs = Vec::with_capacity(n as usize);
    let mut restarts = 0u64;
    let mut x = *x0;
    let mut v = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
    while (logs.len() as u64) < n {
        let mut need_restart = in_singular_neighborhood(config, &x);
        if !need_restart {
            match dmap_with_step(config, &x, q) {
                Ok((m, next)) => {
                    let w = m.apply(v);
                    let growth = (w[0] * w[0] + w[1] * w[1]).sqrt();
                    if growth.is_finite() && growth > 0.0 {
                        logs.push(growth.ln());
                        v = [w[0] / growth, w[1] / growth];
                        x = next;
                    } else {
                        need_restart = true;
                    }
                }
                Err(_) => need_restart = true,
            }
        }
        if need_restart {
            restarts += 1;
            if restarts > MAX_RESTARTS {
                return Err(Error::RestartsExhausted { restarts: restarts as u32 });
            }
            let mut rng = crate::rng::stream(seed, "lyapunov-restart", restarts);
            x = sample_mu(config, &mut rng);
            v = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        }
    }
    // batch means over the per-step growth sequence
    let batches = 50usize.min(logs.len() / 20).max(2);
    let bsize = logs.len() / batches;
    let used = bsize * batches;
    let lambda = logs[..used].iter().sum::<f64>() / used as f64;
    let mut var = 0.0;
    for b in 0..batches {
        let m = logs[b * bsize..(b + 1) * bsize].iter().sum::<f64>() / bsize as f64;
        var += (m - lambda) * (m - lambda);
    }
    var /= (batches - 1) as f64;
    let stderr = (var / batches as f64).sqrt();
    Ok(LyapunovEstimate { lambda, stderr, restarts, steps: used as u64 })
}

/// A curve transversal to the expanding direction, given as a sampled graph
/// θ = w(φ) with derivative samples, on an interval inside (0, π/2).
#[derive(Clone, Debug)]
pub struct UnstableCurve {
    phi: Vec<f64>,
    w: Vec<f64>,
    wp: Vec<f64>,
}

impl UnstableCurve {
    pub fn new(phi: Vec<f64>, w: Vec<f64>, wp: Vec<f64>) -> Result<Self> {
        if phi.len() < 2 || phi.len() != w.len() || phi.len() != wp.len() {
            return Err(Error::Precondition("curve needs matching sample arrays, length >= 2".into()));
        }
        if !(phi[0] > 0.0 && *phi.last().unwrap() < FRAC_PI_2) {
            return Err(Error::Precondition("curve interval must sit inside (0, pi/2)".into()));
        }
        if phi.windows(2).any(|wd| wd[1] <= wd[0]) {
            return Err(Error::Precondition("curve samples must be strictly increasing in phi".into()));
        }
        if w.iter().chain(wp.iter()).any(|x| !x.is_finite()) || wp.iter().any(|x| x.abs() > 1e6) {
            return Err(Error::Precondition("curve slope must stay bounded".into()));
        }
        Ok(UnstableCurve { phi, w, wp })
    }

    /// Constant-slope graph on [a, b].
    pub fn straight(a: f64, b: f64, theta0: f64, slope: f64, samples: usize) -> Result<Self> {
        let n = samples.max(2);
        let phi: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let w = phi.iter().map(|&p| theta0 + slope * (p - a)).collect();
        let wp = vec![slope; n];
        UnstableCurve::new(phi, w, wp)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.phi[0], *self.phi.last().unwrap())
    }

    fn locate(&self, p: f64) -> usize {
        match self.phi.binary_search_by(|a| a.partial_cmp(&p).unwrap()) {
            Ok(i) => i.min(self.phi.len() - 2),
            Err(i) => i.clamp(1, self.phi.len() - 1) - 1,
        }
    }

    pub fn slope_at(&self, p: f64) -> f64 {
        let i = self.locate(p);
        let t = (p - self.phi[i]) / (self.phi[i + 1] - self.phi[i]);
        self.wp[i] + (self.wp[i + 1] - self.wp[i]) * t.clamp(0.0, 1.0)
    }

    pub fn theta_at(&self, p: f64) -> f64 {
        let i = self.locate(p);
        let t = (p - self.phi[i]) / (self.phi[i + 1] - self.phi[i]);
        self.w[i] + (self.w[i + 1] - self.w[i]) * t.clamp(0.0, 1.0)
    }
}

fn strip_index(p: &HornProfile, phi: f64, q: &QuadratureSettings) -> Result<u64> {
    let d = delta_theta(p, phi, q)?.abs();
    Ok((d / (2.0 * std::f64::consts::PI)).floor() as u64)
}

/// Distortion of the horn rotation along an unstable curve.
///
/// The rotation acts as the shear (θ, φ) ↦ (θ + Δθ(φ), φ), so its arc-length
/// Jacobian along the graph is J(φ) = √(1+(w'+κ)²)/√(1+w'²). Returns
/// (|log J(y)/J(x)|, image arc length between x and y); the distortion bound
/// says the first is controlled by the second, with a constant that is only
/// estimated per configuration, never asserted globally.
pub fn distortion_check(
    p: &HornProfile,
    curve: &UnstableCurve,
    x: f64,
    y: f64,
    q: &QuadratureSettings,
) -> Result<(f64, f64)> {
    let (a, b) = curve.interval();
    if !(a..=b).contains(&x) || !(a..=b).contains(&y) {
        return Err(Error::Precondition("evaluation points must lie on the curve".into()));
    }
    if strip_index(p, a, q)? != strip_index(p, b, q)? {
        return Err(Error::Precondition("curve leaves its winding strip".into()));
    }
    if x == y {
        return Ok((0.0, 0.0));
    }
    let jac = |phi: f64| -> Result<f64> {
        let wp = curve.slope_at(phi);
        let k = kappa(p, phi, q)?;
        Ok(((1.0 + (wp + k) * (wp + k)) / (1.0 + wp * wp)).sqrt())
    };
    let lhs = (jac(y)?.ln() - jac(x)?.ln()).abs();
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    // image arc length; the integrand is smooth inside one strip
    let n = 64;
    let mut rhs = 0.0;
    let mut prev = {
        let wp = curve.slope_at(lo);
        let k = kappa(p, lo, q)?;
        (1.0 + (wp + k) * (wp + k)).sqrt()
    };
    let mut prev_phi = lo;
    for i in 1..=n {
        let phi = lo + (hi - lo) * i as f64 / n as f64;
        let wp = curve.slope_at(phi);
        let k = kappa(p, phi, q)?;
        let val = (1.0 + (wp + k) * (wp + k)).sqrt();
        rhs += 0.5 * (val + prev) * (phi - prev_phi);
        prev = val;
        prev_phi = phi;
    }
    Ok((lhs, rhs))
}

#[derive(Clone, Debug)]
pub struct ConditionItem {
    pub index: u8,
    pub label: String,
    /// The measured quantity the verdict rests on.
    pub witness: f64,
    /// The value it is compared against.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ConditionsReport {
    pub items: Vec<ConditionItem>,
}

/// Richardson-extrapolated central difference of κ.
fn kappa_prime(p: &HornProfile, phi: f64, q: &QuadratureSettings) -> Result<f64> {
    let mut h = 1e-5 * phi.max(1e-3);
    let head = (FRAC_PI_2 - phi) * 0.5;
    if h > head {
        h = head;
    }
    let d = |hh: f64| -> Result<f64> {
        Ok((kappa(p, phi + hh, q)? - kappa(p, phi - hh, q)?) / (2.0 * hh))
    };
    let d1 = d(h)?;
    let d2 = d(h * 0.5)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Grid survey of the expansion and regularity conditions the hyperbolicity
/// analysis rests on. Always produces a report; each item carries its
/// witnessing numbers and a verdict.
pub fn conditions_report(
    p: &HornProfile,
    config: &TableConfig,
    q: &QuadratureSettings,
) -> Result<ConditionsReport> {
    // grids approaching both the head-on and the grazing ends
    let mut grid: Vec<f64> = Vec::new();
    for i in 0..30 {
        grid.push(1e-4 * (0.1f64.recip().powf(i as f64 / 29.0 * 3.0)));
    }
    for i in 0..30 {
        grid.push(0.1 + (1.47 - 0.1) * i as f64 / 29.0);
    }
    for i in 0..30 {
        grid.push(FRAC_PI_2 - 1e-6 * 10f64.powf(5.0 * (29 - i) as f64 / 29.0));
    }
    grid.retain(|&x| x > 0.0 && x < FRAC_PI_2);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut kappas = Vec::with_capacity(grid.len());
    for &phi in &grid {
        kappas.push(kappa(p, phi, q)?);
    }

    let mut items = Vec::new();

    // 1: expansion margin
    let inf_margin = kappas.iter().fold(f64::INFINITY, |acc, &k| acc.min((2.0 + k).abs()));
    items.push(ConditionItem {
        index: 1,
        label: "expansion margin inf |2 + kappa| stays positive".into(),
        witness: inf_margin,
        bound: 0.0,
        pass: inf_margin > 0.0,
    });

    // 2: flight-time threshold; omega = (2 + kappa)/cos phi is negative, so
    // the threshold is non-positive and any flight time clears it
    let mut sup_threshold = f64::NEG_INFINITY;
    for (&phi, &k) in grid.iter().zip(&kappas) {
        let omega = (2.0 + k) / phi.cos();
        sup_threshold = sup_threshold.max(-2.0 * p.r0() * k / omega);
    }
    let tau_min = crate::table::validate_table(config)?.tau_min_sample;
    items.push(ConditionItem {
        index: 2,
        label: "shortest flight exceeds the recollision threshold".into(),
        witness: sup_threshold,
        bound: tau_min,
        pass: tau_min > sup_threshold,
    });

    // 3: boundedness of kappa at the grazing end (local regularity there;
    // the head-on end is genuinely singular and excluded)
    let sup_near_grazing = grid
        .iter()
        .zip(&kappas)
        .filter(|(&phi, _)| phi > 1.4)
        .fold(0.0f64, |acc, (_, &k)| acc.max(k.abs()));
    items.push(ConditionItem {
        index: 3,
        label: "winding derivative stays bounded near grazing".into(),
        witness: sup_near_grazing,
        bound: 1e3,
        pass: sup_near_grazing.is_finite() && sup_near_grazing < 1e3,
    });

    // 4: second-derivative sanity on the interior grid
    let mut sup_kp = 0.0f64;
    let mut all_finite = true;
    for &phi in grid.iter().filter(|&&x| (1e-4..1.5).contains(&x)) {
        let kp = kappa_prime(p, phi, q)?;
        all_finite &= kp.is_finite();
        sup_kp = sup_kp.max(kp.abs());
    }
    items.push(ConditionItem {
        index: 4,
        label: "kappa is differentiable on the sampled interior".into(),
        witness: sup_kp,
        bound: f64::INFINITY,
        pass: all_finite,
    });

    // 5: derivative-to-margin ratio on the head-on approach
    let mut sup_ratio = 0.0f64;
    for &phi in grid.iter().filter(|&&x| (1e-4..=0.1).contains(&x)) {
        let kp = kappa_prime(p, phi, q)?;
        let k = kappa(p, phi, q)?;
        let margin = (2.0 + k).abs();
        sup_ratio = sup_ratio.max(kp.abs() / (margin * margin * margin));
    }
    items.push(ConditionItem {
        index: 5,
        label: "kappa' controlled by the cubed expansion margin near head-on".into(),
        witness: sup_ratio,
        bound: f64::INFINITY,
        pass: sup_ratio.is_finite(),
    });

    // 6: one-sided monotonicity of omega approaching head-on
    let mut monotone = true;
    let mut worst = 0.0f64;
    let small: Vec<(f64, f64)> = grid
        .iter()
        .zip(&kappas)
        .filter(|(&phi, _)| phi <= 1e-2)
        .map(|(&phi, &k)| (phi, (2.0 + k) / phi.cos()))
        .collect();
    for wd in small.windows(2) {
        // omega plunges to -inf at head-on, so it must increase with phi
        if wd[1].1 <= wd[0].1 {
            monotone = false;
            worst = worst.max(wd[0].1 - wd[1].1);
        }
    }
    items.push(ConditionItem {
        index: 6,
        label: "omega is monotone on a one-sided neighborhood of head-on".into(),
        witness: worst,
        bound: 0.0,
        pass: monotone && small.len() >= 10,
    });

    Ok(ConditionsReport { items })
}

#[derive(Clone, Debug)]
pub struct HeadOnCurve {
    /// (θ, φ) outgoing coordinates whose forward trajectory meets the target
    /// obstacle exactly head-on.
    pub points: Vec<(f64, f64)>,
    /// θ grid values where no head-on direction was bracketed.
    pub gaps: Vec<f64>,
}

const HEAD_ON_CHAIN: usize = 4;

/// Signed incidence angle at the first arrival on `target` within a short
/// collision chain from the outgoing point, with the chain length.
fn incidence_at_target(
    config: &TableConfig,
    start: &CollisionCoord,
    target: usize,
    q: &QuadratureSettings,
) -> Option<(f64, usize)> {
    let mut x = *start;
    for hop in 0..HEAD_ON_CHAIN {
        let f = flight(config, &x).ok()?;
        if f.hit.obstacle == target {
            return Some((f.hit.phi, hop + 1));
        }
        x = crate::table::reflect(config, &f.hit, q).ok()?;
    }
    None
}

/// Trace the head-on singularity curve of a horn against a designated
/// opposite obstacle: for each θ on the grid, bisect in the outgoing angle
/// for a trajectory whose arrival at the opposite obstacle is head-on.
pub fn head_on_curve(
    config: &TableConfig,
    horn_j: usize,
    opposite: usize,
    theta_grid: &[f64],
    q: &QuadratureSettings,
) -> Result<HeadOnCurve> {
    let o = config
        .obstacles
        .get(horn_j)
        .ok_or_else(|| Error::Precondition(format!("no obstacle {horn_j}")))?;
    if !o.is_horn() {
        return Err(Error::Precondition(format!("obstacle {horn_j} is not a horn")));
    }
    if opposite >= config.obstacles.len() || opposite == horn_j {
        return Err(Error::Precondition(format!("bad opposite obstacle {opposite}")));
    }

    let scan = 128usize;
    let lim = FRAC_PI_2 - 1e-6;
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for &theta in theta_grid {
        let probe = |phi: f64| {
            incidence_at_target(config, &CollisionCoord::outgoing(horn_j, theta, phi), opposite, q)
        };
        let mut found = 0usize;
        let mut prev: Option<(f64, f64, usize)> = None;
        for i in 0..=scan {
            let phi = -lim + 2.0 * lim * i as f64 / scan as f64;
            let cur = probe(phi).map(|(inc, hops)| (phi, inc, hops));
            if let (Some((pa, ia, ha)), Some((pb, ib, hb))) = (prev, cur) {
                if ha == hb && (ia == 0.0 || ia.signum() != ib.signum()) {
                    if let Some((phi_star, residual)) = bisect_head_on(&probe, pa, ia, pb, ib, ha) {
                        if residual.abs() < 1e-10 {
                            points.push((theta, phi_star));
                            found += 1;
                        }
                    }
                }
            }
            prev = cur;
        }
        if found == 0 {
            gaps.push(theta);
        }
    }
    Ok(HeadOnCurve { points, gaps })
}

fn bisect_head_on(
    probe: &impl Fn(f64) -> Option<(f64, usize)>,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    _fb: f64,
    hops: usize,
) -> Option<(f64, f64)> {
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let (fm, hm) = probe(m)?;
        if hm != hops {
            return None;
        }
        if fm == 0.0 {
            return Some((m, 0.0));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    let (fm, _) = probe(m)?;
    Some((m, fm))
}
