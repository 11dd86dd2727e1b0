//! Table geometry and the collision map.
//!
//! Phase points live on obstacle boundaries in (θ, φ) coordinates: θ is the
//! boundary position, counterclockwise from the +x axis of the obstacle
//! center; φ the angle against the outward normal, counterclockwise
//! positive, so the outgoing direction is (cos(θ+φ), sin(θ+φ)). Incoming
//! angles are measured so that the specular law reads φ⁺ = −φ⁻.
//!
//! Free flights are traced geometrically: exact ray/circle quadratics, with
//! lattice unfolding on the torus (a grid walk that tests the 3×3 block of
//! translated obstacle copies around each visited cell) and specular wall
//! reflections in rectangle mode (walls are not phase-space collisions).

use crate::horn::{delta_theta, tmax, HornProfile};
use crate::quad::QuadratureSettings;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

const TAU: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Torus { width: f64, height: f64 },
    Rectangle { width: f64, height: f64 },
}

impl Domain {
    pub fn width(&self) -> f64 {
        match *self {
            Domain::Torus { width, .. } | Domain::Rectangle { width, .. } => width,
        }
    }

    pub fn height(&self) -> f64 {
        match *self {
            Domain::Torus { height, .. } | Domain::Rectangle { height, .. } => height,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObstacleKind {
    Scatterer,
    Horn { beta: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(flatten)]
    pub kind: ObstacleKind,
}

impl Obstacle {
    pub fn is_horn(&self) -> bool {
        matches!(self.kind, ObstacleKind::Horn { .. })
    }

    /// The trumpet profile glued into this hole, if it is a horn.
    pub fn profile(&self) -> Option<Result<HornProfile>> {
        match self.kind {
            ObstacleKind::Horn { beta } => Some(HornProfile::new(beta, self.radius)),
            ObstacleKind::Scatterer => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TableConfig {
    #[serde(flatten)]
    pub domain: Domain,
    pub obstacles: Vec<Obstacle>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Incoming,
    Outgoing,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CollisionCoord {
    pub obstacle: usize,
    /// Boundary position in [0, 2π).
    pub theta: f64,
    /// Angle against the outward normal, in [-π/2, π/2].
    pub phi: f64,
    pub side: Side,
}

impl CollisionCoord {
    pub fn outgoing(obstacle: usize, theta: f64, phi: f64) -> Self {
        CollisionCoord { obstacle, theta: wrap_theta(theta), phi, side: Side::Outgoing }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlightResult {
    pub hit: CollisionCoord,
    /// Flight time; speed is 1, so this is also the path length.
    pub tau: f64,
    /// Wall reflections along the way (always 0 on the torus).
    pub wall_bounces: u32,
}

/// One application of the collision map: outgoing coordinate to outgoing
/// coordinate, with the flight time and the horn sojourn (0 at scatterers).
#[derive(Clone, Copy, Debug)]
pub struct MapStep {
    pub out: CollisionCoord,
    pub tau: f64,
    pub sojourn: f64,
    pub wall_bounces: u32,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    /// Smallest center gap minus radius sum over obstacle pairs (and
    /// translated copies on the torus); positive means disjoint.
    pub min_gap: f64,
    pub tau_min_sample: f64,
    pub tau_max_sample: f64,
    pub samples: usize,
    /// Sampled flights that exceeded the length cap without hitting anything.
    pub horizon_warnings: usize,
}

pub fn wrap_theta(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y == TAU {
        0.0
    } else {
        y
    }
}

/// Wrap an angle difference into (-π, π].
pub fn wrap_pi(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

fn boundary_point(o: &Obstacle, theta: f64) -> [f64; 2] {
    [o.center[0] + o.radius * theta.cos(), o.center[1] + o.radius * theta.sin()]
}

fn length_cap(domain: &Domain) -> f64 {
    100.0 * domain.width().max(domain.height())
}

/// Structural checks plus a sampled flight survey.
///
/// Disjointness (including torus translates) is decided analytically and is
/// a hard error; the horizon can only be surveyed, so flights that run into
/// the length cap are reported as warnings, not errors.
pub fn validate_table(config: &TableConfig) -> Result<ValidationReport> {
    if config.obstacles.is_empty() {
        return Err(Error::InvalidTable("at least one obstacle is required".into()));
    }
    let w = config.domain.width();
    let h = config.domain.height();
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(Error::InvalidTable(format!("bad domain size {w} x {h}")));
    }
    for (i, o) in config.obstacles.iter().enumerate() {
        if !(o.radius > 0.0 && o.radius.is_finite()) {
            return Err(Error::InvalidTable(format!("obstacle {i}: radius {}", o.radius)));
        }
        if let ObstacleKind::Horn { beta } = o.kind {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidTable(format!("obstacle {i}: horn exponent {beta}")));
            }
        }
        match config.domain {
            Domain::Torus { .. } => {
                // must fit within one period (also keeps every circle inside
                // the 3x3 neighborhood searched by the flight walk)
                if 2.0 * o.radius >= w.min(h) {
                    return Err(Error::InvalidTable(format!(
                        "obstacle {i}: diameter {} does not fit in one period of {w} x {h}",
                        2.0 * o.radius
                    )));
                }
                let [cx, cy] = o.center;
                if !(0.0..w).contains(&cx) || !(0.0..h).contains(&cy) {
                    return Err(Error::InvalidTable(format!(
                        "obstacle {i}: center ({cx}, {cy}) outside the fundamental domain"
                    )));
                }
            }
            Domain::Rectangle { .. } => {
                let [cx, cy] = o.center;
                let margin = cx.min(w - cx).min(cy).min(h - cy);
                if margin <= o.radius {
                    return Err(Error::InvalidTable(format!(
                        "obstacle {i}: circle touches or crosses the rectangle walls"
                    )));
                }
            }
        }
    }

    let mut min_gap = f64::INFINITY;
    let translates: &[[f64; 2]] = match config.domain {
        Domain::Torus { .. } => &[
            [-1.0, -1.0], [-1.0, 0.0], [-1.0, 1.0],
            [0.0, -1.0], [0.0, 0.0], [0.0, 1.0],
            [1.0, -1.0], [1.0, 0.0], [1.0, 1.0],
        ],
        Domain::Rectangle { .. } => &[[0.0, 0.0]],
    };
    for i in 0..config.obstacles.len() {
        for j in 0..config.obstacles.len() {
            for t in translates {
                if i == j && t == &[0.0, 0.0] {
                    continue;
                }
                let a = &config.obstacles[i];
                let b = &config.obstacles[j];
                let dx = a.center[0] - b.center[0] - t[0] * w;
                let dy = a.center[1] - b.center[1] - t[1] * h;
                let gap = (dx * dx + dy * dy).sqrt() - a.radius - b.radius;
                min_gap = min_gap.min(gap);
            }
        }
    }
    if min_gap <= 0.0 {
        return Err(Error::InvalidTable(format!(
            "obstacle closures are not pairwise disjoint (worst gap {min_gap:.6})"
        )));
    }

    // flight survey on an outgoing grid
    let mut tau_min = f64::INFINITY;
    let mut tau_max: f64 = 0.0;
    let mut horizon_warnings = 0;
    let mut samples = 0;
    let n_theta = 72;
    let n_phi = 17;
    for (idx, _) in config.obstacles.iter().enumerate() {
        for a in 0..n_theta {
            let theta = TAU * a as f64 / n_theta as f64;
            for b in 0..n_phi {
                let phi = -1.45 + 2.9 * b as f64 / (n_phi - 1) as f64;
                samples += 1;
                match flight(config, &CollisionCoord::outgoing(idx, theta, phi)) {
                    Ok(f) => {
                        tau_min = tau_min.min(f.tau);
                        tau_max = tau_max.max(f.tau);
                    }
                    Err(Error::Horizon { .. }) => horizon_warnings += 1,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(ValidationReport { min_gap, tau_min_sample: tau_min, tau_max_sample: tau_max, samples, horizon_warnings })
}

/// Smallest positive root of |p + t d - c|² = r², if any; near-tangential
/// discriminants count as misses.
fn ray_circle(p: [f64; 2], d: [f64; 2], c: [f64; 2], r: f64, t_min: f64) -> Option<f64> {
    let ox = p[0] - c[0];
    let oy = p[1] - c[1];
    let b = -(ox * d[0] + oy * d[1]);
    let cc = ox * ox + oy * oy - r * r;
    let disc = b * b - cc;
    if disc < 1e-14 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = b - sq;
    if t0 > t_min {
        return Some(t0);
    }
    let t1 = b + sq;
    // only relevant when the start point sits inside the circle, which valid
    // configurations exclude; kept for numerical robustness
    if t1 > t_min && cc < 0.0 {
        return Some(t1);
    }
    None
}

/// First intersection of the outgoing ray with any obstacle boundary.
pub fn flight(config: &TableConfig, out: &CollisionCoord) -> Result<FlightResult> {
    if out.side != Side::Outgoing {
        return Err(Error::Precondition("flight requires an outgoing coordinate".into()));
    }
    if out.obstacle >= config.obstacles.len() {
        return Err(Error::Precondition(format!("no obstacle {}", out.obstacle)));
    }
    if out.phi.abs() > FRAC_PI_2 {
        return Err(Error::Domain(format!("outgoing angle {} beyond grazing", out.phi)));
    }
    let src = &config.obstacles[out.obstacle];
    let p = boundary_point(src, out.theta);
    let dir = [(out.theta + out.phi).cos(), (out.theta + out.phi).sin()];
    match config.domain {
        Domain::Torus { width, height } => flight_torus(config, p, dir, width, height),
        Domain::Rectangle { width, height } => flight_rectangle(config, p, dir, width, height),
    }
}

fn incoming_coord(
    config: &TableConfig,
    obstacle: usize,
    center: [f64; 2],
    hit_point: [f64; 2],
    v: [f64; 2],
) -> CollisionCoord {
    let o = &config.obstacles[obstacle];
    let theta = wrap_theta((hit_point[1] - center[1]).atan2(hit_point[0] - center[0]));
    let n = [(hit_point[0] - center[0]) / o.radius, (hit_point[1] - center[1]) / o.radius];
    let t = [-n[1], n[0]];
    let phi = (-(v[0] * t[0] + v[1] * t[1])).atan2(-(v[0] * n[0] + v[1] * n[1]));
    CollisionCoord { obstacle, theta, phi, side: Side::Incoming }
}

fn flight_torus(
    config: &TableConfig,
    p: [f64; 2],
    d: [f64; 2],
    w: f64,
    h: f64,
) -> Result<FlightResult> {
    let cap = length_cap(&config.domain);
    let t_eps = 1e-12 * w.max(h);

    // grid walk over fundamental-domain cells in order of entry time
    let mut cell = [(p[0] / w).floor() as i64, (p[1] / h).floor() as i64];
    let step = [d[0].signum() as i64, d[1].signum() as i64];
    let inv = |x: f64| if x != 0.0 { 1.0 / x.abs() } else { f64::INFINITY };
    let t_delta = [w * inv(d[0]), h * inv(d[1])];
    let mut t_next = [
        if d[0] > 0.0 {
            ((cell[0] + 1) as f64 * w - p[0]) / d[0]
        } else if d[0] < 0.0 {
            (cell[0] as f64 * w - p[0]) / d[0]
        } else {
            f64::INFINITY
        },
        if d[1] > 0.0 {
            ((cell[1] + 1) as f64 * h - p[1]) / d[1]
        } else if d[1] < 0.0 {
            (cell[1] as f64 * h - p[1]) / d[1]
        } else {
            f64::INFINITY
        },
    ];

    loop {
        let t_out = t_next[0].min(t_next[1]);
        // obstacles whose hit point could lie in this cell sit in the 3x3
        // block of translated copies around it (radius < one period)
        let mut best: Option<(f64, usize, [f64; 2])> = None;
        for (k, o) in config.obstacles.iter().enumerate() {
            for oi in -1..=1 {
                for oj in -1..=1 {
                    let c = [
                        o.center[0] + (cell[0] + oi) as f64 * w,
                        o.center[1] + (cell[1] + oj) as f64 * h,
                    ];
                    if let Some(t) = ray_circle(p, d, c, o.radius, t_eps) {
                        if t <= t_out && best.map_or(true, |(bt, _, _)| t < bt) {
                            best = Some((t, k, c));
                        }
                    }
                }
            }
        }
        if let Some((t, k, c)) = best {
            let hit_point = [p[0] + t * d[0], p[1] + t * d[1]];
            let hit = incoming_coord(config, k, c, hit_point, d);
            return Ok(FlightResult { hit, tau: t, wall_bounces: 0 });
        }
        if t_out > cap {
            return Err(Error::Horizon { cap });
        }
        if t_next[0] <= t_next[1] {
            cell[0] += step[0];
            t_next[0] += t_delta[0];
        } else {
            cell[1] += step[1];
            t_next[1] += t_delta[1];
        }
    }
}

fn flight_rectangle(
    config: &TableConfig,
    start: [f64; 2],
    dir: [f64; 2],
    w: f64,
    h: f64,
) -> Result<FlightResult> {
    let cap = length_cap(&config.domain);
    let t_eps = 1e-12 * w.max(h);
    let mut p = start;
    let mut d = dir;
    let mut travelled = 0.0;
    let mut wall_bounces = 0u32;

    while travelled < cap {
        // time to the nearest wall along the current segment
        let tx = if d[0] > 0.0 {
            (w - p[0]) / d[0]
        } else if d[0] < 0.0 {
            -p[0] / d[0]
        } else {
            f64::INFINITY
        };
        let ty = if d[1] > 0.0 {
            (h - p[1]) / d[1]
        } else if d[1] < 0.0 {
            -p[1] / d[1]
        } else {
            f64::INFINITY
        };
        let t_wall = tx.min(ty);

        let mut best: Option<(f64, usize)> = None;
        for (k, o) in config.obstacles.iter().enumerate() {
            if let Some(t) = ray_circle(p, d, o.center, o.radius, t_eps) {
                if t <= t_wall && best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, k));
                }
            }
        }
        if let Some((t, k)) = best {
            let hit_point = [p[0] + t * d[0], p[1] + t * d[1]];
            let o = &config.obstacles[k];
            let hit = incoming_coord(config, k, o.center, hit_point, d);
            return Ok(FlightResult { hit, tau: travelled + t, wall_bounces });
        }

        // specular wall bounce (both components at a corner)
        p = [p[0] + t_wall * d[0], p[1] + t_wall * d[1]];
        if (tx - t_wall).abs() < 1e-15 {
            d[0] = -d[0];
            p[0] = p[0].clamp(0.0, w);
        }
        if (ty - t_wall).abs() < 1e-15 {
            d[1] = -d[1];
            p[1] = p[1].clamp(0.0, h);
        }
        travelled += t_wall;
        wall_bounces += 1;
    }
    Err(Error::Horizon { cap })
}

/// Reflection law at the hit obstacle: specular at scatterers, specular plus
/// the excursion rotation at horns.
pub fn reflect(
    config: &TableConfig,
    inc: &CollisionCoord,
    q: &QuadratureSettings,
) -> Result<CollisionCoord> {
    if inc.side != Side::Incoming {
        return Err(Error::Precondition("reflect requires an incoming coordinate".into()));
    }
    let o = &config.obstacles[inc.obstacle];
    let phi_out = -inc.phi;
    match o.kind {
        ObstacleKind::Scatterer => {
            Ok(CollisionCoord { obstacle: inc.obstacle, theta: inc.theta, phi: phi_out, side: Side::Outgoing })
        }
        ObstacleKind::Horn { beta } => {
            if inc.phi == 0.0 {
                return Err(Error::Trapped(format!(
                    "head-on horn entry at obstacle {} (theta = {})",
                    inc.obstacle, inc.theta
                )));
            }
            let profile = HornProfile::new(beta, o.radius)?;
            let shift = delta_theta(&profile, phi_out, q)?;
            Ok(CollisionCoord {
                obstacle: inc.obstacle,
                theta: wrap_theta(inc.theta + shift),
                phi: phi_out,
                side: Side::Outgoing,
            })
        }
    }
}

/// The collision map: flight, then reflection, with the horn sojourn time.
pub fn billiard_map(
    config: &TableConfig,
    x: &CollisionCoord,
    q: &QuadratureSettings,
) -> Result<MapStep> {
    let f = flight(config, x)?;
    let out = reflect(config, &f.hit, q)?;
    let o = &config.obstacles[f.hit.obstacle];
    let sojourn = match o.kind {
        ObstacleKind::Scatterer => 0.0,
        ObstacleKind::Horn { beta } => {
            let profile = HornProfile::new(beta, o.radius)?;
            if out.phi.abs() >= FRAC_PI_2 {
                0.0
            } else {
                2.0 * tmax(&profile, out.phi, q)?
            }
        }
    };
    Ok(MapStep { out, tau: f.tau, sojourn, wall_bounces: f.wall_bounces })
}
