//! Monodromy of lifted loops over boundaries of Fatou components, the
//! resulting Julia-set topology labels, component types of parameters in
//! `𝒟`, and the Jonsson example.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{classify_cdm, CdmLabel};
use crate::dynamics::{fiber_orbit_along, BaseQuadratic, SkewParams, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::infinity::{pi_inverse, ExtCx, ProjPoint};
use crate::julia::{fatou_component_id, julia_samples, FatouLabel, DEFAULT_JULIA_SAMPLES};
use crate::Cx;

pub const MAX_LIFT_STEPS: usize = 1 << 20;
/// Default base resolution of the continuation, steps per unit of `t`.
pub const DEFAULT_LIFT_STEPS: usize = 256;
/// Radicands below this modulus count as hitting a critical value.
pub const CRITICAL_TOL: f64 = 1e-12;
const LOOP_SAMPLES: usize = 256;

/// A closed curve `t ↦ (γ_V(t), γ_w(t))`, `t ∈ [0, 1]`, whose base part runs
/// `turns` times around the circle `center + radius·e^{iθ}` (the boundary of
/// `V`). `γ_w` is sampled uniformly in `t` and interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopParam {
    pub center: Cx,
    pub radius: f64,
    pub turns: u32,
    pub w_samples: Vec<Cx>,
    /// The component whose boundary carries the lift.
    pub component_u: FatouLabel,
    /// The component whose boundary carries this loop.
    pub component_v: FatouLabel,
    /// Degree of `p : U → V`.
    pub degree_delta: u32,
}

impl LoopParam {
    /// `{(e^{2πit}, w0)}` over the unit circle for `p = z²`.
    pub fn unit_circle(w0: Cx) -> Self {
        Self {
            center: Cx::new(0.0, 0.0),
            radius: 1.0,
            turns: 1,
            w_samples: vec![w0; LOOP_SAMPLES],
            component_u: FatouLabel::Bounded(0),
            component_v: FatouLabel::Bounded(0),
            degree_delta: 2,
        }
    }

    pub fn base_at(&self, t: f64) -> Cx {
        self.center + Cx::from_polar(self.radius, TAU * self.turns as f64 * t)
    }

    pub fn w_at(&self, t: f64) -> Cx {
        let n = self.w_samples.len();
        let x = t.rem_euclid(1.0) * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        let f = x - k as f64;
        self.w_samples[k] * (1.0 - f) + self.w_samples[(k + 1) % n] * f
    }

    /// `(t, γ_V(t), γ_w(t))` at the sample nodes.
    pub fn samples(&self) -> Vec<(f64, Cx, Cx)> {
        let n = self.w_samples.len();
        (0..n)
            .map(|k| {
                let t = k as f64 / n as f64;
                (t, self.base_at(t), self.w_samples[k])
            })
            .collect()
    }

    /// `max |γ_w| < r(F)`.
    pub fn admissible(&self, r_f: f64) -> bool {
        self.w_samples.iter().all(|w| w.norm() < r_f)
    }
}

/// `r(F) = min_{z ∈ J_p} |ρ(z)|` over Julia samples.
pub fn r_f(params: &SkewParams, julia: &[Cx]) -> Result<f64> {
    if julia.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(julia
        .iter()
        .map(|&z| params.rho(z).norm())
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftResult {
    pub num_components: u32,
    /// Degree of the projection of one component onto `∂U`.
    pub winding_over_boundary: u32,
    /// Turns of `w_t` around 0 over one component, which is the linking
    /// number of the two components when there are two.
    pub linking: Option<i64>,
    pub monodromy_sign: i32,
    pub turns_of_w: i64,
    /// Turns of the radicand over `t ∈ [0, 1]`.
    pub turns_of_radicand: i64,
    pub min_radicand: f64,
    pub steps: usize,
    /// One component, as `(z, w)` samples uniform in its parameter.
    pub component: Vec<(Cx, Cx)>,
}

fn nearest_root(prev: Cx, r: Cx) -> Cx {
    let s = r.sqrt();
    if (s - prev).norm() <= (s + prev).norm() {
        s
    } else {
        -s
    }
}

fn angle_step(a: Cx, b: Cx) -> f64 {
    (b / a).arg()
}

struct Continuation {
    z: Cx,
    w: Cx,
    w_arg: f64,
    r_arg: f64,
    min_r: f64,
    steps: usize,
    trace: Vec<(f64, Cx, Cx)>,
}

/// Lifts `t ↦ γ(δt)` through `F` over `t ∈ [0, laps]`: `z_t² + d = γ_V(δt)`
/// and `w_t² = γ_w(δt) − ρ(z_t)`, both continued by nearest square roots.
fn continue_lift(params: &SkewParams, lp: &LoopParam, z0: Cx, w0: Cx, laps: u32, steps: usize) -> Result<Continuation> {
    let d = params.base.d;
    let delta = lp.degree_delta as f64;
    let radicand_z = |t: f64| lp.base_at(delta * t) - d;
    let radicand_w = |t: f64, z: Cx| lp.w_at(delta * t) - params.rho(z);
    let mut c = Continuation {
        z: z0,
        w: w0,
        w_arg: 0.0,
        r_arg: 0.0,
        min_r: f64::INFINITY,
        steps: 0,
        trace: vec![(0.0, z0, w0)],
    };
    let mut t = 0.0;
    let h_max = 1.0 / steps as f64;
    let mut h = h_max / 4.0;
    let end = laps as f64;
    let mut rw = radicand_w(0.0, z0);
    let mut rz = radicand_z(0.0);
    while t < end {
        let tn = (t + h).min(end);
        let rzn = radicand_z(tn);
        let zn = nearest_root(c.z, rzn);
        let rwn = radicand_w(tn, zn);
        let m = rwn.norm();
        if m < CRITICAL_TOL * (1.0 + lp.radius) {
            return Err(Error::CriticalIntersection { t: tn, min_modulus: m });
        }
        let dz = angle_step(rz, rzn).abs();
        let dw = angle_step(rw, rwn).abs();
        if dz >= PI / 2.0 || dw >= PI / 2.0 || (zn - c.z).norm() > 0.1 * lp.radius.max(1e-3) {
            h /= 2.0;
            if h < 1e-15 {
                return Err(Error::CriticalIntersection { t, min_modulus: m });
            }
            continue;
        }
        let wn = nearest_root(c.w, rwn);
        c.r_arg += angle_step(rw, rwn);
        c.w_arg += angle_step(c.w, wn);
        c.min_r = c.min_r.min(m);
        c.z = zn;
        c.w = wn;
        rz = rzn;
        rw = rwn;
        t = tn;
        c.steps += 1;
        c.trace.push((t, zn, wn));
        if c.steps > MAX_LIFT_STEPS {
            return Err(Error::CriticalIntersection {
                t,
                min_modulus: c.min_r,
            });
        }
        if dz < PI / 16.0 && dw < PI / 16.0 {
            h *= 1.5;
        }
        h = h.min(h_max);
    }
    Ok(c)
}

fn resample(trace: &[(f64, Cx, Cx)], span: f64, n: usize) -> Vec<(Cx, Cx)> {
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let t = span * i as f64 / n as f64;
        while k + 1 < trace.len() - 1 && trace[k + 1].0 <= t {
            k += 1;
        }
        let (t0, z0, w0) = trace[k];
        let (t1, z1, w1) = trace[(k + 1).min(trace.len() - 1)];
        let f = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        out.push((z0 + (z1 - z0) * f, w0 + (w1 - w0) * f));
    }
    out
}

/// Preimage of an admissible loop over the boundary of `U`.
///
/// `steps` is the base resolution: no continuation step is longer than
/// `1/steps` in `t`. At most `2^20` steps are taken in total.
pub fn lift_curve(params: &SkewParams, lp: &LoopParam, steps: usize) -> Result<LiftResult> {
    if lp.w_samples.is_empty() || !(1..=2).contains(&lp.degree_delta) {
        return Err(Error::InvalidArgument("loop needs samples and δ ∈ {1, 2}".into()));
    }
    let steps = steps.clamp(1, MAX_LIFT_STEPS);
    let d = params.base.d;
    let z0 = (lp.base_at(0.0) - d).sqrt();
    let w0 = (lp.w_at(0.0) - params.rho(z0)).sqrt();
    if w0.norm() < CRITICAL_TOL {
        return Err(Error::CriticalIntersection {
            t: 0.0,
            min_modulus: w0.norm(),
        });
    }
    let one = continue_lift(params, lp, z0, w0, 1, steps)?;
    if (one.z - z0).norm() > 1e-6 * (1.0 + z0.norm()) {
        return Err(Error::Unsupported("base lift does not close after one lap".into()));
    }
    let sign = if (one.w - w0).norm() <= (one.w + w0).norm() {
        1
    } else {
        -1
    };
    let turns_of_radicand = (one.r_arg / TAU).round() as i64;
    let base_turns = lp.turns * lp.degree_delta / 2;
    let (comp, laps) = if sign == 1 {
        (one, 1)
    } else {
        (continue_lift(params, lp, z0, w0, 2, steps)?, 2)
    };
    let turns_of_w = (comp.w_arg / TAU).round() as i64;
    let num_components = if sign == 1 { 2 } else { 1 };
    Ok(LiftResult {
        num_components,
        winding_over_boundary: base_turns.max(1) * laps,
        linking: (num_components == 2).then_some(turns_of_w),
        monodromy_sign: sign,
        turns_of_w,
        turns_of_radicand,
        min_radicand: comp.min_r,
        steps: comp.steps,
        component: resample(&comp.trace, laps as f64, LOOP_SAMPLES * laps as usize),
    })
}

/// The roots of `aX² + bX + c`, `∞` for each unit of degree drop.
pub fn forcing_roots(params: &SkewParams) -> Result<(ExtCx, ExtCx)> {
    let pt = ProjPoint::new(params.a, params.b, params.c)?;
    Ok(pi_inverse(&pt))
}

fn label_of(base: &BaseQuadratic, r: ExtCx) -> Result<FatouLabel> {
    match r {
        ExtCx::Infinity => Ok(FatouLabel::Infinity),
        ExtCx::Finite(z) => fatou_component_id(base, z),
    }
}

/// Number of roots of `aX² + bX + c` in `component`, with multiplicity.
pub fn roots_in_component_count(params: &SkewParams, base: &BaseQuadratic, component: FatouLabel) -> Result<u32> {
    let (x, y) = forcing_roots(params)?;
    Ok([x, y]
        .into_iter()
        .map(|r| label_of(base, r))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|l| *l == component)
        .count() as u32)
}

/// Fatou labels of the two roots of `aX² + bX + c`, sorted.
pub fn component_type(params: &SkewParams) -> Result<(FatouLabel, FatouLabel)> {
    let (x, y) = forcing_roots(params)?;
    let mut out = [FatouLabel::Infinity; 2];
    for (slot, r) in out.iter_mut().zip([x, y]) {
        let l = label_of(&params.base, r)?;
        if l == FatouLabel::Julia {
            let ExtCx::Finite(z) = r else { unreachable!() };
            return Err(Error::AmbiguousType(z));
        }
        *slot = l;
    }
    let key = |l: &FatouLabel| match l {
        FatouLabel::Bounded(k) => *k as i64,
        _ => i64::MAX,
    };
    out.sort_by_key(key);
    Ok((out[0], out[1]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "components", rename_all = "snake_case")]
pub enum TopologyLabel {
    CircleTimesCantor,
    Suspension,
    BaseTimesCantor,
    Mixed(Vec<(FatouLabel, String)>),
}

impl std::fmt::Display for TopologyLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TopologyLabel::CircleTimesCantor => write!(f, "circle_times_cantor"),
            TopologyLabel::Suspension => write!(f, "suspension"),
            TopologyLabel::BaseTimesCantor => write!(f, "base_times_cantor"),
            TopologyLabel::Mixed(v) => {
                write!(f, "mixed(")?;
                for (i, (l, s)) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{l}: {s}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Component counts and windings at each pullback depth of the constant-
/// height loop over the unit circle (`d = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackLevel {
    pub depth: u32,
    pub components: u32,
    pub windings: Vec<u32>,
}

/// Iterated pullbacks of `{|z| = 1} × {r(F)/2}` for `p = z²`.
pub fn pullback_levels(params: &SkewParams, depth: u32) -> Result<Vec<PullbackLevel>> {
    if params.base.d != Cx::new(0.0, 0.0) {
        return Err(Error::Unsupported(
            "loop pullbacks need the unit-circle base d = 0".into(),
        ));
    }
    let js = julia_samples(&params.base, DEFAULT_JULIA_SAMPLES, 0);
    let rf = r_f(params, &js.points)?;
    let mut loops = vec![LoopParam::unit_circle(Cx::new(rf / 2.0, 0.0))];
    let mut out = Vec::new();
    for k in 1..=depth {
        let mut next = Vec::new();
        for lp in &loops {
            if !lp.admissible(rf) {
                return Err(Error::Unsupported(format!(
                    "pulled-back loop at depth {k} is not admissible"
                )));
            }
            let res = lift_curve(params, lp, DEFAULT_LIFT_STEPS)?;
            let turns = res.winding_over_boundary;
            let comp = LoopParam {
                turns,
                w_samples: res.component.iter().map(|p| p.1).collect(),
                ..lp.clone()
            };
            if res.num_components == 2 {
                let mut other = comp.clone();
                other.w_samples.iter_mut().for_each(|w| *w = -*w);
                next.push(comp);
                next.push(other);
            } else {
                next.push(comp);
            }
        }
        out.push(PullbackLevel {
            depth: k,
            components: next.len() as u32,
            windings: next.iter().map(|l| l.turns).collect(),
        });
        loops = next;
    }
    Ok(out)
}

/// Topology of the Julia set of `F ∈ 𝒟` over boundaries of bounded Fatou
/// components. For `d = 0` it is read off `depth` iterated loop pullbacks;
/// otherwise from where the roots of `aX² + bX + c` lie.
pub fn julia_topology_label(params: &SkewParams, depth: u32) -> Result<TopologyLabel> {
    let js = julia_samples(&params.base, DEFAULT_JULIA_SAMPLES, 0);
    let verdict = classify_cdm(params, &js, DEFAULT_BUDGET)?;
    if verdict.label != CdmLabel::D {
        return Err(Error::Unsupported(format!(
            "parameters are in {}, not D",
            verdict.label
        )));
    }
    let (x, y) = forcing_roots(params)?;
    let labels = [label_of(&params.base, x)?, label_of(&params.base, y)?];
    for (l, r) in labels.iter().zip([x, y]) {
        if *l == FatouLabel::Julia {
            let ExtCx::Finite(z) = r else { unreachable!() };
            return Err(Error::AmbiguousType(z));
        }
    }
    if params.base.d == Cx::new(0.0, 0.0) {
        let levels = pullback_levels(params, depth.max(1))?;
        let last = levels.last().expect("depth ≥ 1");
        return Ok(if last.windings.iter().all(|&w| w == 1) {
            TopologyLabel::CircleTimesCantor
        } else if last.windings.iter().all(|&w| w == 2) {
            TopologyLabel::Suspension
        } else {
            TopologyLabel::Mixed(vec![(FatouLabel::Bounded(0), format!("windings {:?}", last.windings))])
        });
    }
    let bounded: Vec<FatouLabel> = labels
        .iter()
        .copied()
        .filter(|l| matches!(l, FatouLabel::Bounded(_)))
        .collect();
    match bounded.len() {
        0 => Ok(TopologyLabel::BaseTimesCantor),
        2 if bounded[0] == bounded[1] => Ok(TopologyLabel::BaseTimesCantor),
        _ => Err(Error::Unsupported(
            "a single root in a bounded component needs loop pullbacks, available for d = 0 only".into(),
        )),
    }
}

/// `g_t = (z² − 2, w² − t z² + t z + 2t)`, i.e. `ρ = t(z + 1)(2 − z)`.
pub fn jonsson_params(t: f64) -> SkewParams {
    SkewParams::from_lambda(
        [Cx::new(-t, 0.0), Cx::new(t, 0.0), Cx::new(2.0 * t, 0.0)],
        BaseQuadratic::chebyshev(),
    )
}

/// `ρ = t(2 − z)`.
pub fn jonsson_variant_one(t: f64) -> SkewParams {
    SkewParams::from_lambda(
        [Cx::new(0.0, 0.0), Cx::new(-t, 0.0), Cx::new(2.0 * t, 0.0)],
        BaseQuadratic::chebyshev(),
    )
}

/// `ρ = t(z + 2)(2 − z)`.
pub fn jonsson_variant_two(t: f64) -> SkewParams {
    SkewParams::from_lambda(
        [Cx::new(-t, 0.0), Cx::new(0.0, 0.0), Cx::new(4.0 * t, 0.0)],
        BaseQuadratic::chebyshev(),
    )
}

/// A point `x ∈ [0, 1)` of the doubling map stored as 256 bits, most
/// significant first; `2cos(2πx)` semiconjugates doubling to `z² − 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DoublingPoint([u64; 4]);

impl DoublingPoint {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        Self([rng.gen(), rng.gen(), rng.gen(), rng.gen()])
    }

    pub fn x(&self) -> f64 {
        self.0[0] as f64 / 2f64.powi(64) + self.0[1] as f64 / 2f64.powi(128)
    }

    pub fn z(&self) -> f64 {
        2.0 * (TAU * self.x()).cos()
    }

    pub fn double(&self) -> Self {
        let w = self.0;
        Self([
            w[0] << 1 | w[1] >> 63,
            w[1] << 1 | w[2] >> 63,
            w[2] << 1 | w[3] >> 63,
            w[3] << 1,
        ])
    }

    /// `z_0, z_1, …, z_{n-1}` along the exact doubling orbit.
    pub fn orbit(&self, n: usize) -> Vec<Cx> {
        let mut p = *self;
        (0..n)
            .map(|_| {
                let z = Cx::new(p.z(), 0.0);
                p = p.double();
                z
            })
            .collect()
    }
}

/// Steps exactly representable by a [`DoublingPoint`] with full precision.
pub const DOUBLING_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JonssonReport {
    pub t: f64,
    /// `(−1, 0)` and `(2, 0)` are fixed.
    pub fixed_points: bool,
    pub samples: usize,
    /// Samples with `G(z, 0) > 0`.
    pub escaping: usize,
    /// Samples whose base orbit meets `A_t` within 200 steps.
    pub reaching: usize,
    pub escape_pass: bool,
    pub reach_pass: bool,
    pub all_pass: bool,
}

/// `A_t = {z : |t(z + 1)(2 − z)| ≥ 3√t}`.
pub fn in_a_t(t: f64, z: Cx) -> bool {
    (t * (z + 1.0) * (2.0 - z)).norm() >= 3.0 * t.sqrt()
}

pub fn jonsson_check(t: f64, samples: usize, seed: u64) -> Result<JonssonReport> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("t = {t} must be nonnegative")));
    }
    let params = jonsson_params(t);
    let zero = Cx::new(0.0, 0.0);
    let fixed = [Cx::new(-1.0, 0.0), Cx::new(2.0, 0.0)]
        .iter()
        .all(|&z| params.base.eval(z) == z && params.rho(z) == zero);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(samples);
    while pts.len() < samples {
        let p = DoublingPoint::random(&mut rng);
        let z = p.z();
        if (z + 1.0).abs() >= 1e-2 && (z - 2.0).abs() >= 1e-2 {
            pts.push(p);
        }
    }
    let mut escaping = 0;
    let mut reaching = 0;
    for p in &pts {
        let orbit = p.orbit(DOUBLING_STEPS);
        if orbit.iter().any(|&z| in_a_t(t, z)) {
            reaching += 1;
        }
        if fiber_orbit_along(&params, orbit, zero, DOUBLING_STEPS as u32).green > 0.0 {
            escaping += 1;
        }
    }
    let escape_pass = escaping == samples;
    let reach_pass = reaching == samples;
    Ok(JonssonReport {
        t,
        fixed_points: fixed,
        samples,
        escaping,
        reaching,
        escape_pass,
        reach_pass,
        all_pass: fixed && escape_pass && reach_pass,
    })
}

/// Bounded fibers among `candidates`, merged within `1e-6`.
pub fn bounded_fiber_set(params: &SkewParams, candidates: &[Cx], budget: u32) -> Vec<Cx> {
    let mut out: Vec<Cx> = Vec::new();
    for &z in candidates {
        if out.iter().any(|o| (o - z).norm() < 1e-6) {
            continue;
        }
        let orbit = crate::dynamics::fiber_orbit(params, z, Cx::new(0.0, 0.0), budget);
        if orbit.is_bounded_within_floor() {
            out.push(z);
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re));
    out
}

/// Bounded fibers of `F` among Julia samples of the base and the finite
/// roots of `aX² + bX + c`; for the Jonsson families this is the type.
pub fn bounded_fibers_with_roots(params: &SkewParams, budget: u32) -> Result<Vec<Cx>> {
    let mut cands = julia_samples(&params.base, DEFAULT_JULIA_SAMPLES, 0).points;
    let (x, y) = forcing_roots(params)?;
    for r in [x, y] {
        if let ExtCx::Finite(z) = r {
            cands.push(z);
        }
    }
    Ok(bounded_fiber_set(params, &cands, budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_point_orbit_is_chebyshev() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = DoublingPoint::random(&mut rng);
        let o = p.orbit(3);
        assert!((o[1].re - (o[0].re * o[0].re - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn roots_in_disk() {
        let t = Cx::new(100.0, 0.0);
        let p = SkewParams::from_lambda([t, Cx::new(0.0, 0.0), t * -0.25], BaseQuadratic::z2());
        assert_eq!(
            roots_in_component_count(&p, &p.base, FatouLabel::Bounded(0)).unwrap(),
            2
        );
        let p = SkewParams::from_lambda([Cx::new(0.0, 0.0), t, t * -0.5], BaseQuadratic::z2());
        assert_eq!(
            roots_in_component_count(&p, &p.base, FatouLabel::Bounded(0)).unwrap(),
            1
        );
    }
}
