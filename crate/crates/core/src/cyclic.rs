//! Periodic orbits of cyclic sequences of quadratic maps.
//!
//! Given offsets `r_0, …, r_{n-1}` and maps `f_i(w) = w² + r_i`, the solver
//! finds every `w_0` with `f_{n-1} ∘ ⋯ ∘ f_0 (w_0) = w_0`, a polynomial
//! equation of degree `2^n`. Both the base periodic points (`r_i = d`) and
//! the fixed points of fiber return maps (`r_i = ρ(p^i(z))`) are instances.
//!
//! Seeds are backward square-root chains ending at points near the Julia
//! set of the sequence; each chain is refined by Newton's method on the
//! whole cyclic system (multiple shooting), which stays well conditioned for
//! repelling cycles. Attracting cycles are picked up from forward critical
//! orbits, and a deflated scalar Newton sweep mops up anything left.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::Cx;

const NEWTON_MAX_ITER: usize = 80;
pub const DEDUP_TOL: f64 = 1e-9;
/// Points whose cycle multiplier is this close to 1 are counted as double roots.
const PARABOLIC_TOL: f64 = 1e-6;

/// One periodic orbit `w_0, …, w_{n-1}` of the cyclic system.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleOrbit {
    pub orbit: Vec<Cx>,
    /// `∏ 2 w_i`, the derivative of the full composition at `w_0`.
    pub multiplier: Cx,
    /// Multiplicity as a root of `F(w) − w` (1, or 2 for multiplier ≈ 1).
    pub multiplicity: usize,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub cycles: Vec<CycleOrbit>,
    /// Number of roots expected, `2^n`.
    pub expected: usize,
}

impl SolveOutcome {
    pub fn found(&self) -> usize {
        self.cycles.iter().map(|c| c.multiplicity).sum()
    }

    pub fn complete(&self) -> bool {
        self.found() == self.expected
    }
}

fn residuals(offsets: &[Cx], orbit: &[Cx], out: &mut [Cx]) {
    let n = offsets.len();
    for i in 0..n {
        let next = orbit[(i + 1) % n];
        out[i] = next - (orbit[i] * orbit[i] + offsets[i]);
    }
}

fn multiplier(orbit: &[Cx]) -> Cx {
    orbit.iter().fold(Cx::new(1.0, 0.0), |acc, &w| acc * (w * 2.0))
}

/// One Newton step on the cyclic system; returns the largest correction.
fn newton_step(offsets: &[Cx], orbit: &mut [Cx], e: &mut [Cx], delta: &mut [Cx]) -> f64 {
    let n = offsets.len();
    residuals(offsets, orbit, e);
    let mult = multiplier(orbit);
    let any_zero = orbit.iter().any(|w| *w == Cx::new(0.0, 0.0));
    // δ_{i+1} − 2 w_i δ_i = −e_i, cyclically.
    if mult.norm() >= 1.0 && !any_zero {
        // backward sweep: δ_i = (δ_{i+1} + e_i) / (2 w_i), δ_n = X
        let mut alpha = Cx::new(1.0, 0.0);
        let mut beta = Cx::new(0.0, 0.0);
        for i in (0..n).rev() {
            let d = orbit[i] * 2.0;
            alpha /= d;
            beta = (beta + e[i]) / d;
        }
        let x = beta / (Cx::new(1.0, 0.0) - alpha);
        let mut next = x;
        for i in (0..n).rev() {
            let cur = (next + e[i]) / (orbit[i] * 2.0);
            delta[i] = cur;
            next = cur;
        }
    } else {
        // forward sweep: δ_{i+1} = 2 w_i δ_i − e_i, δ_0 = Y
        let mut p = Cx::new(1.0, 0.0);
        let mut q = Cx::new(0.0, 0.0);
        for i in 0..n {
            let d = orbit[i] * 2.0;
            p *= d;
            q = d * q - e[i];
        }
        let y = q / (Cx::new(1.0, 0.0) - p);
        let mut cur = y;
        for i in 0..n {
            delta[i] = cur;
            cur = orbit[i] * 2.0 * cur - e[i];
        }
    }
    let scale = 1.0 + orbit.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let mut biggest = delta.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if !biggest.is_finite() {
        return f64::INFINITY;
    }
    let damp = if biggest > scale { scale / biggest } else { 1.0 };
    for i in 0..n {
        orbit[i] += delta[i] * damp;
    }
    biggest *= damp;
    biggest / scale
}

/// Newton on the cyclic system from `orbit`; `true` on convergence.
pub fn refine(offsets: &[Cx], orbit: &mut [Cx]) -> bool {
    let n = offsets.len();
    let mut e = vec![Cx::new(0.0, 0.0); n];
    let mut delta = vec![Cx::new(0.0, 0.0); n];
    let mut small_steps = 0;
    for _ in 0..NEWTON_MAX_ITER {
        let rel = newton_step(offsets, orbit, &mut e, &mut delta);
        if !rel.is_finite() || orbit.iter().any(|w| !(w.re.is_finite() && w.im.is_finite())) {
            return false;
        }
        if rel < 1e-15 {
            break;
        }
        if rel < 1e-12 {
            small_steps += 1;
            if small_steps >= 4 {
                break;
            }
        }
    }
    // two polishing steps
    for _ in 0..2 {
        newton_step(offsets, orbit, &mut e, &mut delta);
    }
    residuals(offsets, orbit, &mut e);
    let scale = 1.0 + orbit.iter().map(|w| w.norm()).fold(0.0, f64::max);
    e.iter().all(|r| r.norm() <= 1e-10 * scale * scale)
}

/// Forward evaluation of the full composition and its derivative.
pub fn compose(offsets: &[Cx], w: Cx) -> (Cx, Cx) {
    let mut v = w;
    let mut dv = Cx::new(1.0, 0.0);
    for r in offsets {
        dv *= v * 2.0;
        v = v * v + r;
    }
    (v, dv)
}

fn orbit_from(offsets: &[Cx], w0: Cx) -> Vec<Cx> {
    let mut out = Vec::with_capacity(offsets.len());
    let mut w = w0;
    for r in offsets {
        out.push(w);
        w = w * w + r;
    }
    out
}

/// A point near the Julia set of the sequence in fiber 0, obtained by
/// pulling back a large point with random branches.
fn julia_target(offsets: &[Cx], rng: &mut ChaCha8Rng) -> Cx {
    let n = offsets.len();
    let sup = offsets.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let mut w = Cx::new(3.0 * (1.0 + sup).sqrt() + 1.0, 0.5);
    let rounds = (60 + n - 1) / n;
    for _ in 0..rounds {
        for i in (0..n).rev() {
            let s = (w - offsets[i]).sqrt();
            w = if rng.gen::<bool>() { s } else { -s };
        }
    }
    w
}

/// Backward chain ending at `target`, with branch signs taken from the bits of `k`.
fn chain(offsets: &[Cx], target: Cx, k: u64) -> Vec<Cx> {
    let n = offsets.len();
    let mut orbit = vec![Cx::new(0.0, 0.0); n];
    let mut w = target;
    for i in (0..n).rev() {
        let s = (w - offsets[i]).sqrt();
        w = if (k >> i) & 1 == 1 { -s } else { s };
        orbit[i] = w;
    }
    orbit
}

fn same_point(a: Cx, b: Cx) -> bool {
    (a - b).norm() <= DEDUP_TOL * (1.0 + a.norm().max(b.norm()))
}

/// Two solutions coincide when their whole orbits agree; distinct cycles can
/// pass closer than the tolerance at a single point.
fn same_orbit(a: &[Cx], b: &[Cx]) -> bool {
    a.iter().zip(b).all(|(x, y)| same_point(*x, *y))
}

/// Collapse solutions whose orbits agree within the dedup tolerance.
fn dedup(mut found: Vec<Vec<Cx>>) -> Vec<Vec<Cx>> {
    found.sort_by(|x, y| x[0].re.total_cmp(&y[0].re));
    let mut kept: Vec<Vec<Cx>> = Vec::with_capacity(found.len());
    for orb in found {
        let w = orb[0];
        let tol = DEDUP_TOL * (1.0 + w.norm());
        let mut dup = false;
        for prev in kept.iter().rev() {
            if w.re - prev[0].re > tol * 2.0 + DEDUP_TOL {
                break;
            }
            if same_orbit(prev, &orb) {
                dup = true;
                break;
            }
        }
        if !dup {
            kept.push(orb);
        }
    }
    kept
}

fn to_cycles(orbits: Vec<Vec<Cx>>) -> Vec<CycleOrbit> {
    orbits
        .into_iter()
        .map(|orbit| {
            let m = multiplier(&orbit);
            CycleOrbit {
                multiplicity: if (m - Cx::new(1.0, 0.0)).norm() < PARABOLIC_TOL {
                    2
                } else {
                    1
                },
                multiplier: m,
                orbit,
            }
        })
        .collect()
}

/// Attracting cycles, found by running the critical orbit of each `f_i`.
fn attracting(offsets: &[Cx]) -> Vec<Vec<Cx>> {
    let n = offsets.len();
    let mut out = Vec::new();
    let periods = (4000 / n).max(50);
    for start in 0..n {
        // w = 0 in fiber `start`; advance to fiber 0
        let mut w = Cx::new(0.0, 0.0);
        let mut escaped = false;
        for r in &offsets[start..] {
            w = w * w + r;
        }
        let mut prev = w;
        let mut settled = false;
        for _ in 0..periods {
            for r in offsets {
                w = w * w + r;
            }
            if w.norm() > 1e50 {
                escaped = true;
                break;
            }
            if (w - prev).norm() < 1e-13 * (1.0 + w.norm()) {
                settled = true;
                break;
            }
            prev = w;
        }
        if escaped || !settled {
            continue;
        }
        let mut orbit = orbit_from(offsets, w);
        if refine(offsets, &mut orbit) {
            out.push(orbit);
        }
    }
    out
}

/// Deflated scalar Newton on `F(w) − w`, starting from chain seeds.
fn deflated_sweep(offsets: &[Cx], known: &mut Vec<Vec<Cx>>, expected: usize, rng: &mut ChaCha8Rng) {
    let attempts = 8 * expected + 64;
    let target = julia_target(offsets, rng);
    for _ in 0..attempts {
        let found: usize = to_cycles(known.clone()).iter().map(|c| c.multiplicity).sum();
        if found >= expected {
            return;
        }
        let k = rng.gen::<u64>();
        let mut w = chain(offsets, target, k)[0] + Cx::new(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3));
        let mut ok = false;
        for _ in 0..200 {
            let (f, df) = compose(offsets, w);
            let g = f - w;
            let dg = df - Cx::new(1.0, 0.0);
            let mut s = Cx::new(0.0, 0.0);
            for orb in known.iter() {
                s += Cx::new(1.0, 0.0) / (w - orb[0]);
            }
            let denom = dg - g * s;
            let step = g / denom;
            if !(step.re.is_finite() && step.im.is_finite()) {
                break;
            }
            w -= step;
            if step.norm() < 1e-14 * (1.0 + w.norm()) {
                ok = true;
                break;
            }
        }
        if !ok {
            continue;
        }
        let mut orbit = orbit_from(offsets, w);
        if refine(offsets, &mut orbit) && !known.iter().any(|o| same_orbit(o, &orbit)) {
            known.push(orbit);
        }
    }
}

/// All solutions of `F(w) = w` for the cyclic sequence `offsets`.
///
/// `targets` backward chains are seeded per leaf (the base problem uses 4).
pub fn solve(offsets: &[Cx], targets: usize, seed: u64) -> SolveOutcome {
    let n = offsets.len();
    assert!((1..=20).contains(&n), "cycle length out of range");
    let expected = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    let target_pts: Vec<Cx> = (0..targets.max(1)).map(|_| julia_target(offsets, &mut rng)).collect();

    let mut found: Vec<Vec<Cx>> = Vec::new();
    for &t in &target_pts {
        let batch: Vec<Vec<Cx>> = (0..expected as u64)
            .into_par_iter()
            .filter_map(|k| {
                let mut orbit = chain(offsets, t, k);
                refine(offsets, &mut orbit).then_some(orbit)
            })
            .collect();
        found.extend(batch);
        found = dedup(found);
        if found.len() >= expected {
            break;
        }
    }
    found.extend(attracting(offsets));
    found = dedup(found);
    let count: usize = to_cycles(found.clone()).iter().map(|c| c.multiplicity).sum();
    if count < expected {
        deflated_sweep(offsets, &mut found, expected, &mut rng);
        found = dedup(found);
    }
    SolveOutcome {
        cycles: to_cycles(found),
        expected,
    }
}
