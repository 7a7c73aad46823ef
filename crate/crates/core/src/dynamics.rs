//! The quadratic skew map, fiber orbits and Green functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Cx;

/// Orbits whose fiber coordinate exceeds this modulus are declared escaping.
pub const ESCAPE_THRESHOLD: f64 = 1e100;
/// Saturation level of [`step`]; larger or non-finite values are clamped here.
pub const SENTINEL: f64 = 1e150;
pub const DEFAULT_BUDGET: u32 = 2000;
/// Fiber Green values at or below this count as 0 over Julia samples. Base
/// orbits on `J_p` leave it through rounding within about 50 steps unless
/// the base has an exact projection ([`BaseTrack`]), and an escape caused by
/// that drift has `G < 2^{-50} log(10^150) ≈ 3·10^{-13}`.
pub const GREEN_FLOOR: f64 = 1e-12;

pub(crate) fn finite(z: Cx) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn saturate(z: Cx) -> Cx {
    if !finite(z) {
        return Cx::new(SENTINEL, 0.0);
    }
    let r = z.norm();
    if r > SENTINEL {
        z * (SENTINEL / r)
    } else {
        z
    }
}

/// The base polynomial `p(z) = z² + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseQuadratic {
    pub d: Cx,
}

/// How a base orbit is advanced numerically.
///
/// Orbits starting on the unit circle for `d = 0`, or on `[-2, 2]` for
/// `d = -2`, are projected back onto the Julia set after every step so that
/// rounding cannot push them off it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseTrack {
    Free,
    Circle,
    Interval,
}

impl BaseQuadratic {
    pub fn new(d: Cx) -> Result<Self> {
        if !finite(d) {
            return Err(Error::NonFinite("d"));
        }
        Ok(Self { d })
    }

    pub fn z2() -> Self {
        Self { d: Cx::new(0.0, 0.0) }
    }

    pub fn chebyshev() -> Self {
        Self { d: Cx::new(-2.0, 0.0) }
    }

    #[inline]
    pub fn eval(&self, z: Cx) -> Cx {
        z * z + self.d
    }

    /// Iterate `n` times.
    pub fn iterate(&self, mut z: Cx, n: u32) -> Cx {
        for _ in 0..n {
            z = saturate(self.eval(z));
        }
        z
    }

    /// Repelling fixed point `β = (1 + √(1 − 4d)) / 2`.
    pub fn beta_fixed_point(&self) -> Cx {
        let s = (Cx::new(1.0, 0.0) - self.d * 4.0).sqrt();
        let z1 = (Cx::new(1.0, 0.0) + s) * 0.5;
        let z2 = (Cx::new(1.0, 0.0) - s) * 0.5;
        if z1.norm() >= z2.norm() {
            z1
        } else {
            z2
        }
    }

    pub fn track(&self, z: Cx) -> BaseTrack {
        if self.d == Cx::new(0.0, 0.0) && (z.norm() - 1.0).abs() < 1e-9 {
            BaseTrack::Circle
        } else if self.d == Cx::new(-2.0, 0.0) && z.im.abs() < 1e-12 && z.re.abs() <= 2.0 + 1e-12 {
            BaseTrack::Interval
        } else {
            BaseTrack::Free
        }
    }

    #[inline]
    pub fn advance(&self, z: Cx, track: BaseTrack) -> Cx {
        match track {
            BaseTrack::Free => saturate(self.eval(z)),
            BaseTrack::Circle => {
                let s = z * z;
                s / s.norm()
            }
            BaseTrack::Interval => Cx::new((z.re * z.re - 2.0).clamp(-2.0, 2.0), 0.0),
        }
    }
}

/// A point `λ = (a, b, c)` of parameter space over a fixed base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewParams {
    pub a: Cx,
    pub b: Cx,
    pub c: Cx,
    pub base: BaseQuadratic,
}

impl SkewParams {
    pub fn new(a: Cx, b: Cx, c: Cx, base: BaseQuadratic) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !finite(v) {
                return Err(Error::NonFinite(name));
            }
        }
        if !finite(base.d) {
            return Err(Error::NonFinite("d"));
        }
        Ok(Self { a, b, c, base })
    }

    pub fn from_lambda(lambda: [Cx; 3], base: BaseQuadratic) -> Self {
        Self {
            a: lambda[0],
            b: lambda[1],
            c: lambda[2],
            base,
        }
    }

    pub fn lambda(&self) -> [Cx; 3] {
        [self.a, self.b, self.c]
    }

    /// `‖λ‖∞`
    pub fn sup_norm(&self) -> f64 {
        self.a.norm().max(self.b.norm()).max(self.c.norm())
    }

    #[inline]
    pub fn rho(&self, z: Cx) -> Cx {
        self.a * z * z + self.b * z + self.c
    }
}

/// `ρ_λ(z) = az² + bz + c`.
pub fn rho(params: &SkewParams, z: Cx) -> Cx {
    params.rho(z)
}

/// One application of `F(z, w) = (z² + d, w² + ρ(z))`, saturating at [`SENTINEL`].
pub fn step(params: &SkewParams, point: (Cx, Cx)) -> (Cx, Cx) {
    let (z, w) = point;
    (saturate(params.base.eval(z)), saturate(w * w + params.rho(z)))
}

/// Largest `|ρ(z)|` over the samples: a lower estimate of `sup_{J_p} |ρ|`.
pub fn sup_rho_on_julia(params: &SkewParams, julia_samples: &[Cx]) -> Result<f64> {
    if julia_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(julia_samples.iter().map(|&z| params.rho(z).norm()).fold(0.0, f64::max))
}

/// `R = max(3, 2√(1 + sup_rho))`: beyond `R` every fiber map strictly increases `|w|`.
pub fn escape_radius_fiber(sup_rho: f64) -> f64 {
    (2.0 * (1.0 + sup_rho).sqrt()).max(3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OrbitStatus {
    Escaped { step: u32, log_abs: f64 },
    Bounded { budget: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitOutcome {
    pub status: OrbitStatus,
    pub green: f64,
}

impl OrbitOutcome {
    pub fn is_bounded(&self) -> bool {
        matches!(self.status, OrbitStatus::Bounded { .. })
    }

    /// Bounded, or escaping with `G ≤` [`GREEN_FLOOR`].
    pub fn is_bounded_within_floor(&self) -> bool {
        self.green <= GREEN_FLOOR
    }

    fn escaped(n: u32, w: Cx) -> Self {
        let r = w.norm();
        let log_abs = if r.is_finite() { r.ln() } else { SENTINEL.ln() };
        Self {
            status: OrbitStatus::Escaped { step: n, log_abs },
            green: log_abs * (-(n as f64)).exp2(),
        }
    }

    fn bounded(budget: u32) -> Self {
        Self {
            status: OrbitStatus::Bounded { budget },
            green: 0.0,
        }
    }
}

/// Iterate the fiber orbit of `(z0, w0)` for at most `budget` steps.
///
/// Escape is read off at the first `n` with `|w_n| > 10^100`, giving the
/// Green estimate `2^{-n} log|w_n|`.
pub fn fiber_orbit(params: &SkewParams, z0: Cx, w0: Cx, budget: u32) -> OrbitOutcome {
    let base = params.base;
    let track = base.track(z0);
    let mut z = z0;
    let mut w = saturate(w0);
    if w.norm() > ESCAPE_THRESHOLD {
        return OrbitOutcome::escaped(0, w);
    }
    for n in 1..=budget {
        w = w * w + params.rho(z);
        z = base.advance(z, track);
        if !(w.norm() <= ESCAPE_THRESHOLD) {
            return OrbitOutcome::escaped(n, w);
        }
    }
    OrbitOutcome::bounded(budget)
}

/// Fiber orbit over a periodic base orbit, given by its values of `ρ`
/// along one period.
pub fn fiber_orbit_cyclic(rho_cycle: &[Cx], w0: Cx, budget: u32) -> OrbitOutcome {
    fiber_orbit_cyclic_from(rho_cycle, 0, w0, budget)
}

/// As [`fiber_orbit_cyclic`], starting in the fiber with index `start`.
pub fn fiber_orbit_cyclic_from(rho_cycle: &[Cx], start: usize, w0: Cx, budget: u32) -> OrbitOutcome {
    let m = rho_cycle.len();
    let mut w = saturate(w0);
    if w.norm() > ESCAPE_THRESHOLD {
        return OrbitOutcome::escaped(0, w);
    }
    let mut i = start % m;
    for n in 1..=budget {
        w = w * w + rho_cycle[i];
        i += 1;
        if i == m {
            i = 0;
        }
        if !(w.norm() <= ESCAPE_THRESHOLD) {
            return OrbitOutcome::escaped(n, w);
        }
    }
    OrbitOutcome::bounded(budget)
}

/// Fiber orbit along an explicitly supplied base orbit `z_0, z_1, …`.
pub fn fiber_orbit_along<I>(params: &SkewParams, base_orbit: I, w0: Cx, budget: u32) -> OrbitOutcome
where
    I: IntoIterator<Item = Cx>,
{
    let mut w = saturate(w0);
    if w.norm() > ESCAPE_THRESHOLD {
        return OrbitOutcome::escaped(0, w);
    }
    for (n, z) in (1..=budget).zip(base_orbit) {
        w = w * w + params.rho(z);
        if !(w.norm() <= ESCAPE_THRESHOLD) {
            return OrbitOutcome::escaped(n, w);
        }
    }
    OrbitOutcome::bounded(budget)
}

/// Green function of the base, `lim 2^{-n} log⁺|p^n(z)|`.
pub fn green_base(base: &BaseQuadratic, z: Cx, budget: u32) -> f64 {
    let mut z = z;
    if z.norm() > ESCAPE_THRESHOLD {
        return z.norm().ln();
    }
    // orbits starting below the threshold stay finite until they cross it
    for n in 1..=budget {
        z = base.eval(z);
        if !(z.norm() <= ESCAPE_THRESHOLD) {
            let r = z.norm();
            let log_abs = if r.is_finite() { r.ln() } else { SENTINEL.ln() };
            return log_abs * (-(n as f64)).exp2();
        }
    }
    0.0
}

/// Coefficients of the affine fiber change `h(z, w) = (z, αz + βw + γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conjugacy {
    pub alpha: Cx,
    pub beta: Cx,
    pub gamma: Cx,
}

impl Conjugacy {
    pub fn apply(&self, z: Cx, w: Cx) -> (Cx, Cx) {
        (z, self.alpha * z + self.beta * w + self.gamma)
    }
}

/// Bring `(p(z), Az² + Bzw + Cw² + Dz + Ew + F)` to the form `(p(z), w² + az² + bz + c)`.
///
/// The returned conjugacy `h` satisfies `h ∘ F_original = F_normal ∘ h`.
pub fn normalize_quadratic(coeffs: [Cx; 6], base: BaseQuadratic) -> Result<(SkewParams, Conjugacy)> {
    let [ca, cb, cc, cd, ce, cf] = coeffs;
    if coeffs.iter().any(|v| !finite(*v)) {
        return Err(Error::NonFinite("coefficients"));
    }
    if cc == Cx::new(0.0, 0.0) {
        return Err(Error::NotExtendible);
    }
    let alpha = cb * 0.5;
    let beta = cc;
    let gamma = ce * 0.5;
    let a = alpha + beta * ca - alpha * alpha;
    let b = beta * cd - alpha * gamma * 2.0;
    let c = alpha * base.d + beta * cf + gamma - gamma * gamma;
    Ok((SkewParams { a, b, c, base }, Conjugacy { alpha, beta, gamma }))
}
