//! Parameters near the hyperplane at infinity `ℙ²_∞ = {[a, b, c]}`: the
//! lines `E_z = {az² + bz + c = 0}`, the adherence bound, radial slices of
//! the bifurcation current and logarithmic potentials of sample measures.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{bz_mask, ddc, field_lv, Estimator};
use crate::dynamics::{fiber_orbit, green_base, sup_rho_on_julia, BaseQuadratic, SkewParams, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::julia::{MeasureLabel, MeasureSamples};
use crate::slice::ComplexLineSlice;
use crate::Cx;

const ZERO: Cx = Cx::new(0.0, 0.0);
const ONE: Cx = Cx::new(1.0, 0.0);

/// A point of `ℙ²_∞`, scaled so that its largest-modulus coordinate is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    pub a: Cx,
    pub b: Cx,
    pub c: Cx,
}

impl ProjPoint {
    pub fn new(a: Cx, b: Cx, c: Cx) -> Result<Self> {
        let v = [a, b, c];
        if v.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
            return Err(Error::NonFinite("projective point"));
        }
        let mut k = 0;
        for i in 1..3 {
            if v[i].norm() > v[k].norm() {
                k = i;
            }
        }
        if v[k] == ZERO {
            return Err(Error::InvalidArgument("all coordinates vanish".into()));
        }
        let s = v[k];
        let mut out = [a / s, b / s, c / s];
        out[k] = ONE;
        Ok(Self {
            a: out[0],
            b: out[1],
            c: out[2],
        })
    }

    pub fn from_lambda(l: [Cx; 3]) -> Result<Self> {
        Self::new(l[0], l[1], l[2])
    }

    pub fn coords(&self) -> [Cx; 3] {
        [self.a, self.b, self.c]
    }

    /// `az² + bz + c`.
    pub fn eval(&self, z: Cx) -> Cx {
        self.a * z * z + self.b * z + self.c
    }

    /// Sup-norm distance from this representative to the plane `E_z`,
    /// `|az² + bz + c| / (|z|² + |z| + 1)`.
    pub fn distance_to_line(&self, z: Cx) -> f64 {
        self.eval(z).norm() / (z.norm_sqr() + z.norm() + 1.0)
    }

    /// Largest coordinate difference, after the same normalisation.
    pub fn distance(&self, other: &ProjPoint) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// `[a, b, c] ∈ E_z` for some Julia sample `z`, up to `tol`.
pub fn e_set_membership(pt: &ProjPoint, julia: &MeasureSamples, tol: f64) -> Result<bool> {
    if julia.label != MeasureLabel::Julia {
        return Err(Error::InvalidArgument("samples must be labelled julia".into()));
    }
    Ok(julia.points.iter().any(|&z| pt.eval(z).norm() < tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdherenceVerdict {
    /// `G(z0, 0) < eps_green`, so the bound is asserted.
    pub applicable: bool,
    /// `|ρ(z0)|`.
    pub lhs: f64,
    /// `2 √(1.05 · sup_J |ρ|) + 10⁻⁶`.
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `|ρ(z0)| ≤ 2 √‖ρ‖_∞` for parameters whose fiber over `z0` is bounded.
pub fn adherence_bound_check(
    params: &SkewParams,
    z0: Cx,
    eps_green: f64,
    julia: &MeasureSamples,
) -> Result<AdherenceVerdict> {
    let sup = sup_rho_on_julia(params, &julia.points)?;
    let applicable = fiber_orbit(params, z0, ZERO, DEFAULT_BUDGET).green < eps_green;
    let lhs = params.rho(z0).norm();
    let rhs = 2.0 * (1.05 * sup).sqrt() + 1e-6;
    Ok(AdherenceVerdict {
        applicable,
        lhs,
        rhs,
        pass: !applicable || lhs <= rhs,
    })
}

/// A point of `ℂ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtCx {
    Finite(Cx),
    Infinity,
}

/// `π(x, y) = [1, −x−y, xy]`, with `[0, 1, −x]` when `y = ∞` and
/// `[0, 0, 1]` when both are infinite.
pub fn pi_map(x: ExtCx, y: ExtCx) -> ProjPoint {
    let (a, b, c) = match (x, y) {
        (ExtCx::Finite(x), ExtCx::Finite(y)) => (ONE, -x - y, x * y),
        (ExtCx::Finite(x), ExtCx::Infinity) | (ExtCx::Infinity, ExtCx::Finite(x)) => (ZERO, ONE, -x),
        (ExtCx::Infinity, ExtCx::Infinity) => (ZERO, ZERO, ONE),
    };
    ProjPoint::new(a, b, c).expect("π never vanishes")
}

/// The two roots of `az² + bz + c` (with `∞` for each unit of degree drop).
pub fn pi_inverse(pt: &ProjPoint) -> (ExtCx, ExtCx) {
    let (a, b, c) = (pt.a, pt.b, pt.c);
    if a == ZERO {
        if b == ZERO {
            return (ExtCx::Infinity, ExtCx::Infinity);
        }
        return (ExtCx::Finite(-c / b), ExtCx::Infinity);
    }
    let s = (b * b - 4.0 * a * c).sqrt();
    // the larger of −b ± s avoids cancellation
    let q = if (-b + s).norm() >= (-b - s).norm() {
        (-b + s) * 0.5
    } else {
        (-b - s) * 0.5
    };
    if q == ZERO {
        return (ExtCx::Finite(ZERO), ExtCx::Finite(ZERO));
    }
    (ExtCx::Finite(q / a), ExtCx::Finite(c / q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// `(0, b, R)`, pushed to `z = −R/b`.
    A0,
}

/// Weighted atoms of a slice of the bifurcation current, in the `z`-chart
/// of the line at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMeasure {
    pub radius: f64,
    pub chart: Chart,
    pub atoms: Vec<(Cx, f64)>,
    /// Mass before normalisation (negative pixels dropped).
    pub total_mass: f64,
}

impl RadialMeasure {
    pub fn normalized_weights(&self) -> Vec<f64> {
        let t = self.total_mass;
        self.atoms.iter().map(|(_, w)| w / t).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "re,im,weight")?;
        for (z, w) in &self.atoms {
            writeln!(out, "{:e},{:e},{:e}", z.re, z.im, w)?;
        }
        Ok(())
    }

    /// Weighted mean of `||z| − 1|`.
    pub fn radial_spread(&self) -> f64 {
        self.atoms.iter().map(|(z, w)| w * (z.norm() - 1.0).abs()).sum::<f64>() / self.total_mass
    }

    /// Kolmogorov–Smirnov distance of the argument `arg z / 2π ∈ [0, 1)` to uniform.
    pub fn ks_angular(&self) -> f64 {
        let xs: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .map(|(z, w)| {
                (
                    z.arg().rem_euclid(2.0 * std::f64::consts::PI) / (2.0 * std::f64::consts::PI),
                    *w,
                )
            })
            .collect();
        ks_uniform(xs)
    }

    /// KS distance to uniform of `u = arccos(Re z / 2) / π`, uniform exactly
    /// when `Re z` follows the arcsine law on `[−2, 2]`.
    pub fn ks_arcsine(&self) -> f64 {
        let xs: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .map(|(z, w)| ((z.re / 2.0).clamp(-1.0, 1.0).acos() / std::f64::consts::PI, *w))
            .collect();
        ks_uniform(xs)
    }
}

/// Weighted KS distance of samples in `[0, 1]` to the uniform law.
pub fn ks_uniform(mut xs: Vec<(f64, f64)>) -> f64 {
    xs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = xs.iter().map(|x| x.1).sum();
    if total <= 0.0 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut d: f64 = 0.0;
    for (x, w) in xs {
        d = d.max((x - acc / total).abs());
        acc += w;
        d = d.max((acc / total - x).abs());
    }
    d
}

/// The slice `{(0, b, R)}` with `|b| ≤ 4R` on a `res × res` grid.
pub fn a0_slice(base: BaseQuadratic, radius: f64, res: usize) -> ComplexLineSlice {
    ComplexLineSlice {
        origin: [ZERO, ZERO, Cx::new(radius, 0.0)],
        direction: [ZERO, ONE, ZERO],
        center: ZERO,
        half_width: 4.0 * radius,
        resolution: (res, res),
        base,
    }
}

/// `dd^c L_v` on the `a = 0` slice at height `R`, pushed to `ℙ¹_∞` by
/// `b ↦ −R/b`. Negative pixels are dropped.
pub fn radial_bif_measure(
    base: BaseQuadratic,
    radius: f64,
    res: usize,
    estimator: Estimator,
    budget: u32,
) -> Result<RadialMeasure> {
    if !(radius >= 10.0) {
        return Err(Error::InvalidArgument(format!("R = {radius} below 10")));
    }
    let slice = a0_slice(base, radius, res);
    let d = ddc(&field_lv(&slice, estimator, budget)?)?;
    let area = slice.pixel_area();
    let mut atoms = Vec::new();
    for j in 1..res - 1 {
        for i in 1..res - 1 {
            let v = d.get(i, j);
            if v > 0.0 {
                let b = slice.s_at(i, j);
                atoms.push((-radius / b, v * area));
            }
        }
    }
    let total_mass = atoms.iter().map(|a| a.1).sum();
    Ok(RadialMeasure {
        radius,
        chart: Chart::A0,
        atoms,
        total_mass,
    })
}

/// How the slices of [`cluster_set_report`] are laid out at unit scale; each
/// is `origin + s·direction`, scaled by `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectionFamily {
    /// `count` points `e_k` of `E_{z0}` on the unit sphere, each with the
    /// slice through it along the Hermitian normal of `E_{z0}`.
    Transverse {
        count: usize,
        seed: u64,
    },
    Explicit {
        slices: Vec<([Cx; 3], [Cx; 3])>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub radius: f64,
    pub bounded_pixels: usize,
    /// Max over bounded pixels of the distance of `[λ]` to `E_{z0}`.
    pub max_distance: f64,
    /// Fraction of slices whose anchor point on `E_{z0}` lies within `tol`
    /// of a bounded pixel.
    pub coverage: f64,
    /// Per-slice max distance (0 when the slice has no bounded pixel).
    pub per_slice: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub z0: Cx,
    pub rows: Vec<ClusterRow>,
    pub decreasing: bool,
}

fn unit(v: [Cx; 3]) -> [Cx; 3] {
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn hdot(u: &[Cx; 3], v: &[Cx; 3]) -> Cx {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Orthonormal basis of the plane `{λ : λ·(z², z, 1) = 0}`.
fn e_basis(z0: Cx) -> ([Cx; 3], [Cx; 3]) {
    let n = unit([z0.conj() * z0.conj(), z0.conj(), ONE]);
    let seeds = [[ONE, ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ZERO, ONE]];
    let mut basis: Vec<[Cx; 3]> = Vec::new();
    for s in seeds {
        let mut v = s;
        for q in std::iter::once(&n).chain(basis.iter()) {
            let p = hdot(q, &v);
            for i in 0..3 {
                v[i] -= q[i] * p;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(unit(v));
        }
        if basis.len() == 2 {
            break;
        }
    }
    (basis[0], basis[1])
}

fn family_slices(z0: Cx, family: &DirectionFamily) -> Vec<([Cx; 3], [Cx; 3])> {
    match family {
        DirectionFamily::Explicit { slices } => slices.clone(),
        DirectionFamily::Transverse { count, seed } => {
            let (u1, u2) = e_basis(z0);
            let normal = unit([z0.conj() * z0.conj(), z0.conj(), ONE]);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..*count)
                .map(|_| {
                    let t = rng.gen::<f64>() * std::f64::consts::FRAC_PI_2;
                    let ph = rng.gen::<f64>() * std::f64::consts::TAU;
                    let (x, y) = (Cx::new(t.cos(), 0.0), Cx::from_polar(t.sin(), ph));
                    let e = [x * u1[0] + y * u2[0], x * u1[1] + y * u2[1], x * u1[2] + y * u2[2]];
                    (e, normal)
                })
                .collect()
        }
    }
}

/// For each `R`, the `B_{z0}` pixels of the family's slices scaled by `R`:
/// their largest distance to `E_{z0}` and the coverage of the anchor points.
/// Each slice window is `|s| ≤ 4/R` on a `res × res` grid.
pub fn cluster_set_report(
    base: BaseQuadratic,
    z0: Cx,
    family: &DirectionFamily,
    radii: &[f64],
    res: usize,
    tol: f64,
    budget: u32,
) -> Result<ClusterReport> {
    if green_base(&base, z0, DEFAULT_BUDGET) >= 1e-9 {
        return Err(Error::InvalidFiber(z0));
    }
    let slices = family_slices(z0, family);
    if slices.is_empty() {
        return Err(Error::InvalidArgument("empty direction family".into()));
    }
    let mut rows = Vec::new();
    for &r in radii {
        let mut per_slice = Vec::new();
        let mut bounded = 0;
        let mut covered = 0;
        for (o, d) in &slices {
            let rc = Cx::new(r, 0.0);
            let slice = ComplexLineSlice::new(
                [o[0] * rc, o[1] * rc, o[2] * rc],
                [d[0] * rc, d[1] * rc, d[2] * rc],
                ZERO,
                4.0 / r,
                (res, res),
                base,
            )?;
            let mask = bz_mask(&slice, z0, budget)?;
            let anchor = ProjPoint::from_lambda(*o)?;
            let mut worst: f64 = 0.0;
            let mut hit = false;
            for j in 0..res {
                for i in 0..res {
                    if !mask.get(i, j) {
                        continue;
                    }
                    bounded += 1;
                    let p = ProjPoint::from_lambda(slice.lambda_at_s(slice.s_at(i, j)))?;
                    worst = worst.max(p.distance_to_line(z0));
                    hit |= p.distance(&anchor) < tol;
                }
            }
            per_slice.push(worst);
            covered += hit as usize;
        }
        rows.push(ClusterRow {
            radius: r,
            bounded_pixels: bounded,
            max_distance: per_slice.iter().copied().fold(0.0, f64::max),
            coverage: covered as f64 / slices.len() as f64,
            per_slice,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].max_distance < w[0].max_distance);
    Ok(ClusterReport { z0, rows, decreasing })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPotential {
    pub value: f64,
    /// Atoms skipped because they coincide with the evaluation point.
    pub skipped: usize,
}

/// `Σ w_i log|z − x_i|`.
pub fn log_potential(measure: &MeasureSamples, z: Cx) -> Result<LogPotential> {
    if measure.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut value = 0.0;
    let mut skipped = 0;
    for (x, w) in measure.points.iter().zip(&measure.weights) {
        let r = (z - x).norm();
        if r == 0.0 {
            skipped += 1;
        } else {
            value += w * r.ln();
        }
    }
    Ok(LogPotential { value, skipped })
}

/// `Σ_{i≠j} w_i w_j log|x_i − x_j|`; the diagonal is omitted, which biases
/// small samples.
pub fn energy(measure: &MeasureSamples) -> Result<f64> {
    if measure.is_empty() {
        return Err(Error::EmptySamples);
    }
    let pts = &measure.points;
    let ws = &measure.weights;
    Ok((0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0..pts.len() {
                let r = (pts[i] - pts[j]).norm();
                if i != j && r > 0.0 {
                    s += ws[i] * ws[j] * r.ln();
                }
            }
            s
        })
        .sum())
}

/// `C_p = sup {sup_J |ρ_λ| : ‖λ‖_∞ = 1}`, estimated over `count` random
/// unit-sup-norm parameters.
pub fn norm_constant(base: BaseQuadratic, julia: &MeasureSamples, count: usize, seed: u64) -> Result<f64> {
    if julia.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..count {
        let mut l = [ZERO; 3];
        for x in l.iter_mut() {
            *x = Cx::from_polar(rng.gen::<f64>(), rng.gen::<f64>() * std::f64::consts::TAU);
        }
        let k = rng.gen_range(0..3);
        l[k] = Cx::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU);
        let p = SkewParams::from_lambda(l, base);
        best = best.max(sup_rho_on_julia(&p, &julia.points)?);
    }
    Ok(best)
}

/// Largest number of pairwise `separation`-apart points among `fibers`
/// whose fiber is bounded (`G(z, 0) < 10⁻⁶`), found greedily.
pub fn separated_bounded_fibers(params: &SkewParams, fibers: &[Cx], separation: f64, budget: u32) -> usize {
    let mut reps: Vec<Cx> = Vec::new();
    for &z in fibers {
        if reps.iter().any(|r| (r - z).norm() < separation) {
            continue;
        }
        if fiber_orbit(params, z, ZERO, budget).green < 1e-6 {
            reps.push(z);
        }
    }
    reps.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleSearch {
    pub trials: usize,
    /// Parameters with at least three separated bounded fibers.
    pub triples: usize,
    /// Parameters with exactly two.
    pub pairs: usize,
    pub max_found: usize,
}

/// Random parameters with `‖λ‖_∞ > min_norm`, half uniform in direction and
/// half with both roots of `ρ_λ` on periodic points of the base; counts
/// those with three well-separated bounded fibers among `fibers`.
pub fn triple_search(
    base: BaseQuadratic,
    fibers: &[Cx],
    roots: &[Cx],
    min_norm: f64,
    trials: usize,
    separation: f64,
    seed: u64,
) -> Result<TripleSearch> {
    if fibers.is_empty() || roots.is_empty() {
        return Err(Error::EmptySamples);
    }
    let found: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let scale = min_norm * (1.0 + 9.0 * rng.gen::<f64>());
            let l = if t % 2 == 0 {
                let mut l = [ZERO; 3];
                for x in l.iter_mut() {
                    *x = Cx::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
                }
                let m = l.iter().map(|x| x.norm()).fold(0.0, f64::max);
                l.map(|x| x * (scale / m))
            } else {
                let x = roots[rng.gen_range(0..roots.len())];
                let y = roots[rng.gen_range(0..roots.len())];
                let p = pi_map(ExtCx::Finite(x), ExtCx::Finite(y));
                p.coords().map(|c| c * scale)
            };
            let params = SkewParams::from_lambda(l, base);
            separated_bounded_fibers(&params, fibers, separation, DEFAULT_BUDGET)
        })
        .collect();
    Ok(TripleSearch {
        trials,
        triples: found.iter().filter(|&&k| k >= 3).count(),
        pairs: found.iter().filter(|&&k| k == 2).count(),
        max_found: found.iter().copied().max().unwrap_or(0),
    })
}
