//! Parameter-space fields on complex-line slices: `L_v` grids, discrete
//! `dd^c` densities, `B_z` masks, the C/D/M partition and the decomposition
//! of the bifurcation current over base fibers.

use std::collections::VecDeque;
use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fiber_orbit, fiber_orbit_cyclic, green_base, SkewParams, ESCAPE_THRESHOLD, SENTINEL};
use crate::error::{Error, Result};
use crate::julia::{periodic_cycles, sample_mu_p, MeasureLabel, MeasureSamples};
use crate::lyapunov::rho_along;
use crate::slice::ComplexLineSlice;
use crate::Cx;

/// `dd^c` support is read above `max(NOISE_MULTIPLE · noise, PEAK_FRACTION · peak)`.
pub const NOISE_MULTIPLE: f64 = 10.0;
pub const PEAK_FRACTION: f64 = 1e-6;
pub const NOISE_QUANTILE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    Lv,
    LnV {
        n: u32,
        eta: Cx,
    },
    Gz {
        z: Cx,
    },
    /// `Σ_k w_k G(λ, z_k, 0)` over a weighted fiber set.
    GzMean {
        fibers: usize,
    },
    Ddc {
        of: Box<Quantity>,
    },
}

impl Quantity {
    pub fn ddc_of(q: Quantity) -> Self {
        Quantity::Ddc { of: Box::new(q) }
    }
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quantity::Lv => write!(f, "Lv"),
            Quantity::LnV { n, eta } => write!(f, "LnV(n={n},eta={eta})"),
            Quantity::Gz { z } => write!(f, "Gz(z={z})"),
            Quantity::GzMean { fibers } => write!(f, "GzMean({fibers})"),
            Quantity::Ddc { of } => write!(f, "ddc({of})"),
        }
    }
}

/// Row-major real grid over a slice, `values[j·res_x + i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub slice: ComplexLineSlice,
    pub values: Vec<f64>,
    pub quantity: Quantity,
    /// Pixels whose value could not be computed reliably.
    pub defects: Vec<(usize, usize)>,
}

impl ScalarField {
    pub fn from_fn<F>(slice: &ComplexLineSlice, quantity: Quantity, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let (nx, ny) = slice.resolution;
        let values = (0..nx * ny).into_par_iter().map(|k| f(k % nx, k / nx)).collect();
        Self {
            slice: slice.clone(),
            values,
            quantity,
            defects: Vec::new(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.slice.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn interior(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (nx, ny) = self.slice.resolution;
        self.values.iter().copied().enumerate().filter(move |(k, _)| {
            let (i, j) = (k % nx, k / nx);
            i > 0 && j > 0 && i + 1 < nx && j + 1 < ny
        })
    }

    /// Sum over interior pixels times pixel area.
    pub fn mass(&self) -> f64 {
        self.interior().map(|(_, v)| v).sum::<f64>() * self.slice.pixel_area()
    }

    /// Mass of the positive part over interior pixels.
    pub fn positive_mass(&self) -> f64 {
        self.interior().map(|(_, v)| v.max(0.0)).sum::<f64>() * self.slice.pixel_area()
    }

    /// `Σ |u − v| · pixel area` over the whole grid.
    pub fn l1_distance(&self, other: &ScalarField) -> Result<f64> {
        if self.slice.resolution != other.slice.resolution {
            return Err(Error::InvalidArgument("field geometries differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.slice.pixel_area())
    }

    /// Largest `|value|` over interior pixels of `region`.
    pub fn noise_floor_on(&self, region: &Mask) -> f64 {
        self.interior()
            .filter(|(k, _)| region.values[*k])
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Noise estimate for a `dd^c` density of a plurisubharmonic function.
    /// The true density is nonnegative, so negative values are discretisation
    /// or sampling error; the estimate is the [`NOISE_QUANTILE`] quantile of
    /// their magnitudes over interior pixels.
    pub fn noise_floor(&self) -> f64 {
        let mut neg: Vec<f64> = self.interior().filter(|(_, v)| *v < 0.0).map(|(_, v)| -v).collect();
        if neg.is_empty() {
            return 0.0;
        }
        neg.sort_by(f64::total_cmp);
        neg[((neg.len() - 1) as f64 * NOISE_QUANTILE).round() as usize]
    }

    pub fn support_threshold(&self, noise_floor: f64) -> f64 {
        let peak = self.interior().map(|(_, v)| v).fold(0.0, f64::max);
        (NOISE_MULTIPLE * noise_floor).max(PEAK_FRACTION * peak)
    }

    /// Interior pixels strictly above [`Self::support_threshold`].
    pub fn support(&self, noise_floor: f64) -> Mask {
        let t = self.support_threshold(noise_floor);
        let mut values = vec![false; self.values.len()];
        for (k, v) in self.interior() {
            values[k] = v > t;
        }
        Mask {
            slice: self.slice.clone(),
            values,
        }
    }
}

/// Boolean grid over a slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    pub slice: ComplexLineSlice,
    pub values: Vec<bool>,
}

impl Mask {
    pub fn empty(slice: &ComplexLineSlice) -> Self {
        Self {
            slice: slice.clone(),
            values: vec![false; slice.len()],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.values[self.slice.index(i, j)]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| **v).count()
    }

    /// Pixels whose value differs from a 4-neighbour.
    pub fn boundary(&self) -> Mask {
        let (nx, ny) = self.slice.resolution;
        let mut out = vec![false; self.values.len()];
        for j in 0..ny {
            for i in 0..nx {
                let v = self.get(i, j);
                let differs = (i > 0 && self.get(i - 1, j) != v)
                    || (i + 1 < nx && self.get(i + 1, j) != v)
                    || (j > 0 && self.get(i, j - 1) != v)
                    || (j + 1 < ny && self.get(i, j + 1) != v);
                out[self.slice.index(i, j)] = differs;
            }
        }
        Mask {
            slice: self.slice.clone(),
            values: out,
        }
    }

    pub fn union(&self, other: &Mask) -> Mask {
        Mask {
            slice: self.slice.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| *a || *b).collect(),
        }
    }

    /// Chebyshev (8-neighbour) distance in pixels to the nearest set pixel;
    /// `usize::MAX` everywhere when the mask is empty.
    pub fn distance_map(&self) -> Vec<usize> {
        let (nx, ny) = self.slice.resolution;
        let mut dist = vec![usize::MAX; self.values.len()];
        let mut queue = VecDeque::new();
        for (k, v) in self.values.iter().enumerate() {
            if *v {
                dist[k] = 0;
                queue.push_back(k);
            }
        }
        while let Some(k) = queue.pop_front() {
            let (i, j) = ((k % nx) as isize, (k / nx) as isize);
            for dj in -1..=1 {
                for di in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                        continue;
                    }
                    let n = b as usize * nx + a as usize;
                    if dist[n] == usize::MAX {
                        dist[n] = dist[k] + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    /// Pixels within Chebyshev distance `r` of the mask.
    pub fn dilate(&self, r: usize) -> Mask {
        Mask {
            slice: self.slice.clone(),
            values: self.distance_map().into_iter().map(|d| d <= r).collect(),
        }
    }

    /// Largest distance from a pixel of `self` to the nearest pixel of `other`
    /// (`None` if `other` is empty while `self` is not).
    pub fn directed_distance(&self, other: &Mask) -> Option<usize> {
        if self.count() == 0 {
            return Some(0);
        }
        let d = other.distance_map();
        let m = self
            .values
            .iter()
            .zip(&d)
            .filter(|(v, _)| **v)
            .map(|(_, d)| *d)
            .max()
            .unwrap_or(0);
        (m != usize::MAX).then_some(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    Measure { count: usize, seed: u64 },
    Periodic { n: u32 },
}

enum Prepared {
    Measure(MeasureSamples),
    Periodic(Vec<Vec<Cx>>),
}

impl Prepared {
    fn new(slice: &ComplexLineSlice, est: Estimator) -> Result<Self> {
        Ok(match est {
            Estimator::Measure { count, seed } => {
                if count == 0 {
                    return Err(Error::EmptySamples);
                }
                Prepared::Measure(sample_mu_p(&slice.base, count, seed))
            }
            Estimator::Periodic { n } => {
                if !(1..=14).contains(&n) {
                    return Err(Error::InvalidArgument(format!("N = {n} outside 1..=14")));
                }
                Prepared::Periodic(periodic_cycles(&slice.base, n)?.into_iter().map(|c| c.orbit).collect())
            }
        })
    }

    fn lv(&self, params: &SkewParams, budget: u32) -> f64 {
        let zero = Cx::new(0.0, 0.0);
        let mean = match self {
            Prepared::Measure(m) => {
                let total: f64 = m.weights.iter().sum();
                m.points
                    .iter()
                    .zip(&m.weights)
                    .map(|(&z, w)| w * fiber_orbit(params, z, zero, budget).green)
                    .sum::<f64>()
                    / total
            }
            Prepared::Periodic(orbits) => {
                orbits
                    .iter()
                    .map(|o| fiber_orbit_cyclic(&rho_along(params, o), zero, budget).green)
                    .sum::<f64>()
                    / orbits.len() as f64
            }
        };
        LN_2 + mean
    }
}

/// `L_v` at every pixel with one shared sample set across the slice.
pub fn field_lv(slice: &ComplexLineSlice, estimator: Estimator, budget: u32) -> Result<ScalarField> {
    slice.validate()?;
    let prep = Prepared::new(slice, estimator)?;
    let mut field = ScalarField::from_fn(slice, Quantity::Lv, |i, j| prep.lv(&slice.params_at(i, j), budget));
    repair(&mut field, |i, j| {
        prep.lv(&slice.params_at(i, j), budget.saturating_mul(2))
    });
    Ok(field)
}

/// Recompute non-finite pixels with `retry`; pixels that stay non-finite are
/// set to 0 and listed as defects.
fn repair<F: Fn(usize, usize) -> f64>(field: &mut ScalarField, retry: F) {
    let nx = field.slice.resolution.0;
    for k in 0..field.values.len() {
        if field.values[k].is_finite() {
            continue;
        }
        let (i, j) = (k % nx, k / nx);
        let v = retry(i, j);
        if v.is_finite() {
            field.values[k] = v;
        } else {
            field.values[k] = 0.0;
            field.defects.push((i, j));
        }
    }
}

/// `G(λ(s), z0, 0)` at every pixel.
pub fn field_green(slice: &ComplexLineSlice, z0: Cx, budget: u32) -> Result<ScalarField> {
    slice.validate()?;
    check_fiber(slice, z0)?;
    Ok(ScalarField::from_fn(slice, Quantity::Gz { z: z0 }, |i, j| {
        fiber_orbit(&slice.params_at(i, j), z0, Cx::new(0.0, 0.0), budget).green
    }))
}

/// 5-point Laplacian over `2π`, boundary ring set to zero.
pub fn ddc(field: &ScalarField) -> Result<ScalarField> {
    let (nx, ny) = field.slice.resolution;
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidArgument("ddc needs at least 3x3 pixels".into()));
    }
    let (hx, hy) = field.slice.pitch();
    let u = &field.values;
    let mut out = vec![0.0; u.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        if j == 0 || j + 1 == ny {
            return;
        }
        for i in 1..nx - 1 {
            let k = j * nx + i;
            let lap = (u[k - 1] + u[k + 1] - 2.0 * u[k]) / (hx * hx) + (u[k - nx] + u[k + nx] - 2.0 * u[k]) / (hy * hy);
            row[i] = lap / (2.0 * PI);
        }
    });
    Ok(ScalarField {
        slice: field.slice.clone(),
        values: out,
        quantity: Quantity::ddc_of(field.quantity.clone()),
        defects: field.defects.clone(),
    })
}

fn check_fiber(slice: &ComplexLineSlice, z0: Cx) -> Result<()> {
    if green_base(&slice.base, z0, crate::dynamics::DEFAULT_BUDGET) >= 1e-9 {
        return Err(Error::InvalidFiber(z0));
    }
    Ok(())
}

/// `B_{z0} = {λ(s) : the critical orbit over z0 stays bounded}` on the grid.
pub fn bz_mask(slice: &ComplexLineSlice, z0: Cx, budget: u32) -> Result<Mask> {
    slice.validate()?;
    check_fiber(slice, z0)?;
    let (nx, ny) = slice.resolution;
    let values = (0..nx * ny)
        .into_par_iter()
        .map(|k| fiber_orbit(&slice.params_at(k % nx, k / nx), z0, Cx::new(0.0, 0.0), budget).is_bounded())
        .collect();
    Ok(Mask {
        slice: slice.clone(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CdmLabel {
    C,
    D,
    M,
    #[serde(rename = "boundary-uncertain")]
    BoundaryUncertain,
}

impl std::fmt::Display for CdmLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CdmLabel::C => "C",
            CdmLabel::D => "D",
            CdmLabel::M => "M",
            CdmLabel::BoundaryUncertain => "boundary-uncertain",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdmVerdict {
    pub label: CdmLabel,
    pub bounded: usize,
    pub escaped: usize,
}

fn verdict(bounded: usize, escaped: usize) -> CdmLabel {
    match (bounded, escaped) {
        (_, 0) => CdmLabel::C,
        (0, _) => CdmLabel::D,
        (b, e) if b.min(e) == 1 => CdmLabel::BoundaryUncertain,
        _ => CdmLabel::M,
    }
}

/// C / D / M by the fate of `(z, 0)` over Julia samples `z`, with Green
/// values below [`GREEN_FLOOR`](crate::dynamics::GREEN_FLOOR) read as bounded. A
/// single dissenting sample gives [`CdmLabel::BoundaryUncertain`].
pub fn classify_cdm(params: &SkewParams, julia: &MeasureSamples, budget: u32) -> Result<CdmVerdict> {
    if julia.label != MeasureLabel::Julia {
        return Err(Error::InvalidArgument("samples must be labelled julia".into()));
    }
    if julia.is_empty() {
        return Err(Error::EmptySamples);
    }
    let bounded = julia
        .points
        .iter()
        .filter(|&&z| fiber_orbit(params, z, Cx::new(0.0, 0.0), budget).is_bounded_within_floor())
        .count();
    let escaped = julia.len() - bounded;
    Ok(CdmVerdict {
        label: verdict(bounded, escaped),
        bounded,
        escaped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMask {
    pub slice: ComplexLineSlice,
    pub labels: Vec<CdmLabel>,
}

impl ClassMask {
    pub fn get(&self, i: usize, j: usize) -> CdmLabel {
        self.labels[self.slice.index(i, j)]
    }

    pub fn count(&self, label: CdmLabel) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

pub fn class_mask(slice: &ComplexLineSlice, julia: &MeasureSamples, budget: u32) -> Result<ClassMask> {
    slice.validate()?;
    let (nx, ny) = slice.resolution;
    let labels = (0..nx * ny)
        .into_par_iter()
        .map(|k| classify_cdm(&slice.params_at(k % nx, k / nx), julia, budget).map(|v| v.label))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassMask {
        slice: slice.clone(),
        labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `‖dd^c(Σ w_k G_k) − Σ w_k dd^c G_k‖_{L¹}`.
    pub linearity_l1: f64,
    pub noise_floor: f64,
    pub support_pixels: usize,
    pub bif_pixels: usize,
    /// Max distance (px) from the support to `∪ Bif_z`.
    pub support_to_bif: Option<usize>,
    /// Max distance (px) from `∪ Bif_z` to the support.
    pub bif_to_support: Option<usize>,
    /// Support pixels farther than 2 px from `∪ Bif_z`.
    pub support_outside_2px: usize,
}

impl DecompositionReport {
    pub fn hausdorff(&self) -> Option<usize> {
        Some(self.support_to_bif?.max(self.bif_to_support?))
    }
}

struct Probe {
    green: f64,
    bounded: bool,
    /// `|w_n| log|w_n| / |∂_s w_n|` at escape, infinite for bounded orbits.
    distance: f64,
}

/// Critical orbit over `z0` together with its derivative along the slice.
fn probe(slice: &ComplexLineSlice, s: Cx, z0: Cx, budget: u32) -> Probe {
    let params = slice.params_at_s(s);
    let dir = slice.direction;
    let track = params.base.track(z0);
    let mut z = z0;
    let mut w = Cx::new(0.0, 0.0);
    let mut dw = Cx::new(0.0, 0.0);
    for n in 1..=budget {
        dw = 2.0 * w * dw + dir[0] * z * z + dir[1] * z + dir[2];
        w = w * w + params.rho(z);
        z = params.base.advance(z, track);
        if !(w.norm() <= ESCAPE_THRESHOLD) {
            let r = w.norm();
            let log_abs = if r.is_finite() { r.ln() } else { SENTINEL.ln() };
            let distance = r / dw.norm() * log_abs;
            return Probe {
                green: log_abs * (-(n as f64)).exp2(),
                bounded: false,
                distance: if distance.is_nan() { f64::INFINITY } else { distance },
            };
        }
    }
    Probe {
        green: 0.0,
        bounded: true,
        distance: f64::INFINITY,
    }
}

fn probe_grid(slice: &ComplexLineSlice, z0: Cx, budget: u32) -> Vec<Probe> {
    let nx = slice.resolution.0;
    (0..slice.len())
        .into_par_iter()
        .map(|k| probe(slice, slice.s_at(k % nx, k / nx), z0, budget))
        .collect()
}

fn raster_from(slice: &ComplexLineSlice, probes: &[Probe]) -> Mask {
    let bounded = Mask {
        slice: slice.clone(),
        values: probes.iter().map(|p| p.bounded).collect(),
    };
    let (hx, hy) = slice.pitch();
    let h = hx.max(hy);
    let mut out = bounded.boundary();
    for (v, p) in out.values.iter_mut().zip(probes) {
        *v |= p.distance < h;
    }
    out
}

/// Raster of `Bif_{z0} = ∂B_{z0}`: the 4-neighbour boundary of [`bz_mask`]
/// together with escaping pixels whose distance estimate to `B_{z0}` is
/// below one pixel pitch, so that parts of the boundary thinner than a
/// pixel are kept.
pub fn bif_raster(slice: &ComplexLineSlice, z0: Cx, budget: u32) -> Result<Mask> {
    slice.validate()?;
    check_fiber(slice, z0)?;
    Ok(raster_from(slice, &probe_grid(slice, z0, budget)))
}

/// Compares `dd^c` of the weighted fiber-Green average with the weighted
/// average of per-fiber `dd^c`, and the support of the former with the union
/// of the [`bif_raster`]s.
pub fn decomposition_check(
    slice: &ComplexLineSlice,
    fibers: &[Cx],
    weights: &[f64],
    budget: u32,
) -> Result<DecompositionReport> {
    slice.validate()?;
    if fibers.is_empty() {
        return Err(Error::EmptySamples);
    }
    if fibers.len() != weights.len() {
        return Err(Error::InvalidArgument("fibers and weights differ in length".into()));
    }
    for &z in fibers {
        check_fiber(slice, z)?;
    }
    let n = slice.len();
    let mut mean = vec![0.0; n];
    let mut ddc_mean = vec![0.0; n];
    let mut bif = Mask::empty(slice);
    for (&z, &w) in fibers.iter().zip(weights) {
        let probes = probe_grid(slice, z, budget);
        let g = ScalarField {
            slice: slice.clone(),
            values: probes.iter().map(|p| p.green).collect(),
            quantity: Quantity::Gz { z },
            defects: Vec::new(),
        };
        let dg = ddc(&g)?;
        for k in 0..n {
            mean[k] += w * g.values[k];
            ddc_mean[k] += w * dg.values[k];
        }
        bif = bif.union(&raster_from(slice, &probes));
    }
    let mean = ScalarField {
        slice: slice.clone(),
        values: mean,
        quantity: Quantity::GzMean { fibers: fibers.len() },
        defects: Vec::new(),
    };
    let d_of_mean = ddc(&mean)?;
    let mean_of_d = ScalarField {
        values: ddc_mean,
        ..d_of_mean.clone()
    };
    let noise = d_of_mean.noise_floor();
    let support = d_of_mean.support(noise);
    let dist = bif.distance_map();
    let support_outside_2px = support.values.iter().zip(&dist).filter(|(s, d)| **s && **d > 2).count();
    Ok(DecompositionReport {
        linearity_l1: d_of_mean.l1_distance(&mean_of_d)?,
        noise_floor: noise,
        support_pixels: support.count(),
        bif_pixels: bif.count(),
        support_to_bif: support.directed_distance(&bif),
        bif_to_support: bif.directed_distance(&support),
        support_outside_2px,
    })
}
