//! Dynamics of the base polynomial: periodic points, samples of the
//! equilibrium measure and Fatou component labels.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cyclic;
use crate::dynamics::{green_base, BaseQuadratic, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::Cx;

pub const MU_BURN_IN: usize = 50;
pub const DEFAULT_JULIA_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub z: Cx,
    pub exact_period: u32,
    /// Derivative of `p^n` at `z`, `n` the query period.
    pub base_multiplier: Cx,
    pub repelling: bool,
}

/// Full cycle data behind a [`PeriodicPoint`]: the orbit over one query period.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCycle {
    pub point: PeriodicPoint,
    pub orbit: Vec<Cx>,
}

fn exact_period(base: &BaseQuadratic, z: Cx, n: u32) -> u32 {
    let mut w = z;
    for m in 1..=n {
        w = base.eval(w);
        if n % m == 0 && (w - z).norm() < 1e-8 {
            return m;
        }
    }
    n
}

/// All solutions of `p^n(z) = z` together with their orbits.
pub fn periodic_cycles(base: &BaseQuadratic, n: u32) -> Result<Vec<BaseCycle>> {
    if !(1..=16).contains(&n) {
        return Err(Error::InvalidArgument(format!("period {n} outside 1..=16")));
    }
    let offsets = vec![base.d; n as usize];
    let out = cyclic::solve(&offsets, 4, 0x9e37 + n as u64);
    let cycles: Vec<BaseCycle> = out
        .cycles
        .iter()
        .map(|c| {
            let z = c.orbit[0];
            BaseCycle {
                point: PeriodicPoint {
                    z,
                    exact_period: exact_period(base, z, n),
                    base_multiplier: c.multiplier,
                    repelling: c.multiplier.norm() > 1.0,
                },
                orbit: c.orbit.clone(),
            }
        })
        .collect();
    if !out.complete() {
        return Err(Error::ResidualRoots {
            found: out.found(),
            expected: out.expected,
            roots: cycles.iter().map(|c| c.point.z).collect(),
        });
    }
    Ok(cycles)
}

/// The `2^n` solutions of `p^n(z) = z`, labelled with exact period and multiplier.
pub fn periodic_points(base: &BaseQuadratic, n: u32) -> Result<Vec<PeriodicPoint>> {
    Ok(periodic_cycles(base, n)?.into_iter().map(|c| c.point).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureLabel {
    MuP,
    Julia,
    Custom,
}

/// Weighted atoms approximating a measure on the base plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSamples {
    pub points: Vec<Cx>,
    pub weights: Vec<f64>,
    pub label: MeasureLabel,
}

impl MeasureSamples {
    pub fn uniform(points: Vec<Cx>, label: MeasureLabel) -> Self {
        let w = 1.0 / points.len().max(1) as f64;
        let weights = vec![w; points.len()];
        Self { points, weights, label }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "re,im,weight")?;
        for (z, w) in self.points.iter().zip(&self.weights) {
            writeln!(out, "{:e},{:e},{:e}", z.re, z.im, w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, label: MeasureLabel) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
            if cols.len() != 3 {
                return Err(Error::InvalidArgument(format!(
                    "line {}: expected 3 columns",
                    lineno + 1
                )));
            }
            points.push(Cx::new(cols[0], cols[1]));
            weights.push(cols[2]);
        }
        Ok(Self { points, weights, label })
    }
}

/// Inverse-iteration samples of the equilibrium measure `μ_p`.
///
/// Every sample is an independent walk of [`MU_BURN_IN`] random inverse
/// branches started at the repelling fixed point.
pub fn sample_mu_p(base: &BaseQuadratic, count: usize, seed: u64) -> MeasureSamples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = base.beta_fixed_point();
    let points = (0..count)
        .map(|_| {
            let mut bits: u64 = rng.gen();
            let mut z = start;
            for _ in 0..MU_BURN_IN {
                let s = (z - base.d).sqrt();
                z = if bits & 1 == 1 { -s } else { s };
                bits >>= 1;
            }
            z
        })
        .collect();
    MeasureSamples::uniform(points, MeasureLabel::MuP)
}

/// Julia-set samples: repelling periodic points of low period followed by
/// inverse-iteration samples, `count` in total.
pub fn julia_samples(base: &BaseQuadratic, count: usize, seed: u64) -> MeasureSamples {
    let mut points: Vec<Cx> = Vec::new();
    let mut n = 1;
    while n <= 6 && (1usize << n) <= count / 4 {
        if let Ok(pts) = periodic_points(base, n) {
            for p in pts {
                if p.repelling && p.exact_period == n {
                    points.push(p.z);
                }
            }
        }
        n += 1;
    }
    let rest = count.saturating_sub(points.len());
    points.extend(sample_mu_p(base, rest, seed).points);
    points.truncate(count);
    MeasureSamples::uniform(points, MeasureLabel::Julia)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FatouLabel {
    Infinity,
    /// Bounded Fatou component, indexed by the attracting-cycle component it
    /// maps onto in phase.
    Bounded(u32),
    /// The point lies on `J_p` (no Fatou component).
    Julia,
}

impl std::fmt::Display for FatouLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FatouLabel::Infinity => write!(f, "infinity"),
            FatouLabel::Bounded(k) => write!(f, "bounded:{k}"),
            FatouLabel::Julia => write!(f, "julia"),
        }
    }
}

/// The attracting cycle of the base, if the critical orbit converges to one.
pub fn attracting_cycle(base: &BaseQuadratic) -> Option<Vec<Cx>> {
    let mut z = Cx::new(0.0, 0.0);
    for _ in 0..20_000 {
        z = base.eval(z);
        if z.norm() > 1e10 {
            return None;
        }
    }
    for q in 1..=64usize {
        let mut orbit = Vec::with_capacity(q);
        let mut w = z;
        for _ in 0..q {
            orbit.push(w);
            w = base.eval(w);
        }
        if (w - z).norm() < 1e-9 {
            let offsets = vec![base.d; q];
            if cyclic::refine(&offsets, &mut orbit) {
                let mult: Cx = orbit.iter().fold(Cx::new(1.0, 0.0), |acc, &v| acc * v * 2.0);
                if mult.norm() < 1.0 - 1e-9 {
                    return Some(orbit);
                }
            }
            return None;
        }
    }
    None
}

/// Which Fatou component contains `z`.
pub fn fatou_component_id(base: &BaseQuadratic, z: Cx) -> Result<FatouLabel> {
    if green_base(base, z, DEFAULT_BUDGET) > 0.0 {
        return Ok(FatouLabel::Infinity);
    }
    if base.d == Cx::new(0.0, 0.0) {
        return Ok(if z.norm() < 1.0 - 1e-9 {
            FatouLabel::Bounded(0)
        } else {
            FatouLabel::Julia
        });
    }
    if base.d == Cx::new(-2.0, 0.0) {
        return Ok(FatouLabel::Julia);
    }
    let cycle = attracting_cycle(base)
        .ok_or_else(|| Error::Unsupported(format!("base d = {} has no attracting cycle", base.d)))?;
    let q = cycle.len();
    // landing radius: a disk on which the cycle's return map contracts
    let mut w = z;
    for k in 0..DEFAULT_BUDGET as usize * 10 {
        for (j, c) in cycle.iter().enumerate() {
            if (w - c).norm() < 1e-6 {
                let label = (j + q * (k / q + 1) - k % q) % q;
                return Ok(FatouLabel::Bounded(label as u32));
            }
        }
        w = base.eval(w);
    }
    Ok(FatouLabel::Julia)
}
