//! Vertical periodic cycles, the multiplier potentials `L_n^v(λ, η)` and
//! their convergence toward `L_v` on slices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{ddc, field_lv, Estimator, Quantity, ScalarField};
use crate::cyclic;
use crate::dynamics::{BaseQuadratic, SkewParams, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::julia::periodic_cycles;
use crate::slice::ComplexLineSlice;
use crate::Cx;

/// `log|η − multiplier|` is floored at `log LOG_FLOOR`.
pub const LOG_FLOOR: f64 = 1e-300;
const SAME_POINT: f64 = 1e-8;

/// A cycle of `F` of exact period `n = m·k`: base cycle of exact period `m`
/// and a `k`-cycle of the return map `Q^m_z` over `z_cycle[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalCycle {
    pub z_cycle: Vec<Cx>,
    /// The `k` points of the cycle in the fiber over `z_cycle[0]`.
    pub w_points: Vec<Cx>,
    pub total_period: u32,
    /// `(Q^n_z)'(w)`.
    pub vertical_multiplier: Cx,
    /// 2 for a parabolic double root, else 1.
    pub multiplicity: u32,
}

/// One orbit per base cycle of exact period `m`, with a repelling flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactBaseCycle {
    pub orbit: Vec<Cx>,
    pub repelling: bool,
}

fn close(a: Cx, b: Cx) -> bool {
    (a - b).norm() < SAME_POINT * (1.0 + a.norm())
}

/// Base cycles of exact period `m`, one representative orbit each.
pub fn exact_base_cycles(base: &BaseQuadratic, m: u32) -> Result<Vec<ExactBaseCycle>> {
    let mut out: Vec<ExactBaseCycle> = Vec::new();
    for c in periodic_cycles(base, m)? {
        if c.point.exact_period != m {
            continue;
        }
        let seen = out.iter().any(|b| b.orbit.iter().any(|&z| close(z, c.point.z)));
        if !seen {
            out.push(ExactBaseCycle {
                orbit: c.orbit,
                repelling: c.point.repelling,
            });
        }
    }
    Ok(out)
}

fn divisors(n: u32) -> impl Iterator<Item = u32> {
    (1..=n).filter(move |m| n % m == 0)
}

/// Base cycles of every exact period dividing `n`.
pub fn base_cycles_dividing(base: &BaseQuadratic, n: u32) -> Result<Vec<ExactBaseCycle>> {
    let mut out = Vec::new();
    for m in divisors(n) {
        out.extend(exact_base_cycles(base, m)?);
    }
    Ok(out)
}

/// Vertical cycles of exact total period `n` over one base cycle, whose
/// length must divide `n`, with the number of roots of `Q^n_z(w) = w`
/// recovered (counted with multiplicity) out of `2^n`.
pub fn vertical_cycles_over(params: &SkewParams, z_cycle: &[Cx], n: u32) -> (Vec<VerticalCycle>, usize) {
    let m = z_cycle.len();
    let k = n as usize / m;
    let offsets: Vec<Cx> = (0..n as usize).map(|i| params.rho(z_cycle[i % m])).collect();
    let sol = cyclic::solve(&offsets, 4, 0x7e41 ^ ((n as u64) << 8) ^ m as u64);
    let found = sol.found();
    let mut out: Vec<VerticalCycle> = Vec::new();
    for c in sol.cycles {
        let w0 = c.orbit[0];
        let ret: Vec<Cx> = (0..k).map(|j| c.orbit[j * m]).collect();
        let exact = (1..=k)
            .find(|&j| k % j == 0 && (j == k || close(ret[j], w0)))
            .unwrap_or(k);
        if exact != k {
            continue;
        }
        if out.iter().any(|v| v.w_points.iter().any(|&w| close(w, w0))) {
            continue;
        }
        out.push(VerticalCycle {
            z_cycle: z_cycle.to_vec(),
            w_points: ret,
            total_period: n,
            vertical_multiplier: c.multiplier,
            multiplicity: c.multiplicity as u32,
        });
    }
    (out, found)
}

/// All cycles of `F` of exact period `n`, one representative per cycle.
pub fn vertical_cycles(params: &SkewParams, n: u32) -> Result<Vec<VerticalCycle>> {
    check_n(n)?;
    let mut out = Vec::new();
    let (mut found, mut expected) = (0, 0);
    for b in base_cycles_dividing(&params.base, n)? {
        let (v, f) = vertical_cycles_over(params, &b.orbit, n);
        found += f;
        expected += 1usize << n;
        out.extend(v);
    }
    if found != expected {
        return Err(Error::ResidualRoots {
            found,
            expected,
            roots: out.iter().map(|v| v.w_points[0]).collect(),
        });
    }
    Ok(out)
}

fn check_n(n: u32) -> Result<()> {
    if !(1..=6).contains(&n) {
        return Err(Error::InvalidArgument(format!("n = {n} outside 1..=6")));
    }
    Ok(())
}

/// `4^{-n} Σ log|η − (Q^n)'|` over vertical cycles of exact period `n` lying
/// over the given base cycles, each cycle counted once (times its
/// multiplicity). Returns the value and whether every root was recovered.
pub fn pern_value(params: &SkewParams, base_cycles: &[Vec<Cx>], n: u32, eta: Cx) -> (f64, bool) {
    let mut sum = 0.0;
    let mut complete = true;
    for orbit in base_cycles {
        let (cycles, found) = vertical_cycles_over(params, orbit, n);
        complete &= found == 1usize << n;
        for c in cycles {
            sum += c.multiplicity as f64 * (eta - c.vertical_multiplier).norm().max(LOG_FLOOR).ln();
        }
    }
    (sum * 4f64.powi(-(n as i32)), complete)
}

/// Repelling base cycles of exact period dividing `n`, one orbit each; the
/// base cycles over which [`pern_potential`] sums.
pub fn pern_base_cycles(base: &BaseQuadratic, n: u32) -> Result<Vec<Vec<Cx>>> {
    Ok(base_cycles_dividing(base, n)?
        .into_iter()
        .filter(|b| b.repelling)
        .map(|b| b.orbit)
        .collect())
}

/// `L_n^v(λ(s), η)` on the slice.
pub fn pern_potential(slice: &ComplexLineSlice, n: u32, eta: Cx) -> Result<ScalarField> {
    slice.validate()?;
    check_n(n)?;
    let cycles = pern_base_cycles(&slice.base, n)?;
    let nx = slice.resolution.0;
    let vals: Vec<(f64, bool)> = (0..slice.len())
        .into_par_iter()
        .map(|k| pern_value(&slice.params_at(k % nx, k / nx), &cycles, n, eta))
        .collect();
    let defects = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.1)
        .map(|(k, _)| (k % nx, k / nx))
        .collect();
    Ok(ScalarField {
        slice: slice.clone(),
        values: vals.into_iter().map(|v| v.0).collect(),
        quantity: Quantity::LnV { n, eta },
        defects,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionEntry {
    pub n: u32,
    /// `‖L_n^v − L_v‖_{L¹}`.
    pub potential_l1: f64,
    /// `‖dd^c L_n^v − dd^c L_v‖_{L¹}` over interior pixels.
    pub ddc_l1: f64,
    pub ddc_mass: f64,
    pub defects: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionReport {
    pub eta: Cx,
    pub lv_ddc_mass: f64,
    pub entries: Vec<EquidistributionEntry>,
    /// `potential_l1` strictly decreases along `n_list`.
    pub decreasing: bool,
}

fn interior_l1(a: &ScalarField, b: &ScalarField) -> f64 {
    let (nx, ny) = a.slice.resolution;
    let mut s = 0.0;
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            s += (a.get(i, j) - b.get(i, j)).abs();
        }
    }
    s * a.slice.pixel_area()
}

/// Distances of `L_n^v(·, η)` and its `dd^c` to `L_v` for each `n`.
pub fn equidistribution_report(
    slice: &ComplexLineSlice,
    n_list: &[u32],
    eta: Cx,
    lv: Estimator,
) -> Result<EquidistributionReport> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("empty n list".into()));
    }
    let target = field_lv(slice, lv, DEFAULT_BUDGET)?;
    let target_ddc = ddc(&target)?;
    let mut entries = Vec::new();
    for &n in n_list {
        let f = pern_potential(slice, n, eta)?;
        let d = ddc(&f)?;
        entries.push(EquidistributionEntry {
            n,
            potential_l1: f.l1_distance(&target)?,
            ddc_l1: interior_l1(&d, &target_ddc),
            ddc_mass: d.mass(),
            defects: f.defects.len(),
        });
    }
    let decreasing = entries.windows(2).all(|w| w[1].potential_l1 < w[0].potential_l1);
    Ok(EquidistributionReport {
        eta,
        lv_ddc_mass: target_ddc.mass(),
        entries,
        decreasing,
    })
}
