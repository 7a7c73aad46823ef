//! Lyapunov exponents of the base and of the vertical direction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fiber_orbit, fiber_orbit_cyclic, green_base, BaseQuadratic, SkewParams, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::julia::{periodic_cycles, BaseCycle, MeasureLabel, MeasureSamples};
use crate::Cx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    MeasureAvg,
    PeriodicFiber(u32),
    ReturnMap(u32),
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapEstimate {
    pub value: f64,
    pub estimator: EstimatorKind,
    pub sample_size: usize,
    pub stderr: f64,
}

/// `L_p = log 2 + G_p(0)`.
pub fn lyap_base(base: &BaseQuadratic) -> LyapEstimate {
    LyapEstimate {
        value: std::f64::consts::LN_2 + green_base(base, Cx::new(0.0, 0.0), DEFAULT_BUDGET),
        estimator: EstimatorKind::Base,
        sample_size: 1,
        stderr: 0.0,
    }
}

/// `L_v ≈ log 2 + Σ_i w_i G(z_i, 0)` over samples of `μ_p`.
pub fn lyap_vertical_measure(params: &SkewParams, mu_samples: &MeasureSamples) -> Result<LyapEstimate> {
    if mu_samples.label != MeasureLabel::MuP {
        return Err(Error::InvalidArgument("samples must be labelled mu_p".into()));
    }
    if mu_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let greens: Vec<f64> = mu_samples
        .points
        .par_iter()
        .map(|&z| fiber_orbit(params, z, Cx::new(0.0, 0.0), DEFAULT_BUDGET).green)
        .collect();
    let total_w: f64 = mu_samples.weights.iter().sum();
    let mean = greens.iter().zip(&mu_samples.weights).map(|(g, w)| g * w).sum::<f64>() / total_w;
    let n = greens.len() as f64;
    let var = if greens.len() > 1 {
        greens.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(LyapEstimate {
        value: std::f64::consts::LN_2 + mean,
        estimator: EstimatorKind::MeasureAvg,
        sample_size: greens.len(),
        stderr: (var / n).sqrt(),
    })
}

/// `ρ` along the orbit of a base cycle.
pub(crate) fn rho_along(params: &SkewParams, orbit: &[Cx]) -> Vec<Cx> {
    orbit.iter().map(|&z| params.rho(z)).collect()
}

/// `2^{-N} Σ_{z ∈ P_N} G(z, 0)` for precomputed base cycles.
pub fn periodic_green_mean(params: &SkewParams, cycles: &[BaseCycle], budget: u32) -> f64 {
    let n = cycles.len().max(1) as f64;
    cycles
        .iter()
        .map(|c| fiber_orbit_cyclic(&rho_along(params, &c.orbit), Cx::new(0.0, 0.0), budget).green)
        .sum::<f64>()
        / n
}

/// `L_v ≈ log 2 + 2^{-N} Σ_{p^N(z) = z} G(z, 0)`.
pub fn lyap_vertical_periodic(params: &SkewParams, n: u32) -> Result<LyapEstimate> {
    if !(1..=14).contains(&n) {
        return Err(Error::InvalidArgument(format!("N = {n} outside 1..=14")));
    }
    let cycles = periodic_cycles(&params.base, n)?;
    let sum: f64 = cycles
        .par_iter()
        .map(|c| fiber_orbit_cyclic(&rho_along(params, &c.orbit), Cx::new(0.0, 0.0), DEFAULT_BUDGET).green)
        .sum();
    Ok(LyapEstimate {
        value: std::f64::consts::LN_2 + sum * (-(n as f64)).exp2(),
        estimator: EstimatorKind::PeriodicFiber(n),
        sample_size: cycles.len(),
        stderr: 0.0,
    })
}

/// Critical points of the return map `Q^N_z` over a base cycle: for every
/// `i < N`, the `2^i` preimages of `0` (in the fiber over `z_i`) under
/// `Q^i_z`, listed with multiplicity.
pub fn return_map_critical_points(rho_cycle: &[Cx]) -> Vec<Cx> {
    let n = rho_cycle.len();
    let mut out = Vec::with_capacity((1usize << n) - 1);
    for i in 0..n {
        let mut level = vec![Cx::new(0.0, 0.0)];
        for j in (0..i).rev() {
            let mut next = Vec::with_capacity(level.len() * 2);
            for &w in &level {
                let s = (w - rho_cycle[j]).sqrt();
                next.push(s);
                next.push(-s);
            }
            level = next;
        }
        out.extend(level);
    }
    out
}

/// Sum of `G(z, w)` over the critical points of the return map of one cycle.
pub fn return_map_green_sum(params: &SkewParams, orbit: &[Cx], budget: u32) -> f64 {
    let rc = rho_along(params, orbit);
    return_map_critical_points(&rc)
        .iter()
        .map(|&w| fiber_orbit_cyclic(&rc, w, budget).green)
        .sum()
}

/// `L_v ≈ log 2 + (N 2^N)^{-1} Σ_{z ∈ R_N} Σ_{w ∈ C(Q^N_z)} G_{Q^N_z}(w)`.
pub fn lyap_vertical_return(params: &SkewParams, n: u32) -> Result<LyapEstimate> {
    if !(1..=8).contains(&n) {
        return Err(Error::InvalidArgument(format!("N = {n} outside 1..=8")));
    }
    let cycles: Vec<BaseCycle> = periodic_cycles(&params.base, n)?
        .into_iter()
        .filter(|c| c.point.repelling)
        .collect();
    let sum: f64 = cycles
        .par_iter()
        .map(|c| return_map_green_sum(params, &c.orbit, DEFAULT_BUDGET))
        .sum();
    Ok(LyapEstimate {
        value: std::f64::consts::LN_2 + sum / (n as f64 * (n as f64).exp2()),
        estimator: EstimatorKind::ReturnMap(n),
        sample_size: cycles.len(),
        stderr: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::julia::sample_mu_p;

    #[test]
    fn zero_map_is_log2() {
        let p = SkewParams::from_lambda([Cx::new(0.0, 0.0); 3], BaseQuadratic::z2());
        let ln2 = std::f64::consts::LN_2;
        assert_eq!(lyap_vertical_periodic(&p, 5).unwrap().value, ln2);
        assert_eq!(lyap_vertical_return(&p, 2).unwrap().value, ln2);
        let mu = sample_mu_p(&p.base, 100, 1);
        assert_eq!(lyap_vertical_measure(&p, &mu).unwrap().value, ln2);
    }

    #[test]
    fn critical_point_count() {
        let rc = vec![Cx::new(0.3, 0.0), Cx::new(-1.0, 0.5), Cx::new(2.0, 0.0)];
        assert_eq!(return_map_critical_points(&rc).len(), 7);
    }
}
