//! Per-parameter diagnostics shared by the commands and the HTTP API.

use serde::Serialize;
use skewprod::pern::vertical_cycles;
use skewprod::topology::{r_f, DEFAULT_LIFT_STEPS};
use skewprod::{
    classify_cdm, component_type, fiber_orbit, julia_samples, julia_topology_label, lift_curve, lyap_base,
    lyap_vertical_measure, lyap_vertical_periodic, sample_mu_p, CdmVerdict, ComplexLineSlice, Cx, Error, FatouLabel,
    LiftResult, LoopParam, LyapEstimate, SkewParams,
};

use crate::config::{EstimatorChoice, JobConfig};

const ZERO_CX: Cx = Cx::new(0.0, 0.0);

/// A Lyapunov estimate in the flat form emitted by `lyap`.
#[derive(Debug, Clone, Serialize)]
pub struct LyapReport {
    pub value: f64,
    pub estimator: String,
    pub n_or_count: usize,
    pub stderr: f64,
}

impl LyapReport {
    fn new(e: LyapEstimate, estimator: &str, n_or_count: usize) -> Self {
        Self {
            value: e.value,
            estimator: estimator.into(),
            n_or_count,
            stderr: e.stderr,
        }
    }
}

pub fn vertical_lyapunov(cfg: &JobConfig, params: &SkewParams) -> skewprod::Result<LyapReport> {
    Ok(match cfg.estimator {
        EstimatorChoice::Periodic => LyapReport::new(
            lyap_vertical_periodic(params, cfg.periodic_n)?,
            "periodic",
            cfg.periodic_n as usize,
        ),
        EstimatorChoice::Measure => {
            let mu = sample_mu_p(&params.base, cfg.mu_count, cfg.seed);
            LyapReport::new(lyap_vertical_measure(params, &mu)?, "measure", cfg.mu_count)
        }
    })
}

pub fn base_lyapunov(params: &SkewParams) -> LyapReport {
    LyapReport::new(lyap_base(&params.base), "base", 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeGreen {
    pub z: Cx,
    pub green: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PernHit {
    pub n: u32,
    pub eta: Cx,
    pub multiplier: Cx,
    pub distance: f64,
    pub w_points: Vec<Cx>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub s: Cx,
    pub lambda: [Cx; 3],
    pub d: Cx,
    pub probes: Vec<ProbeGreen>,
    pub lv: LyapReport,
    pub cdm: CdmVerdict,
    /// For each period, the vertical cycle whose multiplier is nearest `η`.
    pub per_n: Vec<PernHit>,
}

/// Periods scanned for nearest `Per_n` hits.
pub const POINT_MAX_PERIOD: u32 = 3;

pub fn point_report(cfg: &JobConfig, slice: &ComplexLineSlice, s: Cx, eta: Cx) -> skewprod::Result<PointReport> {
    let params = slice.params_at_s(s);
    let julia = julia_samples(&params.base, cfg.julia_samples, cfg.seed);
    let probes = cfg
        .probes()
        .into_iter()
        .map(|z| ProbeGreen {
            z,
            green: fiber_orbit(&params, z, ZERO_CX, cfg.budget).green,
        })
        .collect();
    let mut per_n = Vec::new();
    for n in 1..=POINT_MAX_PERIOD.min(cfg.periodic_n) {
        let best = vertical_cycles(&params, n)?
            .into_iter()
            .map(|c| ((c.vertical_multiplier - eta).norm(), c))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((distance, c)) = best {
            per_n.push(PernHit {
                n,
                eta,
                multiplier: c.vertical_multiplier,
                distance,
                w_points: c.w_points,
            });
        }
    }
    Ok(PointReport {
        s,
        lambda: params.lambda(),
        d: params.base.d,
        probes,
        lv: vertical_lyapunov(cfg, &params)?,
        cdm: classify_cdm(&params, &julia, cfg.budget)?,
        per_n,
    })
}

/// Lift of `{|z| = 1} × {w0}` for `p = z²`, with `w0 = r(F)/2` by default.
pub fn lift_report(
    cfg: &JobConfig,
    params: &SkewParams,
    w0: Option<Cx>,
    steps: Option<usize>,
) -> skewprod::Result<LiftResult> {
    if params.base.d != ZERO_CX {
        return Err(Error::Unsupported("loop lifts are available for d = 0 only".into()));
    }
    let julia = julia_samples(&params.base, cfg.julia_samples, cfg.seed);
    let rf = r_f(params, &julia.points)?;
    let w0 = w0.unwrap_or(Cx::new(rf / 2.0, 0.0));
    let lp = LoopParam::unit_circle(w0);
    if !lp.admissible(rf) {
        return Err(Error::InvalidArgument(format!(
            "|w0| = {} is not below r(F) = {rf}",
            w0.norm()
        )));
    }
    lift_curve(params, &lp, steps.unwrap_or(DEFAULT_LIFT_STEPS))
}

#[derive(Debug, Clone, Serialize)]
pub struct TopologyReport {
    pub lambda: [Cx; 3],
    pub d: Cx,
    pub component_type: Result<(FatouLabel, FatouLabel), String>,
    pub label: Result<String, String>,
    pub lift: Result<LiftResult, String>,
}

pub fn topology_report(cfg: &JobConfig, params: &SkewParams) -> TopologyReport {
    TopologyReport {
        lambda: params.lambda(),
        d: params.base.d,
        component_type: component_type(params).map_err(|e| e.to_string()),
        label: julia_topology_label(params, 4)
            .map(|l| l.to_string())
            .map_err(|e| e.to_string()),
        lift: lift_report(cfg, params, None, None).map_err(|e| e.to_string()),
    }
}
