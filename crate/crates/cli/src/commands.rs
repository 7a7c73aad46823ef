//! Batch commands. Each writes its artifacts under the output directory and
//! returns a JSON summary.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};
use skewprod::infinity::radial_bif_measure;
use skewprod::io::FieldMeta;
use skewprod::topology::{bounded_fibers_with_roots, jonsson_variant_one, jonsson_variant_two};
use skewprod::{classify_cdm, jonsson_check, julia_samples, Cx, SkewParams};

use crate::config::JobConfig;
use crate::probe::{base_lyapunov, topology_report, vertical_lyapunov};
use crate::render::{encode, render, RenderQuantity};

/// Everything needed to reproduce an artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance<'a> {
    pub command: &'a str,
    pub config_hash: String,
    pub seed: u64,
    pub budget: u32,
    pub estimator: skewprod::Estimator,
    pub version: &'static str,
    pub config: &'a JobConfig,
}

impl<'a> Provenance<'a> {
    pub fn new(command: &'a str, cfg: &'a JobConfig) -> Self {
        Self {
            command,
            config_hash: cfg.hash(),
            seed: cfg.seed,
            budget: cfg.budget,
            estimator: cfg.estimator(),
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    provenance: &'a Provenance<'a>,
    quantity: &'a RenderQuantity,
    field: Option<FieldMeta>,
}

fn out_dir(cfg: &JobConfig) -> anyhow::Result<&Path> {
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    Ok(&cfg.output_dir)
}

/// Renders `q` on the configured slice to `<name>.pgm` plus `<name>.json`.
pub fn write_image(cfg: &JobConfig, prov: &Provenance, q: &RenderQuantity, name: &str) -> anyhow::Result<Value> {
    let dir = out_dir(cfg)?;
    let r = render(&cfg.slice(), q, cfg.estimator(), cfg.budget)?;
    let (bytes, meta) = encode(&r, None)?;
    let image = dir.join(format!("{name}.pgm"));
    let sidecar = dir.join(format!("{name}.json"));
    fs::write(&image, &bytes)?;
    let side = Sidecar {
        provenance: prov,
        quantity: q,
        field: meta.clone(),
    };
    fs::write(&sidecar, serde_json::to_vec_pretty(&side)?)?;
    Ok(json!({
        "image": image,
        "sidecar": sidecar,
        "range": meta.map(|m| [m.min, m.max]),
    }))
}

pub fn render_bif(cfg: &JobConfig) -> anyhow::Result<Value> {
    let prov = Provenance::new("render-bif", cfg);
    Ok(json!({
        "config_hash": prov.config_hash,
        "lv": write_image(cfg, &prov, &RenderQuantity::Lv, "lv")?,
        "ddc_lv": write_image(cfg, &prov, &RenderQuantity::DdcLv, "ddc_lv")?,
    }))
}

pub fn render_bz(cfg: &JobConfig, z: Cx) -> anyhow::Result<Value> {
    let prov = Provenance::new("render-bz", cfg);
    let q = RenderQuantity::Bz { z };
    let mask = skewprod::bz_mask(&cfg.slice(), z, cfg.budget)?;
    Ok(json!({
        "config_hash": prov.config_hash,
        "bounded_pixels": mask.count(),
        "bz": write_image(cfg, &prov, &q, "bz")?,
    }))
}

pub fn pern(cfg: &JobConfig, n: u32, eta: Cx) -> anyhow::Result<Value> {
    let prov = Provenance::new("pern", cfg);
    Ok(json!({
        "config_hash": prov.config_hash,
        "pern": write_image(cfg, &prov, &RenderQuantity::Pern { n, eta }, &format!("pern{n}"))?,
        "ddc_pern": write_image(cfg, &prov, &RenderQuantity::DdcPern { n, eta }, &format!("ddc_pern{n}"))?,
    }))
}

fn params_at(cfg: &JobConfig, s: Cx) -> SkewParams {
    cfg.slice().params_at_s(s)
}

/// C/D/M label at `s`, with the bounded fibers fixed by `F` as evidence.
pub fn classify(cfg: &JobConfig, s: Cx) -> anyhow::Result<Value> {
    let p = params_at(cfg, s);
    let julia = julia_samples(&p.base, cfg.julia_samples, cfg.seed);
    let verdict = classify_cdm(&p, &julia, cfg.budget)?;
    let bounded = bounded_fibers_with_roots(&p, cfg.budget)?;
    let fixed: Vec<Cx> = bounded
        .iter()
        .copied()
        .filter(|&z| (p.base.eval(z) - z).norm() < 1e-12 && p.rho(z).norm() < 1e-9)
        .collect();
    Ok(json!({
        "config_hash": cfg.hash(),
        "s": s,
        "lambda": p.lambda(),
        "label": verdict.label,
        "bounded": verdict.bounded,
        "escaped": verdict.escaped,
        "bounded_fiber_count": bounded.len(),
        "fixed_fibers": fixed,
    }))
}

pub fn lyap(cfg: &JobConfig, s: Cx) -> anyhow::Result<Value> {
    let p = params_at(cfg, s);
    Ok(json!({
        "config_hash": cfg.hash(),
        "s": s,
        "lambda": p.lambda(),
        "base": base_lyapunov(&p),
        "vertical": vertical_lyapunov(cfg, &p)?,
    }))
}

/// The pushed-forward bifurcation measure of the `a0` slice at each radius.
pub fn infinity(cfg: &JobConfig, radii: &[f64]) -> anyhow::Result<Value> {
    let dir = out_dir(cfg)?;
    let prov = Provenance::new("infinity", cfg);
    let mut rows = Vec::new();
    for &r in radii {
        let m = radial_bif_measure(cfg.base(), r, cfg.resolution, cfg.estimator(), cfg.budget)?;
        let csv = dir.join(format!("radial_R{r}.csv"));
        m.write_csv(fs::File::create(&csv)?)?;
        rows.push(json!({
            "radius": r,
            "atoms": m.atoms.len(),
            "total_mass": m.total_mass,
            "radial_spread": m.radial_spread(),
            "ks_angular": m.ks_angular(),
            "ks_arcsine": m.ks_arcsine(),
            "csv": csv,
        }));
    }
    let summary = json!({ "provenance": prov, "radii": rows });
    fs::write(dir.join("infinity.json"), serde_json::to_vec_pretty(&summary)?)?;
    Ok(summary)
}

pub fn topology(cfg: &JobConfig, s: Cx) -> anyhow::Result<Value> {
    let p = params_at(cfg, s);
    Ok(json!({
        "config_hash": cfg.hash(),
        "s": s,
        "report": topology_report(cfg, &p),
    }))
}

pub fn jonsson(cfg: &JobConfig, t: f64, samples: usize) -> anyhow::Result<Value> {
    let report = jonsson_check(t, samples, cfg.seed)?;
    let re = |v: Vec<Cx>| v.into_iter().map(|z| z.re).collect::<Vec<_>>();
    Ok(json!({
        "config_hash": cfg.hash(),
        "report": report,
        "variant_one_type": re(bounded_fibers_with_roots(&jonsson_variant_one(t), cfg.budget)?),
        "variant_two_type": re(bounded_fibers_with_roots(&jonsson_variant_two(t), cfg.budget)?),
    }))
}
