//! Quantities rendered to gray maps, shared by the batch commands and the
//! tile server so that both produce identical bytes.

use serde::{Deserialize, Serialize};
use skewprod::bifurcation::field_green;
use skewprod::io::{write_pgm16, write_pgm8, FieldMeta};
use skewprod::pern::pern_potential;
use skewprod::{bz_mask, ddc, field_lv, ComplexLineSlice, Cx, Estimator, ScalarField};

/// Side of a server tile in pixels.
pub const TILE_SIZE: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RenderQuantity {
    Lv,
    DdcLv,
    Green { z: Cx },
    Bz { z: Cx },
    Pern { n: u32, eta: Cx },
    DdcPern { n: u32, eta: Cx },
}

impl RenderQuantity {
    /// Stable name used in file names and cache keys.
    pub fn key(&self) -> String {
        match self {
            RenderQuantity::Lv => "lv".into(),
            RenderQuantity::DdcLv => "ddc_lv".into(),
            RenderQuantity::Green { z } => format!("green_{}_{}", z.re, z.im),
            RenderQuantity::Bz { z } => format!("bz_{}_{}", z.re, z.im),
            RenderQuantity::Pern { n, eta } => format!("pern{n}_{}_{}", eta.re, eta.im),
            RenderQuantity::DdcPern { n, eta } => format!("ddc_pern{n}_{}_{}", eta.re, eta.im),
        }
    }

    pub fn is_mask(&self) -> bool {
        matches!(self, RenderQuantity::Bz { .. })
    }
}

pub enum Rendered {
    Field(ScalarField),
    Mask(skewprod::Mask),
}

pub fn render(
    slice: &ComplexLineSlice,
    q: &RenderQuantity,
    estimator: Estimator,
    budget: u32,
) -> skewprod::Result<Rendered> {
    Ok(match q {
        RenderQuantity::Lv => Rendered::Field(field_lv(slice, estimator, budget)?),
        RenderQuantity::DdcLv => Rendered::Field(ddc(&field_lv(slice, estimator, budget)?)?),
        RenderQuantity::Green { z } => Rendered::Field(field_green(slice, *z, budget)?),
        RenderQuantity::Bz { z } => Rendered::Mask(bz_mask(slice, *z, budget)?),
        RenderQuantity::Pern { n, eta } => Rendered::Field(pern_potential(slice, *n, *eta)?),
        RenderQuantity::DdcPern { n, eta } => Rendered::Field(ddc(&pern_potential(slice, *n, *eta)?)?),
    })
}

/// PGM bytes over `range`, or over the field's own range when `None`.
pub fn encode(r: &Rendered, range: Option<(f64, f64)>) -> skewprod::Result<(Vec<u8>, Option<FieldMeta>)> {
    let mut bytes = Vec::new();
    match r {
        Rendered::Field(f) => {
            let meta = FieldMeta::of(f);
            let (lo, hi) = range.unwrap_or((meta.min, meta.max));
            write_pgm16(f, lo, hi, &mut bytes)?;
            Ok((bytes, Some(meta)))
        }
        Rendered::Mask(m) => {
            write_pgm8(m, &mut bytes)?;
            Ok((bytes, None))
        }
    }
}
