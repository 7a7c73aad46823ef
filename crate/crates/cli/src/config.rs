//! Job configuration: presets, overrides and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use skewprod::dynamics::green_base;
use skewprod::infinity::a0_slice;
use skewprod::topology::jonsson_params;
use skewprod::{BaseQuadratic, ComplexLineSlice, Cx, Estimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Slice `(0, 0, s)` through the full `(a, b, c)` space.
    AbcFull,
    /// `(0, b, R)` with `|b| ≤ 4R`.
    A0,
    /// `(z², w² + λz)`.
    MandelbrotBz,
    /// `(0, 0, s)` through the Jonsson map `g_t`.
    Jonsson,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "abc_full" => Ok(Preset::AbcFull),
            "a0" => Ok(Preset::A0),
            "mandelbrot_bz" => Ok(Preset::MandelbrotBz),
            "jonsson" => Ok(Preset::Jonsson),
            _ => Err(format!("unknown preset `{s}` (abc_full, a0, mandelbrot_bz, jonsson)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Periodic,
    Measure,
}

impl std::str::FromStr for EstimatorChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "periodic" => Ok(EstimatorChoice::Periodic),
            "measure" => Ok(EstimatorChoice::Measure),
            _ => Err(format!("unknown estimator `{s}` (periodic, measure)")),
        }
    }
}

/// Everything a command needs. Output locations do not enter the hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct JobConfig {
    pub preset: Preset,
    /// Base parameter; the preset's own when absent.
    pub d: Option<Cx>,
    /// Jonsson parameter.
    pub t: f64,
    /// Height of the `a0` slice.
    pub radius: f64,
    pub origin: Option<[Cx; 3]>,
    pub direction: Option<[Cx; 3]>,
    pub center: Option<Cx>,
    pub half_width: Option<f64>,
    pub resolution: usize,
    pub budget: u32,
    pub estimator: EstimatorChoice,
    pub periodic_n: u32,
    pub mu_count: usize,
    pub seed: u64,
    pub julia_samples: usize,
    /// Fibers probed by point queries; the β fixed point when empty.
    pub probe_z: Vec<Cx>,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
}

impl Default for JobConfig {
    fn default() -> Self {
        Self {
            preset: Preset::MandelbrotBz,
            d: None,
            t: 100.0,
            radius: 100.0,
            origin: None,
            direction: None,
            center: None,
            half_width: None,
            resolution: 256,
            budget: 500,
            estimator: EstimatorChoice::Periodic,
            periodic_n: 8,
            mu_count: 4096,
            seed: 0,
            julia_samples: 512,
            probe_z: Vec::new(),
            output_dir: PathBuf::from("out"),
            cache_dir: None,
        }
    }
}

/// A validation failure at a config path such as `probe-z[1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

fn finite(z: Cx) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

const ZERO: Cx = Cx::new(0.0, 0.0);
const ONE: Cx = Cx::new(1.0, 0.0);

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| err("<toml>", e.message().to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            err(
                if path == "." { "<root>".into() } else { path },
                e.into_inner().message().to_string(),
            )
        })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_toml(&text)?)
    }

    pub fn base_d(&self) -> Cx {
        self.d.unwrap_or(match self.preset {
            Preset::Jonsson => Cx::new(-2.0, 0.0),
            _ => ZERO,
        })
    }

    pub fn base(&self) -> BaseQuadratic {
        BaseQuadratic { d: self.base_d() }
    }

    pub fn estimator(&self) -> Estimator {
        match self.estimator {
            EstimatorChoice::Periodic => Estimator::Periodic { n: self.periodic_n },
            EstimatorChoice::Measure => Estimator::Measure {
                count: self.mu_count,
                seed: self.seed,
            },
        }
    }

    /// The preset's slice with the explicit overrides applied.
    pub fn slice(&self) -> ComplexLineSlice {
        let base = self.base();
        let res = self.resolution;
        let mut s = match self.preset {
            Preset::MandelbrotBz => ComplexLineSlice {
                base,
                ..ComplexLineSlice::mandelbrot_family(res)
            },
            Preset::A0 => a0_slice(base, self.radius, res),
            Preset::AbcFull => ComplexLineSlice {
                origin: [ZERO; 3],
                direction: [ZERO, ZERO, ONE],
                center: ZERO,
                half_width: 2.0,
                resolution: (res, res),
                base,
            },
            Preset::Jonsson => ComplexLineSlice {
                origin: jonsson_params(self.t).lambda(),
                direction: [ZERO, ZERO, ONE],
                center: ZERO,
                half_width: self.t.max(1.0),
                resolution: (res, res),
                base,
            },
        };
        if let Some(o) = self.origin {
            s.origin = o;
        }
        if let Some(d) = self.direction {
            s.direction = d;
        }
        if let Some(c) = self.center {
            s.center = c;
        }
        if let Some(w) = self.half_width {
            s.half_width = w;
        }
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = self.base_d();
        if !finite(d) {
            return Err(err("d", "must be finite"));
        }
        if self.preset == Preset::Jonsson {
            if d != Cx::new(-2.0, 0.0) {
                return Err(err("d", "the jonsson preset fixes d = -2"));
            }
            if !(self.t.is_finite() && self.t >= 0.0) {
                return Err(err("t", "must be a nonnegative number"));
            }
        }
        if self.preset == Preset::A0 && !(self.radius.is_finite() && self.radius >= 10.0) {
            return Err(err("radius", "must be at least 10"));
        }
        if !(3..=8192).contains(&self.resolution) {
            return Err(err("resolution", "must lie in 3..=8192"));
        }
        if self.budget == 0 {
            return Err(err("budget", "must be positive"));
        }
        if !(1..=14).contains(&self.periodic_n) {
            return Err(err("periodic-n", "must lie in 1..=14"));
        }
        if self.mu_count == 0 {
            return Err(err("mu-count", "must be positive"));
        }
        if self.julia_samples == 0 {
            return Err(err("julia-samples", "must be positive"));
        }
        for (name, v) in [("origin", self.origin), ("direction", self.direction)] {
            if let Some(v) = v {
                if let Some(k) = v.iter().position(|x| !finite(*x)) {
                    return Err(err(format!("{name}[{k}]"), "must be finite"));
                }
            }
        }
        if self.direction.is_some_and(|v| v.iter().all(|x| *x == ZERO)) {
            return Err(err("direction", "must be nonzero"));
        }
        if self.center.is_some_and(|c| !finite(c)) {
            return Err(err("center", "must be finite"));
        }
        if self.half_width.is_some_and(|w| !(w.is_finite() && w > 0.0)) {
            return Err(err("half-width", "must be positive"));
        }
        let base = self.base();
        for (k, &z) in self.probe_z.iter().enumerate() {
            if !finite(z) || green_base(&base, z, skewprod::dynamics::DEFAULT_BUDGET) >= 1e-9 {
                return Err(err(
                    format!("probe-z[{k}]"),
                    format!("{z} is not in the filled Julia set of the base"),
                ));
            }
        }
        Ok(())
    }

    pub fn probes(&self) -> Vec<Cx> {
        if self.probe_z.is_empty() {
            vec![self.base().beta_fixed_point()]
        } else {
            self.probe_z.clone()
        }
    }

    /// SHA-256 of the canonical JSON of every field except the output paths.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.cache_dir = None;
        let json = serde_json::to_vec(&c).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}

/// Parses `re`, `re,im` or `re,im` with surrounding spaces.
pub fn parse_cx(s: &str) -> Result<Cx, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| format!("`{s}` is not a complex number `re[,im]`"))
    };
    match parts.as_slice() {
        [re] => Ok(Cx::new(num(re)?, 0.0)),
        [re, im] => Ok(Cx::new(num(re)?, num(im)?)),
        _ => Err(format!("`{s}` is not a complex number `re[,im]`")),
    }
}

/// Parses three complex numbers separated by `;`.
pub fn parse_cx3(s: &str) -> Result<[Cx; 3], String> {
    let v: Vec<Cx> = s.split(';').map(parse_cx).collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| format!("`{s}` needs three entries `a;b;c`"))
}
