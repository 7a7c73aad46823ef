//! Affine complex lines in parameter space with a rectangular pixel window.

use serde::{Deserialize, Serialize};

use crate::dynamics::{finite, BaseQuadratic, SkewParams};
use crate::error::{Error, Result};
use crate::Cx;

/// `λ(s) = origin + s·direction`, sampled on a `res_x × res_y` grid of
/// pixel centres around `center`.
///
/// Pixel `(i, j)` sits at
/// `s = center + ((i+½)/res_x − ½)·2w + i·((j+½)/res_y − ½)·2w`
/// with `w` the half width, so `j` grows with the imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexLineSlice {
    pub origin: [Cx; 3],
    pub direction: [Cx; 3],
    pub center: Cx,
    pub half_width: f64,
    pub resolution: (usize, usize),
    pub base: BaseQuadratic,
}

impl ComplexLineSlice {
    pub fn new(
        origin: [Cx; 3],
        direction: [Cx; 3],
        center: Cx,
        half_width: f64,
        resolution: (usize, usize),
        base: BaseQuadratic,
    ) -> Result<Self> {
        let s = Self {
            origin,
            direction,
            center,
            half_width,
            resolution,
            base,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.direction.iter().all(|v| *v == Cx::new(0.0, 0.0)) {
            return Err(Error::InvalidArgument("direction must be nonzero".into()));
        }
        if self.resolution.0 < 2 || self.resolution.1 < 2 {
            return Err(Error::InvalidArgument(
                "resolution must be at least 2 in each axis".into(),
            ));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidArgument("half_width must be positive".into()));
        }
        let all = self
            .origin
            .iter()
            .chain(&self.direction)
            .chain([&self.center, &self.base.d]);
        if all.into_iter().any(|v| !finite(*v)) {
            return Err(Error::NonFinite("slice"));
        }
        Ok(())
    }

    /// The family `(z², w² + λz)` over `[−2.5, 1.5] × [−2, 2]i`.
    pub fn mandelbrot_family(res: usize) -> Self {
        let o = Cx::new(0.0, 0.0);
        Self {
            origin: [o; 3],
            direction: [o, Cx::new(1.0, 0.0), o],
            center: Cx::new(-0.5, 0.0),
            half_width: 2.0,
            resolution: (res, res),
            base: BaseQuadratic::z2(),
        }
    }

    pub fn width(&self) -> usize {
        self.resolution.0
    }

    pub fn height(&self) -> usize {
        self.resolution.1
    }

    pub fn len(&self) -> usize {
        self.resolution.0 * self.resolution.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixel pitch `(h_x, h_y)`.
    pub fn pitch(&self) -> (f64, f64) {
        (
            2.0 * self.half_width / self.resolution.0 as f64,
            2.0 * self.half_width / self.resolution.1 as f64,
        )
    }

    pub fn pixel_area(&self) -> f64 {
        let (hx, hy) = self.pitch();
        hx * hy
    }

    pub fn s_at(&self, i: usize, j: usize) -> Cx {
        let (nx, ny) = self.resolution;
        let x = ((i as f64 + 0.5) / nx as f64 - 0.5) * 2.0 * self.half_width;
        let y = ((j as f64 + 0.5) / ny as f64 - 0.5) * 2.0 * self.half_width;
        self.center + Cx::new(x, y)
    }

    pub fn lambda_at_s(&self, s: Cx) -> [Cx; 3] {
        [
            self.origin[0] + s * self.direction[0],
            self.origin[1] + s * self.direction[1],
            self.origin[2] + s * self.direction[2],
        ]
    }

    pub fn params_at_s(&self, s: Cx) -> SkewParams {
        SkewParams::from_lambda(self.lambda_at_s(s), self.base)
    }

    pub fn params_at(&self, i: usize, j: usize) -> SkewParams {
        self.params_at_s(self.s_at(i, j))
    }

    /// The pixel containing `s`, if inside the window.
    pub fn pixel_of(&self, s: Cx) -> Option<(usize, usize)> {
        let (nx, ny) = self.resolution;
        let d = s - self.center;
        let fx = (d.re / (2.0 * self.half_width) + 0.5) * nx as f64;
        let fy = (d.im / (2.0 * self.half_width) + 0.5) * ny as f64;
        if fx < 0.0 || fy < 0.0 || fx >= nx as f64 || fy >= ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution.0 + i
    }

    /// Same line and window at a different resolution.
    pub fn with_resolution(&self, nx: usize, ny: usize) -> Self {
        Self {
            resolution: (nx, ny),
            ..self.clone()
        }
    }

    /// The square sub-window of tile `(x, y)` at zoom `z` (tile `(0,0)` is the
    /// top-left corner, i.e. largest imaginary part).
    pub fn tile(&self, zoom: u32, x: u32, y: u32, res: usize) -> Result<Self> {
        if zoom > 52 {
            return Err(Error::InvalidArgument(format!("zoom {zoom} beyond double precision")));
        }
        let n = 1u64 << zoom;
        if x as u64 >= n || y as u64 >= n {
            return Err(Error::InvalidArgument(format!("tile ({x}, {y}) outside zoom {zoom}")));
        }
        if zoom == 0 {
            return Ok(self.with_resolution(res, res));
        }
        let w = self.half_width / n as f64;
        let left = self.center.re - self.half_width;
        let top = self.center.im + self.half_width;
        let center = Cx::new(
            left + (2 * x as u64 + 1) as f64 * w,
            top - (2 * y as u64 + 1) as f64 * w,
        );
        Ok(Self {
            center,
            half_width: w,
            resolution: (res, res),
            ..self.clone()
        })
    }
}
