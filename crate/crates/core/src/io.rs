//! Portable gray maps for fields and masks, with JSON sidecars.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::bifurcation::{Mask, Quantity, ScalarField};
use crate::error::{Error, Result};
use crate::slice::ComplexLineSlice;

/// Sidecar describing a field image; `min`/`max` map to 0 and 65535.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub slice: ComplexLineSlice,
    pub quantity: Quantity,
    pub min: f64,
    pub max: f64,
    pub noise_floor: Option<f64>,
}

impl FieldMeta {
    /// Finite range of the field; `noise_floor` is set for `dd^c` fields.
    pub fn of(field: &ScalarField) -> Self {
        let (min, max) = finite_range(&field.values);
        let noise_floor = matches!(field.quantity, Quantity::Ddc { .. }).then(|| field.noise_floor());
        Self {
            slice: field.slice.clone(),
            quantity: field.quantity.clone(),
            min,
            max,
            noise_floor,
        }
    }
}

fn finite_range(values: &[f64]) -> (f64, f64) {
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if lo > hi {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

/// Quantizes to `0..=65535` over `[min, max]`; non-finite values map to 0.
pub fn quantize16(v: f64, min: f64, max: f64) -> u16 {
    if !v.is_finite() || max <= min {
        return 0;
    }
    let x = ((v - min) / (max - min)).clamp(0.0, 1.0);
    (x * 65535.0).round() as u16
}

/// Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples) over the
/// given range. The top image row is the largest imaginary part.
pub fn write_pgm16<W: Write>(field: &ScalarField, min: f64, max: f64, mut out: W) -> Result<()> {
    let (nx, ny) = field.slice.resolution;
    write!(out, "P5\n{nx} {ny}\n65535\n")?;
    let mut buf = Vec::with_capacity(2 * field.values.len());
    for row in field.values.chunks_exact(nx).rev() {
        for &v in row {
            buf.extend_from_slice(&quantize16(v, min, max).to_be_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

/// 16-bit PGM over the field's own finite range, plus its sidecar.
pub fn field_pgm16(field: &ScalarField) -> Result<(Vec<u8>, FieldMeta)> {
    let meta = FieldMeta::of(field);
    let mut bytes = Vec::new();
    write_pgm16(field, meta.min, meta.max, &mut bytes)?;
    Ok((bytes, meta))
}

/// Binary 8-bit PGM, 255 where the mask is set, oriented as [`write_pgm16`].
pub fn write_pgm8<W: Write>(mask: &Mask, mut out: W) -> Result<()> {
    let (nx, ny) = mask.slice.resolution;
    write!(out, "P5\n{nx} {ny}\n255\n")?;
    let buf: Vec<u8> = mask
        .values
        .chunks_exact(nx)
        .rev()
        .flatten()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    out.write_all(&buf)?;
    Ok(())
}

/// A decoded binary PGM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

fn header_token<R: BufRead>(input: &mut R) -> Result<String> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        input.read_exact(&mut byte)?;
        let c = byte[0] as char;
        if c == '#' && tok.is_empty() {
            let mut skip = String::new();
            input.read_line(&mut skip)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            return Ok(tok);
        }
        tok.push(c);
    }
}

pub fn read_pgm<R: BufRead>(mut input: R) -> Result<Pgm> {
    let bad = |m: &str| Error::InvalidArgument(format!("pgm: {m}"));
    if header_token(&mut input)? != "P5" {
        return Err(bad("not a binary gray map"));
    }
    let mut num = || -> Result<usize> { header_token(&mut input)?.parse().map_err(|_| bad("bad header")) };
    let (width, height, maxval) = (num()?, num()?, num()?);
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    let wide = maxval > 255;
    let mut raw = vec![0u8; width * height * if wide { 2 } else { 1 }];
    input.read_exact(&mut raw)?;
    let samples = if wide {
        raw.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        raw.into_iter().map(u16::from).collect()
    };
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm16_round_trip() {
        let slice = ComplexLineSlice::mandelbrot_family(4).with_resolution(4, 3);
        let field = ScalarField {
            slice,
            values: (0..12).map(|k| k as f64).collect(),
            quantity: Quantity::Lv,
            defects: vec![],
        };
        let (bytes, meta) = field_pgm16(&field).unwrap();
        assert_eq!((meta.min, meta.max), (0.0, 11.0));
        let pgm = read_pgm(&bytes[..]).unwrap();
        assert_eq!((pgm.width, pgm.height, pgm.maxval), (4, 3, 65535));
        assert_eq!(pgm.samples[3], 65535);
        assert_eq!(pgm.samples[8], 0);
    }
}
