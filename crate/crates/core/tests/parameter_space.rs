use std::f64::consts::{LN_2, PI};

use skewprod::bifurcation::{bif_raster, class_mask, field_green};
use skewprod::dynamics::{fiber_orbit_cyclic_from, DEFAULT_BUDGET, ESCAPE_THRESHOLD};
use skewprod::pern::{pern_base_cycles, pern_value, vertical_cycles};
use skewprod::*;

fn c(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

/// Escape data of `Λ_0 = λ`, `Λ_{k+1} = Λ_k² + λ` with `Λ'` along:
/// `None` if bounded, else `(k, Λ_k, Λ'_k)` at the first `|Λ_k| > 10^100`.
fn lambda_orbit(l: Cx, budget: u32) -> Option<(u32, Cx, Cx)> {
    let (mut x, mut dx) = (l, c(1.0, 0.0));
    for k in 0..budget {
        if k > 0 {
            dx = x * dx * 2.0 + 1.0;
            x = x * x + l;
        }
        if !(x.norm() <= ESCAPE_THRESHOLD) {
            return Some((k, x, dx));
        }
    }
    None
}

fn oracle_pixel(res: usize, i: usize, j: usize) -> Cx {
    let h = 4.0 / res as f64;
    c(-2.5 + (i as f64 + 0.5) * h, -2.0 + (j as f64 + 0.5) * h)
}

#[test]
fn mandelbrot_mask_over_both_real_circle_points() {
    let res = 128;
    let slice = ComplexLineSlice::mandelbrot_family(res);
    for z in [c(1.0, 0.0), c(-1.0, 0.0)] {
        let mask = bz_mask(&slice, z, 500).unwrap();
        for j in 0..res {
            for i in 0..res {
                assert_eq!(
                    mask.get(i, j),
                    lambda_orbit(oracle_pixel(res, i, j), 500).is_none(),
                    "pixel ({i}, {j})"
                );
            }
        }
    }
}

/// 4-neighbour boundary of the bounded set, plus escaping pixels whose
/// distance estimate `|Λ| ln|Λ| / |Λ'|` is below one pitch.
fn oracle_boundary(res: usize, budget: u32) -> Vec<bool> {
    let pitch = 4.0 / res as f64;
    let data: Vec<Option<(u32, Cx, Cx)>> = (0..res * res)
        .map(|k| lambda_orbit(oracle_pixel(res, k % res, k / res), budget))
        .collect();
    let bounded = |i: i64, j: i64| {
        i >= 0 && j >= 0 && i < res as i64 && j < res as i64 && data[j as usize * res + i as usize].is_none()
    };
    let mut out = vec![false; res * res];
    for j in 0..res as i64 {
        for i in 0..res as i64 {
            let k = j as usize * res + i as usize;
            let me = bounded(i, j);
            let edge = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|(di, dj)| {
                let (a, b) = (i + di, j + dj);
                a >= 0 && b >= 0 && a < res as i64 && b < res as i64 && bounded(a, b) != me
            });
            let near = match data[k] {
                Some((_, x, dx)) => x.norm() * x.norm().ln() / dx.norm() < pitch,
                None => false,
            };
            out[k] = edge || near;
        }
    }
    out
}

#[test]
fn ddc_support_hugs_the_mandelbrot_boundary() {
    let res = 256;
    let budget = 500;
    let slice = ComplexLineSlice::mandelbrot_family(res);
    let lv = field_lv(&slice, Estimator::Periodic { n: 4 }, budget).unwrap();
    let d = ddc(&lv).unwrap();
    let support = d.support(d.noise_floor());
    assert!(support.count() > 500, "{}", support.count());
    let boundary = oracle_boundary(res, budget);
    let mut outside = 0;
    for j in 0..res {
        for i in 0..res {
            if !support.get(i, j) {
                continue;
            }
            let near = (j.saturating_sub(1)..=(j + 1).min(res - 1))
                .any(|b| (i.saturating_sub(1)..=(i + 1).min(res - 1)).any(|a| boundary[b * res + a]));
            if !near {
                outside += 1;
            }
        }
    }
    assert_eq!(outside, 0);
}

fn laplacian_mass(values: &[f64], res: usize, h: f64) -> f64 {
    let mut m = 0.0;
    for j in 1..res - 1 {
        for i in 1..res - 1 {
            let k = j * res + i;
            let lap = values[k - 1] + values[k + 1] + values[k - res] + values[k + res] - 4.0 * values[k];
            m += lap / (h * h) / (2.0 * PI) * h * h;
        }
    }
    m
}

#[test]
fn ddc_mass_matches_half_the_mandelbrot_green_mass() {
    let res = 128;
    let slice = ComplexLineSlice::mandelbrot_family(res);
    let lv = field_lv(&slice, Estimator::Measure { count: 64, seed: 1 }, DEFAULT_BUDGET).unwrap();
    let mass = ddc(&lv).unwrap().mass();
    let g: Vec<f64> = (0..res * res)
        .map(
            |k| match lambda_orbit(oracle_pixel(res, k % res, k / res), DEFAULT_BUDGET) {
                Some((n, x, _)) => x.norm().ln() / 2f64.powi(n as i32),
                None => 0.0,
            },
        )
        .collect();
    let oracle = laplacian_mass(&g, res, 4.0 / res as f64);
    assert!((mass - 0.5 * oracle).abs() < 0.1 * 0.5 * oracle, "{mass} vs {oracle}/2");
    for k in 0..res * res {
        assert!((lv.values[k] - (LN_2 + 0.5 * g[k])).abs() < 1e-9);
    }
}

#[test]
fn decomposition_support_lies_on_bifurcation_rasters() {
    let slice = ComplexLineSlice::mandelbrot_family(128);
    let mu = sample_mu_p(&slice.base, 64, 1);
    let r = decomposition_check(&slice, &mu.points, &mu.weights, 100).unwrap();
    assert!(r.linearity_l1 < 1e-9, "{}", r.linearity_l1);
    assert!(r.support_pixels > 0);
    assert!(r.support_to_bif.is_some_and(|d| d <= 2), "{:?}", r.support_to_bif);
    assert_eq!(r.support_outside_2px, 0);
}

fn general_slice(res: usize) -> ComplexLineSlice {
    slice_through([c(0.3, 0.0), c(-0.2, 0.1), c(0.0, 0.0)], res)
}

fn slice_through(origin: [Cx; 3], res: usize) -> ComplexLineSlice {
    ComplexLineSlice::new(
        origin,
        [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        c(-0.5, 0.0),
        2.0,
        (res, res),
        BaseQuadratic::new(c(-1.0, 0.0)).unwrap(),
    )
    .unwrap()
}

#[test]
fn connected_pixels_have_minimal_lyapunov() {
    let slice = slice_through([c(0.05, 0.0), c(-0.04, 0.02), c(0.0, 0.0)], 48);
    let mu = sample_mu_p(&slice.base, 256, 2);
    let julia = MeasureSamples::uniform(mu.points.clone(), MeasureLabel::Julia);
    let classes = class_mask(&slice, &julia, DEFAULT_BUDGET).unwrap();
    let lv = field_lv(&slice, Estimator::Measure { count: 256, seed: 2 }, DEFAULT_BUDGET).unwrap();
    let mut seen = 0;
    for j in 0..48 {
        for i in 0..48 {
            if classes.get(i, j) == CdmLabel::C {
                seen += 1;
                assert!(
                    (lv.get(i, j) - LN_2).abs() < 1e-6,
                    "({i}, {j}) {} {:?}",
                    lv.get(i, j) - LN_2,
                    slice.s_at(i, j)
                );
            }
            assert!(lv.get(i, j) >= LN_2);
        }
    }
    assert!(seen > 0);
}

#[test]
fn bounded_masks_shrink_with_budget() {
    let slice = general_slice(96);
    let z = c(0.1, 0.0);
    let masks: Vec<Mask> = [25, 50, 100, 400]
        .iter()
        .map(|&b| bz_mask(&slice, z, b).unwrap())
        .collect();
    for w in masks.windows(2) {
        assert!(w[1].values.iter().zip(&w[0].values).all(|(hi, lo)| !hi || *lo));
    }
}

#[test]
fn bounded_masks_are_upper_semicontinuous() {
    let slice = general_slice(128);
    let z = c(0.1, 0.0);
    let base = bz_mask(&slice, z, DEFAULT_BUDGET).unwrap();
    let grown = base.dilate(1);
    for dz in [c(5e-4, 0.0), c(0.0, 7e-4), c(-6e-4, 6e-4)] {
        let near = bz_mask(&slice, z + dz, DEFAULT_BUDGET).unwrap();
        let extra = near
            .values
            .iter()
            .zip(&grown.values)
            .filter(|(n, g)| **n && !**g)
            .count();
        assert!(
            (extra as f64) < 0.005 * base.count() as f64,
            "{extra} of {}",
            base.count()
        );
    }
}

fn poly_mul(a: &[Cx], b: &[Cx]) -> Vec<Cx> {
    let mut out = vec![c(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(p: &[Cx], w: Cx) -> Cx {
    p.iter().rev().fold(c(0.0, 0.0), |acc, &a| acc * w + a)
}

/// Roots of the monic polynomial with coefficients `p` (ascending) by
/// Durand–Kerner.
fn durand_kerner(p: &[Cx]) -> Vec<Cx> {
    let n = p.len() - 1;
    let mut r: Vec<Cx> = (0..n)
        .map(|k| Cx::from_polar(1.5, 0.4 + k as f64 * 2.0 * PI / n as f64))
        .collect();
    for _ in 0..5000 {
        let mut delta: f64 = 0.0;
        for k in 0..n {
            let denom = (0..n)
                .filter(|&j| j != k)
                .fold(c(1.0, 0.0), |acc, j| acc * (r[k] - r[j]));
            let step = poly_eval(p, r[k]) / denom;
            r[k] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    r
}

/// `Q^n_z(w) − w` expanded along the base orbit of `z`.
fn return_map_poly(params: &SkewParams, z: Cx, n: u32) -> Vec<Cx> {
    let mut q = vec![c(0.0, 0.0), c(1.0, 0.0)];
    let mut zz = z;
    for _ in 0..n {
        q = poly_mul(&q, &q);
        q[0] += params.rho(zz);
        zz = params.base.eval(zz);
    }
    q[1] -= 1.0;
    q
}

#[test]
fn vertical_cycles_cover_all_periodic_points() {
    let lambdas = [
        [c(0.4, 0.3), c(-1.1, 0.2), c(0.2, -0.7)],
        [c(-0.5, 0.0), c(0.3, 0.9), c(1.2, 0.4)],
        [c(2.0, -1.0), c(0.0, 0.5), c(-0.3, 0.0)],
        [c(0.1, 0.1), c(0.7, -0.4), c(-0.9, 0.6)],
        [c(-1.3, 0.2), c(-0.6, -0.6), c(0.5, 0.5)],
    ];
    let bases = [
        BaseQuadratic::z2(),
        BaseQuadratic::chebyshev(),
        BaseQuadratic::new(c(-1.0, 0.0)).unwrap(),
    ];
    for (k, l) in lambdas.iter().enumerate() {
        let p = SkewParams::from_lambda(*l, bases[k % 3]);
        for n in 1..=4u32 {
            let mut points: Vec<(Cx, Cx)> = Vec::new();
            let mut counted = 0u64;
            for m in (1..=n).filter(|m| n % m == 0) {
                for cy in vertical_cycles(&p, m).unwrap() {
                    counted += m as u64 * cy.multiplicity as u64;
                    let mut pt = (cy.z_cycle[0], cy.w_points[0]);
                    let mut chain = c(1.0, 0.0);
                    for _ in 0..m {
                        points.push(pt);
                        chain *= pt.1 * 2.0;
                        pt = step(&p, pt);
                    }
                    assert!((pt.0 - cy.z_cycle[0]).norm() < 1e-8 && (pt.1 - cy.w_points[0]).norm() < 1e-7);
                    assert!((chain - cy.vertical_multiplier).norm() <= 1e-8 * chain.norm().max(1.0));
                }
            }
            assert_eq!(counted, 4u64.pow(n), "n = {n}");
            for z in periodic_points(&p.base, n).unwrap().iter().map(|q| q.z) {
                for w in durand_kerner(&return_map_poly(&p, z, n)) {
                    let hit = points
                        .iter()
                        .any(|(a, b)| (a - z).norm() < 1e-6 && (b - w).norm() < 1e-6);
                    assert!(hit, "n = {n}: ({z}, {w}) missing");
                }
            }
        }
    }
}

#[test]
fn multiplier_potential_ignores_cycle_start() {
    let p = SkewParams::from_lambda(
        [c(0.4, 0.3), c(-1.1, 0.2), c(0.2, -0.7)],
        BaseQuadratic::new(c(-1.0, 0.0)).unwrap(),
    );
    for n in 1..=4 {
        let cycles = pern_base_cycles(&p.base, n).unwrap();
        let rotated: Vec<Vec<Cx>> = cycles
            .iter()
            .map(|o| {
                let mut r = o.clone();
                r.rotate_left(o.len() / 2);
                r
            })
            .collect();
        for eta in [c(0.0, 0.0), c(0.3, 0.0), c(-1.0, 2.0)] {
            let (a, ok_a) = pern_value(&p, &cycles, n, eta);
            let (b, ok_b) = pern_value(&p, &rotated, n, eta);
            assert!(ok_a && ok_b);
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "n = {n}: {a} vs {b}");
        }
    }
}

#[test]
fn attracting_vertical_cycles_capture_a_critical_orbit() {
    let slice = general_slice(24);
    let mut attracting = 0;
    for j in 0..24 {
        for i in 0..24 {
            let p = slice.params_at(i, j);
            for n in 1..=2 {
                for cy in vertical_cycles(&p, n).unwrap() {
                    if cy.vertical_multiplier.norm() >= 1.0 {
                        continue;
                    }
                    attracting += 1;
                    let rc: Vec<Cx> = cy.z_cycle.iter().map(|&z| p.rho(z)).collect();
                    let bounded = (0..rc.len())
                        .any(|k| fiber_orbit_cyclic_from(&rc, k, c(0.0, 0.0), DEFAULT_BUDGET).is_bounded());
                    assert!(bounded, "pixel ({i}, {j}), n = {n}");
                }
            }
        }
    }
    assert!(attracting > 0);
}

#[test]
fn green_is_subharmonic_off_the_bifurcation_raster() {
    let slice = ComplexLineSlice::mandelbrot_family(128);
    let z = c(1.0, 0.0);
    let d = ddc(&field_green(&slice, z, 500).unwrap()).unwrap();
    let dist = bif_raster(&slice, z, 500).unwrap().distance_map();
    let floor = d.noise_floor();
    let (mut near, mut total) = (0.0, 0.0);
    for j in 1..127 {
        for i in 1..127 {
            let v = d.get(i, j);
            if dist[slice.index(i, j)] >= 3 {
                assert!(v.abs() <= floor, "({i}, {j}) {v} vs floor {floor}");
            } else {
                near += v.max(0.0);
            }
            total += v.max(0.0);
        }
    }
    assert!(near >= 0.99 * total, "{near} of {total}");
}
