//! Acceptance criteria 1–10, one PASS/FAIL line each. Exits nonzero if any
//! criterion fails.

use std::f64::consts::LN_2;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skewprod::dynamics::{DEFAULT_BUDGET, ESCAPE_THRESHOLD};
use skewprod::infinity::{adherence_bound_check, radial_bif_measure, triple_search};
use skewprod::pern::equidistribution_report;
use skewprod::topology::{
    bounded_fibers_with_roots, jonsson_params, jonsson_variant_one, jonsson_variant_two, r_f, DEFAULT_LIFT_STEPS,
};
use skewprod::*;

const CRITERION_BUDGET: u32 = 2000;

fn c(re: f64, im: f64) -> Cx {
    Cx::new(re, im)
}

/// Pixel centres of a `res × res` grid over `[−2.5, 1.5] × [−2, 2]i`, row `j`
/// at imaginary part `−2 + (j + ½)·4/res`.
fn oracle_pixel(i: usize, j: usize, res: usize) -> Cx {
    let h = 4.0 / res as f64;
    c(-2.5 + (i as f64 + 0.5) * h, -2.0 + (j as f64 + 0.5) * h)
}

/// `Λ_0 = λ`, `Λ_{k+1} = Λ_k² + λ`; bounded if `|Λ_k| ≤ 10^100` for
/// `k < budget`.
fn lambda_oracle_bounded(l: Cx, budget: u32) -> bool {
    let mut x = l;
    for k in 0..budget {
        if k > 0 {
            x = x * x + l;
        }
        if !(x.norm() <= ESCAPE_THRESHOLD) {
            return false;
        }
    }
    true
}

fn criterion_1() -> (bool, String) {
    let res = 512;
    let slice = ComplexLineSlice::mandelbrot_family(res);
    let t = Instant::now();
    let mask = bz_mask(&slice, c(1.0, 0.0), CRITERION_BUDGET).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let mut agree = 0;
    for j in 0..res {
        for i in 0..res {
            if mask.get(i, j) == lambda_oracle_bounded(oracle_pixel(i, j, res), CRITERION_BUDGET) {
                agree += 1;
            }
        }
    }
    let total = res * res;
    (
        agree == total && elapsed < 10.0,
        format!(
            "agreement {agree}/{total}, {} bounded, mask {elapsed:.2} s",
            mask.count()
        ),
    )
}

fn criterion_2() -> (bool, String) {
    let lp = lyap_base(&BaseQuadratic::z2()).value;
    (
        (lp - LN_2).abs() <= 1e-12,
        format!("L_p = {lp:.15}, error {:.1e}", (lp - LN_2).abs()),
    )
}

fn random_lambda(rng: &mut ChaCha8Rng, bound: f64) -> [Cx; 3] {
    [(); 3].map(|_| c(rng.gen_range(-bound..bound), rng.gen_range(-bound..bound)))
}

fn criterion_3() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_periodic: f64 = 0.0;
    let mut worst_return: f64 = 0.0;
    for d in [0.0, -2.0] {
        let base = BaseQuadratic::new(c(d, 0.0)).unwrap();
        let mu = sample_mu_p(&base, 100_000, 17);
        for _ in 0..20 {
            let p = SkewParams::from_lambda(random_lambda(&mut rng, 5.0), base);
            let m = lyap_vertical_measure(&p, &mu).unwrap().value;
            let per = lyap_vertical_periodic(&p, 12).unwrap().value;
            let ret = lyap_vertical_return(&p, 6).unwrap().value;
            worst_periodic = worst_periodic.max((m - per).abs() / per);
            worst_return = worst_return.max((m - ret).abs() / per);
        }
    }
    (
        worst_periodic < 0.01 && worst_return < 0.02,
        format!("max rel. diff periodic(12) {worst_periodic:.2e} (< 1e-2), return(6) {worst_return:.2e} (< 2e-2)"),
    )
}

fn bounded_candidate(base: BaseQuadratic, julia: &MeasureSamples, fixed: &[Cx], k: u64) -> (SkewParams, Cx) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4ad ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    if k % 2 == 0 {
        let z0 = julia.points[rng.gen_range(0..julia.len())];
        (SkewParams::from_lambda(random_lambda(&mut rng, 1.5), base), z0)
    } else {
        let z0 = fixed[rng.gen_range(0..fixed.len())];
        let u = c(rng.gen_range(-2.0..0.25), 0.0);
        let m = 10f64.powf(rng.gen_range(0.0..3.0));
        let a = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * m;
        let b = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * m;
        (SkewParams::from_lambda([a, b, u - a * z0 * z0 - b * z0], base), z0)
    }
}

/// Parameters with a bounded fiber, half drawn uniformly with `‖λ‖∞ ≤ 1.5` over
/// a Julia fiber and half with `ρ` prescribed at a repelling fixed point
/// plus a large multiple of a polynomial vanishing there.
fn criterion_4() -> (bool, String) {
    use rayon::prelude::*;
    let per_kind = 125;
    let mut checked = 0;
    let mut failures = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut drawn = 0;
    for d in [c(0.0, 0.0), c(-2.0, 0.0), c(-1.0, 0.0), c(-0.12, 0.75)] {
        let base = BaseQuadratic::new(d).unwrap();
        let julia = julia_samples(&base, 512, 0);
        let fixed: Vec<Cx> = periodic_points(&base, 1)
            .unwrap()
            .into_iter()
            .filter(|p| p.repelling)
            .map(|p| p.z)
            .collect();
        for parity in 0..2u64 {
            let mut verdicts = Vec::new();
            let mut next = 0u64;
            while verdicts.len() < per_kind {
                let batch: Vec<_> = (next..next + 8192)
                    .into_par_iter()
                    .map(|i| {
                        let (p, z0) = bounded_candidate(base, &julia, &fixed, 2 * i + parity);
                        let bounded = fiber_orbit(&p, z0, c(0.0, 0.0), DEFAULT_BUDGET).green < 1e-12;
                        bounded.then(|| adherence_bound_check(&p, z0, 1e-12, &julia).unwrap())
                    })
                    .collect();
                drawn += batch.len();
                for v in batch.into_iter().flatten() {
                    if v.applicable && verdicts.len() < per_kind {
                        verdicts.push(v);
                    }
                }
                next += 8192;
            }
            for v in verdicts {
                checked += 1;
                worst_ratio = worst_ratio.max(v.lhs / v.rhs);
                if !v.pass {
                    failures += 1;
                }
            }
        }
    }
    (
        failures == 0 && checked == 1000,
        format!(
            "{checked} bounded-fiber params ({drawn} drawn), {failures} failures, max |ρ(z0)|/bound {worst_ratio:.3}"
        ),
    )
}

fn criterion_5() -> (bool, String) {
    let slice = ComplexLineSlice::mandelbrot_family(128);
    let mut ok = true;
    let mut parts = Vec::new();
    for eta in [0.0, 0.3] {
        let r = equidistribution_report(
            &slice,
            &[1, 2, 3, 4],
            c(eta, 0.0),
            Estimator::Measure { count: 64, seed: 1 },
        )
        .unwrap();
        ok &= r.decreasing;
        let l1: Vec<String> = r.entries.iter().map(|e| format!("{:.3}", e.potential_l1)).collect();
        parts.push(format!("η={eta}: [{}]", l1.join(", ")));
    }
    (ok, format!("‖L_n^v − L_v‖_L1 over n=1..4, {}", parts.join("; ")))
}

fn criterion_6() -> (bool, String) {
    let est = Estimator::Periodic { n: 10 };
    let mut ks = Vec::new();
    for r in [1e2, 1e3, 1e4] {
        let m = radial_bif_measure(BaseQuadratic::z2(), r, 512, est, DEFAULT_BUDGET).unwrap();
        ks.push(m.ks_angular());
    }
    let cheb = radial_bif_measure(BaseQuadratic::chebyshev(), 1e4, 512, est, DEFAULT_BUDGET).unwrap();
    let arc = cheb.ks_arcsine();
    let decreasing = ks.windows(2).all(|w| w[1] < w[0]);
    (
        decreasing && ks[2] < 0.05 && arc < 0.08,
        format!(
            "d=0 angular KS [{:.4}, {:.4}, {:.4}] (decreasing, < 0.05); d=-2 arcsine KS {arc:.4} (< 0.08)",
            ks[0], ks[1], ks[2]
        ),
    )
}

fn criterion_7() -> (bool, String) {
    let t = 100.0;
    let z2 = BaseQuadratic::z2();
    let julia = julia_samples(&z2, 512, 0);
    let cases = [
        ("s=0", [1.0, -3.3, 2.42], (2, None, Some(0))),
        ("s=1", [0.0, 1.0, -0.5], (1, Some(2), None)),
        ("s=2", [1.0, 0.0, -0.25], (2, None, Some(1))),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, l, (comps, winding, linking)) in cases {
        let p = SkewParams::from_lambda(l.map(|x| c(x * t, 0.0)), z2);
        let rf = r_f(&p, &julia.points).unwrap();
        let lp = LoopParam::unit_circle(c(rf / 2.0, 0.0));
        let r = lift_curve(&p, &lp, DEFAULT_LIFT_STEPS).unwrap();
        let pass =
            r.num_components == comps && r.linking == linking && winding.map_or(true, |w| r.winding_over_boundary == w);
        ok &= pass;
        parts.push(format!(
            "{name}: {} comp, winding {}, linking {:?}",
            r.num_components, r.winding_over_boundary, r.linking
        ));
    }
    (ok, parts.join("; "))
}

fn criterion_8() -> (bool, String) {
    let report = jonsson_check(100.0, 500, 8).unwrap();
    let one = bounded_fibers_with_roots(&jonsson_variant_one(100.0), DEFAULT_BUDGET).unwrap();
    let two = bounded_fibers_with_roots(&jonsson_variant_two(100.0), DEFAULT_BUDGET).unwrap();
    let near = |got: &[Cx], want: &[f64]| {
        got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - c(*w, 0.0)).norm() < 1e-9)
    };
    let p = jonsson_params(100.0);
    let label = classify_cdm(&p, &julia_samples(&p.base, 512, 0), DEFAULT_BUDGET)
        .unwrap()
        .label;
    (
        report.all_pass && near(&one, &[2.0]) && near(&two, &[-2.0, 2.0]) && label == CdmLabel::M,
        format!(
            "fixed {} escape {}/{} reach {}/{}; types {:?} and {:?}; class {label}",
            report.fixed_points,
            report.escaping,
            report.samples,
            report.reaching,
            report.samples,
            one.iter().map(|z| z.re).collect::<Vec<_>>(),
            two.iter().map(|z| z.re).collect::<Vec<_>>(),
        ),
    )
}

fn criterion_9() -> (bool, String) {
    let mut triples = 0;
    let mut pairs = 0;
    let mut trials = 0;
    for d in [c(0.0, 0.0), c(-2.0, 0.0), c(-1.0, 0.0)] {
        let base = BaseQuadratic::new(d).unwrap();
        let fibers = julia_samples(&base, 64, 9).points;
        let roots: Vec<Cx> = (1..=3)
            .flat_map(|n| periodic_points(&base, n).unwrap())
            .map(|p| p.z)
            .collect();
        let n = if d == c(0.0, 0.0) { 33_334 } else { 33_333 };
        let r = triple_search(base, &fibers, &roots, 1e3, n, 0.1, 9).unwrap();
        triples += r.triples;
        pairs += r.pairs;
        trials += r.trials;
    }
    (
        triples == 0 && trials == 100_000,
        format!("{trials} params with ‖λ‖∞ > 1e3: {triples} triples, {pairs} pairs"),
    )
}

fn criterion_10() -> (bool, String) {
    let z2 = BaseQuadratic::z2();
    let product = SkewParams::from_lambda([c(0.0, 0.0), c(0.0, 0.0), c(100.0, 0.0)], z2);
    let bz = SkewParams::from_lambda([c(0.0, 0.0), c(100.0, 0.0), c(0.0, 0.0)], z2);
    let escaping = SkewParams::from_lambda(
        [c(100.0, 0.0), c(0.0, 0.0), c(-900.0, 0.0)],
        BaseQuadratic::new(c(-1.0, 0.0)).unwrap(),
    );
    let labels: Vec<String> = [product, bz, escaping]
        .iter()
        .map(|p| julia_topology_label(p, 4).map_or_else(|e| format!("error: {e}"), |l| l.to_string()))
        .collect();
    let distinct = labels[0] != labels[1] && labels[1] != labels[2] && labels[0] != labels[2];
    let expected = labels == ["circle_times_cantor", "suspension", "base_times_cantor"];
    (distinct && expected, format!("labels {labels:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> (bool, String)); 10] = [
        ("Mandelbrot identity", criterion_1),
        ("L_p(z²) = log 2", criterion_2),
        ("estimator consistency", criterion_3),
        ("adherence bound", criterion_4),
        ("equidistribution trend", criterion_5),
        ("infinity measure", criterion_6),
        ("monodromy lemmas", criterion_7),
        ("Jonsson example", criterion_8),
        ("compactness evidence", criterion_9),
        ("topology separation", criterion_10),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let (pass, detail) = f();
        if !pass {
            failed += 1;
        }
        println!(
            "acceptance {id:>2} [{}] {name}: {detail} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
