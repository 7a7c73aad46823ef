use std::f64::consts::LN_2;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use skewprod::io::read_pgm;

fn skewprod(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skewprod"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn lyap_of_zero_map_is_log_two_twice() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_of(&skewprod(dir.path(), &["--preset", "abc_full", "lyap"]));
    for key in ["base", "vertical"] {
        let x = v[key]["value"].as_f64().unwrap();
        assert!((x - LN_2).abs() < 1e-12, "{key}: {x}");
    }
    assert_eq!(v["vertical"]["estimator"], "periodic");
    assert_eq!(v["vertical"]["n_or_count"], 8);
}

#[test]
fn classify_jonsson_is_m_with_fixed_fibers() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_of(&skewprod(dir.path(), &["--preset", "jonsson", "classify"]));
    assert_eq!(v["label"], "M");
    let fixed: Vec<f64> = v["fixed_fibers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| z[0].as_f64().unwrap())
        .collect();
    assert_eq!(fixed, vec![-1.0, 2.0]);
}

/// `Λ_0 = λ`, `Λ_{k+1} = Λ_k² + λ` stays below `10^100` for `budget` steps.
fn lambda_bounded(re: f64, im: f64, budget: u32) -> bool {
    let (mut x, mut y) = (re, im);
    for _ in 1..budget {
        if (x * x + y * y).sqrt() > 1e100 {
            return false;
        }
        (x, y) = (x * x - y * y + re, 2.0 * x * y + im);
    }
    (x * x + y * y).sqrt() <= 1e100
}

#[test]
fn render_bz_reproduces_the_mandelbrot_mask() {
    let dir = tempfile::tempdir().unwrap();
    let res = 96;
    let v = json_of(&skewprod(
        dir.path(),
        &[
            "--preset",
            "mandelbrot_bz",
            "--resolution",
            "96",
            "--budget",
            "300",
            "render-bz",
            "--z",
            "1",
        ],
    ));
    let pgm = read_pgm(
        std::fs::File::open(dir.path().join("out/bz.pgm"))
            .map(std::io::BufReader::new)
            .unwrap(),
    )
    .unwrap();
    assert_eq!((pgm.width, pgm.height, pgm.maxval), (res, res, 255));
    let h = 4.0 / res as f64;
    let mut set = 0;
    for row in 0..res {
        for i in 0..res {
            // the top row holds the largest imaginary part
            let j = res - 1 - row;
            let want = lambda_bounded(-2.5 + (i as f64 + 0.5) * h, -2.0 + (j as f64 + 0.5) * h, 300);
            assert_eq!(pgm.samples[row * res + i] == 255, want, "pixel ({i}, {j})");
            set += want as usize;
        }
    }
    assert_eq!(v["bounded_pixels"], set);
    let side: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/bz.json")).unwrap()).unwrap();
    assert_eq!(side["provenance"]["config_hash"], v["config_hash"]);
    assert_eq!(side["provenance"]["budget"], 300);
}

#[test]
fn renders_are_deterministic_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "--preset".to_string(),
            "abc_full".into(),
            "--resolution".into(),
            "24".into(),
            "--estimator".into(),
            "measure".into(),
            "--mu-count".into(),
            "64".into(),
            "--seed".into(),
            "7".into(),
            "--output-dir".into(),
            out.into(),
            "render-bif".into(),
        ]
    };
    let a: Vec<String> = args("a");
    let b: Vec<String> = args("b");
    let va = json_of(&skewprod(dir.path(), &a.iter().map(String::as_str).collect::<Vec<_>>()));
    let vb = json_of(&skewprod(dir.path(), &b.iter().map(String::as_str).collect::<Vec<_>>()));
    assert_eq!(va["config_hash"], vb["config_hash"]);
    for name in ["lv.pgm", "ddc_lv.pgm", "lv.json"] {
        let x = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(name)).unwrap();
        if name.ends_with(".json") {
            let (mut x, mut y): (Value, Value) =
                (serde_json::from_slice(&x).unwrap(), serde_json::from_slice(&y).unwrap());
            assert_eq!(x["provenance"]["seed"], 7);
            x["provenance"]["config"]["output-dir"] = Value::Null;
            y["provenance"]["config"]["output-dir"] = Value::Null;
            assert_eq!(x, y);
        } else {
            assert_eq!(x, y, "{name}");
        }
    }
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("job.toml"), "preset = \"a0\"\nradius = 4.0\n").unwrap();
    let out = skewprod(dir.path(), &["--config", "job.toml", "lyap"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius: must be at least 10"));
    std::fs::write(dir.path().join("job.toml"), "[estimator]\nkind = 3\n").unwrap();
    let out = skewprod(dir.path(), &["--config", "job.toml", "lyap"]);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("error: estimator"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = skewprod(dir.path(), &["--probe-z", "0,3", "lyap"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("probe-z[0]"));
}

#[test]
fn topology_of_the_two_root_disk_example_links_once() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_of(&skewprod(
        dir.path(),
        &[
            "--preset",
            "abc_full",
            "--origin",
            "100;0;-25",
            "topology",
            "--probe",
            "0",
        ],
    ));
    let lift = &v["report"]["lift"]["Ok"];
    assert_eq!(lift["num_components"], 2);
    assert_eq!(lift["linking"], 1);
    assert_eq!(
        v["report"]["component_type"]["Ok"],
        serde_json::json!([{ "bounded": 0 }, { "bounded": 0 }])
    );
}

#[test]
fn infinity_and_pern_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_of(&skewprod(
        dir.path(),
        &[
            "--resolution",
            "32",
            "--periodic-n",
            "4",
            "--budget",
            "200",
            "infinity",
            "--r-list",
            "50,500",
        ],
    ));
    assert_eq!(v["radii"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("out/radial_R50.csv").exists());
    assert!(dir.path().join("out/radial_R500.csv").exists());
    json_of(&skewprod(
        dir.path(),
        &["--preset", "abc_full", "--resolution", "16", "pern", "--n", "2"],
    ));
    let pgm = read_pgm(std::io::BufReader::new(
        std::fs::File::open(dir.path().join("out/pern2.pgm")).unwrap(),
    ))
    .unwrap();
    assert_eq!((pgm.width, pgm.maxval), (16, 65535));
}
