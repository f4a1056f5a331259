use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinglass"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn round_trip_every_method_and_generator() {
    let dir = TempDir::new().unwrap();
    let cases: &[(&[&str], &[&str])] = &[
        (
            &["--kind", "lattice", "--width", "4", "--height", "3"],
            &[
                "brute-force",
                "planar-exact",
                "strip-dp",
                "lattice-ptas",
                "planar-ptas",
            ],
        ),
        (
            &[
                "--kind",
                "lattice",
                "--width",
                "4",
                "--height",
                "3",
                "--fields",
                "uniform:-2:2",
            ],
            &["brute-force", "strip-dp", "lattice-ptas", "planar-ptas"],
        ),
        (
            &[
                "--kind",
                "random-planar",
                "--n",
                "14",
                "--delete-prob",
                "0.2",
                "--couplings",
                "pm1",
            ],
            &["brute-force", "planar-exact", "planar-ptas"],
        ),
        (
            &["--kind", "quantum-lattice", "--width", "3", "--height", "2"],
            &["exact-diag", "product-state", "quantum-kpr"],
        ),
        (
            &["--kind", "quantum-planar", "--n", "7"],
            &["exact-diag", "product-state", "quantum-kpr"],
        ),
        (
            &["--kind", "star", "--n", "6"],
            &["exact-diag", "product-state", "star-ptas"],
        ),
    ];
    for (k, (gen, methods)) in cases.iter().enumerate() {
        let inst = path(&dir, &format!("inst{k}.json"));
        let mut args = vec!["gen", "--seed", "11", "-o", &inst];
        args.extend_from_slice(gen);
        let out = run(&args);
        assert_eq!(code(&out), 0, "{:?}", String::from_utf8_lossy(&out.stderr));
        for m in methods.iter() {
            let res = path(&dir, &format!("res{k}-{m}.json"));
            let out = run(&[
                "solve",
                "-i",
                &inst,
                "-m",
                m,
                "--epsilon",
                "0.5",
                "-o",
                &res,
            ]);
            assert_eq!(
                code(&out),
                0,
                "{m}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            let out = run(&["verify", "-i", &inst, "-r", &res]);
            assert_eq!(
                code(&out),
                0,
                "{m} on case {k}: {}",
                String::from_utf8_lossy(&out.stdout)
            );
        }
    }
}

#[test]
fn gen_is_deterministic() {
    let a = run(&["gen", "--kind", "random-planar", "--n", "25", "--seed", "5"]);
    let b = run(&["gen", "--kind", "random-planar", "--n", "25", "--seed", "5"]);
    let c = run(&["gen", "--kind", "random-planar", "--n", "25", "--seed", "6"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn tight_triangle_planar_exact() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "tri.json",
        r#"{"n": 3, "edges": [[0, 1, 1], [1, 2, 1], [0, 2, 1]],
            "rotation": [[0, 4], [1, 2], [3, 5]], "outer_face": 0}"#,
    );
    let out = run(&["--json", "solve", "-i", &inst, "-m", "planar-exact"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["energy"], -1.0);
}

#[test]
fn lattice_ptas_reports_relative_guarantee() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "l.json");
    run(&[
        "gen", "--kind", "lattice", "--width", "5", "--height", "5", "--seed", "2", "-o", &inst,
    ]);
    let out = run(&[
        "--json",
        "solve",
        "-i",
        &inst,
        "-m",
        "lattice-ptas",
        "--epsilon",
        "0.5",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["guarantee"]["kind"], "relative_error");
    assert_eq!(v["guarantee"]["epsilon"], 0.5);
}

#[test]
fn star_ptas_exact_on_identical_bath() {
    let dir = TempDir::new().unwrap();
    let term = r#"{"h": [[0.3,0,0],[0,0.2,0],[0,0,0.5]], "bath_local": [0.1,0,0]}"#;
    let bath = [term; 5].join(",");
    let inst = write(
        &dir,
        "star.json",
        &format!(r#"{{"central": [0, 0, 0.2], "bath": [{bath}], "a": 0.5, "b": 2}}"#),
    );
    let s = run(&["--json", "solve", "-i", &inst, "-m", "star-ptas"]);
    let e = run(&["--json", "solve", "-i", &inst, "-m", "exact-diag"]);
    assert_eq!(code(&s), 0, "{}", String::from_utf8_lossy(&s.stderr));
    let es = stdout_json(&s)["energy"].as_f64().unwrap();
    let ee = stdout_json(&e)["energy"].as_f64().unwrap();
    assert!((es - ee).abs() < 1e-9, "{es} vs {ee}");
}

#[test]
fn tampered_energy_rejected() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "l.json");
    let res = path(&dir, "r.json");
    run(&[
        "gen", "--kind", "lattice", "--width", "3", "--height", "3", "--seed", "1", "-o", &inst,
    ]);
    assert_eq!(
        code(&run(&["solve", "-i", &inst, "-m", "strip-dp", "-o", &res])),
        0
    );
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&res).unwrap()).unwrap();
    let e = v["energy"].as_f64().unwrap();
    v["energy"] = Value::from(e - 3.0);
    fs::write(&res, v.to_string()).unwrap();
    let out = run(&["verify", "-i", &inst, "-r", &res]);
    assert_eq!(code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL energy"), "{stdout}");
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("{e}")));
}

#[test]
fn multigraph_certificate_flagged() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "m.json",
        r#"{"n": 2, "edges": [[0, 1, 1], [0, 1, -1]], "simple": false}"#,
    );
    let res = path(&dir, "r.json");
    assert_eq!(
        code(&run(&[
            "solve",
            "-i",
            &inst,
            "-m",
            "brute-force",
            "-o",
            &res
        ])),
        0
    );
    let out = run(&["--json", "verify", "-i", &inst, "-r", &res]);
    assert_eq!(code(&out), 0);
    let checks = stdout_json(&out)["report"]["checks"].clone();
    let ext = checks
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "extensivity")
        .unwrap()
        .clone();
    assert!(ext["passed"].is_null());
    assert!(ext["detail"].as_str().unwrap().contains("not applicable"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(&["solve", "--no-such-flag"])), 2);
    let bad = write(&dir, "bad.json", r#"{"n": 2, "edges": [[0, 5, 1]]}"#);
    assert_eq!(code(&run(&["solve", "-i", &bad, "-m", "brute-force"])), 2);
    let missing = path(&dir, "missing.json");
    assert_eq!(
        code(&run(&["solve", "-i", &missing, "-m", "brute-force"])),
        2
    );
    // A valid instance that exceeds a solver cap is a solver failure.
    let big = path(&dir, "big.json");
    run(&[
        "gen", "--kind", "lattice", "--width", "6", "--height", "6", "-o", &big,
    ]);
    assert_eq!(code(&run(&["solve", "-i", &big, "-m", "brute-force"])), 1);
    assert_eq!(code(&run(&["gen", "--kind", "lattice"])), 2);
}

#[test]
fn bench_suite_and_empty_suite() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.json", "{}");
    let csv = path(&dir, "empty.csv");
    let out = run(&["bench", "--suite", &empty, "--out", &csv]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1);

    let suite = write(
        &dir,
        "suite.json",
        r#"{"instances": [
              {"id": "g0", "generator": {"kind": "lattice", "width": 4, "height": 4, "couplings": {"type": "plus_minus_one"}, "seed": 0}},
              {"id": "g1", "generator": {"kind": "lattice", "width": 4, "height": 4, "seed": 1}}],
            "methods": ["lattice-ptas", "planar-exact"],
            "epsilons": [1.0, 0.5, 0.3333333333333333]}"#,
    );
    let csv = path(&dir, "report.csv");
    let out = run(&["bench", "--suite", &suite, "--out", &csv]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut rdr = csv_rows(&text);
    let header = rdr.remove(0);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rdr.len(), 2 * 4);
    for row in &rdr {
        assert_eq!(row[col("within_guarantee")], "true", "{row:?}");
        if row[col("guarantee_kind")] == "relative_error" {
            let rel: f64 = row[col("rel_error")].parse().unwrap();
            let g: f64 = row[col("guarantee_value")].parse().unwrap();
            assert!(rel <= g + 1e-12);
        }
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("lattice-ptas"));
}

// The report has no quoted fields with commas, so a plain split suffices.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn inspect_reports_layers() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "p.json");
    run(&[
        "gen",
        "--kind",
        "random-planar",
        "--n",
        "30",
        "--seed",
        "4",
        "-o",
        &inst,
    ]);
    let out = run(&["--json", "inspect", "-i", &inst, "--epsilon", "0.34"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["embedding"]["euler_characteristic"], 2);
    assert_eq!(v["ptas_classes"]["levels"], 3);
    assert!(Path::new(&inst).exists());
}
