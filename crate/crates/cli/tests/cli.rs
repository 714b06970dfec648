use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const UNIT: &str = r#"
[domain]
lower = 0.0
upper = 1.0

[kernel]
kind = "constant-band"
params = [1.0, 2.0]

[coeffs]
q_kind = "affine"
q_params = [1.0, 0.5]
a_kind = "tent"
a_params = [0.5, 0.25, 1.0, 0.0]
"#;

const LINE: &str = r#"
[domain]
lower = "-inf"
upper = "inf"

[kernel]
kind = "constant-band"
params = [1.0, 1.0]

[coeffs]
q_kind = "constant"
q_params = [0.2]
a_kind = "constant"
a_params = [0.0]
"#;

fn driftev(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftev"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn setup() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("unit.toml"), UNIT).unwrap();
    fs::write(d.path().join("line.toml"), LINE).unwrap();
    d
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn solve_writes_eigenpair_and_manifest() {
    let d = setup();
    let o = driftev(
        d.path(),
        &[
            "solve",
            "--problem",
            "unit.toml",
            "--n",
            "201",
            "--tol",
            "1e-6",
            "--out",
            "a",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("a");
    let rec: toml::Table = read(&out, "eigen.toml").parse().unwrap();
    let lo = rec["lambda_lo"].as_float().unwrap();
    let hi = rec["lambda_hi"].as_float().unwrap();
    assert!(hi - lo <= 1e-6 && lo <= hi);
    assert_eq!(rec["n"].as_integer(), Some(201));
    assert_eq!(rec["bc_side"].as_str(), Some("upper"));
    let csv = read(&out, "eigenfunction.csv");
    assert!(csv.starts_with("x,phi\n"));
    assert_eq!(csv.lines().count(), 202);
    let m: toml::Table = read(&out, "manifest.toml").parse().unwrap();
    assert_eq!(m["exit_code"].as_integer(), Some(0));
    assert_eq!(m["seed_vector"].as_str(), Some("uniform-ones"));
    assert_eq!(m["run"]["command"].as_str(), Some("solve"));
}

#[test]
fn invalid_declared_constants_exit_2() {
    let d = setup();
    let bad = UNIT.replace("params = [1.0, 2.0]", "params = [1.0, 2.0]\nkappa0 = 3.0");
    fs::write(d.path().join("bad.toml"), bad).unwrap();
    let o = driftev(d.path(), &["solve", "--problem", "bad.toml", "--out", "b"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("A2"), "{err}");
    let m: toml::Table = read(&d.path().join("b"), "manifest.toml").parse().unwrap();
    assert_eq!(m["exit_code"].as_integer(), Some(2));
    assert!(read(&d.path().join("b"), "validation.txt").contains("FAIL"));
}

#[test]
fn io_and_parse_errors_exit_3() {
    let d = setup();
    let o = driftev(
        d.path(),
        &["validate", "--problem", "missing.toml", "--out", "c"],
    );
    assert_eq!(code(&o), 3);
    fs::write(d.path().join("junk.toml"), "[domain\nlower = ").unwrap();
    let o = driftev(d.path(), &["solve", "--problem", "junk.toml", "--out", "c"]);
    assert_eq!(code(&o), 3);
    assert!(d.path().join("c/manifest.toml").exists());
}

#[test]
fn non_convergence_exit_1() {
    let d = setup();
    let o = driftev(
        d.path(),
        &[
            "solve",
            "--problem",
            "unit.toml",
            "--tol",
            "1e-12",
            "--max-iters",
            "2",
            "--method",
            "power",
            "--out",
            "e",
        ],
    );
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn outputs_are_deterministic_and_rerunnable() {
    let d = setup();
    for out in ["r1", "r2"] {
        let o = driftev(
            d.path(),
            &[
                "solve",
                "--problem",
                "unit.toml",
                "--seed",
                "7",
                "--out",
                out,
            ],
        );
        assert_eq!(code(&o), 0);
    }
    let p = d.path();
    assert_eq!(
        read(&p.join("r1"), "eigenfunction.csv"),
        read(&p.join("r2"), "eigenfunction.csv")
    );
    assert!(read(&p.join("r1"), "manifest.toml").contains("random-positive:7"));
    // the manifest carries the problem, so the original file is not needed
    fs::remove_file(p.join("unit.toml")).unwrap();
    let o = driftev(
        p,
        &["rerun", "--manifest", "r1/manifest.toml", "--out", "r3"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        read(&p.join("r1"), "eigenfunction.csv"),
        read(&p.join("r3"), "eigenfunction.csv")
    );
    assert_eq!(
        read(&p.join("r1"), "eigen.toml"),
        read(&p.join("r3"), "eigen.toml")
    );
}

#[test]
fn exhaust_on_the_line() {
    let d = setup();
    let o = driftev(
        d.path(),
        &[
            "exhaust",
            "--problem",
            "line.toml",
            "--r0",
            "1",
            "--growth",
            "2",
            "--count",
            "6",
            "--gap-tol",
            "1e-4",
            "--out",
            "x",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("x");
    let trace = read(&out, "trace.csv");
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("radius,n,lambda_lo,lambda_est,lambda_hi")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() >= 2);
    for w in rows.windows(2) {
        let slack = (w[0][4] - w[0][2]) + (w[1][4] - w[1][2]);
        assert!(w[1][3] <= w[0][3] + slack, "{w:?}");
    }
    assert!(read(&out, "snapshot.csv").starts_with("x,phi\n"));
    let s: toml::Table = read(&out, "exhaust.toml").parse().unwrap();
    assert_eq!(s["monotone"].as_bool(), Some(true));
}

#[test]
fn harnack_certify_and_kpp() {
    let d = setup();
    let p = d.path();
    let wide = UNIT
        .replace("upper = 1.0", "upper = 4.0")
        .replace("params = [1.0, 2.0]", "params = [1.0, 0.5]");
    fs::write(p.join("wide.toml"), wide).unwrap();
    let o = driftev(
        p,
        &[
            "harnack",
            "--problem",
            "unit.toml",
            "--r1",
            "0.25",
            "--r2",
            "0.5",
            "--out",
            "g",
        ],
    );
    assert_eq!(code(&o), 2);
    let o = driftev(
        p,
        &[
            "harnack",
            "--problem",
            "wide.toml",
            "--n",
            "401",
            "--r1",
            "1.5",
            "--r2",
            "2.5",
            "--out",
            "h",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let h = read(&p.join("h"), "harnack.csv");
    assert!(h.starts_with("r1,r2,eps,delta,N,log_C,empirical_ratio,pass\n"));
    assert!(h.trim_end().ends_with("true"));

    fs::write(
        p.join("checks.toml"),
        r#"
[[check]]
property = "domain_monotone"
inner = [0.0, 0.5]
outer = [0.0, 1.0]

[[check]]
property = "a_lipschitz"
a1 = { kind = "constant", params = [0.5] }
a2 = { kind = "constant", params = [0.0] }

[[check]]
property = "lower_bound"

[[check]]
property = "dual_gap"
"#,
    )
    .unwrap();
    let o = driftev(
        p,
        &[
            "certify",
            "--problem",
            "unit.toml",
            "--checks",
            "checks.toml",
            "--out",
            "c",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let c = read(&p.join("c"), "certify.csv");
    let rows: Vec<&str> = c.lines().collect();
    assert_eq!(rows[0], "property_id,pass,lhs,rhs,tolerance");
    // a_lipschitz also yields a_monotone since a1 >= a2
    assert_eq!(rows.len(), 6);
    assert!(rows[1..]
        .iter()
        .all(|r| r.split(',').nth(1) == Some("true")));

    let o = driftev(
        p,
        &[
            "kpp",
            "--speeds",
            "0.05,5",
            "--t-end",
            "50",
            "--record-every",
            "100",
            "--out",
            "k",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let k = read(&p.join("k"), "kpp_sweep.csv");
    let rows: Vec<&str> = k.lines().collect();
    assert_eq!(rows[0], "c,lambda_lin,simulated_mass,predicted,agree");
    assert!(rows[1].contains(",persist,true"), "{k}");
    assert!(rows[2].contains(",extinct,true"), "{k}");
    assert!(read(&p.join("k"), "kpp_field_0.csv").starts_with("t,x,v\n"));
}
