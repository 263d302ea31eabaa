use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn icckit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icckit"))
        .args(args)
        .env_remove("ICCKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Explicit region of the identity channel with flat inputs, written under `dir`.
fn identity_region(dir: &Path, kind: &str) -> PathBuf {
    let out = dir.join(format!("{kind}.json"));
    let o = icckit(&[
        "region",
        "--channel",
        p(&data("identity.json")),
        "--dist",
        p(&data("general_flat.json")),
        "--kind",
        kind,
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn region_writes_csv_json_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("xor.csv");
    let o = icckit(&[
        "region",
        "--channel",
        p(&data("xor_deterministic.json")),
        "--dist",
        p(&data("dicc_uniform.json")),
        "--kind",
        "dicc",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("xor.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("R0,R1,R2,rhs"));
    assert_eq!(csv.lines().count(), 14);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("xor.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 13);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("xor.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert!(manifest["command"].as_str().unwrap().starts_with("region"));
}

#[test]
fn identity_region_has_unit_private_bounds() {
    let o = icckit(&[
        "region",
        "--channel",
        p(&data("identity.json")),
        "--dist",
        p(&data("general_flat.json")),
    ]);
    assert_eq!(code(&o), 0);
    let rows: Vec<String> = stdout(&o).lines().skip(1).map(String::from).collect();
    assert_eq!(rows.len(), 13);
    assert!(rows.contains(&"0,1,0,1".to_string()));
    assert!(rows.contains(&"0,0,1,1".to_string()));
}

#[test]
fn malformed_kernel_names_file_and_row() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"alphabets": {"X1": 1, "X2": 1, "Y1": 2, "Y2": 1}, "kernel": [0.6, 0.3]}"#,
    )
    .unwrap();
    let o = icckit(&["region", "--channel", p(&bad), "--dist", p(&data("general_flat.json"))]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("bad.json"), "{err}");
    assert!(err.contains("row"), "{err}");
}

#[test]
fn fme_projects_and_rejects_unknown_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let implicit = identity_region(dir.path(), "implicit");
    let o = icckit(&[
        "fme",
        "--region",
        p(&implicit),
        "--sum",
        "R1=R12+R11",
        "--sum",
        "R2=R21+R22",
        "--eliminate",
        "R12,R11,R21,R22",
        "--order",
        "R0,R1,R2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("R0,R1,R2,rhs"));
    assert!(out.lines().count() - 1 <= 13);

    let o = icckit(&["fme", "--region", p(&implicit), "--eliminate", "R9"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("R9"));
}

#[test]
fn fme_without_elimination_keeps_the_region() {
    let dir = tempfile::tempdir().unwrap();
    let explicit = identity_region(dir.path(), "explicit");
    let same = dir.path().join("same.json");
    let o = icckit(&["fme", "--region", p(&explicit), "--out", p(&same)]);
    assert_eq!(code(&o), 0);
    let o = icckit(&["diff", p(&explicit), p(&same), "--grid-step", "0.1"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    // Writing is a fixed point once the rows are simplified.
    let again = dir.path().join("again.json");
    assert_eq!(code(&icckit(&["fme", "--region", p(&same), "--out", p(&again)])), 0);
    assert_eq!(fs::read(&same).unwrap(), fs::read(&again).unwrap());
    let again_csv = dir.path().join("again.csv");
    assert_eq!(fs::read(dir.path().join("same.csv")).unwrap(), fs::read(again_csv).unwrap());
}

#[test]
fn member_reports_slacks_and_violations() {
    let dir = tempfile::tempdir().unwrap();
    let region = identity_region(dir.path(), "explicit");
    let o = icckit(&["member", "--region", p(&region), "--point", "R0=0,R1=0,R2=0"]);
    assert_eq!(code(&o), 0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&region).unwrap()).unwrap();
    let rhs: Vec<f64> = json["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["rhs"].as_f64().unwrap())
        .collect();
    let slacks: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .take(rhs.len())
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for (s, r) in slacks.iter().zip(&rhs) {
        assert!((s - r).abs() < 1e-9);
    }
    assert_eq!(stdout(&o).lines().last(), Some("member"));

    let o = icckit(&["member", "--region", p(&region), "--point", "R0=0,R1=1.5,R2=0"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("R1 <= I(U1X1;Y1|U0U2)"));

    // On the boundary, inside the default tolerance.
    let o = icckit(&["member", "--region", p(&region), "--point", "R0=0,R1=1.0000000001,R2=0"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn diff_finds_and_rules_out_differences() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "R1,R2,rhs\n1,0,1\n0,1,1\n").unwrap();
    fs::write(&b, "R1,R2,rhs\n1,0,0.5\n0,1,1\n").unwrap();
    let o = icckit(&["diff", p(&a), p(&a)]);
    assert_eq!(code(&o), 0);
    let o = icckit(&["diff", p(&a), p(&b)]);
    assert_eq!(code(&o), 1);
    let counts: Vec<usize> = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert!(counts[0] > 0 && counts[1] == 0);
}

#[test]
fn diff_exposes_the_listed_rows_gap() {
    let dir = tempfile::tempdir().unwrap();
    let explicit = identity_region(dir.path(), "explicit");
    let implicit = identity_region(dir.path(), "implicit");
    let projected = dir.path().join("proj.json");
    let o = icckit(&[
        "fme", "--region", p(&implicit), "--sum", "R1=R12+R11", "--sum", "R2=R21+R22",
        "--eliminate", "R12,R11,R21,R22", "--order", "R0,R1,R2", "--out", p(&projected),
    ]);
    assert_eq!(code(&o), 0);
    let o = icckit(&["diff", p(&explicit), p(&projected), "--bbox", "0:1.1"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
}

#[test]
fn simulate_is_reproducible_and_records_its_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let mut json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(data("sim_xor_interior.json")).unwrap()).unwrap();
    json["trials"] = 40.into();
    json["blocklengths"] = serde_json::json!([8, 16]);
    fs::write(&cfg, json.to_string()).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = icckit(&["simulate", "--config", p(&cfg), "--seed", "21", "--out", p(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read_to_string(out).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(first, run("b.csv"));
    assert!(first.starts_with("n,trials,pe1,pe2,pe_max,ci_half_width"));
    assert_eq!(first.lines().count(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 21);
}

#[test]
fn strongcheck_verdicts() {
    let args = |ch: &str| {
        icckit(&["strongcheck", "--channel", p(&data(ch)), "--samples", "50", "--grid-step", "0.5"])
    };
    assert_eq!(code(&args("identity.json")), 1);
    let o = args("cross_observing.json");
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("true"));
}

#[test]
fn timeshare_and_union() {
    let o = icckit(&[
        "timeshare",
        "--channel",
        p(&data("adder_bsc.json")),
        "--dist",
        p(&data("general_split.json")),
        "--dist",
        p(&data("general_random.json")),
        "--samples",
        "30",
    ]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));

    let union = |pt: &str| {
        icckit(&["union", "--channel", p(&data("identity.json")), "--samples", "50", "--point", pt])
    };
    assert_eq!(code(&union("R0=0,R1=0.1,R2=0.1")), 0);
    assert_eq!(code(&union("R0=0,R1=1.5,R2=0")), 1);
}

#[test]
fn environment_and_usage_errors() {
    let o = Command::new(env!("CARGO_BIN_EXE_icckit"))
        .args(["region", "--channel", p(&data("identity.json")), "--dist", p(&data("general_flat.json"))])
        .env("ICCKIT_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ICCKIT_THREADS"));
    assert_eq!(code(&icckit(&["bogus"])), 2);
    assert_eq!(code(&icckit(&["member", "--region", p(&data("identity.json"))])), 2);
}
