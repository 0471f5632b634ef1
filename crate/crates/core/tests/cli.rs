use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hllab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hllab"))
        .args(args)
        .env_remove("HLLAB_THREADS")
        .output()
        .unwrap()
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn exit_codes() {
    assert_eq!(
        hllab(&["exponent", "--p", "3,4,inf"]).status.code(),
        Some(0)
    );
    assert_eq!(hllab(&["exponent", "--p", "2,2"]).status.code(), Some(3));
    assert_eq!(hllab(&["exponent", "--p", "0.5,4"]).status.code(), Some(3));
    assert_eq!(hllab(&["exponent", "--p", "abc"]).status.code(), Some(2));
    assert_eq!(
        hllab(&["bound", "--p", "inf,inf", "--rule", "main"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(hllab(&["no-such-command"]).status.code(), Some(2));
    let help = hllab(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("khinchine-step"));
}

#[test]
fn records_carry_config_seed_and_version() {
    let out = hllab(&[
        "norm",
        "--p",
        "inf,inf,inf",
        "--dims",
        "2,2,2",
        "--dist",
        "signs",
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    let v = &json_lines(&out)[0];
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["seed"], 9);
    assert_eq!(v["config"]["dims"], serde_json::json!([2, 2, 2]));
    assert_eq!(v["result"]["method"], "VERTEX_EXACT");
    assert_eq!(v["result"]["certified"], true);
}

#[test]
fn tensor_file_input_and_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "l.json",
        r#"{"m":2,"dims":[2,2],"field":"real","coeffs":[1,1,1,-1]}"#,
    );
    let out = hllab(&[
        "verify",
        "--p",
        "inf,inf",
        "--input",
        &good,
        "--rule",
        "classical",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json_lines(&out)[0]["result"];
    assert_eq!(r["verdict"], "HOLDS");
    assert!((r["ratio"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);

    let complex = write(
        dir.path(),
        "c.json",
        r#"{"m":2,"dims":[1,2],"field":"complex","coeffs":[[0,1],[1,0]]}"#,
    );
    let out = hllab(&["norm", "--p", "2,2", "--input", &complex]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json_lines(&out)[0]["result"]["value"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-9);

    for (name, text) in [
        (
            "short.json",
            r#"{"m":2,"dims":[2,2],"field":"real","coeffs":[1,1,1]}"#,
        ),
        (
            "order.json",
            r#"{"m":3,"dims":[2,2],"field":"real","coeffs":[1,1,1,1]}"#,
        ),
        ("broken.json", "{not json"),
        (
            "field.json",
            r#"{"m":1,"dims":[1],"field":"quaternion","coeffs":[1]}"#,
        ),
    ] {
        let path = write(dir.path(), name, text);
        let out = hllab(&["norm", "--p", "inf,inf", "--input", &path]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(out.stdout.is_empty());
    }
    let missing = dir.path().join("missing.json");
    assert_eq!(
        hllab(&["norm", "--p", "2,2", "--input", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn batch_json_lines_and_csv() {
    let out = hllab(&[
        "verify", "--p", "inf,inf", "--dims", "3,3", "--dist", "signs", "--count", "5", "--seed",
        "1",
    ]);
    assert!(out.status.success());
    let lines = json_lines(&out);
    assert_eq!(lines.len(), 6);
    for (i, l) in lines[..5].iter().enumerate() {
        assert_eq!(l["result"]["tensor_id"], i);
        assert_eq!(l["result"]["certified"], true);
    }
    assert_eq!(lines[5]["result"]["summary"]["count"], 5);

    let csv = hllab(&[
        "verify", "--p", "inf,inf", "--dims", "3,3", "--count", "5", "--seed", "1", "--format",
        "csv",
    ]);
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut rows = text.lines();
    assert_eq!(
        rows.next().unwrap(),
        "tensor_id,seed,lhs,rho,norm,norm_method,certified,constant,bound_source,ratio,verdict,slack"
    );
    assert_eq!(rows.count(), 5);
}

#[test]
fn probe_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("probe.csv");
    let out = hllab(&[
        "probe",
        "--p",
        "inf,inf",
        "--q",
        "1",
        "--n-list",
        "2,3",
        "--trials",
        "3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("n,trials,best_ratio,mean_ratio,std_ratio,certified_fraction\n"));
    assert_eq!(text.lines().count(), 3);

    let out = hllab(&["probe", "--p", "inf,inf", "--q", "0.5", "--n-list", "2,3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn search_writes_tensor_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("best.json");
    let out = hllab(&[
        "search",
        "--p",
        "inf,inf",
        "--n",
        "2",
        "--restarts",
        "2",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rec = &json_lines(&out)[0]["result"];
    assert!((rec["ratio"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-6);
    assert_eq!(rec["verdict"], "HOLDS");

    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(saved["m"], 2);
    assert_eq!(saved["field"], "real");
    let side: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("best.json.record.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(side["ratio"], rec["ratio"]);
    assert_eq!(side["bound"], rec["bound"]);

    // The saved tensor feeds back in as a seed.
    let again = hllab(&[
        "search",
        "--p",
        "inf,inf",
        "--n",
        "2",
        "--restarts",
        "1",
        "--seed-file",
        path.to_str().unwrap(),
    ]);
    assert!(again.status.success());
    let labels: Vec<String> = json_lines(&again)[0]["result"]["starts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["seed_label"].as_str().unwrap().to_owned())
        .collect();
    assert!(labels.iter().any(|l| l == "FILE"), "{labels:?}");
}

#[test]
fn thread_variable_does_not_change_output() {
    let args = [
        "verify", "--p", "4,4,4", "--dims", "3,3,3", "--count", "30", "--seed", "4",
    ];
    let base = hllab(&args).stdout;
    for threads in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_hllab"))
            .args(args)
            .env("HLLAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        assert_eq!(out.stdout, base);
    }
    let flag = hllab(&[
        "--threads",
        "2",
        "verify",
        "--p",
        "4,4,4",
        "--dims",
        "3,3,3",
        "--count",
        "30",
        "--seed",
        "4",
    ]);
    assert_eq!(flag.stdout, base);
}

#[test]
fn khinchine_identity_equality() {
    let out = hllab(&["khinchine-step", "--p", "2", "--identity", "5"]);
    assert!(out.status.success());
    let r = &json_lines(&out)[0]["result"];
    assert!((r["lhs"].as_f64().unwrap() - 5f64.sqrt()).abs() < 1e-9);
    assert!(r["slack"].as_f64().unwrap().abs() < 1e-9);
    let bad = hllab(&["khinchine-step", "--p", "4", "--identity", "3"]);
    assert_eq!(bad.status.code(), Some(3));
}
