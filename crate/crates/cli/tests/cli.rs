use std::path::PathBuf;
use std::process::{Command, Output};

fn retroq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retroq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bench_pvm_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = retroq(&[
        "bench-pvm",
        "--d",
        "2",
        "--trials",
        "20",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# schema=1");
    assert_eq!(
        lines[1],
        "trial,d,n,h_m,h_n,h_gamma,r_mutual,eur1,eur2,eur3,gap13,gap23,gap21,eur2_finite"
    );
    assert_eq!(lines.len(), 22);
    assert!(stderr(&o).contains("count_eur1_lt_eur3"));
}

#[test]
fn bench_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let out = dir.path().join(format!("t{threads}.csv"));
        let o = retroq(&[
            "bench-povm",
            "--d",
            "2",
            "--n",
            "3",
            "--trials",
            "300",
            "--seed",
            "11",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn mub_scan_finds_negative_gap() {
    let o = retroq(&[
        "mub-scan",
        "--d",
        "3",
        "--p-min",
        "0.75",
        "--p-max",
        "0.75",
        "--theta-min",
        "45",
        "--theta-max",
        "45",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(&row[..2], &["0.75", "45.0"]);
    assert!(row[2].parse::<f64>().unwrap() < -0.1);
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        vec!["bench-pvm", "--d", "2", "--bogus"],
        vec!["bench-pvm", "--d", "2", "--trials", "0"],
        vec!["bench-povm", "--d", "3", "--n", "2"],
        vec!["mub-scan", "--d", "4"],
        vec!["verify", "--divergence", "petz:3", "--d", "2"],
        vec![
            "single",
            "--state",
            "/nonexistent.json",
            "--povm-m",
            "x",
            "--povm-n",
            "y",
        ],
    ] {
        let o = retroq(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(retroq(&["--help"]).status.code(), Some(0));
}

#[test]
fn single_qubit_report() {
    let o = retroq(&[
        "single",
        "--state",
        &fixture("qubit_state.json"),
        "--povm-m",
        &fixture("qubit_z.json"),
        "--povm-n",
        &fixture("qubit_x.json"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["invariants"]["all_satisfied"], true);
    assert_eq!(v["bayesian_inverse_m"].as_array().unwrap().len(), 2);
    let born: Vec<f64> = serde_json::from_value(v["born_m"].clone()).unwrap();
    assert!((born[0] - 0.7).abs() < 1e-12);
}

#[test]
fn single_mub_joint_is_uniform() {
    let o = retroq(&[
        "single",
        "--state",
        &fixture("qutrit_mixed.json"),
        "--povm-m",
        &fixture("qutrit_computational.json"),
        "--povm-n",
        &fixture("qutrit_fourier.json"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let joint: Vec<Vec<f64>> = serde_json::from_value(v["retro_joint"].clone()).unwrap();
    for row in joint {
        for p in row {
            assert!((p - 1.0 / 9.0).abs() < 1e-12);
        }
    }
}

#[test]
fn invalid_operators_exit_with_two() {
    let o = retroq(&[
        "single",
        "--state",
        &fixture("qubit_state.json"),
        "--povm-m",
        &fixture("qubit_incomplete.json"),
        "--povm-n",
        &fixture("qubit_x.json"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("defect 1.000e-1"), "{}", stderr(&o));

    let o = retroq(&[
        "single",
        "--state",
        &fixture("qubit_not_psd.json"),
        "--povm-m",
        &fixture("qubit_z.json"),
        "--povm-n",
        &fixture("qubit_x.json"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("positive semidefinite"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn malformed_json_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 2,\n \"matrix\": [[[1, 0]]\n").unwrap();
    let o = retroq(&[
        "single",
        "--state",
        bad.to_str().unwrap(),
        "--povm-m",
        &fixture("qubit_z.json"),
        "--povm-n",
        &fixture("qubit_x.json"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn verify_small_run() {
    let o = retroq(&[
        "verify",
        "--divergence",
        "sandwiched:2",
        "--d",
        "2",
        "--instances",
        "4",
        "--candidates",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["failed"], 0);
    assert_eq!(v["beaten"], 0);
}
