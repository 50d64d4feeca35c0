use std::path::Path;
use std::process::{Command, Output};

fn vnsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnsim"))
        .args(args)
        .output()
        .unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn constants_for_one_and_two_sites() {
    let one = vnsim(&["constants", "--sites", "1"]);
    assert!(one.status.success());
    let text = String::from_utf8(one.stdout).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[0] != 1.0 && r[3].abs() == 2.0));

    let two = String::from_utf8(vnsim(&["constants", "--sites", "2"]).stdout).unwrap();
    let basis = vnsim_core::build_basis(2).unwrap();
    let dense: Vec<_> = basis
        .elements()
        .iter()
        .map(|p| p.to_dense().into_matrix())
        .collect();
    let nonzero_commutators = dense
        .iter()
        .flat_map(|a| dense.iter().map(move |b| a * b - b * a))
        .filter(|c| c.iter().any(|z| z.norm() > 1e-12))
        .count();
    assert_eq!(data_rows(&two).len(), nonzero_commutators);
}

#[test]
fn evolve_oracle_populations_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = vnsim(&[
        "evolve",
        "--model",
        "example1",
        "--method",
        "oracle",
        "--t-final",
        "10",
        "--stride",
        "20",
        "--out",
        out,
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.starts_with("method oracle dt "));
    let obs = std::fs::read_to_string(dir.path().join("observables.csv")).unwrap();
    assert!(obs.contains("# model: example1\n") && obs.contains("\nt,P_L,P_H,S_z\n"));
    for row in data_rows(&obs) {
        assert!((row[1] + row[2] - 1.0).abs() < 1e-8);
    }
    let coeffs = std::fs::read_to_string(dir.path().join("coeffs.csv")).unwrap();
    assert_eq!(data_rows(&coeffs)[0], vec![0.0, 0.5, 0.0, 0.0, -0.5]);
}

#[test]
fn evolve_shots_within_five_stderr_of_exact() {
    let dir = tempfile::tempdir().unwrap();
    let run = |method: &str, sub: &str, extra: &[&str]| {
        let out = dir.path().join(sub);
        let mut args = vec![
            "evolve",
            "--model",
            "example1",
            "--method",
            method,
            "--t-final",
            "5",
            "--stride",
            "50",
        ];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", out.to_str().unwrap()]);
        assert!(vnsim(&args).status.success());
        data_rows(
            &std::fs::read_to_string(out.join("estimates.csv"))
                .unwrap()
                .replace(",\n", ",0\n"),
        )
    };
    let exact = run("circuit_exact", "exact", &["--plan"]);
    let shots = run(
        "circuit_shots",
        "shots",
        &["--shots", "16384", "--seed", "11"],
    );
    assert_eq!(exact.len(), shots.len());
    for (e, s) in exact.iter().zip(&shots) {
        assert!(
            (e[2] - s[2]).abs() <= 5.0 * s[3] + 1e-12,
            "t={} i={}",
            e[0],
            e[1]
        );
    }
    assert!(dir.path().join("exact/plan.csv").exists());
    assert!(dir.path().join("shots/counts.csv").exists());
}

#[test]
fn lie_euler_error_halves_with_dt() {
    let dir = tempfile::tempdir().unwrap();
    let mut errors = Vec::new();
    for (dt, stride) in [("2e-3", "50"), ("1e-3", "100")] {
        let out = dir.path().join(dt);
        let args = [
            "compare",
            "--model",
            "example2",
            "--methods",
            "lie_euler,classical_ode",
            "--dt",
            dt,
            "--stride",
            stride,
            "--t-final",
            "5",
            "--out",
            out.to_str().unwrap(),
        ];
        assert!(vnsim(&args).status.success());
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
                .unwrap();
        errors.push(
            report["methods"][0]["vs_reference"]["max_abs"]
                .as_f64()
                .unwrap(),
        );
    }
    assert!(errors[1] < 2e-2);
    let ratio = errors[0] / errors[1];
    assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn compare_assert_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let tol = dir.path().join("tol.json");
    std::fs::write(&tol, r#"{"max_abs": {"classical_ode": 1e-6}, "pairs": {"circuit_exact:lie_euler": 1e-9}, "trace_drift": 1e-10}"#).unwrap();
    let args = |t: &Path| {
        vec![
            "compare".to_string(),
            "--model".into(),
            "example1".into(),
            "--methods".into(),
            "oracle,classical_ode,lie_euler,circuit_exact".into(),
            "--dt".into(),
            "1e-3".into(),
            "--stride".into(),
            "100".into(),
            "--out".into(),
            dir.path().to_str().unwrap().into(),
            "--assert".into(),
            t.to_str().unwrap().into(),
        ]
    };
    let ok = Command::new(env!("CARGO_BIN_EXE_vnsim"))
        .args(args(&tol))
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(text.contains("listed values differing from the projection"));

    let strict = dir.path().join("strict.json");
    std::fs::write(&strict, r#"{"max_abs": {"lie_euler": 1e-12}}"#).unwrap();
    let fail = Command::new(env!("CARGO_BIN_EXE_vnsim"))
        .args(args(&strict))
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(4));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec![
            "evolve",
            "--model",
            "example9",
            "--method",
            "oracle",
            "--t-final",
            "1",
            "--out",
            out,
        ],
        vec![
            "evolve",
            "--model",
            "example1",
            "--method",
            "circuit_shots",
            "--t-final",
            "1",
            "--out",
            out,
        ],
        vec![
            "evolve",
            "--model",
            "example1",
            "--method",
            "rk45",
            "--t-final",
            "1",
            "--out",
            out,
        ],
        vec![
            "evolve",
            "--model",
            "example1",
            "--method",
            "oracle",
            "--t-final",
            "-1",
            "--out",
            out,
        ],
        vec![
            "compare",
            "--model",
            "example1",
            "--methods",
            "oracle",
            "--out",
            out,
        ],
        vec!["evolve", "--model", "example1"],
    ] {
        assert_eq!(vnsim(&args).status.code(), Some(2), "{args:?}");
    }

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\n  \"name\": \"m\",\n  \"n_sites\": 1,\n  \"terms\": [oops]\n}",
    )
    .unwrap();
    let r = vnsim(&[
        "evolve",
        "--model",
        bad.to_str().unwrap(),
        "--method",
        "oracle",
        "--t-final",
        "1",
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 4"));
}

#[test]
fn singular_chart_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("y_drive.json");
    std::fs::write(
        &model,
        r#"{"name": "y_drive", "n_sites": 1, "terms": [{"index": 3, "constant": 1.0}],
            "initial": {"kind": "coeffs", "data": [0.5, 0.0, 0.0, -0.5]}}"#,
    )
    .unwrap();
    let dt = (std::f64::consts::FRAC_PI_4 / 100.0).to_string();
    let t_final = std::f64::consts::FRAC_PI_2.to_string();
    let out = dir.path().join("out");
    let base = [
        "evolve",
        "--model",
        model.to_str().unwrap(),
        "--method",
        "alpha_exact",
        "--dt",
        &dt,
        "--t-final",
        &t_final,
    ];
    let mut strict = base.to_vec();
    strict.extend_from_slice(&["--anchor", "never", "--out", out.to_str().unwrap()]);
    let r = vnsim(&strict);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("singular"));

    let mut rebased = base.to_vec();
    rebased.extend_from_slice(&["--out", out.to_str().unwrap()]);
    assert!(vnsim(&rebased).status.success());
}

#[test]
fn exported_preset_loads_as_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let json = vnsim(&["export-model", "--name", "example2"]);
    assert!(json.status.success());
    let path = dir.path().join("example2.json");
    std::fs::write(&path, &json.stdout).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (model, out) in [("example2", &a), (path.to_str().unwrap(), &b)] {
        let args = [
            "evolve",
            "--model",
            model,
            "--method",
            "lie_euler",
            "--dt",
            "0.01",
            "--t-final",
            "1",
            "--stride",
            "10",
            "--out",
            out.to_str().unwrap(),
        ];
        assert!(vnsim(&args).status.success());
    }
    let rows = |d: &Path| data_rows(&std::fs::read_to_string(d.join("coeffs.csv")).unwrap());
    assert_eq!(rows(&a), rows(&b));
}
