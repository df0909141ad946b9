use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fluxlambda"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn list_prints_five_scenarios_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["list"], tmp.path());
    assert_eq!(code(&o), 0);
    let names: Vec<String> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect();
    assert_eq!(names, ["fig2", "fig4", "fig5", "device", "raman-demo"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["fig2", "fig4", "device"] {
        let a = tmp.path().join(format!("{name}-a"));
        let b = tmp.path().join(format!("{name}-b"));
        for d in [&a, &b] {
            let o = run(
                &["run", "--scenario", name, "--out", d.to_str().unwrap()],
                tmp.path(),
            );
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        }
        let mut files: Vec<_> = fs::read_dir(&a)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        files.sort();
        assert!(files.len() >= 3, "{files:?}");
        for f in files {
            let x = fs::read(a.join(&f)).unwrap();
            let y = fs::read(b.join(&f)).unwrap();
            assert!(x == y, "{name}/{f:?} differs between runs");
            assert!(!x.contains(&b'\r'));
        }
    }
}

#[test]
fn builtin_summaries_meet_thresholds() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["run", "--scenario", "fig2", "--out", "f2"], tmp.path());
    assert_eq!(code(&o), 0);
    let s = summary(&tmp.path().join("f2"));
    assert!(s["final_P1"].as_f64().unwrap() >= 0.999);
    assert_eq!(s["config"]["integrator"]["dt"].as_f64(), Some(1e-3));

    let o = run(&["run", "--scenario", "fig4", "--out", "f4"], tmp.path());
    assert_eq!(code(&o), 0);
    let s = summary(&tmp.path().join("f4"));
    assert!(s["fidelity_target"].as_f64().unwrap() >= 0.95);
    let header = fs::read_to_string(tmp.path().join("f4/trajectory.csv")).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "t,P_010,P_e10,P_111,P_1e0,P_100,abs_omega_a,abs_omega_b,dark_overlap,adiabaticity"
    );
}

#[test]
fn dt_override_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        &["run", "--scenario", "fig2", "--dt", "0.002", "--out", "o"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(
        summary(&tmp.path().join("o"))["config"]["integrator"]["dt"].as_f64(),
        Some(0.002)
    );
}

#[test]
fn validation_failures_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for dt in ["0", "-1"] {
        let o = run(
            &["run", "--scenario", "fig2", "--dt", dt, "--out", "x"],
            tmp.path(),
        );
        assert_eq!(code(&o), 2);
        assert!(String::from_utf8_lossy(&o.stderr).contains("integrator.dt"));
    }
    assert_eq!(code(&run(&["run", "--scenario", "nope"], tmp.path())), 2);
    assert_eq!(
        code(&run(&["run", "--config", "missing.json"], tmp.path())),
        2
    );
    assert_eq!(code(&run(&["run"], tmp.path())), 2);

    fs::write(
        tmp.path().join("bad.json"),
        r#"{"scenario_type": "single_qubit", "parameters": {}}"#,
    )
    .unwrap();
    let o = run(&["run", "--config", "bad.json"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("phi"));

    let cfg = tmp.path().join("dtcfg.json");
    fs::write(
        &cfg,
        r#"{"scenario_type": "device_spectrum", "integrator": {"dt": -0.5},
            "parameters": {"inductance_ph": 100, "capacitance_ff": 40, "critical_current_ua": 3.95, "phi_x": -0.501}}"#,
    )
    .unwrap();
    assert_eq!(
        code(&run(&["run", "--config", "dtcfg.json"], tmp.path())),
        2
    );
    assert_eq!(
        code(&run(
            &["device-spectrum", "--config", "bad.json"],
            tmp.path()
        )),
        2
    );
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("narrow.json"),
        r#"{"scenario_type": "device_spectrum",
            "parameters": {"inductance_ph": 100, "capacitance_ff": 40, "critical_current_ua": 3.95, "phi_x": -0.501,
                           "grid": {"phi_min": -0.6, "phi_max": -0.4, "n_points": 201}}}"#,
    )
    .unwrap();
    let o = run(
        &["device-spectrum", "--config", "narrow.json", "--out", "d"],
        tmp.path(),
    );
    assert_eq!(code(&o), 3);
}

#[test]
fn device_spectrum_defaults_to_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["device-spectrum", "--out", "dev"], tmp.path());
    assert_eq!(code(&o), 0);
    let s = summary(&tmp.path().join("dev"));
    assert_eq!(s["levels"]["idx_e"].as_u64(), Some(4));
    assert!(tmp.path().join("dev/potential.csv").exists());
    assert!(tmp.path().join("dev/wavefunctions.csv").exists());
}

#[test]
fn sweep_writes_one_directory_per_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dev = r#"{"scenario_type": "device_spectrum", "name": "dev",
        "parameters": {"inductance_ph": 100, "capacitance_ff": 40, "critical_current_ua": CUR, "phi_x": -0.501}}"#;
    fs::write(tmp.path().join("a.json"), dev.replace("CUR", "3.95")).unwrap();
    fs::write(tmp.path().join("b.json"), dev.replace("CUR", "4.2")).unwrap();
    let o = run(
        &["run", "--sweep", "a.json", "b.json", "--out", "sw"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("sw/000-dev/summary.json").exists());
    assert!(tmp.path().join("sw/001-dev/summary.json").exists());
}
