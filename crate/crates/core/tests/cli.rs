use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use neckflow::flow::{flow_step, FlowState};
use neckflow::geometry::{build_profile, ProfileKind};
use neckflow::harness::{
    bundled, registry_list, run_experiment, ExperimentConfig, HarnessError, RunManifest, StageStatus,
};

fn neckflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neckflow")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn list_shows_the_bundled_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let o = neckflow(&["list"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert!(names.len() >= 6);
    for want in [
        "round_collapse",
        "cylinder_soliton",
        "dumbbell_pinch",
        "trotter_convergence",
        "radial_transport",
        "contradiction",
    ] {
        assert!(names.contains(&want), "{want} missing");
        bundled(want).unwrap().validate().unwrap();
    }
    assert_eq!(registry_list().len(), names.len());
}

#[test]
fn dry_runs_validate_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("a.csv"), "position,mass\n0,0.5\n1,0.5\n").unwrap();
    fs::write(p.join("b.csv"), "x,density\n0,0\n1,1\n2,0\n").unwrap();
    fs::write(p.join("warped.json"), r#"{"fibers": [8]}"#).unwrap();
    fs::write(
        p.join("flow.json"),
        r#"{"name": "f", "geometry": {"profile": {"kind": "round", "params": {"rho": 1.0}}, "nodes": 65}, "flow": {"t_end": 0.01}}"#,
    )
    .unwrap();
    for args in [
        vec!["run", "--all", "--dry-run", "--out", "runs"],
        vec!["flow", "--config", "flow.json", "--dry-run", "--out", "runs"],
        vec!["transport", "--mu", "a.csv", "--nu", "b.csv", "--p", "2", "--dry-run", "--out", "runs"],
        vec!["radial-check", "--config", "warped.json", "--dry-run", "--out", "runs"],
        vec![
            "pinch",
            "--caps",
            "synthetic",
            "--L",
            "0.5",
            "--M",
            "10",
            "--eps-sweep",
            "0.1:5",
            "--dry-run",
            "--out",
            "runs",
        ],
    ] {
        let o = neckflow(&args, p);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!p.join("runs").exists());
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bad.json"), r#"{"name": "x", "bogus": 1}"#).unwrap();
    fs::write(p.join("heavy.csv"), "position,mass\n0,0.5\n1,0.7\n").unwrap();
    fs::write(
        p.join("tight.json"),
        r#"{"name": "tight", "geometry": {"profile": {"kind": "round", "params": {"rho": 1.0}}, "nodes": 65},
            "flow": {"t_end": 0.1, "snapshots": 20},
            "diffusion": {"t_ref": 0.1, "tau": 0.05, "init": "cosine:0.5", "trotter_sweep": [2, 4], "trotter_tol": 1e-12}}"#,
    )
    .unwrap();
    assert_eq!(code(&neckflow(&["run", "nosuch"], p)), 2);
    assert_eq!(code(&neckflow(&["run", "--config", "bad.json"], p)), 2);
    assert_eq!(code(&neckflow(&["transport", "--mu", "heavy.csv", "--nu", "heavy.csv"], p)), 2);
    assert_eq!(code(&neckflow(&["pinch", "--eps-sweep", "0.1"], p)), 2);
    assert_eq!(code(&neckflow(&["frobnicate"], p)), 2);
    let o = neckflow(&["run", "--config", "tight.json", "--out", "tight"], p);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(p.join("tight/manifest.json")).unwrap()).unwrap();
    let diffusion = m.stages.iter().find(|s| s.stage == "diffusion").unwrap();
    assert_eq!(diffusion.status, StageStatus::CheckFailed);
}

#[test]
fn numerical_failures_exit_with_three() {
    let p = build_profile(&ProfileKind::Dumbbell { a: 0.9 }, 2, 129).unwrap();
    let s = FlowState::new(p).unwrap();
    let err = flow_step(&s, 0.1).unwrap_err();
    assert_eq!(HarnessError::from(err).exit_code(), 3);
}

#[test]
fn transport_prints_the_distance_and_writes_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("a.csv"), "position,mass\n0,0.5\n1,0.5\n").unwrap();
    fs::write(p.join("b.csv"), "position,mass\n2,0.5\n3,0.5\n").unwrap();
    let o = neckflow(&["transport", "--mu", "a.csv", "--nu", "b.csv", "--p", "1", "--out", "t"], p);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["w_p"], 2.0);
    assert_eq!(v["w1_area"], 2.0);
    let plan = fs::read_to_string(p.join("t/plan.csv")).unwrap();
    assert_eq!(plan, "x,y,mass\n0.0,2.0,0.5\n1.0,3.0,0.5\n");
}

#[test]
fn flow_then_diffuse_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("flow.json"),
        r#"{"name": "f", "geometry": {"profile": {"kind": "round", "params": {"rho": 1.0}}, "nodes": 65}, "flow": {"t_end": 0.05, "snapshots": 10}}"#,
    )
    .unwrap();
    assert_eq!(code(&neckflow(&["flow", "--config", "flow.json", "--out", "f"], p)), 0);
    assert!(p.join("f/trajectory/manifest.json").exists());
    let o = neckflow(
        &[
            "diffuse",
            "--trajectory",
            "f/trajectory",
            "--init",
            "dirac:cap1:0.5",
            "--tau",
            "0.04",
            "--mode",
            "pde",
            "--out",
            "d",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let frames: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("d/diffusion/frames.json")).unwrap()).unwrap();
    assert_eq!(frames.as_array().unwrap().len(), 11);
    let csv = fs::read_to_string(p.join("d/diffusion/diffusion_0010.csv")).unwrap();
    assert!(csv.starts_with("node,r,u,dvol_weight\n"));
    let o = neckflow(&["diffuse", "--trajectory", "f/trajectory", "--tau", "1.0"], p);
    assert_eq!(code(&o), 2);
}

fn small_contradiction(out: &Path) -> ExperimentConfig {
    let mut cfg = bundled("contradiction").unwrap();
    let pinch = cfg.pinch.as_mut().unwrap();
    pinch.glued.nodes = 129;
    pinch.sweep = 2;
    pinch.w1_frames = 2;
    cfg.out = Some(out.to_path_buf());
    cfg
}

#[test]
fn identical_runs_have_identical_checksums() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_experiment(&small_contradiction(a.path())).unwrap();
    let mb = run_experiment(&small_contradiction(b.path())).unwrap();
    assert_eq!(ma.exit_code(), 0);
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.config_hash, mb.config_hash);
    for name in ["contradiction_report.json", "w1_series.csv", "rates.csv", "config.json"] {
        assert!(ma.checksum_of(name).is_some(), "{name} not listed");
    }
    let stored: RunManifest =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(stored, ma);
}

#[test]
fn thread_cap_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let mut manifests = Vec::new();
    for threads in ["1", "3"] {
        let out = format!("runs{threads}");
        let o = Command::new(env!("CARGO_BIN_EXE_neckflow"))
            .args(["run", "radial_transport", "contradiction", "--out", &out])
            .env("NECKFLOW_THREADS", threads)
            .current_dir(p)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let read = |name: &str| -> RunManifest {
            serde_json::from_str(&fs::read_to_string(p.join(&out).join(name).join("manifest.json")).unwrap()).unwrap()
        };
        manifests.push([read("radial_transport"), read("contradiction")]);
    }
    for (a, b) in manifests[0].iter().zip(&manifests[1]) {
        assert!(!a.files.is_empty());
        assert_eq!(a.files, b.files);
        assert_eq!(a.summary, b.summary);
    }
}
