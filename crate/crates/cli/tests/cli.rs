use std::path::PathBuf;
use std::process::{Command, Output};

fn out_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cutdg-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn cutdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutdg")).args(args).env_remove("CUTDG_OUT_DIR").output().unwrap()
}

#[test]
fn show_config_applies_overrides() {
    let o = cutdg(&["show-config", "--set", "channel.min_alpha=1e-9", "--set", "n=[10,20]", "--seed", "7"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("seed = 7"));
    assert!(text.contains("min_alpha = 0.000000001"));
    assert!(text.contains("n = [10, 20]"));
}

#[test]
fn out_flag_beats_environment() {
    let (flag, env) = (out_dir("flag"), out_dir("env"));
    let o = Command::new(env!("CARGO_BIN_EXE_cutdg"))
        .args(["mesh-dump", "--set", "n=[6]", "--out", flag.to_str().unwrap()])
        .env("CUTDG_OUT_DIR", &env)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag.join("mesh.csv").exists());
    assert!(!env.exists());
    let o = Command::new(env!("CARGO_BIN_EXE_cutdg")).args(["mesh-dump", "--set", "n=[6]"]).env("CUTDG_OUT_DIR", &env).output().unwrap();
    assert!(o.status.success());
    assert!(env.join("mesh.csv").exists());
}

#[test]
fn small_convergence_run_prints_rates() {
    let dir = out_dir("conv");
    let o = cutdg(&["convergence", "--set", "n=[8,16]", "--set", "degrees=[1]", "--set", "t_end=0.1", "--set", "vtk=false", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("L2 rate")).count(), 2);
    assert!(dir.join("rates.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = out_dir("codes");
    let d = dir.to_str().unwrap();
    let anisotropic = cutdg(&["convergence", "--set", "n=[20]", "--set", "rho_aniso=0.001", "--out", d]);
    assert_eq!(anisotropic.status.code(), Some(2));
    let corrupted = cutdg(&["verify-forms", "--set", "verify.trials=2", "--set", "verify.corrupt=1e-3", "--out", d]);
    assert_eq!(corrupted.status.code(), Some(3));
    let unstable = cutdg(&[
        "channel",
        "--set",
        "eta_override=0.0",
        "--set",
        "channel.min_alpha=1e-12",
        "--set",
        "channel.n=20",
        "--set",
        "channel.degree=1",
        "--set",
        "channel.periods=0.5",
        "--out",
        d,
    ]);
    assert_eq!(unstable.status.code(), Some(4), "{}", String::from_utf8_lossy(&unstable.stderr));
    let bad_key = cutdg(&["show-config", "--set", "nope=1"]);
    assert_eq!(bad_key.status.code(), Some(1));
}
