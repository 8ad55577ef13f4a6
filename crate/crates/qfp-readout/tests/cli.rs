use std::process::{Command, Output};

use qfp_readout::sweep::SweepResult;

fn sweep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sweep")).args(args).output().expect("binary runs")
}

#[test]
fn recipes_lists_every_recipe() {
    let out = sweep(&["recipes"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for r in ["chi_t", "alpha", "j_coupling", "storage_t", "storage_beta_max", "overlap_g", "chi_vs_delta", "chi_vs_theta", "2qm_chit"] {
        assert!(text.contains(r), "missing {r}");
    }
}

#[test]
fn sweep_writes_parsable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[sweep]\nsteps = 4\n\n[model]\nn_max = 12\n").unwrap();
    let out = dir.path().join("o.csv");
    let run = sweep(&[
        "--recipe", "1q_alpha",
        "--config", cfg.to_str().unwrap(),
        "--set", "sweep.steps=3",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let r = SweepResult::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.sweep_var, "alpha");
    assert_eq!(r.rows.len(), 6);
    assert!(r.header.contains(&("sweep.steps".into(), "3".into())));
    assert!(r.header.contains(&("model.n_max".into(), "12".into())));
    assert!(r.header.iter().any(|(k, v)| k == "version" && v.starts_with("qfp-readout ")));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[model]\nbogus = 1\n").unwrap();
    let run = sweep(&["--recipe", "chi_t", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("bad.toml:2") && err.contains("model.bogus"), "{err}");
    assert!(!out.exists());
    let run = sweep(&["--recipe", "chi_t", "--set", "sweep.steps=1", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let run = sweep(&["--recipe", "no_such_recipe", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn point_failures_exit_3_and_still_write() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let run = sweep(&[
        "--recipe", "chi_t",
        "--set", "sweep.steps=2",
        "--set", "model.n_max=8",
        "--set", "sweep.bases=[\"flux\",\"dressed_q2\"]",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(3));
    let r = SweepResult::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.failures(), 2);
    assert!(r.rows.iter().filter(|row| row.basis == "flux").all(|row| !row.is_error()));
}
