use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nqs_cli::setup::build_system;
use nqs_cli::RunConfig;
use nqs_core::oracle::ed_ground_state;
use serde_json::Value;
use tempfile::TempDir;

const TFIM4: &str = r#"
version = 1
seed = 5
output = "run"
observables = ["Sx"]

[system]
hilbert = { kind = "spin" }
lattice = { kind = "chain", length = 4 }
hamiltonian = { kind = "ising", h = 1.0 }

[model]
kind = "rbm"
alpha = 1.0

[sampler]
n_chains = 4
n_samples = 64
n_discard_per_chain = 4

[vmc]
n_iter = 5
learning_rate = 0.05
"#;

fn nqs(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nqs"));
    cmd.current_dir(dir).args(args).env_remove("SEED").env_remove("THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn vmc_writes_log_and_snapshot() {
    let d = TempDir::new().unwrap();
    write_config(d.path(), "c.toml", &TFIM4.replace("output = \"run\"", "output = \"out/run\"\ncsv = true"));
    let o = nqs(d.path(), &["vmc", "c.toml"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = read_json(&d.path().join("out/run.log"));
    let e = log["Energy"]["Mean"]["real"].as_array().unwrap();
    assert_eq!(e.len(), 5);
    assert!(e.iter().all(|v| v.as_f64().is_some()));
    assert_eq!(log["iters"].as_array().unwrap().len(), 5);
    assert_eq!(log["Sx"]["Sigma"].as_array().unwrap().len(), 5);
    assert!(d.path().join("out/run.params").exists());
    let csv = std::fs::read_to_string(d.path().join("out/run.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("iter,Energy,Sx,acceptance"));
}

#[test]
fn resume_with_zero_iterations_keeps_parameters() {
    let d = TempDir::new().unwrap();
    write_config(d.path(), "c.toml", TFIM4);
    assert!(nqs(d.path(), &["vmc", "c.toml"], &[]).status.success());
    let saved = std::fs::read(d.path().join("run.params")).unwrap();
    std::fs::rename(d.path().join("run.params"), d.path().join("saved.params")).unwrap();
    let o = nqs(d.path(), &["vmc", "c.toml", "--params", "saved.params", "--override", "vmc.n_iter=0"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(d.path().join("run.params")).unwrap(), saved);
}

#[test]
fn corrupted_snapshot_is_rejected() {
    let d = TempDir::new().unwrap();
    write_config(d.path(), "c.toml", TFIM4);
    assert!(nqs(d.path(), &["vmc", "c.toml"], &[]).status.success());
    let mut bytes = std::fs::read(d.path().join("run.params")).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(d.path().join("bad.params"), bytes).unwrap();
    let o = nqs(d.path(), &["vmc", "c.toml", "--params", "bad.params"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("checksum"), "{}", stderr(&o));
}

#[test]
fn snapshot_shape_mismatch_names_the_leaf() {
    let d = TempDir::new().unwrap();
    write_config(d.path(), "c.toml", TFIM4);
    assert!(nqs(d.path(), &["vmc", "c.toml"], &[]).status.success());
    let o = nqs(d.path(), &["vmc", "c.toml", "--params", "run.params", "--override", "model.alpha=2.0"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("'kernel'") && err.contains("[8, 4]") && err.contains("[4, 4]"), "{err}");
}

#[test]
fn gcnn_parameters_transfer_to_another_character() {
    let d = TempDir::new().unwrap();
    let cfg = TFIM4.replace("kind = \"rbm\"\nalpha = 1.0", "kind = \"gcnn\"\nfeatures = [2, 2]");
    write_config(d.path(), "c.toml", &cfg);
    assert!(nqs(d.path(), &["vmc", "c.toml"], &[]).status.success());
    std::fs::rename(d.path().join("run.params"), d.path().join("gs.params")).unwrap();
    let o = nqs(
        d.path(),
        &["vmc", "c.toml", "--params", "gs.params", "--override", "model.momentum=[3.141592653589793]"],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_with_two() {
    let d = TempDir::new().unwrap();
    write_config(d.path(), "c.toml", &TFIM4.replace("learning_rate = 0.05", "learning_rate = 0.05\nlerning_rate = 1"));
    let o = nqs(d.path(), &["vmc", "c.toml"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("lerning_rate") && err.contains("line"), "{err}");
    write_config(d.path(), "c.toml", TFIM4);
    let o = nqs(d.path(), &["vmc", "c.toml", "--override", "sampler.rule=\"teleport\""], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = nqs(d.path(), &["tdvp", "c.toml"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[tdvp]"));
    let o = nqs(d.path(), &["vmc", "c.toml"], &[("SEED", "abc")]);
    assert_eq!(o.status.code(), Some(2));
    let o = nqs(d.path(), &["vmc", "missing.toml"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_abort_exits_with_three() {
    let d = TempDir::new().unwrap();
    let cfg = r#"
version = 1
output = "trap"
[system]
hilbert = { kind = "particles", n_particles = 10, dim = 3 }
hamiltonian = { kind = "harmonic" }
[model]
kind = "gaussian"
[sampler]
rule = "gaussian"
n_chains = 4
n_samples = 64
[vmc]
n_iter = 5
learning_rate = 1e307
preconditioner = "none"
"#;
    write_config(d.path(), "c.toml", cfg);
    let o = nqs(d.path(), &["vmc", "c.toml"], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"));
    // the partial history is still written
    assert!(d.path().join("trap.log").exists());
}

#[test]
fn same_seed_gives_identical_logs() {
    let d = TempDir::new().unwrap();
    write_config(d.path(), "c.toml", TFIM4);
    let run = |name: &str, env: &[(&str, &str)]| {
        let o = nqs(d.path(), &["vmc", "c.toml", "--override", &format!("output=\"{name}\"")], env);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(d.path().join(format!("{name}.log"))).unwrap()
    };
    let a = run("a", &[]);
    assert_eq!(a, run("b", &[]));
    assert_eq!(a, run("c", &[("THREADS", "1")]));
    assert_ne!(a, run("d", &[("SEED", "6")]));
    assert_eq!(run("e", &[("SEED", "6")]), run("f", &[("SEED", "6")]));
}

#[test]
fn tdvp_override_sets_the_time_grid() {
    let d = TempDir::new().unwrap();
    let cfg = format!(
        "{}\n[tdvp]\nt_end = 0.002\nhamiltonian = {{ kind = \"ising\", h = 2.0 }}\n[integrator]\nscheme = \"heun\"\ndt = 0.01\n[sr]\ndiag_shift = 0.0\nsolver = \"svd\"\n",
        TFIM4.replace("[sampler]\n", "[sampler]\nkind = \"full_summation\"\n")
    );
    write_config(d.path(), "q.toml", &cfg);
    let o = nqs(d.path(), &["tdvp", "q.toml", "--override", "integrator.dt=0.0005"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = read_json(&d.path().join("run.log"));
    let times: Vec<f64> = log["times"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(times.len(), 5);
    assert!((times[4] - 0.002).abs() < 1e-15);
    let e: Vec<f64> = log["Energy"]["Mean"]["real"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(e.iter().all(|x| (x - e[0]).abs() < 1e-3 * e[0].abs()), "{e:?}");
}

#[test]
fn ed_matches_the_oracle() {
    let d = TempDir::new().unwrap();
    let p = write_config(d.path(), "c.toml", TFIM4);
    let o = nqs(d.path(), &["ed", "c.toml"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = read_json(&d.path().join("run.ed.json"));
    let cfg = RunConfig::load(&p, &[]).unwrap();
    let sys = build_system(&cfg).unwrap();
    let (e0, _) = ed_ground_state(sys.hamiltonian().unwrap().discrete().unwrap().as_ref()).unwrap();
    assert_eq!(out["E0"].as_f64().unwrap(), e0);
    assert_eq!(out["eigenvalues"].as_array().unwrap().len(), 16);
}

#[test]
fn sample_dumps_every_draw() {
    let d = TempDir::new().unwrap();
    write_config(d.path(), "c.toml", TFIM4);
    let o = nqs(d.path(), &["sample", "c.toml"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("run.samples.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "chain,x0,x1,x2,x3,log_psi_re,log_psi_im,weight");
    assert_eq!(lines.len(), 65);
    assert!(lines[64].starts_with("3,"));
}

#[test]
fn chartable_prints_the_little_group() {
    let d = TempDir::new().unwrap();
    let o = nqs(d.path(), &["chartable", concat!(env!("CARGO_MANIFEST_DIR"), "/configs/triangular_chartable.toml")], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("space group order 432"));
    assert!(out.contains("little group of order 12"));
    assert!(out.contains("[  2,  -1,  -1,   2,   0,   0]"), "{out}");
}

#[test]
fn shipped_configs_build() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let cfg = RunConfig::load(&p, &[]).unwrap_or_else(|e| panic!("{e}"));
        let sys = build_system(&cfg).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        if cfg.model.is_some() {
            nqs_cli::setup::build_state(&cfg, &sys).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
        n += 1;
    }
    assert!(n >= 5);
}
