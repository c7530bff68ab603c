//! Subcommand implementations. Each writes its artifacts next to the
//! output base path and prints a short summary on stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nqs_core::driver::{ErrorNorm, Propagation, RunLog, Scheme, Sgd, StepControl, Tdvp, VariationalState, Vmc};
use nqs_core::oracle::{ed_ground_state, ed_spectrum};
use nqs_core::operator::Observable;
use nqs_core::symmetry::SpaceGroup;
use serde_json::json;

use crate::config::*;
use crate::error::{CliError, Result};
use crate::setup::*;

/// `base` with `.ext` appended to its file name.
pub fn artifact(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// The configured output path, or the config file's stem in the working
/// directory.
pub fn output_base(cfg: &RunConfig, config_path: &Path) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| {
        PathBuf::from(config_path.file_stem().map(|s| s.to_owned()).unwrap_or_else(|| "run".into()))
    })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_log(log: &RunLog, base: &Path, csv: bool) -> Result<()> {
    let text = serde_json::to_string_pretty(&log.to_json()).expect("run logs serialize");
    write_file(&artifact(base, "log"), text + "\n")?;
    if csv {
        write_file(&artifact(base, "csv"), log.to_csv())?;
    }
    Ok(())
}

fn refs(obs: &[NamedObservable]) -> Vec<(&str, &dyn Observable)> {
    obs.iter().map(|(n, o)| (n.as_str(), o.as_ref())).collect()
}

fn last_energy(log: &RunLog) -> Option<f64> {
    log.means("Energy").and_then(|m| m.last().copied())
}

fn run_vmc(
    section: &VmcSection,
    cfg: &RunConfig,
    ham: &Ham,
    state: &mut VariationalState,
    obs: &[NamedObservable],
    log: &mut RunLog,
    params_path: Option<&Path>,
) -> Result<()> {
    if section.n_iter == 0 {
        return Ok(());
    }
    let pre = match section.preconditioner {
        PreconditionerName::Sr => Some(build_sr(section.sr.as_ref().unwrap_or(&cfg.sr()))),
        PreconditionerName::None => None,
    };
    let driver = Vmc::new(ham.observable(), Sgd::new(section.learning_rate)?, pre);
    let save_every = section.save_every.filter(|&k| k > 0);
    driver.run(state, section.n_iter, &refs(obs), log, |it, st| {
        if let (Some(k), Some(p)) = (save_every, params_path) {
            if (it + 1) % k == 0 {
                std::fs::write(p, st.params().to_bytes())?;
            }
        }
        Ok(())
    })?;
    Ok(())
}

fn initial_state(cfg: &RunConfig, sys: &System, params: Option<&Path>) -> Result<VariationalState> {
    let mut state = build_state(cfg, sys)?;
    if let Some(p) = params {
        load_params(p, &mut state)?;
    }
    Ok(state)
}

// Writes the log whether or not the run succeeded, so aborted runs keep
// their history.
fn finish(run: Result<()>, log: &RunLog, base: &Path, csv: bool) -> Result<()> {
    let written = write_log(log, base, csv);
    run?;
    written
}

pub fn vmc(cfg: &RunConfig, base: &Path, params: Option<&Path>) -> Result<()> {
    let sys = build_system(cfg)?;
    let ham = sys.hamiltonian()?.clone();
    let section = cfg.vmc.as_ref().ok_or_else(|| CliError::Config("missing [vmc] section".into()))?;
    let obs = build_observables(cfg, &sys)?;
    let mut state = initial_state(cfg, &sys, params)?;
    let params_path = artifact(base, "params");
    let mut log = RunLog::iterations();
    let run = run_vmc(section, cfg, &ham, &mut state, &obs, &mut log, Some(&params_path));
    finish(run, &log, base, cfg.csv)?;
    write_file(&params_path, state.params().to_bytes())?;
    match last_energy(&log) {
        Some(e) => println!("vmc: {} iterations, last energy {e:.8}", log.len()),
        None => println!("vmc: no iterations run"),
    }
    Ok(())
}

pub fn tdvp(cfg: &RunConfig, base: &Path, params: Option<&Path>) -> Result<()> {
    let sys = build_system(cfg)?;
    let section = cfg.tdvp.as_ref().ok_or_else(|| CliError::Config("missing [tdvp] section".into()))?;
    let integ = cfg.integrator.as_ref().ok_or_else(|| CliError::Config("missing [integrator] section".into()))?;
    let obs = build_observables(cfg, &sys)?;
    let mut state = initial_state(cfg, &sys, params)?;

    if let Some(prep) = &cfg.prepare {
        let mut log = RunLog::iterations();
        let run = run_vmc(prep, cfg, sys.hamiltonian()?, &mut state, &obs, &mut log, None);
        finish(run, &log, &artifact(base, "prepare"), false)?;
        write_file(&artifact(base, "prepare.params"), state.params().to_bytes())?;
        if let Some(e) = last_energy(&log) {
            println!("prepare: {} iterations, last energy {e:.8}", log.len());
        }
    }

    let ham = match &section.hamiltonian {
        Some(h) => build_hamiltonian(h, &sys.hilbert, sys.lattice.as_ref())?,
        None => sys.hamiltonian()?.clone(),
    };
    let scheme = Scheme::parse(&integ.scheme)?;
    let control = if integ.adaptive {
        StepControl::Adaptive { dt: integ.dt, atol: integ.atol, rtol: integ.rtol, dt_min: integ.dt_min, dt_max: integ.dt_max }
    } else {
        StepControl::Fixed { dt: integ.dt }
    };
    let propagation = match section.propagation {
        PropagationName::Real => Propagation::Real,
        PropagationName::Imaginary => Propagation::Imaginary,
    };
    let norm = match integ.norm {
        NormName::Euclidean => ErrorNorm::Euclidean,
        NormName::Qgt => ErrorNorm::Qgt,
    };
    let driver = Tdvp::new(ham.observable(), propagation, scheme, control, build_sr(&cfg.sr())).with_error_norm(norm);
    let mut log = RunLog::times();
    let run = driver.run(&mut state, section.t0, section.t_end, &refs(&obs), &mut log, &mut |_, _| Ok(()));
    let written = write_log(&log, base, cfg.csv);
    let report = run?;
    written?;
    write_file(&artifact(base, "params"), state.params().to_bytes())?;
    println!(
        "tdvp: t = {} .. {}, {} accepted / {} rejected steps, final energy {:.8}",
        section.t0,
        section.t_end,
        report.steps.accepted,
        report.steps.rejected,
        last_energy(&log).unwrap_or(f64::NAN)
    );
    Ok(())
}

/// Dense spectra are reported up to this many basis states.
const SPECTRUM_LIMIT: usize = 1024;

pub fn ed(cfg: &RunConfig, base: &Path) -> Result<()> {
    let sys = build_system(cfg)?;
    let op = sys
        .hamiltonian()?
        .discrete()
        .ok_or_else(|| CliError::Config("exact diagonalization needs a discrete Hamiltonian".into()))?;
    let n_states = sys.discrete()?.n_states()?;
    let (e0, _) = ed_ground_state(op.as_ref())?;
    let mut out = json!({ "E0": e0, "n_states": n_states });
    if n_states <= SPECTRUM_LIMIT {
        out["eigenvalues"] = json!(ed_spectrum(op.as_ref())?);
    }
    write_file(&artifact(base, "ed.json"), serde_json::to_string_pretty(&out).expect("json") + "\n")?;
    println!("ed: E0 = {e0:.12} ({n_states} states)");
    Ok(())
}

pub fn sample(cfg: &RunConfig, base: &Path, params: Option<&Path>) -> Result<()> {
    let sys = build_system(cfg)?;
    let mut state = initial_state(cfg, &sys, params)?;
    let draw = state.sample()?;
    let n = draw.configs.len();
    let per_chain = (n / draw.n_chains.max(1)).max(1);
    let width = draw.configs.row(0).len();
    let mut out = String::from("chain");
    for i in 0..width {
        write!(out, ",x{i}").unwrap();
    }
    out.push_str(",log_psi_re,log_psi_im,weight\n");
    for i in 0..n {
        write!(out, "{}", i / per_chain).unwrap();
        for v in draw.configs.row(i) {
            write!(out, ",{v}").unwrap();
        }
        writeln!(out, ",{},{},{}", draw.log_psi[i].re, draw.log_psi[i].im, draw.weights[i]).unwrap();
    }
    write_file(&artifact(base, "samples.csv"), out)?;
    match state.acceptance() {
        Some(a) => println!("sample: {n} samples, acceptance {a:.4}"),
        None => println!("sample: {n} configurations"),
    }
    Ok(())
}

pub fn chartable(cfg: &RunConfig) -> Result<String> {
    let lattice = build_system(cfg)?.lattice.ok_or_else(|| CliError::Config("chartable needs system.lattice".into()))?;
    let sg = SpaceGroup::new(&lattice, None)?;
    let momenta = match &cfg.chartable {
        Some(c) if !c.momenta.is_empty() => c.momenta.clone(),
        _ => vec![vec![0.0; lattice.ndim()]],
    };
    let mut out = format!("space group order {}\n", sg.order());
    for k in &momenta {
        let lg = sg.little_group(k)?;
        let table = lg.character_table()?;
        writeln!(out, "\nk = {k:?}: little group of order {}", lg.order()).unwrap();
        out.push_str(&table.readable());
        if !out.ends_with('\n') {
            out.push('\n');
        }
    }
    Ok(out)
}
