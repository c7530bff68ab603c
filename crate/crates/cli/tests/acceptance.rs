//! End-to-end acceptance checks, one line per criterion.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use nqs_cli::setup::{build_model, build_system};
use nqs_cli::RunConfig;
use nqs_core::driver::{Propagation, RunLog, Scheme, Sgd, Sr, StepControl, Tdvp, VariationalState, Vmc};
use nqs_core::hilbert::{DiscreteHilbert, ParticleHilbert};
use nqs_core::lattice::Lattice;
use nqs_core::model::{DType, Gaussian, Gcnn, Jastrow, Model, ParamTree, Rbm, RbmSymm};
use nqs_core::operator::{
    fermi_hubbard, ising, sigma_x, sigma_y, total_sigma_x, ContinuousOperator, DiscreteOperator, FermionOperator2nd,
    Observable, PauliStrings,
};
use nqs_core::oracle::{dense_model_state, ed_ground_state, Propagator};
use nqs_core::qgt::{Coords, Qgt, QgtJacobian, QgtOnTheFly, Solver};
use nqs_core::sampler::{born_distribution, exact_sample, MetropolisSampler, Rule, SamplerConfig};
use nqs_core::symmetry::{PermutationGroup, SpaceGroup};
use nqs_core::{Batch, RngKey, C64};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn spins(n: usize) -> Arc<DiscreteHilbert> {
    Arc::new(DiscreteHilbert::spin(0.5, n).unwrap())
}

fn random_params(model: &dyn Model, key: RngKey, sigma: f64) -> ParamTree {
    ParamTree::truncated_normal(model.layout(), key, sigma).unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn nqs(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nqs"));
    cmd.current_dir(dir).args(args).env_remove("SEED").env_remove("THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().map_err(e)?;
    ensure(out.status.success(), || {
        format!("nqs {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn read_log(path: &Path) -> Result<serde_json::Value, String> {
    serde_json::from_str(&std::fs::read_to_string(path).map_err(e)?).map_err(e)
}

fn series(log: &serde_json::Value, name: &str) -> Result<Vec<f64>, String> {
    log[name]["Mean"]["real"]
        .as_array()
        .ok_or(format!("log has no {name} means"))?
        .iter()
        .map(|v| v.as_f64().ok_or("non-numeric entry".to_string()))
        .collect()
}

// Imaginary part wrapped into (−π, π].
fn wrap_phase(z: C64) -> C64 {
    C64::new(z.re, z.im - 2.0 * PI * (z.im / (2.0 * PI)).round())
}

/// Transverse-field Ising ground energy of a periodic chain from the
/// free-fermion solution (even-parity sector, antiperiodic momenta).
fn tfim_exact_e0(l: usize, h: f64, j: f64) -> f64 {
    -(0..l)
        .map(|n| {
            let k = PI * (2 * n + 1) as f64 / l as f64;
            (j * j + h * h - 2.0 * j * h * k.cos()).sqrt()
        })
        .sum::<f64>()
}

// A configuration fixed by some g with χ_g ≠ 1 has ψ = 0 exactly, so its
// log-amplitude is roundoff.
fn annihilated(group: &PermutationGroup, chars: &[C64], s: &[f64]) -> bool {
    group.elements().iter().zip(chars).any(|(g, chi)| (chi - c(1.0)).norm() > 1e-9 && g.act(s).unwrap() == s)
}

// The first `n` configurations of a random draw that survive the projection.
fn surviving(h: &DiscreteHilbert, key: RngKey, n: usize, keep: impl Fn(&[f64]) -> bool) -> Result<(Batch, usize), String> {
    let pool = h.random_state(key, 20 * n).map_err(e)?;
    let rows: Vec<usize> = (0..pool.len()).filter(|&i| keep(pool.row(i))).take(n).collect();
    ensure(rows.len() == n, || "too few configurations with nonzero amplitude".into())?;
    let skipped = rows[n - 1] + 1 - n;
    let data = rows.iter().flat_map(|&i| pool.row(i).to_vec()).collect();
    Ok((Batch::from_vec(data, h.size()).map_err(e)?, skipped))
}

fn criterion_1() -> Outcome {
    let h = spins(2);
    let s = sigma_x(h.clone(), 0).map_err(e)?.add(&sigma_x(h, 1).map_err(e)?).map_err(e)?;
    let m = s.compose(&s).map_err(e)?.to_dense().map_err(e)?;
    let expect = DMatrix::from_row_slice(
        4,
        4,
        &[2.0, 0.0, 0.0, 2.0, 0.0, 2.0, 2.0, 0.0, 0.0, 2.0, 2.0, 0.0, 2.0, 0.0, 0.0, 2.0],
    )
    .map(c);
    ensure(m == expect, || format!("got {m}"))?;
    Ok("dense matrix equals the expected 4x4 exactly".into())
}

fn criterion_2() -> Outcome {
    let h = DiscreteHilbert::fock(10, 1).map_err(e)?.tensor_product(&DiscreteHilbert::spin(0.5, 6).map_err(e)?).map_err(e)?;
    let n = h.n_states().map_err(e)?;
    ensure(h.size() == 7 && n == 704, || format!("size {} n_states {n}", h.size()))?;
    Ok("size 7, n_states 704".into())
}

fn criterion_3() -> Outcome {
    let h = spins(4);
    let model = Rbm::new(4, 1.0, DType::C64);
    let params = random_params(&model, RngKey::new(21), 0.3);
    let bound = model.bind(&params).map_err(e)?;
    let samples = exact_sample(&h, &*bound, RngKey::new(22), 64).map_err(e)?.configs;
    let np = bound.n_params();
    let coords = || Coords::holomorphic(np);

    let jac = QgtJacobian::new(&*bound, &samples, None, coords(), 0.0, None).map_err(e)?;
    let dj = jac.centered_jacobian();
    let dense_jac = dj.adjoint() * dj;

    let otf = QgtOnTheFly::new(&*bound, &samples, None, coords(), 0.0).map_err(e)?;
    let mut dense_otf = DMatrix::<C64>::zeros(np, np);
    for j in 0..np {
        let mut unit = vec![C64::new(0.0, 0.0); np];
        unit[j] = c(1.0);
        let col = otf.matvec(&unit).map_err(e)?;
        for i in 0..np {
            dense_otf[(i, j)] = col[i];
        }
    }

    // S_kl = ⟨O_k* O_l⟩ − ⟨O_k*⟩⟨O_l⟩ over the samples
    let n = samples.len() as f64;
    let rows: Vec<Vec<C64>> = (0..samples.len())
        .map(|i| {
            let mut o = vec![C64::new(0.0, 0.0); np];
            bound.log_grad(samples.row(i), &mut o);
            o
        })
        .collect();
    let mean: Vec<C64> = (0..np).map(|k| rows.iter().map(|r| r[k]).sum::<C64>() / n).collect();
    let brute = DMatrix::from_fn(np, np, |k, l| {
        rows.iter().map(|r| r[k].conj() * r[l]).sum::<C64>() / n - mean[k].conj() * mean[l]
    });

    let d1 = (&dense_jac - &dense_otf).iter().map(|x| x.norm()).fold(0.0, f64::max);
    let d2 = (&dense_jac - &brute).iter().map(|x| x.norm()).fold(0.0, f64::max);
    ensure(d1 <= 1e-10 && d2 <= 1e-10, || format!("jacobian vs on-the-fly {d1:e}, jacobian vs covariance {d2:e}"))?;
    Ok(format!("{np}x{np} QGTs agree (max deviation {:.1e})", d1.max(d2)))
}

// Worst relative deviation of analytic log-derivatives from central
// differences along every real direction of every parameter.
fn fd_worst(model: &dyn Model, params: &ParamTree, s: &[f64], h: f64) -> Result<f64, String> {
    let bound = model.bind(params).map_err(e)?;
    let mut o = vec![C64::new(0.0, 0.0); params.n_params()];
    bound.log_grad(s, &mut o);
    let mask = params.real_mask();
    let mut worst: f64 = 0.0;
    for k in 0..params.n_params() {
        let dirs: &[C64] = if mask[k] { &[C64::new(1.0, 0.0)] } else { &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)] };
        for &dir in dirs {
            let mut p = params.as_slice().to_vec();
            p[k] += dir * h;
            let plus = model.bind(&params.with_flat(&p).map_err(e)?).map_err(e)?.log_psi(s);
            p[k] -= dir * (2.0 * h);
            let minus = model.bind(&params.with_flat(&p).map_err(e)?).map_err(e)?.log_psi(s);
            let fd = wrap_phase(plus - minus) / (2.0 * h);
            let an = o[k] * dir;
            worst = worst.max((fd - an).norm() / an.norm().max(1.0));
        }
    }
    Ok(worst)
}

fn criterion_4() -> Outcome {
    let chain = Lattice::chain(4, true).map_err(e)?;
    let sg = SpaceGroup::new(&chain, None).map_err(e)?;
    let group = Arc::new(sg.group().clone());
    let chars = sg.irrep_characters(&[PI], 0).map_err(e)?;
    let kpi = chars.clone();
    let models: Vec<(&str, Arc<dyn Model>, bool)> = vec![
        ("Rbm(real)", Arc::new(Rbm::new(4, 1.0, DType::F64)), false),
        ("Rbm(complex)", Arc::new(Rbm::new(4, 1.0, DType::C64)), false),
        ("Jastrow(real)", Arc::new(Jastrow::new(4, DType::F64)), false),
        ("Jastrow(complex)", Arc::new(Jastrow::new(4, DType::C64)), false),
        ("RbmSymm", Arc::new(RbmSymm::new(group.clone(), 2, DType::C64)), false),
        ("Gcnn(invariant)", Arc::new(Gcnn::invariant(group.clone(), vec![2, 2], DType::C64).map_err(e)?), false),
        ("Gcnn(k=pi)", Arc::new(Gcnn::new(group.clone(), vec![2, 2], chars, DType::C64).map_err(e)?), false),
        ("Gcnn(real)", Arc::new(Gcnn::invariant(group.clone(), vec![2, 2], DType::F64).map_err(e)?), false),
        ("Gaussian", Arc::new(Gaussian::new(6, DType::F64)), true),
    ];
    let h = spins(4);
    let particles = ParticleHilbert::new(2, &[f64::INFINITY; 3], &[false; 3]).map_err(e)?;
    let mut overall: f64 = 0.0;
    let mut skipped = 0;
    for (name, m, continuous) in &models {
        let configs = if *continuous {
            particles.random_state(RngKey::new(5), 50).map_err(e)?
        } else if *name == "Gcnn(k=pi)" {
            let (b, n) = surviving(&h, RngKey::new(5), 50, |s| !annihilated(&group, &kpi, s))?;
            skipped += n;
            b
        } else {
            h.random_state(RngKey::new(5), 50).map_err(e)?
        };
        for i in 0..50 {
            let params = if *continuous {
                m.init_params(RngKey::new(100 + i as u64)).map_err(e)?
            } else {
                random_params(m.as_ref(), RngKey::new(100 + i as u64), 0.5)
            };
            let w = fd_worst(m.as_ref(), &params, configs.row(i), 1e-5)?;
            ensure(w <= 1e-6, || format!("{name} instance {i}: relative deviation {w:e}"))?;
            overall = overall.max(w);
        }
    }

    // energy gradient against the dense Rayleigh quotient
    let lat = Lattice::chain(4, true).map_err(e)?;
    let op = ising(h.clone(), lat.graph(), 1.0, 1.0).map_err(e)?;
    let rayleigh = |m: &dyn Model, p: &ParamTree| -> Result<f64, String> {
        let psi = dense_model_state(&h, &*m.bind(p).map_err(e)?).map_err(e)?.normalized();
        Ok(psi.expect(&op).map_err(e)?.re)
    };
    let mut grad_worst: f64 = 0.0;
    for dtype in [DType::F64, DType::C64] {
        let m: Arc<dyn Model> = Arc::new(Rbm::new(4, 1.0, dtype));
        let mut st = VariationalState::full_summation(m.clone(), h.clone(), RngKey::new(9)).map_err(e)?;
        let p = random_params(m.as_ref(), RngKey::new(31), 0.3);
        st.set_params(p.clone()).map_err(e)?;
        let (_, grad) = st.expect_and_grad(&op).map_err(e)?;
        let mask = p.real_mask();
        for k in 0..p.n_params() {
            let dirs: &[C64] = if mask[k] { &[C64::new(1.0, 0.0)] } else { &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)] };
            for &dir in dirs {
                let step = 1e-5;
                let mut flat = p.as_slice().to_vec();
                flat[k] += dir * step;
                let plus = rayleigh(m.as_ref(), &p.with_flat(&flat).map_err(e)?)?;
                flat[k] -= dir * (2.0 * step);
                let minus = rayleigh(m.as_ref(), &p.with_flat(&flat).map_err(e)?)?;
                let fd = (plus - minus) / (2.0 * step);
                // real leaves carry dE/dθ; complex leaves carry ∂E/∂θ*, so
                // dE/dRe θ = 2 Re g and dE/dIm θ = 2 Im g
                let an = if mask[k] {
                    grad[k].re
                } else if dir.re == 1.0 {
                    2.0 * grad[k].re
                } else {
                    2.0 * grad[k].im
                };
                let w = (fd - an).abs() / an.abs().max(1.0);
                ensure(w <= 1e-6, || format!("energy gradient {dtype:?} parameter {k}: fd {fd} analytic {an}"))?;
                grad_worst = grad_worst.max(w);
            }
        }
    }
    Ok(format!(
        "{} models x 50 instances ({skipped} symmetry-annihilated configurations skipped), worst log-derivative deviation {overall:.1e}; energy gradient worst {grad_worst:.1e}",
        models.len()
    ))
}

fn criterion_5(dir: &Path) -> Outcome {
    let config = configs_dir().join("tfim_chain.toml");
    let cfg_path = config.to_str().unwrap();
    let e0 = tfim_exact_e0(8, 1.0, 1.0);
    let cfg = RunConfig::load(&config, &[]).map_err(e)?;
    let sys = build_system(&cfg).map_err(e)?;
    let (ed, _) = ed_ground_state(sys.hamiltonian().map_err(e)?.discrete().unwrap().as_ref()).map_err(e)?;
    ensure((ed - e0).abs() < 1e-10, || format!("ED {ed} differs from the closed form {e0}"))?;

    let mut report = vec![format!("E0 = {e0:.6}")];
    for (label, extra, tol) in [("sampled", None, 1e-2), ("full summation", Some("sampler.kind=\"full_summation\""), 1e-3)] {
        let out = format!("output=\"{label}\"").replace(' ', "_");
        let mut args = vec!["vmc", cfg_path, "--override", &out];
        if let Some(x) = extra {
            args.extend(["--override", x]);
        }
        nqs(dir, &args, &[])?;
        let log = read_log(&dir.join(format!("{}.log", label.replace(' ', "_"))))?;
        let energies = series(&log, "Energy")?;
        ensure(energies.len() == 200, || format!("{label}: {} iterations logged", energies.len()))?;
        let tail = &energies[energies.len() - 20..];
        let mean = tail.iter().sum::<f64>() / 20.0;
        let rel = (mean - e0).abs() / e0.abs();
        ensure(rel <= tol, || format!("{label}: last-20 mean {mean:.6}, relative error {rel:.2e} > {tol:e}"))?;
        report.push(format!("{label} {mean:.6} (rel {rel:.1e})"));
    }
    Ok(report.join(", "))
}

fn criterion_6(dir: &Path) -> Outcome {
    let config = configs_dir().join("harmonic.toml");
    nqs(dir, &["vmc", config.to_str().unwrap(), "--override", "output=\"harmonic\""], &[])?;
    let energies = series(&read_log(&dir.join("harmonic.log"))?, "Energy")?;
    ensure(energies.len() == 100, || format!("{} iterations logged", energies.len()))?;
    let last = *energies.last().unwrap();
    let rel = (last - 15.0).abs() / 15.0;
    ensure(rel <= 1e-2, || format!("final energy {last}"))?;

    // the exact eigenstate Σ = 2I has a constant local energy
    let ph = Arc::new(ParticleHilbert::new(10, &[f64::INFINITY; 3], &[false; 3]).map_err(e)?);
    let g = Gaussian::new(30, DType::F64);
    let p = g.isotropic_params(2.0).map_err(e)?;
    let bound = g.bind(&p).map_err(e)?;
    let trap = ContinuousOperator::potential(ph.clone(), Arc::new(|x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>()));
    let h = ContinuousOperator::kinetic(ph.clone(), &[1.0]).map_err(e)?.add(&trap).map_err(e)?;
    let xs = ph.random_state(RngKey::new(77), 1000).map_err(e)?;
    let lp: Vec<C64> = (0..xs.len()).map(|i| bound.log_psi(xs.row(i))).collect();
    let el = h.local_values(&*bound, &xs, &lp, None).map_err(e)?;
    let dev = el.iter().map(|v| (v - c(15.0)).norm()).fold(0.0, f64::max);
    ensure(dev <= 1e-10, || format!("local energy deviates by {dev:e} at the exact eigenstate"))?;
    Ok(format!("final energy {last:.6} (rel {rel:.1e}); eigenstate local energy within {dev:.1e} of 15"))
}

fn criterion_7(dir: &Path) -> Outcome {
    let config = configs_dir().join("tfim_quench.toml");
    let cfg_path = config.to_str().unwrap();
    nqs(dir, &["tdvp", cfg_path, "--override", "integrator.dt=0.001", "--override", "output=\"quench\""], &[])?;
    let log = read_log(&dir.join("quench.log"))?;
    let times: Vec<f64> = log["times"].as_array().ok_or("no times")?.iter().filter_map(|v| v.as_f64()).collect();
    let sx = series(&log, "Sx")?;
    let en = series(&log, "Energy")?;
    ensure((times.last().copied().unwrap_or(0.0) - 1.0).abs() < 1e-12, || "run did not reach t = 1".into())?;

    let cfg = RunConfig::load(&config, &[]).map_err(e)?;
    let sys = build_system(&cfg).map_err(e)?;
    let model = build_model(&cfg, &sys).map_err(e)?;
    let params = ParamTree::from_bytes(&std::fs::read(dir.join("quench.prepare.params")).map_err(e)?).map_err(e)?;
    let h = sys.discrete().map_err(e)?.clone();
    let psi0 = dense_model_state(&h, &*model.bind(&params).map_err(e)?).map_err(e)?.normalized();
    let lat = Lattice::chain(8, true).map_err(e)?;
    let quench = ising(h.clone(), lat.graph(), 1.0, 1.0).map_err(e)?;
    let sx_op = total_sigma_x(h).map_err(e)?;
    let prop = Propagator::new(&quench).map_err(e)?;
    let mut dev: f64 = 0.0;
    for (t, v) in times.iter().zip(&sx) {
        let exact = prop.evolve(&psi0, *t).map_err(e)?.expect(&sx_op).map_err(e)?.re;
        dev = dev.max((exact - v).abs());
    }
    let e0 = en[0];
    let drift = en.iter().map(|x| (x - e0).abs()).fold(0.0, f64::max) / e0.abs();
    ensure(dev <= 1e-2 * 8.0 && drift <= 1e-3, || format!("max |dSx| {dev:.3e} (limit 8e-2), energy drift {drift:.2e}"))?;
    Ok(format!("{} steps, max |dSx| = {dev:.3e} (limit 8e-2), relative energy drift {drift:.1e}", times.len() - 1))
}

fn criterion_8() -> Outcome {
    let n = 6;
    let h = spins(n);
    let lat = Lattice::chain(n, true).map_err(e)?;
    let op: Arc<dyn Observable> = Arc::new(ising(h.clone(), lat.graph(), 1.0, 1.0).map_err(e)?);
    let dt = 0.05;
    let sr = Sr::new(0.01).with_solver(Solver::Cholesky);

    let model: Arc<dyn Model> = Arc::new(Rbm::new(n, 1.0, DType::C64));
    let sampler = MetropolisSampler::new(h.clone(), SamplerConfig { n_chains: 8, n_sweeps: None, rule: Rule::Local }).map_err(e)?;
    let mut st = VariationalState::monte_carlo(model, sampler, 512, 16, RngKey::new(8)).map_err(e)?;
    st.set_params(random_params(st.model().as_ref(), RngKey::new(12), 0.2)).map_err(e)?;
    st.sample().map_err(e)?;
    let theta = st.params().as_slice().to_vec();
    let (_, grad) = st.expect_and_grad(op.as_ref()).map_err(e)?;
    let (delta, _) = sr.solve(&mut st, &grad).map_err(e)?;
    let tdvp = Tdvp::new(op.clone(), Propagation::Imaginary, Scheme::Euler, StepControl::Fixed { dt }, sr);
    let (_, rate) = tdvp.time_derivative(&mut st).map_err(e)?;
    let mut worst: f64 = 0.0;
    for k in 0..theta.len() {
        worst = worst.max(((theta[k] - delta[k] * dt) - (theta[k] + rate[k] * dt)).norm());
    }

    // and through both drivers in full-summation mode
    let m4: Arc<dyn Model> = Arc::new(Rbm::new(4, 1.0, DType::C64));
    let h4 = spins(4);
    let op4: Arc<dyn Observable> = Arc::new(ising(h4.clone(), Lattice::chain(4, true).map_err(e)?.graph(), 1.0, 1.0).map_err(e)?);
    let mut a = VariationalState::full_summation(m4.clone(), h4.clone(), RngKey::new(3)).map_err(e)?;
    let mut b = VariationalState::full_summation(m4, h4, RngKey::new(3)).map_err(e)?;
    Vmc::new(op4.clone(), Sgd::new(dt).map_err(e)?, Some(sr)).step(&mut a).map_err(e)?;
    Tdvp::new(op4, Propagation::Imaginary, Scheme::Euler, StepControl::Fixed { dt }, sr)
        .run(&mut b, 0.0, dt, &[], &mut RunLog::times(), &mut |_, _| Ok(()))
        .map_err(e)?;
    for (x, y) in a.params().as_slice().iter().zip(b.params().as_slice()) {
        worst = worst.max((x - y).norm());
    }
    ensure(worst <= 1e-12, || format!("parameters differ by {worst:e}"))?;
    Ok(format!("Euler step and SR step agree to {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let honeycomb = SpaceGroup::new(&Lattice::honeycomb([6, 6], true, 1).map_err(e)?, None).map_err(e)?;
    ensure(honeycomb.order() == 432, || format!("honeycomb space group has {} elements", honeycomb.order()))?;

    let tri = SpaceGroup::new(&Lattice::triangular([6, 6], true, 1).map_err(e)?, None).map_err(e)?;
    let table = tri.little_group(&[0.0, 0.0]).map_err(e)?.character_table().map_err(e)?;
    let tags = ["1xId()", "2xRot(60)", "2xRot(120)", "1xRot(180)", "3xRefl(0)", "3xRefl(-30)"];
    let printed: [[f64; 6]; 6] = [
        [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, 1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0, -1.0, 1.0],
        [2.0, 1.0, -1.0, -2.0, 0.0, 0.0],
        [2.0, -1.0, -1.0, 2.0, 0.0, 0.0],
    ];
    ensure(table.class_tags() == tags, || format!("class tags {:?}", table.class_tags()))?;
    let rows = table.characters();
    ensure(rows.len() == 6, || format!("{} irreps", rows.len()))?;
    for p in &printed {
        let found = rows.iter().any(|r| r.iter().zip(p).all(|(a, b)| (a - c(*b)).norm() < 1e-10));
        ensure(found, || format!("printed row {p:?} not reproduced"))?;
    }

    let mut worst: f64 = 0.0;
    let square = SpaceGroup::new(&Lattice::square(4, true).map_err(e)?, None).map_err(e)?;
    let mut tables = vec![
        honeycomb.group().character_table().map_err(e)?,
        tri.group().character_table().map_err(e)?,
        square.group().character_table().map_err(e)?,
    ];
    for k in [[0.0, 0.0], [PI, 0.0], [PI, PI], [PI / 2.0, 0.0]] {
        tables.push(square.little_group(&k).map_err(e)?.character_table().map_err(e)?);
    }
    for k in [[0.0, 0.0], [PI, PI / 3.0f64.sqrt()], [4.0 * PI / 3.0, 0.0]] {
        tables.push(tri.little_group(&k).map_err(e)?.character_table().map_err(e)?);
    }
    for t in &tables {
        worst = worst.max(t.orthogonality_error());
    }
    ensure(worst <= 1e-10, || format!("orthogonality error {worst:e}"))?;
    Ok(format!(
        "honeycomb |G| = 432; triangular Gamma table matches; {} tables orthogonal to {worst:.1e}",
        tables.len()
    ))
}

fn criterion_10() -> Outcome {
    let lat = Lattice::square(4, true).map_err(e)?;
    let sg = SpaceGroup::new(&lat, None).map_err(e)?;
    let group = Arc::new(sg.group().clone());
    let h = spins(16);
    let ones = vec![c(1.0); group.order()];
    let mut cases: Vec<(String, Arc<dyn Model>, Vec<C64>)> = vec![
        ("RbmSymm".into(), Arc::new(RbmSymm::new(group.clone(), 2, DType::C64)), ones.clone()),
        ("Gcnn invariant".into(), Arc::new(Gcnn::invariant(group.clone(), vec![2, 2], DType::C64).map_err(e)?), ones),
    ];
    for (k, irrep) in [([PI, PI], 0), ([PI, PI], 1)] {
        let chars = sg.irrep_characters(&k, irrep).map_err(e)?;
        ensure((chars[0] - c(1.0)).norm() < 1e-12, || format!("irrep {irrep} at {k:?} is not one-dimensional"))?;
        let m = Gcnn::new(group.clone(), vec![2, 2], chars.clone(), DType::C64).map_err(e)?;
        cases.push((format!("Gcnn k={k:?} irrep {irrep}"), Arc::new(m), chars));
    }
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for (name, m, chars) in &cases {
        let (configs, n) = surviving(&h, RngKey::new(40), 20, |s| !annihilated(&group, chars, s))?;
        skipped += n;
        for draw in 0..20 {
            let p = random_params(m.as_ref(), RngKey::new(500 + draw as u64), 0.3);
            let bound = m.bind(&p).map_err(e)?;
            let s = configs.row(draw);
            let base = bound.log_psi(s);
            for (g, chi) in group.elements().iter().zip(chars) {
                let ratio = wrap_phase(bound.log_psi(&g.act(s).map_err(e)?) - base).exp();
                let d = (ratio - chi).norm();
                ensure(d <= 1e-10, || format!("{name}, draw {draw}: psi(g s)/psi(s) = {ratio}, chi = {chi}"))?;
                worst = worst.max(d);
            }
        }
    }
    Ok(format!(
        "{} models x 20 draws x {} elements, worst deviation {worst:.1e} ({skipped} symmetry-annihilated draws skipped)",
        cases.len(),
        group.order()
    ))
}

fn chi_square_p(hilbert: &DiscreteHilbert, configs: &Batch, probs: &[f64]) -> f64 {
    let mut counts = vec![0.0; probs.len()];
    for i in 0..configs.len() {
        counts[hilbert.config_to_index(configs.row(i)).unwrap()] += 1.0;
    }
    let n = configs.len() as f64;
    let stat: f64 = counts.iter().zip(probs).map(|(c, p)| (c - n * p).powi(2) / (n * p)).sum();
    1.0 - ChiSquared::new((probs.len() - 1) as f64).unwrap().cdf(stat)
}

fn criterion_11() -> Outcome {
    let h = spins(4);
    let model = Rbm::new(4, 1.0, DType::C64);
    let params = random_params(&model, RngKey::new(3), 0.4);
    let bound = model.bind(&params).map_err(e)?;
    let probs = born_distribution(&h, &*bound).map_err(e)?.weights;
    let run = |rule: Rule, sweeps: Option<usize>, seed: u64| -> Result<Batch, String> {
        let sampler = MetropolisSampler::new(h.clone(), SamplerConfig { n_chains: 64, n_sweeps: sweeps, rule }).map_err(e)?;
        let mut state = sampler.init_state(RngKey::new(seed)).map_err(e)?;
        Ok(sampler.sample(&*bound, &mut state, 1 << 16, 64).map_err(e)?.configs)
    };
    let p_local = chi_square_p(&h, &run(Rule::Local, None, 11)?, &probs);
    ensure(p_local > 0.01, || format!("local rule p = {p_local:.3e}"))?;

    // XY hopping on an open chain plus a flip of site 0: the number of
    // connections varies between configurations, so the correction matters
    let mut mover = sigma_x(h.clone(), 0).map_err(e)?;
    for i in 0..3 {
        let xx = sigma_x(h.clone(), i).map_err(e)?.compose(&sigma_x(h.clone(), i + 1).map_err(e)?).map_err(e)?;
        let yy = sigma_y(h.clone(), i).map_err(e)?.compose(&sigma_y(h.clone(), i + 1).map_err(e)?).map_err(e)?;
        mover = mover.add(&xx.add(&yy).map_err(e)?).map_err(e)?;
    }
    let mover: Arc<dyn DiscreteOperator> = Arc::new(mover);
    let p_good = chi_square_p(&h, &run(Rule::hamiltonian(mover.clone()), Some(32), 5)?, &probs);
    let p_bad = chi_square_p(&h, &run(Rule::hamiltonian_uncorrected(mover), Some(32), 5)?, &probs);
    ensure(p_good > 0.01, || format!("corrected Hamiltonian rule p = {p_good:.3e}"))?;
    ensure(p_bad <= 0.01, || format!("uncorrected Hamiltonian rule passes with p = {p_bad:.3e}"))?;

    let sector = Arc::new(DiscreteHilbert::spin_with_total_sz(0.5, 8, 0.0).map_err(e)?);
    let ring = Lattice::chain(8, true).map_err(e)?;
    let m8 = Rbm::new(8, 1.0, DType::C64);
    let p8 = random_params(&m8, RngKey::new(0), 0.3);
    let b8 = m8.bind(&p8).map_err(e)?;
    let rule = Rule::exchange(ring.graph(), 2).map_err(e)?;
    let sampler = MetropolisSampler::new(sector, SamplerConfig { n_chains: 4, n_sweeps: Some(1), rule }).map_err(e)?;
    let mut state = sampler.init_state(RngKey::new(1)).map_err(e)?;
    let s = sampler.sample(&*b8, &mut state, 100_000, 0).map_err(e)?;
    let violations = (0..s.configs.len()).filter(|&i| s.configs.row(i).iter().sum::<f64>() != 0.0).count();
    ensure(violations == 0, || format!("{violations} exchange samples left the sector"))?;
    Ok(format!(
        "local p = {p_local:.3}; hamiltonian rule p = {p_good:.3} corrected, {p_bad:.1e} uncorrected; 1e5 exchange steps in sector"
    ))
}

// Jordan–Wigner by hand: c†_a c_b + h.c. = ½ (X_a X_b + Y_a Y_b) Π_{a<j<b} Z_j
// and n_↑ n_↓ = ¼ (1 − Z_↑ − Z_↓ + Z_↑ Z_↓).
fn hubbard_pauli(h: Arc<DiscreteHilbert>, lat: &Lattice, t: f64, u: f64) -> Result<PauliStrings, String> {
    let n = h.size();
    let mut op = PauliStrings::new(h.clone()).map_err(e)?;
    let letters = |set: &[(usize, u8)]| {
        let mut v = vec![b'I'; n];
        for &(i, l) in set {
            v[i] = l;
        }
        String::from_utf8(v).unwrap()
    };
    for sz in [0.5, -0.5] {
        for (i, j) in lat.graph().edges_of_order(1) {
            let (a, b) = {
                let x = h.fermion_orbital_index(i, sz).map_err(e)?;
                let y = h.fermion_orbital_index(j, sz).map_err(e)?;
                (x.min(y), x.max(y))
            };
            for l in [b'X', b'Y'] {
                let mut set: Vec<(usize, u8)> = ((a + 1)..b).map(|k| (k, b'Z')).collect();
                set.push((a, l));
                set.push((b, l));
                op.add_string(&letters(&set), c(-0.5 * t)).map_err(e)?;
            }
        }
    }
    for i in 0..lat.n_nodes() {
        let up = h.fermion_orbital_index(i, 0.5).map_err(e)?;
        let dn = h.fermion_orbital_index(i, -0.5).map_err(e)?;
        op.add_string(&letters(&[]), c(0.25 * u)).map_err(e)?;
        op.add_string(&letters(&[(up, b'Z')]), c(-0.25 * u)).map_err(e)?;
        op.add_string(&letters(&[(dn, b'Z')]), c(-0.25 * u)).map_err(e)?;
        op.add_string(&letters(&[(up, b'Z'), (dn, b'Z')]), c(0.25 * u)).map_err(e)?;
    }
    Ok(op)
}

fn criterion_12() -> Outcome {
    let h = Arc::new(DiscreteHilbert::spin_orbital_fermions(4, 0.5, Some(&[1, 1])).map_err(e)?);
    // on a 2x2 torus every periodic bond coincides with an open one
    let lat = Lattice::square(2, false).map_err(e)?;
    let (t, u) = (1.0, 4.0);
    let fermionic = fermi_hubbard(h.clone(), lat.graph(), t, u).map_err(e)?;
    let pauli = hubbard_pauli(h.clone(), &lat, t, u)?;
    let a = fermionic.to_dense().map_err(e)?;
    let b = pauli.to_dense().map_err(e)?;
    let diff = (&a - &b).iter().map(|x| x.norm()).fold(0.0, f64::max);
    ensure(diff == 0.0, || format!("fermionic and Pauli matrices differ by {diff:e}"))?;
    let (e_f, _) = ed_ground_state(&fermionic).map_err(e)?;
    let (e_p, _) = ed_ground_state(&pauli).map_err(e)?;
    ensure((e_f - e_p).abs() <= 1e-12, || format!("ground energies {e_f} vs {e_p}"))?;

    let orbitals = Arc::new(DiscreteHilbert::fock(1, 6).map_err(e)?);
    let dim = 64;
    let id = DMatrix::<C64>::identity(dim, dim);
    let zero = DMatrix::<C64>::zeros(dim, dim);
    let cr: Vec<DMatrix<C64>> = (0..6)
        .map(|i| FermionOperator2nd::create(orbitals.clone(), i).and_then(|o| o.to_dense()))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    let an: Vec<DMatrix<C64>> = (0..6)
        .map(|i| FermionOperator2nd::destroy(orbitals.clone(), i).and_then(|o| o.to_dense()))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    for i in 0..6 {
        for j in 0..6 {
            let ac = &an[i] * &cr[j] + &cr[j] * &an[i];
            ensure(ac == if i == j { id.clone() } else { zero.clone() }, || format!("{{f_{i}, f†_{j}}} wrong"))?;
            ensure(&an[i] * &an[j] + &an[j] * &an[i] == zero, || format!("{{f_{i}, f_{j}}} nonzero"))?;
        }
    }
    Ok(format!("{}x{} matrices identical, E0 = {e_f:.10}; anticommutators exact on 6 orbitals", a.nrows(), a.ncols()))
}

fn criterion_13(dir: &Path) -> Outcome {
    let chain = configs_dir().join("tfim_chain.toml");
    let quench = configs_dir().join("tfim_quench.toml");
    let runs: Vec<(&str, &str, Vec<String>)> = vec![
        ("vmc", "log", vec![chain.display().to_string(), "--override".into(), "vmc.n_iter=10".into()]),
        ("sample", "samples.csv", vec![chain.display().to_string()]),
        (
            "tdvp",
            "log",
            vec![
                quench.display().to_string(),
                "--override".into(),
                "prepare.n_iter=5".into(),
                "--override".into(),
                "tdvp.t_end=0.01".into(),
            ],
        ),
    ];
    let mut checked = 0;
    for (cmd, ext, args) in &runs {
        let mut logs = vec![];
        for (i, env) in [vec![], vec![], vec![("THREADS", "1")]].into_iter().enumerate() {
            let out = format!("output=\"det_{cmd}_{i}\"");
            let mut full: Vec<&str> = vec![cmd];
            full.extend(args.iter().map(|s| s.as_str()));
            full.extend(["--override", &out]);
            nqs(dir, &full, &env)?;
            logs.push(std::fs::read(dir.join(format!("det_{cmd}_{i}.{ext}"))).map_err(e)?);
        }
        ensure(logs.iter().all(|l| *l == logs[0]), || format!("{cmd} outputs differ between runs"))?;
        checked += logs.len();
    }
    Ok(format!("{checked} outputs from vmc, sample and tdvp runs are bitwise identical (including THREADS=1)"))
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let d = dir.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>, Duration)> = vec![
        ("operator fidelity", Box::new(criterion_1), Duration::from_secs(1)),
        ("hilbert fidelity", Box::new(criterion_2), Duration::from_secs(1)),
        ("QGT triple agreement", Box::new(criterion_3), Duration::from_secs(5)),
        ("gradient fidelity", Box::new(criterion_4), Duration::from_secs(30)),
        ("ground state vs ED", Box::new(move || criterion_5(d)), Duration::from_secs(300)),
        ("harmonic oscillator", Box::new(move || criterion_6(d)), Duration::from_secs(120)),
        ("TDVP vs exact propagation", Box::new(move || criterion_7(d)), Duration::from_secs(600)),
        ("SR / imaginary time identity", Box::new(criterion_8), Duration::from_secs(5)),
        ("symmetry fidelity", Box::new(criterion_9), Duration::from_secs(30)),
        ("equivariance", Box::new(criterion_10), Duration::from_secs(30)),
        ("sampler correctness", Box::new(criterion_11), Duration::from_secs(120)),
        ("fermions", Box::new(criterion_12), Duration::from_secs(30)),
        ("determinism", Box::new(move || criterion_13(d)), Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let timing = if took <= *budget {
            format!("{:.1}s", took.as_secs_f64())
        } else {
            format!("{:.1}s, over the {}s budget", took.as_secs_f64(), budget.as_secs())
        };
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{timing}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{timing}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
