//! VMC and TDVP drivers against exact references.

use std::sync::Arc;

use nqs_core::driver::*;
use nqs_core::hilbert::DiscreteHilbert;
use nqs_core::lattice::Lattice;
use nqs_core::model::{BoundModel, DType, LeafSpec, Model, ParamTree, Rbm};
use nqs_core::operator::{ising, sigma_z, total_sigma_x, LocalOperator, Observable};
use nqs_core::oracle::ed_ground_state;
use nqs_core::qgt::Solver;
use nqs_core::sampler::{MetropolisSampler, Rule, SamplerConfig};
use nqs_core::{Error, Result, RngKey, C64};

/// `lnψ = θ s₀` with one complex parameter.
struct Phase;

struct BoundPhase(C64);

impl Model for Phase {
    fn name(&self) -> &'static str {
        "Phase"
    }
    fn input_size(&self) -> usize {
        1
    }
    fn layout(&self) -> Vec<LeafSpec> {
        vec![LeafSpec::new("theta", &[1], DType::C64)]
    }
    fn is_holomorphic(&self) -> bool {
        true
    }
    fn init_params(&self, _key: RngKey) -> Result<ParamTree> {
        let mut p = ParamTree::zeros(self.layout())?;
        p.as_mut_slice()[0] = C64::new(0.3, 0.0);
        Ok(p)
    }
    fn bind<'a>(&'a self, p: &'a ParamTree) -> Result<Box<dyn BoundModel + 'a>> {
        Ok(Box::new(BoundPhase(p.as_slice()[0])))
    }
}

impl BoundModel for BoundPhase {
    fn n_params(&self) -> usize {
        1
    }
    fn log_psi(&self, s: &[f64]) -> C64 {
        self.0 * s[0]
    }
    fn log_grad(&self, s: &[f64], out: &mut [C64]) {
        out[0] = C64::new(s[0], 0.0);
    }
}

fn spins(n: usize) -> Arc<DiscreteHilbert> {
    Arc::new(DiscreteHilbert::spin(0.5, n).unwrap())
}

fn tfim(n: usize, h: f64) -> (Arc<DiscreteHilbert>, Arc<LocalOperator>) {
    let hil = spins(n);
    let g = Lattice::chain(n, true).unwrap();
    let op = Arc::new(ising(hil.clone(), g.graph(), h, 1.0).unwrap());
    (hil, op)
}

fn exact_state(n: usize, seed: u64) -> VariationalState {
    let m: Arc<dyn Model> = Arc::new(Rbm::new(n, 1.0, DType::C64));
    VariationalState::full_summation(m, spins(n), RngKey::new(seed)).unwrap()
}

fn mc_state(n: usize, seed: u64) -> VariationalState {
    let m: Arc<dyn Model> = Arc::new(Rbm::new(n, 1.0, DType::C64));
    let sampler = MetropolisSampler::new(spins(n), SamplerConfig { n_chains: 8, n_sweeps: None, rule: Rule::Local }).unwrap();
    VariationalState::monte_carlo(m, sampler, 512, 8, RngKey::new(seed)).unwrap()
}

#[test]
fn zero_learning_rate_is_a_no_op() {
    let (_, op) = tfim(4, 1.0);
    let mut st = exact_state(4, 0);
    let before = st.params().clone();
    let vmc = Vmc::new(op, Sgd::new(0.0).unwrap(), Some(Sr::new(0.01)));
    let mut log = RunLog::iterations();
    vmc.run(&mut st, 5, &[], &mut log, |_, _| Ok(())).unwrap();
    assert_eq!(st.params(), &before);
    let e = log.means("Energy").unwrap();
    assert_eq!(e.len(), 5);
    assert!(e.iter().all(|&x| x == e[0]));
}

#[test]
fn large_shift_scales_the_force() {
    let (_, op) = tfim(4, 1.0);
    let mut st = exact_state(4, 1);
    let (_, f) = st.expect_and_grad(op.as_ref()).unwrap();
    let (d, _) = Sr::new(1e6).solve(&mut st, &f).unwrap();
    for (a, b) in d.iter().zip(&f) {
        assert!((a * 1e6 - b).norm() <= 1e-6 * b.norm() + 1e-18);
    }
}

#[test]
fn single_parameter_sr() {
    let h = spins(1);
    let mut st = VariationalState::full_summation(Arc::new(Phase), h.clone(), RngKey::new(0)).unwrap();
    let (_, f) = st.expect_and_grad(&sigma_z(h.clone(), 0).unwrap()).unwrap();
    let var = 1.0 - 0.6f64.tanh().powi(2);
    assert!((f[0].re - var).abs() < 1e-14);
    let (d, _) = Sr::new(0.5).with_solver(Solver::Cholesky).solve(&mut st, &f).unwrap();
    assert!((d[0].re - var / (var + 0.5)).abs() < 1e-14);
}

#[test]
fn sr_descends_in_full_summation() {
    let (_, op) = tfim(4, 1.0);
    for seed in 0..10 {
        let mut st = exact_state(4, seed);
        let vmc = Vmc::new(op.clone(), Sgd::new(1e-3).unwrap(), Some(Sr::new(0.01)));
        let mut log = RunLog::iterations();
        vmc.run(&mut st, 20, &[], &mut log, |_, _| Ok(())).unwrap();
        let e = log.means("Energy").unwrap();
        for w in e.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn euler_imaginary_time_is_an_sr_step() {
    let (_, op) = tfim(6, 1.0);
    let dt = 0.05;
    let sr = Sr::new(0.01).with_solver(Solver::Cholesky);
    let mut st = mc_state(6, 2);
    st.sample().unwrap();
    let theta = st.params().as_slice().to_vec();
    let (_, grad) = st.expect_and_grad(op.as_ref()).unwrap();
    let (delta, _) = sr.solve(&mut st, &grad).unwrap();
    let tdvp = Tdvp::new(op.clone(), Propagation::Imaginary, Scheme::Euler, StepControl::Fixed { dt }, sr);
    let (_, rate) = tdvp.time_derivative(&mut st).unwrap();
    for k in 0..theta.len() {
        let via_sr = theta[k] - delta[k] * dt;
        let via_euler = theta[k] + rate[k] * dt;
        assert!((via_sr - via_euler).norm() < 1e-12);
    }

    // the same through the drivers in full-summation mode
    let mut a = exact_state(4, 3);
    let mut b = exact_state(4, 3);
    let (_, op4) = tfim(4, 1.0);
    Vmc::new(op4.clone(), Sgd::new(dt).unwrap(), Some(sr)).step(&mut a).unwrap();
    let tdvp = Tdvp::new(op4, Propagation::Imaginary, Scheme::Euler, StepControl::Fixed { dt }, sr);
    tdvp.run(&mut b, 0.0, dt, &[], &mut RunLog::times(), &mut |_, _| Ok(())).unwrap();
    for (x, y) in a.params().as_slice().iter().zip(b.params().as_slice()) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn one_parameter_dynamics_match_closed_form() {
    let h = spins(1);
    let field = 0.7;
    let op: Arc<dyn Observable> = Arc::new(sigma_z(h.clone(), 0).unwrap().scale(C64::new(field, 0.0)));
    let control = StepControl::Adaptive { dt: 0.01, atol: 1e-10, rtol: 1e-10, dt_min: 1e-8, dt_max: 0.5 };
    let sr = Sr::new(0.0).with_solver(Solver::Cholesky);
    for (prop, rate) in [(Propagation::Real, C64::new(0.0, -field)), (Propagation::Imaginary, C64::new(-field, 0.0))] {
        let mut st = VariationalState::full_summation(Arc::new(Phase), h.clone(), RngKey::new(0)).unwrap();
        let tdvp = Tdvp::new(op.clone(), prop, Scheme::Dp5, control, sr);
        tdvp.run(&mut st, 0.0, 1.0, &[], &mut RunLog::times(), &mut |_, _| Ok(())).unwrap();
        let expect = C64::new(0.3, 0.0) + rate;
        assert!((st.params().as_slice()[0] - expect).norm() < 1e-8, "{prop:?}");
    }
}

#[test]
fn eigenstate_is_stationary() {
    let hil = spins(4);
    let sx = total_sigma_x(hil.clone()).unwrap();
    let op: Arc<dyn Observable> = Arc::new(sx.scale(C64::new(-1.0, 0.0)));
    let m: Arc<dyn Model> = Arc::new(Rbm::new(4, 1.0, DType::C64));
    let mut st = VariationalState::full_summation(m, hil, RngKey::new(0)).unwrap();
    let zeros = vec![C64::new(0.0, 0.0); st.params().n_params()];
    st.set_flat_params(&zeros).unwrap();
    let tdvp = Tdvp::new(op, Propagation::Real, Scheme::Heun, StepControl::Fixed { dt: 0.05 }, Sr::new(1e-3));
    let mut log = RunLog::times();
    let obs: [(&str, &dyn Observable); 1] = [("Sx", &sx)];
    tdvp.run(&mut st, 0.0, 1.0, &obs, &mut log, &mut |_, _| Ok(())).unwrap();
    assert_eq!(log.len(), 21);
    for &v in log.means("Sx").unwrap() {
        assert!((v - 4.0).abs() < 1e-8);
    }
}

#[test]
fn imaginary_time_reaches_the_ground_state() {
    let (_, op) = tfim(4, 1.0);
    let (e0, _) = ed_ground_state(op.as_ref()).unwrap();
    let mut st = exact_state(4, 7);
    let tdvp = Tdvp::new(op, Propagation::Imaginary, Scheme::Heun, StepControl::Fixed { dt: 0.02 }, Sr::new(1e-4));
    let mut log = RunLog::times();
    tdvp.run(&mut st, 0.0, 6.0, &[], &mut log, &mut |_, _| Ok(())).unwrap();
    let e = log.means("Energy").unwrap();
    for w in e.windows(2) {
        assert!(w[1] <= w[0] + 1e-8);
    }
    let last = *e.last().unwrap();
    assert!((last - e0).abs() < 1e-3 * e0.abs(), "{last} vs {e0}");
}

#[test]
fn real_time_conserves_energy() {
    let (_, h0) = tfim(4, 0.5);
    let (_, h1) = tfim(4, 1.0);
    let mut st = exact_state(4, 0);
    Vmc::new(h0, Sgd::new(0.05).unwrap(), Some(Sr::new(0.01)))
        .run(&mut st, 100, &[], &mut RunLog::iterations(), |_, _| Ok(()))
        .unwrap();
    let sr = Sr::new(0.0).with_solver(Solver::Svd { rcond: 1e-10 });
    let tdvp = Tdvp::new(h1, Propagation::Real, Scheme::Heun, StepControl::Fixed { dt: 1e-3 }, sr);
    let mut log = RunLog::times();
    tdvp.run(&mut st, 0.0, 1.0, &[], &mut log, &mut |_, _| Ok(())).unwrap();
    let e = log.means("Energy").unwrap();
    let drift = e.iter().map(|x| (x - e[0]).abs()).fold(0.0, f64::max) / e[0].abs();
    assert!(drift < 1e-3, "drift {drift}");
}

#[test]
fn adaptive_run_reports_steps() {
    let (_, op) = tfim(4, 1.0);
    let mut st = exact_state(4, 5);
    let control = StepControl::Adaptive { dt: 0.01, atol: 1e-6, rtol: 1e-6, dt_min: 1e-8, dt_max: 0.1 };
    for norm in [ErrorNorm::Euclidean, ErrorNorm::Qgt] {
        let tdvp = Tdvp::new(op.clone(), Propagation::Real, Scheme::Bs3, control, Sr::new(1e-4)).with_error_norm(norm);
        let mut log = RunLog::times();
        let report = tdvp.run(&mut st, 0.0, 0.2, &[], &mut log, &mut |_, _| Ok(())).unwrap();
        assert_eq!(log.len(), report.steps.accepted + 1);
        assert!((report.dts.iter().sum::<f64>() - 0.2).abs() < 1e-12);
        assert_eq!(*log.steps().last().unwrap(), 0.2);
    }
}

#[test]
fn log_layout_and_callback() {
    let (_, op) = tfim(4, 1.0);
    let mut st = mc_state(4, 0);
    let sz = sigma_z(spins(4), 0).unwrap();
    let obs: [(&str, &dyn Observable); 1] = [("Sz0", &sz)];
    let vmc = Vmc::new(op, Sgd::new(0.01).unwrap(), None);
    let mut log = RunLog::iterations();
    let mut seen = vec![];
    vmc.run(&mut st, 7, &obs, &mut log, |i, _| {
        seen.push(i);
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, (0..7).collect::<Vec<_>>());
    let json = log.to_json();
    assert_eq!(json["iters"].as_array().unwrap().len(), 7);
    for name in ["Energy", "Sz0"] {
        let re = json[name]["Mean"]["real"].as_array().unwrap();
        assert_eq!(re.len(), 7);
        assert!(re.iter().all(|v| v.as_f64().unwrap().is_finite()));
        assert_eq!(json[name]["Sigma"].as_array().unwrap().len(), 7);
    }
    assert_eq!(json["acceptance"].as_array().unwrap().len(), 7);
}

#[test]
fn hand_written_loop_reproduces_the_driver() {
    let (_, op) = tfim(6, 1.0);
    let sr = Sr::new(0.01);
    let opt = Sgd::new(0.02).unwrap();
    let mut a = mc_state(6, 4);
    Vmc::new(op.clone(), opt, Some(sr)).run(&mut a, 5, &[], &mut RunLog::iterations(), |_, _| Ok(())).unwrap();

    let mut b = mc_state(6, 4);
    for _ in 0..5 {
        b.sample().unwrap();
        let (_, grad) = b.expect_and_grad(op.as_ref()).unwrap();
        let (delta, _) = sr.solve(&mut b, &grad).unwrap();
        opt.update(&mut b, &delta).unwrap();
    }
    assert_eq!(a.params(), b.params());
}

#[test]
fn non_finite_parameters_abort() {
    let (_, op) = tfim(4, 1.0);
    let mut st = exact_state(4, 0);
    let mut bad = st.params().as_slice().to_vec();
    bad[0] = C64::new(f64::NAN, 0.0);
    st.set_flat_params(&bad).unwrap();
    let r = Vmc::new(op, Sgd::new(0.1).unwrap(), None).step(&mut st);
    assert!(matches!(r, Err(Error::NonFinite(_)) | Err(Error::EstimatorSingular)), "{r:?}");
}

struct Decay(f64);

impl OdeSystem for Decay {
    fn rhs(&mut self, _: usize, _: f64, y: &[C64]) -> Result<Vec<C64>> {
        Ok(y.iter().map(|v| v * -self.0).collect())
    }
}

struct Constant(C64);

impl OdeSystem for Constant {
    fn rhs(&mut self, _: usize, _: f64, y: &[C64]) -> Result<Vec<C64>> {
        Ok(vec![self.0; y.len()])
    }
}

#[test]
fn euler_on_a_constant_slope() {
    let y0 = [C64::new(1.0, 2.0)];
    let (y, _) = rk_step(&Scheme::Euler.tableau(), &mut Constant(C64::new(0.5, -1.0)), 0.0, &y0, 0.1).unwrap();
    assert!((y[0] - C64::new(1.05, 1.9)).norm() < 1e-15);
}

#[test]
fn controller_formula() {
    assert_eq!(step_factor(0.0), 5.0);
    assert!((step_factor(1.0) - 0.9).abs() < 1e-15);
    assert_eq!(step_factor(1e12), 0.2);
    assert_eq!(step_factor(1e-12), 5.0);
}

#[test]
fn dormand_prince_accuracy() {
    let control = StepControl::Adaptive { dt: 0.1, atol: 1e-8, rtol: 1e-8, dt_min: 1e-10, dt_max: 1.0 };
    let (y, _) = integrate(Scheme::Dp5, control, &mut Decay(1.0), 0.0, vec![C64::new(1.0, 0.0)], 1.0).unwrap();
    assert!((y[0].re - (-1.0f64).exp()).abs() <= 1e-7);
}

#[test]
fn adaptive_control_tames_a_stiff_problem() {
    let y0 = vec![C64::new(1.0, 0.0)];
    let (fixed, _) = integrate(Scheme::Euler, StepControl::Fixed { dt: 0.05 }, &mut Decay(50.0), 0.0, y0.clone(), 2.0).unwrap();
    assert!(fixed[0].norm() > 1e6);
    let control = StepControl::Adaptive { dt: 0.05, atol: 1e-6, rtol: 1e-6, dt_min: 1e-10, dt_max: 1.0 };
    let (y, report) = integrate(Scheme::Dp5, control, &mut Decay(50.0), 0.0, y0, 2.0).unwrap();
    assert!((y[0].re - (-100.0f64).exp()).abs() < 1e-6);
    assert!(report.rejected > 0 || report.accepted > 10);
}
