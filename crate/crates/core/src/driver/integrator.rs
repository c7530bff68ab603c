//! Explicit Runge–Kutta schemes with optional adaptive step control.

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Heun,
    /// Bogacki–Shampine 3(2).
    Bs3,
    /// Dormand–Prince 5(4).
    Dp5,
}

/// Butcher tableau; `b_err = b − b̂` for embedded pairs.
#[derive(Clone, Debug)]
pub struct Tableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub b_err: Option<Vec<f64>>,
    pub order: usize,
}

impl Scheme {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "euler" => Ok(Scheme::Euler),
            "heun" => Ok(Scheme::Heun),
            "bs3" | "rk23" => Ok(Scheme::Bs3),
            "dp5" | "rk45" => Ok(Scheme::Dp5),
            _ => Err(Error::InvalidArgument(format!("unknown integrator '{name}'"))),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, Scheme::Bs3 | Scheme::Dp5)
    }

    pub fn tableau(&self) -> Tableau {
        match self {
            Scheme::Euler => Tableau { a: vec![vec![]], b: vec![1.0], c: vec![0.0], b_err: None, order: 1 },
            Scheme::Heun => Tableau { a: vec![vec![], vec![1.0]], b: vec![0.5, 0.5], c: vec![0.0, 1.0], b_err: None, order: 2 },
            Scheme::Bs3 => {
                let b = vec![2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0];
                let bh = [7.0 / 24.0, 1.0 / 4.0, 1.0 / 3.0, 1.0 / 8.0];
                Tableau {
                    a: vec![vec![], vec![0.5], vec![0.0, 0.75], vec![2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0]],
                    b_err: Some(b.iter().zip(&bh).map(|(x, y)| x - y).collect()),
                    b,
                    c: vec![0.0, 0.5, 0.75, 1.0],
                    order: 3,
                }
            }
            Scheme::Dp5 => {
                let b = vec![35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
                let bh = [
                    5179.0 / 57600.0,
                    0.0,
                    7571.0 / 16695.0,
                    393.0 / 640.0,
                    -92097.0 / 339200.0,
                    187.0 / 2100.0,
                    1.0 / 40.0,
                ];
                Tableau {
                    a: vec![
                        vec![],
                        vec![1.0 / 5.0],
                        vec![3.0 / 40.0, 9.0 / 40.0],
                        vec![44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
                        vec![19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
                        vec![9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
                        vec![35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
                    ],
                    b_err: Some(b.iter().zip(&bh).map(|(x, y)| x - y).collect()),
                    b,
                    c: vec![0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0],
                    order: 5,
                }
            }
        }
    }
}

/// Right-hand side of `dy/dt = f(t, y)` plus the norm used for error
/// control.
pub trait OdeSystem {
    /// `stage` is the index of the Runge–Kutta stage; stage 0 is evaluated
    /// at the start of every attempted step.
    fn rhs(&mut self, stage: usize, t: f64, y: &[C64]) -> Result<Vec<C64>>;

    fn norm(&mut self, v: &[C64]) -> Result<f64> {
        Ok(euclidean_norm(v))
    }

    /// Called once per accepted step, before `y` is advanced.
    fn accepted(&mut self, _t: f64, _dt: f64, _y_new: &[C64]) -> Result<()> {
        Ok(())
    }
}

pub fn euclidean_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy_sum(y: &[C64], dt: f64, coeffs: &[f64], k: &[Vec<C64>]) -> Vec<C64> {
    let mut out = y.to_vec();
    for (&c, ki) in coeffs.iter().zip(k) {
        if c == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(ki) {
            *o += v * (c * dt);
        }
    }
    out
}

/// One step from `(t, y)`; returns the new state and, for embedded pairs,
/// the error estimate `y − ŷ`.
pub fn rk_step(tab: &Tableau, sys: &mut dyn OdeSystem, t: f64, y: &[C64], dt: f64) -> Result<(Vec<C64>, Option<Vec<C64>>)> {
    let mut k: Vec<Vec<C64>> = Vec::with_capacity(tab.b.len());
    for (i, row) in tab.a.iter().enumerate() {
        let yi = axpy_sum(y, dt, row, &k);
        let ki = sys.rhs(i, t + tab.c[i] * dt, &yi)?;
        if ki.len() != y.len() {
            return Err(Error::ShapeMismatch(format!("right-hand side has {} entries, state {}", ki.len(), y.len())));
        }
        if ki.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(format!("right-hand side at stage {i}")));
        }
        k.push(ki);
    }
    let y_new = axpy_sum(y, dt, &tab.b, &k);
    let err = tab.b_err.as_ref().map(|be| {
        let zero = vec![C64::new(0.0, 0.0); y.len()];
        axpy_sum(&zero, dt, be, &k)
    });
    Ok((y_new, err))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    Fixed { dt: f64 },
    /// Accept when `‖err‖ ≤ atol + rtol·‖y‖`.
    Adaptive { dt: f64, atol: f64, rtol: f64, dt_min: f64, dt_max: f64 },
}

impl StepControl {
    pub fn initial_dt(&self) -> f64 {
        match *self {
            StepControl::Fixed { dt } | StepControl::Adaptive { dt, .. } => dt,
        }
    }

    fn validate(&self, scheme: Scheme) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match *self {
            StepControl::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => bad(format!("dt must be positive, got {dt}")),
            StepControl::Adaptive { dt, atol, rtol, dt_min, dt_max } => {
                if !scheme.is_adaptive() {
                    return bad(format!("{scheme:?} has no embedded error estimate"));
                }
                if !(dt > 0.0 && dt_min > 0.0 && dt_min <= dt_max && atol >= 0.0 && rtol >= 0.0 && atol + rtol > 0.0) {
                    return bad("adaptive step parameters must be positive with dt_min ≤ dt_max".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationReport {
    pub accepted: usize,
    pub rejected: usize,
}

/// Upper bound on attempted steps in one call to [`integrate`].
pub const MAX_STEPS: usize = 1_000_000;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Step-size factor for a scaled error `e`: `clip(0.9·e^{−1/5}, 0.2, 5)`.
pub fn step_factor(e: f64) -> f64 {
    if e == 0.0 {
        return MAX_FACTOR;
    }
    (SAFETY * e.powf(-1.0 / 5.0)).clamp(MIN_FACTOR, MAX_FACTOR)
}

/// Integrates from `t0` to `t_end`, landing exactly on `t_end`.
pub fn integrate(
    scheme: Scheme,
    control: StepControl,
    sys: &mut dyn OdeSystem,
    t0: f64,
    y0: Vec<C64>,
    t_end: f64,
) -> Result<(Vec<C64>, IntegrationReport)> {
    control.validate(scheme)?;
    if !(t_end >= t0) {
        return Err(Error::InvalidArgument(format!("end time {t_end} precedes start {t0}")));
    }
    let tab = scheme.tableau();
    let eps = 1e-12 * t_end.abs().max(1.0);
    let mut t = t0;
    let mut y = y0;
    let mut dt = control.initial_dt();
    let mut report = IntegrationReport::default();
    while t_end - t > eps {
        if report.accepted + report.rejected >= MAX_STEPS {
            return Err(Error::Integration(format!("step budget of {MAX_STEPS} exhausted at t = {t}")));
        }
        let h = dt.min(t_end - t);
        let (y_new, err) = rk_step(&tab, sys, t, &y, h)?;
        match control {
            StepControl::Fixed { .. } => {
                sys.accepted(t, h, &y_new)?;
                report.accepted += 1;
                t += h;
                y = y_new;
            }
            StepControl::Adaptive { atol, rtol, dt_min, dt_max, .. } => {
                let err = err.expect("adaptive schemes carry an error estimate");
                let scale = atol + rtol * sys.norm(&y)?;
                let e = sys.norm(&err)? / scale;
                if !e.is_finite() {
                    return Err(Error::NonFinite("error estimate".into()));
                }
                let factor = step_factor(e);
                if e <= 1.0 {
                    sys.accepted(t, h, &y_new)?;
                    report.accepted += 1;
                    t += h;
                    y = y_new;
                    dt = (h * factor).clamp(dt_min, dt_max);
                } else {
                    report.rejected += 1;
                    if h <= dt_min {
                        return Err(Error::Integration(format!("error estimate {e:.3e} above tolerance at minimum step {dt_min}")));
                    }
                    dt = (h * factor).max(dt_min);
                }
            }
        }
    }
    Ok((y, report))
}
