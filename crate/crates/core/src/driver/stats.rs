//! Estimator statistics and the JSON run log.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::C64;

/// Summary of a local-estimator average.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub mean: C64,
    pub error_of_mean: f64,
    pub variance: f64,
    pub n_samples: usize,
}

impl Stats {
    /// Weighted statistics. `weights` are normalized; with `chains > 1` the
    /// error of the mean comes from the spread of per-chain means
    /// (chain-major samples). `exact` marks full summation, where the error
    /// is zero.
    pub fn from_weighted(values: &[C64], weights: &[f64], chains: usize, exact: bool) -> Stats {
        let n = values.len();
        let mean: C64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
        let variance: f64 = values.iter().zip(weights).map(|(v, w)| (v - mean).norm_sqr() * w).sum();
        let error_of_mean = if exact || n == 0 {
            0.0
        } else if chains > 1 && n % chains == 0 && n / chains >= 1 {
            let per = n / chains;
            let means: Vec<C64> = (0..chains)
                .map(|k| values[k * per..(k + 1) * per].iter().sum::<C64>() / per as f64)
                .collect();
            let mm: C64 = means.iter().sum::<C64>() / chains as f64;
            let var_m = means.iter().map(|m| (m - mm).norm_sqr()).sum::<f64>() / (chains - 1) as f64;
            (var_m / chains as f64).sqrt()
        } else {
            (variance / n as f64).sqrt()
        };
        Stats { mean, error_of_mean, variance, n_samples: n }
    }

    pub fn is_finite(&self) -> bool {
        self.mean.re.is_finite() && self.mean.im.is_finite() && self.error_of_mean.is_finite() && self.variance.is_finite()
    }
}

impl std::fmt::Display for Stats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6} ± {:.2e} [σ²={:.2e}]", self.mean.re, self.error_of_mean, self.variance)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Series {
    re: Vec<f64>,
    im: Vec<f64>,
    sigma: Vec<f64>,
    variance: Vec<f64>,
}

/// Per-step records keyed by observable name, written as
/// `{"iters": [...], "Energy": {"Mean": {"real": [...], "imag": [...]},
/// "Sigma": [...], "Variance": [...]}, ...}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    axis: &'static str,
    steps: Vec<f64>,
    stats: BTreeMap<String, Series>,
    scalars: BTreeMap<String, Vec<f64>>,
}

impl RunLog {
    /// Log indexed by iteration number (`"iters"`).
    pub fn iterations() -> Self {
        RunLog { axis: "iters", steps: vec![], stats: BTreeMap::new(), scalars: BTreeMap::new() }
    }

    /// Log indexed by time (`"times"`).
    pub fn times() -> Self {
        RunLog { axis: "times", steps: vec![], stats: BTreeMap::new(), scalars: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Starts a new record at `step`.
    pub fn begin(&mut self, step: f64) {
        self.steps.push(step);
    }

    fn check(name: &str, v: f64) -> Result<()> {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("logged value '{name}'")))
        }
    }

    pub fn push_stats(&mut self, name: &str, s: &Stats) -> Result<()> {
        for v in [s.mean.re, s.mean.im, s.error_of_mean, s.variance] {
            Self::check(name, v)?;
        }
        let e = self.stats.entry(name.to_string()).or_default();
        e.re.push(s.mean.re);
        e.im.push(s.mean.im);
        e.sigma.push(s.error_of_mean);
        e.variance.push(s.variance);
        Ok(())
    }

    pub fn push_scalar(&mut self, name: &str, v: f64) -> Result<()> {
        Self::check(name, v)?;
        self.scalars.entry(name.to_string()).or_default().push(v);
        Ok(())
    }

    /// Real parts of an observable's means.
    pub fn means(&self, name: &str) -> Option<&[f64]> {
        self.stats.get(name).map(|s| s.re.as_slice())
    }

    pub fn sigmas(&self, name: &str) -> Option<&[f64]> {
        self.stats.get(name).map(|s| s.sigma.as_slice())
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.scalars.get(name).map(|s| s.as_slice())
    }

    pub fn observable_names(&self) -> impl Iterator<Item = &str> {
        self.stats.keys().map(|s| s.as_str())
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        let axis: Value = if self.axis == "iters" {
            self.steps.iter().map(|&s| json!(s as u64)).collect()
        } else {
            json!(self.steps)
        };
        m.insert(self.axis.to_string(), axis);
        for (k, s) in &self.stats {
            m.insert(
                k.clone(),
                json!({
                    "Mean": {"real": s.re, "imag": s.im},
                    "Sigma": s.sigma,
                    "Variance": s.variance,
                }),
            );
        }
        for (k, v) in &self.scalars {
            m.insert(k.clone(), json!(v));
        }
        Value::Object(m)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(&self.to_json()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        std::fs::write(path, s + "\n")?;
        Ok(())
    }

    /// One row per step: the axis, then the mean (real part) of every
    /// observable and every scalar, in name order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.axis == "iters" { "iter" } else { "time" });
        for k in self.stats.keys() {
            out.push_str(&format!(",{k}"));
        }
        for k in self.scalars.keys() {
            out.push_str(&format!(",{k}"));
        }
        out.push('\n');
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!("{s}"));
            for v in self.stats.values() {
                out.push_str(&v.re.get(i).map_or(String::from(","), |x| format!(",{x}")));
            }
            for v in self.scalars.values() {
                out.push_str(&v.get(i).map_or(String::from(","), |x| format!(",{x}")));
            }
            out.push('\n');
        }
        out
    }
}
