//! Approximation-rate experiments: shape-preserving broken-line interpolants
//! of smooth targets, smoothed on a remesh, with the error fitted against
//! `n` on a log-log scale.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::norms::{dt_modulus, modulus, sampled_max, Evaluable, Exponent, QUAD_REL_TOL};
use crate::partition::{default_remesh, Partition, PartitionKind, RemeshKind};
use crate::poly::Polynomial;
use crate::ppf::{PiecewisePoly, ShapeSpec};
use crate::quadrature;
use crate::smoothing::{smooth_shape_q12, GlueConfig, SmoothOptions};

/// Order of the modulus the rates are measured against (`k + ν = 2`, `ν = 0`).
pub const MODULUS_ORDER: usize = 2;

/// Samples per interval of `Z` when estimating the sup of `f - s̃`.
const SUP_SAMPLES: usize = 64;

/// A target function from the registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Target {
    Exp,
    /// `x |x|`, increasing but not convex.
    XAbsX,
    /// `ln(1 + e^x)`.
    Softplus,
    Linear,
    /// Broken line through the given points (`x` strictly increasing).
    Samples {
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

impl Target {
    pub fn validate(&self) -> Result<()> {
        if let Target::Samples { x, y } = self {
            if x.len() < 2 || x.len() != y.len() {
                return Err(Error::invalid("samples need at least two (x, y) pairs of equal length"));
            }
            if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(y).any(|v| !v.is_finite()) {
                return Err(Error::invalid("sample abscissae must be finite and strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Target::Exp => t.exp(),
            Target::XAbsX => t * t.abs(),
            Target::Softplus => t.max(0.0) + (-t.abs()).exp().ln_1p(),
            Target::Linear => t,
            Target::Samples { x, y } => {
                let i = x.partition_point(|&v| v <= t).clamp(1, x.len() - 1);
                let (x0, x1, y0, y1) = (x[i - 1], x[i], y[i - 1], y[i]);
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }
}

impl Evaluable for Target {
    fn eval(&self, x: f64) -> f64 {
        self.value(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudyConfig {
    pub target: Target,
    pub q: usize,
    pub r: usize,
    pub p: Exponent,
    pub kind: PartitionKind,
    pub n_list: Vec<usize>,
    /// Recorded with the results; the study itself draws no random numbers.
    pub seed: u64,
    #[serde(default = "unit_domain")]
    pub domain: Interval,
    /// `δ` of the remesh of the quarter-point refinement; the operative `δ`
    /// of the smoothing when absent.
    #[serde(default)]
    pub remesh_delta: Option<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn unit_domain() -> Interval {
    Interval::new(-1.0, 1.0)
}

fn default_resolution() -> usize {
    64
}

impl RateStudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        if self.q != 1 && self.q != 2 {
            return Err(Error::invalid(format!("rate studies use q = 1 or 2, got {}", self.q)));
        }
        GlueConfig::new(self.q, self.r, Default::default())?;
        if self.n_list.len() < 4 || self.n_list.windows(2).any(|w| w[1] <= w[0]) || self.n_list[0] == 0 {
            return Err(Error::invalid("n_list must be strictly increasing, positive, with at least 4 entries"));
        }
        if self.kind == PartitionKind::Chebyshev && self.domain != unit_domain() {
            return Err(Error::invalid("Chebyshev studies run on [-1, 1]"));
        }
        if !(self.domain.hi > self.domain.lo) {
            return Err(Error::invalid("empty domain"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    /// `‖f - s̃‖_p` of the smoothed interpolant: an upper bound for the
    /// shape-constrained best error.
    pub achieved_error: f64,
    pub modulus_value: f64,
    /// Absent when the modulus is at rounding level.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudyReport {
    pub config: RateStudyConfig,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `ln error` against `ln n` over the rows with a
    /// positive error; `0` when there are fewer than two.
    pub fitted_order: f64,
    /// Every error is at rounding level: the target was reproduced.
    pub exact_reproduction: bool,
}

/// Relative error size counted as exact reproduction.
const EXACT: f64 = 1e-12;

impl RateStudyReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "error", "modulus", "ratio"]).map_err(csv_err)?;
        for row in &self.rows {
            let ratio = row.ratio.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([row.n.to_string(), row.achieved_error.to_string(), row.modulus_value.to_string(), ratio])
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io { message: e.to_string() })?;
        String::from_utf8(bytes).map_err(|e| Error::Io { message: e.to_string() })
    }

    /// Writes the CSV table to `csv_path` and the full report as JSON next to
    /// it (same stem, `.json`).
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.to_csv()?)?;
        std::fs::write(csv_path.with_extension("json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io { message: e.to_string() }
}

/// The broken line through `(z_i, f(z_i))`, certified `q`-monotone.
pub fn shape_interpolant(f: &dyn Evaluable, z: &Partition, q: usize) -> Result<PiecewisePoly> {
    let bp = z.breakpoints();
    let values: Vec<f64> = bp.iter().map(|&x| f.eval(x)).collect();
    let pieces = bp
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| Polynomial::new(x[0], vec![y[0], (y[1] - y[0]) / (x[1] - x[0])]))
        .collect();
    let s = PiecewisePoly::new(z.clone(), pieces)?;
    let v = s.shape_verdict(&ShapeSpec::new(q)?)?;
    if !v.holds {
        return Err(Error::ShapeViolated {
            witness: v.witness.unwrap_or(f64::NAN),
        });
    }
    Ok(s)
}

/// `‖f - s‖_{L_p}` over the domain of `z`, interval by interval.
pub fn approximation_error(f: &dyn Evaluable, s: &PiecewisePoly, p: Exponent, z: &Partition) -> Result<f64> {
    p.check()?;
    let parts = z.breakpoints().windows(2).map(|w| (w[0], w[1]));
    Ok(match p {
        Exponent::Infinity => parts
            .map(|(lo, hi)| sampled_max(|x| (f.eval(x) - s.eval(x)).abs(), lo, hi, SUP_SAMPLES))
            .fold(0.0, f64::max),
        Exponent::Finite(p) => parts
            .map(|(lo, hi)| quadrature::integrate(|x| (f.eval(x) - s.eval(x)).abs().powf(p), lo, hi, QUAD_REL_TOL))
            .sum::<f64>()
            .powf(1.0 / p),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(n, d), &(x, y)| (n + (x - mx) * (y - my), d + (x - mx) * (x - mx)));
    num / den
}

fn study_row(cfg: &RateStudyConfig, n: usize) -> Result<RateRow> {
    let f = &cfg.target;
    let z = Partition::make(cfg.kind, n, cfg.domain)?;
    let s = shape_interpolant(f, &z, cfg.q)?;
    let delta = match cfg.remesh_delta {
        Some(d) => d,
        None => GlueConfig::new(cfg.q, cfg.r, Default::default())?.operative_delta(),
    };
    let zt = default_remesh(&z.quarter_refine(), delta, RemeshKind::Adaptive)?;
    // The per-core-interval report is not needed here.
    let opts = SmoothOptions {
        p_list: Vec::new(),
        ..Default::default()
    };
    let (s_tilde, _) = smooth_shape_q12(&s, cfg.q, cfg.r, &z, &zt, &opts)?;
    let achieved_error = approximation_error(f, &s_tilde, cfg.p, &z)?;
    let step = 1.0 / n as f64;
    let modulus_value = match cfg.kind {
        PartitionKind::Uniform => modulus(f, MODULUS_ORDER, cfg.domain.len() * step, cfg.domain, cfg.p, cfg.resolution)?.value,
        PartitionKind::Chebyshev => dt_modulus(f, MODULUS_ORDER, step, cfg.p, cfg.resolution)?.value,
    };
    let size = 1.0 + z.breakpoints().iter().map(|&x| f.value(x).abs()).fold(0.0, f64::max);
    let ratio = (modulus_value > EXACT * size).then(|| achieved_error / modulus_value);
    Ok(RateRow {
        n,
        achieved_error,
        modulus_value,
        ratio,
    })
}

/// Runs the study over `n_list`; rows come back in the order of `n_list`.
pub fn run_rate_study(cfg: &RateStudyConfig) -> Result<RateStudyReport> {
    cfg.validate()?;
    let rows = cfg.n_list.par_iter().map(|&n| study_row(cfg, n)).collect::<Result<Vec<_>>>()?;
    let scale = 1.0 + rows.iter().map(|r| r.modulus_value).fold(0.0, f64::max);
    let exact_reproduction = rows.iter().all(|r| r.achieved_error <= EXACT * scale);
    let points: Vec<(f64, f64)> = rows.iter().filter(|r| r.achieved_error > 0.0).map(|r| (r.n as f64, r.achieved_error)).collect();
    let fitted_order = if exact_reproduction || points.len() < 2 {
        0.0
    } else {
        log_log_slope(&points)
    };
    Ok(RateStudyReport {
        config: cfg.clone(),
        rows,
        fitted_order,
        exact_reproduction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolant_of_exp_is_convex() {
        let z = Partition::uniform(4, unit_domain()).unwrap();
        let s = shape_interpolant(&Target::Exp, &z, 2).unwrap();
        for &x in z.breakpoints() {
            assert!((s.eval(x) - x.exp()).abs() < 1e-15);
        }
        assert!(matches!(shape_interpolant(&Target::XAbsX, &z, 2), Err(Error::ShapeViolated { .. })));
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-2.0))).collect();
        assert!((log_log_slope(&pts) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn samples_target_interpolates() {
        let t = Target::Samples {
            x: vec![0.0, 1.0, 3.0],
            y: vec![0.0, 2.0, 3.0],
        };
        assert_eq!(t.value(0.5), 1.0);
        assert_eq!(t.value(2.0), 2.5);
        assert_eq!(t.value(-1.0), -2.0);
    }
}
