//! Local error report of a smoothing: `‖s - s̃‖` against `ω_{q+r+1}(s)` on
//! every core interval.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interval::Interval;
use crate::norms::{lp_norm_segments, lp_quasinorm, modulus, Exponent};
use crate::partition::Partition;
use crate::poly::Polynomial;
use crate::ppf::{PiecewisePoly, ShapeSpec};
use crate::smoothing::SmoothOptions;

/// A modulus at most this fraction of `1 + ‖s‖` counts as zero: `s` is a
/// polynomial of degree `< k` on the interval up to rounding.
const ZERO_MODULUS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub q: usize,
    pub r: usize,
    pub p_list: Vec<Exponent>,
    pub resolution: usize,
    pub tol: f64,
}

impl ReportConfig {
    pub fn new(q: usize, r: usize, opts: &SmoothOptions) -> Self {
        ReportConfig {
            q,
            r,
            p_list: opts.p_list.clone(),
            resolution: opts.resolution,
            tol: opts.tol,
        }
    }

    /// Order of the modulus the errors are compared with.
    pub fn modulus_order(&self) -> usize {
        self.q + self.r + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub p: Exponent,
    pub error: f64,
    pub modulus: f64,
    /// `error / modulus`; absent when the modulus vanishes.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreRecord {
    pub j: usize,
    pub interval: Interval,
    pub entries: Vec<ErrorEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub q: usize,
    pub r: usize,
    pub modulus_order: usize,
    pub records: Vec<CoreRecord>,
    pub shape_certified: bool,
    /// Largest `μ` with `s̃ ∈ C^μ` up to the tolerance.
    pub smoothness_achieved: i64,
    /// Maximal intervals on which `s̃` has exactly the pieces of `s`.
    pub coincidence_regions: Vec<Interval>,
}

impl SmoothingReport {
    /// Largest ratio over all records and exponents, if any is defined.
    pub fn max_ratio(&self) -> Option<f64> {
        self.records
            .iter()
            .flat_map(|r| r.entries.iter().filter_map(|e| e.ratio))
            .fold(None, |m, x| Some(m.map_or(x, |m: f64| m.max(x))))
    }
}

/// `s - s̃` on `j` as polynomial segments, skipping those where the two
/// coincide exactly.
fn difference_segments(s: &PiecewisePoly, s_tilde: &PiecewisePoly, j: Interval) -> Vec<(Interval, Polynomial)> {
    let mut out = Vec::new();
    for (seg, pt) in s_tilde.segments(j) {
        for (part, ps) in s.segments(seg) {
            if ps != pt {
                out.push((part, ps.sub(pt)));
            }
        }
    }
    out
}

fn coincidence_regions(s: &PiecewisePoly, s_tilde: &PiecewisePoly) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    let t = s_tilde.breakpoints();
    for (i, w) in t.windows(2).enumerate() {
        let same = s.segments(Interval::new(w[0], w[1])).iter().all(|(_, p)| **p == s_tilde.pieces()[i]);
        if !same {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.hi == w[0] => last.hi = w[1],
            _ => out.push(Interval::new(w[0], w[1])),
        }
    }
    out
}

/// Per-core-interval errors `‖s - s̃‖_{L_p(J_j)}` and moduli
/// `ω_{q+r+1}(s, |J_j|, J_j)_p` (core intervals clipped to the domain), plus
/// the shape and smoothness of `s̃`.
pub fn smoothing_report(s: &PiecewisePoly, s_tilde: &PiecewisePoly, z: &Partition, cfg: &ReportConfig) -> Result<SmoothingReport> {
    let dom = z.domain();
    let k = cfg.modulus_order();
    let records = z
        .core_intervals()
        .into_par_iter()
        .enumerate()
        .map(|(j, core)| {
            let interval = Interval::new(core.lo.max(dom.lo), core.hi.min(dom.hi));
            let diff = difference_segments(s, s_tilde, interval);
            let entries = cfg
                .p_list
                .iter()
                .map(|&p| {
                    let error = lp_norm_segments(&diff, p)?;
                    let m = modulus(s, k, interval.len(), interval, p, cfg.resolution)?.value;
                    let size = lp_quasinorm(s, p, interval)?;
                    let ratio = (m > ZERO_MODULUS * (1.0 + size)).then(|| error / m);
                    Ok(ErrorEntry { p, error, modulus: m, ratio })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CoreRecord { j, interval, entries })
        })
        .collect::<Result<Vec<_>>>()?;
    let shape_certified = s_tilde.is_q_monotone(&ShapeSpec::with_tol(cfg.q, cfg.tol)?)?;
    Ok(SmoothingReport {
        q: cfg.q,
        r: cfg.r,
        modulus_order: k,
        records,
        shape_certified,
        smoothness_achieved: s_tilde.smoothness_class(cfg.tol),
        coincidence_regions: coincidence_regions(s, s_tilde),
    })
}
