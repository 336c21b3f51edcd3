//! Partitions of an interval: construction, geometric descriptors, and the
//! δ-remesh relation between a coarse partition and a finer one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Relative slack used when comparing interval-length ratios against δ, so
/// that exact threshold cases (e.g. `U_4` against `U_2` at δ = 0.5) are not
/// rejected because of the last bit of a subtraction.
const RATIO_SLACK: f64 = 1e-9;

/// Strictly increasing breakpoints `z_0 < ... < z_n` of `[a, b] = [z_0, z_n]`.
///
/// Indices outside `0..=n` follow the extension rule `z_j = z_0` for `j < 0`
/// and `z_j = z_n` for `j > n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr", into = "PartitionRepr")]
pub struct Partition {
    breakpoints: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    breakpoints: Vec<f64>,
}

impl TryFrom<PartitionRepr> for Partition {
    type Error = Error;

    fn try_from(value: PartitionRepr) -> Result<Self> {
        Partition::new(value.breakpoints)
    }
}

impl From<Partition> for PartitionRepr {
    fn from(p: Partition) -> Self {
        PartitionRepr { breakpoints: p.breakpoints }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    Uniform,
    Chebyshev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemeshKind {
    Uniform,
    Chebyshev,
    Adaptive,
}

impl Partition {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidPartition {
                reason: "need at least two breakpoints".into(),
            });
        }
        if breakpoints.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidPartition {
                reason: "breakpoints must be finite".into(),
            });
        }
        let len = breakpoints[breakpoints.len() - 1] - breakpoints[0];
        let min_gap = 1e-14 * len;
        for (i, w) in breakpoints.windows(2).enumerate() {
            if !(w[1] - w[0] > min_gap) {
                return Err(Error::InvalidPartition {
                    reason: format!("breakpoints {i} and {} are not strictly increasing ({} >= {})", i + 1, w[0], w[1]),
                });
            }
        }
        Ok(Partition { breakpoints })
    }

    pub fn make(kind: PartitionKind, n: usize, domain: Interval) -> Result<Self> {
        match kind {
            PartitionKind::Uniform => Self::uniform(n, domain),
            PartitionKind::Chebyshev => Self::chebyshev(n, domain),
        }
    }

    /// `z_j = a + j (b - a) / n`.
    pub fn uniform(n: usize, domain: Interval) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidN { n });
        }
        let h = domain.len() / n as f64;
        let mut z: Vec<f64> = (0..=n).map(|j| domain.lo + j as f64 * h).collect();
        z[n] = domain.hi;
        Self::new(z)
    }

    /// `z_j = -cos(j π / n)` on `[-1, 1]`, mapped affinely onto `domain`.
    pub fn chebyshev(n: usize, domain: Interval) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidN { n });
        }
        let half = 0.5 * domain.len();
        let mid = domain.midpoint();
        let mut z: Vec<f64> = (0..=n)
            .map(|j| {
                // -cos(jπ/n) written as sin((2j - n)π / 2n): exact zero at the
                // middle and exact antisymmetry.
                let t = ((2 * j) as f64 - n as f64) * std::f64::consts::PI / (2 * n) as f64;
                mid + half * t.sin()
            })
            .collect();
        z[0] = domain.lo;
        z[n] = domain.hi;
        Self::new(z)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Number of intervals.
    pub fn n(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn a(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn b(&self) -> f64 {
        self.breakpoints[self.n()]
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.a(), self.b())
    }

    /// `z_j` with the extension rule.
    pub fn z(&self, j: isize) -> f64 {
        let n = self.n() as isize;
        self.breakpoints[j.clamp(0, n) as usize]
    }

    pub fn interval(&self, i: usize) -> Interval {
        Interval::new(self.breakpoints[i], self.breakpoints[i + 1])
    }

    /// `|J_j| = z_{j+1} - z_j` under the extension rule (zero out of range).
    pub fn len_ext(&self, j: isize) -> f64 {
        self.z(j + 1) - self.z(j)
    }

    /// Index of the interval holding `x`. Interior knots belong to the right
    /// interval, `b` to the last one; points outside `[a, b]` go to the
    /// nearest end interval.
    pub fn locate(&self, x: f64) -> usize {
        let n = self.n();
        let k = self.breakpoints.partition_point(|&z| z <= x);
        k.saturating_sub(1).min(n - 1)
    }

    /// `max_j |J_{j±1}| / |J_j|`.
    pub fn scale(&self) -> f64 {
        let n = self.n() as isize;
        (0..n)
            .map(|j| {
                let own = self.len_ext(j);
                self.len_ext(j - 1).max(self.len_ext(j + 1)) / own
            })
            .fold(0.0, f64::max)
    }

    /// Core intervals `[(z_{j-1}+z_j)/2, (z_j+z_{j+1})/2]`, `j = 0..=n`.
    pub fn core_intervals(&self) -> Vec<Interval> {
        let n = self.n() as isize;
        (0..=n)
            .map(|j| Interval::new(0.5 * (self.z(j - 1) + self.z(j)), 0.5 * (self.z(j) + self.z(j + 1))))
            .collect()
    }

    /// Adds `z_i + |J_i|/4` and `z_{i+1} - |J_i|/4` inside every interval.
    pub fn quarter_refine(&self) -> Partition {
        let mut z = Vec::with_capacity(3 * self.n() + 1);
        for i in 0..self.n() {
            let (lo, hi) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let q = 0.25 * (hi - lo);
            z.extend([lo, lo + q, hi - q]);
        }
        z.push(self.b());
        Partition { breakpoints: z }
    }

    /// Splits every interval into `k` equal parts.
    pub fn subdivide(&self, k: usize) -> Partition {
        let k = k.max(1);
        let mut z = Vec::with_capacity(k * self.n() + 1);
        for i in 0..self.n() {
            let (lo, hi) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let h = (hi - lo) / k as f64;
            z.extend((0..k).map(|m| lo + m as f64 * h));
        }
        z.push(self.b());
        Partition { breakpoints: z }
    }

    /// Image under `x -> origin + factor * x` (`factor > 0`).
    pub fn mapped(&self, origin: f64, factor: f64) -> Partition {
        Partition {
            breakpoints: self.breakpoints.iter().map(|z| origin + factor * z).collect(),
        }
    }

    /// Breakpoints strictly inside `(lo, hi)`.
    pub fn interior_points_in(&self, lo: f64, hi: f64) -> &[f64] {
        let i0 = self.breakpoints.partition_point(|&z| z <= lo);
        let i1 = self.breakpoints.partition_point(|&z| z < hi);
        &self.breakpoints[i0..i1.max(i0)]
    }

    pub fn max_gap(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn min_gap(&self) -> f64 {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Whether `other` spans the same `[a, b]` up to rounding.
    pub fn same_domain(&self, other: &Partition) -> bool {
        let tol = 1e-12 * self.domain().len().max(other.domain().len());
        (self.a() - other.a()).abs() <= tol && (self.b() - other.b()).abs() <= tol
    }
}

/// Result of checking one partition against another for the δ-remesh
/// relation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemeshVerdict {
    pub is_remesh: bool,
    pub worst_j: usize,
    /// Largest observed `max-length / min-neighbour-length` over all `j`.
    pub worst_ratio: f64,
}

/// Checks whether `refined` is a δ-remesh of `coarse`.
///
/// For each coarse interval `(z_j, z_{j+1})`, the longest refined interval
/// meeting it must be at most δ times the shortest of `J_{j-1}, J_j, J_{j+1}`,
/// where the neighbours beyond the ends count as infinitely long.
pub fn is_delta_remesh(refined: &Partition, coarse: &Partition, delta: f64) -> Result<RemeshVerdict> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if !refined.same_domain(coarse) {
        return Err(Error::DomainMismatch {
            a0: refined.a(),
            b0: refined.b(),
            a1: coarse.a(),
            b1: coarse.b(),
        });
    }
    let t = refined.breakpoints();
    let n = coarse.n();
    let mut worst = (0usize, 0.0f64);
    for j in 0..n {
        let (zl, zr) = (coarse.breakpoints[j], coarse.breakpoints[j + 1]);
        // Refined intervals [t_i, t_{i+1}] with t_{i+1} > zl and t_i < zr.
        let first = t.partition_point(|&x| x <= zl).saturating_sub(1);
        let last = t.partition_point(|&x| x < zr).saturating_sub(1).min(t.len() - 2);
        let longest = (first..=last).map(|i| t[i + 1] - t[i]).fold(0.0, f64::max);
        let left = if j == 0 { f64::INFINITY } else { coarse.len_ext(j as isize - 1) };
        let right = if j + 1 == n { f64::INFINITY } else { coarse.len_ext(j as isize + 1) };
        let shortest = left.min(right).min(zr - zl);
        let ratio = longest / shortest;
        if ratio > worst.1 {
            worst = (j, ratio);
        }
    }
    Ok(RemeshVerdict {
        is_remesh: worst.1 <= delta * (1.0 + RATIO_SLACK),
        worst_j: worst.0,
        worst_ratio: worst.1,
    })
}

/// Produces a δ-remesh of `coarse`.
///
/// `Uniform` and `Chebyshev` start from `m = ceil(n/δ)` and
/// `m = ceil(max(25/δ, 1) n)`, which suffice when `coarse` is itself uniform or
/// Chebyshev; for other inputs `m` is raised to a value that works for any
/// partition with the same shortest interval. `Adaptive` splits each `J_j`
/// into equal parts sized against its neighbours.
pub fn default_remesh(coarse: &Partition, delta: f64, kind: RemeshKind) -> Result<Partition> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    let n = coarse.n() as f64;
    let domain = coarse.domain();
    let candidate = match kind {
        RemeshKind::Uniform => {
            let m = (n / delta).ceil() as usize;
            let z = Partition::uniform(m.max(1), domain)?;
            if is_delta_remesh(&z, coarse, delta)?.is_remesh {
                z
            } else {
                let m = (domain.len() / (delta * coarse.min_gap())).ceil() as usize;
                Partition::uniform(m.max(1), domain)?
            }
        }
        RemeshKind::Chebyshev => {
            let m = ((25.0 / delta).max(1.0) * n).ceil() as usize;
            let z = Partition::chebyshev(m.max(1), domain)?;
            if is_delta_remesh(&z, coarse, delta)?.is_remesh {
                z
            } else {
                // The longest Chebyshev interval is below π(b-a)/(2m).
                let m = (std::f64::consts::PI * domain.len() / (2.0 * delta * coarse.min_gap())).ceil() as usize;
                Partition::chebyshev(m.max(1), domain)?
            }
        }
        RemeshKind::Adaptive => {
            let nn = coarse.n();
            let mut z = Vec::new();
            for j in 0..nn {
                let jj = j as isize;
                let own = coarse.len_ext(jj);
                let left = if j == 0 { f64::INFINITY } else { coarse.len_ext(jj - 1) };
                let right = if j + 1 == nn { f64::INFINITY } else { coarse.len_ext(jj + 1) };
                let target = delta * own.min(left).min(right);
                let k = ((own / target) * (1.0 - RATIO_SLACK)).ceil().max(1.0) as usize;
                let lo = coarse.breakpoints[j];
                let h = own / k as f64;
                z.extend((0..k).map(|m| lo + m as f64 * h));
            }
            z.push(coarse.b());
            Partition::new(z)?
        }
    };
    Ok(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::new(-1.0, 1.0)
    }

    #[test]
    fn make_partition_examples() {
        assert_eq!(Partition::uniform(2, unit()).unwrap().breakpoints(), &[-1.0, 0.0, 1.0]);
        assert_eq!(Partition::chebyshev(2, unit()).unwrap().breakpoints(), &[-1.0, 0.0, 1.0]);
        let ch4 = Partition::chebyshev(4, unit()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (got, want) in ch4.breakpoints().iter().zip([-1.0, -s, 0.0, s, 1.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(Partition::uniform(0, unit()), Err(Error::InvalidN { n: 0 }));
    }

    #[test]
    fn rejects_non_increasing() {
        assert!(Partition::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Partition::new(vec![0.0]).is_err());
        assert!(Partition::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn scale_examples() {
        assert!((Partition::uniform(5, unit()).unwrap().scale() - 1.0).abs() < 1e-12);
        assert_eq!(Partition::uniform(4, unit()).unwrap().scale(), 1.0);
        assert_eq!(Partition::uniform(1, unit()).unwrap().scale(), 0.0);
    }

    #[test]
    fn core_interval_examples() {
        let z = Partition::uniform(2, unit()).unwrap();
        let cores = z.core_intervals();
        assert_eq!(cores, vec![Interval::new(-1.0, -0.5), Interval::new(-0.5, 0.5), Interval::new(0.5, 1.0)]);
        let u4 = Partition::uniform(4, unit()).unwrap();
        assert_eq!(u4.core_intervals()[2], Interval::new(-0.25, 0.25));
    }

    #[test]
    fn quarter_refine_examples() {
        let z = Partition::uniform(1, unit()).unwrap().quarter_refine();
        assert_eq!(z.breakpoints(), &[-1.0, -0.5, 0.5, 1.0]);
        let z = Partition::uniform(2, unit()).unwrap().quarter_refine();
        assert_eq!(z.breakpoints(), &[-1.0, -0.75, -0.25, 0.0, 0.25, 0.75, 1.0]);
    }

    #[test]
    fn remesh_examples() {
        let u2 = Partition::uniform(2, unit()).unwrap();
        let u4 = Partition::uniform(4, unit()).unwrap();
        assert!(is_delta_remesh(&u4, &u2, 0.5).unwrap().is_remesh);
        let v = is_delta_remesh(&u2, &u2, 0.5).unwrap();
        assert!(!v.is_remesh);
        assert_eq!(v.worst_ratio, 1.0);
        assert_eq!(default_remesh(&u2, 0.5, RemeshKind::Uniform).unwrap(), u4);
        let ch4 = Partition::chebyshev(4, unit()).unwrap();
        let r = default_remesh(&ch4, 1.0, RemeshKind::Chebyshev).unwrap();
        assert_eq!(r.n(), 100);
    }

    #[test]
    fn remesh_domain_mismatch() {
        let a = Partition::uniform(2, unit()).unwrap();
        let b = Partition::uniform(2, Interval::new(0.0, 1.0)).unwrap();
        assert!(matches!(is_delta_remesh(&a, &b, 0.5), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn adaptive_remesh_of_graded_partition() {
        let z = Partition::new(vec![-1.0, -0.9, -0.5, 0.3, 1.0]).unwrap();
        for delta in [0.03, 0.2, 1.0] {
            let r = default_remesh(&z, delta, RemeshKind::Adaptive).unwrap();
            assert!(is_delta_remesh(&r, &z, delta).unwrap().is_remesh);
            for kind in [RemeshKind::Uniform, RemeshKind::Chebyshev] {
                let r = default_remesh(&z, delta, kind).unwrap();
                assert!(is_delta_remesh(&r, &z, delta).unwrap().is_remesh, "{kind:?} {delta}");
            }
        }
    }

    #[test]
    fn locate_uses_right_piece_at_knots() {
        let z = Partition::uniform(2, unit()).unwrap();
        assert_eq!(z.locate(0.0), 1);
        assert_eq!(z.locate(-0.5), 0);
        assert_eq!(z.locate(1.0), 1);
        assert_eq!(z.locate(5.0), 1);
        assert_eq!(z.locate(-5.0), 0);
    }
}
