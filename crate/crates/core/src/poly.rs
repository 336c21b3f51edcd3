//! Dense polynomials in a shifted monomial basis.
//!
//! A [`Polynomial`] stores `coeffs[k]` as the coefficient of `(x - center)^k`.
//! Every piece of a [`crate::PiecewisePoly`] is one of these, usually centered
//! at the left endpoint of its interval. Evaluation is total on the reals, so a
//! piece can always be read as its own polynomial extension.

use serde::{Deserialize, Serialize};

use crate::interval::Interval;

/// Maximum number of halvings used by [`certify_nonneg`].
pub const CERTIFY_MAX_DEPTH: usize = 40;

/// Upper bound on the number of boxes examined by one certification.
const CERTIFY_MAX_BOXES: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct Polynomial {
    center: f64,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    center: f64,
    coeffs: Vec<f64>,
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = String;

    fn try_from(value: PolynomialRepr) -> Result<Self, Self::Error> {
        if value.coeffs.is_empty() {
            return Err("polynomial needs at least one coefficient".into());
        }
        if !value.center.is_finite() || value.coeffs.iter().any(|c| !c.is_finite()) {
            return Err("polynomial data must be finite".into());
        }
        Ok(Polynomial {
            center: value.center,
            coeffs: value.coeffs,
        })
    }
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        PolynomialRepr {
            center: p.center,
            coeffs: p.coeffs,
        }
    }
}

impl Polynomial {
    /// Builds a polynomial from coefficients of `(x - center)^k`.
    ///
    /// An empty coefficient vector is treated as the zero polynomial.
    pub fn new(center: f64, coeffs: Vec<f64>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        Polynomial { center, coeffs }
    }

    pub fn constant(value: f64) -> Self {
        Polynomial {
            center: 0.0,
            coeffs: vec![value],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// The identity polynomial `x`.
    pub fn identity() -> Self {
        Polynomial {
            center: 0.0,
            coeffs: vec![0.0, 1.0],
        }
    }

    /// Builds a polynomial from ordinary monomial coefficients (center 0).
    pub fn from_monomial(coeffs: &[f64]) -> Self {
        Self::new(0.0, coeffs.to_vec())
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Declared degree (`len - 1`); trailing zeros are not stripped.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Degree ignoring trailing exact zeros.
    pub fn effective_degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = x - self.center;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// Value of the `k`-th derivative at `x`.
    pub fn derivative_at(&self, x: f64, k: usize) -> f64 {
        if k > self.degree() {
            return 0.0;
        }
        let u = x - self.center;
        let mut acc = 0.0;
        for j in (k..self.coeffs.len()).rev() {
            acc = acc * u + self.coeffs[j] * falling_factorial(j, k);
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial {
                center: self.center,
                coeffs: vec![0.0],
            };
        }
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(j, &c)| c * j as f64).collect();
        Polynomial { center: self.center, coeffs }
    }

    pub fn nth_derivative(&self, k: usize) -> Polynomial {
        if k > self.degree() {
            return Polynomial {
                center: self.center,
                coeffs: vec![0.0],
            };
        }
        let coeffs = (k..self.coeffs.len()).map(|j| self.coeffs[j] * falling_factorial(j, k)).collect();
        Polynomial { center: self.center, coeffs }
    }

    /// Antiderivative vanishing at the center.
    pub fn antiderivative(&self) -> Polynomial {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(self.coeffs.iter().enumerate().map(|(j, &c)| c / (j + 1) as f64));
        Polynomial { center: self.center, coeffs }
    }

    /// The same polynomial expressed around a new center (Taylor shift).
    pub fn recentered(&self, new_center: f64) -> Polynomial {
        if new_center == self.center {
            return self.clone();
        }
        let h = new_center - self.center;
        let mut c = self.coeffs.clone();
        let n = c.len();
        // Repeated synthetic division by (u - h).
        for i in 0..n {
            for j in (i..n - 1).rev() {
                c[j] += h * c[j + 1];
            }
        }
        Polynomial { center: new_center, coeffs: c }
    }

    /// `p(x + shift)` as a polynomial in `x`. Exact: only the center moves.
    pub fn shifted(&self, shift: f64) -> Polynomial {
        Polynomial {
            center: self.center - shift,
            coeffs: self.coeffs.clone(),
        }
    }

    /// `p(origin + scale * y)` as a polynomial in `y`.
    pub fn compose_affine(&self, origin: f64, scale: f64) -> Polynomial {
        // Center in y-coordinates that maps onto our own center.
        let y_center = (self.center - origin) / scale;
        let mut pow = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let v = c * pow;
                pow *= scale;
                v
            })
            .collect();
        Polynomial { center: y_center, coeffs }
    }

    pub fn scaled(&self, factor: f64) -> Polynomial {
        Polynomial {
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_constant(&self, value: f64) -> Polynomial {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// Sum, expressed around `self`'s center.
    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let other = other.recentered(self.center);
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| self.coeffs.get(k).copied().unwrap_or(0.0) + other.coeffs.get(k).copied().unwrap_or(0.0))
            .collect();
        Polynomial { center: self.center, coeffs }
    }

    /// Difference, expressed around `self`'s center.
    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scaled(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let other = other.recentered(self.center);
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial { center: self.center, coeffs }
    }

    pub fn powi(&self, n: u32) -> Polynomial {
        let mut acc = Polynomial {
            center: self.center,
            coeffs: vec![1.0],
        };
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Definite integral over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let f = self.antiderivative();
        f.eval(hi) - f.eval(lo)
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Sum of `|c_j| * C(j,k) * |x - center|^(j-k) * k!`, an upper bound on the
    /// magnitude of every term entering `p^(k)(x)`. Used to scale tolerances.
    pub fn derivative_magnitude_at(&self, x: f64, k: usize) -> f64 {
        let u = (x - self.center).abs();
        let mut acc = 0.0;
        for j in (k..self.coeffs.len()).rev() {
            acc = acc * u + self.coeffs[j].abs() * falling_factorial(j, k);
        }
        acc
    }

    /// `Σ |c_j| ρ^j` with `ρ` the largest distance from the center to `[lo,
    /// hi]`: a bound on `|p|` there.
    pub fn magnitude_on(&self, lo: f64, hi: f64) -> f64 {
        let u = (lo - self.center).abs().max((hi - self.center).abs());
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c.abs())
    }

    /// Pads the coefficient vector with zeros up to `degree`.
    pub fn padded(&self, degree: usize) -> Polynomial {
        let mut out = self.clone();
        if out.coeffs.len() < degree + 1 {
            out.coeffs.resize(degree + 1, 0.0);
        }
        out
    }

    /// Bernstein coefficients of `p` on `[lo, hi]`, degree `self.degree()`.
    pub fn bernstein_coeffs(&self, lo: f64, hi: f64) -> Vec<f64> {
        let local = self.recentered(lo);
        let n = local.degree();
        let w = hi - lo;
        let mut pw = 1.0;
        let a: Vec<f64> = local
            .coeffs
            .iter()
            .map(|&c| {
                let v = c * pw;
                pw *= w;
                v
            })
            .collect();
        (0..=n).map(|i| (0..=i).map(|k| binomial(i, k) / binomial(n, k) * a[k]).sum()).collect()
    }
}

pub(crate) fn falling_factorial(j: usize, k: usize) -> f64 {
    ((j - k + 1)..=j).fold(1.0, |acc, v| acc * v as f64)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Real roots of `p` in `[lo, hi]` where `p` changes sign (or vanishes exactly
/// at a critical point), sorted ascending.
///
/// The interval is split at the roots of `p'` (found recursively), so `p` is
/// monotone on every part and each sign change brackets exactly one root.
pub fn real_roots(p: &Polynomial, lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return Vec::new();
    }
    let local = p.recentered(lo);
    let deg = local.effective_degree();
    let scale = lo.abs().max(hi.abs()).max(hi - lo);
    let xtol = 1e-13 * scale;
    let mut roots = Vec::new();
    match deg {
        0 => {}
        1 => {
            let r = lo - local.coeffs[0] / local.coeffs[1];
            if r >= lo && r <= hi {
                roots.push(r);
            }
        }
        _ => {
            let crit = real_roots(&local.derivative(), lo, hi);
            let mut pts = Vec::with_capacity(crit.len() + 2);
            pts.push(lo);
            pts.extend(crit.into_iter().filter(|&c| c > lo && c < hi));
            pts.push(hi);
            for w in pts.windows(2) {
                let (u, v) = (w[0], w[1]);
                let (fu, fv) = (local.eval(u), local.eval(v));
                if fu == 0.0 {
                    push_unique(&mut roots, u, xtol);
                } else if fu * fv < 0.0 {
                    push_unique(&mut roots, bisect(&local, u, v, fu, xtol), xtol);
                }
            }
            if local.eval(hi) == 0.0 {
                push_unique(&mut roots, hi, xtol);
            }
        }
    }
    roots
}

fn push_unique(roots: &mut Vec<f64>, r: f64, tol: f64) {
    if roots.last().map_or(true, |&last| (r - last).abs() > tol) {
        roots.push(r);
    }
}

fn bisect(p: &Polynomial, mut u: f64, mut v: f64, mut fu: f64, xtol: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (u + v);
        if v - u <= xtol || m <= u || m >= v {
            break;
        }
        let fm = p.eval(m);
        if fm == 0.0 {
            return m;
        }
        if fm * fu < 0.0 {
            v = m;
        } else {
            u = m;
            fu = fm;
        }
    }
    0.5 * (u + v)
}

/// `max_{x in J} |p(x)|` together with a maximizing point.
pub fn sup_norm_with_arg(p: &Polynomial, j: Interval) -> (f64, f64) {
    let mut best = (p.eval(j.lo).abs(), j.lo);
    let fb = p.eval(j.hi).abs();
    if fb > best.0 {
        best = (fb, j.hi);
    }
    if p.effective_degree() >= 2 {
        for c in real_roots(&p.derivative(), j.lo, j.hi) {
            let v = p.eval(c).abs();
            if v > best.0 {
                best = (v, c);
            }
        }
    }
    best
}

/// Exact `C(J)` norm of a polynomial.
pub fn sup_norm_poly(p: &Polynomial, j: Interval) -> f64 {
    sup_norm_with_arg(p, j).0
}

/// `max_{x in J} p(x)` together with a maximizing point.
pub fn max_with_arg(p: &Polynomial, j: Interval) -> (f64, f64) {
    let mut best = (p.eval(j.lo), j.lo);
    let fb = p.eval(j.hi);
    if fb > best.0 {
        best = (fb, j.hi);
    }
    if p.effective_degree() >= 2 {
        for c in real_roots(&p.derivative(), j.lo, j.hi) {
            let v = p.eval(c);
            if v > best.0 {
                best = (v, c);
            }
        }
    }
    best
}

/// Outcome of a nonnegativity certification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Certificate {
    Nonnegative,
    /// `p(witness) < -tol`.
    Negative {
        witness: f64,
        value: f64,
    },
    /// Subdivision budget exhausted without a verdict.
    Indeterminate,
}

impl Certificate {
    pub fn is_nonnegative(&self) -> bool {
        matches!(self, Certificate::Nonnegative)
    }
}

/// Certifies `p >= -tol` on `J` through Bernstein coefficients with adaptive
/// de Casteljau subdivision (at most [`CERTIFY_MAX_DEPTH`] levels).
pub fn certify_nonneg(p: &Polynomial, j: Interval, tol: f64) -> Certificate {
    let n = p.degree();
    let root = p.bernstein_coeffs(j.lo, j.hi);
    let mut stack = vec![(j.lo, j.hi, root, 0usize)];
    let mut boxes = 0usize;
    let mut undecided = false;
    while let Some((lo, hi, b, depth)) = stack.pop() {
        boxes += 1;
        for (x, v) in [(lo, b[0]), (hi, b[n])] {
            if v < -tol {
                let exact = p.eval(x);
                if exact < -tol {
                    return Certificate::Negative { witness: x, value: exact };
                }
            }
        }
        if b.iter().all(|&c| c >= -tol) {
            continue;
        }
        if depth >= CERTIFY_MAX_DEPTH || boxes >= CERTIFY_MAX_BOXES {
            undecided = true;
            continue;
        }
        let (left, right) = de_casteljau_split(&b);
        let mid = 0.5 * (lo + hi);
        let vm = p.eval(mid);
        if vm < -tol {
            return Certificate::Negative { witness: mid, value: vm };
        }
        // Depth-first, left to right, so the leftmost witness wins.
        stack.push((mid, hi, right, depth + 1));
        stack.push((lo, mid, left, depth + 1));
    }
    if undecided {
        Certificate::Indeterminate
    } else {
        Certificate::Nonnegative
    }
}

fn de_casteljau_split(b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = b.len();
    let mut work = b.to_vec();
    let mut left = Vec::with_capacity(n);
    let mut right = vec![0.0; n];
    left.push(work[0]);
    right[n - 1] = work[n - 1];
    for level in 1..n {
        for i in 0..n - level {
            work[i] = 0.5 * (work[i] + work[i + 1]);
        }
        left.push(work[0]);
        right[n - 1 - level] = work[n - 1 - level];
    }
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn recentering_preserves_values() {
        let p = Polynomial::new(0.3, vec![1.0, -2.0, 0.5, 3.0]);
        let q = p.recentered(-1.7);
        for x in [-2.0, -0.1, 0.0, 0.9, 4.0] {
            assert!((p.eval(x) - q.eval(x)).abs() < 1e-11 * (1.0 + p.eval(x).abs()));
        }
    }

    #[test]
    fn derivative_at_matches_nth_derivative() {
        let p = Polynomial::new(0.5, vec![1.0, 2.0, -3.0, 4.0, 0.25]);
        for k in 0..6 {
            let d = p.nth_derivative(k);
            assert!((d.eval(1.3) - p.derivative_at(1.3, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_affine_evaluates_correctly() {
        let p = Polynomial::new(0.2, vec![0.5, -1.0, 2.0]);
        let q = p.compose_affine(1.5, -0.25);
        for y in [-3.0, 0.0, 2.0] {
            assert!((q.eval(y) - p.eval(1.5 - 0.25 * y)).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_norm_examples() {
        let x = Polynomial::identity();
        assert_eq!(sup_norm_poly(&x, iv(0.0, 1.0)), 1.0);
        let p = Polynomial::from_monomial(&[1.0, -2.0]);
        assert_eq!(sup_norm_poly(&p, iv(0.0, 1.0)), 1.0);
        let p = Polynomial::from_monomial(&[0.0, -1.0, 1.0]);
        let (v, at) = sup_norm_with_arg(&p, iv(0.0, 1.0));
        assert!((v - 0.25).abs() < 1e-15);
        assert!((at - 0.5).abs() < 1e-12);
    }

    #[test]
    fn roots_of_product_of_linears() {
        // (x+0.5)(x-0.1)(x-0.7)
        let p = Polynomial::from_monomial(&[0.035, -0.33, -0.3, 1.0]);
        let roots = real_roots(&p, -1.0, 1.0);
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([-0.5, 0.1, 0.7]) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    fn certify_examples() {
        let x2 = Polynomial::from_monomial(&[0.0, 0.0, 1.0]);
        assert_eq!(certify_nonneg(&x2, iv(-1.0, 1.0), 1e-12), Certificate::Nonnegative);
        let x = Polynomial::identity();
        match certify_nonneg(&x, iv(-1.0, 1.0), 1e-12) {
            Certificate::Negative { witness, value } => {
                assert!(witness < 0.0);
                assert!(value < -1e-12);
            }
            other => panic!("expected Negative, got {other:?}"),
        }
        let touching = Polynomial::new(0.3, vec![0.0, 0.0, 1.0]);
        assert_eq!(certify_nonneg(&touching, iv(0.0, 1.0), 1e-12), Certificate::Nonnegative);
    }

    #[test]
    fn bernstein_of_constant_is_constant() {
        let p = Polynomial::new(3.0, vec![2.0, 0.0, 0.0]);
        for b in p.bernstein_coeffs(-1.0, 4.0) {
            assert!((b - 2.0).abs() < 1e-14);
        }
    }
}
