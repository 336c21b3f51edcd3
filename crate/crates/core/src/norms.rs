//! `L_p` quasi-norms, finite differences and moduli of smoothness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::poly::{binomial, real_roots, sup_norm_poly, Polynomial};
use crate::ppf::PiecewisePoly;
use crate::quadrature;

/// Relative accuracy requested from numerical quadrature.
pub const QUAD_REL_TOL: f64 = 1e-10;

/// Default number of step sizes scanned by [`modulus`].
pub const DEFAULT_RESOLUTION: usize = 256;

/// Smallest accepted resolution.
pub const MIN_RESOLUTION: usize = 16;

/// Octaves of `h` covered by the step grid below `t`.
const GRID_OCTAVES: f64 = 20.0;

const GOLDEN_ITERS: usize = 30;

/// Exponent `p` of an `L_p` quasi-norm: a positive real or infinity.
///
/// Serialized as a JSON number, or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p > 0.0 && p.is_finite() {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidP { p })
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// Rejects `p <= 0` and NaN.
    pub fn check(&self) -> Result<()> {
        match self {
            Exponent::Finite(p) if !(*p > 0.0 && p.is_finite()) => Err(Error::InvalidP { p: *p }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let p: f64 = other.parse().map_err(|_| Error::invalid(format!("cannot parse exponent '{s}'")))?;
                Exponent::new(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => serializer.serialize_f64(*p),
            Exponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(p) => Exponent::new(p),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Anything that can be evaluated pointwise. Piecewise polynomials expose
/// themselves through [`Evaluable::as_ppf`] so that norms and moduli can use
/// exact polynomial arithmetic instead of sampling.
pub trait Evaluable: Sync {
    fn eval(&self, x: f64) -> f64;

    fn as_ppf(&self) -> Option<&PiecewisePoly> {
        None
    }
}

impl<F: Fn(f64) -> f64 + Sync> Evaluable for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

impl Evaluable for PiecewisePoly {
    fn eval(&self, x: f64) -> f64 {
        PiecewisePoly::eval(self, x)
    }

    fn as_ppf(&self) -> Option<&PiecewisePoly> {
        Some(self)
    }
}

/// `(∫ |g|^p)^{1/p}` (or the sup for `p = ∞`) of a function given as
/// polynomial segments.
pub fn lp_norm_segments(segments: &[(Interval, Polynomial)], p: Exponent) -> Result<f64> {
    p.check()?;
    match p {
        Exponent::Infinity => Ok(segments.iter().map(|(j, g)| sup_norm_poly(g, *j)).fold(0.0, f64::max)),
        Exponent::Finite(p) => {
            let total = segments.iter().map(|(j, g)| integrate_abs_pow(g, *j, p)).fold(0.0, |acc, v| acc + v);
            Ok(total.powf(1.0 / p))
        }
    }
}

/// `∫_J |g|^p` for a polynomial `g`.
pub fn integrate_abs_pow(g: &Polynomial, j: Interval, p: f64) -> f64 {
    if j.is_degenerate() || g.is_zero() {
        return 0.0;
    }
    if p.fract() == 0.0 && p <= 16.0 && (p as u32) % 2 == 0 {
        let g = g.recentered(j.lo);
        return g.powi(p as u32).integrate(j.lo, j.hi).max(0.0);
    }
    // Split at sign changes so that |g|^p is smooth on every part.
    let mut cuts = vec![j.lo];
    cuts.extend(real_roots(g, j.lo, j.hi).into_iter().filter(|&r| r > j.lo && r < j.hi));
    cuts.push(j.hi);
    let local = g.recentered(j.midpoint());
    cuts.windows(2)
        .map(|w| quadrature::integrate(|x| local.eval(x).abs().powf(p), w[0], w[1], QUAD_REL_TOL))
        .sum()
}

/// `‖s‖_{L_p(J)}`; parts of `J` beyond the domain use the extension of the
/// end pieces.
pub fn lp_quasinorm(s: &PiecewisePoly, p: Exponent, j: Interval) -> Result<f64> {
    p.check()?;
    let segs: Vec<(Interval, Polynomial)> = s.segments(j).into_iter().map(|(iv, g)| (iv, g.clone())).collect();
    lp_norm_segments(&segs, p)
}

/// `‖f‖_{L_p(J)}` for a general evaluable; sampling with local refinement for
/// `p = ∞`, adaptive quadrature otherwise.
pub fn lp_quasinorm_fn(f: &dyn Evaluable, p: Exponent, j: Interval) -> Result<f64> {
    p.check()?;
    if let Some(s) = f.as_ppf() {
        return lp_quasinorm(s, p, j);
    }
    if j.is_degenerate() {
        return Ok(0.0);
    }
    Ok(match p {
        Exponent::Infinity => sampled_max(|x| f.eval(x).abs(), j.lo, j.hi, 512),
        Exponent::Finite(p) => quadrature::integrate(|x| f.eval(x).abs().powf(p), j.lo, j.hi, QUAD_REL_TOL).powf(1.0 / p),
    })
}

/// Maximum of `g` on `[lo, hi]` from a uniform scan refined by golden-section
/// search around the best few samples.
pub(crate) fn sampled_max<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, samples: usize) -> f64 {
    if !(hi > lo) {
        return g(lo);
    }
    let step = (hi - lo) / samples as f64;
    let xs: Vec<f64> = (0..=samples).map(|i| if i == samples { hi } else { lo + i as f64 * step }).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for i in top_local_maxima(&vals, 3) {
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(samples)];
        best = best.max(golden_argmax(&g, a, b).0);
    }
    best
}

/// Indices of up to `count` largest local maxima of `vals`, largest first.
fn top_local_maxima(vals: &[f64], count: usize) -> Vec<usize> {
    let n = vals.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { vals[i - 1] };
            let right = if i + 1 == n { f64::NEG_INFINITY } else { vals[i + 1] };
            vals[i] >= left && vals[i] >= right
        })
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    peaks.truncate(count);
    peaks
}

/// Symmetric `k`-th difference `Σ (-1)^{k-i} C(k,i) f(x - kh/2 + ih)`, or 0
/// when `x ± kh/2` leaves `J`.
pub fn finite_diff(f: &dyn Evaluable, k: usize, h: f64, x: f64, j: Interval) -> f64 {
    let half = 0.5 * k as f64 * h;
    if x - half < j.lo || x + half > j.hi {
        return 0.0;
    }
    raw_diff(f, k, h, x)
}

fn raw_diff(f: &dyn Evaluable, k: usize, h: f64, x: f64) -> f64 {
    let half = 0.5 * k as f64 * h;
    (0..=k)
        .map(|i| {
            let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(k, i) * f.eval(x - half + i as f64 * h)
        })
        .sum()
}

/// A lower estimate of a modulus of smoothness and the step attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub value: f64,
    pub h_at_max: f64,
    pub k: usize,
    pub t: f64,
    pub p: Exponent,
    pub resolution: usize,
}

/// `‖Δ_h^k(s, ·, J)‖_{L_p(J)}` for a piecewise polynomial, computed exactly:
/// on the admissible range the difference is itself piecewise polynomial.
pub fn ppf_difference_norm(s: &PiecewisePoly, k: usize, h: f64, j: Interval, p: Exponent) -> Result<f64> {
    lp_norm_segments(&ppf_difference(s, k, h, j), p)
}

/// Pieces of `x -> Δ_h^k(s, x, J)` on its admissible range.
pub fn ppf_difference(s: &PiecewisePoly, k: usize, h: f64, j: Interval) -> Vec<(Interval, Polynomial)> {
    let half = 0.5 * k as f64 * h;
    let range = Interval::new(j.lo + half, j.hi - half);
    if range.is_degenerate() {
        return Vec::new();
    }
    let shifts: Vec<f64> = (0..=k).map(|i| -half + i as f64 * h).collect();
    let weights: Vec<f64> = (0..=k).map(|i| if (k - i) % 2 == 0 { binomial(k, i) } else { -binomial(k, i) }).collect();
    let mut cuts = vec![range.lo, range.hi];
    let inner = &s.breakpoints()[1..s.n()];
    for &sh in &shifts {
        cuts.extend(inner.iter().map(|z| z - sh).filter(|&x| x > range.lo && x < range.hi));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let deg = s.degree();
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let seg = Interval::new(w[0], w[1]);
            let mid = seg.midpoint();
            let mut acc = vec![0.0; deg + 1];
            for (sh, wt) in shifts.iter().zip(&weights) {
                let piece = s.piece_at(mid + sh).shifted(*sh).recentered(seg.lo);
                for (a, c) in acc.iter_mut().zip(piece.coeffs()) {
                    *a += wt * c;
                }
            }
            (seg, Polynomial::new(seg.lo, acc))
        })
        .collect()
}

/// `‖Δ_h^k(f, ·, J)‖_{L_p(J)}` for any evaluable.
pub fn difference_norm(f: &dyn Evaluable, k: usize, h: f64, j: Interval, p: Exponent) -> Result<f64> {
    if let Some(s) = f.as_ppf() {
        return ppf_difference_norm(s, k, h, j, p);
    }
    let half = 0.5 * k as f64 * h;
    let (lo, hi) = (j.lo + half, j.hi - half);
    if !(hi > lo) {
        return Ok(0.0);
    }
    Ok(match p {
        Exponent::Infinity => sampled_max(|x| raw_diff(f, k, h, x).abs(), lo, hi, 256),
        Exponent::Finite(p) => quadrature::integrate(|x| raw_diff(f, k, h, x).abs().powf(p), lo, hi, QUAD_REL_TOL).powf(1.0 / p),
    })
}

fn check_modulus_args(k: usize, t: f64, resolution: usize, p: Exponent) -> Result<()> {
    p.check()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidT { t });
    }
    if k == 0 {
        return Err(Error::invalid("difference order k must be at least 1"));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::invalid(format!("resolution must be at least {MIN_RESOLUTION}, got {resolution}")));
    }
    Ok(())
}

/// Grid search for `sup_{0<h<=t} F(h)`.
///
/// The grid `h_i = t 2^{-20 i / res}` is nested under doubling of `res`, and
/// the refinement is repeated for every coarser nested grid down to
/// [`MIN_RESOLUTION`], so raising the resolution never lowers the estimate.
fn sup_over_steps<F>(t: f64, resolution: usize, eval: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    let hs: Vec<f64> = (0..resolution).map(|i| t * (-GRID_OCTAVES * i as f64 / resolution as f64).exp2()).collect();
    let vals: Vec<f64> = hs.par_iter().map(|&h| eval(h)).collect::<Result<_>>()?;
    let mut best = (f64::NEG_INFINITY, t);
    for (h, v) in hs.iter().zip(&vals) {
        if *v > best.0 {
            best = (*v, *h);
        }
    }
    let g = |h: f64| eval(h).unwrap_or(f64::NEG_INFINITY);
    let mut stride = 1;
    while resolution / stride >= MIN_RESOLUTION {
        let sub_h: Vec<f64> = hs.iter().step_by(stride).copied().collect();
        let sub_v: Vec<f64> = vals.iter().step_by(stride).copied().collect();
        for i in top_local_maxima(&sub_v, 2) {
            let hi = if i == 0 { t } else { sub_h[i - 1] };
            let lo = sub_h.get(i + 1).copied().unwrap_or(0.5 * sub_h[i]);
            let (v, h) = golden_argmax(&g, lo, hi);
            if v > best.0 {
                best = (v, h);
            }
        }
        if resolution % (2 * stride) != 0 {
            break;
        }
        stride *= 2;
    }
    Ok((best.0.max(0.0), best.1))
}

fn golden_argmax<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    let mut best = if fc >= fd { (fc, c) } else { (fd, d) };
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(c);
            if fc > best.0 {
                best = (fc, c);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(d);
            if fd > best.0 {
                best = (fd, d);
            }
        }
    }
    best
}

/// `ω_k(f, t, J)_p = sup_{0<h<=t} ‖Δ_h^k(f, ·, J)‖_{L_p(J)}`, estimated from
/// below.
pub fn modulus(f: &dyn Evaluable, k: usize, t: f64, j: Interval, p: Exponent, resolution: usize) -> Result<ModulusEstimate> {
    check_modulus_args(k, t, resolution, p)?;
    let (value, h_at_max) = sup_over_steps(t, resolution, |h| difference_norm(f, k, h, j, p))?;
    Ok(ModulusEstimate {
        value,
        h_at_max,
        k,
        t,
        p,
        resolution,
    })
}

/// Half-width of the admissible set `{x : x ± k h φ(x)/2 ∈ [-1, 1]}`,
/// `φ(x) = sqrt(1 - x²)`.
pub fn dt_admissible_bound(k: usize, h: f64) -> f64 {
    let beta = 0.5 * k as f64 * h;
    (1.0 - beta * beta) / (1.0 + beta * beta)
}

fn dt_diff(f: &dyn Evaluable, k: usize, h: f64, x: f64) -> f64 {
    let phi = (1.0 - x * x).max(0.0).sqrt();
    raw_diff(f, k, h * phi, x)
}

/// `‖Δ^k_{hφ}(f, ·)‖_{L_p[-1,1]}`.
pub fn dt_difference_norm(f: &dyn Evaluable, k: usize, h: f64, p: Exponent) -> Result<f64> {
    p.check()?;
    let x_max = dt_admissible_bound(k, h);
    if !(x_max > 0.0) {
        return Ok(0.0);
    }
    Ok(match p {
        Exponent::Infinity => sampled_max(|x| dt_diff(f, k, h, x).abs(), -x_max, x_max, 512),
        Exponent::Finite(p) => quadrature::integrate(|x| dt_diff(f, k, h, x).abs().powf(p), -x_max, x_max, QUAD_REL_TOL).powf(1.0 / p),
    })
}

/// Ditzian–Totik modulus `ω_k^φ(f, t)_p` on `[-1, 1]`, estimated from below.
pub fn dt_modulus(f: &dyn Evaluable, k: usize, t: f64, p: Exponent, resolution: usize) -> Result<ModulusEstimate> {
    check_modulus_args(k, t, resolution, p)?;
    let (value, h_at_max) = sup_over_steps(t, resolution, |h| dt_difference_norm(f, k, h, p))?;
    Ok(ModulusEstimate {
        value,
        h_at_max,
        k,
        t,
        p,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;

    fn unit() -> Interval {
        Interval::new(-1.0, 1.0)
    }

    fn poly_ppf(c: &[f64]) -> PiecewisePoly {
        PiecewisePoly::single(Polynomial::from_monomial(c), unit()).unwrap()
    }

    #[test]
    fn norm_examples() {
        let one = poly_ppf(&[1.0]);
        for p in [0.5, 1.0, 2.0, 3.0] {
            let v = lp_quasinorm(&one, Exponent::Finite(p), unit()).unwrap();
            assert!((v - 2f64.powf(1.0 / p)).abs() < 1e-10);
        }
        let x = poly_ppf(&[0.0, 1.0]);
        let v = lp_quasinorm(&x, Exponent::Finite(2.0), unit()).unwrap();
        assert!((v - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert_eq!(lp_quasinorm(&x, Exponent::Infinity, unit()).unwrap(), 1.0);
        let v = lp_quasinorm(&x, Exponent::Finite(1.0), unit()).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        assert_eq!(lp_quasinorm(&x, Exponent::Finite(0.0), unit()), Err(Error::InvalidP { p: 0.0 }));
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::Finite(2.0));
        assert!("-1".parse::<Exponent>().is_err());
        let json = serde_json::to_string(&vec![Exponent::Finite(1.0), Exponent::Infinity]).unwrap();
        assert_eq!(json, r#"[1.0,"inf"]"#);
        let back: Vec<Exponent> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Exponent::Finite(1.0), Exponent::Infinity]);
    }

    #[test]
    fn finite_diff_examples() {
        let sq = |x: f64| x * x;
        let v = finite_diff(&sq, 2, 0.1, 0.0, unit());
        assert!((v - 0.02).abs() < 1e-15);
        assert_eq!(finite_diff(&sq, 2, 0.1, 0.95, unit()), 0.0);
        assert_eq!(finite_diff(&sq, 0, 0.1, 0.3, unit()), 0.09);
    }

    #[test]
    fn modulus_examples() {
        let lin = poly_ppf(&[0.3, 2.0]);
        let m = modulus(&lin, 2, 0.7, unit(), Exponent::Infinity, 64).unwrap();
        assert!(m.value < 1e-12);
        let sq = poly_ppf(&[0.0, 0.0, 1.0]);
        let m = modulus(&sq, 1, 1.0, unit(), Exponent::Infinity, 64).unwrap();
        assert!((m.value - 1.0).abs() < 1e-9, "{m:?}");
        let cubic = poly_ppf(&[1.0, -1.0, 0.5, 2.0]);
        for p in [Exponent::Finite(0.5), Exponent::Finite(2.0), Exponent::Infinity] {
            assert!(modulus(&cubic, 4, 0.3, unit(), p, 32).unwrap().value < 1e-10);
        }
        assert_eq!(modulus(&sq, 1, 0.0, unit(), Exponent::Infinity, 64), Err(Error::InvalidT { t: 0.0 }));
    }

    #[test]
    fn ppf_and_sampled_differences_agree() {
        let s = PiecewisePoly::new(
            Partition::new(vec![-1.0, -0.2, 0.4, 1.0]).unwrap(),
            vec![
                Polynomial::from_monomial(&[0.0, 1.0]),
                Polynomial::new(-0.2, vec![-0.2, 2.0, 1.0]),
                Polynomial::new(0.4, vec![1.2, 0.0, -3.0]),
            ],
        )
        .unwrap();
        let f = |x: f64| s.eval(x);
        for (k, h) in [(1, 0.3), (2, 0.17), (3, 0.05)] {
            for p in [Exponent::Finite(1.0), Exponent::Finite(2.5), Exponent::Infinity] {
                let exact = difference_norm(&s, k, h, unit(), p).unwrap();
                let sampled = difference_norm(&f, k, h, unit(), p).unwrap();
                assert!((exact - sampled).abs() < 1e-6 * (1.0 + exact), "{k} {h} {p}: {exact} vs {sampled}");
            }
        }
    }

    #[test]
    fn dt_modulus_examples() {
        let lin = |x: f64| 3.0 * x - 1.0;
        assert!(dt_modulus(&lin, 2, 0.5, Exponent::Infinity, 32).unwrap().value < 1e-12);
        let sq = |x: f64| x * x;
        let m = dt_modulus(&sq, 2, 0.5, Exponent::Infinity, 64).unwrap();
        assert!((m.value - 0.5).abs() < 1e-8, "{m:?}");
        let id = |x: f64| x;
        let m = dt_modulus(&id, 1, 0.5, Exponent::Infinity, 64).unwrap();
        assert!((m.value - 0.5).abs() < 1e-8, "{m:?}");
    }

    #[test]
    fn doubling_resolution_never_lowers_estimate() {
        let s = PiecewisePoly::new(
            Partition::new(vec![-1.0, 0.1, 1.0]).unwrap(),
            vec![Polynomial::from_monomial(&[0.0, 0.5, 1.0]), Polynomial::new(0.1, vec![0.06, 3.0, -1.0])],
        )
        .unwrap();
        let mut prev = 0.0;
        for res in [16, 32, 64, 128, 256] {
            let v = modulus(&s, 3, 0.8, unit(), Exponent::Finite(1.5), res).unwrap().value;
            assert!(v >= prev - 1e-9);
            prev = v;
        }
    }
}
