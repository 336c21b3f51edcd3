//! Gluing primitives: splines that pass from one polynomial to another over a
//! run of knots, staying between them or nonnegative.

use serde::{Deserialize, Serialize};

use crate::bspline::ClampedBasis;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::partition::Partition;
use crate::poly::{certify_nonneg, max_with_arg, real_roots, sup_norm_poly, Certificate, Polynomial};
use crate::ppf::PiecewisePoly;

/// Relative tolerance of the betweenness and nonnegativity certificates.
pub const GLUE_TOL: f64 = 1e-12;

/// A spline equal to `left` before its first knot, to `right` after its last
/// knot, and given by `inner[k]` on `[knots[k], knots[k+1]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluedSpline {
    pub left: Polynomial,
    pub knots: Vec<f64>,
    pub inner: Vec<Polynomial>,
    pub right: Polynomial,
}

impl GluedSpline {
    pub fn eval(&self, x: f64) -> f64 {
        let d = self.knots.len() - 1;
        if x < self.knots[0] {
            return self.left.eval(x);
        }
        if x >= self.knots[d] {
            return self.right.eval(x);
        }
        let k = self.knots.partition_point(|&z| z <= x).saturating_sub(1).min(d - 1);
        self.inner[k].eval(x)
    }

    /// The spline as a piecewise polynomial on `domain`, which must contain
    /// the knots.
    pub fn to_ppf(&self, domain: Interval) -> Result<PiecewisePoly> {
        let d = self.knots.len() - 1;
        let mut bp = Vec::with_capacity(d + 3);
        let mut pieces = Vec::with_capacity(d + 2);
        if domain.lo < self.knots[0] {
            bp.push(domain.lo);
            pieces.push(self.left.clone());
        }
        bp.extend_from_slice(&self.knots);
        pieces.extend(self.inner.iter().cloned());
        if domain.hi > self.knots[d] {
            bp.push(domain.hi);
            pieces.push(self.right.clone());
        }
        if bp[0] < domain.lo || bp[bp.len() - 1] > domain.hi {
            return Err(Error::invalid("glue knots extend beyond the requested domain"));
        }
        PiecewisePoly::new(Partition::new(bp)?, pieces)
    }
}

/// Which control coefficients switch from `p1` to `p2`.
#[derive(Clone, Copy, Debug)]
struct Switch {
    m: usize,
    /// Weight of the `p2` coefficient at index `m`; 1 is a clean switch.
    weight: f64,
}

/// Candidate switches, from the middle of the admissible range outwards.
fn candidates(degree: usize, d: usize) -> Vec<Switch> {
    let lo = degree;
    let hi = d;
    let mid = (lo + hi) / 2;
    let mut order = vec![mid];
    for off in 1..=(hi - lo) {
        if mid + off <= hi {
            order.push(mid + off);
        }
        if mid >= lo + off {
            order.push(mid - off);
        }
    }
    let mut out = Vec::new();
    for m in order {
        out.push(Switch { m, weight: 1.0 });
        if m < d {
            out.push(Switch { m, weight: 0.5 });
        }
    }
    out
}

/// Pieces of `p1 + Σ_{i>=m} w_i (β_i - α_i) N_i` on every knot interval.
fn switched_pieces(
    p1: &Polynomial,
    p2: &Polynomial,
    basis: &ClampedBasis,
    alpha: &[f64],
    beta: &[f64],
    knots: &[f64],
    sw: Switch,
    degree: usize,
) -> Vec<Polynomial> {
    let d = knots.len() - 1;
    (0..d)
        .map(|k| {
            if k + degree < sw.m {
                return p1.clone();
            }
            if k > sw.m || (k == sw.m && sw.weight == 1.0) {
                return p2.clone();
            }
            let active = basis.active_on(k);
            let mut acc = p1.recentered(knots[k]).padded(degree).coeffs().to_vec();
            for (off, n) in active.iter().enumerate() {
                let i = k + off;
                if i < sw.m {
                    continue;
                }
                let w = if i == sw.m { sw.weight } else { 1.0 };
                let delta = w * (beta[i] - alpha[i]);
                for (a, c) in acc.iter_mut().zip(n.coeffs()) {
                    *a += delta * c;
                }
            }
            Polynomial::new(knots[k], acc)
        })
        .collect()
}

/// Searches the switch family for a spline accepted by `accept`.
///
/// Any `d >= degree` is allowed here; the public entry points fix `d`.
pub(crate) fn glue_search<F>(p1: &Polynomial, p2: &Polynomial, knots: &[f64], degree: usize, mut accept: F) -> Option<GluedSpline>
where
    F: FnMut(&[Polynomial]) -> bool,
{
    let d = knots.len() - 1;
    if d < degree.max(1) {
        return None;
    }
    let basis = ClampedBasis::new(knots, degree);
    let alpha = basis.coefficients_of(p1);
    let beta = basis.coefficients_of(p2);
    for sw in candidates(degree, d) {
        let inner = switched_pieces(p1, p2, &basis, &alpha, &beta, knots, sw, degree);
        if accept(&inner) {
            return Some(GluedSpline {
                left: p1.clone(),
                knots: knots.to_vec(),
                inner,
                right: p2.clone(),
            });
        }
    }
    None
}

/// Whether every piece lies between `p1` and `p2` (within `tol`) on its knot
/// interval. Parts where the certificate is indeterminate are sampled.
pub(crate) fn pieces_between(p1: &Polynomial, p2: &Polynomial, knots: &[f64], pieces: &[Polynomial], tol: f64) -> bool {
    let gap = p2.sub(p1);
    pieces.iter().enumerate().all(|(k, s)| {
        let (lo, hi) = (knots[k], knots[k + 1]);
        if *s == *p1 || *s == *p2 {
            return true;
        }
        let mut cuts = vec![lo];
        cuts.extend(real_roots(&gap, lo, hi).into_iter().filter(|&r| r > lo && r < hi));
        cuts.push(hi);
        let above = s.sub(p1);
        let below = p2.sub(s);
        cuts.windows(2).all(|w| {
            let iv = Interval::new(w[0], w[1]);
            let sign = if gap.eval(iv.midpoint()) >= 0.0 { 1.0 } else { -1.0 };
            nonneg_or_sampled(&above.scaled(sign), iv, tol) && nonneg_or_sampled(&below.scaled(sign), iv, tol)
        })
    })
}

fn nonneg_or_sampled(g: &Polynomial, iv: Interval, tol: f64) -> bool {
    match certify_nonneg(g, iv, tol) {
        Certificate::Nonnegative => true,
        Certificate::Negative { .. } => false,
        Certificate::Indeterminate => (0..=256).all(|i| g.eval(iv.lo + iv.len() * i as f64 / 256.0) >= -tol),
    }
}

fn check_knots(knots: &[f64]) -> Result<()> {
    if knots.iter().any(|x| !x.is_finite()) || knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("glue knots must be finite and strictly increasing"));
    }
    Ok(())
}

fn between_tol(p1: &Polynomial, p2: &Polynomial, span: Interval) -> f64 {
    GLUE_TOL * (1.0 + sup_norm_poly(p1, span).max(sup_norm_poly(p2, span)))
}

pub(crate) fn glue_between_any(p1: &Polynomial, p2: &Polynomial, knots: &[f64], degree: usize) -> Result<GluedSpline> {
    check_knots(knots)?;
    let d = knots.len() - 1;
    let span = Interval::new(knots[0], knots[d]);
    let tol = between_tol(p1, p2, span);
    let tried = candidates(degree, d).len();
    glue_search(p1, p2, knots, degree, |pieces| pieces_between(p1, p2, knots, pieces, tol)).ok_or(Error::GlueFailed {
        lo: span.lo,
        hi: span.hi,
        candidates: tried,
    })
}

/// A spline of degree `r` with simple knots `x_1..x_{d-1}` (and `C^{r-1}`
/// joins at `x_0`, `x_d`) that lies between `p1` and `p2` on `[x_0, x_d]` and
/// equals `p1` before `x_0`, `p2` after `x_d`. Needs `d = 2r²`.
pub fn glue_between(p1: &Polynomial, p2: &Polynomial, knots: &[f64], r: usize) -> Result<GluedSpline> {
    if r == 0 {
        return Err(Error::invalid("glue degree r must be at least 1"));
    }
    let d = 2 * r * r;
    if knots.len() != d + 1 {
        return Err(Error::BadKnotCount {
            expected: d + 1,
            got: knots.len(),
        });
    }
    if p1.effective_degree() > r || p2.effective_degree() > r {
        return Err(Error::invalid(format!("polynomial degree exceeds r = {r}")));
    }
    let mut g = glue_between_any(&trim(p1, r), &trim(p2, r), knots, r)?;
    g.left = p1.clone();
    g.right = p2.clone();
    Ok(g)
}

/// `p` with its coefficient vector cut or padded to length `r + 1`.
pub(crate) fn trim(p: &Polynomial, r: usize) -> Polynomial {
    let mut c = p.coeffs().to_vec();
    c.resize(r + 1, 0.0);
    Polynomial::new(p.center(), c)
}

/// Location of a subinterval on which a nonnegative two-piece function is
/// bounded below by a fixed fraction of its jump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeInterval {
    pub interval: Interval,
    pub lower_bound: f64,
    /// `true` when the interval lies right of the breakpoint.
    pub right_side: bool,
    pub x_star: f64,
    /// `sup |p1 - p2|` over the domain.
    pub eta: f64,
}

/// `1 / (4 T_r(3))`: with the sup over `[-1, 1]` bounded by `T_r(3)` times the
/// sup over either half, this is a certified value for the constant in
/// `min_I S >= c1(r) ‖p1 - p2‖`.
pub fn c1(r: usize) -> f64 {
    let (mut t0, mut t1) = (1.0, 3.0);
    if r == 0 {
        return 0.25;
    }
    for _ in 1..r {
        let t2 = 6.0 * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    1.0 / (4.0 * t1)
}

fn two_pieces(s: &PiecewisePoly) -> Result<(Polynomial, Polynomial, f64)> {
    if s.n() != 2 {
        return Err(Error::invalid(format!(
            "expected a function with one interior breakpoint, got {} pieces",
            s.n()
        )));
    }
    Ok((s.pieces()[0].clone(), s.pieces()[1].clone(), s.breakpoints()[1]))
}

/// For `S >= 0` on `[-1, 1]` with one breakpoint at 0 and pieces of degree
/// `<= r`: an interval `I` of length `>= 1/(4r²)` on one side of 0 with
/// `S >= ½ ‖p‖_{C(side)} >= c1(r) ‖p1 - p2‖` on `I`, where `p` is the piece
/// with the larger sup over `[-1, 1]`.
pub fn find_large_interval(s: &PiecewisePoly, r: usize) -> Result<LargeInterval> {
    if r == 0 {
        return Err(Error::invalid("degree r must be at least 1"));
    }
    let (p1, p2, c) = two_pieces(s)?;
    let dom = s.domain();
    let (left, right) = (Interval::new(dom.lo, c), Interval::new(c, dom.hi));
    let mag = sup_norm_poly(&p1, dom).max(sup_norm_poly(&p2, dom));
    let tol = GLUE_TOL * (1.0 + mag);
    for (p, side) in [(&p1, left), (&p2, right)] {
        if let Certificate::Negative { witness, value } = certify_nonneg(p, side, tol) {
            return Err(Error::NotNonnegative { witness, value });
        }
    }
    let eta = sup_norm_poly(&p1.sub(&p2), dom);
    let right_side = sup_norm_poly(&p2, dom) >= sup_norm_poly(&p1, dom);
    let (p, side) = if right_side { (&p2, right) } else { (&p1, left) };
    let (peak, x_star) = max_with_arg(p, side);
    let radius = 1.0 / (4.0 * (r * r) as f64) * side.len();
    let interval = Interval::new((x_star - radius).max(side.lo), (x_star + radius).min(side.hi));
    let lower_bound = 0.5 * peak.max(0.0);
    if let Certificate::Negative { witness, value } = certify_nonneg(&p.add_constant(-lower_bound), interval, tol) {
        // Markov's inequality rules this out; reaching it means the input
        // had a degree above r.
        return Err(Error::invalid(format!("lower bound fails at {witness} ({value:e}); is the degree above r?")));
    }
    Ok(LargeInterval {
        interval,
        lower_bound,
        right_side,
        x_star,
        eta,
    })
}

/// Replaces the jump of a nonnegative two-piece `S` by a nonnegative spline
/// of degree `r` on the given `2d + 2` knots (`d = 2r²`, `d + 1` on each side
/// of the breakpoint), leaving `S` unchanged outside `[z_0, z_{2d+1}]` and
/// moving it by at most `2 ‖p1 - p2‖`.
pub fn glue_nonnegative(s: &PiecewisePoly, knots: &[f64], r: usize) -> Result<PiecewisePoly> {
    if r == 0 {
        return Err(Error::invalid("degree r must be at least 1"));
    }
    let d = 2 * r * r;
    if knots.len() != 2 * d + 2 {
        return Err(Error::BadKnotCount {
            expected: 2 * d + 2,
            got: knots.len(),
        });
    }
    glue_nonnegative_any(s, knots, r)
}

/// [`glue_nonnegative`] with any even number `2d + 2 >= 2r + 2` of knots.
pub(crate) fn glue_nonnegative_any(s: &PiecewisePoly, knots: &[f64], r: usize) -> Result<PiecewisePoly> {
    let (p1, p2, c) = two_pieces(s)?;
    check_knots(knots)?;
    let dom = s.domain();
    let d = knots.len() / 2 - 1;
    if knots.len() % 2 != 0 || d < r {
        return Err(Error::BadKnotCount {
            expected: 2 * r + 2,
            got: knots.len(),
        });
    }
    if !(knots[d] <= c && c <= knots[d + 1]) || knots[0] < dom.lo || knots[2 * d + 1] > dom.hi {
        return Err(Error::invalid("need d + 1 knots on each side of the breakpoint, inside the domain"));
    }
    let mag = sup_norm_poly(&p1, dom).max(sup_norm_poly(&p2, dom));
    let tol = GLUE_TOL * (1.0 + mag);
    for (p, side) in [(&p1, Interval::new(dom.lo, c)), (&p2, Interval::new(c, dom.hi))] {
        if let Certificate::Negative { witness, value } = certify_nonneg(p, side, tol) {
            return Err(Error::NotNonnegative { witness, value });
        }
    }
    let eta = sup_norm_poly(&p1.sub(&p2), dom);
    if eta == 0.0 {
        return Ok(s.clone());
    }
    let (p1, p2) = (trim(&p1, r), trim(&p2, r));
    let lifted = p1.add_constant(eta);
    let first = glue_between_any(&p1, &lifted, &knots[..=d], r)?;
    let second = glue_between_any(&lifted, &p2, &knots[d + 1..], r)?;
    let mut bp = Vec::with_capacity(2 * d + 4);
    let mut pieces = Vec::with_capacity(2 * d + 3);
    if dom.lo < knots[0] {
        bp.push(dom.lo);
        pieces.push(s.pieces()[0].clone());
    }
    bp.extend_from_slice(knots);
    pieces.extend(first.inner);
    pieces.push(lifted);
    pieces.extend(second.inner);
    if dom.hi > knots[2 * d + 1] {
        bp.push(dom.hi);
        pieces.push(s.pieces()[1].clone());
    }
    let out = PiecewisePoly::new(Partition::new(bp)?, pieces)?;
    for (iv, piece) in out.segments(Interval::new(knots[0], knots[2 * d + 1])) {
        if let Certificate::Negative { witness, value } = certify_nonneg(piece, iv, tol) {
            return Err(Error::NotNonnegative { witness, value });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hat() -> PiecewisePoly {
        PiecewisePoly::new(
            Partition::new(vec![-1.0, 0.0, 1.0]).unwrap(),
            vec![Polynomial::constant(0.0), Polynomial::identity()],
        )
        .unwrap()
    }

    #[test]
    fn glue_identical_is_identity() {
        let p = Polynomial::from_monomial(&[1.0, -0.5]);
        let g = glue_between(&p, &p, &[0.0, 0.5, 1.0], 1).unwrap();
        for piece in &g.inner {
            for x in [0.0, 0.3, 1.0] {
                assert!((piece.eval(x) - p.eval(x)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn glue_linear_ramp() {
        let zero = Polynomial::constant(0.0);
        let one = Polynomial::constant(1.0);
        let g = glue_between(&zero, &one, &[0.0, 0.5, 1.0], 1).unwrap();
        let s = g.to_ppf(Interval::new(-1.0, 2.0)).unwrap();
        assert!(s.smoothness_class(1e-12) >= 0);
        for i in 0..=100 {
            let v = g.eval(i as f64 / 100.0);
            assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
        assert_eq!(s.pieces()[0], zero);
        assert_eq!(*s.pieces().last().unwrap(), one);
    }

    #[test]
    fn glue_rejects_wrong_knot_count() {
        let p = Polynomial::constant(0.0);
        assert_eq!(glue_between(&p, &p, &[0.0, 1.0], 1).unwrap_err(), Error::BadKnotCount { expected: 3, got: 2 });
    }

    #[test]
    fn c1_values() {
        assert_eq!(c1(1), 1.0 / 12.0);
        assert_eq!(c1(2), 1.0 / 68.0);
    }

    #[test]
    fn large_interval_examples() {
        let li = find_large_interval(&hat(), 1).unwrap();
        assert_eq!(li.interval, Interval::new(0.75, 1.0));
        assert_eq!(li.lower_bound, 0.5);
        assert_eq!(li.eta, 1.0);
        assert!(li.right_side);
        let s = PiecewisePoly::new(
            Partition::new(vec![-1.0, 0.0, 1.0]).unwrap(),
            vec![Polynomial::constant(1.0), Polynomial::from_monomial(&[1.0, 1.0])],
        )
        .unwrap();
        let li = find_large_interval(&s, 1).unwrap();
        assert_eq!(li.interval, Interval::new(0.75, 1.0));
        assert_eq!(li.lower_bound, 1.0);
        let neg = PiecewisePoly::new(
            Partition::new(vec![-1.0, 0.0, 1.0]).unwrap(),
            vec![Polynomial::constant(-1.0), Polynomial::identity()],
        )
        .unwrap();
        assert!(matches!(find_large_interval(&neg, 1), Err(Error::NotNonnegative { .. })));
    }

    #[test]
    fn glue_nonnegative_hat() {
        let knots = [-0.3, -0.2, -0.1, 0.1, 0.2, 0.3];
        let out = glue_nonnegative(&hat(), &knots, 1).unwrap();
        assert_eq!(out.pieces()[0], Polynomial::constant(0.0));
        assert_eq!(*out.pieces().last().unwrap(), Polynomial::identity());
        assert!(out.smoothness_class(1e-12) >= 0);
        for i in 0..=1000 {
            let x = -1.0 + 2.0 * i as f64 / 1000.0;
            let v = out.eval(x);
            assert!(v >= -1e-12);
            assert!((v - hat().eval(x)).abs() <= 2.0 + 1e-12);
        }
        assert!(matches!(glue_nonnegative(&hat(), &knots[1..], 1), Err(Error::BadKnotCount { .. })));
    }
}
