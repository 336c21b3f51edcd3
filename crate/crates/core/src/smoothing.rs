//! Shape-preserving smoothing: one knot at a time, globally on a remesh, and
//! the explicit `C^1` / `C^0` pre-smoothing used for monotone and convex
//! inputs without continuity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glue::{self, c1, find_large_interval, glue_nonnegative_any, glue_search, pieces_between, LargeInterval};
use crate::interval::Interval;
use crate::norms::{Exponent, DEFAULT_RESOLUTION};
use crate::partition::{is_delta_remesh, Partition};
use crate::poly::{real_roots, sup_norm_poly, Certificate, Polynomial};
use crate::ppf::{certify_derivative, jump_magnitude, PiecewisePoly, ShapeSpec, DEFAULT_TOL};
use crate::report::{smoothing_report, ReportConfig, SmoothingReport};

/// How the single-knot construction treats the mesh.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// Require the mesh to be as fine as the worst-case analysis demands and
    /// follow it literally.
    Theoretical,
    /// Run on the given mesh and certify the result, trying a short ladder of
    /// window and transition choices before giving up.
    #[default]
    Adaptive,
}

/// Sizes of the gluing steps for given `q` and `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueConfig {
    pub q: usize,
    pub r: usize,
    /// Knot count of the nonnegative glue, `2r²`.
    pub d: usize,
    /// Knot count of the closing glue, `2(q+r)²`.
    pub d1: usize,
    pub delta_mode: DeltaMode,
}

impl GlueConfig {
    pub fn new(q: usize, r: usize, delta_mode: DeltaMode) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("q must be at least 1"));
        }
        if r == 0 {
            return Err(Error::invalid("r must be at least 1"));
        }
        Ok(GlueConfig {
            q,
            r,
            d: 2 * r * r,
            d1: 2 * (q + r) * (q + r),
            delta_mode,
        })
    }

    /// Mesh fineness (relative to the shorter side of the knot) under which
    /// the worst-case analysis guarantees success.
    pub fn theoretical_delta(&self) -> f64 {
        let (d, d1) = (self.d as f64, self.d1 as f64);
        let c2 = 2f64.powi(self.q as i32) * (2.0 * d + 1.0);
        let c3 = (10.0 * d * d1 * (d1 + 1.0)).powi(self.q as i32) * c2;
        (1.0 / (10.0 * d * (d1 + 1.0))).min(c1(self.r) / c3)
    }

    /// The `δ` a remesh must satisfy before smoothing is attempted: fine
    /// enough that every knot sees `d + 1` mesh points on each side
    /// (adaptive), or the theoretical bound.
    pub fn operative_delta(&self) -> f64 {
        match self.delta_mode {
            DeltaMode::Adaptive => 1.0 / (2.0 * (self.d + 2) as f64),
            DeltaMode::Theoretical => self.theoretical_delta(),
        }
    }
}

/// Options of the global smoothing operations. The construction itself does
/// not look at `p_list`; it only selects what the report measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothOptions {
    pub mode: DeltaMode,
    pub p_list: Vec<Exponent>,
    /// Step-grid resolution of the moduli in the report.
    pub resolution: usize,
    pub tol: f64,
    /// Adaptive mode only: how many times the remesh may be halved inside a
    /// core interval whose knot could not be smoothed on the given points.
    /// With `0` the output lives exactly on the given remesh.
    pub max_refinements: usize,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        SmoothOptions {
            mode: DeltaMode::Adaptive,
            p_list: vec![Exponent::Infinity],
            resolution: DEFAULT_RESOLUTION,
            tol: DEFAULT_TOL,
            max_refinements: DEFAULT_MAX_REFINEMENTS,
        }
    }
}

pub const DEFAULT_MAX_REFINEMENTS: usize = 8;

/// Relative coefficient difference under which both pieces are taken to be
/// the same polynomial.
const SAME_POLY: f64 = 1e-14;

/// Maximum number of construction attempts per knot in adaptive mode.
const MAX_ATTEMPTS: usize = 9;

/// Replacement of `s` around one knot: `pieces[k]` lives on
/// `[knots[k], knots[k+1]]`; outside `[knots[0], knots[last]]` the input is
/// unchanged.
#[derive(Clone, Debug)]
pub(crate) struct Patch {
    pub knots: Vec<f64>,
    pub pieces: Vec<Polynomial>,
}

/// The single-knot problem mapped to `y = (x - c)/λ`, `λ = min(b-c, c-a)`.
struct Local<'a> {
    q: usize,
    r: usize,
    p1: Polynomial,
    p2: Polynomial,
    s1: Polynomial,
    s2: Polynomial,
    /// Mesh points (normalized) inside `(-1, 1)`, with their original values.
    mesh: Vec<f64>,
    mesh_orig: Vec<f64>,
    orig_left: &'a Polynomial,
    orig_right: &'a Polynomial,
    c: f64,
    lambda: f64,
    tol: f64,
}

/// A candidate patch in normalized coordinates; knots are mesh indices.
struct Candidate {
    knots: Vec<usize>,
    pieces: Vec<Polynomial>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Region {
    /// Everything between the window and the end of the chosen side.
    WholeSide,
    /// The part around the peak where `S` stays above a quarter of its peak.
    Plateau,
    /// The interval from [`find_large_interval`].
    Large,
}

fn check_two_piece_shape(left: &Polynomial, right: &Polynomial, a: f64, c: f64, b: f64, q: usize, tol: f64) -> Result<()> {
    for k in 0..q {
        let jump = right.derivative_at(c, k) - left.derivative_at(c, k);
        let mag = jump_magnitude(left, right, a, c, b, k);
        if jump.abs() > tol * (1.0 + mag) {
            return Err(Error::InsufficientSmoothness {
                required: q - 1,
                order: k,
                x: c,
                jump,
            });
        }
    }
    for (p, span) in [(left, Interval::new(a, c)), (right, Interval::new(c, b))] {
        if let Certificate::Negative { witness, value } = certify_derivative(&p.nth_derivative(q), span, tol) {
            return Err(Error::NotInShapeClass { q, witness, value });
        }
    }
    Ok(())
}

/// `q`-fold antiderivative vanishing to order `q` at `p`'s center.
fn integrate_q(p: &Polynomial, q: usize) -> Polynomial {
    (0..q).fold(p.clone(), |acc, _| acc.antiderivative())
}

/// Keeps the coefficients of degree `< q` of `p` around `center`.
fn low_part(p: &Polynomial, center: f64, q: usize) -> Polynomial {
    let local = p.recentered(center);
    let mut c = local.coeffs().to_vec();
    c.truncate(q);
    Polynomial::new(center, c)
}

impl<'a> Local<'a> {
    fn new(left: &'a Polynomial, right: &'a Polynomial, a: f64, c: f64, b: f64, mesh: &[f64], q: usize, r: usize, tol: f64) -> Result<Self> {
        let lambda = (c - a).min(b - c);
        let p1 = glue::trim(&left.compose_affine(c, lambda), q + r);
        let p2 = glue::trim(&right.compose_affine(c, lambda), q + r);
        let s1 = glue::trim(&p1.nth_derivative(q), r);
        let s2 = glue::trim(&p2.nth_derivative(q), r);
        let mut norm = Vec::new();
        let mut orig = Vec::new();
        for &x in mesh {
            let y = (x - c) / lambda;
            if y > -1.0 && y < 1.0 {
                norm.push(y);
                orig.push(x);
            }
        }
        Ok(Local {
            q,
            r,
            p1,
            p2,
            s1,
            s2,
            mesh: norm,
            mesh_orig: orig,
            orig_left: left,
            orig_right: right,
            c,
            lambda,
            tol,
        })
    }

    fn s_two_piece(&self) -> Result<PiecewisePoly> {
        PiecewisePoly::new(Partition::new(vec![-1.0, 0.0, 1.0])?, vec![self.s1.clone(), self.s2.clone()])
    }

    /// Mesh indices of the `d + 1` nearest points on each side of 0.
    fn window(&self, d: usize) -> Result<Vec<usize>> {
        let split = self.mesh.partition_point(|&y| y <= 0.0);
        if split < d + 1 || self.mesh.len() - split < d + 1 {
            return Err(Error::MeshTooCoarse {
                x: self.c,
                reason: format!(
                    "need {} mesh points on each side of the knot, found {} and {}",
                    d + 1,
                    split,
                    self.mesh.len() - split
                ),
            });
        }
        Ok((split - d - 1..split + d + 1).collect())
    }

    /// Candidate region `[lo, hi]` (normalized) for the closing glue.
    fn region(&self, region: Region, li: &LargeInterval, window_lo: f64, window_hi: f64) -> Interval {
        let side = if li.right_side {
            Interval::new(window_hi, 1.0)
        } else {
            Interval::new(-1.0, window_lo)
        };
        let raw = match region {
            Region::WholeSide => side,
            Region::Large => li.interval,
            Region::Plateau => {
                let s = if li.right_side { &self.s2 } else { &self.s1 };
                let full = if li.right_side { Interval::new(0.0, 1.0) } else { Interval::new(-1.0, 0.0) };
                let level = s.add_constant(-0.5 * li.lower_bound);
                let roots = real_roots(&level, full.lo, full.hi);
                let lo = roots.iter().copied().filter(|&x| x < li.x_star).fold(full.lo, f64::max);
                let hi = roots.iter().copied().filter(|&x| x > li.x_star).fold(full.hi, f64::min);
                Interval::new(lo, hi)
            }
        };
        Interval::new(raw.lo.max(side.lo), raw.hi.min(side.hi))
    }

    /// `count + 1` mesh indices spread over `region`.
    fn spread_knots(&self, region: Interval, count: usize) -> Option<Vec<usize>> {
        let lo = self.mesh.partition_point(|&y| y < region.lo);
        let hi = self.mesh.partition_point(|&y| y <= region.hi);
        if hi < lo + count + 1 {
            return None;
        }
        let avail = hi - lo - 1;
        Some((0..=count).map(|j| lo + (j * avail + count / 2) / count).collect())
    }

    /// The theoretical placement: `I'` at the far end of `I`, `h = |I'| /
    /// (2(d1+1))`, `x_j` a mesh point in the `2j`-th cell of width `h`.
    fn theoretical_knots(&self, li: &LargeInterval, d: usize, d1: usize) -> Result<Vec<usize>> {
        let len = 1.0 / (5.0 * d as f64);
        let h = len / (2.0 * (d1 + 1) as f64);
        let mut out = Vec::with_capacity(d1 + 1);
        for j in 0..=d1 {
            let (lo, hi) = if li.right_side {
                let a = li.interval.hi - len;
                (a + 2.0 * j as f64 * h, a + (2 * j + 1) as f64 * h)
            } else {
                let b = li.interval.lo + len;
                (b - (2 * j + 1) as f64 * h, b - 2.0 * j as f64 * h)
            };
            let i = self.mesh.partition_point(|&y| y < lo);
            if i >= self.mesh.len() || self.mesh[i] > hi {
                return Err(Error::MeshTooCoarse {
                    x: self.c + self.lambda * lo,
                    reason: format!("no mesh point in [{lo}, {hi}] (normalized) for the closing glue"),
                });
            }
            out.push(i);
        }
        if !li.right_side {
            out.reverse();
        }
        Ok(out)
    }

    /// Nonnegative glue of `S` on the window, its `q`-fold integral, and the
    /// degree `< q` offset `D` between that integral and `P2` past the window.
    fn integrate_window(&self, window: &[usize]) -> Result<(Vec<Polynomial>, Polynomial)> {
        let knots: Vec<f64> = window.iter().map(|&i| self.mesh[i]).collect();
        let s_tilde = glue_nonnegative_any(&self.s_two_piece()?, &knots, self.r)?;
        let q = self.q;
        let mut prev = self.p1.clone();
        let mut pieces = Vec::with_capacity(knots.len() - 1);
        for w in knots.windows(2) {
            let g = s_tilde.piece_at(0.5 * (w[0] + w[1])).recentered(w[0]);
            let diff = g.sub(&prev.nth_derivative(q).recentered(w[0]));
            let piece = prev.recentered(w[0]).add(&integrate_q(&diff, q));
            pieces.push(piece.clone());
            prev = piece;
        }
        let x_r = knots[knots.len() - 1];
        let tail = prev.recentered(x_r).sub(&self.p2);
        Ok((pieces, low_part(&tail, x_r, q)))
    }

    fn shape_ok(&self, pieces: &[Polynomial], knots: &[f64]) -> bool {
        pieces.iter().zip(knots.windows(2)).all(|(p, w)| {
            !matches!(
                certify_derivative(&p.nth_derivative(self.q), Interval::new(w[0], w[1]), self.tol),
                Certificate::Negative { .. }
            )
        })
    }

    /// One construction attempt with the given window size and closing glue.
    fn attempt(&self, window_d: usize, closing: Closing, li: &LargeInterval) -> Result<Option<Candidate>> {
        let window = self.window(window_d)?;
        let (ints, offset) = self.integrate_window(&window)?;
        let w_lo = self.mesh[window[0]];
        let w_hi = self.mesh[window[window.len() - 1]];
        let degree = self.q + self.r;
        let glue_idx = match closing {
            Closing::Adaptive(region) => {
                let reg = self.region(region, li, w_lo, w_hi);
                match self.spread_knots(reg, degree) {
                    Some(k) => k,
                    None => return Ok(None),
                }
            }
            Closing::Theoretical { d1 } => {
                let k = self.theoretical_knots(li, self.window_d_for_theory(), d1)?;
                let clash = if li.right_side {
                    self.mesh[k[0]] < w_hi
                } else {
                    self.mesh[k[k.len() - 1]] > w_lo
                };
                if clash {
                    return Err(Error::MeshTooCoarse {
                        x: self.c,
                        reason: "closing glue overlaps the first window".into(),
                    });
                }
                k
            }
        };
        let gk: Vec<f64> = glue_idx.iter().map(|&i| self.mesh[i]).collect();
        let (from, to) = if li.right_side {
            (self.p2.add(&offset), self.p2.clone())
        } else {
            (self.p1.clone(), self.p1.sub(&offset))
        };
        let glued = match closing {
            Closing::Adaptive(_) => glue_search(&from, &to, &gk, degree, |pieces| self.shape_ok(pieces, &gk)),
            Closing::Theoretical { .. } => {
                let span = Interval::new(gk[0], gk[gk.len() - 1]);
                let tol = glue::GLUE_TOL * (1.0 + sup_norm_poly(&from, span).max(sup_norm_poly(&to, span)));
                let found = glue_search(&from, &to, &gk, degree, |pieces| pieces_between(&from, &to, &gk, pieces, tol));
                match found {
                    Some(g) if self.shape_ok(&g.inner, &gk) => Some(g),
                    Some(_) => {
                        return Err(Error::ShapeCertificationFailed {
                            witness: self.c + self.lambda * span.midpoint(),
                            value: f64::NAN,
                            attempts: 1,
                        })
                    }
                    None => {
                        return Err(Error::GlueFailed {
                            lo: span.lo,
                            hi: span.hi,
                            candidates: 0,
                        })
                    }
                }
            }
        };
        let Some(glued) = glued else { return Ok(None) };
        let mut knots = Vec::new();
        let mut pieces = Vec::new();
        if li.right_side {
            knots.extend_from_slice(&window);
            pieces.extend(ints);
            if glue_idx[0] > window[window.len() - 1] {
                knots.push(glue_idx[0]);
                pieces.push(from.clone());
            }
            knots.extend_from_slice(&glue_idx[1..]);
            pieces.extend(glued.inner);
        } else {
            knots.extend_from_slice(&glue_idx);
            pieces.extend(glued.inner);
            if glue_idx[glue_idx.len() - 1] < window[0] {
                knots.push(window[0]);
                pieces.push(to.clone());
            }
            knots.extend_from_slice(&window[1..]);
            pieces.extend(ints.iter().map(|p| p.sub(&offset)));
        }
        let kv: Vec<f64> = knots.iter().map(|&i| self.mesh[i]).collect();
        if !self.shape_ok(&pieces, &kv) {
            return Ok(None);
        }
        Ok(Some(Candidate { knots, pieces }))
    }

    fn window_d_for_theory(&self) -> usize {
        2 * self.r * self.r
    }

    /// Maps a normalized candidate back, reusing the original end polynomials
    /// wherever a piece equals one of them.
    fn to_patch(&self, cand: Candidate) -> Patch {
        let knots = cand.knots.iter().map(|&i| self.mesh_orig[i]).collect();
        let origin = -self.c / self.lambda;
        let scale = 1.0 / self.lambda;
        let pieces = cand
            .pieces
            .into_iter()
            .map(|p| {
                if p == self.p1 {
                    self.orig_left.clone()
                } else if p == self.p2 {
                    self.orig_right.clone()
                } else {
                    p.compose_affine(origin, scale)
                }
            })
            .collect();
        Patch { knots, pieces }
    }
}

#[derive(Clone, Copy, Debug)]
enum Closing {
    Adaptive(Region),
    Theoretical { d1: usize },
}

/// Smooths `s = left | right` (knot `c` in `(a, b)`) on the mesh points
/// `mesh` (sorted, inside `(a, b)`). `None` means `s` is already a single
/// polynomial there and is left alone.
pub(crate) fn smooth_knot_patch(
    left: &Polynomial,
    right: &Polynomial,
    a: f64,
    c: f64,
    b: f64,
    mesh: &[f64],
    cfg: &GlueConfig,
    tol: f64,
) -> Result<Option<Patch>> {
    let (q, r) = (cfg.q, cfg.r);
    for p in [left, right] {
        if p.effective_degree() > q + r {
            return Err(Error::invalid(format!("piece degree {} exceeds q + r = {}", p.effective_degree(), q + r)));
        }
    }
    check_two_piece_shape(left, right, a, c, b, q, tol)?;
    if left == right {
        return Ok(None);
    }
    let local = Local::new(left, right, a, c, b, mesh, q, r, tol)?;
    // One polynomial in two representations.
    let (u, v) = (local.p1.recentered(0.0), local.p2.recentered(0.0));
    if u.sub(&v).max_abs_coeff() <= SAME_POLY * (1.0 + u.max_abs_coeff()) {
        return Ok(None);
    }
    let unit = Interval::new(-1.0, 1.0);
    let eta = sup_norm_poly(&local.s1.sub(&local.s2), unit);
    let mag = sup_norm_poly(&local.s1, unit).max(sup_norm_poly(&local.s2, unit));
    let c_on_mesh = mesh.binary_search_by(|x| x.total_cmp(&c)).is_ok();
    if eta == 0.0 && c_on_mesh {
        return Ok(None);
    }
    let li = if eta <= 1e-14 * (1.0 + mag) {
        // No usable jump: any interval on the right works.
        LargeInterval {
            interval: Interval::new(0.5, 1.0),
            lower_bound: 0.0,
            right_side: true,
            x_star: 0.75,
            eta,
        }
    } else {
        find_large_interval(&local.s_two_piece()?, r)?
    };
    match cfg.delta_mode {
        DeltaMode::Theoretical => {
            let mut pts = vec![a];
            pts.extend_from_slice(mesh);
            pts.push(b);
            let gap = pts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            let limit = cfg.theoretical_delta() * (c - a).min(b - c);
            if !(gap < limit) {
                return Err(Error::MeshTooCoarse {
                    x: c,
                    reason: format!("largest mesh gap {gap:e} is not below {limit:e}"),
                });
            }
            let cand = local
                .attempt(cfg.d, Closing::Theoretical { d1: cfg.d1 }, &li)?
                .ok_or(Error::ShapeCertificationFailed {
                    witness: c,
                    value: f64::NAN,
                    attempts: 1,
                })?;
            Ok(Some(local.to_patch(cand)))
        }
        DeltaMode::Adaptive => {
            let mut windows = vec![cfg.d];
            let mut w = cfg.d;
            while w / 2 >= r && windows.len() < 3 {
                w /= 2;
                windows.push(w);
            }
            if windows[windows.len() - 1] > r {
                windows.push(r);
            }
            windows.truncate(3);
            let mut attempts = 0;
            let mut last_err = None;
            for &wd in &windows {
                for region in [Region::WholeSide, Region::Plateau, Region::Large] {
                    if attempts >= MAX_ATTEMPTS {
                        break;
                    }
                    attempts += 1;
                    match local.attempt(wd, Closing::Adaptive(region), &li) {
                        Ok(Some(cand)) => return Ok(Some(local.to_patch(cand))),
                        Ok(None) => {}
                        Err(e @ Error::MeshTooCoarse { .. }) | Err(e @ Error::GlueFailed { .. }) => {
                            last_err = Some(e);
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            match last_err {
                Some(e @ Error::MeshTooCoarse { .. }) if attempts == windows.len().min(MAX_ATTEMPTS) => Err(e),
                _ => Err(Error::ShapeCertificationFailed {
                    witness: c,
                    value: f64::NAN,
                    attempts,
                }),
            }
        }
    }
}

/// Pieces of the smoothed function on every interval of `mesh`, given the
/// input `s` and the patches around its knots.
fn assemble(s: &PiecewisePoly, mesh: &Partition, patches: &[Option<Patch>]) -> PiecewisePoly {
    let z = s.partition();
    let t = mesh.breakpoints();
    let pieces = t
        .windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            let k = z.locate(m);
            let own = z.interval(k);
            // Knot whose core interval holds m.
            let j = if m < own.midpoint() { k } else { k + 1 };
            if let Some(Some(patch)) = patches.get(j) {
                let (lo, hi) = (patch.knots[0], patch.knots[patch.knots.len() - 1]);
                if m > lo && m < hi {
                    let i = patch.knots.partition_point(|&x| x <= m) - 1;
                    return patch.pieces[i].clone();
                }
            }
            s.pieces()[k].clone()
        })
        .collect();
    PiecewisePoly::from_parts(mesh.clone(), pieces)
}

fn shape_failure(out: &PiecewisePoly, q: usize, tol: f64, attempts: usize) -> Result<()> {
    let v = out.shape_verdict(&ShapeSpec::with_tol(q, tol)?)?;
    if !v.holds {
        return Err(Error::ShapeCertificationFailed {
            witness: v.witness.unwrap_or(f64::NAN),
            value: v.value.unwrap_or(f64::NAN),
            attempts,
        });
    }
    Ok(())
}

/// Smooths a two-piece `s` on `[a, b]` (one interior knot `c`) into a
/// `q`-monotone spline of degree `q + r` and minimal defect on the partition
/// `knots` of `[a, b]`, equal to `s` near `a` and `b`.
pub fn smooth_single_knot(s: &PiecewisePoly, q: usize, r: usize, knots: &Partition, mode: DeltaMode) -> Result<PiecewisePoly> {
    let cfg = GlueConfig::new(q, r, mode)?;
    if s.n() != 2 {
        return Err(Error::invalid("smooth_single_knot needs exactly one interior knot"));
    }
    if !knots.same_domain(s.partition()) {
        let (d0, d1) = (knots.domain(), s.domain());
        return Err(Error::DomainMismatch {
            a0: d0.lo,
            b0: d0.hi,
            a1: d1.lo,
            b1: d1.hi,
        });
    }
    let bp = s.breakpoints();
    let (a, c, b) = (bp[0], bp[1], bp[2]);
    let mesh = &knots.breakpoints()[1..knots.n()];
    let patch = smooth_knot_patch(&s.pieces()[0], &s.pieces()[1], a, c, b, mesh, &cfg, DEFAULT_TOL)?;
    // Core-interval lookup in `assemble` treats [a, b] as J_0 ∪ J_1 around c.
    let z = Partition::new(vec![a, c, b])?;
    let patches = [None, patch, None];
    let pieces = knots
        .breakpoints()
        .windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            if let Some(p) = &patches[1] {
                let (lo, hi) = (p.knots[0], p.knots[p.knots.len() - 1]);
                if m > lo && m < hi {
                    let i = p.knots.partition_point(|&x| x <= m) - 1;
                    return p.pieces[i].clone();
                }
            }
            s.pieces()[z.locate(m)].clone()
        })
        .collect();
    let out = PiecewisePoly::from_parts(knots.clone(), pieces);
    shape_failure(&out, q, DEFAULT_TOL, 1)?;
    Ok(out)
}

fn check_on_partition(s: &PiecewisePoly, z: &Partition) -> Result<()> {
    let a = s.breakpoints();
    let b = z.breakpoints();
    let tol = 1e-12 * z.domain().len();
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > tol) {
        return Err(Error::InvalidPartition {
            reason: "the input is not defined on the given partition".into(),
        });
    }
    Ok(())
}

/// Smooths `s ∈ Σ_{q+r}(Z) ∩ Δ^q ∩ C^{q-1}` into a `q`-monotone spline of
/// degree `q + r` and smoothness `C^{q+r-1}` on the remesh `Zt`, one core
/// interval at a time.
pub fn smooth_minimal_defect(
    s: &PiecewisePoly,
    q: usize,
    r: usize,
    z: &Partition,
    zt: &Partition,
    opts: &SmoothOptions,
) -> Result<(PiecewisePoly, SmoothingReport)> {
    let out = smooth_minimal_defect_only(s, q, r, z, zt, opts)?;
    let report = smoothing_report(s, &out, z, &ReportConfig::new(q, r, opts))?;
    Ok((out, report))
}

pub(crate) fn smooth_minimal_defect_only(s: &PiecewisePoly, q: usize, r: usize, z: &Partition, zt: &Partition, opts: &SmoothOptions) -> Result<PiecewisePoly> {
    let cfg = GlueConfig::new(q, r, opts.mode)?;
    check_on_partition(s, z)?;
    let delta = cfg.operative_delta();
    let verdict = is_delta_remesh(zt, z, delta)?;
    if !verdict.is_remesh {
        return Err(Error::NotARemesh {
            delta,
            worst_j: verdict.worst_j,
            worst_ratio: verdict.worst_ratio,
        });
    }
    let shape = s.shape_verdict(&ShapeSpec::with_tol(q, opts.tol)?)?;
    if !shape.holds {
        return Err(Error::NotInShapeClass {
            q,
            witness: shape.witness.unwrap_or(f64::NAN),
            value: shape.value.unwrap_or(f64::NAN),
        });
    }
    let cores = z.core_intervals();
    let n = z.n();
    let t = zt.breakpoints();
    let refine = if opts.mode == DeltaMode::Adaptive { opts.max_refinements } else { 0 };
    let results: Vec<(Option<Patch>, Option<Vec<f64>>)> = (0..=n)
        .into_par_iter()
        .map(|j| {
            if j == 0 || j == n {
                return Ok((None, None));
            }
            let core = cores[j];
            let lo = t.partition_point(|&x| x <= core.lo);
            let hi = t.partition_point(|&x| x < core.hi);
            let mut mesh = t[lo..hi.max(lo)].to_vec();
            let (left, right, c) = (&s.pieces()[j - 1], &s.pieces()[j], z.breakpoints()[j]);
            let mut level = 0;
            loop {
                match smooth_knot_patch(left, right, core.lo, c, core.hi, &mesh, &cfg, opts.tol) {
                    Ok(patch) => return Ok((patch, (level > 0).then_some(mesh))),
                    Err(e) if level < refine && is_mesh_failure(&e) => {
                        mesh = halve_inside(&mesh, core);
                        level += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<_>>()?;
    let zt = refined_mesh(zt, results.iter().filter_map(|r| r.1.as_deref()))?;
    let patches: Vec<Option<Patch>> = results.into_iter().map(|r| r.0).collect();
    let out = assemble(s, &zt, &patches);
    shape_failure(&out, q, opts.tol, 1)?;
    Ok(out)
}

fn is_mesh_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::MeshTooCoarse { .. } | Error::ShapeCertificationFailed { .. } | Error::GlueFailed { .. }
    )
}

/// Gaps below this fraction of the core interval are not split.
const MIN_SPLIT: f64 = 1e-9;

/// `mesh` with the midpoint of every gap of `{lo} ∪ mesh ∪ {hi}` added.
fn halve_inside(mesh: &[f64], core: Interval) -> Vec<f64> {
    let mut pts = Vec::with_capacity(2 * mesh.len() + 2);
    pts.push(core.lo);
    pts.extend_from_slice(mesh);
    pts.push(core.hi);
    let mut out = Vec::with_capacity(2 * mesh.len() + 1);
    for (i, w) in pts.windows(2).enumerate() {
        if i > 0 {
            out.push(w[0]);
        }
        if w[1] - w[0] > MIN_SPLIT * core.len() {
            out.push(0.5 * (w[0] + w[1]));
        }
    }
    out
}

/// `zt` with the points of the refined local meshes added.
fn refined_mesh<'a>(zt: &Partition, extra: impl Iterator<Item = &'a [f64]>) -> Result<Partition> {
    let mut pts = zt.breakpoints().to_vec();
    let before = pts.len();
    for m in extra {
        pts.extend_from_slice(m);
    }
    if pts.len() == before {
        return Ok(zt.clone());
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Partition::new(pts)
}

/// Relative size under which a derivative jump is treated as exactly zero by
/// the explicit pre-smoothing, so that already smooth knots stay untouched.
const JUMP_ZERO: f64 = 1e-14;

fn jumps_of(s: &PiecewisePoly, k: usize) -> Vec<f64> {
    s.knot_jumps(k)
        .into_iter()
        .map(|d| if d.is_negligible(JUMP_ZERO) { 0.0 } else { d.jump })
        .collect()
}

/// Corrections `a_i` (quadratic in `x - z_i`) and `b_i` (in `x - z_{i+1}`)
/// that remove derivative jumps `jump[j]` at `z_{j+1}` without new knots.
fn convex_corrections(z: &[f64], jumps: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = z.len() - 1;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let jump = jumps[i];
        a[i] = (z[i + 2] - z[i + 1]) * jump / (2.0 * (z[i + 1] - z[i]) * (z[i + 2] - z[i]));
    }
    for i in 1..n {
        let jump = jumps[i - 1];
        b[i] = (z[i] - z[i - 1]) * jump / (2.0 * (z[i + 1] - z[i]) * (z[i + 1] - z[i - 1]));
    }
    (a, b)
}

/// `C^1` convex smoothing without new knots: adds `a_i (x - z_i)^2 + b_i (x -
/// z_{i+1})^2` on every `[z_i, z_{i+1}]`, keeping value and slope at both
/// ends.
pub fn convex_c1_smooth(s: &PiecewisePoly, z: &Partition) -> Result<PiecewisePoly> {
    check_on_partition(s, z)?;
    let v = s.shape_verdict(&ShapeSpec::new(2)?)?;
    if !v.holds {
        return Err(Error::NotConvex {
            witness: v.witness.unwrap_or(f64::NAN),
            value: v.value.unwrap_or(f64::NAN),
        });
    }
    let zb = z.breakpoints();
    let (a, b) = convex_corrections(zb, &jumps_of(s, 1));
    let pieces = s
        .pieces()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if a[i] == 0.0 && b[i] == 0.0 {
                return p.clone();
            }
            let mut out = p.clone();
            if a[i] != 0.0 {
                out = out.add(&Polynomial::new(zb[i], vec![0.0, 0.0, a[i]]));
            }
            if b[i] != 0.0 {
                out = out.add(&Polynomial::new(zb[i + 1], vec![0.0, 0.0, b[i]]));
            }
            out
        })
        .collect();
    Ok(PiecewisePoly::from_parts(z.clone(), pieces))
}

/// Continuous monotone smoothing without new knots: the derivative of the
/// convex smoothing of `∫ s`, i.e. `s_i + 2 a_i (x - z_i) + 2 b_i (x -
/// z_{i+1})` with the value jumps of `s`. Endpoint values are kept.
pub fn monotone_c0_smooth(s: &PiecewisePoly, z: &Partition) -> Result<PiecewisePoly> {
    check_on_partition(s, z)?;
    let v = s.shape_verdict(&ShapeSpec::new(1)?)?;
    if !v.holds {
        return Err(Error::NotMonotone {
            witness: v.witness.unwrap_or(f64::NAN),
            value: v.value.unwrap_or(f64::NAN),
        });
    }
    let zb = z.breakpoints();
    let (a, b) = convex_corrections(zb, &jumps_of(s, 0));
    let pieces = s
        .pieces()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if a[i] == 0.0 && b[i] == 0.0 {
                return p.clone();
            }
            let mut out = p.clone();
            if a[i] != 0.0 {
                out = out.add(&Polynomial::new(zb[i], vec![0.0, 2.0 * a[i]]));
            }
            if b[i] != 0.0 {
                out = out.add(&Polynomial::new(zb[i + 1], vec![0.0, 2.0 * b[i]]));
            }
            out
        })
        .collect();
    Ok(PiecewisePoly::from_parts(z.clone(), pieces))
}

/// The input on the quarter-point refinement of `Z`, made `C^{q-1}` by the
/// explicit smoothing on every `[r_{i-1}, l_i]`.
pub fn presmooth_q12(s: &PiecewisePoly, q: usize, z: &Partition) -> Result<(PiecewisePoly, Partition)> {
    check_on_partition(s, z)?;
    if q != 1 && q != 2 {
        return Err(Error::invalid(format!("this pipeline handles q = 1 or 2, got {q}")));
    }
    let star = z.quarter_refine();
    let mut pieces: Vec<Polynomial> = s.pieces().iter().flat_map(|p| [p.clone(), p.clone(), p.clone()]).collect();
    let zs = star.breakpoints().to_vec();
    let shape = s.shape_verdict(&ShapeSpec::new(q)?)?;
    if !shape.holds {
        let (witness, value) = (shape.witness.unwrap_or(f64::NAN), shape.value.unwrap_or(f64::NAN));
        return Err(if q == 1 {
            Error::NotMonotone { witness, value }
        } else {
            Error::NotConvex { witness, value }
        });
    }
    for i in 1..z.n() {
        // Pieces 3i-1 and 3i of Z* sit on [r_{i-1}, z_i] and [z_i, l_i].
        let tri = Partition::new(vec![zs[3 * i - 1], zs[3 * i], zs[3 * i + 1]])?;
        let local = PiecewisePoly::new(tri.clone(), vec![pieces[3 * i - 1].clone(), pieces[3 * i].clone()])?;
        let smoothed = if q == 2 {
            convex_c1_smooth(&local, &tri)?
        } else {
            monotone_c0_smooth(&local, &tri)?
        };
        let [left, right]: [Polynomial; 2] = smoothed.into_pieces().try_into().expect("two pieces");
        pieces[3 * i - 1] = left;
        pieces[3 * i] = right;
    }
    Ok((PiecewisePoly::new(star.clone(), pieces)?, star))
}

/// Smooths a monotone (`q = 1`) or convex (`q = 2`) `s ∈ Σ_{q+r}(Z)`, with no
/// continuity assumed, into a `q`-monotone spline of degree `q + r` and
/// minimal defect on `Zt`, which must be a remesh of the quarter-point
/// refinement of `Z`.
pub fn smooth_shape_q12(
    s: &PiecewisePoly,
    q: usize,
    r: usize,
    z: &Partition,
    zt: &Partition,
    opts: &SmoothOptions,
) -> Result<(PiecewisePoly, SmoothingReport)> {
    let (star, star_z) = presmooth_q12(s, q, z)?;
    let out = smooth_minimal_defect_only(&star, q, r, &star_z, zt, opts)?;
    let report = smoothing_report(s, &out, z, &ReportConfig::new(q, r, opts))?;
    Ok((out, report))
}

/// Which construction [`smooth`] runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// [`smooth_minimal_defect`] when the input is already `C^{q-1}`,
    /// otherwise [`smooth_shape_q12`].
    #[default]
    Auto,
    MinimalDefect,
    ShapeQ12,
}

/// Where the output knots come from.
#[derive(Clone, Debug, PartialEq)]
pub enum RemeshChoice {
    /// [`default_remesh`](crate::partition::default_remesh) (adaptive kind)
    /// of the partition the pipeline refines, with the given `δ` or the
    /// operative one.
    Auto(Option<f64>),
    Given(Partition),
}

/// Result of [`smooth`].
#[derive(Clone, Debug)]
pub struct SmoothOutcome {
    pub output: PiecewisePoly,
    pub report: SmoothingReport,
    pub pipeline: Pipeline,
}

/// Smooths `s` on its own partition, choosing the pipeline and building the
/// remesh as requested.
pub fn smooth(s: &PiecewisePoly, q: usize, r: usize, pipeline: Pipeline, remesh: &RemeshChoice, opts: &SmoothOptions) -> Result<SmoothOutcome> {
    let cfg = GlueConfig::new(q, r, opts.mode)?;
    let pipeline = match pipeline {
        Pipeline::Auto if q <= 2 && s.smoothness_class(opts.tol) < q as i64 - 1 => Pipeline::ShapeQ12,
        Pipeline::Auto => Pipeline::MinimalDefect,
        p => p,
    };
    let z = s.partition();
    let zt = match remesh {
        RemeshChoice::Given(zt) => zt.clone(),
        RemeshChoice::Auto(delta) => {
            let base = if pipeline == Pipeline::ShapeQ12 { z.quarter_refine() } else { z.clone() };
            crate::partition::default_remesh(&base, delta.unwrap_or_else(|| cfg.operative_delta()), crate::partition::RemeshKind::Adaptive)?
        }
    };
    let (output, report) = match pipeline {
        Pipeline::ShapeQ12 => smooth_shape_q12(s, q, r, z, &zt, opts)?,
        _ => smooth_minimal_defect(s, q, r, z, &zt, opts)?,
    };
    Ok(SmoothOutcome { output, report, pipeline })
}
