//! Clamped B-spline bases on a finite knot sequence, with pieces produced as
//! explicit polynomials.

use crate::poly::{binomial, Polynomial};

/// Degree-`R` B-splines on the clamped knot vector built from breaks
/// `x_0 < ... < x_d`: `x_0` and `x_d` repeated `R + 1` times, the interior
/// breaks simple. There are `d + R` basis functions.
pub(crate) struct ClampedBasis {
    degree: usize,
    breaks: Vec<f64>,
    t: Vec<f64>,
}

impl ClampedBasis {
    pub(crate) fn new(breaks: &[f64], degree: usize) -> Self {
        let d = breaks.len() - 1;
        let mut t = Vec::with_capacity(d + 2 * degree + 1);
        t.extend(std::iter::repeat(breaks[0]).take(degree + 1));
        t.extend_from_slice(&breaks[1..d]);
        t.extend(std::iter::repeat(breaks[d]).take(degree + 1));
        ClampedBasis {
            degree,
            breaks: breaks.to_vec(),
            t,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.breaks.len() - 1 + self.degree
    }

    /// The `R + 1` basis functions `N_k, ..., N_{k+R}` that are nonzero on
    /// `[x_k, x_{k+1}]`, as polynomials centered at `x_k`.
    pub(crate) fn active_on(&self, k: usize) -> Vec<Polynomial> {
        let r = self.degree;
        let xk = self.breaks[k];
        let mu = k + r;
        let t = &self.t;
        // Coefficient vectors in u = x - x_k; level j holds N_{mu-j..=mu, j}.
        let mut level: Vec<Vec<f64>> = vec![vec![1.0]];
        for j in 1..=r {
            let mut next = Vec::with_capacity(j + 1);
            for idx in 0..=j {
                let i = mu - j + idx;
                let mut acc = vec![0.0; j + 1];
                // (x - t_i)/(t_{i+j} - t_i) N_{i,j-1}
                if idx >= 1 {
                    let prev = &level[idx - 1];
                    let den = t[i + j] - t[i];
                    if den > 0.0 {
                        add_linear_times(&mut acc, prev, (xk - t[i]) / den, 1.0 / den);
                    }
                }
                // (t_{i+j+1} - x)/(t_{i+j+1} - t_{i+1}) N_{i+1,j-1}
                if idx < j {
                    let prev = &level[idx];
                    let den = t[i + j + 1] - t[i + 1];
                    if den > 0.0 {
                        add_linear_times(&mut acc, prev, (t[i + j + 1] - xk) / den, -1.0 / den);
                    }
                }
                next.push(acc);
            }
            level = next;
        }
        level.into_iter().map(|c| Polynomial::new(xk, c)).collect()
    }

    /// B-spline coefficients of a polynomial of degree `<= R`: its blossom at
    /// `(t_{i+1}, ..., t_{i+R})`.
    pub(crate) fn coefficients_of(&self, p: &Polynomial) -> Vec<f64> {
        let r = self.degree;
        let c0 = self.breaks[0];
        let local = p.recentered(c0).padded(r);
        let a = local.coeffs();
        (0..self.len())
            .map(|i| {
                let args: Vec<f64> = self.t[i + 1..=i + r].iter().map(|u| u - c0).collect();
                let e = elementary_symmetric(&args);
                (0..=r).map(|k| a[k] * e[k] / binomial(r, k)).sum()
            })
            .collect()
    }
}

/// `acc += (a + b u) * prev`.
fn add_linear_times(acc: &mut [f64], prev: &[f64], a: f64, b: f64) {
    for (m, &c) in prev.iter().enumerate() {
        acc[m] += a * c;
        acc[m + 1] += b * c;
    }
}

/// `e_0, ..., e_n` of the given values.
fn elementary_symmetric(vals: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; vals.len() + 1];
    e[0] = 1.0;
    for (n, &v) in vals.iter().enumerate() {
        for k in (1..=n + 1).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e
}
