#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapesmooth::norms::modulus;
use shapesmooth::{Exponent, Interval, Partition, PiecewisePoly, Polynomial};

/// Random partition of a random interval with `n` intervals and adjacent
/// length ratios in `[1/scale, scale]`.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Partition {
    let mut lens = vec![1.0f64];
    for _ in 1..n {
        let last = *lens.last().unwrap();
        let f = scale.powf(rng.gen_range(-1.0..=1.0));
        lens.push(last * f);
    }
    let total: f64 = lens.iter().sum();
    let a = rng.gen_range(-2.0..2.0);
    let width = rng.gen_range(0.5..4.0);
    let mut z = vec![a];
    let mut acc = 0.0;
    for l in &lens[..n - 1] {
        acc += l;
        z.push(a + width * acc / total);
    }
    z.push(a + width);
    Partition::new(z).unwrap()
}

/// Polynomial of degree `deg` on `[lo, hi]` from Bernstein coefficients,
/// centered at `lo`.
pub fn from_bernstein(b: &[f64], lo: f64, hi: f64) -> Polynomial {
    let deg = b.len() - 1;
    let h = hi - lo;
    // sum_i b_i C(deg,i) u^i (1-u)^(deg-i), u = (x - lo)/h
    let mut c = vec![0.0; deg + 1];
    for (i, &bi) in b.iter().enumerate() {
        let ci = binom(deg, i) * bi;
        for k in 0..=deg - i {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            c[i + k] += ci * binom(deg - i, k) * sign;
        }
    }
    let coeffs = c.iter().enumerate().map(|(k, v)| v / h.powi(k as i32)).collect();
    Polynomial::new(lo, coeffs)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Random `q`-monotone ppf of degree `q + r` on `z`: nonnegative Bernstein
/// `q`-th derivatives, nonnegative jumps of order `q - 1`, continuity below.
pub fn random_q_monotone(rng: &mut ChaCha8Rng, z: &Partition, q: usize, r: usize, continuous: bool) -> PiecewisePoly {
    let bp = z.breakpoints();
    let mut taylor: Vec<f64> = (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut pieces = Vec::new();
    for i in 0..z.n() {
        let (lo, hi) = (bp[i], bp[i + 1]);
        let b: Vec<f64> = (0..=r).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect();
        let mut p = from_bernstein(&b, lo, hi);
        for k in (0..q).rev() {
            p = p.antiderivative().add_constant(taylor[k]);
        }
        for (k, t) in taylor.iter_mut().enumerate() {
            *t = p.derivative_at(hi, k);
        }
        if !continuous && rng.gen_bool(0.6) {
            taylor[q - 1] += rng.gen_range(0.0..1.0);
        }
        pieces.push(p);
    }
    PiecewisePoly::new(z.clone(), pieces).unwrap()
}

pub fn unit() -> Interval {
    Interval::new(-1.0, 1.0)
}

/// Random `q`-monotone input of degree `q + r` on a random partition of
/// 4 to 12 intervals with scale at most 3, no continuity beyond the shape.
pub fn shape_instance(rng: &mut ChaCha8Rng, q: usize, r: usize) -> PiecewisePoly {
    let n = rng.gen_range(4..=12);
    let z = random_partition(rng, n, 3.0);
    random_q_monotone(rng, &z, q, r, false)
}

/// `|J_j|^{k+1/p} |jump_k(z_j)| / ω_{r+1}(s, [z_{j-1}, z_{j+1}])_p` over all
/// interior knots and all `k <= r` of random `s ∈ Σ_r(Z)` with `scale(Z) <=
/// 2`; returns the largest ratio seen. Knots where the modulus vanishes
/// (and so does every jump) are skipped.
pub fn jump_ratio_max(seed: u64, instances: usize, p: Exponent, resolution: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.gen_range(2..=6);
        let r = rng.gen_range(1..=3);
        let z = random_partition(&mut rng, n, 2.0);
        assert!(z.scale() <= 2.0 + 1e-12);
        let bp = z.breakpoints().to_vec();
        let pieces = bp[..n]
            .iter()
            .map(|&c| Polynomial::new(c, (0..=r).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let s = PiecewisePoly::new(z, pieces).unwrap();
        for j in 1..n {
            let around = Interval::new(bp[j - 1], bp[j + 1]);
            let m = modulus(&s, r + 1, around.len(), around, p, resolution).unwrap().value;
            if m <= 1e-12 {
                continue;
            }
            let len = bp[j + 1] - bp[j];
            let inv_p = match p {
                Exponent::Infinity => 0.0,
                Exponent::Finite(p) => 1.0 / p,
            };
            for k in 0..=r {
                let jump = s.knot_jumps(k)[j - 1].jump.abs();
                worst = worst.max(len.powf(k as f64 + inv_p) * jump / m);
            }
        }
    }
    worst
}
