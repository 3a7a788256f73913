#![allow(dead_code)]

use klest::ProbVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the simplex (flat Dirichlet via normalised exponentials).
pub fn random_simplex(rng: &mut impl Rng, k: usize) -> ProbVec {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    ProbVec::new(w.into_iter().map(|x| x / s).collect()).unwrap()
}

/// A random pair with `1/max_ratio <= p(i)/q(i) <= max_ratio`, by rejection.
///
/// `q` is uniform on the simplex; `p` multiplies `q` by log-uniform factors in
/// `[1/max_ratio, max_ratio]` and renormalises.
pub fn ratio_bounded_pair(rng: &mut impl Rng, k: usize, max_ratio: f64) -> (ProbVec, ProbVec) {
    let lr = max_ratio.ln();
    loop {
        let q = random_simplex(rng, k);
        let w: Vec<f64> = q
            .as_slice()
            .iter()
            .map(|&x| x * rng.random_range(-lr..lr).exp())
            .collect();
        let s: f64 = w.iter().sum();
        let p: Vec<f64> = w.into_iter().map(|x| x / s).collect();
        let ok = p.iter().zip(q.as_slice()).all(|(&a, &b)| {
            let r = a / b;
            r <= max_ratio && r >= 1.0 / max_ratio
        });
        if ok {
            return (ProbVec::new(p).unwrap(), q);
        }
    }
}

/// A random (p, q, r, V) with `r(i)/q(i) <= V` for all `i`, by rejection on V.
pub fn yang_barron_triple(rng: &mut impl Rng, k: usize) -> (ProbVec, ProbVec, ProbVec, f64) {
    const VS: [f64; 4] = [1.5, 2.0, 5.0, 20.0];
    let v = VS[rng.random_range(0..VS.len())];
    loop {
        let p = random_simplex(rng, k);
        let q = random_simplex(rng, k);
        let r = random_simplex(rng, k);
        let max = r
            .as_slice()
            .iter()
            .zip(q.as_slice())
            .map(|(a, b)| a / b)
            .fold(0.0, f64::max);
        if max <= v {
            return (p, q, r, v);
        }
    }
}

/// Random 1-based labels over `[k]`.
pub fn random_labels(rng: &mut impl Rng, k: usize, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(1..=k)).collect()
}
