#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rkcca_core::{GramMatrix, SampleMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_sample(n: usize, d: usize, rng: &mut ChaCha8Rng) -> SampleMatrix {
    SampleMatrix::from_fn(n, d, |_, _| StandardNormal.sample(rng)).unwrap()
}

/// Pairs with population correlation `rho` in the first coordinate.
pub fn bivariate_normal(n: usize, rho: f64, rng: &mut ChaCha8Rng) -> (SampleMatrix, SampleMatrix) {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        xs.push(a);
        ys.push(rho * a + (1.0 - rho * rho).sqrt() * b);
    }
    (
        SampleMatrix::new(n, 1, xs).unwrap(),
        SampleMatrix::new(n, 1, ys).unwrap(),
    )
}

pub fn to_dmatrix(g: &GramMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(g.n(), g.n(), |i, j| g.get(i, j))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}
