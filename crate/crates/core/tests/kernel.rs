mod common;

use common::{max_abs_diff, normal_sample, rng, to_dmatrix};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;
use rkcca_core::{
    center_test, center_uniform, center_weighted, cross_gram, gram, median_bandwidth,
    CenteringWeights, GramMatrix, KernelSpec, ResolvedKernel, SampleMatrix,
};

#[test]
fn median_bandwidth_matches_double_loop() {
    let x = normal_sample(100, 5, &mut rng(1));
    let mut dists = Vec::new();
    for i in 0..100 {
        for j in 0..100 {
            if i < j {
                let d: f64 = (0..5).map(|k| (x.get(i, k) - x.get(j, k)).powi(2)).sum();
                dists.push(d.sqrt());
            }
        }
    }
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let expected = 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
    assert_eq!(median_bandwidth(&x).unwrap(), expected);
}

/// Explicit feature map of `(1 + <x, y>)²` in two dimensions.
fn poly_features(x: &[f64]) -> DVector<f64> {
    let s = std::f64::consts::SQRT_2;
    DVector::from_vec(vec![
        1.0,
        s * x[0],
        s * x[1],
        x[0] * x[0],
        x[1] * x[1],
        s * x[0] * x[1],
    ])
}

fn poly_gram(a: &SampleMatrix, b: &SampleMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        let d: f64 = a.row(i).iter().zip(b.row(j)).map(|(u, v)| u * v).sum();
        (1.0 + d).powi(2)
    })
}

fn to_gram(m: &DMatrix<f64>) -> GramMatrix {
    GramMatrix::from_values(faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])).unwrap()
}

fn random_weights(n: usize, rng: &mut impl Rng) -> CenteringWeights {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    CenteringWeights::from_masses(&raw).unwrap()
}

#[test]
fn weighted_centering_matches_feature_space() {
    let mut r = rng(2);
    let x = normal_sample(20, 2, &mut r);
    let w = random_weights(20, &mut r);
    let feats: Vec<DVector<f64>> = (0..20).map(|i| poly_features(x.row(i))).collect();
    let mean = feats
        .iter()
        .zip(w.as_slice())
        .fold(DVector::zeros(6), |acc, (f, wi)| acc + f * *wi);
    let expected = DMatrix::from_fn(20, 20, |i, j| (&feats[i] - &mean).dot(&(&feats[j] - &mean)));
    let g = to_gram(&poly_gram(&x, &x));
    let got = to_dmatrix(&center_weighted(&g, &w).unwrap());
    assert!(max_abs_diff(&got, &expected) < 1e-10);
}

#[test]
fn test_centering_matches_feature_space() {
    let mut r = rng(3);
    let x = normal_sample(20, 2, &mut r);
    let t = normal_sample(7, 2, &mut r);
    let w = random_weights(20, &mut r);
    let feats: Vec<DVector<f64>> = (0..20).map(|i| poly_features(x.row(i))).collect();
    let mean = feats
        .iter()
        .zip(w.as_slice())
        .fold(DVector::zeros(6), |acc, (f, wi)| acc + f * *wi);
    let expected = DMatrix::from_fn(7, 20, |i, j| {
        (poly_features(t.row(i)) - &mean).dot(&(&feats[j] - &mean))
    });
    let g = to_gram(&poly_gram(&x, &x));
    let kt = poly_gram(&t, &x);
    let kt = faer::Mat::from_fn(7, 20, |i, j| kt[(i, j)]);
    let got = center_test(&kt, &g, &w).unwrap();
    let got = DMatrix::from_fn(7, 20, |i, j| got[(i, j)]);
    assert!(max_abs_diff(&got, &expected) < 1e-10);
}

#[test]
fn test_centering_rejects_mismatch() {
    let x = normal_sample(10, 2, &mut rng(4));
    let g = gram(&x, &KernelSpec::Linear).unwrap();
    let kt = faer::Mat::<f64>::zeros(3, 9);
    assert!(center_test(&kt, &g, &CenteringWeights::uniform(10)).is_err());
}

#[test]
fn gaussian_cross_gram_uses_training_bandwidth() {
    let x = normal_sample(15, 3, &mut rng(5));
    let k = KernelSpec::gaussian_median().resolve(&x).unwrap();
    let ResolvedKernel::Gaussian { sigma } = k else {
        panic!("expected a Gaussian kernel");
    };
    assert_eq!(sigma, median_bandwidth(&x).unwrap());
    let c = cross_gram(&x, &x, &k).unwrap();
    let g = gram(&x, &KernelSpec::gaussian(sigma).unwrap()).unwrap();
    for i in 0..15 {
        for j in 0..15 {
            assert!((c[(i, j)] - g.get(i, j)).abs() < 1e-15);
        }
    }
}

fn sample_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
    (3usize..16, 1usize..4).prop_flat_map(|(n, d)| {
        (
            Just(n),
            Just(d),
            prop::collection::vec(-3.0f64..3.0, n * d),
            prop::collection::vec(0.01f64..1.0, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaussian_gram_properties((n, d, data, masses) in sample_strategy()) {
        let x = SampleMatrix::new(n, d, data).unwrap();
        prop_assume!(median_bandwidth(&x).is_ok());
        let g = gram(&x, &KernelSpec::gaussian_median()).unwrap();
        for i in 0..n {
            prop_assert_eq!(g.get(i, i), 1.0);
            for j in 0..n {
                prop_assert!(g.get(i, j) > 0.0 && g.get(i, j) <= 1.0);
                prop_assert!((g.get(i, j) - g.get(j, i)).abs() <= 1e-12);
            }
        }
        let w = CenteringWeights::from_masses(&masses).unwrap();
        let cw = center_weighted(&g, &w).unwrap();
        let m = to_dmatrix(&cw);
        let wv = DVector::from_column_slice(w.as_slice());
        prop_assert!((&m * &wv).amax() < 1e-10);
        let eig = SymmetricEigen::new(m).eigenvalues;
        prop_assert!(eig.min() > -1e-8 * n as f64);
        let cu = to_dmatrix(&center_uniform(&g).unwrap());
        let cu_w = to_dmatrix(&center_weighted(&g, &CenteringWeights::uniform(n)).unwrap());
        prop_assert!(max_abs_diff(&cu, &cu_w) < 1e-12);
        for i in 0..n {
            prop_assert!(cu.row(i).sum().abs() < 1e-10 * n as f64);
        }
    }

    #[test]
    fn test_centering_on_training_set((n, d, data, masses) in sample_strategy()) {
        let x = SampleMatrix::new(n, d, data).unwrap();
        let g = gram(&x, &KernelSpec::Linear).unwrap();
        let w = CenteringWeights::from_masses(&masses).unwrap();
        let got = center_test(g.values(), &g, &w).unwrap();
        let expected = center_weighted(&g, &w).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((got[(i, j)] - expected.get(i, j)).abs() < 1e-12);
            }
        }
    }
}
