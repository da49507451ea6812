//! Kernel evaluation, Gram matrices and centering in feature space.
//!
//! Centering subtracts a (possibly weighted) mean element from every feature
//! vector. With weights `w` summing to one and `H = I - 1 wᵀ`, the centered
//! Gram matrix is `H K Hᵀ`; uniform weights give the familiar `C K C` with
//! `C = I - 11ᵀ/n`. Test points are centered against the training mean element.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

/// Observations in rows, features in columns (row-major storage).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    /// Builds a sample from row-major `data`. Requires `n >= 2`, `d >= 1` and finite values.
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n}x{d} sample",
                data.len()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "a sample needs at least 2 observations, got {n}"
            )));
        }
        if d < 1 {
            return Err(Error::InvalidArgument("a sample needs at least 1 feature".into()));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} values, expected {d}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn from_fn(n: usize, d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            for j in 0..d {
                data.push(f(i, j));
            }
        }
        Self::new(n, d, data)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.d);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Self::new(rows.len(), self.d, data)
    }

    pub fn select_cols(&self, cols: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        Self::new(self.n, cols.len(), data)
    }

    pub fn to_mat(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.d, |i, j| self.get(i, j))
    }
}

/// Kernel family. A Gaussian kernel without a bandwidth resolves it with the
/// median heuristic on the sample it is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    Gaussian { bandwidth: Option<f64> },
    Linear,
}

impl KernelSpec {
    pub fn gaussian_median() -> Self {
        KernelSpec::Gaussian { bandwidth: None }
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gaussian bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(KernelSpec::Gaussian {
            bandwidth: Some(bandwidth),
        })
    }

    /// Fixes every free parameter against the sample `x`.
    pub fn resolve(&self, x: &SampleMatrix) -> Result<ResolvedKernel> {
        match *self {
            KernelSpec::Gaussian { bandwidth: Some(s) } => {
                KernelSpec::gaussian(s)?;
                Ok(ResolvedKernel::Gaussian { sigma: s })
            }
            KernelSpec::Gaussian { bandwidth: None } => Ok(ResolvedKernel::Gaussian {
                sigma: median_bandwidth(x)?,
            }),
            KernelSpec::Linear => Ok(ResolvedKernel::Linear),
        }
    }
}

/// A kernel with all parameters fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedKernel {
    /// `k(x, x') = exp(-|x - x'|² / (2 σ²))`
    Gaussian { sigma: f64 },
    /// `k(x, x') = <x, x'>`
    Linear,
}

impl ResolvedKernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            ResolvedKernel::Gaussian { sigma } => {
                (-squared_distance(a, b) / (2.0 * sigma * sigma)).exp()
            }
            ResolvedKernel::Linear => dot(a, b),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared Euclidean distances of all pairs `i < j`, in row-major upper-triangle order.
pub(crate) fn pairwise_squared_distances(x: &SampleMatrix) -> Vec<f64> {
    let n = x.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let xi = x.row(i);
        for j in (i + 1)..n {
            out.push(squared_distance(xi, x.row(j)));
        }
    }
    out
}

/// Median of the `n(n-1)/2` Euclidean distances between distinct rows.
pub fn median_bandwidth(x: &SampleMatrix) -> Result<f64> {
    let mut dist: Vec<f64> = pairwise_squared_distances(x)
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let m = util::median(&mut dist);
    if m > 0.0 {
        Ok(m)
    } else {
        Err(Error::ZeroMedianDistance)
    }
}

/// Median bandwidth of a resample given by distinct rows and their multiplicities.
/// Pairs of copies of the same row contribute zero distances.
pub(crate) fn median_bandwidth_with_counts(
    x: &SampleMatrix,
    counts: &[u64],
    sq_dists: &[f64],
) -> Result<f64> {
    let n = x.nrows();
    let mut items = Vec::with_capacity(sq_dists.len() + 1);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            items.push((sq_dists[k].sqrt(), counts[i] * counts[j]));
            k += 1;
        }
    }
    let zeros: u64 = counts.iter().map(|&c| c * c.saturating_sub(1) / 2).sum();
    if zeros > 0 {
        items.push((0.0, zeros));
    }
    let m = util::median_with_counts(&mut items);
    if m > 0.0 {
        Ok(m)
    } else {
        Err(Error::ZeroMedianDistance)
    }
}

/// Gaussian Gram from condensed squared distances.
pub(crate) fn gaussian_gram_from_sq(n: usize, sq_dists: &[f64], sigma: f64) -> Mat<f64> {
    let scale = -1.0 / (2.0 * sigma * sigma);
    let mut k = Mat::<f64>::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = (sq_dists[idx] * scale).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
            idx += 1;
        }
    }
    k
}

/// How a Gram matrix has been centered.
#[derive(Debug, Clone, PartialEq)]
pub enum Centering {
    Raw,
    Uniform,
    Weighted(CenteringWeights),
}

/// Nonnegative observation weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenteringWeights(Vec<f64>);

impl CenteringWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        Ok(Self(w))
    }

    /// `1/n` for every observation.
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Normalizes nonnegative masses to unit sum.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::AllWeightsZero);
        }
        Self::new(masses.iter().map(|m| m / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Dense symmetric matrix of kernel evaluations together with its centering state.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: Mat<f64>,
    centering: Centering,
}

impl GramMatrix {
    /// Wraps precomputed kernel values as a raw Gram matrix.
    pub fn from_values(values: Mat<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Gram matrix must be square, got {}x{}",
                n,
                values.ncols()
            )));
        }
        let mut scale = 1.0f64;
        for j in 0..n {
            for i in 0..n {
                let v = values[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                scale = scale.max(v.abs());
            }
        }
        for j in 0..n {
            for i in (j + 1)..n {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "Gram matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            values,
            centering: Centering::Raw,
        })
    }

    pub(crate) fn raw_unchecked(values: Mat<f64>) -> Self {
        Self {
            values,
            centering: Centering::Raw,
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Mat<f64> {
        &self.values
    }

    pub fn into_values(self) -> Mat<f64> {
        self.values
    }

    pub fn centering(&self) -> &Centering {
        &self.centering
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    fn require_raw(&self) -> Result<()> {
        match self.centering {
            Centering::Raw => Ok(()),
            _ => Err(Error::InvalidArgument(
                "operation requires a raw (uncentered) Gram matrix".into(),
            )),
        }
    }
}

/// `values[i][j] = k(X_i, X_j)`. A Gaussian kernel without bandwidth uses [`median_bandwidth`].
pub fn gram(x: &SampleMatrix, kernel: &KernelSpec) -> Result<GramMatrix> {
    let n = x.nrows();
    let values = match *kernel {
        KernelSpec::Gaussian { bandwidth } => {
            let sq = pairwise_squared_distances(x);
            let sigma = match bandwidth {
                Some(s) => {
                    KernelSpec::gaussian(s)?;
                    s
                }
                None => {
                    let mut d: Vec<f64> = sq.iter().map(|v| v.sqrt()).collect();
                    let m = util::median(&mut d);
                    if !(m > 0.0) {
                        return Err(Error::ZeroMedianDistance);
                    }
                    m
                }
            };
            gaussian_gram_from_sq(n, &sq, sigma)
        }
        KernelSpec::Linear => {
            let mut k = Mat::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = dot(x.row(i), x.row(j));
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
            k
        }
    };
    Ok(GramMatrix::raw_unchecked(values))
}

/// `values[i][j] = k(test_i, train_j)`, a `T x n` matrix.
pub fn cross_gram(
    test: &SampleMatrix,
    train: &SampleMatrix,
    kernel: &ResolvedKernel,
) -> Result<Mat<f64>> {
    if test.ncols() != train.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "test points have {} features, training points {}",
            test.ncols(),
            train.ncols()
        )));
    }
    Ok(Mat::from_fn(test.nrows(), train.nrows(), |i, j| {
        kernel.eval(test.row(i), train.row(j))
    }))
}

/// `C K C` with `C = I - 11ᵀ/n`.
pub fn center_uniform(g: &GramMatrix) -> Result<GramMatrix> {
    g.require_raw()?;
    let n = g.n();
    let k = &g.values;
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| k[(i, j)]).sum::<f64>() / nf)
        .collect();
    let col_means: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| k[(i, j)]).sum::<f64>() / nf)
        .collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let values = Mat::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand);
    Ok(GramMatrix {
        values,
        centering: Centering::Uniform,
    })
}

/// `(I - 1wᵀ) K (I - 1wᵀ)ᵀ`: feature vectors centered at the `w`-weighted mean element.
pub fn center_weighted(g: &GramMatrix, w: &CenteringWeights) -> Result<GramMatrix> {
    g.require_raw()?;
    let values = weighted_center_values(&g.values, w.as_slice())?;
    Ok(GramMatrix {
        values,
        centering: Centering::Weighted(w.clone()),
    })
}

pub(crate) fn weighted_center_values(k: &Mat<f64>, w: &[f64]) -> Result<Mat<f64>> {
    let n = k.nrows();
    if w.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for a Gram matrix of order {n}",
            w.len()
        )));
    }
    let kw = mat_vec(k, w);
    let wkw: f64 = w.iter().zip(&kw).map(|(a, b)| a * b).sum();
    Ok(Mat::from_fn(n, n, |i, j| k[(i, j)] - kw[i] - kw[j] + wkw))
}

/// Centers a raw `T x n` cross-Gram `k_test[i][j] = k(X^t_i, X_j)` against the
/// `w`-weighted training mean element:
/// `K^test - 1_T wᵀK - K^test w 1_nᵀ + (wᵀKw) 1_T 1_nᵀ`.
pub fn center_test(
    k_test: &Mat<f64>,
    g_train: &GramMatrix,
    w: &CenteringWeights,
) -> Result<Mat<f64>> {
    g_train.require_raw()?;
    let n = g_train.n();
    if k_test.ncols() != n || w.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "test cross-Gram has {} columns, training Gram order {n}, {} weights",
            k_test.ncols(),
            w.len()
        )));
    }
    let w = w.as_slice();
    let kw = mat_vec(&g_train.values, w);
    let wkw: f64 = w.iter().zip(&kw).map(|(a, b)| a * b).sum();
    let ktw = mat_vec(k_test, w);
    Ok(Mat::from_fn(k_test.nrows(), n, |i, j| {
        k_test[(i, j)] - kw[j] - ktw[i] + wkw
    }))
}

pub(crate) fn mat_vec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        let vj = v[j];
        if vj == 0.0 {
            continue;
        }
        for (o, mij) in out.iter_mut().zip(m.col_as_slice(j)) {
            *o += mij * vj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_1d(v: &[f64]) -> SampleMatrix {
        SampleMatrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn median_of_three_points() {
        let x = sample_1d(&[0.0, 1.0, 3.0]);
        assert_eq!(median_bandwidth(&x).unwrap(), 2.0);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let x = sample_1d(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(median_bandwidth(&x), Err(Error::ZeroMedianDistance));
        assert_eq!(
            gram(&x, &KernelSpec::gaussian_median()).unwrap_err(),
            Error::ZeroMedianDistance
        );
    }

    #[test]
    fn rejects_non_finite_features() {
        let err = SampleMatrix::new(2, 2, vec![0.0, 1.0, f64::NAN, 2.0]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 1, col: 0 });
    }

    #[test]
    fn gaussian_closed_form() {
        let sigma = 0.7;
        let x = sample_1d(&[0.0, sigma * 2f64.sqrt()]);
        let g = gram(&x, &KernelSpec::gaussian(sigma).unwrap()).unwrap();
        assert_eq!(g.get(0, 0), 1.0);
        assert_eq!(g.get(1, 1), 1.0);
        assert!((g.get(0, 1) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn linear_kernel_is_dot_product() {
        let x = SampleMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 2.0]]).unwrap();
        let g = gram(&x, &KernelSpec::Linear).unwrap();
        assert_eq!(g.get(0, 1), -1.0 + 1.0 + 6.0);
        assert_eq!(g.get(0, 0), 14.0);
    }

    #[test]
    fn single_point_centers_to_zero() {
        let g = GramMatrix::from_values(Mat::from_fn(1, 1, |_, _| 0.8)).unwrap();
        let c = center_uniform(&g).unwrap();
        assert_eq!(c.get(0, 0), 0.0);
    }

    #[test]
    fn point_mass_weights_zero_first_row() {
        let x = SampleMatrix::from_fn(6, 2, |i, j| (i * 3 + j) as f64 * 0.37).unwrap();
        let g = gram(&x, &KernelSpec::gaussian_median()).unwrap();
        let mut w = vec![0.0; 6];
        w[0] = 1.0;
        let c = center_weighted(&g, &CenteringWeights::new(w).unwrap()).unwrap();
        for j in 0..6 {
            assert!(c.get(0, j).abs() < 1e-15);
            assert!(c.get(j, 0).abs() < 1e-15);
        }
    }

    #[test]
    fn centering_requires_raw() {
        let x = sample_1d(&[0.0, 1.0, 2.5]);
        let g = gram(&x, &KernelSpec::Linear).unwrap();
        let c = center_uniform(&g).unwrap();
        assert!(center_uniform(&c).is_err());
        assert!(center_weighted(&c, &CenteringWeights::uniform(3)).is_err());
    }

    #[test]
    fn weight_length_mismatch() {
        let x = sample_1d(&[0.0, 1.0, 2.5]);
        let g = gram(&x, &KernelSpec::Linear).unwrap();
        let err = center_weighted(&g, &CenteringWeights::uniform(4)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn test_point_equal_to_training_point() {
        let x = SampleMatrix::from_fn(7, 3, |i, j| ((i + 1) * (j + 2)) as f64 % 5.0 - 1.3).unwrap();
        let kernel = KernelSpec::gaussian_median();
        let resolved = kernel.resolve(&x).unwrap();
        let g = gram(&x, &kernel).unwrap();
        let w = CenteringWeights::from_masses(&[1.0, 2.0, 0.5, 0.0, 3.0, 1.0, 1.5]).unwrap();
        let full = center_weighted(&g, &w).unwrap();
        let t = x.select_rows(&[4, 4]).unwrap();
        let kt = cross_gram(&t, &x, &resolved).unwrap();
        let ct = center_test(&kt, &g, &w).unwrap();
        for j in 0..7 {
            assert!((ct[(0, j)] - full.get(4, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_validate() {
        assert!(CenteringWeights::new(vec![0.5, 0.6]).is_err());
        assert!(CenteringWeights::new(vec![1.5, -0.5]).is_err());
        assert!(CenteringWeights::new(vec![0.25, 0.75]).is_ok());
        assert_eq!(
            CenteringWeights::from_masses(&[0.0, 0.0]),
            Err(Error::AllWeightsZero)
        );
    }
}
