//! Classical and robust kernel canonical correlation analysis.
//!
//! With weights `w` (uniform for the classical estimator, KIRWLS weights for
//! the robust one), `W = diag(w)` and `M = H K Hᵀ` the `w`-centered Gram
//! matrices, the canonical pairs solve
//!
//! ```text
//! [0        M_X W M_Y] [a_X]       [M_X W M_X + κ M_X         0        ] [a_X]
//! [M_Y W M_X        0] [a_Y] = ρ · [        0          M_Y W M_Y + κ M_Y] [a_Y]
//! ```
//!
//! The solver works in the eigenbasis of `G = W^½ M W^½ = V Λ Vᵀ`. There the
//! regularized covariance is diagonal and the problem reduces to the singular
//! values of `T = D_X V_Xᵀ V_Y D_Y`, `D = (Λ / (Λ + κ))^½`. This is the Gram-space
//! form of `(Σ_YY + κI)^-½ Σ_YX (Σ_XX + κI)^-½`. Eigenvalues below the numerical
//! rank threshold are dropped.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    gram, weighted_center_values, CenteringWeights, GramMatrix, KernelSpec, SampleMatrix,
};
use crate::robust::{robust_cco_weights, KirwlsConfig, RobustWeights};

/// Upper clip applied to canonical correlations so Fisher's transform stays finite.
pub const RHO_MAX: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsMode {
    Classical,
    Robust(KirwlsConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KccaConfig {
    pub kappa: f64,
    pub n_components: usize,
    pub weights_mode: WeightsMode,
}

impl Default for KccaConfig {
    fn default() -> Self {
        Self {
            kappa: 1e-5,
            n_components: 1,
            weights_mode: WeightsMode::Classical,
        }
    }
}

impl KccaConfig {
    pub fn classical(kappa: f64) -> Self {
        Self {
            kappa,
            ..Self::default()
        }
    }

    pub fn robust(kappa: f64, kirwls: KirwlsConfig) -> Self {
        Self {
            kappa,
            n_components: 1,
            weights_mode: WeightsMode::Robust(kirwls),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if self.n_components < 1 || self.n_components > n {
            return Err(Error::InvalidArgument(format!(
                "n_components must be in 1..={n}, got {}",
                self.n_components
            )));
        }
        if let WeightsMode::Robust(k) = &self.weights_mode {
            k.validate()?;
        }
        Ok(())
    }
}

/// A fitted kernel CCA.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KccaModel {
    /// Canonical correlations, descending, clipped to `[0, RHO_MAX]`.
    pub rho: Vec<f64>,
    /// Canonical correlations before clipping.
    pub rho_raw: Vec<f64>,
    /// Coefficient vectors `a_X^{(j)}` normalized so `aᵀ(M W M + κM)a = 1`.
    pub coef_x: Vec<Vec<f64>>,
    pub coef_y: Vec<Vec<f64>>,
    /// Canonical variates at the training points, standardized to weighted
    /// mean 0 and variance 1 under `weights`.
    pub variates_x: Vec<Vec<f64>>,
    pub variates_y: Vec<Vec<f64>>,
    pub weights: CenteringWeights,
    pub kappa: f64,
    pub robust: Option<RobustWeights>,
}

impl KccaModel {
    pub fn n(&self) -> usize {
        self.weights.len()
    }
}

/// First kernel canonical correlation.
pub fn first_kcc(model: &KccaModel) -> f64 {
    model.rho[0]
}

/// One view after centering at the current weights.
pub(crate) struct CenteredView {
    kind: ViewKind,
    /// `Σ w_i k(x_i, x_i)` of the uncentered kernel; eigenvalues below
    /// `n ε` times this are treated as zero.
    scale: f64,
}

enum ViewKind {
    /// `w`-centered Gram matrix.
    Gram(Mat<f64>),
    /// `w`-centered explicit features (linear kernel), `M = X_c X_cᵀ`.
    Features(Mat<f64>),
}

struct Factor {
    /// Eigenvectors of `W^½ M W^½`, columns ordered by descending eigenvalue.
    vectors: Mat<f64>,
    values: Vec<f64>,
}

impl CenteredView {
    pub(crate) fn from_raw_gram(k: &Mat<f64>, w: &[f64]) -> Result<Self> {
        let centered = weighted_center_values(k, w)?;
        Ok(CenteredView {
            scale: (0..k.nrows()).map(|i| w[i] * k[(i, i)]).sum(),
            kind: ViewKind::Gram(centered),
        })
    }

    pub(crate) fn from_features(x: &SampleMatrix, w: &[f64]) -> Self {
        let (n, d) = (x.nrows(), x.ncols());
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += w[i] * v;
            }
        }
        CenteredView {
            scale: (0..n)
                .map(|i| w[i] * x.row(i).iter().map(|v| v * v).sum::<f64>())
                .sum(),
            kind: ViewKind::Features(Mat::from_fn(n, d, |i, j| x.get(i, j) - mean[j])),
        }
    }

    fn n(&self) -> usize {
        match &self.kind {
            ViewKind::Gram(m) | ViewKind::Features(m) => m.nrows(),
        }
    }

    fn factor(&self, sqrt_w: &[f64]) -> Result<Factor> {
        let n = self.n();
        let (vectors, values): (Mat<f64>, Vec<f64>) = match &self.kind {
            ViewKind::Gram(m) => {
                let g = Mat::from_fn(n, n, |i, j| sqrt_w[i] * m[(i, j)] * sqrt_w[j]);
                let evd = g
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|e| Error::Eigen(format!("{e:?}")))?;
                let s = evd.S().column_vector();
                let vals: Vec<f64> = (0..n).map(|i| s[i]).collect();
                (evd.U().to_owned(), vals)
            }
            ViewKind::Features(xc) => {
                let a = Mat::from_fn(n, xc.ncols(), |i, j| sqrt_w[i] * xc[(i, j)]);
                let svd = a.thin_svd().map_err(|e| Error::Eigen(format!("{e:?}")))?;
                let s = svd.S().column_vector();
                let vals: Vec<f64> = (0..s.nrows()).map(|i| s[i] * s[i]).collect();
                (svd.U().to_owned(), vals)
            }
        };
        let lam_max = values.iter().copied().fold(0.0f64, f64::max);
        let tol = lam_max.max(self.scale) * n as f64 * f64::EPSILON;
        let mut keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > tol).collect();
        // descending eigenvalue, ties by routine order
        keep.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        Ok(Factor {
            vectors: Mat::from_fn(n, keep.len(), |i, c| vectors[(i, keep[c])]),
            values: keep.iter().map(|&i| values[i]).collect(),
        })
    }

    /// `M a`
    fn apply(&self, a: &[f64]) -> Vec<f64> {
        match &self.kind {
            ViewKind::Gram(m) => crate::kernel::mat_vec(m, a),
            ViewKind::Features(xc) => {
                let (n, d) = (xc.nrows(), xc.ncols());
                let mut t = vec![0.0; d];
                for (j, tj) in t.iter_mut().enumerate() {
                    *tj = (0..n).map(|i| xc[(i, j)] * a[i]).sum();
                }
                crate::kernel::mat_vec(xc, &t)
            }
        }
    }
}

struct Component {
    rho: f64,
    p: Vec<f64>,
    q: Vec<f64>,
}

struct Solved {
    components: Vec<Component>,
    fx: Factor,
    fy: Factor,
}

fn whitened(f: &Factor, kappa: f64) -> Mat<f64> {
    let d: Vec<f64> = f.values.iter().map(|&l| (l / (l + kappa)).sqrt()).collect();
    Mat::from_fn(f.vectors.nrows(), f.vectors.ncols(), |i, c| f.vectors[(i, c)] * d[c])
}

fn leading_pairs(s: &Mat<f64>, k: usize, vectors: bool) -> Result<Vec<(f64, Vec<f64>)>> {
    let r = s.nrows();
    if !vectors {
        let mut vals = s
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        vals.reverse();
        return Ok(vals.into_iter().take(k).map(|v| (v, Vec::new())).collect());
    }
    let evd = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let vals = evd.S().column_vector();
    let u = evd.U();
    Ok((0..k)
        .map(|c| {
            let idx = r - 1 - c;
            (vals[idx], (0..r).map(|i| u[(i, idx)]).collect())
        })
        .collect())
}

fn solve(
    vx: &CenteredView,
    vy: &CenteredView,
    w: &[f64],
    kappa: f64,
    n_components: usize,
    vectors: bool,
) -> Result<Solved> {
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let fx = vx.factor(&sqrt_w)?;
    let fy = vy.factor(&sqrt_w)?;
    let (rx, ry) = (fx.values.len(), fy.values.len());
    let rank = rx.min(ry);
    if rank == 0 {
        return Ok(Solved {
            components: (0..n_components)
                .map(|_| Component {
                    rho: 0.0,
                    p: vec![0.0; rx],
                    q: vec![0.0; ry],
                })
                .collect(),
            fx,
            fy,
        });
    }
    if n_components > rank {
        return Err(Error::RankDeficient {
            requested: n_components,
            rank,
        });
    }
    let t = whitened(&fx, kappa).transpose() * whitened(&fy, kappa);
    let x_side = rx <= ry;
    let s = if x_side {
        &t * t.transpose()
    } else {
        t.transpose() * &t
    };
    let pairs = leading_pairs(&s, n_components, vectors)?;
    let components = pairs
        .into_iter()
        .map(|(ev, u)| {
            let rho = ev.max(0.0).sqrt();
            if !vectors {
                return Component {
                    rho,
                    p: Vec::new(),
                    q: Vec::new(),
                };
            }
            // the partner singular vector: T^T p / rho or T q / rho
            let other: Vec<f64> = if x_side {
                (0..ry)
                    .map(|c| (0..rx).map(|r| t[(r, c)] * u[r]).sum::<f64>())
                    .collect()
            } else {
                (0..rx)
                    .map(|r| (0..ry).map(|c| t[(r, c)] * u[c]).sum::<f64>())
                    .collect()
            };
            let scale = if rho > 1e-150 { 1.0 / rho } else { 0.0 };
            let other: Vec<f64> = other.into_iter().map(|v| v * scale).collect();
            if x_side {
                Component { rho, p: u, q: other }
            } else {
                Component { rho, p: other, q: u }
            }
        })
        .collect();
    Ok(Solved { components, fx, fy })
}

/// `a = W^½ V Λ^-½ (Λ + κ)^-½ p`
fn coefficients(f: &Factor, sqrt_w: &[f64], p: &[f64], kappa: f64) -> Vec<f64> {
    let scaled: Vec<f64> = f
        .values
        .iter()
        .zip(p)
        .map(|(&l, &pc)| pc / (l.sqrt() * (l + kappa).sqrt()))
        .collect();
    (0..f.vectors.nrows())
        .map(|i| {
            let vi: f64 = (0..scaled.len()).map(|c| f.vectors[(i, c)] * scaled[c]).sum();
            sqrt_w[i] * vi
        })
        .collect()
}

fn standardize(f: &mut [f64], w: &[f64]) {
    let mean: f64 = f.iter().zip(w).map(|(a, b)| a * b).sum();
    let var: f64 = f.iter().zip(w).map(|(a, b)| b * (a - mean) * (a - mean)).sum();
    if var > 0.0 {
        let sd = var.sqrt();
        f.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    } else {
        f.iter_mut().for_each(|v| *v = 0.0);
    }
}

fn assemble(
    vx: &CenteredView,
    vy: &CenteredView,
    weights: CenteringWeights,
    cfg: &KccaConfig,
    robust: Option<RobustWeights>,
) -> Result<KccaModel> {
    let w = weights.as_slice().to_vec();
    let solved = solve(vx, vy, &w, cfg.kappa, cfg.n_components, true)?;
    let sqrt_w: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let k = cfg.n_components;
    let mut model = KccaModel {
        rho: Vec::with_capacity(k),
        rho_raw: Vec::with_capacity(k),
        coef_x: Vec::with_capacity(k),
        coef_y: Vec::with_capacity(k),
        variates_x: Vec::with_capacity(k),
        variates_y: Vec::with_capacity(k),
        weights,
        kappa: cfg.kappa,
        robust,
    };
    for c in &solved.components {
        let mut ax = coefficients(&solved.fx, &sqrt_w, &c.p, cfg.kappa);
        let mut ay = coefficients(&solved.fy, &sqrt_w, &c.q, cfg.kappa);
        let mut fx = vx.apply(&ax);
        let mut fy = vy.apply(&ay);
        standardize(&mut fx, &w);
        standardize(&mut fy, &w);
        // sign: largest-magnitude X variate entry positive; the pair flips together
        let lead = fx
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |best, (i, v)| {
                if v.abs() > best.1 {
                    (i, v.abs())
                } else {
                    best
                }
            })
            .0;
        let flip_x = fx.get(lead).is_some_and(|v| *v < 0.0);
        if flip_x {
            for v in fx.iter_mut().chain(ax.iter_mut()).chain(fy.iter_mut()).chain(ay.iter_mut()) {
                *v = -*v;
            }
        }
        let cov: f64 = (0..w.len()).map(|i| w[i] * fx[i] * fy[i]).sum();
        if cov < 0.0 {
            fy.iter_mut().chain(ay.iter_mut()).for_each(|v| *v = -*v);
        }
        model.rho_raw.push(c.rho);
        model.rho.push(c.rho.clamp(0.0, RHO_MAX));
        model.coef_x.push(ax);
        model.coef_y.push(ay);
        model.variates_x.push(fx);
        model.variates_y.push(fy);
    }
    Ok(model)
}

fn observation_weights(
    gx: &GramMatrix,
    gy: &GramMatrix,
    cfg: &KccaConfig,
) -> Result<(CenteringWeights, Option<RobustWeights>)> {
    match &cfg.weights_mode {
        WeightsMode::Classical => Ok((CenteringWeights::uniform(gx.n()), None)),
        WeightsMode::Robust(k) => {
            let rw = robust_cco_weights(gx, gy, k)?;
            Ok((rw.weights.clone(), Some(rw)))
        }
    }
}

fn check_pair(gx: &GramMatrix, gy: &GramMatrix) -> Result<()> {
    for g in [gx, gy] {
        if !matches!(g.centering(), crate::kernel::Centering::Raw) {
            return Err(Error::InvalidArgument("fit expects raw Gram matrices".into()));
        }
    }
    if gx.n() != gy.n() {
        return Err(Error::DimensionMismatch(format!(
            "views have {} and {} observations",
            gx.n(),
            gy.n()
        )));
    }
    Ok(())
}

/// Fits kernel CCA on two raw Gram matrices over the same observations.
pub fn fit(gx: &GramMatrix, gy: &GramMatrix, cfg: &KccaConfig) -> Result<KccaModel> {
    check_pair(gx, gy)?;
    cfg.validate(gx.n())?;
    let (weights, robust) = observation_weights(gx, gy, cfg)?;
    let vx = CenteredView::from_raw_gram(gx.values(), weights.as_slice())?;
    let vy = CenteredView::from_raw_gram(gy.values(), weights.as_slice())?;
    assemble(&vx, &vy, weights, cfg, robust)
}

fn prefers_features(kernel: &KernelSpec, x: &SampleMatrix) -> bool {
    matches!(kernel, KernelSpec::Linear) && x.ncols() < x.nrows()
}

/// Fits kernel CCA from the two samples and their kernels. Gaussian kernels
/// without a bandwidth use the median heuristic on the given sample. A linear
/// kernel with fewer features than observations is handled in feature space,
/// which gives the same model without forming the `n x n` eigenproblem.
pub fn fit_views(
    x: &SampleMatrix,
    kx: &KernelSpec,
    y: &SampleMatrix,
    ky: &KernelSpec,
    cfg: &KccaConfig,
) -> Result<KccaModel> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "views have {} and {} observations",
            x.nrows(),
            y.nrows()
        )));
    }
    cfg.validate(x.nrows())?;
    let feat_x = prefers_features(kx, x);
    let feat_y = prefers_features(ky, y);
    let need_grams = matches!(cfg.weights_mode, WeightsMode::Robust(_));
    let gx = if need_grams || !feat_x { Some(gram(x, kx)?) } else { None };
    let gy = if need_grams || !feat_y { Some(gram(y, ky)?) } else { None };
    let (weights, robust) = match (&gx, &gy) {
        (Some(a), Some(b)) => observation_weights(a, b, cfg)?,
        _ => (CenteringWeights::uniform(x.nrows()), None),
    };
    let w = weights.as_slice();
    let vx = match &gx {
        Some(g) if !feat_x => CenteredView::from_raw_gram(g.values(), w)?,
        _ => CenteredView::from_features(x, w),
    };
    let vy = match &gy {
        Some(g) if !feat_y => CenteredView::from_raw_gram(g.values(), w)?,
        _ => CenteredView::from_features(y, w),
    };
    assemble(&vx, &vy, weights, cfg, robust)
}

/// Leading canonical correlation (unclipped) for fixed observation weights;
/// no coefficients or variates are formed.
pub(crate) fn leading_rho(
    vx: &CenteredView,
    vy: &CenteredView,
    w: &[f64],
    kappa: f64,
) -> Result<f64> {
    let solved = solve(vx, vy, w, kappa, 1, false)?;
    Ok(solved.components[0].rho)
}
