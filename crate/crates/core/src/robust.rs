//! Robust losses and kernelized iteratively re-weighted least squares (KIRWLS).
//!
//! The robust kernel mean element and the robust kernel (cross-)covariance
//! operator minimize `Σ ζ(‖residual_i‖)` in an RKHS. Both are fixed points of a
//! weighted mean, so each iteration recomputes residual norms through the
//! kernel trick and sets `w_i ∝ φ(r_i)` with `φ(t) = ζ'(t)/t`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{weighted_center_values, mat_vec, CenteringWeights, GramMatrix};
use crate::util;

/// A loss `ζ` on `t >= 0` with resolved tuning constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSpec {
    Quadratic,
    Huber { c: f64 },
    Hampel { c1: f64, c2: f64, c3: f64 },
}

impl LossSpec {
    pub fn huber(c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "huber constant must be positive, got {c}"
            )));
        }
        Ok(LossSpec::Huber { c })
    }

    /// Requires `0 < c1 <= c2 < c3`.
    pub fn hampel(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1 <= c2 && c2 < c3 && c3.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "hampel constants must satisfy 0 < c1 <= c2 < c3, got ({c1}, {c2}, {c3})"
            )));
        }
        Ok(LossSpec::Hampel { c1, c2, c3 })
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        loss_value(self, t)
    }

    pub fn weight(&self, t: f64) -> f64 {
        loss_weight(self, t)
    }
}

/// `ζ(t)`. Hampel's third branch is the continuity-preserving
/// `c1(c2+c3-c1)/2 - c1(c3-t)²/(2(c3-c2))`.
pub fn loss_value(loss: &LossSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "loss argument must be nonnegative, got {t}"
        )));
    }
    Ok(match *loss {
        LossSpec::Quadratic => t * t / 2.0,
        LossSpec::Huber { c } => {
            if t <= c {
                t * t / 2.0
            } else {
                c * t - c * c / 2.0
            }
        }
        LossSpec::Hampel { c1, c2, c3 } => {
            let ceiling = c1 * (c2 + c3 - c1) / 2.0;
            if t <= c1 {
                t * t / 2.0
            } else if t < c2 {
                c1 * t - c1 * c1 / 2.0
            } else if t < c3 {
                ceiling - c1 * (c3 - t) * (c3 - t) / (2.0 * (c3 - c2))
            } else {
                ceiling
            }
        }
    })
}

/// `φ(t) = ζ'(t)/t`, with the limit 1 at `t = 0`.
pub fn loss_weight(loss: &LossSpec, t: f64) -> f64 {
    match *loss {
        LossSpec::Quadratic => 1.0,
        LossSpec::Huber { c } => {
            if t <= c {
                1.0
            } else {
                c / t
            }
        }
        LossSpec::Hampel { c1, c2, c3 } => {
            if t < c1 {
                1.0
            } else if t < c2 {
                c1 / t
            } else if t < c3 {
                c1 * (c3 - t) / (t * (c3 - c2))
            } else {
                0.0
            }
        }
    }
}

/// Loss family with optional tuning constants. Missing constants default to
/// percentiles of the first-iteration residuals: the median for Huber, the
/// 70th/85th/95th percentiles for Hampel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossConfig {
    Quadratic,
    Huber { c: Option<f64> },
    Hampel { constants: Option<(f64, f64, f64)> },
}

impl LossConfig {
    pub fn huber() -> Self {
        LossConfig::Huber { c: None }
    }

    pub fn hampel() -> Self {
        LossConfig::Hampel { constants: None }
    }

    pub fn resolve(&self, first_residuals: &[f64]) -> Result<LossSpec> {
        match *self {
            LossConfig::Quadratic => Ok(LossSpec::Quadratic),
            LossConfig::Huber { c: Some(c) } => LossSpec::huber(c),
            LossConfig::Huber { c: None } => {
                LossSpec::huber(util::percentile(first_residuals, 50.0)).map_err(|_| {
                    Error::Degenerate("median residual is zero; set the huber constant".into())
                })
            }
            LossConfig::Hampel {
                constants: Some((c1, c2, c3)),
            } => LossSpec::hampel(c1, c2, c3),
            LossConfig::Hampel { constants: None } => {
                let c1 = util::percentile(first_residuals, 70.0);
                let c2 = util::percentile(first_residuals, 85.0);
                let c3 = util::percentile(first_residuals, 95.0);
                LossSpec::hampel(c1, c2, c3).map_err(|_| {
                    Error::Degenerate(format!(
                        "residual percentiles ({c1}, {c2}, {c3}) do not define a hampel loss; set the constants"
                    ))
                })
            }
        }
    }
}

/// Iteration controls for KIRWLS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KirwlsConfig {
    pub loss: LossConfig,
    pub max_iter: usize,
    /// Stop when `‖w_new - w_old‖_∞ / ‖w_old‖_∞ < tol`.
    pub tol: f64,
}

impl KirwlsConfig {
    pub fn new(loss: LossConfig) -> Self {
        Self {
            loss,
            max_iter: 100,
            tol: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Output of a KIRWLS run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustWeights {
    pub weights: CenteringWeights,
    pub iterations_used: usize,
    pub converged: bool,
    /// RKHS residual norms at the final weights.
    pub residuals: Vec<f64>,
    pub loss: LossSpec,
}

fn reweight(loss: &LossSpec, residuals: &[f64]) -> Result<Vec<f64>> {
    let phi: Vec<f64> = residuals.iter().map(|&r| loss_weight(loss, r)).collect();
    let total: f64 = phi.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllWeightsZero);
    }
    Ok(phi.iter().map(|p| p / total).collect())
}

fn kirwls(n: usize, cfg: &KirwlsConfig, residuals: impl Fn(&[f64]) -> Vec<f64>) -> Result<RobustWeights> {
    cfg.validate()?;
    let mut w = CenteringWeights::uniform(n).as_slice().to_vec();
    let mut r = residuals(&w);
    let loss = cfg.loss.resolve(&r)?;
    let mut converged = false;
    let mut iterations_used = 0;
    for it in 1..=cfg.max_iter {
        let next = reweight(&loss, &r)?;
        let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let change = next
            .iter()
            .zip(&w)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        w = next;
        iterations_used = it;
        if change < cfg.tol * scale {
            converged = true;
            break;
        }
        r = residuals(&w);
    }
    let residuals = residuals(&w);
    Ok(RobustWeights {
        weights: CenteringWeights::new(w)?,
        iterations_used,
        converged,
        residuals,
        loss,
    })
}

/// `‖Φ(X_i) - Σ_a w_a Φ(X_a)‖` for every `i`.
pub fn mean_residuals(k: &Mat<f64>, w: &[f64]) -> Vec<f64> {
    let kw = mat_vec(k, w);
    let wkw: f64 = w.iter().zip(&kw).map(|(a, b)| a * b).sum();
    (0..k.nrows())
        .map(|i| (k[(i, i)] - 2.0 * kw[i] + wkw).max(0.0).sqrt())
        .collect()
}

/// `‖Φ_c(X_i) ⊗ Φ_c(Y_i) - Σ_b w_b Φ_c(X_b) ⊗ Φ_c(Y_b)‖`, both views centered at their `w`-weighted means.
pub fn cross_covariance_residuals(kx: &Mat<f64>, ky: &Mat<f64>, w: &[f64]) -> Vec<f64> {
    let n = kx.nrows();
    let cx = weighted_center_values(kx, w).expect("weights match Gram order");
    let cy = weighted_center_values(ky, w).expect("weights match Gram order");
    let h = Mat::from_fn(n, n, |i, j| cx[(i, j)] * cy[(i, j)]);
    mean_residuals(&h, w)
}

fn require_raw(g: &GramMatrix) -> Result<()> {
    match g.centering() {
        crate::kernel::Centering::Raw => Ok(()),
        _ => Err(Error::InvalidArgument(
            "KIRWLS requires raw Gram matrices".into(),
        )),
    }
}

/// Weights of the robust kernel mean element.
pub fn robust_mean_weights(g: &GramMatrix, cfg: &KirwlsConfig) -> Result<RobustWeights> {
    require_raw(g)?;
    if g.n() < 2 {
        return Err(Error::InvalidArgument("need at least 2 observations".into()));
    }
    kirwls(g.n(), cfg, |w| mean_residuals(g.values(), w))
}

/// Weights of the robust kernel cross-covariance operator. Each iteration
/// recenters both views at the current weights before measuring residuals in
/// the tensor-product space.
pub fn robust_cco_weights(gx: &GramMatrix, gy: &GramMatrix, cfg: &KirwlsConfig) -> Result<RobustWeights> {
    require_raw(gx)?;
    require_raw(gy)?;
    if gx.n() != gy.n() {
        return Err(Error::DimensionMismatch(format!(
            "views have {} and {} observations",
            gx.n(),
            gy.n()
        )));
    }
    if gx.n() < 2 {
        return Err(Error::InvalidArgument("need at least 2 observations".into()));
    }
    kirwls(gx.n(), cfg, |w| cross_covariance_residuals(gx.values(), gy.values(), w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{center_uniform, center_weighted, gram, KernelSpec, SampleMatrix};

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn huber_values() {
        let h = LossSpec::huber(1.0).unwrap();
        close(loss_value(&h, 0.5).unwrap(), 0.125);
        close(loss_value(&h, 2.0).unwrap(), 1.5);
        close(loss_weight(&LossSpec::huber(2.0).unwrap(), 4.0), 0.5);
    }

    #[test]
    fn hampel_values() {
        let h = LossSpec::hampel(1.0, 2.0, 4.0).unwrap();
        close(loss_value(&h, 5.0).unwrap(), 2.5);
        close(loss_value(&h, 3.0).unwrap(), 2.25);
        close(loss_value(&h, 2.0).unwrap(), 1.5);
        close(loss_value(&h, 4.0).unwrap(), 2.5);
        close(loss_weight(&h, 4.0), 0.0);
        close(loss_weight(&h, 0.0), 1.0);
        close(loss_weight(&h, 1.5), 1.0 / 1.5);
        close(loss_weight(&h, 3.0), 1.0 / 6.0);
    }

    #[test]
    fn negative_argument_rejected() {
        assert!(loss_value(&LossSpec::Quadratic, -0.1).is_err());
    }

    #[test]
    fn invalid_constants_rejected() {
        assert!(LossSpec::huber(0.0).is_err());
        assert!(LossSpec::hampel(1.0, 2.0, 2.0).is_err());
        assert!(LossSpec::hampel(2.0, 1.0, 3.0).is_err());
        assert!(LossSpec::hampel(1.0, 1.0, 3.0).is_ok());
    }

    #[test]
    fn quadratic_gives_uniform_weights_in_one_step() {
        let x = SampleMatrix::from_fn(9, 2, |i, j| ((i * 7 + j * 3) % 5) as f64).unwrap();
        let g = gram(&x, &KernelSpec::gaussian_median()).unwrap();
        let rw = robust_mean_weights(&g, &KirwlsConfig::new(LossConfig::Quadratic)).unwrap();
        assert_eq!(rw.iterations_used, 1);
        assert!(rw.converged);
        assert_eq!(rw.weights, CenteringWeights::uniform(9));
    }

    #[test]
    fn infinite_huber_constant_is_quadratic() {
        let x = SampleMatrix::from_fn(9, 2, |i, j| ((i * 7 + j * 3) % 5) as f64).unwrap();
        let g = gram(&x, &KernelSpec::gaussian_median()).unwrap();
        let cfg = KirwlsConfig::new(LossConfig::Huber {
            c: Some(f64::INFINITY),
        });
        let rw = robust_mean_weights(&g, &cfg).unwrap();
        assert_eq!(rw.weights, CenteringWeights::uniform(9));
    }

    #[test]
    fn outlier_is_down_weighted() {
        let x = SampleMatrix::new(5, 1, vec![0.0, 0.0, 0.0, 0.0, 10.0]).unwrap();
        let g = gram(&x, &KernelSpec::gaussian(5.0).unwrap()).unwrap();
        let rw = robust_mean_weights(&g, &KirwlsConfig::new(LossConfig::huber())).unwrap();
        assert!(rw.weights.as_slice()[4] < 0.2, "{:?}", rw.weights);
        assert!(rw.converged);
    }

    #[test]
    fn stored_residuals_match_final_weights() {
        let x = SampleMatrix::from_fn(30, 3, |i, j| ((i * i + 3 * j) % 11) as f64 / 3.0).unwrap();
        let y = SampleMatrix::from_fn(30, 2, |i, j| ((2 * i + j * j) % 7) as f64).unwrap();
        let gx = gram(&x, &KernelSpec::gaussian_median()).unwrap();
        let gy = gram(&y, &KernelSpec::gaussian_median()).unwrap();
        let rw = robust_cco_weights(&gx, &gy, &KirwlsConfig::new(LossConfig::hampel())).unwrap();
        let again = cross_covariance_residuals(gx.values(), gy.values(), rw.weights.as_slice());
        for (a, b) in again.iter().zip(&rw.residuals) {
            assert!((a - b).abs() < 1e-10);
        }
        let total: f64 = rw.weights.as_slice().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_cco_matches_uniform_centering() {
        let x = SampleMatrix::from_fn(12, 2, |i, j| (i as f64 * 0.3 + j as f64).sin()).unwrap();
        let gx = gram(&x, &KernelSpec::gaussian_median()).unwrap();
        let rw = robust_cco_weights(&gx, &gx, &KirwlsConfig::new(LossConfig::Quadratic)).unwrap();
        let a = center_weighted(&gx, &rw.weights).unwrap();
        let b = center_uniform(&gx).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_views_use_squared_centered_gram() {
        let x = SampleMatrix::from_fn(10, 2, |i, j| ((i * 5 + j) % 7) as f64).unwrap();
        let g = gram(&x, &KernelSpec::gaussian_median()).unwrap();
        let w = CenteringWeights::from_masses(&[1.0, 2.0, 1.0, 3.0, 1.0, 1.0, 0.5, 1.0, 2.0, 1.0]).unwrap();
        let ws = w.as_slice();
        let c = center_weighted(&g, &w).unwrap();
        let s = cross_covariance_residuals(g.values(), g.values(), ws);
        for i in 0..10 {
            let mut s2 = c.get(i, i).powi(2);
            for b in 0..10 {
                s2 -= 2.0 * ws[b] * c.get(i, b).powi(2);
                for d in 0..10 {
                    s2 += ws[b] * ws[d] * c.get(b, d).powi(2);
                }
            }
            assert!((s[i] - s2.max(0.0).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn redescending_collapse_is_an_error() {
        let x = SampleMatrix::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let g = gram(&x, &KernelSpec::Linear).unwrap();
        let cfg = KirwlsConfig::new(LossConfig::Hampel {
            constants: Some((1e-6, 2e-6, 3e-6)),
        });
        assert_eq!(robust_mean_weights(&g, &cfg).unwrap_err(), Error::AllWeightsZero);
    }
}
