//! Empirical influence of the first kernel canonical correlation, the
//! influence-based variance of Fisher's z, a bootstrap baseline for that
//! variance, and the ID/CD sensitivity measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kcca::{fit_views, leading_rho, CenteredView, KccaConfig, KccaModel, WeightsMode, RHO_MAX};
use crate::kernel::{
    gaussian_gram_from_sq, median_bandwidth_with_counts, pairwise_squared_distances, KernelSpec,
    SampleMatrix,
};
use crate::util::{derive_seed, sample_variance};

/// Lower bound applied to influence-based variances.
pub const VAR_FLOOR: f64 = 1e-12;

/// Per-observation influence values of one fitted model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EifRecord {
    /// Influence of each observation on `ρ²`.
    pub eif_rho: Vec<f64>,
    /// Standardized sum of the first canonical variates.
    pub u: Vec<f64>,
    /// Standardized difference of the first canonical variates.
    pub v: Vec<f64>,
    /// Influence of each observation on Fisher's z, `u_i v_i`.
    pub eif_z: Vec<f64>,
    /// Variance of z, `(1/n²) Σ (u_i v_i)²`, at least [`VAR_FLOOR`].
    pub var_z: f64,
    /// Set when the raw variance fell below the floor.
    pub floored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityPair {
    pub eta_rho: f64,
    pub eta_f: f64,
}

/// `-ρ² f_X(X_i)² + 2ρ f_X(X_i) f_Y(Y_i) - ρ² f_Y(Y_i)²` for every observation.
pub fn eif_rho(model: &KccaModel) -> Vec<f64> {
    let r = model.rho[0];
    let r2 = r * r;
    model.variates_x[0]
        .iter()
        .zip(&model.variates_y[0])
        .map(|(&fx, &fy)| -r2 * fx * fx + 2.0 * r * fx * fy - r2 * fy * fy)
        .collect()
}

/// Centers and scales to unit population variance; a constant vector maps to zeros.
fn standardize_uniform(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        let sd = var.sqrt();
        x.iter().map(|v| (v - mean) / sd).collect()
    } else {
        vec![0.0; x.len()]
    }
}

/// Influence of each observation on Fisher's z of the first canonical
/// correlation, and the resulting variance estimate.
///
/// The first variates are standardized over the sample, then `u` and `v` are
/// their standardized sum and difference. Under bivariate normality `u v` is
/// the influence function of `z(ρ)`, whatever the value of `ρ`, so
/// `n · var z ≈ 1`.
pub fn eif_fisher(model: &KccaModel) -> EifRecord {
    let x = standardize_uniform(&model.variates_x[0]);
    let y = standardize_uniform(&model.variates_y[0]);
    let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    let u = standardize_uniform(&sum);
    let v = standardize_uniform(&diff);
    let eif_z: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
    let n = eif_z.len() as f64;
    let raw = eif_z.iter().map(|e| e * e).sum::<f64>() / (n * n);
    let floored = !(raw >= VAR_FLOOR);
    EifRecord {
        eif_rho: eif_rho(model),
        u,
        v,
        eif_z,
        var_z: if floored { VAR_FLOOR } else { raw },
        floored,
    }
}

/// Fisher's z of a correlation clipped into `[0, RHO_MAX]`.
pub(crate) fn clipped_z(r: f64) -> f64 {
    r.clamp(0.0, RHO_MAX).atanh()
}

const MAX_REDRAWS: usize = 10;

/// Distinct rows and multiplicities of one paired resample of size `n`.
fn draw_resample(n: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<usize>, Vec<u64>)> {
    for _ in 0..MAX_REDRAWS {
        let mut counts = vec![0u64; n];
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
        let rows: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
        if rows.len() >= 2 {
            let c = rows.iter().map(|&i| counts[i]).collect();
            return Ok((rows, c));
        }
    }
    Err(Error::Degenerate(format!(
        "no resample with two distinct observations in {MAX_REDRAWS} draws"
    )))
}

fn weighted_view(
    x: &SampleMatrix,
    kernel: &KernelSpec,
    counts: &[u64],
    w: &[f64],
) -> Result<CenteredView> {
    match kernel {
        KernelSpec::Linear => Ok(CenteredView::from_features(x, w)),
        KernelSpec::Gaussian { bandwidth } => {
            let sq = pairwise_squared_distances(x);
            let sigma = match bandwidth {
                Some(s) => *s,
                None => median_bandwidth_with_counts(x, counts, &sq)?,
            };
            CenteredView::from_raw_gram(&gaussian_gram_from_sq(x.nrows(), &sq, sigma), w)
        }
    }
}

/// Fisher's z of the first canonical correlation refitted on bootstrap
/// replicate `index` of the stream seeded by `seed`.
///
/// Classical fits keep one copy of each drawn row weighted by its
/// multiplicity, which yields the same correlation as the expanded resample.
/// A median-heuristic bandwidth is re-resolved on the resample.
pub fn bootstrap_replicate_z(
    x: &SampleMatrix,
    y: &SampleMatrix,
    kx: &KernelSpec,
    ky: &KernelSpec,
    cfg: &KccaConfig,
    seed: u64,
    index: u64,
) -> Result<f64> {
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, index));
    let (rows, counts) = draw_resample(n, &mut rng)?;
    match cfg.weights_mode {
        WeightsMode::Classical => {
            let xs = x.select_rows(&rows)?;
            let ys = y.select_rows(&rows)?;
            let w: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
            let vx = weighted_view(&xs, kx, &counts, &w)?;
            let vy = weighted_view(&ys, ky, &counts, &w)?;
            Ok(clipped_z(leading_rho(&vx, &vy, &w, cfg.kappa)?))
        }
        WeightsMode::Robust(_) => {
            let expanded: Vec<usize> = rows
                .iter()
                .zip(&counts)
                .flat_map(|(&r, &c)| std::iter::repeat_n(r, c as usize))
                .collect();
            let xs = x.select_rows(&expanded)?;
            let ys = y.select_rows(&expanded)?;
            let model = fit_views(&xs, kx, &ys, ky, cfg)?;
            Ok(clipped_z(model.rho[0]))
        }
    }
}

/// Sample variance of Fisher's z over `b` paired bootstrap resamples.
/// Replicate `r` draws from its own stream derived from `seed`, so the result
/// does not depend on evaluation order.
pub fn bootstrap_var_z(
    x: &SampleMatrix,
    y: &SampleMatrix,
    kx: &KernelSpec,
    ky: &KernelSpec,
    cfg: &KccaConfig,
    b: usize,
    seed: u64,
) -> Result<f64> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "views have {} and {} observations",
            x.nrows(),
            y.nrows()
        )));
    }
    if b < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bootstrap replicates, got {b}")));
    }
    cfg.validate(x.nrows())?;
    let zs = (0..b as u64)
        .map(|r| bootstrap_replicate_z(x, y, kx, ky, cfg, seed, r))
        .collect::<Result<Vec<f64>>>()?;
    Ok(sample_variance(&zs))
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn eta(num: f64, den: f64, what: &str) -> Result<f64> {
    if den > 0.0 {
        Ok((1.0 - num / den).abs())
    } else if num == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Degenerate(format!("{what}: contaminated-fit norm is zero")))
    }
}

/// `η_ρ` compares the norms of the `ρ²` influence vectors of the ideal and
/// contaminated fits; `η_f` does the same for the difference of the first
/// standardized variates.
pub fn sensitivity(model_id: &KccaModel, model_cd: &KccaModel) -> Result<SensitivityPair> {
    if model_id.n() != model_cd.n() {
        return Err(Error::DimensionMismatch(format!(
            "models fitted on {} and {} observations",
            model_id.n(),
            model_cd.n()
        )));
    }
    let diff = |m: &KccaModel| -> f64 {
        norm(m.variates_x[0].iter().zip(&m.variates_y[0]).map(|(a, b)| a - b))
    };
    Ok(SensitivityPair {
        eta_rho: eta(
            norm(eif_rho(model_id).into_iter()),
            norm(eif_rho(model_cd).into_iter()),
            "eta_rho",
        )?,
        eta_f: eta(diff(model_id), diff(model_cd), "eta_f")?,
    })
}

/// `(index, influence on ρ²)` for every observation, in index order.
pub fn index_plot_data(model: &KccaModel) -> Vec<(usize, f64)> {
    eif_rho(model).into_iter().enumerate().collect()
}
