//! Seeded generators for the sine/cosine (SCS), multivariate Gaussian (MGS)
//! and SNP/imaging latent-model (SMS) designs, each in an ideal (ID) and a
//! contaminated (CD) variant.
//!
//! Row `i` draws from its own stream derived from the master seed, so growing
//! `n` leaves earlier rows unchanged. The contaminated rows are chosen from a
//! separate stream.

use faer::{Mat, Side};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::assoc::{CaseControlDataset, Status, MIN_PER_ARM};
use crate::error::{Error, Result};
use crate::kernel::SampleMatrix;
use crate::util::{derive_seed, percentile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Scs,
    Mgs,
    Sms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Id,
    Cd,
}

pub const SCS_COLUMNS: usize = 100;
pub const MGS_COLUMNS: usize = 6;
pub const SMS_COLUMNS: usize = 1000;
/// Columns of each SMS view that load on the latent variable.
pub const SMS_SIGNAL_COLUMNS: usize = 50;
pub const SMS_LOADING: f64 = 0.5;
/// SNPs per synthetic gene in a planted case-control dataset.
pub const PLANTED_GENE_SNPS: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub design: Design,
    pub n: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Noise standard deviations of the two SMS views on contaminated rows.
    pub sms_noise: (f64, f64),
    pub contamination_rate: f64,
    /// Multiplies every noise standard deviation; 0 gives noise-free data.
    pub noise_scale: f64,
    /// 12 x 12 covariance of the MGS design; `None` uses `0.9^|i-j|`.
    pub mgs_covariance: Option<Vec<Vec<f64>>>,
}

impl SynthSpec {
    pub fn new(design: Design, n: usize, variant: Variant, seed: u64) -> Self {
        Self {
            design,
            n,
            variant,
            seed,
            sms_noise: (10.0, 20.0),
            contamination_rate: 0.05,
            noise_scale: 1.0,
            mgs_covariance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidArgument(format!("n must be at least 10, got {}", self.n)));
        }
        if !(0.0..1.0).contains(&self.contamination_rate) {
            return Err(Error::InvalidArgument(format!(
                "contamination rate must be in [0, 1), got {}",
                self.contamination_rate
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise scale must be nonnegative, got {}",
                self.noise_scale
            )));
        }
        let (a, b) = self.sms_noise;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "SMS noise levels must be positive, got ({a}, {b})"
            )));
        }
        Ok(())
    }

    /// Number of contaminated rows, `⌈rate · n⌉` for CD and 0 for ID.
    pub fn contaminated_count(&self) -> usize {
        match self.variant {
            Variant::Id => 0,
            Variant::Cd => (self.contamination_rate * self.n as f64).ceil() as usize,
        }
    }

    fn require(&self, design: Design) -> Result<()> {
        self.validate()?;
        if self.design != design {
            return Err(Error::InvalidArgument(format!(
                "spec is for {:?}, not {design:?}",
                self.design
            )));
        }
        Ok(())
    }
}

/// One generated pair of views.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub x: SampleMatrix,
    pub y: SampleMatrix,
    /// Sorted indices of contaminated rows.
    pub contaminated: Vec<usize>,
}

const CONTAMINATION_STREAM: u64 = u64::MAX;

fn contamination_mask(spec: &SynthSpec) -> (Vec<bool>, Vec<usize>) {
    let k = spec.contaminated_count().min(spec.n);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, CONTAMINATION_STREAM));
    let mut idx = sample(&mut rng, spec.n, k).into_vec();
    idx.sort_unstable();
    let mut mask = vec![false; spec.n];
    for &i in &idx {
        mask[i] = true;
    }
    (mask, idx)
}

fn row_rng(seed: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn generate(
    spec: &SynthSpec,
    dx: usize,
    dy: usize,
    mut row: impl FnMut(&mut ChaCha8Rng, bool, &mut [f64], &mut [f64]) -> Result<()>,
) -> Result<SynthData> {
    let (mask, contaminated) = contamination_mask(spec);
    let mut xs = vec![0.0; spec.n * dx];
    let mut ys = vec![0.0; spec.n * dy];
    for i in 0..spec.n {
        let mut rng = row_rng(spec.seed, i);
        row(
            &mut rng,
            mask[i],
            &mut xs[i * dx..(i + 1) * dx],
            &mut ys[i * dy..(i + 1) * dy],
        )?;
    }
    Ok(SynthData {
        x: SampleMatrix::new(spec.n, dx, xs)?,
        y: SampleMatrix::new(spec.n, dy, ys)?,
        contaminated,
    })
}

/// `X_ij = sin(j Z_i) + η_i`, `Y_ij = cos(j Z_i) + η_i` with
/// `Z_i ~ U[-3π, 3π]` and `η_i ~ N(0, 0.1²)`, or `N(1, 0.1²)` on contaminated rows.
pub fn gen_scs(spec: &SynthSpec) -> Result<SynthData> {
    spec.require(Design::Scs)?;
    let sd = 0.1 * spec.noise_scale;
    let bound = 3.0 * std::f64::consts::PI;
    generate(spec, SCS_COLUMNS, SCS_COLUMNS, |rng, bad, x, y| {
        let z = rng.random_range(-bound..bound);
        let eta = if bad { 1.0 } else { 0.0 } + sd * normal(rng);
        for j in 0..SCS_COLUMNS {
            let a = (j + 1) as f64 * z;
            x[j] = a.sin() + eta;
            y[j] = a.cos() + eta;
        }
        Ok(())
    })
}

/// Toeplitz covariance `0.9^|i-j|` of the twelve MGS variables.
pub fn default_mgs_covariance() -> Vec<Vec<f64>> {
    (0..12)
        .map(|i| (0..12).map(|j| 0.9f64.powi((i as i32 - j as i32).abs())).collect())
        .collect()
}

fn cholesky(cov: &[Vec<f64>]) -> Result<Mat<f64>> {
    let d = 2 * MGS_COLUMNS;
    if cov.len() != d || cov.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!("MGS covariance must be {d} x {d}")));
    }
    let m = Mat::from_fn(d, d, |i, j| cov[i][j]);
    let llt = m
        .llt(Side::Lower)
        .map_err(|_| Error::InvalidArgument("MGS covariance is not positive definite".into()))?;
    Ok(llt.L().to_owned())
}

/// `Z_i ~ N(0, Σ)` in twelve dimensions (mean all-ones on contaminated rows);
/// `X` is the first six coordinates and `Y = ln|·|` of the last six.
pub fn gen_mgs(spec: &SynthSpec) -> Result<SynthData> {
    spec.require(Design::Mgs)?;
    let cov = spec.mgs_covariance.clone().unwrap_or_else(default_mgs_covariance);
    let l = cholesky(&cov)?;
    let d = 2 * MGS_COLUMNS;
    let scale = spec.noise_scale;
    generate(spec, MGS_COLUMNS, MGS_COLUMNS, |rng, bad, x, y| {
        let shift = if bad { 1.0 } else { 0.0 };
        loop {
            let e: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
            let z: Vec<f64> = (0..d)
                .map(|i| shift + scale * (0..=i).map(|k| l[(i, k)] * e[k]).sum::<f64>())
                .collect();
            if z[MGS_COLUMNS..].iter().all(|&v| v != 0.0) {
                x.copy_from_slice(&z[..MGS_COLUMNS]);
                for (yj, zj) in y.iter_mut().zip(&z[MGS_COLUMNS..]) {
                    *yj = zj.abs().ln();
                }
                return Ok(());
            }
        }
    })
}

fn sms_row(
    rng: &mut ChaCha8Rng,
    h_x: f64,
    h_y: f64,
    sd: (f64, f64),
    x: &mut [f64],
    y: &mut [f64],
    signal: usize,
) {
    for (j, v) in x.iter_mut().enumerate() {
        let load = if j < signal { SMS_LOADING * h_x } else { 0.0 };
        *v = load + sd.0 * normal(rng);
    }
    for (j, v) in y.iter_mut().enumerate() {
        let load = if j < signal { SMS_LOADING * h_y } else { 0.0 };
        *v = load + sd.1 * normal(rng);
    }
}

fn sms_noise(spec: &SynthSpec, bad: bool) -> (f64, f64) {
    let (a, b) = if bad { spec.sms_noise } else { (1.0, 1.0) };
    (a * spec.noise_scale, b * spec.noise_scale)
}

/// Latent model: `h_i ~ N(0, 1)`; the first 50 columns of each view equal
/// `0.5 h_i` plus noise, the rest pure noise. Noise has unit standard
/// deviation, or `sms_noise` on contaminated rows.
pub fn gen_sms(spec: &SynthSpec) -> Result<SynthData> {
    spec.require(Design::Sms)?;
    generate(spec, SMS_COLUMNS, SMS_COLUMNS, |rng, bad, x, y| {
        let h = normal(rng);
        sms_row(rng, h, h, sms_noise(spec, bad), x, y, SMS_SIGNAL_COLUMNS);
        Ok(())
    })
}

/// Generates the design named by `spec.design`.
pub fn generate_design(spec: &SynthSpec) -> Result<SynthData> {
    match spec.design {
        Design::Scs => gen_scs(spec),
        Design::Mgs => gen_mgs(spec),
        Design::Sms => gen_sms(spec),
    }
}

/// Case-control dataset with two genes of 25 SNPs. In cases both genes load
/// on one shared latent variable; in controls each gene has its own. Columns
/// are cut into genotypes 0/1/2 at their pooled terciles. Subjects
/// `0..n_case` are cases.
pub fn plant_case_control(
    spec: &SynthSpec,
    n_case: usize,
    n_control: usize,
) -> Result<CaseControlDataset> {
    if spec.design != Design::Sms {
        return Err(Error::InvalidArgument("planted datasets use the SMS design".into()));
    }
    let total = n_case + n_control;
    let full = SynthSpec {
        n: total,
        ..spec.clone()
    };
    full.validate()?;
    let d = PLANTED_GENE_SNPS;
    let (mask, _) = contamination_mask(&full);
    let mut raw = vec![0.0; total * 2 * d];
    for i in 0..total {
        let mut rng = row_rng(full.seed, i);
        let h = normal(&mut rng);
        let h_y = if i < n_case { h } else { normal(&mut rng) };
        let (x, y) = raw[i * 2 * d..(i + 1) * 2 * d].split_at_mut(d);
        sms_row(&mut rng, h, h_y, sms_noise(&full, mask[i]), x, y, d);
    }
    let cols = 2 * d;
    let mut geno = vec![0.0; total * cols];
    for j in 0..cols {
        let col: Vec<f64> = (0..total).map(|i| raw[i * cols + j]).collect();
        let lo = percentile(&col, 100.0 / 3.0);
        let hi = percentile(&col, 200.0 / 3.0);
        for i in 0..total {
            let v = col[i];
            geno[i * cols + j] = if v <= lo {
                0.0
            } else if v <= hi {
                1.0
            } else {
                2.0
            };
        }
    }
    let subjects = (0..total).map(|i| format!("S{:05}", i + 1)).collect();
    let snps = (0..cols)
        .map(|j| format!("G{}_SNP{:02}", j / d + 1, j % d + 1))
        .collect();
    let genes = (0..cols).map(|j| format!("G{}", j / d + 1)).collect();
    let status = (0..total)
        .map(|i| if i < n_case { Status::Case } else { Status::Control })
        .collect();
    CaseControlDataset::new(
        subjects,
        snps,
        SampleMatrix::new(total, cols, geno)?,
        status,
        genes,
        MIN_PER_ARM,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        for (design, cols) in [
            (Design::Scs, SCS_COLUMNS),
            (Design::Mgs, MGS_COLUMNS),
            (Design::Sms, SMS_COLUMNS),
        ] {
            let spec = SynthSpec::new(design, 40, Variant::Cd, 17);
            let a = generate_design(&spec).unwrap();
            let b = generate_design(&spec).unwrap();
            assert_eq!(a, b);
            assert_eq!((a.x.nrows(), a.x.ncols()), (40, cols));
            assert_eq!((a.y.nrows(), a.y.ncols()), (40, cols));
            assert_eq!(a.contaminated.len(), 2);
        }
    }

    #[test]
    fn ideal_variant_is_clean() {
        let spec = SynthSpec::new(Design::Scs, 30, Variant::Id, 1);
        assert!(gen_scs(&spec).unwrap().contaminated.is_empty());
    }

    #[test]
    fn growing_n_keeps_earlier_rows() {
        let a = gen_mgs(&SynthSpec::new(Design::Mgs, 20, Variant::Id, 5)).unwrap();
        let b = gen_mgs(&SynthSpec::new(Design::Mgs, 30, Variant::Id, 5)).unwrap();
        for i in 0..20 {
            assert_eq!(a.x.row(i), b.x.row(i));
        }
    }

    #[test]
    fn noise_free_scs_on_unit_circle() {
        let spec = SynthSpec {
            noise_scale: 0.0,
            ..SynthSpec::new(Design::Scs, 25, Variant::Id, 3)
        };
        let d = gen_scs(&spec).unwrap();
        for i in 0..25 {
            let (s, c) = (d.x.get(i, 0), d.y.get(i, 0));
            assert!((s * s + c * c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_sms_shares_latent() {
        let spec = SynthSpec {
            noise_scale: 0.0,
            ..SynthSpec::new(Design::Sms, 12, Variant::Id, 3)
        };
        let d = gen_sms(&spec).unwrap();
        for i in 0..12 {
            assert_eq!(d.x.get(i, 0), d.y.get(i, 0));
            assert_eq!(d.x.get(i, SMS_SIGNAL_COLUMNS), 0.0);
        }
    }

    #[test]
    fn wrong_design_rejected() {
        assert!(gen_sms(&SynthSpec::new(Design::Scs, 12, Variant::Id, 3)).is_err());
        assert!(gen_scs(&SynthSpec::new(Design::Scs, 9, Variant::Id, 3)).is_err());
    }

    #[test]
    fn planted_labels_and_genotypes() {
        let spec = SynthSpec::new(Design::Sms, 10, Variant::Id, 8);
        let ds = plant_case_control(&spec, 30, 20).unwrap();
        let cases = ds.status().iter().filter(|&&s| s == Status::Case).count();
        assert_eq!((cases, ds.status().len() - cases), (30, 20));
        assert_eq!(ds.gene_ids(), &["G1".to_string(), "G2".to_string()]);
        assert!(ds
            .genotypes()
            .as_slice()
            .iter()
            .all(|&g| g == 0.0 || g == 1.0 || g == 2.0));
    }
}
