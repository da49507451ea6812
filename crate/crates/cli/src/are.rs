//! Accuracy of the influence-function and bootstrap variance estimates of
//! Fisher's z on SCS data, relative to the Monte Carlo variance across reps.

use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgAction, Args};
use rayon::prelude::*;
use rkcca_core::util::{derive_seed, mean, sample_sd, sample_variance};
use rkcca_core::{
    bootstrap_var_z, eif_fisher, first_kcc, fisher_z, fit_views, generate_design, Design, KccaConfig,
    KernelSpec, SynthSpec, Variant,
};
use serde::{Deserialize, Serialize};

use crate::config::{echo, load_config_file, merge, parse_list, resolve_seed, worker_pool, Method, ModelArgs, RunArgs};
use crate::error::{invalid, numerical, CliResult};
use crate::tsv::{num, write_tsv, Provenance};

pub const REPORT_COLUMNS: [&str; 12] = [
    "method", "n", "reps", "b_boot", "truth_var", "if_var_mean", "if_var_sd", "boot_var_mean",
    "boot_var_sd", "mse_if", "mse_boot", "are",
];
pub const TIMING_COLUMNS: [&str; 4] = ["method", "n", "if_seconds_mean", "boot_seconds_mean"];

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AreArgs {
    /// Comma-separated sample sizes [default: 100,300,500]
    #[arg(long)]
    pub n_list: Option<String>,
    /// Replications per sample size [default: 100]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Bootstrap resamples per replication [default: 500]
    #[arg(long)]
    pub b_boot: Option<usize>,
    /// Comma-separated methods [default: lcca,kcca]
    #[arg(long)]
    pub methods: Option<String>,
    /// Estimate the Monte Carlo variance from a second, independent set of reps
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_missing_value = "true")]
    pub fresh_truth: Option<bool>,
    /// Report TSV; timings go to the same path with a `.timing.tsv` suffix
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// JSON config file with the same keys as the flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Estimates from one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepOutcome {
    pub z: f64,
    pub var_if: f64,
    pub var_boot: f64,
    pub if_seconds: f64,
    pub boot_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreRow {
    pub method: Method,
    pub n: usize,
    pub reps: usize,
    pub b_boot: usize,
    pub truth_var: f64,
    pub if_var_mean: f64,
    pub if_var_sd: f64,
    pub boot_var_mean: f64,
    pub boot_var_sd: f64,
    pub mse_if: f64,
    pub mse_boot: f64,
    /// `mse_boot / mse_if`; above 1 means the influence estimate is closer.
    pub are: f64,
    pub if_seconds_mean: f64,
    pub boot_seconds_mean: f64,
}

/// Seed of the SCS sample of replication `rep` at size `n`, shared by all
/// methods.
pub fn rep_seed(seed: u64, n: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(seed, n as u64), rep as u64)
}

pub fn scs_sample(seed: u64, n: usize, rep: usize) -> CliResult<rkcca_core::SynthData> {
    generate_design(&SynthSpec::new(Design::Scs, n, Variant::Id, rep_seed(seed, n, rep)))
        .map_err(numerical(format!("n={n} rep={rep}")))
}

/// Influence and bootstrap estimates on one replication.
pub fn are_rep(
    kernel: &KernelSpec,
    cfg: &KccaConfig,
    seed: u64,
    n: usize,
    rep: usize,
    b_boot: usize,
) -> CliResult<RepOutcome> {
    let d = scs_sample(seed, n, rep)?;
    let ctx = format!("n={n} rep={rep}");
    let t0 = Instant::now();
    let model = fit_views(&d.x, kernel, &d.y, kernel, cfg).map_err(numerical(&ctx))?;
    let var_if = eif_fisher(&model).var_z;
    let if_seconds = t0.elapsed().as_secs_f64();
    let z = fisher_z(first_kcc(&model)).map_err(numerical(&ctx))?;
    let t1 = Instant::now();
    let var_boot = bootstrap_var_z(&d.x, &d.y, kernel, kernel, cfg, b_boot, derive_seed(rep_seed(seed, n, rep), 1))
        .map_err(numerical(&ctx))?;
    Ok(RepOutcome {
        z,
        var_if,
        var_boot,
        if_seconds,
        boot_seconds: t1.elapsed().as_secs_f64(),
    })
}

fn truth_z(kernel: &KernelSpec, cfg: &KccaConfig, seed: u64, n: usize, rep: usize) -> CliResult<f64> {
    let d = scs_sample(seed, n, rep)?;
    let ctx = format!("n={n} rep={rep}");
    let model = fit_views(&d.x, kernel, &d.y, kernel, cfg).map_err(numerical(&ctx))?;
    fisher_z(first_kcc(&model)).map_err(numerical(&ctx))
}

pub struct AreStudy {
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub b_boot: usize,
    pub methods: Vec<Method>,
    pub model: ModelArgs,
    pub seed: u64,
    pub fresh_truth: bool,
}

impl AreStudy {
    pub fn validate(&self) -> CliResult<()> {
        if self.reps < 2 {
            return Err(invalid(format!("reps must be at least 2, got {}", self.reps)));
        }
        if self.b_boot < 2 {
            return Err(invalid(format!("b-boot must be at least 2, got {}", self.b_boot)));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 10) {
            return Err(invalid(format!("sample sizes must be at least 10, got {n}")));
        }
        for m in &self.methods {
            m.setup(&self.model)?;
        }
        Ok(())
    }

    pub fn run(&self, pool: &rayon::ThreadPool) -> CliResult<Vec<AreRow>> {
        self.validate()?;
        let mut rows = Vec::new();
        for &method in &self.methods {
            let (kernel, cfg) = method.setup(&self.model)?;
            for &n in &self.n_list {
                let ctx = |e| match e {
                    crate::error::Failure::Numerical(m) => {
                        crate::error::Failure::Numerical(format!("{}: {m}", method.name()))
                    }
                    other => other,
                };
                let reps: Vec<RepOutcome> = pool
                    .install(|| {
                        (0..self.reps)
                            .into_par_iter()
                            .map(|r| are_rep(&kernel, &cfg, self.seed, n, r, self.b_boot))
                            .collect::<CliResult<Vec<_>>>()
                    })
                    .map_err(ctx)?;
                let truth_zs: Vec<f64> = if self.fresh_truth {
                    pool.install(|| {
                        (self.reps..2 * self.reps)
                            .into_par_iter()
                            .map(|r| truth_z(&kernel, &cfg, self.seed, n, r))
                            .collect::<CliResult<Vec<_>>>()
                    })
                    .map_err(ctx)?
                } else {
                    reps.iter().map(|o| o.z).collect()
                };
                rows.push(summarize(method, n, self.b_boot, &reps, sample_variance(&truth_zs)));
            }
        }
        Ok(rows)
    }
}

pub fn summarize(method: Method, n: usize, b_boot: usize, reps: &[RepOutcome], truth_var: f64) -> AreRow {
    let vi: Vec<f64> = reps.iter().map(|o| o.var_if).collect();
    let vb: Vec<f64> = reps.iter().map(|o| o.var_boot).collect();
    let mse = |v: &[f64]| mean(&v.iter().map(|x| (x - truth_var).powi(2)).collect::<Vec<_>>());
    let (mse_if, mse_boot) = (mse(&vi), mse(&vb));
    AreRow {
        method,
        n,
        reps: reps.len(),
        b_boot,
        truth_var,
        if_var_mean: mean(&vi),
        if_var_sd: sample_sd(&vi),
        boot_var_mean: mean(&vb),
        boot_var_sd: sample_sd(&vb),
        mse_if,
        mse_boot,
        are: mse_boot / mse_if,
        if_seconds_mean: mean(&reps.iter().map(|o| o.if_seconds).collect::<Vec<_>>()),
        boot_seconds_mean: mean(&reps.iter().map(|o| o.boot_seconds).collect::<Vec<_>>()),
    }
}

pub fn timing_path(out: &std::path::Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".timing.tsv");
    PathBuf::from(s)
}

pub fn run(flags: AreArgs) -> CliResult<()> {
    let mut args = merge(&flags, load_config_file(flags.config.as_deref())?)?;
    let seed = resolve_seed(args.run.seed)?;
    args.run.seed = Some(seed);
    let study = AreStudy {
        n_list: parse_list(args.n_list.get_or_insert_with(|| "100,300,500".into()), "n-list")?,
        reps: *args.reps.get_or_insert(100),
        b_boot: *args.b_boot.get_or_insert(500),
        methods: parse_list(args.methods.get_or_insert_with(|| "lcca,kcca".into()), "methods")?,
        model: args.model.clone(),
        seed,
        fresh_truth: *args.fresh_truth.get_or_insert(false),
    };
    let out = args.out.clone().ok_or_else(|| invalid("--out is required"))?;
    study.validate()?;
    let rows = study.run(&worker_pool(args.run.workers)?)?;
    let prov = Provenance::new("are-bench", seed, echo(&args));
    let report: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method.name().to_string(),
                r.n.to_string(),
                r.reps.to_string(),
                r.b_boot.to_string(),
                num(r.truth_var),
                num(r.if_var_mean),
                num(r.if_var_sd),
                num(r.boot_var_mean),
                num(r.boot_var_sd),
                num(r.mse_if),
                num(r.mse_boot),
                num(r.are),
            ]
        })
        .collect();
    write_tsv(&out, &prov, &REPORT_COLUMNS, &report)?;
    let timing: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method.name().to_string(),
                r.n.to_string(),
                num(r.if_seconds_mean),
                num(r.boot_seconds_mean),
            ]
        })
        .collect();
    write_tsv(&timing_path(&out), &prov, &TIMING_COLUMNS, &timing)
}
