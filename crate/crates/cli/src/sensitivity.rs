//! Sensitivity of classical and robust fits to contamination: paired ideal
//! and contaminated samples share every clean row, and the η measures
//! compare their influence norms.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use rayon::prelude::*;
use rkcca_core::util::{derive_seed, mean, sample_sd};
use rkcca_core::{fit_views, generate_design, sensitivity, Design, KccaConfig, KernelSpec, SensitivityPair, SynthSpec, Variant};
use serde::{Deserialize, Serialize};

use crate::config::{echo, load_config_file, merge, parse_list, resolve_seed, worker_pool, Method, ModelArgs, RunArgs};
use crate::error::{invalid, numerical, CliResult};
use crate::tsv::{num, write_tsv, Provenance};

pub const COLUMNS: [&str; 7] = ["design", "n", "method", "eta_rho_mean", "eta_rho_sd", "eta_f_mean", "eta_f_sd"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignLabel(pub Design);

impl DesignLabel {
    pub fn name(&self) -> &'static str {
        match self.0 {
            Design::Mgs => "mgsd",
            Design::Scs => "scsd",
            Design::Sms => "smsd",
        }
    }
}

impl FromStr for DesignLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mgsd" => Ok(Self(Design::Mgs)),
            "scsd" => Ok(Self(Design::Scs)),
            "smsd" => Ok(Self(Design::Sms)),
            _ => Err("expected one of mgsd, scsd, smsd".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LossChoice {
    Huber,
    Hampel,
}

impl LossChoice {
    pub fn method(self) -> Method {
        match self {
            LossChoice::Huber => Method::RkccaHuber,
            LossChoice::Hampel => Method::RkccaHampel,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SensitivityArgs {
    /// Comma-separated designs: mgsd, scsd, smsd [default: mgsd,scsd,smsd]
    #[arg(long)]
    pub designs: Option<String>,
    /// Comma-separated sample sizes [default: 100,500,1000]
    #[arg(long)]
    pub n_list: Option<String>,
    /// Replications per design and size [default: 100]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Loss of the robust fit [default: hampel]
    #[arg(long, value_enum)]
    pub loss: Option<LossChoice>,
    /// Report TSV
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

/// η measures of the classical and the robust fit on one ID/CD pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepEta {
    pub classical: SensitivityPair,
    pub robust: SensitivityPair,
}

pub fn pair_seed(seed: u64, design: Design, n: usize, rep: usize) -> u64 {
    let code = match design {
        Design::Scs => 0,
        Design::Mgs => 1,
        Design::Sms => 2,
    };
    derive_seed(derive_seed(derive_seed(seed, code), n as u64), rep as u64)
}

pub type Setup = (KernelSpec, KccaConfig);

pub fn sensitivity_rep(design: Design, n: usize, seed: u64, classical: &Setup, robust: &Setup) -> rkcca_core::Result<RepEta> {
    let id = generate_design(&SynthSpec::new(design, n, Variant::Id, seed))?;
    let cd = generate_design(&SynthSpec::new(design, n, Variant::Cd, seed))?;
    let eta = |(k, cfg): &Setup| -> rkcca_core::Result<SensitivityPair> {
        let mi = fit_views(&id.x, k, &id.y, k, cfg)?;
        let mc = fit_views(&cd.x, k, &cd.y, k, cfg)?;
        sensitivity(&mi, &mc)
    };
    Ok(RepEta {
        classical: eta(classical)?,
        robust: eta(robust)?,
    })
}

pub fn sensitivity_reps(
    design: Design,
    n: usize,
    reps: usize,
    seed: u64,
    classical: &Setup,
    robust: &Setup,
    pool: &rayon::ThreadPool,
) -> CliResult<Vec<RepEta>> {
    pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                sensitivity_rep(design, n, pair_seed(seed, design, n, r), classical, robust)
                    .map_err(numerical(format!("{} n={n} rep={r}", DesignLabel(design).name())))
            })
            .collect()
    })
}

fn row(design: Design, n: usize, method: &str, etas: &[SensitivityPair]) -> Vec<String> {
    let r: Vec<f64> = etas.iter().map(|e| e.eta_rho).collect();
    let f: Vec<f64> = etas.iter().map(|e| e.eta_f).collect();
    vec![
        DesignLabel(design).name().to_string(),
        n.to_string(),
        method.to_string(),
        num(mean(&r)),
        num(sample_sd(&r)),
        num(mean(&f)),
        num(sample_sd(&f)),
    ]
}

pub fn run(flags: SensitivityArgs) -> CliResult<()> {
    let mut args = merge(&flags, load_config_file(flags.config.as_deref())?)?;
    let seed = resolve_seed(args.run.seed)?;
    args.run.seed = Some(seed);
    let designs: Vec<DesignLabel> = parse_list(args.designs.get_or_insert_with(|| "mgsd,scsd,smsd".into()), "designs")?;
    let n_list: Vec<usize> = parse_list(args.n_list.get_or_insert_with(|| "100,500,1000".into()), "n-list")?;
    let reps = *args.reps.get_or_insert(100);
    let loss = *args.loss.get_or_insert(LossChoice::Hampel);
    let out = args.out.clone().ok_or_else(|| invalid("--out is required"))?;
    if reps < 2 {
        return Err(invalid(format!("reps must be at least 2, got {reps}")));
    }
    if let Some(n) = n_list.iter().find(|&&n| n < 10) {
        return Err(invalid(format!("sample sizes must be at least 10, got {n}")));
    }
    let classical = Method::Kcca.setup(&args.model)?;
    let robust = loss.method().setup(&args.model)?;
    let pool = worker_pool(args.run.workers)?;
    let mut rows = Vec::new();
    for d in &designs {
        for &n in &n_list {
            let etas = sensitivity_reps(d.0, n, reps, seed, &classical, &robust, &pool)?;
            rows.push(row(d.0, n, "classical", &etas.iter().map(|e| e.classical).collect::<Vec<_>>()));
            rows.push(row(d.0, n, "robust", &etas.iter().map(|e| e.robust).collect::<Vec<_>>()));
        }
    }
    write_tsv(&out, &Provenance::new("sensitivity-bench", seed, echo(&args)), &COLUMNS, &rows)
}
