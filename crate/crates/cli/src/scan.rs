use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use rkcca_core::assoc::{finish_scan, gene_pairs, overlap_report};
use rkcca_core::{
    gene_pair_test, CaseControlDataset, Error, KccaConfig, KernelSpec, ScanOutput,
    ScanSummary,
};
use serde::{Deserialize, Serialize};

use crate::config::{echo, load_config_file, merge, parse_list, resolve_seed, worker_pool, Method, ModelArgs, RunArgs};
use crate::error::{invalid, numerical, CliResult, Failure};
use crate::ingest::load_dataset;
use crate::tsv::{num, write_json, write_text, write_tsv, Provenance};

pub const RESULT_COLUMNS: [&str; 12] = [
    "gene1", "gene2", "r_case", "r_control", "z_case", "z_control", "var_case", "var_control", "T",
    "p", "p_bh", "flags",
];

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ScanArgs {
    /// Genotype TSV: subject_id then one 0/1/2 column per SNP
    #[arg(long)]
    pub genotypes: Option<PathBuf>,
    /// Phenotype TSV: subject_id, status (1 case, 0 control)
    #[arg(long)]
    pub phenotypes: Option<PathBuf>,
    /// Gene map TSV: snp_id, gene_id
    #[arg(long)]
    pub gene_map: Option<PathBuf>,
    /// Comma-separated methods: lcca, kcca, rkcca-huber, rkcca-hampel [default: kcca]
    #[arg(long)]
    pub method: Option<String>,
    /// Significance level for the summary [default: 0.05]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output directory
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

#[derive(Serialize)]
struct SummaryDoc<'a> {
    method: &'a str,
    #[serde(flatten)]
    summary: &'a ScanSummary,
}

/// Tests every gene pair on the worker pool and merges in scan order.
pub fn scan_dataset(
    data: &CaseControlDataset,
    kernel: &KernelSpec,
    cfg: &KccaConfig,
    alpha: f64,
    pool: &rayon::ThreadPool,
) -> CliResult<ScanOutput> {
    if data.gene_ids().len() < 2 {
        return Err(invalid("a scan needs at least two genes"));
    }
    let pairs = gene_pairs(data);
    let outcomes: Vec<_> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(a, b)| ((a, b), gene_pair_test(data, a, b, kernel, cfg)))
            .collect()
    });
    // Untestable pairs are skipped, but a solver breakdown aborts the scan.
    for ((a, b), r) in &outcomes {
        if let Err(e @ (Error::Eigen(_) | Error::NonFinite { .. })) = r {
            return Err(Failure::Numerical(format!(
                "pair {} / {}: {e}",
                data.gene_ids()[*a],
                data.gene_ids()[*b]
            )));
        }
    }
    finish_scan(data, outcomes, alpha).map_err(numerical("scan"))
}

pub fn result_rows(out: &ScanOutput) -> Vec<Vec<String>> {
    out.results
        .iter()
        .map(|r| {
            vec![
                r.gene1.clone(),
                r.gene2.clone(),
                num(r.r_case),
                num(r.r_control),
                num(r.z_case),
                num(r.z_control),
                num(r.var_case),
                num(r.var_control),
                num(r.t_stat),
                num(r.p_value),
                num(r.p_bh),
                if r.flags.is_empty() { "-".to_string() } else { r.flags.join(";") },
            ]
        })
        .collect()
}

pub fn run(flags: ScanArgs) -> CliResult<()> {
    let mut args = merge(&flags, load_config_file(flags.config.as_deref())?)?;
    let seed = resolve_seed(args.run.seed)?;
    args.run.seed = Some(seed);
    let methods: Vec<Method> = parse_list(args.method.get_or_insert_with(|| "kcca".into()), "method")?;
    let alpha = *args.alpha.get_or_insert(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let need = |p: &Option<PathBuf>, flag: &str| p.clone().ok_or_else(|| invalid(format!("--{flag} is required")));
    let geno = need(&args.genotypes, "genotypes")?;
    let pheno = need(&args.phenotypes, "phenotypes")?;
    let map = need(&args.gene_map, "gene-map")?;
    let out_dir = need(&args.out, "out")?;
    let setups = methods
        .iter()
        .map(|m| m.setup(&args.model))
        .collect::<CliResult<Vec<_>>>()?;

    let data = load_dataset(&geno, &pheno, &map)?;
    let pool = worker_pool(args.run.workers)?;
    let prov = Provenance::new("scan", seed, echo(&args));
    let mut sets = Vec::new();
    for (m, (kernel, cfg)) in methods.iter().zip(&setups) {
        let out = scan_dataset(&data, kernel, cfg, alpha, &pool)
            .map_err(|e| match e {
                Failure::Numerical(msg) => Failure::Numerical(format!("{}: {msg}", m.name())),
                other => other,
            })?;
        write_tsv(
            &out_dir.join(format!("{}.results.tsv", m.name())),
            &prov,
            &RESULT_COLUMNS,
            &result_rows(&out),
        )?;
        write_json(
            &out_dir.join(format!("{}.summary.json", m.name())),
            &prov,
            &SummaryDoc {
                method: m.name(),
                summary: &out.summary,
            },
        )?;
        sets.push((m.name().to_string(), out.summary.isolated_genes_bh.clone()));
    }
    if sets.len() > 1 {
        let report = overlap_report(&sets);
        write_text(
            &out_dir.join("overlap.txt"),
            &format!("{}{}", prov.header(), report.to_text()),
        )?;
    }
    Ok(())
}
