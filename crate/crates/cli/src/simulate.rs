//! Writes synthetic samples as TSVs with a manifest of hashes.
//!
//! Without `--n-case`/`--n-control` the two views go to `<prefix>.x.tsv` and
//! `<prefix>.y.tsv`. With them, a planted SMS case-control dataset goes to
//! `<prefix>.genotypes.tsv`, `<prefix>.phenotypes.tsv` and
//! `<prefix>.gene_map.tsv`, ready for `scan`.

use std::path::{Path, PathBuf};

use clap::Args;
use rkcca_core::{generate_design, plant_case_control, Design, SampleMatrix, Status, SynthSpec, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{echo, load_config_file, merge, resolve_seed, RunArgs};
use crate::error::{invalid, numerical, rejected, CliResult};
use crate::tsv::{num, render_tsv, write_json, write_text, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DesignArg {
    Scs,
    Mgs,
    Sms,
}

impl From<DesignArg> for Design {
    fn from(d: DesignArg) -> Self {
        match d {
            DesignArg::Scs => Design::Scs,
            DesignArg::Mgs => Design::Mgs,
            DesignArg::Sms => Design::Sms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Id,
    Cd,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Id => Variant::Id,
            VariantArg::Cd => Variant::Cd,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Generator design
    #[arg(long, value_enum)]
    pub design: Option<DesignArg>,
    /// Sample size of a two-view sample
    #[arg(long)]
    pub n: Option<usize>,
    /// Ideal or contaminated [default: id]
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Cases of a planted case-control dataset
    #[arg(long)]
    pub n_case: Option<usize>,
    /// Controls of a planted case-control dataset
    #[arg(long)]
    pub n_control: Option<usize>,
    /// Output path prefix
    #[arg(long)]
    pub out_prefix: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    /// JSON config file with the same keys as the flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a SynthSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_case: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_control: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contaminated: Option<&'a [usize]>,
    files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn matrix_rows(ids: &[String], m: &SampleMatrix, fmt: impl Fn(f64) -> String) -> Vec<Vec<String>> {
    (0..m.nrows())
        .map(|i| std::iter::once(ids[i].clone()).chain(m.row(i).iter().map(|&v| fmt(v))).collect())
        .collect()
}

fn with_suffix(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.{suffix}"))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn run(flags: SimulateArgs) -> CliResult<()> {
    let mut args = merge(&flags, load_config_file(flags.config.as_deref())?)?;
    let seed = resolve_seed(args.run.seed)?;
    args.run.seed = Some(seed);
    let design: Design = args.design.ok_or_else(|| invalid("--design is required"))?.into();
    let variant: Variant = (*args.variant.get_or_insert(VariantArg::Id)).into();
    let prefix = args.out_prefix.clone().ok_or_else(|| invalid("--out-prefix is required"))?;
    let prov = Provenance::new("simulate", seed, echo(&args));
    let mut files = Vec::new();
    let mut emit = |suffix: &str, text: String| -> CliResult<()> {
        let path = with_suffix(&prefix, suffix);
        write_text(&path, &text)?;
        files.push(FileEntry {
            path: file_name(&path),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(())
    };

    match (args.n_case, args.n_control) {
        (None, None) => {
            let n = args.n.ok_or_else(|| invalid("--n is required"))?;
            let spec = SynthSpec::new(design, n, variant, seed);
            spec.validate().map_err(rejected("spec"))?;
            let data = generate_design(&spec).map_err(numerical("generator"))?;
            let ids: Vec<String> = (0..n).map(|i| format!("R{:05}", i + 1)).collect();
            for (suffix, m, stem) in [("x.tsv", &data.x, "x"), ("y.tsv", &data.y, "y")] {
                let cols: Vec<String> = std::iter::once("row_id".to_string())
                    .chain((1..=m.ncols()).map(|j| format!("{stem}{j}")))
                    .collect();
                let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
                emit(suffix, render_tsv(&prov, &cols, &matrix_rows(&ids, m, num)))?;
            }
            let manifest = Manifest {
                spec: &spec,
                n_case: None,
                n_control: None,
                contaminated: Some(&data.contaminated),
                files,
            };
            write_json(&with_suffix(&prefix, "manifest.json"), &prov, &manifest)
        }
        (Some(n_case), Some(n_control)) => {
            if args.n.is_some() {
                return Err(invalid("--n does not apply to a case-control dataset"));
            }
            if variant != Variant::Id {
                return Err(invalid("planted case-control datasets have no contaminated variant"));
            }
            let spec = SynthSpec::new(design, n_case + n_control, variant, seed);
            let ds = plant_case_control(&spec, n_case, n_control).map_err(rejected("spec"))?;
            let mut geno_cols = vec!["subject_id"];
            geno_cols.extend(ds.snp_ids().iter().map(String::as_str));
            let geno = matrix_rows(ds.subject_ids(), ds.genotypes(), |v| format!("{}", v as u8));
            emit("genotypes.tsv", render_tsv(&prov, &geno_cols, &geno))?;
            let pheno: Vec<Vec<String>> = ds
                .subject_ids()
                .iter()
                .zip(ds.status())
                .map(|(id, s)| vec![id.clone(), if *s == Status::Case { "1" } else { "0" }.to_string()])
                .collect();
            emit("phenotypes.tsv", render_tsv(&prov, &["subject_id", "status"], &pheno))?;
            let map: Vec<Vec<String>> = (0..ds.gene_ids().len())
                .flat_map(|g| {
                    let gene = ds.gene_ids()[g].clone();
                    ds.gene_snps(g)
                        .iter()
                        .map(move |&j| (j, gene.clone()))
                        .collect::<Vec<_>>()
                })
                .map(|(j, gene)| vec![ds.snp_ids()[j].clone(), gene])
                .collect();
            emit("gene_map.tsv", render_tsv(&prov, &["snp_id", "gene_id"], &map))?;
            let manifest = Manifest {
                spec: &spec,
                n_case: Some(n_case),
                n_control: Some(n_control),
                contaminated: None,
                files,
            };
            write_json(&with_suffix(&prefix, "manifest.json"), &prov, &manifest)
        }
        _ => Err(invalid("--n-case and --n-control go together")),
    }
}
