//! Plot-ready per-observation influence values of the first canonical
//! correlation.

use std::path::PathBuf;

use clap::Args;
use rkcca_core::{fit_views, generate_design, index_plot_data, Design, SynthSpec, Variant};
use serde::{Deserialize, Serialize};

use crate::config::{echo, load_config_file, merge, parse_list, resolve_seed, Method, ModelArgs, RunArgs};
use crate::error::{invalid, numerical, rejected, CliResult};
use crate::simulate::{DesignArg, VariantArg};
use crate::tsv::{num, write_tsv, Provenance};

pub const COLUMNS: [&str; 4] = ["method", "index", "eif_rho", "contaminated"];

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct IndexPlotArgs {
    /// Generator design [default: sms]
    #[arg(long, value_enum)]
    pub design: Option<DesignArg>,
    /// Sample size [default: 300]
    #[arg(long)]
    pub n: Option<usize>,
    /// Ideal or contaminated [default: cd]
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Comma-separated methods [default: kcca,rkcca-hampel]
    #[arg(long)]
    pub methods: Option<String>,
    /// Output TSV
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

pub fn run(flags: IndexPlotArgs) -> CliResult<()> {
    let mut args = merge(&flags, load_config_file(flags.config.as_deref())?)?;
    let seed = resolve_seed(args.run.seed)?;
    args.run.seed = Some(seed);
    let design: Design = (*args.design.get_or_insert(DesignArg::Sms)).into();
    let variant: Variant = (*args.variant.get_or_insert(VariantArg::Cd)).into();
    let n = *args.n.get_or_insert(300);
    let methods: Vec<Method> = parse_list(args.methods.get_or_insert_with(|| "kcca,rkcca-hampel".into()), "methods")?;
    let out = args.out.clone().ok_or_else(|| invalid("--out is required"))?;
    let setups = methods.iter().map(|m| m.setup(&args.model)).collect::<CliResult<Vec<_>>>()?;
    let spec = SynthSpec::new(design, n, variant, seed);
    spec.validate().map_err(rejected("spec"))?;
    let data = generate_design(&spec).map_err(numerical("generator"))?;
    let mut rows = Vec::new();
    for (m, (k, cfg)) in methods.iter().zip(&setups) {
        let model = fit_views(&data.x, k, &data.y, k, cfg).map_err(numerical(m.name()))?;
        for (i, e) in index_plot_data(&model) {
            let flag = data.contaminated.binary_search(&i).is_ok() as u8;
            rows.push(vec![m.name().to_string(), i.to_string(), num(e), flag.to_string()]);
        }
    }
    write_tsv(&out, &Provenance::new("index-plot", seed, echo(&args)), &COLUMNS, &rows)
}
