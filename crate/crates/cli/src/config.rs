//! Flag and config-file handling shared by every subcommand.
//!
//! A JSON config file holds an object whose keys are the long flag names.
//! Flags given on the command line override the file; the seed falls back to
//! `RKCCA_SEED` and then to [`DEFAULT_SEED`].

use std::path::Path;
use std::str::FromStr;

use clap::Args;
use rkcca_core::{KccaConfig, KernelSpec, KirwlsConfig, LossConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, io_error, CliResult, Failure};

pub const DEFAULT_SEED: u64 = 1;
pub const SEED_ENV: &str = "RKCCA_SEED";
pub const DEFAULT_KAPPA: f64 = 1e-5;

/// Reads a config file, which must hold a JSON object.
pub fn load_config_file(path: Option<&Path>) -> CliResult<Option<Value>> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(invalid(format!("{}: config must be a JSON object", path.display())));
    }
    Ok(Some(value))
}

/// Overlays the flags that were given onto the config file values.
pub fn merge<T: Serialize + DeserializeOwned + Default>(flags: &T, file: Option<Value>) -> CliResult<T> {
    let Some(Value::Object(mut base)) = file else {
        return Ok(clone_via_json(flags));
    };
    let Value::Object(known) = to_value(&T::default()) else {
        unreachable!("option structs serialize to objects")
    };
    if let Some(k) = base.keys().find(|k| !known.contains_key(*k)) {
        return Err(invalid(format!("unknown config key `{k}`")));
    }
    let Value::Object(given) = to_value(flags) else {
        unreachable!("option structs serialize to objects")
    };
    for (k, v) in given {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| invalid(format!("config: {e}")))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("option structs are serializable")
}

fn clone_via_json<T: Serialize + DeserializeOwned>(t: &T) -> T {
    serde_json::from_value(to_value(t)).expect("round trip of option struct")
}

/// Serialized config for provenance headers. The worker count is left out
/// because it never changes results.
pub fn echo<T: Serialize>(t: &T) -> Value {
    let mut v = to_value(t);
    if let Value::Object(m) = &mut v {
        m.remove("workers");
    }
    v
}

pub fn resolve_seed(seed: Option<u64>) -> CliResult<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| invalid(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| invalid(format!("{what}: `{p}`: {e}"))))
        .collect::<CliResult<Vec<T>>>()?;
    if items.is_empty() {
        return Err(invalid(format!("{what}: empty list")));
    }
    Ok(items)
}

pub fn worker_pool(workers: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Io(format!("worker pool: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lcca,
    Kcca,
    RkccaHuber,
    RkccaHampel,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Lcca => "lcca",
            Method::Kcca => "kcca",
            Method::RkccaHuber => "rkcca-huber",
            Method::RkccaHampel => "rkcca-hampel",
        }
    }

    /// Kernel and fit configuration of this method under `opts`.
    pub fn setup(&self, opts: &ModelArgs) -> CliResult<(KernelSpec, KccaConfig)> {
        let kappa = opts.kappa.unwrap_or(DEFAULT_KAPPA);
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        let choice = match (self, opts.kernel) {
            (Method::Lcca, Some(KernelChoice::Gaussian)) => {
                return Err(invalid("lcca uses the linear kernel; use kcca for a gaussian kernel"));
            }
            (Method::Lcca, _) => KernelChoice::Linear,
            (_, k) => k.unwrap_or(KernelChoice::Gaussian),
        };
        let kernel = match (choice, opts.bandwidth) {
            (KernelChoice::Linear, Some(_)) => {
                return Err(invalid("a bandwidth only applies to the gaussian kernel"));
            }
            (KernelChoice::Linear, None) => KernelSpec::Linear,
            (KernelChoice::Gaussian, None) => KernelSpec::gaussian_median(),
            (KernelChoice::Gaussian, Some(b)) => {
                KernelSpec::gaussian(b).map_err(|e| invalid(e.to_string()))?
            }
        };
        let loss = match self {
            Method::Lcca | Method::Kcca => return Ok((kernel, KccaConfig::classical(kappa))),
            Method::RkccaHuber => LossConfig::Huber { c: opts.huber_c },
            Method::RkccaHampel => LossConfig::Hampel {
                constants: opts.hampel_constants()?,
            },
        };
        let mut kirwls = KirwlsConfig::new(loss);
        if let Some(m) = opts.max_iter {
            kirwls.max_iter = m;
        }
        if let Some(t) = opts.tol {
            kirwls.tol = t;
        }
        kirwls.validate().map_err(|e| invalid(e.to_string()))?;
        Ok((kernel, KccaConfig::robust(kappa, kirwls)))
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lcca" => Ok(Method::Lcca),
            "kcca" => Ok(Method::Kcca),
            "rkcca-huber" => Ok(Method::RkccaHuber),
            "rkcca-hampel" => Ok(Method::RkccaHampel),
            _ => Err("expected one of lcca, kcca, rkcca-huber, rkcca-hampel".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Gaussian,
    Linear,
}

/// Kernel, regularization and robust-loss settings.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelArgs {
    /// Kernel family for kcca and rkcca methods [default: gaussian]
    #[arg(long, value_enum)]
    pub kernel: Option<KernelChoice>,
    /// Gaussian bandwidth; the median pairwise distance when absent
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Regularization parameter [default: 1e-5]
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Huber constant; the median first-pass residual when absent
    #[arg(long)]
    pub huber_c: Option<f64>,
    /// Hampel constants as `c1,c2,c3`; residual percentiles when absent
    #[arg(long)]
    pub hampel_c: Option<String>,
    /// KIRWLS iteration cap [default: 100]
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// KIRWLS relative weight-change tolerance [default: 1e-8]
    #[arg(long)]
    pub tol: Option<f64>,
}

impl ModelArgs {
    fn hampel_constants(&self) -> CliResult<Option<(f64, f64, f64)>> {
        let Some(s) = &self.hampel_c else { return Ok(None) };
        match parse_list::<f64>(s, "hampel-c")?.as_slice() {
            &[a, b, c] => Ok(Some((a, b, c))),
            _ => Err(invalid("hampel-c needs exactly three values")),
        }
    }
}

/// Seed, worker count and config file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunArgs {
    /// Master seed; falls back to RKCCA_SEED, then 1
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub workers: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(rename_all = "kebab-case")]
    struct Opts {
        alpha: Option<f64>,
        n_list: Option<String>,
    }

    #[test]
    fn flags_override_file() {
        let flags = Opts {
            alpha: Some(0.1),
            n_list: None,
        };
        let file = serde_json::json!({"alpha": 0.2, "n-list": "100,200"});
        let m = merge(&flags, Some(file)).unwrap();
        assert_eq!(m.alpha, Some(0.1));
        assert_eq!(m.n_list.as_deref(), Some("100,200"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file = serde_json::json!({"alpah": 0.2});
        assert!(merge(&Opts::default(), Some(file)).is_err());
    }

    #[test]
    fn lists_parse() {
        assert_eq!(parse_list::<usize>("100, 300,500", "n").unwrap(), vec![100, 300, 500]);
        assert!(parse_list::<usize>("", "n").is_err());
        assert!(parse_list::<Method>("kcca,foo", "m").is_err());
    }

    #[test]
    fn lcca_is_kcca_with_linear_kernel() {
        let lin = ModelArgs {
            kernel: Some(KernelChoice::Linear),
            ..Default::default()
        };
        assert_eq!(
            Method::Lcca.setup(&ModelArgs::default()).unwrap(),
            Method::Kcca.setup(&lin).unwrap()
        );
        let gauss = ModelArgs {
            kernel: Some(KernelChoice::Gaussian),
            ..Default::default()
        };
        assert!(Method::Lcca.setup(&gauss).is_err());
    }
}
