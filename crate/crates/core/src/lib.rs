//! Robust kernel canonical correlation analysis and an influence-function
//! based test for gene-gene co-association between cases and controls.

pub mod assoc;
pub mod error;
pub mod influence;
pub mod kcca;
pub mod kernel;
pub mod robust;
pub mod synth;
pub mod util;

pub use assoc::{
    bh_adjust, fisher_z, gene_pair_test, kccu_statistic, pairwise_scan, CaseControlDataset,
    ScanOutput, ScanSummary, Status, TestResult,
};
pub use error::{Error, Result};
pub use influence::{
    bootstrap_var_z, eif_fisher, eif_rho, index_plot_data, sensitivity, EifRecord,
    SensitivityPair,
};
pub use kcca::{first_kcc, fit, fit_views, KccaConfig, KccaModel, WeightsMode};
pub use kernel::{
    center_test, center_uniform, center_weighted, cross_gram, gram, median_bandwidth, Centering,
    CenteringWeights, GramMatrix, KernelSpec, ResolvedKernel, SampleMatrix,
};
pub use robust::{
    robust_cco_weights, robust_mean_weights, KirwlsConfig, LossConfig, LossSpec, RobustWeights,
};
pub use synth::{
    gen_mgs, gen_scs, gen_sms, generate_design, plant_case_control, Design, SynthData, SynthSpec,
    Variant,
};
