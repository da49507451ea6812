//! Case-control co-association test for gene pairs (KCCU) and the pairwise
//! scan with Benjamini-Hochberg adjustment.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::influence::eif_fisher;
use crate::kcca::{fit_views, KccaConfig};
use crate::kernel::{KernelSpec, SampleMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Case,
    Control,
}

impl Status {
    pub fn flipped(self) -> Self {
        match self {
            Status::Case => Status::Control,
            Status::Control => Status::Case,
        }
    }
}

/// Default minimum number of subjects in each arm.
pub const MIN_PER_ARM: usize = 10;

/// Genotypes of cases and controls with the SNP-to-gene assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseControlDataset {
    subject_ids: Vec<String>,
    snp_ids: Vec<String>,
    genotypes: SampleMatrix,
    status: Vec<Status>,
    gene_ids: Vec<String>,
    gene_snps: Vec<Vec<usize>>,
}

impl CaseControlDataset {
    /// `snp_genes[j]` names the gene of genotype column `j`. Genes are
    /// ordered by first appearance; a gene without SNPs cannot occur.
    pub fn new(
        subject_ids: Vec<String>,
        snp_ids: Vec<String>,
        genotypes: SampleMatrix,
        status: Vec<Status>,
        snp_genes: Vec<String>,
        min_per_arm: usize,
    ) -> Result<Self> {
        let (n, d) = (genotypes.nrows(), genotypes.ncols());
        if subject_ids.len() != n || status.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} genotype rows, {} subject ids, {} status labels",
                subject_ids.len(),
                status.len()
            )));
        }
        if snp_ids.len() != d || snp_genes.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "{d} genotype columns, {} SNP ids, {} gene assignments",
                snp_ids.len(),
                snp_genes.len()
            )));
        }
        let cases = status.iter().filter(|&&s| s == Status::Case).count();
        let controls = n - cases;
        if cases < min_per_arm || controls < min_per_arm {
            return Err(Error::InvalidArgument(format!(
                "{cases} cases and {controls} controls; at least {min_per_arm} of each required"
            )));
        }
        let mut gene_ids: Vec<String> = Vec::new();
        let mut gene_snps: Vec<Vec<usize>> = Vec::new();
        for (j, g) in snp_genes.iter().enumerate() {
            match gene_ids.iter().position(|x| x == g) {
                Some(k) => gene_snps[k].push(j),
                None => {
                    gene_ids.push(g.clone());
                    gene_snps.push(vec![j]);
                }
            }
        }
        Ok(Self {
            subject_ids,
            snp_ids,
            genotypes,
            status,
            gene_ids,
            gene_snps,
        })
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn snp_ids(&self) -> &[String] {
        &self.snp_ids
    }

    pub fn genotypes(&self) -> &SampleMatrix {
        &self.genotypes
    }

    pub fn status(&self) -> &[Status] {
        &self.status
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn gene_snps(&self, gene: usize) -> &[usize] {
        &self.gene_snps[gene]
    }

    pub fn gene_index(&self, id: &str) -> Option<usize> {
        self.gene_ids.iter().position(|g| g == id)
    }

    /// Same subjects and genotypes with new labels.
    pub fn with_status(&self, status: Vec<Status>) -> Result<Self> {
        if status.len() != self.status.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} subjects",
                status.len(),
                self.status.len()
            )));
        }
        Ok(Self {
            status,
            ..self.clone()
        })
    }

    /// Genotypes of one gene within one arm, without columns that are
    /// constant in that arm. Returns the block and the number of dropped columns.
    fn gene_block(&self, gene: usize, arm: Status) -> Result<(SampleMatrix, usize)> {
        let rows: Vec<usize> = (0..self.status.len()).filter(|&i| self.status[i] == arm).collect();
        let snps = &self.gene_snps[gene];
        let kept: Vec<usize> = snps
            .iter()
            .copied()
            .filter(|&j| {
                let first = self.genotypes.get(rows[0], j);
                rows.iter().any(|&i| self.genotypes.get(i, j) != first)
            })
            .collect();
        if kept.is_empty() {
            return Err(Error::Degenerate(format!(
                "gene {} has no polymorphic SNPs among {}",
                self.gene_ids[gene],
                match arm {
                    Status::Case => "cases",
                    Status::Control => "controls",
                }
            )));
        }
        let block = self.genotypes.select_rows(&rows)?.select_cols(&kept)?;
        Ok((block, snps.len() - kept.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub gene1: String,
    pub gene2: String,
    pub r_case: f64,
    pub r_control: f64,
    pub z_case: f64,
    pub z_control: f64,
    pub var_case: f64,
    pub var_control: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub p_bh: f64,
    pub flags: Vec<String>,
}

/// `½ (ln(1+r) − ln(1−r))` for `0 ≤ r < 1`.
pub fn fisher_z(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!(
            "Fisher transform needs 0 <= r < 1, got {r}"
        )));
    }
    Ok(0.5 * (r.ln_1p() - (-r).ln_1p()))
}

/// Two-sided standard-normal tail probability of `t`, kept strictly positive.
pub fn two_sided_p(t: f64) -> f64 {
    libm::erfc(t.abs() / std::f64::consts::SQRT_2).clamp(f64::MIN_POSITIVE, 1.0)
}

/// `T = (z_case − z_control) / √(var_case + var_control)` and its two-sided p-value.
pub fn kccu_statistic(
    z_case: f64,
    z_control: f64,
    var_case: f64,
    var_control: f64,
) -> Result<(f64, f64)> {
    if !(var_case > 0.0 && var_control > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variances must be positive, got {var_case} and {var_control}"
        )));
    }
    let t = (z_case - z_control) / (var_case + var_control).sqrt();
    Ok((t, two_sided_p(t)))
}

struct ArmFit {
    r: f64,
    z: f64,
    var: f64,
    floored: bool,
    dropped: usize,
}

fn fit_arm(
    data: &CaseControlDataset,
    g1: usize,
    g2: usize,
    arm: Status,
    kernel: &KernelSpec,
    cfg: &KccaConfig,
) -> Result<ArmFit> {
    let (x, dx) = data.gene_block(g1, arm)?;
    let (y, dy) = data.gene_block(g2, arm)?;
    let model = fit_views(&x, kernel, &y, kernel, cfg)?;
    let rec = eif_fisher(&model);
    Ok(ArmFit {
        r: model.rho[0],
        z: fisher_z(model.rho[0])?,
        var: rec.var_z,
        floored: rec.floored,
        dropped: dx + dy,
    })
}

/// KCCU test of genes `g1` and `g2` (indices into `data.gene_ids()`): one
/// kernel CCA per arm, Fisher's z of each first canonical correlation, and
/// influence-based variances. `p_bh` is left equal to `p_value`.
pub fn gene_pair_test(
    data: &CaseControlDataset,
    g1: usize,
    g2: usize,
    kernel: &KernelSpec,
    cfg: &KccaConfig,
) -> Result<TestResult> {
    let genes = data.gene_ids.len();
    if g1 >= genes || g2 >= genes {
        return Err(Error::InvalidArgument(format!(
            "gene index out of range for {genes} genes"
        )));
    }
    let case = fit_arm(data, g1, g2, Status::Case, kernel, cfg)?;
    let control = fit_arm(data, g1, g2, Status::Control, kernel, cfg)?;
    let mut flags = Vec::new();
    if case.floored {
        flags.push("var_floor_case".to_string());
    }
    if control.floored {
        flags.push("var_floor_control".to_string());
    }
    if case.dropped + control.dropped > 0 {
        flags.push(format!("dropped_snps={}", case.dropped + control.dropped));
    }
    let (t_stat, p_value) = if case.floored && control.floored {
        (0.0, 1.0)
    } else {
        kccu_statistic(case.z, control.z, case.var, control.var)?
    };
    Ok(TestResult {
        gene1: data.gene_ids[g1].clone(),
        gene2: data.gene_ids[g2].clone(),
        r_case: case.r,
        r_control: control.r,
        z_case: case.z,
        z_control: control.z,
        var_case: case.var,
        var_control: control.var,
        t_stat,
        p_value,
        p_bh: p_value,
        flags,
    })
}

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
pub fn bh_adjust(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = p.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::InvalidArgument(format!("p-value {bad} outside (0, 1]")));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        running = running.min(p[i] * m as f64 / (rank + 1) as f64);
        out[i] = running;
    }
    Ok(out)
}

/// All unordered gene pairs `(g1, g2)` with `g1 < g2`, in scan order.
pub fn gene_pairs(data: &CaseControlDataset) -> Vec<(usize, usize)> {
    let g = data.gene_ids.len();
    (0..g).flat_map(|a| ((a + 1)..g).map(move |b| (a, b))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPair {
    pub gene1: String,
    pub gene2: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    pub alpha: f64,
    pub pairs_scheduled: usize,
    pub pairs_tested: usize,
    pub pairs_skipped: usize,
    pub significant_raw: usize,
    pub significant_bh: usize,
    /// Distinct genes that appear in at least one significant pair.
    pub isolated_genes_raw: Vec<String>,
    pub isolated_genes_bh: Vec<String>,
    pub skipped: Vec<SkippedPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOutput {
    pub results: Vec<TestResult>,
    pub summary: ScanSummary,
}

/// Merges per-pair outcomes (in any order) into scan order, fills `p_bh`,
/// and summarizes at level `alpha`.
pub fn finish_scan(
    data: &CaseControlDataset,
    mut outcomes: Vec<((usize, usize), Result<TestResult>)>,
    alpha: f64,
) -> Result<ScanOutput> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {alpha}")));
    }
    outcomes.sort_by_key(|(pair, _)| *pair);
    let scheduled = outcomes.len();
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for ((a, b), outcome) in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => skipped.push(SkippedPair {
                gene1: data.gene_ids[a].clone(),
                gene2: data.gene_ids[b].clone(),
                reason: e.to_string(),
            }),
        }
    }
    let raw: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    for (r, q) in results.iter_mut().zip(bh_adjust(&raw)?) {
        r.p_bh = q;
    }
    let isolated = |sig: &dyn Fn(&TestResult) -> bool| -> (usize, Vec<String>) {
        let hits: Vec<&TestResult> = results.iter().filter(|r| sig(r)).collect();
        let genes: BTreeSet<String> = hits
            .iter()
            .flat_map(|r| [r.gene1.clone(), r.gene2.clone()])
            .collect();
        (hits.len(), genes.into_iter().collect())
    };
    let (significant_raw, isolated_genes_raw) = isolated(&|r| r.p_value < alpha);
    let (significant_bh, isolated_genes_bh) = isolated(&|r| r.p_bh < alpha);
    let summary = ScanSummary {
        alpha,
        pairs_scheduled: scheduled,
        pairs_tested: results.len(),
        pairs_skipped: skipped.len(),
        significant_raw,
        significant_bh,
        isolated_genes_raw,
        isolated_genes_bh,
        skipped,
    };
    Ok(ScanOutput { results, summary })
}

/// Tests every gene pair sequentially. Pairs that cannot be tested are
/// reported in the summary rather than aborting the scan.
pub fn pairwise_scan(
    data: &CaseControlDataset,
    kernel: &KernelSpec,
    cfg: &KccaConfig,
    alpha: f64,
) -> Result<ScanOutput> {
    if data.gene_ids.len() < 2 {
        return Err(Error::InvalidArgument("a scan needs at least two genes".into()));
    }
    let outcomes = gene_pairs(data)
        .into_iter()
        .map(|(a, b)| ((a, b), gene_pair_test(data, a, b, kernel, cfg)))
        .collect();
    finish_scan(data, outcomes, alpha)
}

/// Overlap of the isolated-gene sets of several scans.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub methods: Vec<String>,
    pub sizes: Vec<usize>,
    /// `(i, j, |S_i ∩ S_j|)` for every pair of methods.
    pub pairwise: Vec<(usize, usize, usize)>,
    /// Genes present in every set.
    pub common: Vec<String>,
}

pub fn overlap_report(sets: &[(String, Vec<String>)]) -> OverlapReport {
    let as_sets: Vec<BTreeSet<&String>> = sets.iter().map(|(_, s)| s.iter().collect()).collect();
    let mut pairwise = Vec::new();
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            pairwise.push((i, j, as_sets[i].intersection(&as_sets[j]).count()));
        }
    }
    let common = match as_sets.split_first() {
        Some((first, rest)) => first
            .iter()
            .filter(|g| rest.iter().all(|s| s.contains(*g)))
            .map(|g| (*g).clone())
            .collect(),
        None => Vec::new(),
    };
    OverlapReport {
        methods: sets.iter().map(|(m, _)| m.clone()).collect(),
        sizes: as_sets.iter().map(|s| s.len()).collect(),
        pairwise,
        common,
    }
}

impl OverlapReport {
    /// Plain-text rendering, one line per count.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, s) in self.methods.iter().zip(&self.sizes) {
            out.push_str(&format!("{m}\t{s}\n"));
        }
        for (i, j, c) in &self.pairwise {
            out.push_str(&format!("{} & {}\t{c}\n", self.methods[*i], self.methods[*j]));
        }
        out.push_str(&format!("all\t{}\t{}\n", self.common.len(), self.common.join(",")));
        out
    }
}
