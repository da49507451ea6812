//! Loading a case-control dataset from genotype, phenotype and gene-map
//! TSVs.
//!
//! * genotypes: `subject_id` then one column per SNP, values 0, 1 or 2
//! * phenotypes: `subject_id`, `status` with 1 for cases and 0 for controls
//! * gene map: `snp_id`, `gene_id`
//!
//! Every genotyped SNP must be mapped; extra gene-map entries are ignored.

use std::collections::HashMap;
use std::path::Path;

use rkcca_core::assoc::MIN_PER_ARM;
use rkcca_core::{CaseControlDataset, SampleMatrix, Status};

use crate::error::{invalid, rejected, CliResult};
use crate::tsv::Table;

pub fn load_dataset(genotypes: &Path, phenotypes: &Path, gene_map: &Path) -> CliResult<CaseControlDataset> {
    from_tables(
        &Table::read(genotypes)?,
        &Table::read(phenotypes)?,
        &Table::read(gene_map)?,
    )
}

/// Comma-joined ids, cut off after the first ten.
fn preview(ids: &[&str]) -> String {
    const SHOWN: usize = 10;
    if ids.len() <= SHOWN {
        ids.join(", ")
    } else {
        format!("{}, ... ({} more)", ids[..SHOWN].join(", "), ids.len() - SHOWN)
    }
}

fn expect_header(t: &Table, cols: &[&str]) -> CliResult<()> {
    if t.header.len() != cols.len() || t.header.iter().zip(cols).any(|(a, b)| a != b) {
        return Err(invalid(format!(
            "{}: header must be `{}`",
            t.name,
            cols.join("\t")
        )));
    }
    Ok(())
}

pub fn from_tables(geno: &Table, pheno: &Table, map: &Table) -> CliResult<CaseControlDataset> {
    if geno.header.first().map(String::as_str) != Some("subject_id") || geno.header.len() < 2 {
        return Err(invalid(format!(
            "{}: header must be `subject_id` followed by SNP ids",
            geno.name
        )));
    }
    expect_header(pheno, &["subject_id", "status"])?;
    expect_header(map, &["snp_id", "gene_id"])?;
    let snps: Vec<String> = geno.header[1..].to_vec();
    let mut seen = HashMap::new();
    for s in &snps {
        if seen.insert(s.as_str(), ()).is_some() {
            return Err(invalid(format!("{}: duplicate SNP id `{s}`", geno.name)));
        }
    }

    let mut gene_of: HashMap<&str, &str> = HashMap::new();
    for r in &map.rows {
        let (snp, gene) = (r.fields[0].as_str(), r.fields[1].as_str());
        if snp.is_empty() || gene.is_empty() {
            return Err(map.error(r.line, "empty SNP or gene id"));
        }
        if let Some(prev) = gene_of.insert(snp, gene) {
            if prev != gene {
                return Err(map.error(r.line, format!("SNP `{snp}` mapped to both `{prev}` and `{gene}`")));
            }
        }
    }
    let unmapped: Vec<&str> = snps
        .iter()
        .map(String::as_str)
        .filter(|s| !gene_of.contains_key(s))
        .collect();
    if !unmapped.is_empty() {
        return Err(invalid(format!(
            "{} SNP(s) missing from {}: {}",
            unmapped.len(),
            map.name,
            preview(&unmapped)
        )));
    }
    let snp_genes: Vec<String> = snps.iter().map(|s| gene_of[s.as_str()].to_string()).collect();

    let d = snps.len();
    let mut subjects = Vec::with_capacity(geno.rows.len());
    let mut values = Vec::with_capacity(geno.rows.len() * d);
    let mut row_of: HashMap<&str, usize> = HashMap::new();
    for r in &geno.rows {
        let id = r.fields[0].as_str();
        if id.is_empty() {
            return Err(geno.error(r.line, "empty subject id"));
        }
        if row_of.insert(id, subjects.len()).is_some() {
            return Err(geno.error(r.line, format!("duplicate subject `{id}`")));
        }
        subjects.push(id.to_string());
        for (j, v) in r.fields[1..].iter().enumerate() {
            let g = match v.as_str() {
                "0" => 0.0,
                "1" => 1.0,
                "2" => 2.0,
                _ => {
                    return Err(geno.error(
                        r.line,
                        format!("SNP `{}`: genotype `{v}` is not 0, 1 or 2", snps[j]),
                    ))
                }
            };
            values.push(g);
        }
    }

    let mut status: Vec<Option<Status>> = vec![None; subjects.len()];
    for r in &pheno.rows {
        let id = r.fields[0].as_str();
        let s = match r.fields[1].as_str() {
            "1" => Status::Case,
            "0" => Status::Control,
            other => return Err(pheno.error(r.line, format!("status `{other}` is not 0 or 1"))),
        };
        let Some(&i) = row_of.get(id) else {
            return Err(pheno.error(r.line, format!("subject `{id}` has no genotypes")));
        };
        if status[i].replace(s).is_some() {
            return Err(pheno.error(r.line, format!("duplicate subject `{id}`")));
        }
    }
    let missing: Vec<&str> = subjects
        .iter()
        .zip(&status)
        .filter(|(_, s)| s.is_none())
        .map(|(id, _)| id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(invalid(format!(
            "{} genotyped subject(s) missing from {}: {}",
            missing.len(),
            pheno.name,
            preview(&missing)
        )));
    }

    let n = subjects.len();
    let genotypes = SampleMatrix::new(n, d, values).map_err(rejected(&geno.name))?;
    CaseControlDataset::new(
        subjects,
        snps,
        genotypes,
        status.into_iter().map(|s| s.expect("checked above")).collect(),
        snp_genes,
        MIN_PER_ARM,
    )
    .map_err(rejected("dataset"))
}
