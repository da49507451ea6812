mod common;

use proptest::prelude::*;
use rand::Rng;
use rkcca_core::assoc::{finish_scan, gene_pairs, MIN_PER_ARM};
use rkcca_core::synth::plant_case_control;
use rkcca_core::{
    bh_adjust, gene_pair_test, pairwise_scan, CaseControlDataset, Design, KccaConfig, KernelSpec,
    SampleMatrix, Status, SynthSpec, Variant,
};

/// Step-up adjustment written out from its definition: for each value, the
/// smallest `p_(k) m / k` over order statistics at or above it, capped at 1.
fn brute_force_bh(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    p.iter()
        .map(|&pi| {
            let mut best = 1.0f64;
            for (k, &s) in sorted.iter().enumerate() {
                if s >= pi {
                    best = best.min(s * m as f64 / (k + 1) as f64);
                }
            }
            best
        })
        .collect()
}

#[test]
fn bh_matches_brute_force_on_random_vectors() {
    let mut r = common::rng(1);
    for _ in 0..100 {
        let m = r.random_range(1..60);
        let p: Vec<f64> = (0..m).map(|_| r.random_range(1e-6..=1.0)).collect();
        assert_eq!(bh_adjust(&p).unwrap(), brute_force_bh(&p));
    }
}

proptest! {
    #[test]
    fn bh_properties(p in prop::collection::vec(prop_oneof![Just(0.05), 1e-9f64..=1.0], 1..40)) {
        let q = bh_adjust(&p).unwrap();
        prop_assert_eq!(&q, &brute_force_bh(&p));
        for i in 0..p.len() {
            // p * m / m may round one ulp low on ties
            prop_assert!(q[i] >= p[i] * (1.0 - 2.0 * f64::EPSILON) && q[i] <= 1.0);
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(q[i] <= q[j]);
                }
            }
        }
    }
}

fn planted(seed: u64, n: usize) -> CaseControlDataset {
    plant_case_control(&SynthSpec::new(Design::Sms, 10, Variant::Id, seed), n, n).unwrap()
}

#[test]
fn swapping_labels_negates_statistic() {
    let ds = planted(2, 60);
    let k = KernelSpec::gaussian_median();
    let cfg = KccaConfig::default();
    let a = gene_pair_test(&ds, 0, 1, &k, &cfg).unwrap();
    let flipped = ds
        .with_status(ds.status().iter().map(|s| s.flipped()).collect())
        .unwrap();
    let b = gene_pair_test(&flipped, 0, 1, &k, &cfg).unwrap();
    assert_eq!(a.t_stat, -b.t_stat);
    assert_eq!(a.p_value, b.p_value);
}

#[test]
fn gene_order_does_not_matter() {
    let ds = planted(3, 60);
    let k = KernelSpec::gaussian_median();
    let cfg = KccaConfig::default();
    let a = gene_pair_test(&ds, 0, 1, &k, &cfg).unwrap();
    let b = gene_pair_test(&ds, 1, 0, &k, &cfg).unwrap();
    assert!((a.t_stat - b.t_stat).abs() < 1e-10);
}

#[test]
fn identical_arms_give_zero_statistic() {
    let base = planted(4, 30);
    let cases: Vec<usize> = (0..30).collect();
    let g = base.genotypes().select_rows(&cases).unwrap();
    let n = 60;
    let d = g.ncols();
    let geno = SampleMatrix::from_fn(n, d, |i, j| g.get(i % 30, j)).unwrap();
    let status = (0..n)
        .map(|i| if i < 30 { Status::Case } else { Status::Control })
        .collect();
    let genes = (0..d).map(|j| base.gene_ids()[j / 25].clone()).collect();
    let ds = CaseControlDataset::new(
        (0..n).map(|i| format!("s{i}")).collect(),
        base.snp_ids().to_vec(),
        geno,
        status,
        genes,
        MIN_PER_ARM,
    )
    .unwrap();
    let t = gene_pair_test(&ds, 0, 1, &KernelSpec::gaussian_median(), &KccaConfig::default()).unwrap();
    assert_eq!(t.t_stat, 0.0);
    assert_eq!(t.p_value, 1.0);
}

#[test]
fn stored_fields_reproduce_statistic() {
    let ds = planted(5, 50);
    let r = gene_pair_test(&ds, 0, 1, &KernelSpec::Linear, &KccaConfig::default()).unwrap();
    let t = (r.z_case - r.z_control) / (r.var_case + r.var_control).sqrt();
    assert!((r.t_stat - t).abs() < 1e-12);
    assert!(r.r_case < 1.0 && r.r_control < 1.0);
    assert!(r.p_value > 0.0 && r.p_value <= 1.0);
}

#[test]
fn two_gene_scan_has_one_result() {
    let ds = planted(6, 40);
    let out = pairwise_scan(&ds, &KernelSpec::gaussian_median(), &KccaConfig::default(), 0.05).unwrap();
    assert_eq!(out.results.len(), 1);
    assert_eq!(out.summary.pairs_scheduled, 1);
    assert_eq!(out.results[0].p_bh, out.results[0].p_value);
}

fn many_gene_dataset(genes: usize, snps_per_gene: usize, n: usize, seed: u64) -> CaseControlDataset {
    let mut r = common::rng(seed);
    let d = genes * snps_per_gene;
    let geno = SampleMatrix::from_fn(n, d, |_, _| r.random_range(0..3) as f64).unwrap();
    CaseControlDataset::new(
        (0..n).map(|i| format!("s{i}")).collect(),
        (0..d).map(|j| format!("snp{j}")).collect(),
        geno,
        (0..n)
            .map(|i| if i % 2 == 0 { Status::Case } else { Status::Control })
            .collect(),
        (0..d).map(|j| format!("gene{}", j / snps_per_gene)).collect(),
        MIN_PER_ARM,
    )
    .unwrap()
}

#[test]
fn seventy_four_genes_schedule_every_pair() {
    let ds = many_gene_dataset(74, 1, 20, 7);
    assert_eq!(gene_pairs(&ds).len(), 2701);
}

#[test]
fn untestable_pairs_are_skipped() {
    let mut ds = many_gene_dataset(3, 2, 40, 8);
    // make gene2 monomorphic among cases
    let n = ds.genotypes().nrows();
    let d = ds.genotypes().ncols();
    let status = ds.status().to_vec();
    let g = SampleMatrix::from_fn(n, d, |i, j| {
        if j >= 4 && status[i] == Status::Case {
            1.0
        } else {
            ds.genotypes().get(i, j)
        }
    })
    .unwrap();
    ds = CaseControlDataset::new(
        ds.subject_ids().to_vec(),
        ds.snp_ids().to_vec(),
        g,
        status,
        (0..d).map(|j| format!("gene{}", j / 2)).collect(),
        MIN_PER_ARM,
    )
    .unwrap();
    let out = pairwise_scan(&ds, &KernelSpec::Linear, &KccaConfig::default(), 0.05).unwrap();
    assert_eq!(out.summary.pairs_scheduled, 3);
    assert_eq!(out.summary.pairs_skipped, 2);
    assert_eq!(out.results.len(), 1);
    assert!(out.summary.skipped.iter().all(|s| s.reason.contains("gene2")));
}

#[test]
fn merge_order_is_independent_of_completion_order() {
    let ds = many_gene_dataset(4, 2, 40, 9);
    let k = KernelSpec::Linear;
    let cfg = KccaConfig::default();
    let outcomes = |rev: bool| {
        let mut pairs = gene_pairs(&ds);
        if rev {
            pairs.reverse();
        }
        pairs
            .into_iter()
            .map(|(a, b)| ((a, b), gene_pair_test(&ds, a, b, &k, &cfg)))
            .collect()
    };
    let a = finish_scan(&ds, outcomes(false), 0.05).unwrap();
    let b = finish_scan(&ds, outcomes(true), 0.05).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dataset_validation() {
    let g = SampleMatrix::from_fn(12, 2, |i, j| ((i + j) % 3) as f64).unwrap();
    let ids = |n: usize, p: &str| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let status: Vec<Status> = (0..12)
        .map(|i| if i < 6 { Status::Case } else { Status::Control })
        .collect();
    // arms below the floor
    assert!(CaseControlDataset::new(ids(12, "s"), ids(2, "snp"), g.clone(), status.clone(), ids(2, "g"), 10).is_err());
    // label count mismatch
    assert!(CaseControlDataset::new(ids(12, "s"), ids(2, "snp"), g.clone(), status[..11].to_vec(), ids(2, "g"), 5).is_err());
    let ok = CaseControlDataset::new(ids(12, "s"), ids(2, "snp"), g, status, vec!["a".into(), "a".into()], 5).unwrap();
    assert_eq!(ok.gene_ids().len(), 1);
}
