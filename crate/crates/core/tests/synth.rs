use rkcca_core::synth::{default_mgs_covariance, gen_mgs, gen_sms, generate_design, plant_case_control};
use rkcca_core::{Design, SynthSpec, Variant};

#[test]
fn mgs_covariance_matches_target() {
    let d = gen_mgs(&SynthSpec::new(Design::Mgs, 5000, Variant::Id, 1)).unwrap();
    let sigma = default_mgs_covariance();
    let n = 5000.0;
    let means: Vec<f64> = (0..6).map(|j| d.x.column(j).iter().sum::<f64>() / n).collect();
    for a in 0..6 {
        for b in 0..6 {
            let cov = (0..5000)
                .map(|i| (d.x.get(i, a) - means[a]) * (d.x.get(i, b) - means[b]))
                .sum::<f64>()
                / (n - 1.0);
            assert!((cov - sigma[a][b]).abs() < 0.05, "({a},{b}) {cov} vs {}", sigma[a][b]);
        }
    }
    assert!(d.y.as_slice().iter().all(|v| v.is_finite()));
}

#[test]
fn mgs_contaminated_rows_are_shifted() {
    let spec = SynthSpec::new(Design::Mgs, 400, Variant::Cd, 2);
    let d = gen_mgs(&spec).unwrap();
    assert_eq!(d.contaminated.len(), 20);
    let mean = |rows: &mut dyn Iterator<Item = usize>| {
        let v: Vec<f64> = rows.map(|i| d.x.get(i, 0)).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let bad = mean(&mut d.contaminated.iter().copied());
    let good = mean(&mut (0..400).filter(|i| !d.contaminated.contains(i)));
    assert!(bad - good > 0.5);
}

#[test]
fn custom_mgs_covariance_is_used() {
    let identity: Vec<Vec<f64>> = (0..12)
        .map(|i| (0..12).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let spec = SynthSpec {
        mgs_covariance: Some(identity),
        ..SynthSpec::new(Design::Mgs, 3000, Variant::Id, 3)
    };
    let d = gen_mgs(&spec).unwrap();
    let (a, b) = (d.x.column(0), d.x.column(1));
    let c: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / 3000.0;
    assert!(c.abs() < 0.06);
    let bad = SynthSpec {
        mgs_covariance: Some(vec![vec![0.0; 12]; 12]),
        ..SynthSpec::new(Design::Mgs, 30, Variant::Id, 3)
    };
    assert!(gen_mgs(&bad).is_err());
}

#[test]
fn contamination_count_rounds_up() {
    for (n, expected) in [(10, 1), (100, 5), (101, 6), (500, 25)] {
        let spec = SynthSpec::new(Design::Scs, n, Variant::Cd, 4);
        assert_eq!(generate_design(&spec).unwrap().contaminated.len(), expected);
    }
}

#[test]
fn sms_contaminated_rows_are_noisier() {
    let d = gen_sms(&SynthSpec::new(Design::Sms, 200, Variant::Cd, 5)).unwrap();
    let row_sd = |i: usize| {
        let r = d.y.row(i);
        (r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64).sqrt()
    };
    for &i in &d.contaminated {
        assert!(row_sd(i) > 10.0);
    }
    assert!(row_sd((0..200).find(|i| !d.contaminated.contains(i)).unwrap()) < 2.0);
}

#[test]
fn planted_dataset_is_reproducible() {
    let spec = SynthSpec::new(Design::Sms, 10, Variant::Id, 6);
    let a = plant_case_control(&spec, 40, 30).unwrap();
    let b = plant_case_control(&spec, 40, 30).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.gene_snps(0).len(), 25);
    assert_eq!(a.gene_snps(1).len(), 25);
    assert!(plant_case_control(&SynthSpec::new(Design::Scs, 10, Variant::Id, 6), 40, 30).is_err());
}
