//! Small numeric helpers shared across modules.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with `n - 1` in the denominator. Zero when fewer than two values.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    // shifted by the first value so that equal inputs give exactly zero
    let k = x[0];
    let n = x.len() as f64;
    let (s, s2) = x
        .iter()
        .fold((0.0, 0.0), |(s, s2), v| (s + (v - k), s2 + (v - k) * (v - k)));
    ((s2 - s * s / n) / (n - 1.0)).max(0.0)
}

/// Sample standard deviation (`n - 1` denominator).
pub fn sample_sd(x: &[f64]) -> f64 {
    sample_variance(x).sqrt()
}

/// Percentile with linear interpolation between order statistics (`q` in [0, 100]).
pub fn percentile(x: &[f64], q: f64) -> f64 {
    assert!(!x.is_empty(), "percentile of an empty slice");
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = (q / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] + (v[hi] - v[lo]) * frac
}

/// Median; the mean of the two central values for an even count.
pub fn median(x: &mut [f64]) -> f64 {
    assert!(!x.is_empty(), "median of an empty slice");
    let n = x.len();
    let (_, &mut upper, _) = x.select_nth_unstable_by(n / 2, |a, b| a.total_cmp(b));
    if n % 2 == 1 {
        upper
    } else {
        let lower = x[..n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median of a multiset given as `(value, multiplicity)` pairs.
pub fn median_with_counts(items: &mut [(f64, u64)]) -> f64 {
    let total: u64 = items.iter().map(|&(_, c)| c).sum();
    assert!(total > 0, "median of an empty multiset");
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let at_rank = |rank: u64| -> f64 {
        let mut seen = 0u64;
        for &(v, c) in items.iter() {
            seen += c;
            if seen > rank {
                return v;
            }
        }
        items[items.len() - 1].0
    };
    if total % 2 == 1 {
        at_rank(total / 2)
    } else {
        0.5 * (at_rank(total / 2 - 1) + at_rank(total / 2))
    }
}

/// Derives an independent 64-bit seed for stream `index` of a master seed
/// (SplitMix64 finalizer over the combined words).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
