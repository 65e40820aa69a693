//! Summary statistics and the paired sign-flip permutation test.

use crate::rng::Rng;

/// Exact enumeration is used up to this many pairs; beyond it, random
/// sign flips.
pub const EXACT_PAIRS_LIMIT: usize = 16;
pub const MONTE_CARLO_FLIPS: usize = 20_000;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Two-sided paired permutation test on the differences `a_i - b_i`: the
/// fraction of sign assignments whose mean difference is at least as
/// extreme as the observed one. Identical inputs give 1.
pub fn sign_flip_p_value(a: &[f64], b: &[f64], rng: &mut Rng) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.is_empty() {
        return 1.0;
    }
    let observed = diffs.iter().sum::<f64>().abs();
    let tolerance = 1e-12 * (1.0 + observed);
    let extreme = |signs: &mut dyn FnMut(usize) -> bool| {
        let s: f64 = diffs.iter().enumerate().map(|(i, d)| if signs(i) { -d } else { *d }).sum();
        s.abs() >= observed - tolerance
    };
    if diffs.len() <= EXACT_PAIRS_LIMIT {
        let total = 1u64 << diffs.len();
        let hits = (0..total).filter(|&mask| extreme(&mut |i| mask >> i & 1 == 1)).count();
        hits as f64 / total as f64
    } else {
        let hits = (0..MONTE_CARLO_FLIPS).filter(|_| extreme(&mut |_| rng.next_f64() < 0.5)).count();
        (hits + 1) as f64 / (MONTE_CARLO_FLIPS + 1) as f64
    }
}
