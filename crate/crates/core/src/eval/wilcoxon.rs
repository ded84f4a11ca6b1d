use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of non-zero pairs handled by exact enumeration.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Non-zero differences entering the test.
    pub n: usize,
    /// Sum of ranks of positive differences.
    pub statistic: f64,
    /// Null probability of exactly the observed statistic; 0 under the normal approximation.
    pub point_mass: f64,
    pub method: String,
}

/// One-sided signed-rank test of H1: median(a - b) > 0.
pub fn wilcoxon_one_sided(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        log::warn!("wilcoxon: all differences are zero; reporting p = 1");
        return Ok(WilcoxonResult {
            p_value: 1.0,
            n: 0,
            statistic: 0.0,
            point_mass: 1.0,
            method: "degenerate".into(),
        });
    }

    // Average ranks of |d|, kept doubled so they stay integral.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut doubled = vec![0u32; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // ranks i+1..=j+1 averaged, doubled: (i+1 + j+1)
        let r = (i + j + 2) as u32;
        for &o in &order[i..=j] {
            doubled[o] = r;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }
    let w2: u32 = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| doubled[i]).sum();
    let statistic = f64::from(w2) / 2.0;

    if n <= EXACT_MAX_N {
        let (p_value, point_mass) = wilcoxon_exact_upper_tail(&doubled, w2);
        return Ok(WilcoxonResult {
            p_value,
            n,
            statistic,
            point_mass,
            method: "exact".into(),
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let z = (statistic - mean - 0.5) / var.sqrt();
    let normal = Normal::standard();
    Ok(WilcoxonResult {
        p_value: normal.sf(z),
        n,
        statistic,
        point_mass: 0.0,
        method: "normal".into(),
    })
}

/// `(P(W >= w), P(W = w))` under the null, where `W` sums a random subset
/// of the doubled ranks, each included with probability 1/2.
pub fn wilcoxon_exact_upper_tail(doubled_ranks: &[u32], w_doubled: u32) -> (f64, f64) {
    let total: usize = doubled_ranks.iter().map(|&r| r as usize).sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(doubled_ranks.len() as i32);
    let w = w_doubled as usize;
    let tail: f64 = counts.iter().skip(w).sum();
    let mass = counts.get(w).copied().unwrap_or(0.0);
    (tail / all, mass / all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors_give_one() {
        let a = [0.1, 0.5, 0.9];
        let r = wilcoxon_one_sided(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.n, 0);
    }

    #[test]
    fn uniformly_greater_ten_pairs() {
        let a: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let b = vec![0.0; 10];
        let r = wilcoxon_one_sided(&a, &b).unwrap();
        assert!((r.p_value - 1.0 / 1024.0).abs() < 1e-15);
        assert_eq!(r.statistic, 55.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(wilcoxon_one_sided(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn tied_ranks_are_averaged() {
        // |d| = 1, 1, 2 -> ranks 1.5, 1.5, 3
        let r = wilcoxon_one_sided(&[1.0, -1.0, 2.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.statistic, 4.5);
        // subsets of {3,3,6} (doubled) with sum >= 9: {3,6},{3,6},{3,3,6}
        assert!((r.p_value - 3.0 / 8.0).abs() < 1e-15);
    }
}
