//! Contingency tables, χ² independence tests and guess-rate estimates.

use std::collections::BTreeMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson χ² test of independence on a table of counts. Empty rows and
/// columns are dropped; a table with a single remaining row or column
/// carries no evidence and gets `p = 1`.
pub fn chi_square_independence(table: &[Vec<u64>]) -> ChiSquare {
    let cols = table.first().map(|r| r.len()).unwrap_or(0);
    let col_sums: Vec<u64> = (0..cols).map(|c| table.iter().map(|r| r[c]).sum()).collect();
    let keep_cols: Vec<usize> = (0..cols).filter(|&c| col_sums[c] > 0).collect();
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    if rows.len() < 2 || keep_cols.len() < 2 {
        return ChiSquare {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
        };
    }
    let total: f64 = rows.iter().flat_map(|r| r.iter()).sum::<u64>() as f64;
    let mut stat = 0.0;
    for r in &rows {
        let row_sum: f64 = r.iter().sum::<u64>() as f64;
        for &c in &keep_cols {
            let expected = row_sum * col_sums[c] as f64 / total;
            let d = r[c] as f64 - expected;
            stat += d * d / expected;
        }
    }
    let df = (rows.len() - 1) * (keep_cols.len() - 1);
    let p_value = ChiSquared::new(df as f64).map(|d| d.sf(stat)).unwrap_or(1.0);
    ChiSquare {
        statistic: stat,
        df,
        p_value,
    }
}

/// Builds a (feature value × group) count table from paired samples.
pub fn contingency<F: Ord + Clone, G: Ord + Clone>(samples: &[(F, G)]) -> Vec<Vec<u64>> {
    let mut rows: BTreeMap<F, BTreeMap<G, u64>> = BTreeMap::new();
    let groups: std::collections::BTreeSet<G> = samples.iter().map(|(_, g)| g.clone()).collect();
    for (f, g) in samples {
        *rows.entry(f.clone()).or_default().entry(g.clone()).or_default() += 1;
    }
    rows.values()
        .map(|counts| groups.iter().map(|g| counts.get(g).copied().unwrap_or(0)).collect())
        .collect()
}

/// Best-guess rate of a classifier fitted on the first half of `samples`
/// (majority label per observed feature vector) and scored on the second
/// half. Unseen feature vectors fall back to the overall majority label.
pub fn split_half_guess_rate<F: Hash + Eq + Clone + Ord, G: Ord + Clone>(samples: &[(F, G)]) -> (f64, usize) {
    let half = samples.len() / 2;
    let (train, test) = samples.split_at(half);
    let mut by_feature: BTreeMap<F, BTreeMap<G, u64>> = BTreeMap::new();
    let mut overall: BTreeMap<G, u64> = BTreeMap::new();
    for (f, g) in train {
        *by_feature.entry(f.clone()).or_default().entry(g.clone()).or_default() += 1;
        *overall.entry(g.clone()).or_default() += 1;
    }
    let majority = |m: &BTreeMap<G, u64>| m.iter().max_by_key(|(_, c)| **c).map(|(g, _)| g.clone());
    let fallback = majority(&overall);
    let correct = test
        .iter()
        .filter(|(f, g)| {
            let guess = by_feature.get(f).and_then(majority).or_else(|| fallback.clone());
            guess.as_ref() == Some(g)
        })
        .count();
    (correct as f64 / test.len().max(1) as f64, test.len())
}

/// Binomial standard error of a rate `p` estimated from `n` samples.
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n.max(1) as f64).sqrt()
}

/// Mean and standard error of the mean.
pub fn mean_and_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: χ² = N (Σ O²/(R C) − 1), and for even df the
    /// survival function is e^{−x/2} Σ_{k<df/2} (x/2)^k / k!.
    fn oracle(table: &[Vec<u64>]) -> (f64, f64) {
        let n: f64 = table.iter().flatten().sum::<u64>() as f64;
        let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
        let cols: Vec<f64> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64)
            .collect();
        let mut acc = 0.0;
        for (i, r) in table.iter().enumerate() {
            for (j, &o) in r.iter().enumerate() {
                acc += (o as f64).powi(2) / (rows[i] * cols[j]);
            }
        }
        let stat = n * (acc - 1.0);
        let df = (table.len() - 1) * (table[0].len() - 1);
        assert_eq!(df % 2, 0);
        let half = stat / 2.0;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 0..df / 2 {
            if k > 0 {
                term *= half / k as f64;
            }
            sum += term;
        }
        (stat, (-half).exp() * sum)
    }

    #[test]
    fn chi_square_matches_brute_force_oracle() {
        let table = vec![vec![12, 30, 9, 22], vec![18, 25, 14, 20], vec![7, 33, 11, 29]];
        let got = chi_square_independence(&table);
        let (stat, p) = oracle(&table);
        assert_eq!(got.df, 6);
        assert!((got.statistic - stat).abs() < 1e-9, "{} vs {stat}", got.statistic);
        assert!((got.p_value - p).abs() < 1e-9, "{} vs {p}", got.p_value);
    }

    #[test]
    fn degenerate_tables_have_no_evidence() {
        assert_eq!(chi_square_independence(&[vec![5, 7]]).p_value, 1.0);
        assert_eq!(chi_square_independence(&[vec![5, 0], vec![3, 0]]).p_value, 1.0);
    }

    #[test]
    fn dependent_tables_are_flagged() {
        let t = chi_square_independence(&[vec![100, 0], vec![0, 100]]);
        assert!(t.p_value < 1e-10);
    }

    #[test]
    fn contingency_counts() {
        let samples = vec![(0, 'a'), (0, 'b'), (1, 'a'), (0, 'a')];
        assert_eq!(contingency(&samples), vec![vec![2, 1], vec![1, 0]]);
    }

    #[test]
    fn guess_rate_of_a_perfect_feature_is_one() {
        let samples: Vec<(u8, u8)> = (0..200).map(|i| ((i % 3) as u8, (i % 3) as u8)).collect();
        assert_eq!(split_half_guess_rate(&samples).0, 1.0);
    }
}
