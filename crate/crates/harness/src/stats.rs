//! Two-sample comparisons: Mann-Whitney U (normal approximation with tie
//! correction) as the primary test, Welch's t alongside.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("need at least 2 samples per group, got {0} and {1}")]
    InsufficientSamples(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// U of the first sample.
    pub u_statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    /// mean(a) - mean(b)
    pub mean_diff: f64,
    pub welch_t: f64,
    pub welch_df: f64,
    pub welch_p: f64,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub fn sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// Midranks of the pooled sample (1-based) and the tie term sum(t^3 - t).
fn pooled_ranks(a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<(f64, usize)> = a.iter().chain(b).copied().zip(0..).collect();
    idx.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks = vec![0.0; idx.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && idx[j + 1].0 == idx[i].0 {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for e in &idx[i..=j] {
            ranks[e.1] = r;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

pub fn compare(a: &[f64], b: &[f64]) -> Result<Comparison, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::InsufficientSamples(a.len(), b.len()));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (ranks, ties) = pooled_ranks(a, b);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let std_normal = Normal::standard();
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = (u - n1 * n2 / 2.0).abs() / var.sqrt();
        (2.0 * std_normal.sf(z)).min(1.0)
    };

    let (va, vb) = (sd(a).powi(2) / n1, sd(b).powi(2) / n2);
    let mean_diff = mean(a) - mean(b);
    let (welch_t, welch_df, welch_p) = if va + vb == 0.0 {
        (0.0, n - 2.0, if mean_diff == 0.0 { 1.0 } else { 0.0 })
    } else {
        let t = mean_diff / (va + vb).sqrt();
        let df = (va + vb).powi(2) / (va * va / (n1 - 1.0) + vb * vb / (n2 - 1.0));
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
        (t, df, (2.0 * dist.sf(t.abs())).min(1.0))
    };
    Ok(Comparison {
        u_statistic: u,
        p_value,
        mean_diff,
        welch_t,
        welch_df,
        welch_p,
    })
}
