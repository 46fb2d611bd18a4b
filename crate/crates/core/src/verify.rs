//! Estimators and goodness-of-fit tests that tie the sampler to the exact
//! laws, plus the acceptance suite.

pub mod acceptance;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("no samples")]
    Empty,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("chi-square test needs at least two pooled bins, got {bins}")]
    DegenerateDof { bins: usize },
}

/// Monte Carlo estimate of `E[Π_j s_j^{V_j}]`.
#[derive(Clone, Debug, Serialize)]
pub struct GfEstimate {
    pub s: Vec<f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

impl GfEstimate {
    /// `|estimate − exact| ≤ k · SE`.
    pub fn within(&self, exact: f64, k: f64) -> bool {
        (self.estimate - exact).abs() <= k * self.std_error
    }

    pub fn z_score(&self, exact: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.estimate == exact {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - exact) / self.std_error
        }
    }
}

fn mean_and_se(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    // Welford
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for x in values {
        n += 1;
        let d = x - mean;
        mean += d / n as f64;
        m2 += d * (x - mean);
    }
    let se = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    (mean, se, n)
}

pub fn estimate_gf(volumes: &[u64], s: f64, seed: u64) -> Result<GfEstimate, VerifyError> {
    if volumes.is_empty() {
        return Err(VerifyError::Empty);
    }
    let (estimate, std_error, trials) = mean_and_se(volumes.iter().map(|&v| s.powf(v as f64)));
    Ok(GfEstimate {
        s: vec![s],
        estimate,
        std_error,
        trials,
        seed,
    })
}

/// Joint version for vectors of statistics (e.g. slice volumes).
pub fn estimate_joint_gf(samples: &[Vec<u64>], s: &[f64], seed: u64) -> Result<GfEstimate, VerifyError> {
    if samples.is_empty() {
        return Err(VerifyError::Empty);
    }
    if let Some(bad) = samples.iter().find(|v| v.len() != s.len()) {
        return Err(VerifyError::Dimension(format!(
            "{} statistics for {} variables",
            bad.len(),
            s.len()
        )));
    }
    let vals = samples
        .iter()
        .map(|v| v.iter().zip(s).map(|(&n, &x)| x.powf(n as f64)).product::<f64>());
    let (estimate, std_error, trials) = mean_and_se(vals);
    Ok(GfEstimate {
        s: s.to_vec(),
        estimate,
        std_error,
        trials,
        seed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Pearson test of `counts[k]` against `pmf[k]`. Consecutive cells are pooled
/// until the expected count reaches `min_bin`; everything past the last full
/// bin, including mass beyond `pmf`, goes into a final bin.
pub fn chi_square_pmf(counts: &[u64], pmf: &[f64], min_bin: f64) -> Result<ChiSquare, VerifyError> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(VerifyError::Empty);
    }
    let nf = n as f64;
    let len = counts.len().max(pmf.len());
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    let mut covered = 0.0;
    for k in 0..len {
        obs += counts.get(k).copied().unwrap_or(0) as f64;
        let p = pmf.get(k).copied().unwrap_or(0.0);
        exp += p * nf;
        covered += p;
        if exp >= min_bin {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    exp += (1.0 - covered).max(0.0) * nf;
    if obs > 0.0 || exp > 0.0 {
        match bins.last_mut() {
            Some(last) if exp < min_bin => {
                last.0 += obs;
                last.1 += exp;
            }
            _ => bins.push((obs, exp)),
        }
    }
    if bins.len() < 2 {
        return Err(VerifyError::DegenerateDof { bins: bins.len() });
    }
    let statistic: f64 = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        bins: bins.len(),
    })
}

/// Histogram of values `0..` (longer than the largest value).
pub fn histogram(values: impl IntoIterator<Item = u64>) -> Vec<u64> {
    let mut h = Vec::new();
    for v in values {
        let v = v as usize;
        if v >= h.len() {
            h.resize(v + 1, 0);
        }
        h[v] += 1;
    }
    h
}

/// Verdict record.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub test: String,
    pub statistic: f64,
    pub p: Option<f64>,
    pub pass: bool,
    pub seed: Option<u64>,
}

impl Verdict {
    pub fn new(test: impl Into<String>, statistic: f64, p: Option<f64>, pass: bool, seed: Option<u64>) -> Self {
        Verdict {
            test: test.into(),
            statistic,
            p,
            pass,
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Significance floor for conformance tests.
pub const P_FLOOR: f64 = 1e-3;
