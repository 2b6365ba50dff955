use rayon::prelude::*;
use serde::Serialize;

use super::QuantumNetworkModel;
use crate::error::{Error, Result};
use crate::inequality::{evaluate_source_with_tol, QuantifiedBellExpression};

/// Width of the final bracket around the critical visibility.
pub const THRESHOLD_PRECISION: f64 = 1e-7;

const MONOTONE_SAMPLES: usize = 17;

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport {
    /// Midpoint of the final bracket.
    pub critical_v: f64,
    /// Largest visibility found not to violate.
    pub lo: f64,
    /// Smallest visibility found to violate.
    pub hi: f64,
    pub iterations: usize,
    /// `hi - lo`
    pub residual: f64,
    /// `min_lhs - bound` at `hi`
    pub margin_at_hi: f64,
}

fn margin(
    expr: &QuantifiedBellExpression,
    family: &(dyn Fn(f64) -> Result<QuantumNetworkModel> + Sync),
    v: f64,
) -> Result<f64> {
    let model = family(v)?;
    let r = evaluate_source_with_tol(expr, &model, 0.0)?;
    Ok(r.margin)
}

/// Smallest visibility in `range` at which `expr` is violated, by bisection.
///
/// The violation predicate is sampled on a grid first; it must switch from
/// "satisfied" to "violated" exactly once.
pub fn threshold_scan(
    expr: &QuantifiedBellExpression,
    family: &(dyn Fn(f64) -> Result<QuantumNetworkModel> + Sync),
    range: (f64, f64),
) -> Result<ThresholdReport> {
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let grid: Vec<f64> = (0..MONOTONE_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / (MONOTONE_SAMPLES - 1) as f64)
        .collect();
    let violated = grid
        .par_iter()
        .map(|&v| Ok(margin(expr, family, v)? > 0.0))
        .collect::<Result<Vec<bool>>>()?;
    if violated[0] || !violated[MONOTONE_SAMPLES - 1] {
        return Err(Error::NoSignChange { lo, hi });
    }
    let first = violated.iter().position(|&b| b).expect("last sample violates");
    if let Some(back) = violated[first..].iter().position(|&b| !b) {
        return Err(Error::NonMonotone(grid[first + back]));
    }
    let (mut a, mut b) = (grid[first - 1], grid[first]);
    let mut margin_at_hi = margin(expr, family, b)?;
    let mut iterations = 0;
    while b - a > THRESHOLD_PRECISION {
        let mid = 0.5 * (a + b);
        let m = margin(expr, family, mid)?;
        if m > 0.0 {
            b = mid;
            margin_at_hi = m;
        } else {
            a = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdReport {
        critical_v: 0.5 * (a + b),
        lo: a,
        hi: b,
        iterations,
        residual: b - a,
        margin_at_hi,
    })
}
