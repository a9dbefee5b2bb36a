//! Off-diagonal Gram deviation `|c(h_{j+p} − h_j)² − ⟨𝒬,𝒬⟩|` against `r^{−p}`.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::q_norm;
use crate::correlation::CorrelationEngine;
use crate::enclosure::Enclosure;
use crate::error::{Error, Result};
use crate::numeric::{bigint_from_biguint, ln_biguint};

#[derive(Clone, Debug, PartialEq)]
pub struct CrossReport {
    pub j: usize,
    pub p: usize,
    pub r: u64,
    pub deviation: Enclosure,
    /// `h_j / h_{j+p}`.
    pub height_ratio: f64,
    /// `r^{−p}`.
    pub reference: f64,
    /// `deviation.hi · r^p`, the smallest constant `C` this point allows.
    pub c_estimate: f64,
    pub converged: bool,
}

pub fn cross_height_gap(
    engine: &CorrelationEngine,
    j: usize,
    p: usize,
    r: u64,
    eps: &BigRational,
) -> Result<CrossReport> {
    let c = engine.construction();
    for k in [j, j + p] {
        if u64::from(c.rank(k)?) != r + 1 {
            return Err(Error::Precondition(format!(
                "stage {k} is off the plateau r_j = {}",
                r + 1
            )));
        }
    }
    let hj = c.height(j)?;
    let hjp = c.height(j + p)?;
    let shift: BigInt = bigint_from_biguint(&hjp) - bigint_from_biguint(&hj);
    let corr = engine.correlation(&shift, eps)?;
    let q = q_norm(engine, r, eps)?;
    let deviation = (&corr.enclosure.square() - &q.value.square()).abs();
    let reference = (r as f64).powi(-(p as i32));
    Ok(CrossReport {
        j,
        p,
        r,
        height_ratio: (ln_biguint(&hj) - ln_biguint(&hjp)).exp(),
        reference,
        c_estimate: deviation.hi_f64() / reference,
        deviation,
        converged: corr.converged && q.converged,
    })
}

/// Smallest `C` with `deviation ≤ C r^{−p}` over the reports with `p ≥ 1`.
pub fn fit_cross_constant(reports: &[CrossReport]) -> Option<f64> {
    reports
        .iter()
        .filter(|r| r.p >= 1)
        .map(|r| r.c_estimate)
        .max_by(f64::total_cmp)
}
