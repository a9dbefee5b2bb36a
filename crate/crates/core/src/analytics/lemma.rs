//! Gap between `(T^{h_j} f, Q_r f)` and `(Q_r f, Q_r f)` on a rank plateau.

use log::warn;
use num_bigint::BigUint;
use num_rational::BigRational;

use super::{cesaro_pairing, q_norm};
use crate::construction::{census_horizon, j_r_census, JrCensus};
use crate::correlation::CorrelationEngine;
use crate::enclosure::{Enclosure, Verdict};
use crate::error::Result;
use crate::numeric::{ln_biguint, ls_slope, rational_pow};

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub j: usize,
    pub r: u64,
    pub h_j: BigUint,
    /// `|(T^{h_j} f, Q_r f) − (Q_r f, Q_r f)|`.
    pub gap: Enclosure,
    /// `2r/h_j + 2r^{−r}`.
    pub bound: BigRational,
    pub verdict: Verdict,
    /// Same gap with `T^{h_j + 1}` in place of `T^{h_j}`.
    pub aligned_gap: Enclosure,
    pub aligned_verdict: Verdict,
    /// `r_j = r + 1`.
    pub on_plateau: bool,
    pub converged: bool,
}

impl LemmaReport {
    pub fn log_h(&self) -> f64 {
        ln_biguint(&self.h_j)
    }
}

pub fn lemma_bound(r: u64, h: &BigUint) -> BigRational {
    let r_q = BigRational::from_integer(r.into());
    let two = BigRational::from_integer(2.into());
    &two * &r_q / BigRational::from_integer(h.clone().into()) + two * rational_pow(&r_q, -(r as i64))
}

fn verdict(gap: &Enclosure, bound: &BigRational, converged: bool) -> Verdict {
    match gap.compare_le(bound) {
        v @ Verdict::Indeterminate(_) => v,
        _ if !converged => Verdict::Indeterminate(gap.width_f64()),
        v => v,
    }
}

pub fn lemma_gap(engine: &CorrelationEngine, j: usize, r: u64, eps: &BigRational) -> Result<LemmaReport> {
    let c = engine.construction();
    let rank = c.rank(j)?;
    let on_plateau = u64::from(rank) == r + 1;
    if !on_plateau {
        warn!("stage {j} has rank {rank}, off the plateau r_j = {}", r + 1);
    }
    let h = c.height(j)?;
    let q = q_norm(engine, r, eps)?;
    let lit = cesaro_pairing(engine, &h, r, eps)?;
    let ali = cesaro_pairing(engine, &(&h + 1u32), r, eps)?;
    let bound = lemma_bound(r, &h);
    let gap = (&lit.value - &q.value).abs();
    let aligned_gap = (&ali.value - &q.value).abs();
    let converged = q.converged && lit.converged;
    Ok(LemmaReport {
        j,
        r,
        verdict: verdict(&gap, &bound, converged),
        aligned_verdict: verdict(&aligned_gap, &bound, q.converged && ali.converged),
        h_j: h,
        gap,
        bound,
        aligned_gap,
        on_plateau,
        converged,
    })
}

/// Reports for every `j ∈ J_r` with `h_j ≤ 10^{max_log10_height}`.
#[derive(Clone, Debug)]
pub struct LemmaSweep {
    pub census: JrCensus,
    pub reports: Vec<LemmaReport>,
    /// Log-log slope of the gap midpoint against `h_j`.
    pub slope: Option<f64>,
    pub aligned_slope: Option<f64>,
}

impl LemmaSweep {
    pub fn indeterminate_fraction(&self) -> f64 {
        if self.reports.is_empty() {
            return 0.0;
        }
        let k = self.reports.iter().filter(|r| r.verdict.is_indeterminate()).count();
        k as f64 / self.reports.len() as f64
    }
}

fn slope_of(reports: &[LemmaReport], pick: impl Fn(&LemmaReport) -> &Enclosure) -> Option<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter_map(|r| {
            let m = pick(r).mid_f64();
            (m > 0.0).then(|| (r.log_h(), m.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    ls_slope(&x, &y)
}

/// Runs [`lemma_gap`] over the census of the plateau `r_j = r + 1`. Each
/// stage gets the width target `min(eps, c(0)·rel/h_j)` so the enclosures
/// resolve gaps of order `1/h_j`.
pub fn lemma_sweep(
    engine: &CorrelationEngine,
    r: u64,
    eps: &BigRational,
    rel: &BigRational,
    max_log10_height: f64,
) -> Result<LemmaSweep> {
    let params = engine.construction().params().clone();
    let census = j_r_census(&params, r, census_horizon(&params, r, 64))?;
    let c0 = engine.c0()?;
    let limit = max_log10_height * std::f64::consts::LN_10;
    let mut reports = Vec::new();
    for &j in &census.members {
        let h = engine.construction().height(j)?;
        if ln_biguint(&h) > limit {
            continue;
        }
        let scaled = &c0 * rel / BigRational::from_integer(h.into());
        let e = if &scaled < eps { scaled } else { eps.clone() };
        reports.push(lemma_gap(engine, j, r, &e)?);
    }
    Ok(LemmaSweep {
        slope: slope_of(&reports, |r| &r.gap),
        aligned_slope: slope_of(&reports, |r| &r.aligned_gap),
        census,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{Construction, StaircaseParams};
    use std::sync::Arc;

    #[test]
    fn bound_arithmetic() {
        assert_eq!(
            lemma_bound(2, &BigUint::from(7u32)),
            BigRational::new(15.into(), 14.into())
        );
    }

    #[test]
    fn small_stage_report() {
        let e = CorrelationEngine::new(Arc::new(Construction::new(StaircaseParams::power(0.5)).unwrap()));
        let eps = BigRational::new(1.into(), 1_000_000_000.into());
        let rep = lemma_gap(&e, 3, 1, &eps).unwrap();
        assert!(rep.on_plateau);
        assert_eq!(rep.h_j, BigUint::from(15u32));
        assert!(rep.converged);
        assert!(!rep.verdict.is_indeterminate());
        // r = 1: the gap is |c(h_j) − c(0)|.
        let ch = e.correlation_u64(15, &eps).unwrap().enclosure;
        let c0 = Enclosure::point(e.c0().unwrap());
        assert_eq!(rep.gap, (&ch - &c0).abs());
    }
}
