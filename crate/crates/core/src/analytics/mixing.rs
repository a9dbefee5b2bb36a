//! Correlation profile against the mixing limit `μ(A)²/μ(X)`.

use num_bigint::BigUint;
use num_rational::BigRational;

use crate::construction::total_measure;
use crate::correlation::CorrelationEngine;
use crate::enclosure::Enclosure;
use crate::error::Result;
use crate::numeric::bigint_from_biguint;

#[derive(Clone, Debug, PartialEq)]
pub struct MixingRow {
    pub n: BigUint,
    pub corr: Enclosure,
    pub converged: bool,
    /// `μ(A)²/μ(X)`.
    pub target: Enclosure,
}

/// One row per shift, with `μ(X)` enclosed from tower `measure_stage` on.
pub fn mixing_profile(
    engine: &CorrelationEngine,
    shifts: &[BigUint],
    eps: &BigRational,
    measure_stage: usize,
) -> Result<Vec<MixingRow>> {
    let mx = total_measure(engine.construction(), measure_stage)?;
    let c0 = engine.c0()?;
    let a2 = &c0 * &c0;
    let target = Enclosure::new(&a2 / mx.hi(), &a2 / mx.lo());
    shifts
        .iter()
        .map(|n| {
            let e = engine.correlation(&bigint_from_biguint(n), eps)?;
            Ok(MixingRow {
                n: n.clone(),
                corr: e.enclosure,
                converged: e.converged,
                target: target.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{Construction, StaircaseParams};
    use std::sync::Arc;

    #[test]
    fn first_row_is_mu_a() {
        let e = CorrelationEngine::new(Arc::new(Construction::new(StaircaseParams::power(0.5)).unwrap()));
        let eps = BigRational::new(1.into(), 1_000_000.into());
        let rows = mixing_profile(&e, &[BigUint::from(0u32), BigUint::from(5u32)], &eps, 10).unwrap();
        assert_eq!(rows[0].corr, Enclosure::point(e.c0().unwrap()));
        assert!(rows[0].target.hi() < rows[0].corr.lo());
    }

    #[test]
    fn constant_two_is_rigid_along_heights() {
        let c = Arc::new(Construction::new(StaircaseParams::constant(2)).unwrap());
        let e = CorrelationEngine::new(c.clone());
        let eps = BigRational::new(1.into(), 1_000_000.into());
        let shifts: Vec<BigUint> = (2..=10).map(|j| c.height(j).unwrap()).collect();
        let rows = mixing_profile(&e, &shifts, &eps, 10).unwrap();
        for row in &rows {
            // Heights are odd and A sits on even levels, so c(h_j) = 0 while
            // the mixing limit is 1/2.
            let gap = row.target.lo_f64() - row.corr.hi_f64();
            assert!(gap > 0.4, "{row:?}");
        }
    }
}
