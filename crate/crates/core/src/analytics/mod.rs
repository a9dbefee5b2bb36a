//! Numerical experiments built on certified correlations: the tower-height
//! gap, the averaged estimate for `Q_r ⊗ Q_r`, the cross-height Gram
//! deviation, the cyclic-space distance, mixing profiles and Fejér spectra.

pub mod cross;
pub mod distance;
pub mod estimate;
pub mod hp;
pub mod lemma;
pub mod mixing;
pub mod spectral;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

use crate::correlation::CorrelationEngine;
use crate::enclosure::Enclosure;
use crate::error::{Error, Result};
use crate::formal::InnerProduct;
use crate::numeric::bigint_from_biguint;

pub use cross::{cross_height_gap, fit_cross_constant, CrossReport};
pub use distance::{cyclic_distance, distance_grid, DistanceReport, GramSolver};
pub use estimate::{inequality2, Inequality2Report};
pub use lemma::{lemma_gap, lemma_sweep, LemmaReport, LemmaSweep};
pub use mixing::{mixing_profile, MixingRow};
pub use spectral::{spectral_density, SpectralDensity};

fn check_r(r: u64) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidParams("r must be at least 1".into()));
    }
    Ok(())
}

/// `(Q_r f, Q_r f) = r⁻² Σ_{i,i' < r} c(i − i') = r⁻² (r c(0) + 2 Σ_{k=1}^{r−1} (r − k) c(k))`.
pub fn q_norm(engine: &CorrelationEngine, r: u64, eps: &BigRational) -> Result<InnerProduct> {
    check_r(r)?;
    let mut total = Enclosure::zero();
    let mut converged = true;
    for k in 0..r {
        let e = engine.correlation_u64(k, eps)?;
        converged &= e.converged;
        let mult = if k == 0 { r } else { 2 * (r - k) };
        total = &total + &e.enclosure.scale(&BigRational::from_integer(mult.into()));
    }
    let inv = BigRational::new(1.into(), BigInt::from(r) * BigInt::from(r));
    Ok(InnerProduct {
        value: total.scale(&inv),
        converged,
    })
}

/// `(Tⁿ f, Q_r f) = r⁻¹ Σ_{i<r} c(n + i)`.
pub fn cesaro_pairing(
    engine: &CorrelationEngine,
    n: &BigUint,
    r: u64,
    eps: &BigRational,
) -> Result<InnerProduct> {
    check_r(r)?;
    let mut total = Enclosure::zero();
    let mut converged = true;
    for i in 0..r {
        let e = engine.correlation(&(bigint_from_biguint(n) + i), eps)?;
        converged &= e.converged;
        total = &total + &e.enclosure;
    }
    Ok(InnerProduct {
        value: total.scale(&BigRational::new(1.into(), r.into())),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{Construction, StaircaseParams};
    use crate::oracle::simulate_measure;
    use std::sync::Arc;

    fn engine(p: StaircaseParams) -> CorrelationEngine {
        CorrelationEngine::new(Arc::new(Construction::new(p).unwrap()))
    }

    fn tiny() -> BigRational {
        BigRational::new(1.into(), BigInt::from(10).pow(12))
    }

    #[test]
    fn q_norm_small_r() {
        let e = engine(StaircaseParams::power(0.5));
        let eps = tiny();
        let c0 = e.c0().unwrap();
        assert_eq!(q_norm(&e, 1, &eps).unwrap().value, Enclosure::point(c0.clone()));
        let c1 = e.correlation_u64(1, &eps).unwrap().enclosure;
        let want = (&Enclosure::point(c0) + &c1).scale(&BigRational::new(1.into(), 2.into()));
        assert_eq!(q_norm(&e, 2, &eps).unwrap().value, want);
        assert!(q_norm(&e, 0, &eps).is_err());
    }

    #[test]
    fn q_norm_against_interval_model() {
        let p = StaircaseParams::constant(2);
        let e = engine(p.clone());
        let got = q_norm(&e, 3, &tiny()).unwrap();
        // Lower bounds from the interval model at stage 12.
        let sim: Vec<BigRational> = (0..3)
            .map(|n| {
                if n == 0 {
                    e.c0().unwrap()
                } else {
                    simulate_measure(&p, n, 12, 1 << 24).unwrap().value
                }
            })
            .collect();
        let lower = (&sim[0] * BigRational::from_integer(3.into())
            + &sim[1] * BigRational::from_integer(4.into())
            + &sim[2] * BigRational::from_integer(2.into()))
            / BigRational::from_integer(9.into());
        assert!(&lower <= got.value.hi());
        assert!((crate::numeric::rational_to_f64(&lower) - got.value.mid_f64()).abs() < 1e-3);
    }
}
