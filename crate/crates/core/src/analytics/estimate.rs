//! `‖𝒬_r(f⊗f) − 𝒫_r(f⊗f)‖² < 2/|J_r|` through the expansion
//! `⟨𝒬,𝒬⟩ − 2⟨𝒬,𝒫⟩ + ⟨𝒫,𝒫⟩`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use super::{cesaro_pairing, q_norm};
use crate::construction::JrCensus;
use crate::correlation::CorrelationEngine;
use crate::enclosure::{Enclosure, Verdict};
use crate::error::{Error, Result};
use crate::numeric::bigint_from_biguint;

#[derive(Clone, Debug, PartialEq)]
pub struct Inequality2Report {
    pub r: u64,
    pub members: Vec<usize>,
    /// `⟨𝒬,𝒬⟩ = (Q_r f, Q_r f)²`.
    pub qq: Enclosure,
    /// `⟨𝒬,𝒫⟩ = |J|⁻¹ Σ_j (T^{h_j} f, Q_r f)²`.
    pub qp: Enclosure,
    /// `⟨𝒫,𝒫⟩ = |J|⁻² Σ_{j,k} c(h_j − h_k)²`.
    pub pp: Enclosure,
    /// Expansion, intersected with `[0, 4c(0)²]`.
    pub lhs: Enclosure,
    /// `2/|J_r|`.
    pub rhs: BigRational,
    pub verdict: Verdict,
    /// `⟨𝒬,𝒫⟩` with `T^{h_j + 1}`.
    pub qp_aligned: Enclosure,
    pub lhs_aligned: Enclosure,
    pub verdict_aligned: Verdict,
    pub converged: bool,
}

fn verdict(lhs: &Enclosure, rhs: &BigRational, converged: bool) -> Verdict {
    match lhs.compare_lt(rhs) {
        v @ Verdict::Indeterminate(_) => v,
        _ if !converged => Verdict::Indeterminate(lhs.width_f64()),
        v => v,
    }
}

pub fn inequality2(
    engine: &CorrelationEngine,
    census: &JrCensus,
    eps: &BigRational,
) -> Result<Inequality2Report> {
    let r = census.r;
    let members = census.members.clone();
    if members.is_empty() {
        return Err(Error::EmptyPlateau { plateau: r + 1 });
    }
    let size = BigRational::from_integer(members.len().into());
    let c = engine.construction();
    let heights: Vec<BigInt> = members
        .iter()
        .map(|&j| c.height(j).map(|h| bigint_from_biguint(&h)))
        .collect::<Result<_>>()?;
    let q = q_norm(engine, r, eps)?;
    let qq = q.value.square();

    let pairings = |extra: u32| -> Result<(Enclosure, bool)> {
        let terms = heights
            .par_iter()
            .map(|h| cesaro_pairing(engine, &(h.magnitude() + extra), r, eps))
            .collect::<Result<Vec<_>>>()?;
        let ok = terms.iter().all(|t| t.converged);
        let sum: Enclosure = terms.into_iter().map(|t| t.value.square()).sum();
        Ok((sum.scale(&size.recip()), ok))
    };
    let (qp, qp_ok) = pairings(0)?;
    let (qp_aligned, ali_ok) = pairings(1)?;

    // Off-diagonal pairs, each counted twice.
    let pairs: Vec<(usize, usize)> = (0..heights.len())
        .flat_map(|a| (a + 1..heights.len()).map(move |b| (a, b)))
        .collect();
    let off = pairs
        .par_iter()
        .map(|&(a, b)| engine.correlation(&(&heights[b] - &heights[a]), eps))
        .collect::<Result<Vec<_>>>()?;
    let pp_ok = off.iter().all(|e| e.converged);
    let c0 = engine.c0()?;
    let diag = Enclosure::point(&c0 * &c0 * &size);
    let two = BigRational::from_integer(2.into());
    let off_sum: Enclosure = off.iter().map(|e| e.enclosure.square().scale(&two)).sum();
    let pp = (&diag + &off_sum).scale(&(&size * &size).recip());

    let ceiling = &c0 * &c0 * BigRational::from_integer(4.into());
    let expand = |qp: &Enclosure| (&(&qq - &qp.scale(&two)) + &pp).clamp(&BigRational::zero(), &ceiling);
    let lhs = expand(&qp);
    let lhs_aligned = expand(&qp_aligned);
    let rhs = &two / &size;
    let converged = q.converged && qp_ok && pp_ok;
    Ok(Inequality2Report {
        r,
        members,
        verdict: verdict(&lhs, &rhs, converged),
        verdict_aligned: verdict(&lhs_aligned, &rhs, q.converged && ali_ok && pp_ok),
        qq,
        qp,
        pp,
        lhs,
        rhs,
        qp_aligned,
        lhs_aligned,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{j_r_census, Construction, StaircaseParams};
    use std::sync::Arc;

    fn eps() -> BigRational {
        BigRational::new(1.into(), BigInt::from(10).pow(12))
    }

    #[test]
    fn degenerate_census_reduces_to_c0_squared() {
        let p = StaircaseParams::power(0.5);
        let e = CorrelationEngine::new(Arc::new(Construction::new(p.clone()).unwrap()));
        let mut census = j_r_census(&p, 1, 20).unwrap();
        census.members.truncate(1);
        let rep = inequality2(&e, &census, &eps()).unwrap();
        let c0 = e.c0().unwrap();
        assert_eq!(rep.pp, Enclosure::point(&c0 * &c0));
        assert_eq!(rep.rhs, BigRational::from_integer(2.into()));
    }

    #[test]
    fn diagonal_share_and_ceiling() {
        let p = StaircaseParams::power(0.5);
        let e = CorrelationEngine::new(Arc::new(Construction::new(p.clone()).unwrap()));
        let census = j_r_census(&p, 1, 20).unwrap();
        assert_eq!(census.size(), 5);
        let rep = inequality2(&e, &census, &eps()).unwrap();
        let c0 = e.c0().unwrap();
        let diag_share = &c0 * &c0 / BigRational::from_integer(5.into());
        assert!(rep.pp.lo() >= &diag_share);
        assert!(rep.lhs.lo() >= &BigRational::zero());
        assert!(rep.lhs.hi() <= &(&c0 * &c0 * BigRational::from_integer(4.into())));
        assert!(rep.lhs.width_f64() < 1e-6);
        assert!(!rep.verdict.is_indeterminate());
    }
}
