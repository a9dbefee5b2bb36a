//! Staircase cutting-and-stacking geometry.
//!
//! Stage `j` is a tower of `h_j` levels of width `w_j`. To pass to stage
//! `j + 1` the tower is cut into `r_j` columns of width `w_j / r_j`; column
//! `i` (1-based) receives `s_j(i)` spacer levels on top, with the staircase
//! spacer vector `s_j = (1, 2, …, r_j − 1, 0)`, and the columns are stacked
//! left to right. Copy `i` of the old tower starts at height
//!
//! ```text
//! o_i = (i − 1)·h_j + i(i − 1)/2,
//! ```
//!
//! and the new height is `h_{j+1} = r_j·h_j + r_j(r_j − 1)/2`.

use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use parking_lot::RwLock;

use crate::enclosure::Enclosure;
use crate::numeric::bigint_from_biguint;
use crate::{Error, Result};

/// Default cap on explicitly materialized level sets.
pub const DEFAULT_LEVEL_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Floor,
    Round,
}

impl std::str::FromStr for Rounding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "floor" => Ok(Rounding::Floor),
            "round" => Ok(Rounding::Round),
            other => Err(Error::InvalidParams(format!("unknown rounding `{other}`"))),
        }
    }
}

impl Rounding {
    pub fn as_str(self) -> &'static str {
        match self {
            Rounding::Floor => "floor",
            Rounding::Round => "round",
        }
    }
}

/// How the rank `r_j` depends on the stage index.
#[derive(Clone, Debug, PartialEq)]
pub enum RankLaw {
    /// `r_j = max(r_min, rounding(j^d))`.
    Power { d: f64, rounding: Rounding, r_min: u32 },
    /// `r_j ≡ r` (not a staircase in the mixing sense; used by oracle tests).
    Constant(u32),
    /// Explicit finite sequence `r_0, r_1, …`.
    Explicit(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaircaseParams {
    pub law: RankLaw,
    /// Stage `j0` at which the level set `A` is a single level.
    pub base_stage: usize,
    /// Level index of `A` inside the tower of stage `j0`.
    pub base_level: u64,
}

impl StaircaseParams {
    /// `r_j = max(2, round(j^d))` with `A` the base level of stage 0.
    pub fn power(d: f64) -> Self {
        Self {
            law: RankLaw::Power {
                d,
                rounding: Rounding::Round,
                r_min: 2,
            },
            base_stage: 0,
            base_level: 0,
        }
    }

    pub fn constant(r: u32) -> Self {
        Self {
            law: RankLaw::Constant(r),
            base_stage: 0,
            base_level: 0,
        }
    }

    pub fn explicit(ranks: Vec<u32>) -> Self {
        Self {
            law: RankLaw::Explicit(ranks),
            base_stage: 0,
            base_level: 0,
        }
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        if let RankLaw::Power { rounding: ref mut r, .. } = self.law {
            *r = rounding;
        }
        self
    }

    pub fn with_base(mut self, stage: usize, level: u64) -> Self {
        self.base_stage = stage;
        self.base_level = level;
        self
    }

    /// Checks the rank law. Exponents `d ≥ 0.2` are accepted with a warning:
    /// the homogeneous-spectrum regime needs `0 < d < 0.2`, but such runs
    /// never populate a rank plateau at desk scale.
    pub fn validate(&self) -> Result<()> {
        match &self.law {
            RankLaw::Power { d, r_min, .. } => {
                if !(d.is_finite() && *d > 0.0 && *d <= 1.0) {
                    return Err(Error::InvalidParams(format!(
                        "exponent d = {d} outside (0, 1]"
                    )));
                }
                if *r_min < 2 {
                    return Err(Error::InvalidParams(format!("r_min = {r_min} < 2")));
                }
                static WARNED: std::sync::Once = std::sync::Once::new();
                if *d >= 0.2 {
                    WARNED.call_once(|| log::warn!("d = {d} ≥ 0.2 lies outside the homogeneous-spectrum regime 0 < d < 0.2"));
                }
            }
            RankLaw::Constant(r) => {
                if *r < 2 {
                    return Err(Error::InvalidParams(format!("constant rank {r} < 2")));
                }
            }
            RankLaw::Explicit(ranks) => {
                if ranks.is_empty() {
                    return Err(Error::InvalidParams("empty rank sequence".into()));
                }
                if let Some((j, r)) = ranks.iter().enumerate().find(|(_, r)| **r < 2) {
                    return Err(Error::InvalidParams(format!("r_{j} = {r} < 2")));
                }
            }
        }
        Ok(())
    }

    /// Rank `r_j` of stage `j`.
    pub fn rank(&self, j: usize) -> Result<u32> {
        match &self.law {
            RankLaw::Power { d, rounding, r_min } => {
                let x = (j as f64).powf(*d);
                let v = match rounding {
                    Rounding::Floor => x.floor(),
                    Rounding::Round => x.round(),
                };
                Ok((v as u32).max(*r_min))
            }
            RankLaw::Constant(r) => Ok(*r),
            RankLaw::Explicit(ranks) => ranks.get(j).copied().ok_or(Error::RanksExhausted {
                stage: j,
                len: ranks.len(),
            }),
        }
    }

    /// Exponent `d` of the power law, if any.
    pub fn exponent(&self) -> Option<f64> {
        match self.law {
            RankLaw::Power { d, .. } => Some(d),
            _ => None,
        }
    }

    /// Canonical text form; two parameter sets produce identical geometry
    /// and correlations iff their canonical forms agree.
    pub fn canonical(&self) -> String {
        let law = match &self.law {
            RankLaw::Power { d, rounding, r_min } => {
                format!("power(d={d:?},rounding={},r_min={r_min})", rounding.as_str())
            }
            RankLaw::Constant(r) => format!("constant({r})"),
            RankLaw::Explicit(ranks) => {
                let list: Vec<String> = ranks.iter().map(u32::to_string).collect();
                format!("explicit({})", list.join(","))
            }
        };
        format!(
            "{law};base_stage={};base_level={}",
            self.base_stage, self.base_level
        )
    }
}

/// Exact data of one stage of the tower.
#[derive(Clone, Debug, PartialEq)]
pub struct StageGeometry {
    pub stage: usize,
    /// `r_j`, the number of columns the stage-`j` tower is cut into.
    pub rank: u32,
    /// `h_j`.
    pub height: BigUint,
    /// `w_j = 1 / (r_0 ⋯ r_{j−1})`, the measure of one level.
    pub width: BigRational,
    /// `r_0 ⋯ r_{j−1}`; the reciprocal of `width`.
    pub rank_product: BigUint,
    /// `s_j(1), …, s_j(r_j) = 1, 2, …, r_j − 1, 0`.
    pub spacers: Vec<u32>,
    /// Start heights `o_1, …, o_{r_j}` of the copies inside the next tower.
    pub offsets: Vec<BigUint>,
    /// `h_j·w_j`, the measure of the stage-`j` tower.
    pub tower_measure: BigRational,
}

impl StageGeometry {
    fn from_parts(stage: usize, height: BigUint, rank_product: BigUint, rank: u32) -> Self {
        let width = BigRational::new(1.into(), bigint_from_biguint(&rank_product));
        let tower_measure = &width * BigRational::from_integer(bigint_from_biguint(&height));
        let spacers = staircase_spacers(rank);
        let mut offsets = Vec::with_capacity(rank as usize);
        let mut o = BigUint::zero();
        for s in &spacers {
            offsets.push(o.clone());
            o += &height + BigUint::from(*s);
        }
        StageGeometry {
            stage,
            rank,
            height,
            width,
            rank_product,
            spacers,
            offsets,
            tower_measure,
        }
    }

    /// `h_{j+1} = r_j·h_j + r_j(r_j − 1)/2`.
    pub fn next_height(&self) -> BigUint {
        let r = u64::from(self.rank);
        &self.height * r + BigUint::from(r * (r - 1) / 2)
    }

    /// Offset `o_i` for a 1-based copy index `i`.
    pub fn offset(&self, i: usize) -> &BigUint {
        &self.offsets[i - 1]
    }
}

/// The staircase spacer vector `(1, 2, …, r − 1, 0)`.
pub fn staircase_spacers(r: u32) -> Vec<u32> {
    (1..r).chain(std::iter::once(0)).collect()
}

/// Closed form `o_i = (i − 1)h + i(i − 1)/2` of the copy offsets.
pub fn offset_closed_form(height: &BigUint, i: u64) -> BigUint {
    height * (i - 1) + BigUint::from(i * (i - 1) / 2)
}

/// A staircase construction with an append-only cache of stage geometries.
///
/// Stages are computed on first request and never change afterwards, so
/// readers share them through `Arc` while a writer extends the cache.
#[derive(Debug)]
pub struct Construction {
    params: StaircaseParams,
    stages: RwLock<Vec<Arc<StageGeometry>>>,
}

impl Construction {
    pub fn new(params: StaircaseParams) -> Result<Self> {
        params.validate()?;
        let c = Construction {
            params,
            stages: RwLock::new(Vec::new()),
        };
        let base = c.geometry(c.params.base_stage)?;
        if BigUint::from(c.params.base_level) >= base.height {
            return Err(Error::InvalidParams(format!(
                "base level {} not below h_{} = {}",
                c.params.base_level, c.params.base_stage, base.height
            )));
        }
        Ok(c)
    }

    pub fn params(&self) -> &StaircaseParams {
        &self.params
    }

    pub fn base_stage(&self) -> usize {
        self.params.base_stage
    }

    pub fn rank(&self, j: usize) -> Result<u32> {
        self.params.rank(j)
    }

    /// Geometry of stage `j`, computing and caching all earlier stages.
    pub fn geometry(&self, j: usize) -> Result<Arc<StageGeometry>> {
        if let Some(g) = self.stages.read().get(j) {
            return Ok(Arc::clone(g));
        }
        let mut stages = self.stages.write();
        while stages.len() <= j {
            let next = match stages.last() {
                None => StageGeometry::from_parts(
                    0,
                    BigUint::one(),
                    BigUint::one(),
                    self.params.rank(0)?,
                ),
                Some(prev) => {
                    let stage = prev.stage + 1;
                    let r = self.params.rank(stage)?;
                    StageGeometry::from_parts(
                        stage,
                        prev.next_height(),
                        &prev.rank_product * prev.rank,
                        r,
                    )
                }
            };
            stages.push(Arc::new(next));
        }
        Ok(Arc::clone(&stages[j]))
    }

    /// `h_j`; unlike [`Construction::geometry`] this only needs `r_0..r_{j−1}`.
    pub fn height(&self, j: usize) -> Result<BigUint> {
        match j.checked_sub(1) {
            None => Ok(BigUint::one()),
            Some(prev) => Ok(self.geometry(prev)?.next_height()),
        }
    }

    /// `w_j`.
    pub fn width(&self, j: usize) -> Result<BigRational> {
        match j.checked_sub(1) {
            None => Ok(BigRational::one()),
            Some(prev) => {
                let g = self.geometry(prev)?;
                Ok(&g.width / BigRational::from_integer(g.rank.into()))
            }
        }
    }

    /// `|L_j| = r_{j0} ⋯ r_{j−1}`, the number of levels of tower `j` inside `A`.
    pub fn level_count(&self, j: usize) -> Result<BigUint> {
        let base = self.base_stage();
        if j < base {
            return Err(Error::BelowBaseStage { stage: j, base });
        }
        let mut n = BigUint::one();
        for k in base..j {
            n *= self.rank(k)?;
        }
        Ok(n)
    }

    /// `μ(A) = w_{j0}`.
    pub fn level_set_measure(&self) -> Result<BigRational> {
        self.width(self.base_stage())
    }

    /// First stage `j ≥ j0` with `h_j > n`.
    pub fn first_stage_above(&self, n: &BigUint) -> Result<usize> {
        let mut j = self.base_stage();
        while &self.height(j)? <= n {
            j += 1;
        }
        Ok(j)
    }
}

/// Positions of `A` inside tower `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Positions {
    /// `A` is level `base_level` of tower `base_stage`, lifted to `stage`.
    Implicit { base_stage: usize, base_level: u64 },
    /// Sorted level indices in `[0, h_j)`.
    Explicit(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSet {
    pub stage: usize,
    pub positions: Positions,
}

impl LevelSet {
    /// `L_{j0} = {ℓ}` in implicit form.
    pub fn base(params: &StaircaseParams) -> Self {
        LevelSet {
            stage: params.base_stage,
            positions: Positions::Implicit {
                base_stage: params.base_stage,
                base_level: params.base_level,
            },
        }
    }

    /// `L_{j0} = {ℓ}` in explicit form.
    pub fn explicit_base(params: &StaircaseParams) -> Self {
        LevelSet {
            stage: params.base_stage,
            positions: Positions::Explicit(vec![params.base_level]),
        }
    }

    pub fn explicit(&self) -> Option<&[u64]> {
        match &self.positions {
            Positions::Explicit(v) => Some(v),
            Positions::Implicit { .. } => None,
        }
    }

    /// `|L_j|`.
    pub fn len(&self, construction: &Construction) -> Result<BigUint> {
        match &self.positions {
            Positions::Explicit(v) => Ok(BigUint::from(v.len())),
            Positions::Implicit { base_stage, .. } => {
                let mut n = BigUint::one();
                for k in *base_stage..self.stage {
                    n *= construction.rank(k)?;
                }
                Ok(n)
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(&self.positions, Positions::Explicit(v) if v.is_empty())
    }
}

/// `L_{j+1} = ⋃_i (o_i + L_j)`.
///
/// Implicit level sets stay implicit. Explicit ones are materialized only
/// while the result holds at most `cap` positions.
pub fn lift_level_set(ls: &LevelSet, geometry: &StageGeometry, cap: u64) -> Result<LevelSet> {
    if ls.stage != geometry.stage {
        return Err(Error::Precondition(format!(
            "level set at stage {} lifted with geometry of stage {}",
            ls.stage, geometry.stage
        )));
    }
    if geometry.rank < 2 {
        return Err(Error::Precondition(format!(
            "rank r_{} = {} < 2",
            geometry.stage, geometry.rank
        )));
    }
    let positions = match &ls.positions {
        Positions::Implicit {
            base_stage,
            base_level,
        } => Positions::Implicit {
            base_stage: *base_stage,
            base_level: *base_level,
        },
        Positions::Explicit(v) => {
            let size = v.len() as u128 * u128::from(geometry.rank);
            if size > u128::from(cap) {
                return Err(Error::CapExceeded {
                    size: size.to_string(),
                    cap,
                });
            }
            let next_height = geometry.next_height().to_u64().ok_or_else(|| {
                Error::Precondition("explicit level set beyond 64-bit heights".into())
            })?;
            let mut out = Vec::with_capacity(size as usize);
            for o in &geometry.offsets {
                // Bounded by next_height, which fits in u64.
                let o = o.to_u64().unwrap_or(next_height);
                out.extend(v.iter().map(|p| p + o));
            }
            // Copies occupy increasing disjoint blocks, so `out` is sorted.
            debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
            Positions::Explicit(out)
        }
    };
    Ok(LevelSet {
        stage: ls.stage + 1,
        positions,
    })
}

/// Certified enclosure of `μ(X) = lim h_j w_j`.
///
/// The lower end is `h_J w_J`. Stage `k` adds `r_k(r_k − 1)/2` spacer levels
/// of width `w_k / r_k`, i.e. mass `t_k = (r_k − 1) w_k / 2`, and the upper
/// end adds a geometric majorant of `Σ_{k ≥ J} t_k`: once ranks grow by at
/// most one per stage, `t_{k+1}/t_k ≤ 1/(r_k − 1)`.
pub fn total_measure(construction: &Construction, j_limit: usize) -> Result<Enclosure> {
    let g = construction.geometry(j_limit)?;
    let lower = g.tower_measure.clone();
    let half = BigRational::new(1.into(), 2.into());
    let term = |k: usize| -> Result<BigRational> {
        let gk = construction.geometry(k)?;
        Ok(BigRational::from_integer((gk.rank - 1).into()) * &gk.width * &half)
    };
    let tail = match &construction.params().law {
        RankLaw::Constant(r) => {
            // Exact: Σ t_k is geometric with ratio 1/r.
            let ratio = BigRational::new(1.into(), (*r).into());
            term(j_limit)? / (BigRational::one() - ratio)
        }
        RankLaw::Power { .. } => {
            let mut acc = BigRational::zero();
            let mut k = j_limit;
            loop {
                let r = construction.rank(k)?;
                if r >= 3 {
                    let ratio = BigRational::new(1.into(), (r - 1).into());
                    acc += term(k)? / (BigRational::one() - ratio);
                    break;
                }
                acc += term(k)?;
                k += 1;
            }
            acc
        }
        RankLaw::Explicit(_) => {
            return Err(Error::Precondition(
                "total measure needs the full rank sequence; explicit sequences are finite".into(),
            ))
        }
    };
    let upper = &lower + &tail;
    Ok(Enclosure::new(lower, upper))
}

/// Stages on the plateau `r_j = r + 1`, with the members of `J_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct JrCensus {
    pub r: u64,
    /// `j_r = max{j : r_j = r + 1}`.
    pub j_r: usize,
    /// First stage of the plateau.
    pub plateau_start: usize,
    /// `J_r = {j : r_j = r + 1, j < j_r − r}`.
    pub members: Vec<usize>,
    /// `r^{(1−d)/d}`, the growth law `|J_r|` follows for power laws.
    pub reference: Option<f64>,
}

impl JrCensus {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Census of the plateau `r_j = r + 1` among stages `0..=j_max`.
///
/// Fails unless the plateau has closed, i.e. `r_{j_max} > r + 1`.
pub fn j_r_census(params: &StaircaseParams, r: u64, j_max: usize) -> Result<JrCensus> {
    params.validate()?;
    let plateau = r + 1;
    if u64::from(params.rank(j_max)?) <= plateau {
        return Err(Error::CensusIncomplete { plateau, j_max });
    }
    let stages: Vec<usize> = (0..=j_max)
        .map(|j| params.rank(j).map(|rj| (j, u64::from(rj))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&(_, rj)| rj == plateau)
        .map(|(j, _)| j)
        .collect();
    let (Some(&plateau_start), Some(&j_r)) = (stages.first(), stages.last()) else {
        return Err(Error::EmptyPlateau { plateau });
    };
    let members = stages
        .into_iter()
        .filter(|&j| (j as u64) + r < j_r as u64)
        .collect();
    let reference = params
        .exponent()
        .map(|d| (r as f64).powf((1.0 - d) / d));
    Ok(JrCensus {
        r,
        j_r,
        plateau_start,
        members,
        reference,
    })
}

/// Smallest `j_max` that certainly closes the plateau `r_j = r + 1` for a
/// power law (`j^d ≥ r + 2`), or `fallback` for other laws.
pub fn census_horizon(params: &StaircaseParams, r: u64, fallback: usize) -> usize {
    match params.law {
        RankLaw::Power { d, .. } => ((r + 2) as f64).powf(1.0 / d).ceil() as usize + 1,
        _ => fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn heights(c: &Construction, n: usize) -> Vec<u64> {
        (0..n).map(|j| c.height(j).unwrap().to_u64().unwrap()).collect()
    }

    #[test]
    fn power_law_ranks() {
        let p = StaircaseParams::power(0.5);
        assert_eq!(p.rank(6).unwrap(), 2);
        assert_eq!(p.rank(7).unwrap(), 3);
        assert_eq!(p.rank(0).unwrap(), 2);
        let floor = p.clone().with_rounding(Rounding::Floor);
        assert_eq!(floor.rank(8).unwrap(), 2);
        assert_eq!(floor.rank(9).unwrap(), 3);
    }

    #[test]
    fn explicit_ranks_run_out() {
        let p = StaircaseParams::explicit(vec![2, 3]);
        assert_eq!(p.rank(1).unwrap(), 3);
        assert!(matches!(
            p.rank(2),
            Err(Error::RanksExhausted { stage: 2, len: 2 })
        ));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(StaircaseParams::power(0.0).validate().is_err());
        assert!(StaircaseParams::power(1.5).validate().is_err());
        assert!(StaircaseParams::constant(1).validate().is_err());
        assert!(StaircaseParams::explicit(vec![2, 1]).validate().is_err());
        assert!(Construction::new(StaircaseParams::constant(2).with_base(1, 3)).is_err());
        assert!(Construction::new(StaircaseParams::constant(2).with_base(1, 2)).is_ok());
    }

    #[test]
    fn constant_two_heights_and_offsets() {
        let c = Construction::new(StaircaseParams::constant(2)).unwrap();
        assert_eq!(heights(&c, 4), vec![1, 3, 7, 15]);
        for j in 0..4 {
            let g = c.geometry(j).unwrap();
            let h = g.height.to_u64().unwrap();
            let offs: Vec<u64> = g.offsets.iter().map(|o| o.to_u64().unwrap()).collect();
            assert_eq!(offs, vec![0, h + 1]);
            assert_eq!(g.spacers, vec![1, 0]);
        }
    }

    #[test]
    fn constant_three_first_stage() {
        let c = Construction::new(StaircaseParams::constant(3)).unwrap();
        assert_eq!(c.height(1).unwrap(), BigUint::from(6u32));
        let g = c.geometry(1).unwrap();
        let offs: Vec<u64> = g.offsets.iter().map(|o| o.to_u64().unwrap()).collect();
        assert_eq!(offs, vec![0, 7, 15]);
    }

    #[test]
    fn lift_examples() {
        let p = StaircaseParams::constant(2);
        let c = Construction::new(p.clone()).unwrap();
        let l0 = LevelSet::explicit_base(&p);
        let l1 = lift_level_set(&l0, &c.geometry(0).unwrap(), 100).unwrap();
        assert_eq!(l1.explicit().unwrap(), &[0, 2]);
        let l2 = lift_level_set(&l1, &c.geometry(1).unwrap(), 100).unwrap();
        assert_eq!(l2.explicit().unwrap(), &[0, 2, 4, 6]);
        let err = lift_level_set(&l2, &c.geometry(2).unwrap(), 7).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
        let wrong_stage = lift_level_set(&l2, &c.geometry(1).unwrap(), 100);
        assert!(matches!(wrong_stage, Err(Error::Precondition(_))));
    }

    #[test]
    fn lift_refuses_rank_one() {
        let p = StaircaseParams::constant(2);
        let mut g = Construction::new(p.clone()).unwrap().geometry(0).unwrap().as_ref().clone();
        g.rank = 1;
        g.spacers = vec![0];
        g.offsets = vec![BigUint::zero()];
        let err = lift_level_set(&LevelSet::explicit_base(&p), &g, 100).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn measure_of_level_set_is_constant() {
        let p = StaircaseParams::power(0.5).with_base(2, 3);
        let c = Construction::new(p.clone()).unwrap();
        let mu = c.level_set_measure().unwrap();
        let mut ls = LevelSet::explicit_base(&p);
        for j in 2..12 {
            let g = c.geometry(j).unwrap();
            let n = BigRational::from_integer(ls.explicit().unwrap().len().into());
            assert_eq!(&g.width * n, mu);
            assert_eq!(ls.len(&c).unwrap(), c.level_count(j).unwrap());
            ls = lift_level_set(&ls, &g, DEFAULT_LEVEL_CAP).unwrap();
        }
    }

    #[test]
    fn total_measure_constant_two() {
        let c = Construction::new(StaircaseParams::constant(2)).unwrap();
        let two = BigRational::from_integer(2.into());
        for j in 0..10 {
            let e = total_measure(&c, j).unwrap();
            let expected_lo = BigRational::new(((1i64 << (j + 1)) - 1).into(), (1i64 << j).into());
            assert_eq!(e.lo(), &expected_lo);
            assert_eq!(e.hi(), &two);
        }
        assert_eq!(total_measure(&c, 0).unwrap().lo(), &BigRational::one());
    }

    #[test]
    fn total_measure_bounds_every_tower() {
        let c = Construction::new(StaircaseParams::power(0.5)).unwrap();
        let outer = total_measure(&c, 0).unwrap();
        let mut prev = BigRational::zero();
        for j in 0..40 {
            let g = c.geometry(j).unwrap();
            assert!(g.tower_measure > prev);
            assert!(&g.tower_measure <= outer.hi());
            let e = total_measure(&c, j).unwrap();
            assert!(e.lo() <= e.hi());
            assert!(e.is_subset_of(&outer));
            prev = g.tower_measure.clone();
        }
    }

    #[test]
    fn census_for_square_root_law() {
        let p = StaircaseParams::power(0.5);
        let cen = j_r_census(&p, 1, 50).unwrap();
        assert_eq!(cen.j_r, 6);
        assert_eq!(cen.members, vec![0, 1, 2, 3, 4]);
        assert_eq!(cen.size(), 5);
        let cen2 = j_r_census(&p, 2, 50).unwrap();
        assert_eq!((cen2.plateau_start, cen2.j_r), (7, 12));
        assert_eq!(cen2.members, vec![7, 8, 9]);
        assert!(matches!(
            j_r_census(&p, 2, 12),
            Err(Error::CensusIncomplete { .. })
        ));
    }

    #[test]
    fn census_rejects_constant_law() {
        let p = StaircaseParams::constant(3);
        assert!(matches!(
            j_r_census(&p, 2, 1000),
            Err(Error::CensusIncomplete { .. })
        ));
    }

    proptest! {
        #[test]
        fn geometry_invariants(d in 0.3f64..1.0, j in 0usize..60) {
            let c = Construction::new(StaircaseParams::power(d)).unwrap();
            let g = c.geometry(j).unwrap();
            let r = g.rank as usize;
            prop_assert!(r >= 2);
            prop_assert!(c.rank(j + 1).unwrap() >= g.rank);
            prop_assert_eq!(g.spacers.len(), r);
            prop_assert_eq!(g.spacers[r - 1], 0);
            for i in 1..=r {
                prop_assert_eq!(g.offset(i), &offset_closed_form(&g.height, i as u64));
                if i < r {
                    prop_assert_eq!(g.spacers[i - 1] as usize, i);
                }
            }
            // The last copy ends the next tower.
            prop_assert_eq!(g.offset(r) + &g.height, c.height(j + 1).unwrap());
            let next_w = c.width(j + 1).unwrap();
            prop_assert_eq!(&g.width / BigRational::from_integer(g.rank.into()), next_w);
        }
    }
}
