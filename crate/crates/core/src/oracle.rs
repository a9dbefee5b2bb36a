//! Slow, obviously-correct ground truth.
//!
//! Nothing here touches the recursive pair counter. Level sets come from
//! concatenating the stage words `B_{j+1} = B_j 0^{s_0} B_j 0^{s_1} … B_j`
//! (with `A` marked in the base word), pair counts from a two-pointer sweep,
//! and correlations from an explicit interval model of `T` on the line.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::construction::{staircase_spacers, StaircaseParams};
use crate::correlation::CorrelationEngine;
use crate::error::{Error, Result};

/// Longest stage word the oracle will build.
pub const DEFAULT_WORD_CAP: u64 = 1 << 28;

/// Stage word with `true` at the levels belonging to `A`.
fn stage_word(params: &StaircaseParams, j: usize, cap: u64) -> Result<Vec<bool>> {
    params.validate()?;
    let j0 = params.base_stage;
    if j < j0 {
        return Err(Error::BelowBaseStage {
            stage: j,
            base: j0,
        });
    }
    // Height of the base tower, from the words themselves.
    let mut len: u64 = 1;
    for k in 0..j0 {
        let r = u64::from(params.rank(k)?);
        len = len * r + r * (r - 1) / 2;
    }
    if params.base_level >= len {
        return Err(Error::Precondition(format!(
            "base level {} outside tower of height {len}",
            params.base_level
        )));
    }
    let mut word = vec![false; len as usize];
    word[params.base_level as usize] = true;
    for k in j0..j {
        let r = params.rank(k)?;
        let spacers = staircase_spacers(r);
        let next = word.len() as u64 * u64::from(r) + spacers.iter().map(|&s| u64::from(s)).sum::<u64>();
        if next > cap {
            return Err(Error::CapExceeded {
                size: next.to_string(),
                cap,
            });
        }
        let mut out = Vec::with_capacity(next as usize);
        for &s in &spacers {
            out.extend_from_slice(&word);
            out.extend(std::iter::repeat_n(false, s as usize));
        }
        word = out;
    }
    Ok(word)
}

/// Sorted positions of `A` in tower `j`, read off the stage word.
pub fn enumerate_level_set(params: &StaircaseParams, j: usize, cap: u64) -> Result<Vec<u64>> {
    let word = stage_word(params, j, cap)?;
    Ok(word
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect())
}

/// `#{k ∈ L : k + m ∈ L}` by a two-pointer sweep over sorted positions.
pub fn brute_pair_count(positions: &[u64], m: i64) -> u64 {
    let m = m.unsigned_abs();
    let mut count = 0;
    let mut hi = 0;
    for &p in positions {
        let target = p + m;
        while hi < positions.len() && positions[hi] < target {
            hi += 1;
        }
        if hi == positions.len() {
            break;
        }
        if positions[hi] == target {
            count += 1;
        }
    }
    count
}

/// Tower `j` realized on the line. Level `k` is the interval
/// `[starts[k]·u, (starts[k] + 1)·u)` with `u = w_j`; spacers added at stage
/// `k` sit to the right of everything built before them.
#[derive(Clone, Debug)]
pub struct IntervalMapStage {
    pub stage: usize,
    unit: BigRational,
    starts: Vec<u64>,
    /// `A` as a half-open interval `[a_lo, a_hi)` in units of `w_j`.
    a_lo: u64,
    a_hi: u64,
}

impl IntervalMapStage {
    pub fn build(params: &StaircaseParams, j: usize, cap: u64) -> Result<Self> {
        params.validate()?;
        let j0 = params.base_stage;
        if j < j0 {
            return Err(Error::BelowBaseStage {
                stage: j,
                base: j0,
            });
        }
        let overflow = || Error::Precondition("interval model exceeds 64-bit coordinates".into());
        let mut starts: Vec<u64> = vec![0];
        let mut end: u64 = 1;
        let mut unit = BigRational::one();
        let mut a = None;
        for k in 0..j {
            if k == j0 {
                let s = *starts.get(params.base_level as usize).ok_or_else(|| {
                    Error::Precondition(format!(
                        "base level {} outside tower of height {}",
                        params.base_level,
                        starts.len()
                    ))
                })?;
                a = Some((s, s + 1));
            }
            let r = u64::from(params.rank(k)?);
            let spacers = staircase_spacers(r as u32);
            let next = starts.len() as u64 * r + r * (r - 1) / 2;
            if next > cap {
                return Err(Error::CapExceeded {
                    size: next.to_string(),
                    cap,
                });
            }
            end = end.checked_mul(r).ok_or_else(overflow)?;
            let mut out = Vec::with_capacity(next as usize);
            for (i, &s) in spacers.iter().enumerate() {
                out.extend(starts.iter().map(|&x| x * r + i as u64));
                for _ in 0..s {
                    out.push(end);
                    end += 1;
                }
            }
            starts = out;
            unit /= BigRational::from_integer(BigInt::from(r));
            if let Some((lo, hi)) = a.as_mut() {
                *lo = lo.checked_mul(r).ok_or_else(overflow)?;
                *hi = hi.checked_mul(r).ok_or_else(overflow)?;
            }
        }
        let (a_lo, a_hi) = match a {
            Some(v) => v,
            None => {
                let s = starts[params.base_level as usize];
                (s, s + 1)
            }
        };
        Ok(Self {
            stage: j,
            unit,
            starts,
            a_lo,
            a_hi,
        })
    }

    pub fn height(&self) -> u64 {
        self.starts.len() as u64
    }

    /// `w_j`.
    pub fn unit(&self) -> &BigRational {
        &self.unit
    }

    /// Source interval and translation of `T` on level `k < h_j − 1`.
    pub fn piece(&self, k: usize) -> ((BigRational, BigRational), BigRational) {
        let at = |x: u64| BigRational::from_integer(x.into()) * &self.unit;
        let s = self.starts[k];
        let shift = BigInt::from(self.starts[k + 1]) - BigInt::from(s);
        (
            (at(s), at(s + 1)),
            BigRational::from_integer(shift) * &self.unit,
        )
    }

    /// All pieces of `T` on the tower minus its top level.
    pub fn pieces(&self) -> impl Iterator<Item = ((BigRational, BigRational), BigRational)> + '_ {
        (0..self.starts.len().saturating_sub(1)).map(|k| self.piece(k))
    }

    /// Images of the pieces are pairwise disjoint and the mapped measure is
    /// `(h_j − 1)·w_j`.
    pub fn check_invariants(&self) -> Result<()> {
        let mut images: Vec<u64> = self.starts[1..].to_vec();
        images.sort_unstable();
        if images.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition(format!(
                "overlapping images at stage {}",
                self.stage
            )));
        }
        let mut sources: Vec<u64> = self.starts.clone();
        sources.sort_unstable();
        if sources.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Precondition(format!(
                "overlapping levels at stage {}",
                self.stage
            )));
        }
        Ok(())
    }

    /// Exact `Σ_{pieces} |source|`.
    pub fn mapped_measure(&self) -> BigRational {
        self.pieces().map(|((a, b), _)| b - a).fold(BigRational::zero(), |s, x| s + x)
    }

    fn in_a(&self, start: u64) -> bool {
        self.a_lo <= start && start < self.a_hi
    }

    /// Levels of tower `j` lying inside `A`, found geometrically.
    pub fn levels_in_a(&self) -> Vec<usize> {
        (0..self.starts.len())
            .filter(|&k| self.in_a(self.starts[k]))
            .collect()
    }

    /// Pushes `A` forward `n` steps inside the tower and measures what lands
    /// back in `A`.
    pub fn simulate(&self, n: u64, a_levels: &[usize]) -> SimulatedMeasure {
        let h = self.starts.len() as u64;
        let mut inside = 0u64;
        let mut escaped = 0u64;
        for &k in a_levels {
            let target = k as u64 + n;
            if target >= h {
                escaped += 1;
            } else if self.in_a(self.starts[target as usize]) {
                inside += 1;
            }
        }
        let scale = |c: u64| BigRational::from_integer(c.into()) * &self.unit;
        SimulatedMeasure {
            value: scale(inside),
            escaped: scale(escaped),
            partial: escaped > 0,
        }
    }
}

/// Outcome of [`simulate_measure`].
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedMeasure {
    /// Exact measure of the part of `TⁿA ∩ A` resolved inside the tower.
    pub value: BigRational,
    /// Measure of `A` pushed past the top of the tower.
    pub escaped: BigRational,
    pub partial: bool,
}

/// Lower bound of `c(n)` from the interval model of tower `j`.
pub fn simulate_measure(params: &StaircaseParams, n: u64, j: usize, cap: u64) -> Result<SimulatedMeasure> {
    let stage = IntervalMapStage::build(params, j, cap)?;
    let a = stage.levels_in_a();
    Ok(stage.simulate(n, &a))
}

/// One sampled shift compared across engine, brute force and interval model.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub stage: usize,
    pub shift: u64,
    pub engine: u64,
    pub brute: u64,
    pub simulated: BigRational,
    /// Lower endpoint of the engine enclosure at this stage.
    pub lower: BigRational,
}

impl OracleRow {
    pub fn matches(&self) -> bool {
        self.engine == self.brute && self.simulated == self.lower
    }
}

/// `count` shifts in `[0, h)` from a generator seeded by `(seed, stage)`,
/// always including `0` and `h − 1`.
pub fn sample_shifts(seed: u64, stage: usize, h: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (stage as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut out = vec![0, h.saturating_sub(1)];
    while out.len() < count.max(2) {
        out.push(rng.gen_range(0..h.max(1)));
    }
    out.truncate(count.max(1));
    out
}

/// Compares the engine with the oracle at stage `j` on the given shifts.
pub fn compare_stage(
    engine: &CorrelationEngine,
    j: usize,
    shifts: &[u64],
    cap: u64,
) -> Result<Vec<OracleRow>> {
    let params = engine.construction().params();
    let positions = enumerate_level_set(params, j, cap)?;
    let model = IntervalMapStage::build(params, j, cap)?;
    let a = model.levels_in_a();
    shifts
        .iter()
        .map(|&m| {
            let engine_count = engine
                .pair_count(j, &BigInt::from(m))?
                .to_u64()
                .ok_or_else(|| Error::Precondition("pair count beyond u64".into()))?;
            let lower = if m < model.height() {
                engine.enclosure_at(j, &m.into())?.lo().clone()
            } else {
                BigRational::zero()
            };
            Ok(OracleRow {
                stage: j,
                shift: m,
                engine: engine_count,
                brute: brute_pair_count(&positions, m as i64),
                simulated: model.simulate(m, &a).value,
                lower,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{lift_level_set, Construction, LevelSet};

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn constant_two_level_set() {
        let p = StaircaseParams::constant(2);
        assert_eq!(enumerate_level_set(&p, 2, 1 << 20).unwrap(), vec![0, 2, 4, 6]);
        assert_eq!(enumerate_level_set(&p, 0, 1 << 20).unwrap(), vec![0]);
    }

    #[test]
    fn matches_iterated_lift() {
        let p = StaircaseParams::power(0.5).with_base(1, 1);
        let c = Construction::new(p.clone()).unwrap();
        let mut ls = LevelSet::explicit_base(&p);
        for j in 1..9 {
            assert_eq!(enumerate_level_set(&p, j, 1 << 24).unwrap(), ls.explicit().unwrap());
            ls = lift_level_set(&ls, &c.geometry(j).unwrap(), 1 << 24).unwrap();
        }
        assert_eq!(ls.explicit().unwrap().len() as u64, {
            let mut n = 1u64;
            for k in 1..9 {
                n *= u64::from(p.rank(k).unwrap());
            }
            n
        });
    }

    #[test]
    fn pair_count_examples() {
        let l = [0, 2, 4, 6];
        assert_eq!(brute_pair_count(&l, 2), 3);
        assert_eq!(brute_pair_count(&l, -2), 3);
        assert_eq!(brute_pair_count(&l, 0), 4);
        assert_eq!(brute_pair_count(&l, 7), 0);
    }

    #[test]
    fn word_cap_is_enforced() {
        let p = StaircaseParams::constant(3);
        assert!(matches!(
            enumerate_level_set(&p, 12, 1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn interval_model_constant_two() {
        let p = StaircaseParams::constant(2);
        let s = IntervalMapStage::build(&p, 2, 1 << 20).unwrap();
        assert_eq!(s.height(), 7);
        assert_eq!(s.unit(), &q(1, 4));
        s.check_invariants().unwrap();
        assert_eq!(s.mapped_measure(), q(6, 4));
        let m = simulate_measure(&p, 2, 2, 1 << 20).unwrap();
        assert_eq!(m.value, q(3, 4));
        assert!(m.partial);
        let far = simulate_measure(&p, 7, 2, 1 << 20).unwrap();
        assert_eq!(far.value, BigRational::zero());
        assert_eq!(far.escaped, q(1, 1));
        assert!(far.partial);
    }

    #[test]
    fn engine_agrees_on_small_stages() {
        use crate::construction::Construction;
        use std::sync::Arc;
        let p = StaircaseParams::power(0.5);
        let e = CorrelationEngine::new(Arc::new(Construction::new(p).unwrap()));
        for j in 0..9 {
            let h = e.construction().height(j).unwrap().to_u64().unwrap();
            let shifts = sample_shifts(7, j, h, 20);
            assert_eq!(shifts, sample_shifts(7, j, h, 20));
            for row in compare_stage(&e, j, &shifts, 1 << 24).unwrap() {
                assert!(row.matches(), "{row:?}");
            }
        }
    }

    #[test]
    fn levels_in_a_match_word() {
        let p = StaircaseParams::power(0.5).with_base(2, 2);
        for j in 2..8 {
            let s = IntervalMapStage::build(&p, j, 1 << 24).unwrap();
            s.check_invariants().unwrap();
            let levels: Vec<u64> = s.levels_in_a().into_iter().map(|k| k as u64).collect();
            assert_eq!(levels, enumerate_level_set(&p, j, 1 << 24).unwrap());
        }
    }
}
