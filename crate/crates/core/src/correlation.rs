//! Pair counts and certified correlation enclosures.
//!
//! For the level set `L_j ⊂ [0, h_j)` of `A` in tower `j`, the pair count
//! `N_j(m) = #{k ∈ L_j : k + m ∈ L_j}` obeys
//!
//! ```text
//! N_{j+1}(m) = Σ_{i,i'} N_j(m + o_i − o_{i'}),
//! ```
//!
//! where only pairs with `|m + o_i − o_{i'}| < h_j` contribute (at most two
//! `i'` per `i`, found by binary search on the sorted offsets). Values are
//! memoized on `(stage, |m|)`.
//!
//! Points of `A` below the top `n` levels of tower `J` are moved by `Tⁿ`
//! inside the tower, so
//!
//! ```text
//! w_J·N_J(n) ≤ c(n) ≤ w_J·(N_J(n) + #(L_J ∩ [h_J − n, h_J))).
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use parking_lot::{Mutex, RwLock};

use crate::construction::{Construction, StageGeometry};
use crate::enclosure::Enclosure;
use crate::numeric::{bigint_from_biguint, pow10};
use crate::{Error, Result};

mod cache;

pub use cache::PairCache;

/// Default number of stages tried past the first stage taller than the shift.
pub const DEFAULT_STAGE_BUDGET: usize = 64;

/// Default enclosure width target relative to `c(0)`: `10⁻⁹`.
pub fn default_relative_eps() -> BigRational {
    pow10(-9)
}

/// A correlation value together with the stage that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrEstimate {
    pub n: BigUint,
    pub enclosure: Enclosure,
    pub stage: usize,
    /// `false` when the stage budget ran out before the width target.
    pub converged: bool,
}

/// Correlations `c(0..=max_shift)` evaluated at one common stage.
///
/// `values[n] = w_J·N_J(n)` is the exact correlation of the stage-`J`
/// approximant (the indicator of `L_J` on ℤ scaled by `w_J`), hence a
/// positive-definite sequence; `enclosures[n]` certifies the true `c(n)`.
#[derive(Clone, Debug)]
pub struct CorrSequence {
    pub stage: usize,
    pub values: Vec<BigRational>,
    pub enclosures: Vec<Enclosure>,
    pub converged: bool,
}

impl CorrSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `c(n)` of the approximant for `|n| ≤ max_shift`.
    pub fn value(&self, n: i64) -> Option<&BigRational> {
        self.values.get(n.unsigned_abs() as usize)
    }

    pub fn max_width(&self) -> BigRational {
        self.enclosures
            .iter()
            .map(Enclosure::width)
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

/// Source of correlation enclosures for symbolic inner products.
pub trait CorrelationOracle: Sync {
    fn correlation(&self, n: &BigInt) -> Result<CorrEstimate>;
}

/// Memo table sizes, for studying how the recursion grows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MemoStats {
    /// `(stage, entries)` for every stage with at least one entry.
    pub per_stage: Vec<(usize, usize)>,
    pub total: usize,
}

type Children = Vec<(BigUint, u64)>;

pub struct CorrelationEngine {
    construction: Arc<Construction>,
    /// `memo[j][|m|] = N_j(m)` for non-trivial arguments.
    memo: RwLock<Vec<HashMap<BigUint, BigUint>>>,
    /// `|L_j|`, indexed by `j − j0`.
    level_counts: RwLock<Vec<BigUint>>,
    cache: Option<Mutex<PairCache>>,
    stage_budget: usize,
}

impl std::fmt::Debug for CorrelationEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorrelationEngine")
            .field("params", self.construction.params())
            .field("memo_entries", &self.memo_stats().total)
            .field("stage_budget", &self.stage_budget)
            .finish()
    }
}

impl CorrelationEngine {
    pub fn new(construction: Arc<Construction>) -> Self {
        CorrelationEngine {
            construction,
            memo: RwLock::new(Vec::new()),
            level_counts: RwLock::new(Vec::new()),
            cache: None,
            stage_budget: DEFAULT_STAGE_BUDGET,
        }
    }

    /// Engine backed by a persistent pair-count cache in `dir`. Records
    /// already on disk are loaded; new ones are appended.
    pub fn with_cache_dir(construction: Arc<Construction>, dir: &std::path::Path) -> Result<Self> {
        let (cache, records) = PairCache::open(dir, construction.params())?;
        let engine = CorrelationEngine {
            cache: Some(Mutex::new(cache)),
            ..CorrelationEngine::new(construction)
        };
        {
            let mut memo = engine.memo.write();
            for (stage, shift, count) in records {
                ensure_len(&mut memo, stage);
                memo[stage].insert(shift, count);
            }
        }
        Ok(engine)
    }

    pub fn with_stage_budget(mut self, budget: usize) -> Self {
        self.stage_budget = budget;
        self
    }

    pub fn stage_budget(&self) -> usize {
        self.stage_budget
    }

    pub fn construction(&self) -> &Arc<Construction> {
        &self.construction
    }

    /// `c(0) = μ(A)`.
    pub fn c0(&self) -> Result<BigRational> {
        self.construction.level_set_measure()
    }

    /// Flushes pending cache records to disk.
    pub fn flush_cache(&self) -> Result<()> {
        if let Some(cache) = &self.cache {
            cache.lock().flush()?;
        }
        Ok(())
    }

    pub fn memo_stats(&self) -> MemoStats {
        let memo = self.memo.read();
        let per_stage: Vec<(usize, usize)> = memo
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_empty())
            .map(|(j, m)| (j, m.len()))
            .collect();
        let total = per_stage.iter().map(|(_, n)| n).sum();
        MemoStats { per_stage, total }
    }

    /// `|L_j|`.
    pub fn level_count(&self, j: usize) -> Result<BigUint> {
        let base = self.construction.base_stage();
        if j < base {
            return Err(Error::BelowBaseStage { stage: j, base });
        }
        let idx = j - base;
        if let Some(v) = self.level_counts.read().get(idx) {
            return Ok(v.clone());
        }
        let mut counts = self.level_counts.write();
        if counts.is_empty() {
            counts.push(BigUint::one());
        }
        while counts.len() <= idx {
            let k = base + counts.len() - 1;
            let next = &counts[counts.len() - 1] * self.construction.rank(k)?;
            counts.push(next);
        }
        Ok(counts[idx].clone())
    }

    /// Value of `N_j(m)` when it needs no recursion.
    fn trivial(&self, j: usize, m: &BigUint, height: &BigUint) -> Result<Option<BigUint>> {
        if m.is_zero() {
            return self.level_count(j).map(Some);
        }
        if m >= height || j == self.construction.base_stage() {
            return Ok(Some(BigUint::zero()));
        }
        Ok(None)
    }

    fn memo_get(&self, j: usize, m: &BigUint) -> Option<BigUint> {
        self.memo.read().get(j).and_then(|t| t.get(m)).cloned()
    }

    /// `N_j(m) = #{k ∈ L_j : k + m ∈ L_j}`.
    pub fn pair_count(&self, j: usize, m: &BigInt) -> Result<BigUint> {
        let base = self.construction.base_stage();
        if j < base {
            return Err(Error::BelowBaseStage { stage: j, base });
        }
        let m = m.magnitude().clone();
        let height = self.construction.height(j)?;
        if let Some(v) = self.trivial(j, &m, &height)? {
            return Ok(v);
        }
        if let Some(v) = self.memo_get(j, &m) {
            return Ok(v);
        }
        self.evaluate(j, m)
    }

    /// Discovers every uncached `(stage, shift)` the recursion needs, then
    /// evaluates them bottom-up so no call stack deeper than one stage is used.
    fn evaluate(&self, top: usize, m: BigUint) -> Result<BigUint> {
        let base = self.construction.base_stage();
        let mut pending: BTreeMap<usize, Vec<(BigUint, Children)>> = BTreeMap::new();
        let mut frontier = vec![m.clone()];
        let mut stage = top;
        while stage > base && !frontier.is_empty() {
            let geom = self.construction.geometry(stage - 1)?;
            let mut next: HashSet<BigUint> = HashSet::new();
            let mut level = Vec::with_capacity(frontier.len());
            for shift in frontier {
                let children = expand(&geom, &shift);
                for (c, _) in &children {
                    if self.trivial(stage - 1, c, &geom.height)?.is_none()
                        && self.memo_get(stage - 1, c).is_none()
                    {
                        next.insert(c.clone());
                    }
                }
                level.push((shift, children));
            }
            pending.insert(stage, level);
            let mut next: Vec<BigUint> = next.into_iter().collect();
            next.sort();
            frontier = next;
            stage -= 1;
        }

        for (&stage, level) in &pending {
            let height = self.construction.height(stage - 1)?;
            let mut values = Vec::with_capacity(level.len());
            for (shift, children) in level {
                let mut total = BigUint::zero();
                for (c, mult) in children {
                    let v = match self.trivial(stage - 1, c, &height)? {
                        Some(v) => v,
                        None => self.memo_get(stage - 1, c).ok_or_else(|| {
                            Error::Precondition(format!(
                                "pair count N_{}({c}) missing during evaluation",
                                stage - 1
                            ))
                        })?,
                    };
                    total += v * *mult;
                }
                values.push((shift.clone(), total));
            }
            {
                let mut memo = self.memo.write();
                ensure_len(&mut memo, stage);
                for (s, v) in &values {
                    memo[stage].insert(s.clone(), v.clone());
                }
            }
            if let Some(cache) = &self.cache {
                cache.lock().append(stage, &values)?;
            }
        }
        self.memo_get(top, &m).ok_or_else(|| {
            Error::Precondition(format!("pair count N_{top}({m}) not produced"))
        })
    }

    /// `#(L_j ∩ [h_j − n, h_j))`, the number of `A`-levels among the top `n`
    /// levels of tower `j`.
    pub fn tail_count(&self, j: usize, n: &BigUint) -> Result<BigUint> {
        let base = self.construction.base_stage();
        if j < base {
            return Err(Error::BelowBaseStage { stage: j, base });
        }
        let mut total = BigUint::zero();
        let mut j = j;
        let mut n = n.clone();
        loop {
            if n.is_zero() {
                return Ok(total);
            }
            let height = self.construction.height(j)?;
            if n >= height {
                return Ok(total + self.level_count(j)?);
            }
            if j == base {
                let level = BigUint::from(self.construction.params().base_level);
                if level + &n >= height {
                    total += 1u32;
                }
                return Ok(total);
            }
            let geom = self.construction.geometry(j - 1)?;
            let top = &height - &n;
            // Copies starting at or above `top` lie entirely in the window.
            let first_full = geom.offsets.partition_point(|o| o < &top);
            let full = geom.offsets.len() - first_full;
            total += self.level_count(j - 1)? * full;
            if first_full == 0 {
                return Ok(total);
            }
            let o = &geom.offsets[first_full - 1];
            let end = o + &geom.height;
            if end <= top {
                // The window starts inside the spacers above that copy.
                return Ok(total);
            }
            n = end - top;
            j -= 1;
        }
    }

    /// Enclosure of `c(n)` read off tower `stage`.
    pub fn enclosure_at(&self, stage: usize, n: &BigUint) -> Result<Enclosure> {
        let c0 = self.c0()?;
        if n.is_zero() {
            return Ok(Enclosure::point(c0));
        }
        let width = self.construction.width(stage)?;
        let pairs = self.pair_count(stage, &bigint_from_biguint(n))?;
        let tail = self.tail_count(stage, n)?;
        let lo = &width * BigRational::from_integer(bigint_from_biguint(&pairs));
        let hi = &lo + &width * BigRational::from_integer(bigint_from_biguint(&tail));
        Ok(Enclosure::new(lo, hi).clamp(&BigRational::zero(), &c0))
    }

    /// Enclosures of `c(n)` at successive stages, starting at the first stage
    /// taller than `n` and stopping once the width is at most `eps` or the
    /// stage budget is spent.
    pub fn correlation_trace(&self, n: &BigInt, eps: &BigRational) -> Result<Vec<CorrEstimate>> {
        let n = n.magnitude().clone();
        let base = self.construction.base_stage();
        if n.is_zero() {
            return Ok(vec![CorrEstimate {
                n,
                enclosure: Enclosure::point(self.c0()?),
                stage: base,
                converged: true,
            }]);
        }
        let start = self.construction.first_stage_above(&n)?;
        let mut trace = Vec::new();
        for stage in start..=start + self.stage_budget {
            let enclosure = self.enclosure_at(stage, &n)?;
            let converged = &enclosure.width() <= eps;
            trace.push(CorrEstimate {
                n: n.clone(),
                enclosure,
                stage,
                converged,
            });
            if converged {
                break;
            }
        }
        Ok(trace)
    }

    /// Enclosure of `c(n) = μ(TⁿA ∩ A)` of width at most `eps`, or the best
    /// available enclosure flagged non-converged.
    pub fn correlation(&self, n: &BigInt, eps: &BigRational) -> Result<CorrEstimate> {
        let n = n.magnitude().clone();
        if n.is_zero() {
            return Ok(CorrEstimate {
                n,
                enclosure: Enclosure::point(self.c0()?),
                stage: self.construction.base_stage(),
                converged: true,
            });
        }
        let start = self.construction.first_stage_above(&n)?;
        let mut last = None;
        for stage in start..=start + self.stage_budget {
            let enclosure = self.enclosure_at(stage, &n)?;
            if &enclosure.width() <= eps {
                return Ok(CorrEstimate {
                    n,
                    enclosure,
                    stage,
                    converged: true,
                });
            }
            last = Some((stage, enclosure));
        }
        let (stage, enclosure) = last.expect("stage range is non-empty");
        Ok(CorrEstimate {
            n,
            enclosure,
            stage,
            converged: false,
        })
    }

    pub fn correlation_u64(&self, n: u64, eps: &BigRational) -> Result<CorrEstimate> {
        self.correlation(&BigInt::from(n), eps)
    }

    /// Enclosure of `c(h_j + i)`.
    pub fn correlation_at_tower_height(
        &self,
        j: usize,
        i: u64,
        eps: &BigRational,
    ) -> Result<CorrEstimate> {
        let n = self.construction.height(j)? + i;
        self.correlation(&bigint_from_biguint(&n), eps)
    }

    /// `c(0..=max_shift)` at the first stage where every enclosure has width
    /// at most `eps`.
    pub fn sequence(&self, max_shift: u64, eps: &BigRational) -> Result<CorrSequence> {
        let top = BigUint::from(max_shift);
        let start = self.construction.first_stage_above(&top)?;
        let mut stage = start;
        let mut converged = false;
        for s in start..=start + self.stage_budget {
            stage = s;
            let width = self.construction.width(s)? * BigRational::from_integer(
                bigint_from_biguint(&self.tail_count(s, &top)?),
            );
            if &width <= eps {
                converged = true;
                break;
            }
        }
        let w = self.construction.width(stage)?;
        let mut values = Vec::with_capacity(max_shift as usize + 1);
        let mut enclosures = Vec::with_capacity(max_shift as usize + 1);
        for n in 0..=max_shift {
            let pairs = self.pair_count(stage, &BigInt::from(n))?;
            values.push(&w * BigRational::from_integer(bigint_from_biguint(&pairs)));
            enclosures.push(self.enclosure_at(stage, &BigUint::from(n))?);
        }
        Ok(CorrSequence {
            stage,
            values,
            enclosures,
            converged,
        })
    }

    /// Oracle view of this engine at a fixed width target.
    pub fn oracle(&self, eps: BigRational) -> EngineOracle<'_> {
        EngineOracle { engine: self, eps }
    }
}

/// Children `(|m − δ|, multiplicity)` at stage `k` of shift `m > 0` at stage
/// `k + 1`, where `δ = o_{i'} − o_i` ranges over copy-offset differences with
/// `|m − δ| < h_k`.
fn expand(geom: &StageGeometry, m: &BigUint) -> Children {
    let h = &geom.height;
    let offs = &geom.offsets;
    let mut out: HashMap<BigUint, u64> = HashMap::new();
    for oa in offs {
        let target = oa + m;
        let first = offs.partition_point(|ob| ob + h <= target);
        let upper = &target + h;
        for ob in offs[first..].iter().take_while(|ob| *ob < &upper) {
            let child = if target >= *ob {
                &target - ob
            } else {
                ob - &target
            };
            *out.entry(child).or_insert(0) += 1;
        }
    }
    let mut v: Children = out.into_iter().collect();
    v.sort();
    v
}

fn ensure_len(memo: &mut Vec<HashMap<BigUint, BigUint>>, stage: usize) {
    if memo.len() <= stage {
        memo.resize_with(stage + 1, HashMap::new);
    }
}

/// [`CorrelationOracle`] over a [`CorrelationEngine`] with a fixed width target.
#[derive(Debug)]
pub struct EngineOracle<'a> {
    engine: &'a CorrelationEngine,
    eps: BigRational,
}

impl CorrelationOracle for EngineOracle<'_> {
    fn correlation(&self, n: &BigInt) -> Result<CorrEstimate> {
        self.engine.correlation(n, &self.eps)
    }
}

impl CorrelationOracle for CorrSequence {
    fn correlation(&self, n: &BigInt) -> Result<CorrEstimate> {
        let idx = usize::try_from(n.magnitude())
            .ok()
            .filter(|&i| i < self.enclosures.len())
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "shift {n} beyond the stored sequence of length {}",
                    self.enclosures.len()
                ))
            })?;
        Ok(CorrEstimate {
            n: n.magnitude().clone(),
            enclosure: self.enclosures[idx].clone(),
            stage: self.stage,
            converged: self.converged,
        })
    }
}

/// Checks `N_{j+1}(m) ≥ r_j·N_j(m)` for `|m| < h_j`.
pub fn diagonal_growth_holds(engine: &CorrelationEngine, j: usize, m: &BigInt) -> Result<bool> {
    let c = engine.construction();
    if m.abs() >= bigint_from_biguint(&c.height(j)?) {
        return Ok(true);
    }
    let lower = engine.pair_count(j, m)? * c.rank(j)?;
    Ok(engine.pair_count(j + 1, m)? >= lower)
}
