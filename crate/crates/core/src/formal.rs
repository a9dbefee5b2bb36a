//! Finite rational combinations of `Tᵃf` and `Tᵃf ⊗ Tᵇf`.
//!
//! The Cesàro average `Q_r = (1/r) Σ_{i<r} T^{−i}` and its tensor square
//! are represented by their coefficient maps, which makes identities among
//! them checkable by exact cancellation and reduces inner products to sums
//! of correlation products `c(a − c)·c(b − d)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::correlation::{CorrEstimate, CorrelationOracle};
use crate::enclosure::Enclosure;
use crate::numeric::{parse_rational, rational_string};
use crate::{Error, Result};

/// `Σ_e x(e)·Tᵉf` with no zero coefficients stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FormalVector {
    terms: BTreeMap<BigInt, BigRational>,
}

impl FormalVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// `Tᵉf`.
    pub fn unit(e: impl Into<BigInt>) -> Self {
        let mut v = Self::new();
        v.add_term(e.into(), BigRational::one());
        v
    }

    pub fn add_term(&mut self, e: BigInt, coef: BigRational) {
        add_into(&mut self.terms, e, coef);
    }

    pub fn coeff(&self, e: &BigInt) -> BigRational {
        self.terms.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BigInt, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Tᵏ` applied to the combination.
    pub fn shift(&self, k: &BigInt) -> Self {
        FormalVector {
            terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        let mut out = Self::new();
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * k);
        }
        out
    }
}

impl Add for &FormalVector {
    type Output = FormalVector;
    fn add(self, rhs: &FormalVector) -> FormalVector {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &FormalVector {
    type Output = FormalVector;
    fn sub(self, rhs: &FormalVector) -> FormalVector {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

/// `Σ_{a,b} x(a, b)·Tᵃf ⊗ Tᵇf` with no zero coefficients stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FormalBitensor {
    terms: BTreeMap<(BigInt, BigInt), BigRational>,
}

impl FormalBitensor {
    pub fn new() -> Self {
        Self::default()
    }

    /// `Tᵃf ⊗ Tᵇf`.
    pub fn unit(a: impl Into<BigInt>, b: impl Into<BigInt>) -> Self {
        let mut t = Self::new();
        t.add_term(a.into(), b.into(), BigRational::one());
        t
    }

    pub fn add_term(&mut self, a: BigInt, b: BigInt, coef: BigRational) {
        add_into(&mut self.terms, (a, b), coef);
    }

    pub fn coeff(&self, a: &BigInt, b: &BigInt) -> BigRational {
        self.terms
            .get(&(a.clone(), b.clone()))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(BigInt, BigInt), &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of absolute coefficients.
    pub fn l1_norm(&self) -> BigRational {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// `Δᵏ = (T ⊗ T)ᵏ`, i.e. `(a, b) ↦ (a + k, b + k)`.
    pub fn diagonal_shift(&self, k: &BigInt) -> Self {
        FormalBitensor {
            terms: self
                .terms
                .iter()
                .map(|((a, b), c)| ((a + k, b + k), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        let mut out = Self::new();
        for ((a, b), c) in &self.terms {
            out.add_term(a.clone(), b.clone(), c * k);
        }
        out
    }

    /// One line `a b p/q` per term, in increasing `(a, b)` order.
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        for ((a, b), c) in &self.terms {
            s.push_str(&format!("{a} {b} {}\n", rational_string(c)));
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Config(format!("bitensor dump line {}: `{line}`", k + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [a, b, c] = fields.as_slice() else {
                return Err(bad());
            };
            let a: BigInt = a.parse().map_err(|_| bad())?;
            let b: BigInt = b.parse().map_err(|_| bad())?;
            let c = parse_rational(c).ok_or_else(bad)?;
            out.add_term(a, b, c);
        }
        Ok(out)
    }
}

impl fmt::Display for FormalBitensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|((a, b), c)| format!("{}·(T^{a}f⊗T^{b}f)", rational_string(c)))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl Add for &FormalBitensor {
    type Output = FormalBitensor;
    fn add(self, rhs: &FormalBitensor) -> FormalBitensor {
        let mut out = self.clone();
        for ((a, b), c) in &rhs.terms {
            out.add_term(a.clone(), b.clone(), c.clone());
        }
        out
    }
}

impl Sub for &FormalBitensor {
    type Output = FormalBitensor;
    fn sub(self, rhs: &FormalBitensor) -> FormalBitensor {
        self + &(-rhs)
    }
}

impl Neg for &FormalBitensor {
    type Output = FormalBitensor;
    fn neg(self) -> FormalBitensor {
        self.scale(&-BigRational::one())
    }
}

fn add_into<K: Ord>(map: &mut BTreeMap<K, BigRational>, key: K, coef: BigRational) {
    if coef.is_zero() {
        return;
    }
    let entry = map.entry(key);
    match entry {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(coef);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += coef;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

/// `Q_r Tᵖ f = (1/r) Σ_{i<r} T^{p − i} f`.
pub fn cesaro_vector(r: i64, pre_shift: i64) -> Result<FormalVector> {
    if r <= 0 {
        return Err(Error::Precondition(format!("Cesàro length r = {r} ≤ 0")));
    }
    let w = BigRational::new(1.into(), r.into());
    let mut v = FormalVector::new();
    for i in 0..r {
        v.add_term(BigInt::from(pre_shift - i), w.clone());
    }
    Ok(v)
}

/// `x ⊗ y`.
pub fn tensor(x: &FormalVector, y: &FormalVector) -> FormalBitensor {
    let mut out = FormalBitensor::new();
    for (a, ca) in x.iter() {
        for (b, cb) in y.iter() {
            out.add_term(a.clone(), b.clone(), ca * cb);
        }
    }
    out
}

/// `k²·Δˢ(Q_k Tᵖ f ⊗ Q_k Tᵖ f)`; zero when `k = 0`.
fn weighted_square(k: i64, pre_shift: i64, diag: i64) -> Result<FormalBitensor> {
    if k == 0 {
        return Ok(FormalBitensor::new());
    }
    let q = cesaro_vector(k, pre_shift)?;
    Ok(tensor(&q, &q)
        .scale(&BigRational::from_integer((k * k).into()))
        .diagonal_shift(&diag.into()))
}

/// `Tʳf ⊗ f + f ⊗ Tʳf`.
pub fn identity_lhs(r: i64) -> FormalBitensor {
    &FormalBitensor::unit(r, 0) + &FormalBitensor::unit(0, r)
}

/// Right-hand side of the shift-corrected Cesàro identity:
///
/// ```text
/// (r+1)²Δʳ(Q_{r+1}f)^⊗2 + (r−1)²Δ^{r−2}(Q_{r−1}Tf)^⊗2
///     − r²Δ^{r−1}(Q_r f)^⊗2 − r²Δ^{r−1}(Q_r Tf)^⊗2.
/// ```
///
/// The four terms are indicator squares `[0,r]²`, `[1,r−1]²`, `[0,r−1]²` and
/// `[1,r]²`, whose inclusion–exclusion leaves the corners `(r,0)` and `(0,r)`.
pub fn corrected_identity_rhs(r: i64) -> Result<FormalBitensor> {
    if r < 2 {
        return Err(Error::Precondition(format!("identity needs r ≥ 2, got {r}")));
    }
    let plus = &weighted_square(r + 1, 0, r)? + &weighted_square(r - 1, 1, r - 2)?;
    let minus = &weighted_square(r, 0, r - 1)? + &weighted_square(r, 1, r - 1)?;
    Ok(&plus - &minus)
}

/// LHS − RHS of the shift-corrected identity; empty for every `r ≥ 2`.
pub fn corrected_identity_residual(r: i64) -> Result<FormalBitensor> {
    Ok(&identity_lhs(r) - &corrected_identity_rhs(r)?)
}

/// Right-hand side exactly as typeset, with no diagonal shifts:
/// `r²(Q_r f)^⊗2 + (r−2)²(Q_{r−2}Tf)^⊗2 − (r−1)²(Q_{r−1}f)^⊗2 − (r−1)²(Q_{r−1}Tf)^⊗2`.
pub fn printed_identity_rhs(r: i64) -> Result<FormalBitensor> {
    printed_rhs_with_shifts(r, [0, 0, 0, 0])
}

/// The typeset terms with a diagonal shift per term.
pub fn printed_rhs_with_shifts(r: i64, shifts: [i64; 4]) -> Result<FormalBitensor> {
    if r < 2 {
        return Err(Error::Precondition(format!("identity needs r ≥ 2, got {r}")));
    }
    let plus = &weighted_square(r, 0, shifts[0])? + &weighted_square(r - 2, 1, shifts[1])?;
    let minus = &weighted_square(r - 1, 0, shifts[2])? + &weighted_square(r - 1, 1, shifts[3])?;
    Ok(&plus - &minus)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrintedIdentityReport {
    pub r: i64,
    pub residual: FormalBitensor,
    pub l1_norm: BigRational,
    /// Common diagonal shift of the RHS minimizing the residual l1-norm
    /// over `[−2r, 2r]` (smallest such shift on ties).
    pub best_common_shift: i64,
    pub best_common_l1: BigRational,
}

/// Residual of the identity as typeset, and the best a single common
/// diagonal shift of its right-hand side can do.
pub fn printed_identity_residual(r: i64) -> Result<PrintedIdentityReport> {
    let lhs = identity_lhs(r);
    let rhs = printed_identity_rhs(r)?;
    let residual = &lhs - &rhs;
    let l1_norm = residual.l1_norm();
    let mut best: Option<(i64, BigRational)> = None;
    for s in -2 * r..=2 * r {
        let l1 = (&lhs - &rhs.diagonal_shift(&s.into())).l1_norm();
        if best.as_ref().is_none_or(|(_, b)| &l1 < b) {
            best = Some((s, l1));
        }
    }
    let (best_common_shift, best_common_l1) = best.expect("non-empty shift range");
    Ok(PrintedIdentityReport {
        r,
        residual,
        l1_norm,
        best_common_shift,
        best_common_l1,
    })
}

/// A certified inner product.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerProduct {
    pub value: Enclosure,
    /// `false` if any correlation used was not converged.
    pub converged: bool,
}

/// `⟨x, y⟩ = Σ x(a,b)·y(c,d)·c(a − c)·c(b − d)` in exact interval arithmetic.
///
/// Coefficients are first collected per difference pair `(a − c, b − d)`, so
/// each distinct product of correlation enclosures is formed once.
pub fn bitensor_inner(
    x: &FormalBitensor,
    y: &FormalBitensor,
    corr: &dyn CorrelationOracle,
) -> Result<InnerProduct> {
    let mut by_diff: BTreeMap<(BigInt, BigInt), BigRational> = BTreeMap::new();
    for ((a, b), cx) in x.iter() {
        for ((c, d), cy) in y.iter() {
            add_into(&mut by_diff, (a - c, b - d), cx * cy);
        }
    }
    let mut lookups: HashMap<BigInt, CorrEstimate> = HashMap::new();
    let mut fetch = |n: &BigInt| -> Result<CorrEstimate> {
        let key = n.abs();
        if let Some(e) = lookups.get(&key) {
            return Ok(e.clone());
        }
        let e = corr.correlation(&key)?;
        lookups.insert(key, e.clone());
        Ok(e)
    };
    let mut total = Enclosure::zero();
    let mut converged = true;
    for ((p, q), k) in &by_diff {
        let cp = fetch(p)?;
        let cq = fetch(q)?;
        converged &= cp.converged && cq.converged;
        total = &total + &(&cp.enclosure * &cq.enclosure).scale(k);
    }
    Ok(InnerProduct {
        value: total,
        converged,
    })
}
