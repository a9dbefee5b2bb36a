//! Distance from `v = Tʳf ⊗ f + f ⊗ Tʳf` to `span{(T⊗T)ᵏ(f⊗f) : |k| ≤ N}`.
//!
//! The Gram matrix `G_kl = c(k − l)²`, the right-hand side
//! `b_k = ⟨v, u_k⟩ = 2c(k)c(r − k)` and `‖v‖² = 2c(0)² + 2c(r)²` are built
//! from one exact correlation table (a fixed tower stage), so every matrix is
//! the Gram matrix of actual vectors and the subspaces are nested in `N`.
//! The coefficients `a` come from a truncated eigen-solve; `ρ²` is then
//! evaluated as `‖v − Σ a_k u_k‖² = ‖v‖² − 2aᵀb + aᵀGa`, the squared
//! distance to one particular element of the span, hence an upper bound on
//! the true distance whatever the solver error.

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use super::hp::{dot, hp_abs, hp_f64, hp_pow2, hp_rational, hp_zero, jacobi_eigen, mat_vec, Hp, SymmetricEigen};
use crate::correlation::{CorrSequence, CorrelationEngine};
use crate::error::{Error, Result};
use crate::numeric::rational_to_f64;

pub const DEFAULT_PRECISION_BITS: usize = 256;
/// Exact rational solves are run up to this `N`.
pub const EXACT_CHECK_MAX_N: usize = 16;
const MAX_SWEEPS: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceReport {
    pub r: u64,
    pub n: usize,
    pub rho_sq: f64,
    /// `ρ² / ‖v‖²`.
    pub relative: f64,
    /// Exact least-squares `ρ²` for small `N`.
    pub rho_sq_exact: Option<f64>,
    /// `λ_max / λ_min` over the full spectrum.
    pub gram_condition: f64,
    /// `|aᵀ(Ga − b)|`.
    pub solver_residual: f64,
    pub precision_bits: usize,
    /// Eigenvalues kept above the cutoff `λ_max·2^{−precision/4}`.
    pub effective_rank: usize,
    /// Tower stage the correlation table was read from.
    pub stage: usize,
}

/// Eigen-decomposed Gram matrix for one `N`, reusable across `r`.
pub struct GramSolver {
    n: usize,
    prec: usize,
    stage: usize,
    c: Vec<BigRational>,
    gram: Vec<Vec<Hp>>,
    eig: SymmetricEigen,
    kept: Vec<usize>,
    condition: f64,
}

impl GramSolver {
    pub fn new(seq: &CorrSequence, n: usize, prec: usize) -> Result<Self> {
        if seq.values.len() < 2 * n + 1 {
            return Err(Error::Precondition(format!(
                "correlation table of length {} too short for N = {n}",
                seq.values.len()
            )));
        }
        if prec < 64 {
            return Err(Error::InvalidParams(format!("precision {prec} below 64 bits")));
        }
        let c = seq.values.clone();
        let dim = 2 * n + 1;
        let sq: Vec<Hp> = (0..dim).map(|d| hp_rational(&(&c[d] * &c[d]), prec)).collect();
        let gram: Vec<Vec<Hp>> = (0..dim)
            .map(|k| (0..dim).map(|l| sq[k.abs_diff(l)].clone()).collect())
            .collect();
        let eig = jacobi_eigen(gram.clone(), prec, MAX_SWEEPS);
        let lmax = eig
            .values
            .iter()
            .cloned()
            .fold(hp_zero(prec), |m, x| if x > m { x } else { m });
        let lmin = eig
            .values
            .iter()
            .cloned()
            .fold(lmax.clone(), |m, x| if x < m { x } else { m });
        let cutoff = &lmax * &hp_pow2(-(prec as isize) / 4, prec);
        let kept: Vec<usize> = (0..dim).filter(|&i| eig.values[i] > cutoff).collect();
        let condition = if lmin > Hp::ZERO {
            hp_f64(&(&lmax / &lmin))
        } else {
            f64::INFINITY
        };
        Ok(Self {
            n,
            prec,
            stage: seq.stage,
            c,
            gram,
            eig,
            kept,
            condition,
        })
    }

    fn corr(&self, m: i64) -> Result<&BigRational> {
        self.c.get(m.unsigned_abs() as usize).ok_or_else(|| {
            Error::Precondition(format!("correlation table lacks shift {m}"))
        })
    }

    /// `(b, ‖v‖²)` as exact rationals.
    fn target(&self, r: u64) -> Result<(Vec<BigRational>, BigRational)> {
        let n = self.n as i64;
        let r = r as i64;
        let two = BigRational::from_integer(2.into());
        let b = (-n..=n)
            .map(|k| Ok(&two * self.corr(k)? * self.corr(r - k)?))
            .collect::<Result<Vec<_>>>()?;
        let c0 = self.corr(0)?;
        let cr = self.corr(r)?;
        let norm = &two * (c0 * c0 + cr * cr);
        Ok((b, norm))
    }

    pub fn distance(&self, r: u64) -> Result<DistanceReport> {
        let (b, norm) = self.target(r)?;
        let prec = self.prec;
        let bh: Vec<Hp> = b.iter().map(|x| hp_rational(x, prec)).collect();
        let mut a: Vec<Hp> = vec![hp_zero(prec); bh.len()];
        for &i in &self.kept {
            let v = &self.eig.vectors[i];
            let coef = dot(v, &bh) / &self.eig.values[i];
            for (ak, vk) in a.iter_mut().zip(v) {
                *ak += &coef * vk;
            }
        }
        let ga = mat_vec(&self.gram, &a);
        let atb = dot(&a, &bh);
        let atga = dot(&a, &ga);
        let two = hp_rational(&BigRational::from_integer(2.into()), prec);
        let normh = hp_rational(&norm, prec);
        let rho_sq = &normh - &(&two * &atb) + &atga;
        let resid = hp_abs(&(&atga - &atb));
        let rho_sq_exact = if self.n <= EXACT_CHECK_MAX_N {
            Some(rational_to_f64(&exact_rho_sq(&self.c, r, self.n)?))
        } else {
            None
        };
        let rho = hp_f64(&rho_sq);
        let norm_f = rational_to_f64(&norm);
        Ok(DistanceReport {
            r,
            n: self.n,
            rho_sq: rho,
            relative: if norm_f > 0.0 { rho / norm_f } else { 0.0 },
            rho_sq_exact,
            gram_condition: self.condition,
            solver_residual: hp_f64(&resid),
            precision_bits: prec,
            effective_rank: self.kept.len(),
            stage: self.stage,
        })
    }
}

/// Exact `‖v‖² − bᵀG⁻¹b` by rational elimination. `G` must be nonsingular.
pub fn exact_rho_sq(c: &[BigRational], r: u64, n: usize) -> Result<BigRational> {
    let dim = 2 * n + 1;
    let need = (2 * n).max(n + r as usize);
    if c.len() <= need {
        return Err(Error::Precondition(format!(
            "correlation table of length {} too short",
            c.len()
        )));
    }
    let at = |m: i64| &c[m.unsigned_abs() as usize];
    let two = BigRational::from_integer(2.into());
    let (ni, ri) = (n as i64, r as i64);
    let mut m: Vec<Vec<BigRational>> = (0..dim)
        .map(|k| {
            let mut row: Vec<BigRational> = (0..dim)
                .map(|l| {
                    let x = at(k as i64 - l as i64);
                    x * x
                })
                .collect();
            let kk = k as i64 - ni;
            row.push(&two * at(kk) * at(ri - kk));
            row
        })
        .collect();
    let b: Vec<BigRational> = m.iter().map(|row| row[dim].clone()).collect();
    for col in 0..dim {
        let piv = (col..dim)
            .find(|&i| !m[i][col].is_zero())
            .ok_or_else(|| Error::Precondition("singular Gram matrix".into()))?;
        m.swap(col, piv);
        let inv = m[col][col].recip();
        for x in m[col].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[col].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == col || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= &f * p;
            }
        }
    }
    let btx = (0..dim).fold(BigRational::zero(), |acc, i| acc + &b[i] * &m[i][dim]);
    let c0 = at(0);
    let cr = at(ri);
    Ok(&two * (c0 * c0 + cr * cr) - btx)
}

/// Correlation table long enough for every `(r, N)` in the grid.
pub fn distance_table(
    engine: &CorrelationEngine,
    r_max: u64,
    n_max: usize,
    eps: &BigRational,
) -> Result<CorrSequence> {
    let len = (2 * n_max as u64).max(n_max as u64 + r_max);
    engine.sequence(len, eps)
}

/// One `(r, N)` point.
pub fn cyclic_distance(
    engine: &CorrelationEngine,
    r: u64,
    n: usize,
    precision_bits: usize,
    eps: &BigRational,
) -> Result<DistanceReport> {
    let table = distance_table(engine, r, n, eps)?;
    GramSolver::new(&table, n, precision_bits)?.distance(r)
}

/// Every `(r, N)` pair from one shared table, ordered by `(r, N)`.
pub fn distance_grid(
    engine: &CorrelationEngine,
    rs: &[u64],
    ns: &[usize],
    precision_bits: usize,
    eps: &BigRational,
) -> Result<Vec<DistanceReport>> {
    let r_max = rs.iter().copied().max().unwrap_or(0);
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let table = distance_table(engine, r_max, n_max, eps)?;
    let mut out: Vec<DistanceReport> = ns
        .par_iter()
        .map(|&n| {
            let solver = GramSolver::new(&table, n, precision_bits)?;
            rs.iter().map(|&r| solver.distance(r)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    out.sort_by_key(|d| (d.r, d.n));
    Ok(out)
}

/// `ρ²(r, N)` is nonincreasing along `reports` (sorted by `N`) up to the
/// larger solver residual of each consecutive pair.
pub fn is_nonincreasing(reports: &[DistanceReport]) -> bool {
    reports.windows(2).all(|w| {
        let slack = w[0].solver_residual.max(w[1].solver_residual);
        w[1].rho_sq <= w[0].rho_sq + slack
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enclosure::Enclosure;

    fn table(vals: &[BigRational]) -> CorrSequence {
        CorrSequence {
            stage: 0,
            values: vals.to_vec(),
            enclosures: vals.iter().cloned().map(Enclosure::point).collect(),
            converged: true,
        }
    }

    /// Autocorrelation of a 0/1 word, a positive definite sequence.
    fn word_table(word: &[u8], len: usize) -> Vec<BigRational> {
        (0..len)
            .map(|m| {
                let n = (0..word.len())
                    .filter(|&k| k + m < word.len() && word[k] == 1 && word[k + m] == 1)
                    .count();
                BigRational::new((n as i64).into(), 64.into())
            })
            .collect()
    }

    #[test]
    fn r_zero_is_in_the_span() {
        let w = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0, 0, 0, 1];
        let t = table(&word_table(&w, 20));
        for n in [0, 2, 4] {
            let d = GramSolver::new(&t, n, 256).unwrap().distance(0).unwrap();
            assert!(d.rho_sq.abs() <= 1e-60, "{d:?}");
            assert_eq!(d.rho_sq_exact, Some(0.0));
        }
    }

    #[test]
    fn matches_exact_solve_and_decreases() {
        let w = [1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 1];
        let t = table(&word_table(&w, 24));
        let reports: Vec<DistanceReport> = (0..=6)
            .map(|n| GramSolver::new(&t, n, 256).unwrap().distance(2).unwrap())
            .collect();
        for d in &reports {
            let exact = d.rho_sq_exact.unwrap();
            assert!((d.rho_sq - exact).abs() <= 1e-30 + 1e-12 * exact.abs(), "{d:?}");
            assert!(d.rho_sq >= -d.solver_residual);
        }
        assert!(is_nonincreasing(&reports));
    }

    #[test]
    fn short_table_is_rejected() {
        let t = table(&word_table(&[1, 1], 3));
        assert!(GramSolver::new(&t, 4, 256).is_err());
    }
}
