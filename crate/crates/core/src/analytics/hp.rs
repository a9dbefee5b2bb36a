//! Fixed-precision binary floats and a cyclic Jacobi eigensolver for
//! symmetric matrices.

use dashu_float::ops::SquareRoot;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use num_bigint::BigInt;
use num_rational::BigRational;

pub type Hp = FBig<HalfEven>;

pub fn hp_int(x: &BigInt, prec: usize) -> Hp {
    let i = IBig::from_le_bytes(&x.to_signed_bytes_le());
    Hp::from(i).with_precision(prec).value()
}

pub fn hp_rational(x: &BigRational, prec: usize) -> Hp {
    hp_int(x.numer(), prec) / hp_int(x.denom(), prec)
}

pub fn hp_zero(prec: usize) -> Hp {
    Hp::ZERO.with_precision(prec).value()
}

pub fn hp_f64(x: &Hp) -> f64 {
    x.to_f64().value()
}

pub fn hp_abs(x: &Hp) -> Hp {
    if x < &Hp::ZERO {
        -x.clone()
    } else {
        x.clone()
    }
}

/// `2^e` at the given precision.
pub fn hp_pow2(e: isize, prec: usize) -> Hp {
    Hp::from_parts(IBig::ONE, e).with_precision(prec).value()
}

pub fn dot(x: &[Hp], y: &[Hp]) -> Hp {
    let mut acc = hp_zero(x.first().map_or(64, |v| v.precision()));
    for (a, b) in x.iter().zip(y) {
        acc += a * b;
    }
    acc
}

pub fn mat_vec(m: &[Vec<Hp>], x: &[Hp]) -> Vec<Hp> {
    m.iter().map(|row| dot(row, x)).collect()
}

/// `A = V diag(λ) Vᵀ`; `vectors[i]` is the unit eigenvector for `values[i]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<Hp>,
    pub vectors: Vec<Vec<Hp>>,
    pub sweeps: usize,
}

/// Cyclic Jacobi with the relative skip test `a_pq² ≤ ε²·|a_pp·a_qq|`,
/// which keeps small eigenvalues of positive definite matrices accurate to
/// working precision relative to their own size.
pub fn jacobi_eigen(mut a: Vec<Vec<Hp>>, prec: usize, max_sweeps: usize) -> SymmetricEigen {
    let n = a.len();
    let one = Hp::ONE.with_precision(prec).value();
    let zero = hp_zero(prec);
    let two = &one + &one;
    let mut v: Vec<Vec<Hp>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { one.clone() } else { zero.clone() }).collect())
        .collect();
    let eps = hp_pow2(-(prec as isize) + 8, prec);
    let eps2 = &eps * &eps;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q].clone();
                if apq == Hp::ZERO {
                    continue;
                }
                let scale = hp_abs(&(&a[p][p] * &a[q][q]));
                if &apq * &apq <= &eps2 * &scale {
                    continue;
                }
                rotated = true;
                let theta = (&a[q][q] - &a[p][p]) / (&two * &apq);
                let root = (&theta * &theta + &one).sqrt();
                let t = if theta >= Hp::ZERO {
                    &one / (&theta + &root)
                } else {
                    -(&one / (&root - &theta))
                };
                let c = &one / (&t * &t + &one).sqrt();
                let s = &t * &c;
                // Columns p and q.
                for row in a.iter_mut() {
                    let akp = row[p].clone();
                    let akq = row[q].clone();
                    row[p] = &c * &akp - &s * &akq;
                    row[q] = &s * &akp + &c * &akq;
                }
                // Rows p and q.
                let (rp, rq) = {
                    let (lo, hi) = a.split_at_mut(q);
                    (&mut lo[p], &mut hi[0])
                };
                for k in 0..n {
                    let apk = rp[k].clone();
                    let aqk = rq[k].clone();
                    rp[k] = &c * &apk - &s * &aqk;
                    rq[k] = &s * &apk + &c * &aqk;
                }
                a[p][q] = zero.clone();
                a[q][p] = zero.clone();
                for row in v.iter_mut() {
                    let vkp = row[p].clone();
                    let vkq = row[q].clone();
                    row[p] = &c * &vkp - &s * &vkq;
                    row[q] = &s * &vkp + &c * &vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let values = (0..n).map(|i| a[i][i].clone()).collect();
    let vectors = (0..n).map(|i| (0..n).map(|k| v[k][i].clone()).collect()).collect();
    SymmetricEigen {
        values,
        vectors,
        sweeps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]], prec: usize) -> Vec<Vec<Hp>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| hp_int(&x.into(), prec)).collect())
            .collect()
    }

    #[test]
    fn eigen_of_small_matrix() {
        let prec = 200;
        let a = m(&[&[2, 1, 0], &[1, 2, 1], &[0, 1, 2]], prec);
        let e = jacobi_eigen(a.clone(), prec, 50);
        let mut vals: Vec<f64> = e.values.iter().map(hp_f64).collect();
        vals.sort_by(f64::total_cmp);
        let s = 2f64.sqrt();
        for (got, want) in vals.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-14);
        }
        // A v = λ v to working precision.
        for (lam, vec) in e.values.iter().zip(&e.vectors) {
            let av = mat_vec(&a, vec);
            for (x, y) in av.iter().zip(vec) {
                let d = hp_f64(&(x - &(lam * y)));
                assert!(d.abs() < 1e-50);
            }
        }
    }

    #[test]
    fn rational_conversion() {
        let x = hp_rational(&BigRational::new(1.into(), 3.into()), 128);
        assert!((hp_f64(&x) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(hp_f64(&hp_int(&BigInt::from(-7), 64)), -7.0);
    }
}
