//! Fejér estimates of the spectral densities with moments `c(n)` (for `σ_f`)
//! and `c(n)²` (for `f ⊗ f` under `T ⊗ T`).

use num_rational::BigRational;

use crate::correlation::CorrSequence;
use crate::error::{Error, Result};
use crate::numeric::rational_to_f64;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDensity {
    pub n: usize,
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    /// Bound on the density error coming from enclosure widths.
    pub width_sigma: f64,
    pub width_sq: f64,
    /// Midpoints of the `c(n)` enclosures.
    pub moments: Vec<BigRational>,
    /// Midpoints of the `c(n)²` enclosures.
    pub moments_sq: Vec<BigRational>,
}

impl SpectralDensity {
    pub fn mean_sigma(&self) -> f64 {
        self.sigma.iter().sum::<f64>() / self.sigma.len() as f64
    }

    pub fn mean_sigma_sq(&self) -> f64 {
        self.sigma_sq.iter().sum::<f64>() / self.sigma_sq.len() as f64
    }
}

/// `F(θ) = m_0 + 2 Σ_{n=1}^{N−1} (1 − n/N) m_n cos nθ` on `θ_k = 2πk/M`.
fn fejer(m: &[f64], grid: usize) -> Vec<f64> {
    let n = m.len() as f64;
    (0..grid)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / grid as f64;
            m.iter()
                .enumerate()
                .map(|(i, &x)| {
                    if i == 0 {
                        x
                    } else {
                        2.0 * (1.0 - i as f64 / n) * x * (i as f64 * theta).cos()
                    }
                })
                .sum()
        })
        .collect()
}

fn fejer_width(w: &[f64]) -> f64 {
    let n = w.len() as f64;
    w.iter()
        .enumerate()
        .map(|(i, &x)| if i == 0 { x } else { 2.0 * (1.0 - i as f64 / n) * x })
        .sum()
}

pub fn spectral_density(seq: &CorrSequence, n: usize, grid: usize) -> Result<SpectralDensity> {
    if n == 0 || grid == 0 {
        return Err(Error::InvalidParams("N and grid size must be positive".into()));
    }
    if seq.enclosures.len() < n {
        return Err(Error::Precondition(format!(
            "need {n} correlations, table has {}",
            seq.enclosures.len()
        )));
    }
    let encs = &seq.enclosures[..n];
    let moments: Vec<BigRational> = encs.iter().map(|e| e.mid()).collect();
    let moments_sq: Vec<BigRational> = encs.iter().map(|e| e.square().mid()).collect();
    let m1: Vec<f64> = moments.iter().map(rational_to_f64).collect();
    let m2: Vec<f64> = moments_sq.iter().map(rational_to_f64).collect();
    let w1: Vec<f64> = encs.iter().map(|e| e.width_f64()).collect();
    let w2: Vec<f64> = encs.iter().map(|e| e.square().width_f64()).collect();
    let theta = (0..grid)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / grid as f64)
        .collect();
    Ok(SpectralDensity {
        n,
        theta,
        sigma: fejer(&m1, grid),
        sigma_sq: fejer(&m2, grid),
        width_sigma: fejer_width(&w1),
        width_sq: fejer_width(&w2),
        moments,
        moments_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enclosure::Enclosure;

    #[test]
    fn mass_and_positivity_for_exact_table() {
        // Autocorrelation of the word 1101 (scaled), a positive definite sequence.
        let vals: Vec<BigRational> = [3, 1, 1, 1, 0, 0, 0, 0]
            .iter()
            .map(|&x| BigRational::new(x.into(), 4.into()))
            .collect();
        let seq = CorrSequence {
            stage: 0,
            enclosures: vals.iter().cloned().map(Enclosure::point).collect(),
            values: vals,
            converged: true,
        };
        let d = spectral_density(&seq, 8, 64).unwrap();
        assert!((d.mean_sigma() - 0.75).abs() < 1e-12);
        assert!(d.sigma.iter().all(|&x| x >= -1e-12));
        assert!(d.sigma_sq.iter().all(|&x| x >= -1e-12));
        assert_eq!(d.width_sigma, 0.0);
    }
}
