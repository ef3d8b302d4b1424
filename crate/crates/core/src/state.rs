use num_complex::Complex64;

use crate::basis::{check_qubits, dim};
use crate::error::{Error, Result};

/// A (possibly unnormalized) n-qubit state in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != dim(n) {
            return Err(Error::contract(format!(
                "state for {n} qubits needs {} amplitudes, got {}",
                dim(n),
                amps.len()
            )));
        }
        Ok(Self { n, amps })
    }

    pub fn from_real(n: usize, values: &[f64]) -> Result<Self> {
        Self::new(n, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zero(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self {
            n,
            amps: vec![Complex64::default(); dim(n)],
        })
    }

    pub fn basis(n: usize, k: usize) -> Result<Self> {
        let mut s = Self::zero(n)?;
        if k >= s.amps.len() {
            return Err(Error::invalid(format!("basis index {k} out of range")));
        }
        s.amps[k] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// The uniform superposition `2^{-n/2} Σ_k |k⟩`.
    pub fn uniform(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let a = (dim(n) as f64).sqrt().recip();
        Ok(Self {
            n,
            amps: vec![Complex64::new(a, 0.0); dim(n)],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::contract("cannot normalize a zero or non-finite state"));
        }
        let inv = norm.recip();
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨v|self⟩|²` for a real vector `v`.
    pub fn overlap_with_real(&self, v: &[f64]) -> f64 {
        self.amps
            .iter()
            .zip(v)
            .map(|(a, &x)| *a * x)
            .sum::<Complex64>()
            .norm_sqr()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_hits_unit_norm() {
        let mut s = StateVector::from_real(3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        s.normalize().unwrap();
        assert!((s.norm_sqr() - 1.0).abs() <= 1e-12);
        assert!(StateVector::zero(2).unwrap().normalize().is_err());
    }

    #[test]
    fn uniform_state_is_normalized() {
        let u = StateVector::uniform(5).unwrap();
        assert!((u.norm_sqr() - 1.0).abs() < 1e-14);
        let b = StateVector::basis(5, 7).unwrap();
        assert!((u.inner(&b).unwrap().re - (32f64).sqrt().recip()).abs() < 1e-15);
    }

    #[test]
    fn length_is_checked() {
        assert!(StateVector::from_real(2, &[1.0; 3]).is_err());
    }
}
