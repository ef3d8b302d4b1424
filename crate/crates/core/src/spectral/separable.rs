//! Closed-form spectrum of the separable model, whose Hamiltonian is a sum
//! of commuting single-qubit terms with level spacing `√(1 − 2s + 2s²)`.

use super::{Level, SpectrumResult};
use crate::basis::check_qubits;
use crate::error::{Error, Result};

/// `C(n, k)` as a float, exact for every `n` this crate accepts.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// The single-qubit splitting `√(1 − 2s + 2s²)`.
pub fn separable_gap(s: f64) -> f64 {
    (1.0 - 2.0 * s + 2.0 * s * s).sqrt()
}

pub fn separable_ground_energy(n: usize, s: f64) -> f64 {
    0.5 * n as f64 * (1.0 - separable_gap(s))
}

/// All `n + 1` distinct levels `E_k = E_0 + k·√q` with multiplicity `C(n, k)`.
pub fn separable_closed_form(n: usize, s: f64) -> Result<SpectrumResult> {
    check_qubits(n)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid(format!("s = {s} outside [0, 1]")));
    }
    let q = separable_gap(s);
    let e0 = separable_ground_energy(n, s);
    let levels: Vec<Level> = (0..=n)
        .map(|k| Level {
            energy: e0 + k as f64 * q,
            multiplicity: binomial(n, k) as usize,
        })
        .collect();
    Ok(SpectrumResult {
        eigenvalues: levels.iter().map(|l| l.energy).collect(),
        levels,
        eigenvectors: None,
        residuals: Vec::new(),
        method: "closed-form",
        iterations: 0,
    })
}
