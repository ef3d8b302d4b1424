//! Spectra of `H(s)`: exact dense paths, an iterative solver for the two
//! lowest levels, gap sweeps with minimum refinement, the separable model's
//! closed form, reduced invariant subspaces and level-crossing detection.

pub mod compare;
pub mod crossings;
pub mod dense;
pub mod krylov;
pub mod reduced;
pub mod separable;
pub mod sweep;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Relative tolerance under which eigenvalues count as one level.
pub const DEGENERACY_TOL: f64 = 1e-8;

pub fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERACY_TOL * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub multiplicity: usize,
}

/// Groups ascending eigenvalues into distinct levels.
pub fn group_levels(sorted: &[f64]) -> Vec<Level> {
    let mut levels: Vec<Level> = Vec::new();
    let mut anchor = f64::NAN;
    for &e in sorted {
        match levels.last_mut() {
            Some(l) if same_level(anchor, e) => l.multiplicity += 1,
            _ => {
                anchor = e;
                levels.push(Level {
                    energy: e,
                    multiplicity: 1,
                });
            }
        }
    }
    levels
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending eigenvalues, repeated by multiplicity on the dense path.
    /// Closed-form results list each distinct level once.
    pub eigenvalues: Vec<f64>,
    pub levels: Vec<Level>,
    /// Eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: Option<DMatrix<f64>>,
    /// `‖Hv − λv‖` per pair when eigenvectors were computed.
    pub residuals: Vec<f64>,
    pub method: &'static str,
    pub iterations: usize,
}

impl SpectrumResult {
    pub fn total_multiplicity(&self) -> usize {
        self.levels.iter().map(|l| l.multiplicity).sum()
    }

    pub fn multiplicity_near(&self, energy: f64) -> usize {
        self.levels
            .iter()
            .find(|l| same_level(l.energy, energy))
            .map_or(0, |l| l.multiplicity)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
