//! Invariant subspace spanned from the target and the uniform state.
//!
//! For the sign-flipped separable pair with unit couplings, everything stays
//! inside the `n + 1` vectors of fixed Hamming distance to the target, so the
//! spectrum relevant to the ground state comes from a tiny matrix.

use nalgebra::{DMatrix, SymmetricEigen};

use super::sweep::{GapOracle, GapSample};
use super::{axpy, dot, norm};
use crate::basis::dim;
use crate::error::{Error, Result};
use crate::family::InterpolatingFamily;
use crate::operator::Operator;

/// Directions smaller than this (relative to the vector they came from) are
/// treated as already in the span.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ReducedProblem {
    n: usize,
    target: usize,
    /// Orthonormal basis of the closure, one vector per entry.
    basis: Vec<Vec<f64>>,
    h0: DMatrix<f64>,
    h1: DMatrix<f64>,
}

impl ReducedProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// `(1 − s) B^T H0 B + s B^T H1 B`.
    pub fn matrix(&self, s: f64) -> DMatrix<f64> {
        &self.h0 * (1.0 - s) + &self.h1 * s
    }

    /// Ascending eigenvalues of the reduced matrix.
    pub fn eigenvalues(&self, s: f64) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.matrix(s)).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Lifts a reduced coordinate vector back to the full register.
    pub fn lift(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; dim(self.n)];
        for (c, b) in coords.iter().zip(&self.basis) {
            axpy(*c, b, &mut out);
        }
        out
    }
}

impl GapOracle for ReducedProblem {
    fn sample(&mut self, s: f64) -> Result<GapSample> {
        let e = self.eigenvalues(s);
        Ok(GapSample {
            s,
            e0: e[0],
            e1: e[1],
            residual0: 0.0,
            residual1: 0.0,
            degenerate: super::same_level(e[0], e[1]),
        })
    }
}

fn add_direction(basis: &mut Vec<Vec<f64>>, mut w: Vec<f64>) -> bool {
    let scale = norm(&w);
    if scale == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for b in basis.iter() {
            let c = dot(b, &w);
            axpy(-c, b, &mut w);
        }
    }
    let r = norm(&w);
    if r <= RANK_TOL * scale {
        return false;
    }
    w.iter_mut().for_each(|x| *x /= r);
    basis.push(w);
    true
}

fn project(basis: &[Vec<f64>], op: &Operator) -> Result<DMatrix<f64>> {
    let d = basis.len();
    let images = basis.iter().map(|b| op.apply_real(b)).collect::<Result<Vec<_>>>()?;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let x = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    Ok(m)
}

/// Closes `{|t⟩, uniform}` under `H0` and `H1` of the family and projects both
/// onto the resulting orthonormal basis.
///
/// A closure larger than `n + 2` means the family is not of the expected
/// symmetric kind and is reported as [`Error::RankTolerance`].
pub fn reduced_search_subspace(family: &InterpolatingFamily) -> Result<ReducedProblem> {
    let t = family
        .target()
        .ok_or_else(|| Error::invalid("reduction needs a family with a target state"))?;
    let n = family.n();
    let d = dim(n);
    let limit = n + 2;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut seed = vec![0.0; d];
    seed[t.index()] = 1.0;
    add_direction(&mut basis, seed);
    add_direction(&mut basis, vec![1.0 / (d as f64).sqrt(); d]);
    let mut next = 0;
    while next < basis.len() {
        for op in [family.h0(), family.h1()] {
            let w = op.apply_real(&basis[next])?;
            if add_direction(&mut basis, w) && basis.len() > limit {
                return Err(Error::RankTolerance {
                    dim: basis.len(),
                    limit,
                });
            }
        }
        next += 1;
    }
    let h0 = project(&basis, family.h0())?;
    let h1 = project(&basis, family.h1())?;
    log::debug!("reduced {} to dimension {}", family.id(), basis.len());
    Ok(ReducedProblem {
        n,
        target: t.index(),
        basis,
        h0,
        h1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_random_final, gh1_separable_family, RandomFinalSpec, RandomLaw, TargetState};
    use crate::builders::{build_h0, TransverseFieldSpec};
    use crate::spectral::dense::full_diagonalization;

    #[test]
    fn dimension_is_n_plus_one() {
        for n in [3, 6, 9] {
            let fam = gh1_separable_family(TargetState::new(n, 0).unwrap()).unwrap();
            assert_eq!(reduced_search_subspace(&fam).unwrap().dimension(), n + 1);
        }
    }

    #[test]
    fn reduced_spectrum_inside_full() {
        let fam = gh1_separable_family(TargetState::new(8, 0).unwrap()).unwrap();
        let red = reduced_search_subspace(&fam).unwrap();
        let full = full_diagonalization(&fam.at(0.4).unwrap(), false).unwrap().eigenvalues;
        for e in red.eigenvalues(0.4) {
            let closest = full.iter().map(|f| (f - e).abs()).fold(f64::INFINITY, f64::min);
            assert!(closest < 1e-9, "{e} not in the full spectrum");
        }
    }

    #[test]
    fn ground_state_lies_in_subspace() {
        let fam = gh1_separable_family(TargetState::new(6, 0).unwrap()).unwrap();
        let red = reduced_search_subspace(&fam).unwrap();
        let full = full_diagonalization(&fam.at(0.7).unwrap(), true).unwrap();
        assert!((full.eigenvalues[0] - red.eigenvalues(0.7)[0]).abs() < 1e-10);
        let v = full.eigenvectors.unwrap().column(0).iter().copied().collect::<Vec<_>>();
        let captured: f64 = red.basis().iter().map(|b| dot(b, &v).powi(2)).sum();
        assert!((captured - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unstructured_family_is_rejected() {
        let n = 6;
        let t = TargetState::new(n, 5).unwrap();
        let h1 = build_random_final(&RandomFinalSpec { n, seed: 3, law: RandomLaw::UniformInt { lo: 1, hi: 9 } }, Some(t)).unwrap();
        let h0 = build_h0(&TransverseFieldSpec::uniform(n)).unwrap();
        let fam = InterpolatingFamily::new("random", h0, h1).unwrap().with_target(t);
        assert!(matches!(reduced_search_subspace(&fam), Err(Error::RankTolerance { .. })));
    }

    #[test]
    fn needs_target() {
        let fam = crate::builders::build_separable_pair(3).unwrap();
        assert!(reduced_search_subspace(&fam).is_err());
    }
}
