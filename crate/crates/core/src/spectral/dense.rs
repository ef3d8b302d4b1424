//! Exact spectra for registers up to [`MAX_EXACT_DIAG_QUBITS`] qubits.

use nalgebra::DMatrix;

use super::{group_levels, norm, SpectrumResult};
use crate::basis::{dim, stride, MAX_EXACT_DIAG_QUBITS};
use crate::error::{Error, Result};
use crate::operator::{Form, Operator};

fn guard(op: &Operator) -> Result<()> {
    if op.n() > MAX_EXACT_DIAG_QUBITS {
        return Err(Error::SizeGuard {
            what: "exact diagonalization",
            n: op.n(),
            limit: MAX_EXACT_DIAG_QUBITS,
        });
    }
    Ok(())
}

/// All `2^n` eigenvalues, ascending. Diagonal and separable operators are
/// diagonalized structurally; everything else goes through
/// [`full_diagonalization`].
pub fn dense_spectrum(op: &Operator, with_vectors: bool) -> Result<SpectrumResult> {
    guard(op)?;
    match op.form() {
        Form::Diagonal(e) => Ok(diagonal_spectrum(e, with_vectors)),
        Form::Separable(_) => separable_spectrum(op, with_vectors),
        _ => full_diagonalization(op, with_vectors),
    }
}

fn diagonal_spectrum(e: &[f64], with_vectors: bool) -> SpectrumResult {
    let mut order: Vec<usize> = (0..e.len()).collect();
    order.sort_by(|&a, &b| e[a].total_cmp(&e[b]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| e[k]).collect();
    let eigenvectors = with_vectors.then(|| {
        let mut v = DMatrix::zeros(e.len(), e.len());
        for (col, &k) in order.iter().enumerate() {
            v[(k, col)] = 1.0;
        }
        v
    });
    SpectrumResult {
        levels: group_levels(&eigenvalues),
        residuals: if with_vectors { vec![0.0; e.len()] } else { Vec::new() },
        eigenvalues,
        eigenvectors,
        method: "diagonal",
        iterations: 0,
    }
}

/// Sums of single-qubit eigenvalues over every choice of block eigenvector;
/// eigenvectors are the corresponding tensor products.
fn separable_spectrum(op: &Operator, with_vectors: bool) -> Result<SpectrumResult> {
    let blocks = op.blocks().expect("separable form");
    let n = op.n();
    let eig: Vec<_> = blocks.iter().map(|b| b.eigen()).collect();
    let d = dim(n);
    // choice bit j of `c` selects eigenpair of qubit j, using the same MSB layout as indices
    let value = |c: usize| -> f64 {
        (0..n).map(|j| eig[j].0[(c / stride(n, j)) & 1]).sum()
    };
    let mut order: Vec<usize> = (0..d).collect();
    let vals: Vec<f64> = order.iter().map(|&c| value(c)).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&c| vals[c]).collect();
    let eigenvectors = with_vectors.then(|| {
        let mut v = DMatrix::zeros(d, d);
        for (col, &c) in order.iter().enumerate() {
            for k in 0..d {
                let mut amp = 1.0;
                for j in 0..n {
                    let choice = (c / stride(n, j)) & 1;
                    let b = (k / stride(n, j)) & 1;
                    amp *= eig[j].1[choice][b];
                }
                v[(k, col)] = amp;
            }
        }
        v
    });
    let residuals = match &eigenvectors {
        Some(v) => residuals(op, v, &eigenvalues)?,
        None => Vec::new(),
    };
    Ok(SpectrumResult {
        levels: group_levels(&eigenvalues),
        eigenvalues,
        eigenvectors,
        residuals,
        method: "separable",
        iterations: 0,
    })
}

/// Symmetric eigendecomposition of the materialized matrix.
pub fn full_diagonalization(op: &Operator, with_vectors: bool) -> Result<SpectrumResult> {
    guard(op)?;
    let m = op.to_dense()?;
    if !with_vectors {
        let mut vals: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        return Ok(SpectrumResult {
            levels: group_levels(&vals),
            eigenvalues: vals,
            eigenvectors: None,
            residuals: Vec::new(),
            method: "dense",
            iterations: 0,
        });
    }
    let rows = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(rows, order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let residuals = residuals(op, &vecs, &eigenvalues)?;
    Ok(SpectrumResult {
        levels: group_levels(&eigenvalues),
        eigenvalues,
        eigenvectors: Some(vecs),
        residuals,
        method: "dense",
        iterations: 0,
    })
}

fn residuals(op: &Operator, vecs: &DMatrix<f64>, vals: &[f64]) -> Result<Vec<f64>> {
    vals.iter()
        .enumerate()
        .map(|(c, &lam)| {
            let v: Vec<f64> = vecs.column(c).iter().copied().collect();
            let mut hv = op.apply_real(&v)?;
            hv.iter_mut().zip(&v).for_each(|(h, x)| *h -= lam * x);
            Ok(norm(&hv))
        })
        .collect()
}
