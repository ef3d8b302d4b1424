//! Two lowest eigenpairs of a large symmetric operator using only matvecs.
//!
//! Block Krylov iteration with Rayleigh-Ritz extraction: the search space is
//! grown by the residuals of the two lowest Ritz pairs (which spans the same
//! space as block Lanczos), every new direction is re-orthogonalized twice
//! against the whole basis, and once the basis reaches the restart length it
//! is compressed to the lowest half of its Ritz vectors. A block of two start
//! vectors lets a degenerate ground space show up as `E1 = E0`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm, same_level};
use crate::basis::dim;
use crate::builders::seeded_rng;
use crate::error::{Error, Result};
use crate::operator::Operator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    /// Convergence when `‖Hv − θv‖ ≤ tol · max(1, |θ|)` for both pairs.
    pub tol: f64,
    /// Basis size that triggers a thick restart.
    pub restart_len: usize,
    pub max_iterations: usize,
    /// Seed of the start-vector perturbation.
    pub seed: u64,
    /// Size of the random perturbation added to the uniform start vector.
    pub perturbation: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart_len: 48,
            max_iterations: 20_000,
            seed: 0x5eed,
            perturbation: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LowestTwo {
    pub e0: f64,
    pub e1: f64,
    pub v0: Vec<f64>,
    pub v1: Vec<f64>,
    pub residuals: [f64; 2],
    /// Ground space of dimension at least two within the degeneracy tolerance.
    pub degenerate: bool,
    pub iterations: usize,
    pub matvecs: usize,
}

impl LowestTwo {
    pub fn gap(&self) -> f64 {
        self.e1 - self.e0
    }
}

struct Basis<'a> {
    op: &'a Operator,
    v: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    /// Projected matrix `Vᵀ H V`.
    m: Vec<Vec<f64>>,
    matvecs: usize,
}

impl<'a> Basis<'a> {
    fn new(op: &'a Operator) -> Self {
        Self {
            op,
            v: Vec::new(),
            w: Vec::new(),
            m: Vec::new(),
            matvecs: 0,
        }
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    /// Orthogonalizes `x` against the basis (two passes) and appends it.
    /// Returns false when nothing independent is left.
    fn push(&mut self, mut x: Vec<f64>) -> Result<bool> {
        let start = norm(&x);
        if !(start > 0.0 && start.is_finite()) || self.len() >= x.len() {
            return Ok(false);
        }
        for _ in 0..2 {
            for q in &self.v {
                let c = dot(q, &x);
                axpy(-c, q, &mut x);
            }
        }
        let r = norm(&x);
        if r <= 1e-10 * start {
            return Ok(false);
        }
        x.iter_mut().for_each(|e| *e /= r);
        let hx = self.op.apply_real(&x)?;
        self.matvecs += 1;
        let k = self.len();
        let col: Vec<f64> = self.v.iter().map(|q| dot(q, &hx)).collect();
        for (i, c) in col.iter().enumerate() {
            self.m[i].push(*c);
        }
        let mut row = col;
        row.push(dot(&x, &hx));
        self.m.push(row);
        debug_assert_eq!(self.m[k].len(), k + 1);
        self.v.push(x);
        self.w.push(hx);
        Ok(true)
    }

    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let k = self.len();
        let mat = DMatrix::from_fn(k, k, |i, j| 0.5 * (self.m[i][j] + self.m[j][i]));
        let eig = SymmetricEigen::new(mat);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let theta = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let y = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
        (theta, y)
    }

    fn combine(vecs: &[Vec<f64>], coeffs: nalgebra::DVectorView<f64>) -> Vec<f64> {
        let mut out = vec![0.0; vecs[0].len()];
        for (q, &c) in vecs.iter().zip(coeffs.iter()) {
            axpy(c, q, &mut out);
        }
        out
    }

    /// Keeps the `keep` lowest Ritz vectors.
    fn restart(&mut self, theta: &[f64], y: &DMatrix<f64>, keep: usize) {
        let v: Vec<Vec<f64>> = (0..keep).map(|c| Self::combine(&self.v, y.column(c))).collect();
        let w: Vec<Vec<f64>> = (0..keep).map(|c| Self::combine(&self.w, y.column(c))).collect();
        self.m = (0..keep)
            .map(|i| (0..keep).map(|j| if i == j { theta[i] } else { 0.0 }).collect())
            .collect();
        self.v = v;
        self.w = w;
    }
}

fn start_vectors(d: usize, opts: &KrylovOptions) -> [Vec<f64>; 2] {
    let mut rng = seeded_rng(opts.seed);
    let u = (d as f64).sqrt().recip();
    let a = (0..d)
        .map(|_| u * (1.0 + opts.perturbation * rng.gen_range(-1.0..1.0)))
        .collect();
    let b = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    [a, b]
}

/// Two lowest eigenpairs of `op`. `warm` vectors (e.g. from a neighbouring
/// `s`) are used first as start vectors.
pub fn lowest_two(op: &Operator, opts: &KrylovOptions, warm: Option<&[Vec<f64>]>) -> Result<LowestTwo> {
    let d = dim(op.n());
    let restart_len = opts.restart_len.max(6).min(d);
    let keep = (restart_len / 2).max(2);
    let mut basis = Basis::new(op);

    let defaults = start_vectors(d, opts);
    let mut pending: Vec<Vec<f64>> = warm.unwrap_or(&[]).iter().filter(|w| w.len() == d).take(2).cloned().collect();
    for s in defaults {
        if pending.len() < 2 {
            pending.push(s);
        }
    }
    let mut extra_rng = seeded_rng(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut best = f64::INFINITY;

    for iteration in 0..=opts.max_iterations {
        let mut added = 0;
        for x in pending.drain(..) {
            if basis.len() >= restart_len {
                break;
            }
            if basis.push(x)? {
                added += 1;
            }
        }
        if basis.len() < 2 && basis.len() < d {
            // start vectors collapsed; top up with random directions
            let x: Vec<f64> = (0..d).map(|_| extra_rng.gen_range(-1.0..1.0)).collect();
            basis.push(x)?;
            continue;
        }
        let (theta, y) = basis.ritz();
        let mut res = [0.0f64; 2];
        let mut resid_vecs: Vec<Vec<f64>> = Vec::with_capacity(2);
        let mut ritz_vecs: Vec<Vec<f64>> = Vec::with_capacity(2);
        for i in 0..2.min(basis.len()) {
            let u = Basis::combine(&basis.v, y.column(i));
            let mut r = Basis::combine(&basis.w, y.column(i));
            axpy(-theta[i], &u, &mut r);
            res[i] = norm(&r);
            ritz_vecs.push(u);
            resid_vecs.push(r);
        }
        let limit = |i: usize| opts.tol * theta[i].abs().max(1.0);
        let exhausted = basis.len() == d || (added == 0 && iteration > 0 && basis.len() < restart_len);
        if (res[0] <= limit(0) && res[1] <= limit(1)) || basis.len() == d {
            // confirm with explicit matvecs so restarts cannot hide drift
            let mut true_res = [0.0; 2];
            for i in 0..2 {
                let mut hv = op.apply_real(&ritz_vecs[i])?;
                basis.matvecs += 1;
                axpy(-theta[i], &ritz_vecs[i], &mut hv);
                true_res[i] = norm(&hv);
            }
            if (true_res[0] <= limit(0) && true_res[1] <= limit(1)) || basis.len() == d {
                let e0 = theta[0];
                let e1 = theta[1];
                let mut v = ritz_vecs.into_iter();
                return Ok(LowestTwo {
                    e0,
                    e1,
                    v0: v.next().unwrap(),
                    v1: v.next().unwrap(),
                    residuals: true_res,
                    degenerate: same_level(e0, e1),
                    iterations: iteration,
                    matvecs: basis.matvecs,
                });
            }
            // W has drifted from H V; rebuild it
            let kept: Vec<Vec<f64>> = basis.v.clone();
            basis = Basis {
                matvecs: basis.matvecs,
                ..Basis::new(op)
            };
            pending = kept;
            continue;
        }
        best = best.min(res[0].max(res[1]));
        if exhausted {
            // Krylov space is invariant but not converged: inject a fresh direction
            let x: Vec<f64> = (0..d).map(|_| extra_rng.gen_range(-1.0..1.0)).collect();
            pending.push(x);
        }
        for i in 0..2 {
            if res[i] > limit(i) {
                pending.push(std::mem::take(&mut resid_vecs[i]));
            }
        }
        if basis.len() + pending.len() > restart_len {
            basis.restart(&theta, &y, keep.min(basis.len()));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        best_residual: best,
        s: None,
    })
}
