//! Operator representations sharing one matrix-vector contract.
//!
//! Every Hamiltonian in this crate is real symmetric and is stored in one of
//! four forms. `Diagonal` and `Separable` are the structured forms the
//! builders produce; `Sparse` is a general row-compressed matrix; `Sum` is a
//! lazy linear combination that applies each term in turn and is what mixed
//! combinations such as `(1-s) H0 + s H1` become.

use std::ops::{Add, AddAssign, Mul};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{self, check_qubits, dim, stride, MAX_DENSE_QUBITS};
use crate::error::{Error, Result};
use crate::state::StateVector;

/// Element type an operator can act on.
pub trait Amplitude:
    Copy + Default + Send + Sync + Add<Output = Self> + AddAssign + Mul<f64, Output = Self>
{
}

impl Amplitude for f64 {}
impl Amplitude for Complex64 {}

/// Real symmetric single-qubit block `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block2 {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl Block2 {
    pub const IDENTITY: Block2 = Block2 { a: 1.0, b: 0.0, d: 1.0 };
    pub const SIGMA_X: Block2 = Block2 { a: 0.0, b: 1.0, d: 0.0 };
    pub const SIGMA_Z: Block2 = Block2 { a: 1.0, b: 0.0, d: -1.0 };
    pub const ZERO: Block2 = Block2 { a: 0.0, b: 0.0, d: 0.0 };

    pub fn new(a: f64, b: f64, d: f64) -> Self {
        Self { a, b, d }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            a: c * self.a,
            b: c * self.b,
            d: c * self.d,
        }
    }

    pub fn combine(a: f64, x: Block2, b: f64, y: Block2) -> Self {
        Self {
            a: a * x.a + b * y.a,
            b: a * x.b + b * y.b,
            d: a * x.d + b * y.d,
        }
    }

    /// Eigenvalues (ascending) and the matching unit eigenvectors.
    pub fn eigen(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let mean = 0.5 * (self.a + self.d);
        let half = 0.5 * (self.a - self.d);
        let r = half.hypot(self.b);
        let lo = mean - r;
        let hi = mean + r;
        if r == 0.0 {
            return ([lo, hi], [[1.0, 0.0], [0.0, 1.0]]);
        }
        // angle θ with cos 2θ = half / r, sin 2θ = b / r; high eigenvector (cos θ, sin θ)
        let theta = 0.5 * self.b.atan2(half);
        let (s, c) = theta.sin_cos();
        ([lo, hi], [[-s, c], [c, s]])
    }

    #[inline]
    pub fn apply_pair<T: Amplitude>(&self, x0: T, x1: T) -> (T, T) {
        (x0 * self.a + x1 * self.b, x0 * self.b + x1 * self.d)
    }
}

/// Applies the single-qubit map `f` to qubit `j` of `x` in place.
pub fn apply_local<T: Copy>(n: usize, j: usize, x: &mut [T], f: impl Fn(T, T) -> (T, T)) {
    let st = stride(n, j);
    for base in (0..x.len()).step_by(2 * st) {
        for i0 in base..base + st {
            let (u0, u1) = f(x[i0], x[i0 + st]);
            x[i0] = u0;
            x[i0 + st] = u1;
        }
    }
}

/// Applies the tensor product of `blocks` (one per qubit) to `x` in place.
pub fn apply_product<T: Amplitude>(blocks: &[Block2], x: &mut [T]) {
    let n = blocks.len();
    for (j, blk) in blocks.iter().enumerate() {
        apply_local(n, j, x, |a, b| blk.apply_pair(a, b));
    }
}

/// Row-compressed real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; repeated coordinates are summed.
    /// The result must be exactly symmetric.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        if let Some(&(r, c, _)) = sorted.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::contract(format!(
                "entry ({r}, {c}) outside a {dim}x{dim} matrix"
            )));
        }
        sorted.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let m = Self {
            dim,
            row_ptr,
            col_idx,
            values,
        };
        m.check_symmetric()?;
        Ok(m)
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        let row = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[row.clone()].binary_search(&c) {
            Ok(pos) => self.values[row.start + pos],
            Err(_) => 0.0,
        }
    }

    fn check_symmetric(&self) -> Result<()> {
        for r in 0..self.dim {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[p];
                if self.get(c, r) != self.values[p] {
                    return Err(Error::contract(format!(
                        "sparse operator is not symmetric at ({r}, {c})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.col_idx[p], self.values[p]))
        })
    }

    fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub enum Form {
    /// Energy table in basis-index order.
    Diagonal(Vec<f64>),
    /// `Σ_j I ⊗ … ⊗ M_j ⊗ … ⊗ I`, one block per qubit.
    Separable(Vec<Block2>),
    Sparse(CsrMatrix),
    /// Lazy `Σ_i c_i H_i`.
    Sum(Vec<(f64, Operator)>),
}

/// An n-qubit real symmetric operator. Cloning is cheap; data is shared.
#[derive(Debug, Clone)]
pub struct Operator {
    n: usize,
    form: Arc<Form>,
}

impl Operator {
    pub fn diagonal(energies: Vec<f64>) -> Result<Self> {
        let n = basis::qubits_for_len(energies.len())?;
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::contract("diagonal entries must be finite"));
        }
        Ok(Self::from_form(n, Form::Diagonal(energies)))
    }

    pub fn separable(blocks: Vec<Block2>) -> Result<Self> {
        let n = blocks.len();
        check_qubits(n)?;
        if blocks
            .iter()
            .any(|b| !(b.a.is_finite() && b.b.is_finite() && b.d.is_finite()))
        {
            return Err(Error::contract("separable blocks must be finite"));
        }
        Ok(Self::from_form(n, Form::Separable(blocks)))
    }

    pub fn sparse(n: usize, matrix: CsrMatrix) -> Result<Self> {
        check_qubits(n)?;
        if matrix.dim() != dim(n) {
            return Err(Error::contract(format!(
                "sparse matrix of dimension {} for {n} qubits",
                matrix.dim()
            )));
        }
        Ok(Self::from_form(n, Form::Sparse(matrix)))
    }

    fn from_form(n: usize, form: Form) -> Self {
        Self {
            n,
            form: Arc::new(form),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        dim(self.n)
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn form_name(&self) -> &'static str {
        match *self.form {
            Form::Diagonal(_) => "diagonal",
            Form::Separable(_) => "separable",
            Form::Sparse(_) => "sparse",
            Form::Sum(_) => "sum",
        }
    }

    pub fn diagonal_entries(&self) -> Option<&[f64]> {
        match &*self.form {
            Form::Diagonal(e) => Some(e),
            _ => None,
        }
    }

    pub fn blocks(&self) -> Option<&[Block2]> {
        match &*self.form {
            Form::Separable(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(*self.form, Form::Diagonal(_))
    }

    /// `y = H x`. Both slices must have length `2^n`.
    pub fn apply_into<T: Amplitude>(&self, x: &[T], y: &mut [T]) -> Result<()> {
        let d = self.dim();
        if x.len() != d || y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len().max(1).trailing_zeros() as usize,
            });
        }
        self.apply_unchecked(x, y);
        Ok(())
    }

    fn apply_unchecked<T: Amplitude>(&self, x: &[T], y: &mut [T]) {
        match &*self.form {
            Form::Diagonal(e) => {
                for ((yk, &xk), &ek) in y.iter_mut().zip(x).zip(e) {
                    *yk = xk * ek;
                }
            }
            Form::Separable(blocks) => {
                y.fill(T::default());
                let n = self.n;
                for (j, blk) in blocks.iter().enumerate() {
                    let st = stride(n, j);
                    for base in (0..x.len()).step_by(2 * st) {
                        for i0 in base..base + st {
                            let i1 = i0 + st;
                            let (u0, u1) = blk.apply_pair(x[i0], x[i1]);
                            y[i0] += u0;
                            y[i1] += u1;
                        }
                    }
                }
            }
            Form::Sparse(m) => {
                for (r, yr) in y.iter_mut().enumerate() {
                    let mut acc = T::default();
                    for p in m.row_ptr[r]..m.row_ptr[r + 1] {
                        acc += x[m.col_idx[p]] * m.values[p];
                    }
                    *yr = acc;
                }
            }
            Form::Sum(terms) => {
                y.fill(T::default());
                let mut tmp = vec![T::default(); x.len()];
                for (c, op) in terms {
                    op.apply_unchecked(x, &mut tmp);
                    for (yk, &tk) in y.iter_mut().zip(&tmp) {
                        *yk += tk * *c;
                    }
                }
            }
        }
    }

    pub fn apply_real(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    /// `H v` on a state vector.
    pub fn matvec(&self, v: &StateVector) -> Result<StateVector> {
        if v.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.n(),
            });
        }
        let mut out = StateVector::zero(self.n)?;
        self.apply_unchecked(v.amplitudes(), out.amplitudes_mut());
        Ok(out)
    }

    /// `⟨v, H v⟩`.
    pub fn expectation(&self, v: &StateVector) -> Result<Complex64> {
        v.inner(&self.matvec(v)?)
    }

    /// Dense `2^n × 2^n` matrix, refused above [`MAX_DENSE_QUBITS`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::SizeGuard {
                what: "dense materialization",
                n: self.n,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        self.accumulate_dense(1.0, &mut m);
        Ok(m)
    }

    fn accumulate_dense(&self, c: f64, m: &mut DMatrix<f64>) {
        match &*self.form {
            Form::Diagonal(e) => {
                for (k, &ek) in e.iter().enumerate() {
                    m[(k, k)] += c * ek;
                }
            }
            Form::Separable(blocks) => {
                let d = self.dim();
                for (j, blk) in blocks.iter().enumerate() {
                    let st = stride(self.n, j);
                    for base in (0..d).step_by(2 * st) {
                        for i0 in base..base + st {
                            let i1 = i0 + st;
                            m[(i0, i0)] += c * blk.a;
                            m[(i1, i1)] += c * blk.d;
                            m[(i0, i1)] += c * blk.b;
                            m[(i1, i0)] += c * blk.b;
                        }
                    }
                }
            }
            Form::Sparse(s) => {
                for (r, col, v) in s.iter() {
                    m[(r, col)] += c * v;
                }
            }
            Form::Sum(terms) => {
                for (ci, op) in terms {
                    op.accumulate_dense(c * ci, m);
                }
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Operator {
        let form = match &*self.form {
            Form::Diagonal(e) => Form::Diagonal(e.iter().map(|x| c * x).collect()),
            Form::Separable(b) => Form::Separable(b.iter().map(|x| x.scaled(c)).collect()),
            Form::Sparse(s) => Form::Sparse(s.scaled(c)),
            Form::Sum(t) => Form::Sum(t.iter().map(|(ci, op)| (c * ci, op.clone())).collect()),
        };
        Self::from_form(self.n, form)
    }

    /// Separable blocks reproducing this operator, when it is a diagonal
    /// table that is an additive function of the bits.
    pub fn as_separable(&self) -> Option<Vec<Block2>> {
        match &*self.form {
            Form::Separable(b) => Some(b.clone()),
            Form::Diagonal(e) => additive_blocks(self.n, e),
            _ => None,
        }
    }

    fn terms(&self, c: f64) -> Vec<(f64, Operator)> {
        match &*self.form {
            Form::Sum(t) => t.iter().map(|(ci, op)| (c * ci, op.clone())).collect(),
            _ => vec![(c, self.clone())],
        }
    }
}

/// `a·op1 + b·op2`, keeping the structured form whenever both summands allow it.
pub fn linear_combine(a: f64, op1: &Operator, b: f64, op2: &Operator) -> Result<Operator> {
    if op1.n != op2.n {
        return Err(Error::DimensionMismatch {
            expected: op1.n,
            found: op2.n,
        });
    }
    if b == 0.0 {
        return Ok(op1.scaled(a));
    }
    if a == 0.0 {
        return Ok(op2.scaled(b));
    }
    let n = op1.n;
    let form = match (&*op1.form, &*op2.form) {
        (Form::Diagonal(x), Form::Diagonal(y)) => {
            Form::Diagonal(x.iter().zip(y).map(|(u, v)| a * u + b * v).collect())
        }
        (Form::Separable(x), Form::Separable(y)) => Form::Separable(
            x.iter()
                .zip(y)
                .map(|(&u, &v)| Block2::combine(a, u, b, v))
                .collect(),
        ),
        (Form::Separable(x), Form::Diagonal(_)) | (Form::Diagonal(_), Form::Separable(x)) => {
            let other = if op1.is_diagonal() { op1 } else { op2 };
            match other.as_separable() {
                Some(y) => {
                    let (xa, ya) = if op1.is_diagonal() { (b, a) } else { (a, b) };
                    Form::Separable(
                        x.iter()
                            .zip(&y)
                            .map(|(&u, &v)| Block2::combine(xa, u, ya, v))
                            .collect(),
                    )
                }
                None => lazy_sum(op1, a, op2, b),
            }
        }
        _ => lazy_sum(op1, a, op2, b),
    };
    Ok(Operator::from_form(n, form))
}

fn lazy_sum(op1: &Operator, a: f64, op2: &Operator, b: f64) -> Form {
    let mut terms = op1.terms(a);
    terms.extend(op2.terms(b));
    Form::Sum(terms)
}

fn additive_blocks(n: usize, e: &[f64]) -> Option<Vec<Block2>> {
    let base = e[0];
    let deltas: Vec<f64> = (0..n).map(|j| e[stride(n, j)] - base).collect();
    let scale = e.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-13 * scale;
    // predicted[k] = Σ_{set bits} delta, built from k with its lowest set bit cleared
    let mut predicted = vec![0.0; e.len()];
    for k in 1..e.len() {
        let low = k & k.wrapping_neg();
        let j = n - 1 - low.trailing_zeros() as usize;
        predicted[k] = predicted[k & (k - 1)] + deltas[j];
        if (base + predicted[k] - e[k]).abs() > tol {
            return None;
        }
    }
    let mut blocks: Vec<Block2> = deltas.iter().map(|&dj| Block2::new(0.0, 0.0, dj)).collect();
    blocks[0].a += base;
    blocks[0].d += base;
    Some(blocks)
}
