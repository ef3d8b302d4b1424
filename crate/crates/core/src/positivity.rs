//! Entrywise positivity of `e^{−H(s)}` through product formulas, and sign
//! structure of the ground state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{dim, MAX_EXACT_DIAG_QUBITS};
use crate::error::{Error, Result};
use crate::family::InterpolatingFamily;
use crate::operator::{apply_product, Amplitude, Block2};
use crate::spectral::dense::full_diagonalization;
use crate::spectral::krylov::{lowest_two, KrylovOptions};
use crate::spectral::same_level;
use crate::state::StateVector;

/// Entries at or below this count as non-positive in the matrix check.
pub const MATRIX_TOL: f64 = 1e-14;
/// Amplitudes at or below this count as non-positive in the ground-state check.
pub const VECTOR_TOL: f64 = 1e-12;
/// Largest register for the entrywise matrix check.
pub const MAX_MATRIX_QUBITS: usize = 10;
pub const DEFAULT_STEPS: usize = 64;
pub const MAX_STEPS: usize = 1 << 16;

/// `e^{−τ a [I − σx] / 2}`, equal to `e^{−τa/2} (cosh(τa/2) I + sinh(τa/2) σx)`.
pub fn single_qubit_factor(a: f64, tau: f64) -> Block2 {
    let x = 0.5 * tau * a;
    let damp = (-x).exp();
    Block2::new(damp * x.cosh(), damp * x.sinh(), damp * x.cosh())
}

/// `e^{−τ B}` for a real symmetric 2×2 block.
pub fn block_exp(blk: Block2, tau: f64) -> Block2 {
    let mean = 0.5 * (blk.a + blk.d);
    let half = 0.5 * (blk.a - blk.d);
    let r = half.hypot(blk.b);
    let damp = (-tau * mean).exp();
    let ch = (tau * r).cosh();
    // sinh(τr)/r, continuous at r = 0
    let sh = if r == 0.0 { tau } else { (tau * r).sinh() / r };
    Block2::new(
        damp * (ch - sh * half),
        -damp * sh * blk.b,
        damp * (ch + sh * half),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrotterOrder {
    /// `(e^{−(s/m)H1} e^{−((1−s)/m)H0})^m`.
    FirstOrder,
    /// `(e^{−((1−s)/2m)H0} e^{−(s/m)H1} e^{−((1−s)/2m)H0})^m`.
    #[default]
    Symmetric,
}

/// The `m`-step product approximant of `e^{−H(s)}`, applied factor by factor.
#[derive(Debug, Clone)]
pub struct TrotterApproximant {
    n: usize,
    s: f64,
    steps: usize,
    order: TrotterOrder,
    h0_factor: Vec<Block2>,
    h1_factor: Vec<f64>,
}

impl TrotterApproximant {
    /// Needs a separable `H0` and a diagonal `H1`.
    pub fn new(family: &InterpolatingFamily, s: f64, steps: usize, order: TrotterOrder) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::invalid(format!("s = {s} outside [0, 1]")));
        }
        if steps == 0 {
            return Err(Error::invalid("Trotter step count must be at least 1"));
        }
        let blocks = family.h0().blocks().ok_or(Error::UnsupportedForm {
            expected: "separable",
            found: family.h0().form_name(),
        })?;
        let energies = family.h1().diagonal_entries().ok_or(Error::UnsupportedForm {
            expected: "diagonal",
            found: family.h1().form_name(),
        })?;
        let m = steps as f64;
        let tau0 = match order {
            TrotterOrder::FirstOrder => (1.0 - s) / m,
            TrotterOrder::Symmetric => (1.0 - s) / (2.0 * m),
        };
        Ok(Self {
            n: family.n(),
            s,
            steps,
            order,
            h0_factor: blocks.iter().map(|&b| block_exp(b, tau0)).collect(),
            h1_factor: energies.iter().map(|&e| (-s / m * e).exp()).collect(),
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn order(&self) -> TrotterOrder {
        self.order
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn h0_factor(&self) -> &[Block2] {
        &self.h0_factor
    }

    fn diagonal<T: Amplitude>(&self, x: &mut [T]) {
        for (xk, &f) in x.iter_mut().zip(&self.h1_factor) {
            *xk = *xk * f;
        }
    }

    pub fn apply_in_place<T: Amplitude>(&self, x: &mut [T]) -> Result<()> {
        if x.len() != dim(self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len().max(1).trailing_zeros() as usize,
            });
        }
        for _ in 0..self.steps {
            match self.order {
                TrotterOrder::FirstOrder => {
                    apply_product(&self.h0_factor, x);
                    self.diagonal(x);
                }
                TrotterOrder::Symmetric => {
                    apply_product(&self.h0_factor, x);
                    self.diagonal(x);
                    apply_product(&self.h0_factor, x);
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        let mut amps = v.amplitudes().to_vec();
        self.apply_in_place(&mut amps)?;
        StateVector::new(v.n(), amps)
    }
}

/// `m`-step approximant of `e^{−H(s)} v` with the default (symmetric) ordering.
pub fn trotter_exp_action(family: &InterpolatingFamily, s: f64, m: usize, v: &StateVector) -> Result<StateVector> {
    TrotterApproximant::new(family, s, m, TrotterOrder::default())?.apply(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    MatrixEntrywise,
    GroundVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Positive,
    NonPositive,
    /// The ground space is degenerate, so there is no unique ground state.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub family: String,
    pub s: f64,
    pub check: CheckKind,
    pub verdict: Verdict,
    pub min_entry: f64,
    /// Row of the smallest entry (basis index for the ground vector).
    pub min_index: usize,
    /// Column of the smallest entry in the matrix check.
    pub min_column: Option<usize>,
    pub tolerance: f64,
    pub steps: Option<usize>,
    pub order: Option<TrotterOrder>,
    /// How the ground vector was obtained.
    pub method: Option<String>,
    /// Bound on the amplitude error, `residual / gap`.
    pub amplitude_error: Option<f64>,
}

impl PositivityReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// One JSON record per line.
pub fn to_json_lines(reports: &[PositivityReport]) -> String {
    reports.iter().map(|r| r.to_json_line() + "\n").collect()
}

/// Materializes the `m`-step approximant column by column and looks for its
/// smallest entry.
pub fn verify_matrix_positivity(family: &InterpolatingFamily, s: f64, m: usize) -> Result<PositivityReport> {
    verify_matrix_positivity_with(family, s, m, TrotterOrder::default())
}

pub fn verify_matrix_positivity_with(
    family: &InterpolatingFamily,
    s: f64,
    m: usize,
    order: TrotterOrder,
) -> Result<PositivityReport> {
    if family.n() > MAX_MATRIX_QUBITS {
        return Err(Error::SizeGuard {
            what: "entrywise positivity check",
            n: family.n(),
            limit: MAX_MATRIX_QUBITS,
        });
    }
    let approx = TrotterApproximant::new(family, s, m, order)?;
    let d = dim(family.n());
    let (min_entry, row, col) = (0..d)
        .into_par_iter()
        .map(|c| {
            let mut x = vec![0.0; d];
            x[c] = 1.0;
            approx.apply_in_place(&mut x).expect("length checked");
            let (r, v) = x
                .iter()
                .copied()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty column");
            (v, r, c)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)))
        .expect("non-empty matrix");
    Ok(PositivityReport {
        family: family.id().to_string(),
        s,
        check: CheckKind::MatrixEntrywise,
        verdict: if min_entry > MATRIX_TOL {
            Verdict::Positive
        } else {
            Verdict::NonPositive
        },
        min_entry,
        min_index: row,
        min_column: Some(col),
        tolerance: MATRIX_TOL,
        steps: Some(m),
        order: Some(order),
        method: None,
        amplitude_error: None,
    })
}

/// Starts at [`DEFAULT_STEPS`] and doubles `m` until two consecutive verdicts agree.
pub fn stabilized_matrix_positivity(family: &InterpolatingFamily, s: f64) -> Result<PositivityReport> {
    let mut m = DEFAULT_STEPS;
    let mut prev = verify_matrix_positivity(family, s, m)?;
    while m < MAX_STEPS {
        m *= 2;
        let next = verify_matrix_positivity(family, s, m)?;
        if next.verdict == prev.verdict {
            return Ok(next);
        }
        prev = next;
    }
    log::warn!("positivity verdict for {} at s = {s} did not settle by m = {m}", family.id());
    Ok(prev)
}

/// Ground vector in the Perron gauge (largest-magnitude entry positive) plus
/// the gap, the method and an amplitude error estimate.
pub struct GroundVector {
    pub amplitudes: Vec<f64>,
    pub e0: f64,
    pub e1: f64,
    pub method: &'static str,
    pub amplitude_error: f64,
}

pub fn ground_vector(family: &InterpolatingFamily, s: f64) -> Result<GroundVector> {
    let op = family.at(s)?;
    let (mut v, e0, e1, residual, method) = if family.n() <= MAX_EXACT_DIAG_QUBITS {
        let r = full_diagonalization(&op, true)?;
        let vecs = r.eigenvectors.expect("vectors requested");
        let v: Vec<f64> = vecs.column(0).iter().copied().collect();
        (v, r.eigenvalues[0], r.eigenvalues[1], r.residuals[0], "dense")
    } else {
        let r = lowest_two(&op, &KrylovOptions::default(), None).map_err(|e| e.at(s))?;
        let (e0, e1, res) = (r.e0, r.e1, r.residuals[0]);
        (r.v0, e0, e1, res, "krylov")
    };
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let gap = e1 - e0;
    let amplitude_error = if gap > 0.0 {
        residual.max(f64::EPSILON * e0.abs().max(1.0)) / gap
    } else {
        f64::INFINITY
    };
    Ok(GroundVector {
        amplitudes: v,
        e0,
        e1,
        method,
        amplitude_error,
    })
}

/// Checks that every ground-state amplitude is strictly positive.
pub fn verify_ground_positivity(family: &InterpolatingFamily, s: f64) -> Result<PositivityReport> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::invalid(format!("ground positivity needs s in [0, 1), got {s}")));
    }
    let g = ground_vector(family, s)?;
    let (min_index, min_entry) = g
        .amplitudes
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty state");
    let verdict = if same_level(g.e0, g.e1) {
        Verdict::NotApplicable
    } else if min_entry > VECTOR_TOL {
        Verdict::Positive
    } else {
        Verdict::NonPositive
    };
    Ok(PositivityReport {
        family: family.id().to_string(),
        s,
        check: CheckKind::GroundVector,
        verdict,
        min_entry,
        min_index,
        min_column: None,
        tolerance: VECTOR_TOL,
        steps: None,
        order: None,
        method: Some(g.method.to_string()),
        amplitude_error: Some(g.amplitude_error),
    })
}
