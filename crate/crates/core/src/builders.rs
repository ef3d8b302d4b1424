//! Hamiltonian constructors.
//!
//! Sign conventions: the transverse-field blocks are `½ a_j [I − σx]`, so the
//! uniform superposition (all amplitudes `+2^{-n/2}`) is the zero-energy ground
//! state and `e^{-τ H0}` is entrywise positive. Bit value 0 is `σz = +1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{self, check_qubits, dim, zero_bits};
use crate::error::{Error, Result};
use crate::family::InterpolatingFamily;
use crate::operator::{Block2, Operator};

/// Couplings `a_1 … a_n` of the initial Hamiltonian.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransverseFieldSpec {
    pub couplings: Vec<u32>,
}

impl TransverseFieldSpec {
    pub fn uniform(n: usize) -> Self {
        Self {
            couplings: vec![1; n],
        }
    }

    pub fn n(&self) -> usize {
        self.couplings.len()
    }
}

/// The single-qubit block `½ a [I − σx]`.
pub fn transverse_block(a: f64) -> Block2 {
    Block2::combine(0.5 * a, Block2::IDENTITY, -0.5 * a, Block2::SIGMA_X)
}

pub fn build_h0(spec: &TransverseFieldSpec) -> Result<Operator> {
    check_qubits(spec.n())?;
    if spec.couplings.iter().all(|&a| a == 0) {
        return Err(Error::DegenerateBuilder(
            "all couplings are zero; the ground state is not unique".into(),
        ));
    }
    Operator::separable(spec.couplings.iter().map(|&a| transverse_block(a as f64)).collect())
}

/// Energy table `E_k` of a diagonal final Hamiltonian, in basis-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub energies: Vec<f64>,
}

impl CostSpec {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        basis::qubits_for_len(energies.len())?;
        Ok(Self { energies })
    }

    pub fn n(&self) -> usize {
        self.energies.len().trailing_zeros() as usize
    }

    pub fn min(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of entries at the minimum.
    pub fn ground_multiplicity(&self) -> usize {
        let m = self.min();
        self.energies.iter().filter(|&&e| e == m).count()
    }

    pub fn is_degenerate(&self) -> bool {
        self.ground_multiplicity() > 1
    }

    /// Copy with the minimum subtracted so the ground energy is zero.
    pub fn shifted_to_zero(&self) -> CostSpec {
        let m = self.min();
        CostSpec {
            energies: self.energies.iter().map(|e| e - m).collect(),
        }
    }
}

/// The unmodified final Hamiltonian: non-negative with ground energy zero.
pub fn build_cost(spec: &CostSpec) -> Result<Operator> {
    basis::qubits_for_len(spec.energies.len())?;
    if let Some((k, e)) = spec.energies.iter().enumerate().find(|(_, e)| !(**e >= 0.0)) {
        return Err(Error::contract(format!("cost entry {k} is {e}, must be >= 0")));
    }
    if spec.min() != 0.0 {
        return Err(Error::contract(format!(
            "cost minimum is {}, must be 0",
            spec.min()
        )));
    }
    Operator::diagonal(spec.energies.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetState {
    n: usize,
    index: usize,
}

impl TargetState {
    pub fn new(n: usize, index: usize) -> Result<Self> {
        let b = basis::BasisIndex::new(n, index)?;
        Ok(Self {
            n: b.n(),
            index: b.index(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> usize {
        self.index
    }

    fn check(&self, op: &Operator) -> Result<()> {
        if op.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: op.n(),
                found: self.n,
            });
        }
        Ok(())
    }
}

/// `A`: zero on the target, identity elsewhere.
pub fn build_grover_generator(t: TargetState) -> Result<Operator> {
    let mut e = vec![1.0; dim(t.n)];
    e[t.index] = 0.0;
    Operator::diagonal(e)
}

/// Diagonal of the sign oracle `G`: −1 on the target, +1 elsewhere.
/// This is `e^{iπA}` up to the global phase −1.
pub fn grover_sign(t: TargetState) -> Vec<f64> {
    let mut g = vec![1.0; dim(t.n)];
    g[t.index] = -1.0;
    g
}

fn diagonal_of<'a>(op: &'a Operator) -> Result<&'a [f64]> {
    op.diagonal_entries().ok_or(Error::UnsupportedForm {
        expected: "diagonal",
        found: op.form_name(),
    })
}

/// `H2 = G·H1`: the target entry of a diagonal `H1` negated.
pub fn apply_grover_sign(h1: &Operator, t: TargetState) -> Result<Operator> {
    t.check(h1)?;
    let e = diagonal_of(h1)?;
    let et = e[t.index];
    if et == 0.0 {
        return Err(Error::FlipHasNoEffect { index: t.index });
    }
    if et < 0.0 {
        return Err(Error::contract(format!(
            "target entry is {et}; the flip expects a positive entry"
        )));
    }
    let flipped: Vec<f64> = e
        .iter()
        .zip(grover_sign(t))
        .map(|(x, g)| g * x)
        .collect();
    Operator::diagonal(flipped)
}

/// Target entry set to 0, every other entry raised by 1.
pub fn shift_variant(h1: &Operator, t: TargetState) -> Result<Operator> {
    t.check(h1)?;
    let e = diagonal_of(h1)?;
    if e.iter().any(|&x| x < 0.0) {
        return Err(Error::contract("shift variant expects a non-negative cost"));
    }
    let shifted = e
        .iter()
        .enumerate()
        .map(|(k, &x)| if k == t.index { 0.0 } else { x + 1.0 })
        .collect();
    Operator::diagonal(shifted)
}

/// `½ Σ_j [σz(j) + I]`: entry `k` counts the zero bits of `k`.
pub fn separable_final(n: usize) -> Result<Operator> {
    check_qubits(n)?;
    Operator::diagonal((0..dim(n)).map(|k| zero_bits(n, k) as f64).collect())
}

/// The exactly solvable pair: `a_j = 1` and `H1 = ½ Σ_j [σz(j) + I]`.
pub fn build_separable_pair(n: usize) -> Result<InterpolatingFamily> {
    let h0 = build_h0(&TransverseFieldSpec::uniform(n))?;
    let h1 = separable_final(n)?;
    InterpolatingFamily::new(format!("separable-n{n}"), h0, h1)
}

/// Distribution of the random energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum RandomLaw {
    /// Integers uniform on `lo..=hi`.
    UniformInt { lo: i64, hi: i64 },
    /// Integers uniform on `1..=n`.
    SearchVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFinalSpec {
    pub n: usize,
    pub seed: u64,
    pub law: RandomLaw,
}

impl RandomFinalSpec {
    fn bounds(&self) -> Result<(i64, i64)> {
        let (lo, hi) = match self.law {
            RandomLaw::UniformInt { lo, hi } => (lo, hi),
            RandomLaw::SearchVariant => (1, self.n as i64),
        };
        if lo > hi {
            return Err(Error::invalid(format!("empty law range [{lo}, {hi}]")));
        }
        Ok((lo, hi))
    }
}

/// The generator behind every seeded table: ChaCha8 seeded from the 64-bit seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random diagonal final Hamiltonian.
///
/// One value is drawn per basis index in ascending order, so the non-target
/// entries do not depend on the target. With a target that entry is then set
/// to 0 (and the law must have `lo >= 1`); without one, the table is shifted
/// so its minimum is 0.
pub fn build_random_final(spec: &RandomFinalSpec, target: Option<TargetState>) -> Result<Operator> {
    check_qubits(spec.n)?;
    let (lo, hi) = spec.bounds()?;
    let mut rng = seeded_rng(spec.seed);
    let mut table: Vec<f64> = (0..dim(spec.n))
        .map(|_| rng.gen_range(lo..=hi) as f64)
        .collect();
    match target {
        Some(t) => {
            if t.n != spec.n {
                return Err(Error::DimensionMismatch {
                    expected: spec.n,
                    found: t.n,
                });
            }
            if lo < 1 {
                return Err(Error::invalid(
                    "a search target needs a law with lower bound >= 1",
                ));
            }
            table[t.index] = 0.0;
        }
        None => {
            let m = table.iter().copied().fold(f64::INFINITY, f64::min);
            table.iter_mut().for_each(|x| *x -= m);
        }
    }
    Operator::diagonal(table)
}

/// Transverse field with unit couplings and `H1 = A`.
pub fn grover_family(t: TargetState) -> Result<InterpolatingFamily> {
    let h0 = build_h0(&TransverseFieldSpec::uniform(t.n))?;
    let h1 = build_grover_generator(t)?;
    Ok(InterpolatingFamily::new(format!("grover-n{}-t{}", t.n, t.index), h0, h1)?.with_target(t))
}

/// Separable pair with the target entry of `H1` sign-flipped.
pub fn gh1_separable_family(t: TargetState) -> Result<InterpolatingFamily> {
    let h0 = build_h0(&TransverseFieldSpec::uniform(t.n))?;
    let h2 = apply_grover_sign(&separable_final(t.n)?, t)?;
    Ok(InterpolatingFamily::new(format!("gh1-separable-n{}-t{}", t.n, t.index), h0, h2)?.with_target(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dense::full_diagonalization;

    fn subset_sums(a: &[u32]) -> Vec<f64> {
        let mut sums: Vec<f64> = (0..1usize << a.len())
            .map(|mask| {
                a.iter()
                    .enumerate()
                    .filter(|(j, _)| mask >> j & 1 == 1)
                    .map(|(_, &x)| x as f64)
                    .sum()
            })
            .collect();
        sums.sort_by(f64::total_cmp);
        sums
    }

    #[test]
    fn h0_two_qubit_spectrum() {
        let h0 = build_h0(&TransverseFieldSpec { couplings: vec![1, 1] }).unwrap();
        let spec = full_diagonalization(&h0, false).unwrap();
        for (x, y) in spec.eigenvalues.iter().zip([0.0, 1.0, 1.0, 2.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn h0_single_qubit_ground_state() {
        let h0 = build_h0(&TransverseFieldSpec { couplings: vec![1] }).unwrap();
        let g = std::f64::consts::FRAC_1_SQRT_2;
        let y = h0.apply_real(&[g, g]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-16));
        let spec = full_diagonalization(&h0, true).unwrap();
        let v = spec.eigenvectors.unwrap();
        let sign = v[(0, 0)].signum();
        assert!((sign * v[(0, 0)] - g).abs() < 1e-12 && (sign * v[(1, 0)] - g).abs() < 1e-12);
        assert!(spec.eigenvalues[0].abs() < 1e-14);
    }

    #[test]
    fn h0_spectrum_is_subset_sums() {
        for a in [vec![1, 2, 3], vec![0, 2, 1, 1], vec![3, 1, 4, 1, 5, 2, 6, 1, 2, 1]] {
            let h0 = build_h0(&TransverseFieldSpec { couplings: a.clone() }).unwrap();
            let spec = full_diagonalization(&h0, false).unwrap();
            let oracle = subset_sums(&a);
            for (x, y) in spec.eigenvalues.iter().zip(&oracle) {
                assert!((x - y).abs() < 1e-9, "{a:?}");
            }
        }
    }

    #[test]
    fn h0_rejects_all_zero() {
        let r = build_h0(&TransverseFieldSpec { couplings: vec![0, 0] });
        assert!(matches!(r, Err(Error::DegenerateBuilder(_))));
    }

    #[test]
    fn cost_validation() {
        let op = build_cost(&CostSpec::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(op.diagonal_entries().unwrap(), &[0.0, 1.0, 2.0, 3.0]);
        assert!(build_cost(&CostSpec::new(vec![1.0, 1.0, 2.0, 3.0]).unwrap()).is_err());
        assert!(build_cost(&CostSpec::new(vec![0.0, -1.0, 2.0, 3.0]).unwrap()).is_err());
        let deg = CostSpec::new(vec![0.0, 0.0, 1.0, 2.0]).unwrap();
        assert!(deg.is_degenerate());
        assert!(!CostSpec::new(vec![0.0, 1.0, 1.0, 2.0]).unwrap().is_degenerate());
    }

    #[test]
    fn grover_generator_and_sign() {
        let t = TargetState::new(2, 2).unwrap();
        let a = build_grover_generator(t).unwrap();
        assert_eq!(a.diagonal_entries().unwrap(), &[1.0, 1.0, 0.0, 1.0]);
        // G = −e^{iπA} on the diagonal
        for (ak, gk) in a.diagonal_entries().unwrap().iter().zip(grover_sign(t)) {
            assert!(((std::f64::consts::PI * ak).cos() + gk).abs() < 1e-15);
        }
        let spec = full_diagonalization(&a, true).unwrap();
        let v = spec.eigenvectors.unwrap();
        assert!((v[(2, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grover_sign_flip() {
        let h1 = Operator::diagonal(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let t = TargetState::new(2, 2).unwrap();
        let h2 = apply_grover_sign(&h1, t).unwrap();
        let e = h2.diagonal_entries().unwrap();
        assert_eq!(e, &[0.0, 1.0, -2.0, 3.0]);
        assert_eq!(e.iter().filter(|x| **x < 0.0).count(), 1);
        let spec = full_diagonalization(&h2, false).unwrap();
        assert_eq!(spec.eigenvalues[0], -2.0);
        assert_eq!(spec.eigenvalues[1], 0.0);
        let zero_target = TargetState::new(2, 0).unwrap();
        assert!(matches!(apply_grover_sign(&h1, zero_target), Err(Error::FlipHasNoEffect { index: 0 })));
    }

    #[test]
    fn shift_variant_substitution() {
        let h1 = Operator::diagonal(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let t = TargetState::new(2, 2).unwrap();
        let e = shift_variant(&h1, t).unwrap();
        let e = e.diagonal_entries().unwrap();
        assert_eq!(e, &[1.0, 2.0, 0.0, 4.0]);
        assert_eq!(e.iter().filter(|x| **x == 0.0).count(), 1);
        assert!(e.iter().enumerate().all(|(k, &x)| k == 2 || x >= 1.0));
    }

    #[test]
    fn separable_pair_tables() {
        let f1 = build_separable_pair(1).unwrap();
        assert_eq!(f1.h1().diagonal_entries().unwrap(), &[1.0, 0.0]);
        let f2 = build_separable_pair(2).unwrap();
        assert_eq!(f2.h1().diagonal_entries().unwrap(), &[2.0, 1.0, 1.0, 0.0]);
        assert_eq!(f2.at(0.37).unwrap().form_name(), "separable");
    }

    #[test]
    fn random_search_variant() {
        let t = TargetState::new(3, 5).unwrap();
        let spec = RandomFinalSpec { n: 3, seed: 9, law: RandomLaw::UniformInt { lo: 1, hi: 3 } };
        let op = build_random_final(&spec, Some(t)).unwrap();
        let e = op.diagonal_entries().unwrap();
        assert_eq!(e[5], 0.0);
        assert!(e.iter().enumerate().all(|(k, &x)| k == 5 || (1.0..=3.0).contains(&x)));
        let again = build_random_final(&spec, Some(t)).unwrap();
        assert_eq!(again.diagonal_entries().unwrap(), e);
        let sv = RandomFinalSpec { law: RandomLaw::SearchVariant, ..spec };
        assert!(build_random_final(&sv, Some(t)).is_ok());
    }

    #[test]
    fn random_without_target_is_shifted() {
        let spec = RandomFinalSpec { n: 8, seed: 0xC0FFEE, law: RandomLaw::UniformInt { lo: 5, hi: 40 } };
        let op = build_random_final(&spec, None).unwrap();
        let m = op.diagonal_entries().unwrap().iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(m, 0.0);
    }

    #[test]
    fn random_law_validation() {
        let t = TargetState::new(3, 1).unwrap();
        let bad = RandomFinalSpec { n: 3, seed: 1, law: RandomLaw::UniformInt { lo: 3, hi: 1 } };
        assert!(build_random_final(&bad, None).is_err());
        let zero_lo = RandomFinalSpec { n: 3, seed: 1, law: RandomLaw::UniformInt { lo: 0, hi: 3 } };
        assert!(build_random_final(&zero_lo, Some(t)).is_err());
        assert!(build_random_final(&zero_lo, None).is_ok());
    }

    #[test]
    fn sign_flip_changes_one_entry() {
        let spec = RandomFinalSpec { n: 6, seed: 3, law: RandomLaw::UniformInt { lo: 1, hi: 9 } };
        let h1 = build_random_final(&spec, None).unwrap();
        let e1 = h1.diagonal_entries().unwrap();
        for t in 0..64 {
            if e1[t] == 0.0 {
                continue;
            }
            let h2 = apply_grover_sign(&h1, TargetState::new(6, t).unwrap()).unwrap();
            let e2 = h2.diagonal_entries().unwrap();
            let diffs: Vec<usize> = (0..64).filter(|&k| e1[k] != e2[k]).collect();
            assert_eq!(diffs, vec![t]);
            assert_eq!(e2[t].abs(), e1[t]);
        }
    }

    #[test]
    fn shift_variant_final_gap_is_at_least_one() {
        let spec = RandomFinalSpec { n: 5, seed: 21, law: RandomLaw::UniformInt { lo: 0, hi: 4 } };
        let h1 = build_random_final(&spec, None).unwrap();
        for t in [0, 7, 31] {
            let h = shift_variant(&h1, TargetState::new(5, t).unwrap()).unwrap();
            let spec = full_diagonalization(&h, false).unwrap();
            assert!(spec.eigenvalues[1] - spec.eigenvalues[0] >= 1.0);
        }
    }

    #[test]
    fn separable_exponential_factorizes() {
        use nalgebra::DMatrix;
        for n in 1..=6 {
            let fam = build_separable_pair(n).unwrap();
            for s in [0.0, 0.3, 0.5, 0.9, 1.0] {
                let h = fam.at(s).unwrap();
                let dense = h.to_dense().unwrap();
                let eig = dense.symmetric_eigen();
                let expm = &eig.eigenvectors
                    * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| (-x).exp()))
                    * eig.eigenvectors.transpose();
                let blk = Block2::combine(1.0 - s, transverse_block(1.0), s, Block2::new(1.0, 0.0, 0.0));
                let (vals, vecs) = blk.eigen();
                let single = DMatrix::from_fn(2, 2, |i, j| {
                    (0..2).map(|l| vecs[l][i] * vecs[l][j] * (-vals[l]).exp()).sum::<f64>()
                });
                let mut product = DMatrix::from_element(1, 1, 1.0);
                for _ in 0..n {
                    product = product.kronecker(&single);
                }
                assert!((expm - product).abs().max() <= 1e-10, "n={n} s={s}");
            }
        }
    }
}
