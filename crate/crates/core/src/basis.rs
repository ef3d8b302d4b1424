//! Computational-basis indexing.
//!
//! An index `k` in `[0, 2^n)` encodes the bit string `k_1 ... k_n` with `k_1`
//! as the most significant bit. Qubit `j` (0-based, so qubit 0 is `k_1`)
//! therefore lives at bit position `n - 1 - j`. Bit value 0 is the `σz = +1`
//! eigenstate.

use crate::error::{Error, Result};

/// Largest register accepted by matrix-free operations.
pub const MAX_QUBITS: usize = 24;

/// Largest register that may be materialized as a dense matrix.
pub const MAX_DENSE_QUBITS: usize = 14;

/// Largest register handled by full dense diagonalization.
pub const MAX_EXACT_DIAG_QUBITS: usize = 12;

#[inline]
pub fn dim(n: usize) -> usize {
    1usize << n
}

/// Stride between the two partners of qubit `j`.
#[inline]
pub fn stride(n: usize, j: usize) -> usize {
    1usize << (n - 1 - j)
}

/// Value of `k_{j+1}` in index `k`.
#[inline]
pub fn bit(n: usize, k: usize, j: usize) -> u8 {
    ((k >> (n - 1 - j)) & 1) as u8
}

pub fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::SizeGuard {
            what: "register",
            n,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Qubit count for a table of `len` entries, if `len` is a power of two.
pub fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "table length {len} is not 2^n with n >= 1"
        )));
    }
    let n = len.trailing_zeros() as usize;
    check_qubits(n)?;
    Ok(n)
}

/// A basis label with its register size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    n: usize,
    index: usize,
}

impl BasisIndex {
    pub fn new(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        if index >= dim(n) {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {n} qubits"
            )));
        }
        Ok(Self { n, index })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let index = bits_to_index(bits)?;
        Self::new(bits.len(), index)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn bits(&self) -> Vec<u8> {
        index_to_bits(self.n, self.index)
    }
}

/// `k_1 ... k_n` for index `k`.
pub fn index_to_bits(n: usize, k: usize) -> Vec<u8> {
    (0..n).map(|j| bit(n, k, j)).collect()
}

pub fn bits_to_index(bits: &[u8]) -> Result<usize> {
    check_qubits(bits.len())?;
    bits.iter().try_fold(0usize, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | b as usize),
        _ => Err(Error::invalid(format!("bit value {b} is not 0 or 1"))),
    })
}

/// Number of zero bits of `k`, i.e. the number of qubits in the `σz = +1` state.
#[inline]
pub fn zero_bits(n: usize, k: usize) -> u32 {
    n as u32 - (k & (dim(n) - 1)).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_is_first_qubit() {
        assert_eq!(index_to_bits(3, 4), vec![1, 0, 0]);
        assert_eq!(index_to_bits(3, 1), vec![0, 0, 1]);
        assert_eq!(bits_to_index(&[1, 1, 0]).unwrap(), 6);
        assert_eq!(stride(3, 0), 4);
        assert_eq!(stride(3, 2), 1);
        assert_eq!(zero_bits(3, 6), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BasisIndex::new(3, 8).is_err());
        assert!(BasisIndex::new(0, 0).is_err());
        assert!(BasisIndex::new(25, 0).is_err());
        assert!(bits_to_index(&[0, 2]).is_err());
        assert!(qubits_for_len(6).is_err());
        assert_eq!(qubits_for_len(16).unwrap(), 4);
    }

    proptest! {
        #[test]
        fn bits_round_trip(n in 1usize..=24, raw in any::<u64>()) {
            let k = (raw as usize) & (dim(n) - 1);
            let b = BasisIndex::new(n, k).unwrap();
            prop_assert_eq!(BasisIndex::from_bits(&b.bits()).unwrap(), b);
        }
    }
}
