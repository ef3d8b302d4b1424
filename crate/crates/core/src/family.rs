use crate::builders::TargetState;
use crate::error::{Error, Result};
use crate::operator::{linear_combine, Operator};

/// The pair `(H0, H1)` and its interpolation `H(s) = (1-s) H0 + s H1`.
#[derive(Debug, Clone)]
pub struct InterpolatingFamily {
    id: String,
    h0: Operator,
    h1: Operator,
    target: Option<TargetState>,
    degenerate_final: bool,
}

impl InterpolatingFamily {
    pub fn new(id: impl Into<String>, h0: Operator, h1: Operator) -> Result<Self> {
        if h0.n() != h1.n() {
            return Err(Error::DimensionMismatch {
                expected: h0.n(),
                found: h1.n(),
            });
        }
        let degenerate_final = match h1.diagonal_entries() {
            Some(e) => {
                let m = e.iter().copied().fold(f64::INFINITY, f64::min);
                e.iter().filter(|&&x| x == m).count() > 1
            }
            None => false,
        };
        if degenerate_final {
            log::debug!("final Hamiltonian has a degenerate ground space; g(s) -> 0 as s -> 1");
        }
        Ok(Self {
            id: id.into(),
            h0,
            h1,
            target: None,
            degenerate_final,
        })
    }

    pub fn with_target(mut self, t: TargetState) -> Self {
        self.target = Some(t);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n(&self) -> usize {
        self.h0.n()
    }

    pub fn h0(&self) -> &Operator {
        &self.h0
    }

    pub fn h1(&self) -> &Operator {
        &self.h1
    }

    pub fn target(&self) -> Option<TargetState> {
        self.target
    }

    /// Whether the diagonal final Hamiltonian has more than one ground state.
    pub fn degenerate_final(&self) -> bool {
        self.degenerate_final
    }

    pub fn at(&self, s: f64) -> Result<Operator> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::invalid(format!("s = {s} outside [0, 1]")));
        }
        linear_combine(1.0 - s, &self.h0, s, &self.h1)
    }
}
