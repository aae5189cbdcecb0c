use crate::chain::check_alpha;
use crate::error::{Error, Result};

/// The acceptance probabilities `p(d, d')` for a pair `1 < alpha < alpha' <= 2`.
///
/// `d` is the degree of the attachment point in the full (spanned) tree and
/// `d'` its degree in the blue subtree, `0` when it is not blue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceTable {
    alpha: f64,
    alpha_prime: f64,
}

impl AcceptanceTable {
    pub fn new(alpha: f64, alpha_prime: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_alpha(alpha_prime)?;
        if alpha >= alpha_prime {
            return Err(Error::param(format!(
                "need alpha < alpha', got {alpha} and {alpha_prime}"
            )));
        }
        Ok(AcceptanceTable { alpha, alpha_prime })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_prime(&self) -> f64 {
        self.alpha_prime
    }

    pub fn probability(&self, d: usize, d_prime: usize) -> Result<f64> {
        if d < 2 || d_prime == 1 || d_prime > d {
            return Err(Error::input(format!(
                "inadmissible degrees (d, d') = ({d}, {d_prime})"
            )));
        }
        Ok(self.p(d, d_prime))
    }

    /// Unchecked version for the hot loops; degrees are admissible by construction.
    #[inline]
    pub(crate) fn p(&self, d: usize, d_prime: usize) -> f64 {
        match d_prime {
            0 => 0.0,
            2 => 1.0,
            _ => {
                let (a, b) = (self.alpha, self.alpha_prime);
                ((d_prime as f64 - 1.0 - b) * (a - 1.0)) / ((d as f64 - 1.0 - a) * (b - 1.0))
            }
        }
    }
}

/// Free-function form of [`AcceptanceTable::probability`].
pub fn accept_probability(table: &AcceptanceTable, d: usize, d_prime: usize) -> Result<f64> {
    table.probability(d, d_prime)
}
