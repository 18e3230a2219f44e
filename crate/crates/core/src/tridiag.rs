//! Tridiagonal systems solved by Thomas elimination.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TridiagError {
    #[error("zero pivot in row {row}")]
    Singular { row: usize },
    #[error("band lengths do not match: {0}")]
    Shape(&'static str),
}

/// Band storage: row `i` reads `lower[i] x[i-1] + diagonal[i] x[i] + upper[i] x[i+1]`.
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diagonal: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(lower: Vec<f64>, diagonal: Vec<f64>, upper: Vec<f64>) -> Result<Self, TridiagError> {
        let n = diagonal.len();
        if n == 0 {
            return Err(TridiagError::Shape("empty system"));
        }
        if lower.len() != n || upper.len() != n {
            return Err(TridiagError::Shape("lower/upper must match the diagonal"));
        }
        Ok(TridiagonalSystem {
            lower,
            diagonal,
            upper,
        })
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// `|diag| > |lower| + |upper|` on every row.
    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let off_l = if i > 0 { math::abs(self.lower[i]) } else { 0.0 };
            let off_u = if i + 1 < n { math::abs(self.upper[i]) } else { 0.0 };
            math::abs(self.diagonal[i]) > off_l + off_u
        })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diagonal[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Forward elimination done once, reused for every right-hand side.
    pub fn factorize(&self) -> Result<FactoredTridiagonal, TridiagError> {
        let n = self.len();
        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut pivot = self.diagonal[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diagonal[i] - self.lower[i] * c_prime[i - 1];
            }
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(TridiagError::Singular { row: i });
            }
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                c_prime[i] = self.upper[i] * inv_pivot[i];
            }
        }
        Ok(FactoredTridiagonal {
            lower: self.lower.clone(),
            c_prime,
            inv_pivot,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, TridiagError> {
        if rhs.len() != self.len() {
            return Err(TridiagError::Shape("rhs length"));
        }
        let mut x = rhs.to_vec();
        self.factorize()?.solve_in_place(&mut x);
        Ok(x)
    }
}

#[derive(Debug, Clone)]
pub struct FactoredTridiagonal {
    lower: Vec<f64>,
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl FactoredTridiagonal {
    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `x` (holding the right-hand side) with the solution.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        debug_assert_eq!(n, self.len());
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.c_prime[i] * x[i + 1];
        }
    }
}
