//! Observed data with a missingness mask, and the low-rank factor pair.

use ndarray::{Array2, ArrayView1};

use crate::{Error, Result};

/// A real `m × n` matrix together with its observation mask (`true` = observed).
///
/// Values under a `false` mask entry are carried along but never read by the
/// solvers; they are kept so synthetic instances can hold the clean value there.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    values: Array2<f64>,
    mask: Array2<bool>,
    observed: Vec<(usize, usize)>,
}

impl MaskedMatrix {
    pub fn new(values: Array2<f64>, mask: Array2<bool>) -> Result<Self> {
        if values.dim() != mask.dim() {
            return Err(Error::validation(format!(
                "values are {:?} but mask is {:?}",
                values.dim(),
                mask.dim()
            )));
        }
        let (m, n) = values.dim();
        if m == 0 || n == 0 {
            return Err(Error::validation("matrix must have at least one row and column"));
        }
        let mut observed = Vec::new();
        for ((i, j), &seen) in mask.indexed_iter() {
            if seen {
                if !values[[i, j]].is_finite() {
                    return Err(Error::validation(format!("observed entry ({i}, {j}) is not finite")));
                }
                observed.push((i, j));
            }
        }
        if observed.is_empty() {
            return Err(Error::validation("matrix has no observed entries"));
        }
        Ok(MaskedMatrix { values, mask, observed })
    }

    /// Fully observed matrix.
    pub fn dense(values: Array2<f64>) -> Result<Self> {
        let mask = Array2::from_elem(values.dim(), true);
        Self::new(values, mask)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Observed positions in row-major order. Every per-entry vector in the
    /// crate (residuals, responsibilities) is aligned with this order.
    pub fn observed(&self) -> &[(usize, usize)] {
        &self.observed
    }

    /// Number of observed entries (N).
    pub fn n_observed(&self) -> usize {
        self.observed.len()
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[[i, j]]
    }

    /// Residuals `x_ij - u_i·v_j` over the observed entries.
    pub fn residuals(&self, f: &FactorPair) -> Vec<f64> {
        self.observed
            .iter()
            .map(|&(i, j)| self.values[[i, j]] - f.entry(i, j))
            .collect()
    }
}

/// Factors `U` (m×r) and `V` (n×r) of the approximation `U Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

impl FactorPair {
    pub fn new(u: Array2<f64>, v: Array2<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(Error::validation(format!(
                "U has {} columns but V has {}",
                u.ncols(),
                v.ncols()
            )));
        }
        if u.ncols() == 0 {
            return Err(Error::validation("rank must be at least 1"));
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::validation("factor entries must be finite"));
        }
        Ok(FactorPair { u, v })
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// `u_i · v_j`
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        dot(self.u.row(i), self.v.row(j))
    }

    /// The full product `U Vᵀ`.
    pub fn product(&self) -> Array2<f64> {
        self.u.dot(&self.v.t())
    }
}

#[inline]
fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
