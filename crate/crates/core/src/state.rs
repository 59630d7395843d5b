use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::basis::ProjectedBasis;
use crate::error::{Error, Result};
use crate::operator::{hermitian_deviation, CMatrix};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue tolerated before a state is flagged.
pub const POSITIVITY_TOL: f64 = -1e-6;

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    basis: Arc<ProjectedBasis>,
    elements: CMatrix,
}

/// Outcome of checking the density-matrix invariants on one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCheck {
    pub trace_drift: f64,
    pub hermitian_deviation: f64,
    pub min_eigenvalue: f64,
}

impl StateCheck {
    pub fn positivity_ok(&self) -> bool {
        self.min_eigenvalue >= POSITIVITY_TOL
    }

    pub fn is_valid(&self) -> bool {
        self.trace_drift <= TRACE_TOL && self.hermitian_deviation <= HERMITICITY_TOL && self.positivity_ok()
    }
}

impl DensityMatrix {
    /// `|j⟩⟨j|` for basis state `index`.
    pub fn pure_basis_state(basis: Arc<ProjectedBasis>, index: usize) -> Self {
        let dim = basis.dim();
        let mut elements = CMatrix::zeros(dim, dim);
        elements[(index, index)] = Complex64::new(1.0, 0.0);
        Self { basis, elements }
    }

    /// Wraps a matrix, rejecting it if it violates the state invariants.
    pub fn from_matrix(basis: Arc<ProjectedBasis>, elements: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(basis, elements)?;
        let check = rho.check();
        if !check.is_valid() {
            return Err(Error::InvalidState(format!("{check:?}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(basis: Arc<ProjectedBasis>, elements: CMatrix) -> Result<Self> {
        let dim = basis.dim();
        if elements.nrows() != dim || elements.ncols() != dim {
            return Err(Error::BasisMismatch);
        }
        Ok(Self { basis, elements })
    }

    pub fn basis(&self) -> &Arc<ProjectedBasis> {
        &self.basis
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub(crate) fn elements_mut(&mut self) -> &mut CMatrix {
        &mut self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.elements.diagonal().iter().map(|z| z.re).sum()
    }

    /// Population of basis state `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.elements[(index, index)].re
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.elements)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.elements + self.elements.adjoint()) * Complex64::new(0.5, 0.0);
        let mut values: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn check(&self) -> StateCheck {
        StateCheck {
            trace_drift: (self.trace() - 1.0).abs(),
            hermitian_deviation: self.hermitian_deviation(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }

    /// Largest element of `|self − other|`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.elements - &other.elements).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}
