//! Dense operators on a [`ProjectedBasis`].
//!
//! Products of ladder operators must be projected *once*, after the whole
//! product acts: `P (A B) P` differs from `(P A P)(P B P)` whenever the
//! intermediate state leaves the quanta window (e.g. `p⁻ a⁺` at the window
//! edge). [`mode_product`] builds such products directly on occupation
//! vectors; [`Operator::mul`] is plain matrix multiplication of already
//! projected operators.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::ProjectedBasis;
use crate::error::{Error, Result};

/// Hermiticity tolerance for operators flagged as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise(usize),
    Lower(usize),
}

#[derive(Debug, Clone)]
pub struct Operator {
    basis: Arc<ProjectedBasis>,
    elements: CMatrix,
    hermitian: bool,
}

impl Operator {
    /// Wraps a matrix without any Hermiticity claim.
    pub fn from_matrix(basis: Arc<ProjectedBasis>, elements: CMatrix) -> Result<Self> {
        let dim = basis.dim();
        if elements.nrows() != dim || elements.ncols() != dim {
            return Err(Error::BasisMismatch);
        }
        Ok(Self { basis, elements, hermitian: false })
    }

    pub fn zeros(basis: Arc<ProjectedBasis>) -> Self {
        let dim = basis.dim();
        Self { basis, elements: CMatrix::zeros(dim, dim), hermitian: true }
    }

    pub fn identity(basis: Arc<ProjectedBasis>) -> Self {
        let dim = basis.dim();
        Self { basis, elements: CMatrix::identity(dim, dim), hermitian: true }
    }

    pub fn basis(&self) -> &Arc<ProjectedBasis> {
        &self.basis
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn into_elements(self) -> CMatrix {
        self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Largest element of `|A - A†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.elements)
    }

    /// Sets the Hermitian flag after checking it holds to [`HERMITIAN_TOL`].
    pub fn into_hermitian(mut self) -> Result<Self> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        self.hermitian = true;
        Ok(self)
    }

    fn check_same_basis(&self, other: &Operator) -> Result<()> {
        if same_basis(&self.basis, &other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_basis(other)?;
        Ok(Operator {
            basis: self.basis.clone(),
            elements: &self.elements + &other.elements,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        Operator {
            basis: self.basis.clone(),
            elements: &self.elements * factor,
            hermitian: self.hermitian && factor.im == 0.0,
        }
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_basis(other)?;
        Ok(Operator {
            basis: self.basis.clone(),
            elements: &self.elements * &other.elements,
            hermitian: false,
        })
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            basis: self.basis.clone(),
            elements: self.elements.adjoint(),
            hermitian: self.hermitian,
        }
    }

    /// `self·other − other·self`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_same_basis(other)?;
        let ab = &self.elements * &other.elements;
        let ba = &other.elements * &self.elements;
        Ok(Operator { basis: self.basis.clone(), elements: ab - ba, hermitian: false })
    }

    /// Largest element modulus.
    pub fn max_abs(&self) -> f64 {
        self.elements.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn same_basis(a: &Arc<ProjectedBasis>, b: &Arc<ProjectedBasis>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Projected product of ladder operators, written in matrix order: the last
/// factor acts first. Intermediate states are bounded only by each mode's
/// level count; only the final state must lie in the basis.
pub fn mode_product(basis: &Arc<ProjectedBasis>, factors: &[Ladder]) -> Result<Operator> {
    let layout = basis.layout();
    let n_modes = layout.len();
    for f in factors {
        let (Ladder::Raise(m) | Ladder::Lower(m)) = *f;
        if m >= n_modes {
            return Err(Error::ModeOutOfRange { index: m, len: n_modes });
        }
    }
    let dim = basis.dim();
    let mut elements = CMatrix::zeros(dim, dim);
    let mut work: Vec<u8> = Vec::with_capacity(n_modes);
    'states: for (col, state) in basis.states().iter().enumerate() {
        work.clear();
        work.extend_from_slice(state);
        let mut amplitude = 1.0f64;
        for f in factors.iter().rev() {
            match *f {
                Ladder::Raise(m) => {
                    let n = work[m] as usize;
                    if n + 1 >= layout.modes()[m].levels {
                        continue 'states;
                    }
                    amplitude *= ((n + 1) as f64).sqrt();
                    work[m] += 1;
                }
                Ladder::Lower(m) => {
                    let n = work[m] as usize;
                    if n == 0 {
                        continue 'states;
                    }
                    amplitude *= (n as f64).sqrt();
                    work[m] -= 1;
                }
            }
        }
        if let Some(row) = basis.index_of(&work) {
            elements[(row, col)] += Complex64::new(amplitude, 0.0);
        }
    }
    Ok(Operator { basis: basis.clone(), elements, hermitian: false })
}

/// Projected creation operator: `⟨n+1|a†|n⟩ = √(n+1)` when both states are in
/// the basis.
pub fn ladder_raise(basis: &Arc<ProjectedBasis>, mode: usize) -> Result<Operator> {
    mode_product(basis, &[Ladder::Raise(mode)])
}

/// Projected annihilation operator; the adjoint of [`ladder_raise`].
pub fn ladder_lower(basis: &Arc<ProjectedBasis>, mode: usize) -> Result<Operator> {
    mode_product(basis, &[Ladder::Lower(mode)])
}

/// Diagonal occupation-number operator of one mode.
pub fn number_op(basis: &Arc<ProjectedBasis>, mode: usize) -> Result<Operator> {
    let n_modes = basis.layout().len();
    if mode >= n_modes {
        return Err(Error::ModeOutOfRange { index: mode, len: n_modes });
    }
    let diag: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|s| Complex64::new(s[mode] as f64, 0.0))
        .collect();
    let elements = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    Ok(Operator { basis: basis.clone(), elements, hermitian: true })
}

/// Total conserved quanta (photons + excitons + sink) as a diagonal operator.
pub fn quanta_op(basis: &Arc<ProjectedBasis>) -> Operator {
    let diag: Vec<Complex64> = (0..basis.dim())
        .map(|j| Complex64::new(basis.quanta(j) as f64, 0.0))
        .collect();
    let elements = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    Operator { basis: basis.clone(), elements, hermitian: true }
}

pub fn op_add(a: &Operator, b: &Operator) -> Result<Operator> {
    a.add(b)
}

pub fn op_scale(a: &Operator, factor: Complex64) -> Operator {
    a.scale(factor)
}

pub fn op_mul(a: &Operator, b: &Operator) -> Result<Operator> {
    a.mul(b)
}

pub fn op_adjoint(a: &Operator) -> Operator {
    a.adjoint()
}
