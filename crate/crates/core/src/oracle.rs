//! Reference solution of the master equation through the full Liouvillian.
//!
//! `ρ` is column-stacked, so `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)` and
//!
//! ```text
//! 𝓛 = −i (I ⊗ H − Hᵀ ⊗ I) + Σ_L [ L̄ ⊗ L − ½ I ⊗ L†L − ½ (L†L)ᵀ ⊗ I ]
//! ```
//!
//! `exp(𝓛 t)` is computed by scaling and squaring with a Taylor series. The
//! cost grows as `dim⁶`, so this path is limited to small bases and exists
//! to check the stepping scheme.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ChainConfig, ChainModel, LindbladTerm};
use crate::operator::{CMatrix, Operator};
use crate::state::DensityMatrix;

pub const ORACLE_MAX_DIM: usize = 16;
const TAYLOR_TOL: f64 = 1e-16;

/// Liouvillian superoperator acting on column-stacked density matrices.
pub fn liouvillian(h: &Operator, terms: &[LindbladTerm]) -> CMatrix {
    let n = h.dim();
    let id = CMatrix::identity(n, n);
    let minus_i = Complex64::new(0.0, -1.0);
    let hm = h.elements();
    let mut out = (id.kronecker(hm) - hm.transpose().kronecker(&id)) * minus_i;
    let half = Complex64::new(0.5, 0.0);
    for t in terms {
        let l = t.operator.elements();
        let k = l.adjoint() * l;
        out += l.conjugate().kronecker(l);
        out -= id.kronecker(&k) * half;
        out -= k.transpose().kronecker(&id) * half;
    }
    out
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(m)` by scaling and squaring around a Taylor series.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm = one_norm(m);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m * Complex64::new(0.5f64.powi(squarings as i32), 0.0);
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=60 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        result += &term;
        if one_norm(&term) <= TAYLOR_TOL * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Exact `ρ(t)` for `config`, from its initial state.
pub fn superoperator_oracle(config: &ChainConfig, t: f64) -> Result<DensityMatrix> {
    let model = ChainModel::build(config)?;
    let dim = model.basis.dim();
    if dim > ORACLE_MAX_DIM {
        return Err(Error::OracleTooLarge { dim, limit: ORACLE_MAX_DIM });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(format!("oracle time must be finite and >= 0, got {t}")));
    }
    let rho0 = model.initial_state()?;
    let lv = liouvillian(&model.hamiltonian, &model.terms);
    let map = expm(&(lv * Complex64::new(t, 0.0)));
    let v0 = nalgebra::DVector::from_column_slice(rho0.elements().as_slice());
    let v = map * v0;
    let rho = CMatrix::from_column_slice(dim, dim, v.as_slice());
    DensityMatrix::from_matrix_unchecked(model.basis.clone(), rho)
}
