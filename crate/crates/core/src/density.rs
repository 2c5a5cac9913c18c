//! Two-qutrit density matrices.

use crate::error::{Error, Result};
use crate::scalar::{cr, Real, C};
use crate::tensor::{herm_eig, CMat, HermMat, DIM, DIM2};

/// A 9x9 Hermitian, positive semidefinite, unit-trace matrix on `C^3 (x) C^3`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    rho: HermMat<T>,
}

impl<T: Real> DensityMatrix<T> {
    pub const DIM_A: usize = DIM;
    pub const DIM_B: usize = DIM;
    /// Accepted deviation of the trace from one.
    pub const TRACE_TOL: f64 = 1e-8;
    /// Accepted negative eigenvalue, absorbing roundoff.
    pub const PSD_TOL: f64 = 1e-10;

    pub fn new(rho: HermMat<T>) -> Result<Self> {
        if rho.dim() != DIM2 {
            return Err(Error::Dimension(format!("density matrix must be 9x9, got {0}x{0}", rho.dim())));
        }
        let tr = rho.trace();
        if !((tr - T::one()).abs() <= T::lit(Self::TRACE_TOL)) {
            return Err(Error::InvalidState(format!("trace {} differs from 1", tr)));
        }
        let min = herm_eig(&rho).values[0];
        if !(min >= -T::lit(Self::PSD_TOL)) {
            return Err(Error::InvalidState(format!("negative eigenvalue {:e}", min.as_f64())));
        }
        Ok(Self { rho })
    }

    /// Rescales a nonzero PSD matrix to unit trace.
    pub fn normalized(m: HermMat<T>) -> Result<Self> {
        let tr = m.trace();
        if !(tr > T::zero()) {
            return Err(Error::InvalidState(format!("non-positive trace {}", tr)));
        }
        Self::new(HermMat::from_mat_symmetrized(&m.as_mat().scale_real(T::one() / tr)))
    }

    pub fn from_mat(m: CMat<T>) -> Result<Self> {
        Self::new(HermMat::new(m)?)
    }

    /// `1/9`.
    pub fn maximally_mixed() -> Self {
        let m = CMat::identity(DIM2).scale_real(T::one() / T::lit(DIM2 as f64));
        Self { rho: HermMat::from_mat_symmetrized(&m) }
    }

    /// `psi psi^dagger / |psi|^2`.
    pub fn pure(psi: &[C<T>]) -> Result<Self> {
        Self::normalized(HermMat::from_mat_symmetrized(&CMat::outer(psi, psi)))
    }

    /// Diagonal state with the given weights (normalized).
    pub fn diagonal(weights: &[T; DIM2]) -> Result<Self> {
        let d: Vec<C<T>> = weights.iter().map(|&w| cr(w)).collect();
        Self::normalized(HermMat::from_mat_symmetrized(&CMat::diag(&d)))
    }

    pub fn herm(&self) -> &HermMat<T> {
        &self.rho
    }

    pub fn as_mat(&self) -> &CMat<T> {
        self.rho.as_mat()
    }

    pub fn dims(&self) -> (usize, usize) {
        (Self::DIM_A, Self::DIM_B)
    }
}
