//! SL x SL product transformations `V = V_A (x) V_B` acting on states and product vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::scalar::{c, cr, Real, C};
use crate::tensor::{orthonormalize, CMat, HermMat, DIM};
use crate::upb::{ProductVector, Upb};

/// Default bound on `sigma_max / sigma_min` for random transforms.
pub const DEFAULT_COND_MAX: f64 = 20.0;

/// Smallest `|det|` accepted before rescaling to the special linear group.
pub const MIN_DET: f64 = 1e-12;

/// A product transformation with `det V_A = det V_B = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductTransform<T: Real> {
    va: CMat<T>,
    vb: CMat<T>,
}

impl<T: Real> ProductTransform<T> {
    /// Rescales both factors to unit determinant. Fails when either is 3x3-singular.
    pub fn new(va: CMat<T>, vb: CMat<T>) -> Result<Self> {
        Ok(Self { va: to_sl3(va)?, vb: to_sl3(vb)? })
    }

    pub fn identity() -> Self {
        Self { va: CMat::identity(DIM), vb: CMat::identity(DIM) }
    }

    pub fn va(&self) -> &CMat<T> {
        &self.va
    }

    pub fn vb(&self) -> &CMat<T> {
        &self.vb
    }

    /// `V_A (x) V_B`.
    pub fn full(&self) -> CMat<T> {
        self.va.kron(&self.vb)
    }

    /// `V_A (x) conj(V_B)`, the matrix acting on partially transposed states.
    pub fn full_tilde(&self) -> CMat<T> {
        self.va.kron(&self.vb.map(|z| z.conj()))
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &Self) -> Self {
        Self { va: &other.va * &self.va, vb: &other.vb * &self.vb }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self { va: self.va.inverse()?, vb: self.vb.inverse()? })
    }

    /// Maps a kernel product vector: `((V_A^dagger)^{-1} phi) (x) ((V_B^dagger)^{-1} chi)`.
    pub fn map_kernel_vector(&self, pv: &ProductVector<T>) -> Result<ProductVector<T>> {
        let ia = self.va.adjoint().inverse()?;
        let ib = self.vb.adjoint().inverse()?;
        ProductVector::new(ia.mul_vec3(pv.phi()), ib.mul_vec3(pv.chi()))
    }

    /// Maps an image product vector: `(V_A phi) (x) (V_B chi)`.
    pub fn map_image_vector(&self, pv: &ProductVector<T>) -> Result<ProductVector<T>> {
        ProductVector::new(self.va.mul_vec3(pv.phi()), self.vb.mul_vec3(pv.chi()))
    }
}

fn to_sl3<T: Real>(m: CMat<T>) -> Result<CMat<T>> {
    if m.rows() != DIM || m.cols() != DIM {
        return Err(Error::Dimension(format!("transform factor must be 3x3, got {}x{}", m.rows(), m.cols())));
    }
    let det = m.det();
    if !(det.norm() >= T::lit(MIN_DET)) {
        return Err(Error::Singular);
    }
    let root = det.powf(T::one() / T::lit(3.0));
    Ok(m.scale(root.inv()))
}

/// `a2 V rho V^dagger` with `a2` fixing unit trace.
pub fn apply_to_state<T: Real>(t: &ProductTransform<T>, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    DensityMatrix::normalized(rho.herm().congruence(&t.full()))
}

/// Images of the UPB members in the kernel of the transformed state.
pub fn apply_to_kernel_vectors<T: Real>(t: &ProductTransform<T>, upb: &Upb<T>) -> Result<Upb<T>> {
    let mapped = upb
        .vectors()
        .iter()
        .map(|pv| t.map_kernel_vector(pv))
        .collect::<Result<Vec<_>>>()?;
    Upb::new(mapped)
}

/// Unnormalized `V rho V^dagger`, used when the scale factor itself is of interest.
pub fn congruence<T: Real>(t: &ProductTransform<T>, m: &HermMat<T>) -> HermMat<T> {
    m.congruence(&t.full())
}

/// Iteration cap for [`filter_normal_form`].
const FILTER_MAX_ITERS: usize = 500;

/// A local filter `F` and the state `F rho F^dagger / tr` whose two reduced
/// states are both maximally mixed.
#[derive(Clone, Debug)]
pub struct FilterNormalForm<T: Real> {
    pub filter: ProductTransform<T>,
    pub state: DensityMatrix<T>,
    /// Largest deviation of either reduced state from `1/3`.
    pub residual: T,
}

impl<T: Real> FilterNormalForm<T> {
    /// Maps a kernel vector of the normal-form state back to the kernel of the
    /// original state (`psi = F^dagger psi'`).
    pub fn kernel_vector_to_original(&self, pv: &ProductVector<T>) -> Result<ProductVector<T>> {
        ProductVector::new(
            self.filter.va().adjoint().mul_vec3(pv.phi()),
            self.filter.vb().adjoint().mul_vec3(pv.chi()),
        )
    }
}

/// Alternately rescales with the inverse square roots of the reduced states
/// until both are maximally mixed within `tol`.
///
/// States in one SL x SL orbit with full-rank marginals share the same normal
/// form up to local unitaries, which makes it a canonical frame for searches
/// whose behaviour is only unitarily invariant. Fails with `Singular` when a
/// reduced state is rank deficient. When the iteration does not reach `tol`
/// the best iterate is returned; callers inspect `residual`.
pub fn filter_normal_form<T: Real>(rho: &DensityMatrix<T>, tol: T) -> Result<FilterNormalForm<T>> {
    let third = T::one() / T::lit(3.0);
    let marginal_residual = |st: &DensityMatrix<T>| {
        let dev = |m: &HermMat<T>| {
            (m.as_mat() - &CMat::identity(DIM).scale_real(third)).max_abs()
        };
        dev(&crate::tensor::partial_trace_b(st.herm())).max(dev(&crate::tensor::partial_trace_a(st.herm())))
    };
    let mut filter = ProductTransform::identity();
    let mut state = rho.clone();
    let mut residual = marginal_residual(&state);
    for _ in 0..FILTER_MAX_ITERS {
        if residual < tol {
            break;
        }
        let fa = inverse_sqrt(&crate::tensor::partial_trace_b(state.herm()))?;
        let fb = inverse_sqrt(&crate::tensor::partial_trace_a(state.herm()))?;
        let step = ProductTransform::new(fa, fb)?;
        state = apply_to_state(&step, &state)?;
        filter = filter.then(&step);
        residual = marginal_residual(&state);
    }
    Ok(FilterNormalForm { filter, state, residual })
}

fn inverse_sqrt<T: Real>(m: &HermMat<T>) -> Result<CMat<T>> {
    let eig = crate::tensor::herm_eig(m);
    let lmax = eig.values[DIM - 1];
    if !(eig.values[0] > lmax * T::lit(MIN_DET)) {
        return Err(Error::Singular);
    }
    let d = CMat::diag(&eig.values.iter().map(|&l| cr(T::one() / l.sqrt())).collect::<Vec<_>>());
    Ok(&(&eig.vectors * &d) * &eig.vectors.adjoint())
}

fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(T::lit(re), T::lit(im))
}

fn gaussian3<T: Real, R: Rng + ?Sized>(rng: &mut R) -> CMat<T> {
    CMat::from_fn(DIM, DIM, |_, _| complex_gaussian(rng))
}

/// Maximum number of rejected draws before [`random_sl3_with`] falls back to a
/// random unitary (condition number one).
const MAX_DRAWS: usize = 10_000;

/// Random special linear 3x3 matrix with condition number at most `cond_max`.
///
/// Entries are complex Gaussian, rescaled by `det^{-1/3}`, and draws above
/// `cond_max` are rejected. `cond_max == 1` yields a random special unitary.
pub fn random_sl3_with<T: Real, R: Rng + ?Sized>(rng: &mut R, cond_max: T) -> Result<CMat<T>> {
    if !(cond_max >= T::one()) {
        return Err(Error::InvalidParameter(format!("cond_max = {cond_max} must be >= 1")));
    }
    if cond_max > T::one() + T::lit(1e-9) {
        for _ in 0..MAX_DRAWS {
            let g = gaussian3::<T, R>(rng);
            if g.det().norm() < T::lit(MIN_DET) {
                continue;
            }
            if g.condition_number() <= cond_max {
                return to_sl3(g);
            }
        }
    }
    random_su3_with(rng)
}

/// Random special unitary from Gram-Schmidt on a Gaussian matrix.
pub fn random_su3_with<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Result<CMat<T>> {
    loop {
        let g = gaussian3::<T, R>(rng);
        let cols: Vec<Vec<C<T>>> = (0..DIM).map(|j| g.column(j)).collect();
        let q = orthonormalize(&cols, T::lit(1e-6));
        if q.len() == DIM {
            let refs: Vec<&[C<T>]> = q.iter().map(|v| v.as_slice()).collect();
            return to_sl3(CMat::from_columns(&refs));
        }
    }
}

/// Seeded [`random_sl3_with`]; identical seeds give bitwise-identical matrices.
pub fn random_sl3<T: Real>(seed: u64, cond_max: T) -> Result<CMat<T>> {
    random_sl3_with(&mut ChaCha8Rng::seed_from_u64(seed), cond_max)
}

/// Seeded random product transform with both factors drawn by [`random_sl3_with`].
pub fn random_transform<T: Real>(seed: u64, cond_max: T) -> Result<ProductTransform<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let va = random_sl3_with(&mut rng, cond_max)?;
    let vb = random_sl3_with(&mut rng, cond_max)?;
    Ok(ProductTransform { va, vb })
}

/// Identity on subsystem A, `diag(s, 1, 1/s)` on B; a deterministic non-unitary test transform.
pub fn diagonal_transform<T: Real>(s: T) -> ProductTransform<T> {
    ProductTransform {
        va: CMat::identity(DIM),
        vb: CMat::diag(&[cr(s), cr(T::one()), cr(T::one() / s)]),
    }
}
