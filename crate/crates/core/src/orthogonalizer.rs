//! Product transformation to standard orthogonal form, and the end-to-end
//! classification of rank-(4,4) PPT states.
//!
//! Given kernel factors `phi_k` and standard-form columns `u_k`, the matrix `C`
//! with `C u_k || phi_k` solves the homogeneous system `phi_k ^ (C u_k) = 0`
//! (three antisymmetric components per `k`, fifteen equations for nine
//! unknowns). Its solution is the null vector of the 9x9 Hermitian `M^dagger M`.
//! Kernel vectors transform with `(V^dagger)^{-1}`, so the state transform is
//! `V_A = (C^dagger)^{-1}`, and likewise `V_B` from `D`.

use std::fmt;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::invariants::{find_positive_orderings_with_tol, recover_parameters, OrderingReport, POSITIVITY_TOL};
use crate::product_search::{find_product_vectors_in_kernel, find_sixth_vector, SearchConfig};
use crate::scalar::{cr, czero, Real, C};
use crate::symmetry::canonical_params;
use crate::tensor::{herm_eig, norm, sine_angle, CMat, CVec3, HermMat, DEFAULT_RANK_TOL, DIM};
use crate::transform::{apply_to_state, ProductTransform};
use crate::upb::{build_state, build_u, build_upb, build_v, ProductVector, UpbParams, UPB_SIZE};
use crate::verify::rank_pair;

/// Minimal accepted `lambda_2 / lambda_1` of `M^dagger M`.
pub const MIN_NULL_GAP: f64 = 1e4;
/// Accepted Frobenius distance between the input and the reconstructed state.
pub const RECONSTRUCTION_TOL: f64 = 1e-7;
/// Accepted sine of the angle between `C u_k` and `phi_k` for the fitted vectors.
pub const PARALLEL_TOL: f64 = 1e-8;

/// Rows encoding `phi_k ^ (C u_k) = 0` for `C` flattened row-major (`C_ij -> 3i + j`).
///
/// For every `k` and pair `i < j` the row reads `phi_i (C u)_j - phi_j (C u)_i`.
pub fn build_m_matrix<T: Real>(targets: &[CVec3<T>], sources: &[CVec3<T>]) -> Result<CMat<T>> {
    if targets.len() != sources.len() || targets.is_empty() {
        return Err(Error::Dimension(format!(
            "{} targets against {} sources",
            targets.len(),
            sources.len()
        )));
    }
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut m = CMat::zeros(pairs.len() * targets.len(), DIM * DIM);
    for (k, (phi, u)) in targets.iter().zip(sources).enumerate() {
        for (r, &(i, j)) in pairs.iter().enumerate() {
            let row = pairs.len() * k + r;
            for l in 0..DIM {
                m[(row, DIM * j + l)] += phi[i] * u[l];
                m[(row, DIM * i + l)] -= phi[j] * u[l];
            }
        }
    }
    Ok(m)
}

/// Null vector of `m` (smallest eigenvector of `m^dagger m`) reshaped to 3x3,
/// with the gap ratio `lambda_2 / max(lambda_1, eps^2 lambda_max)`.
pub fn solve_null<T: Real>(m: &CMat<T>) -> Result<(CMat<T>, T)> {
    solve_null_with(m, T::lit(MIN_NULL_GAP))
}

pub fn solve_null_with<T: Real>(m: &CMat<T>, min_gap: T) -> Result<(CMat<T>, T)> {
    if m.cols() != DIM * DIM {
        return Err(Error::Dimension(format!("expected 9 columns, got {}", m.cols())));
    }
    let gram = HermMat::from_mat_symmetrized(&(&m.adjoint() * m));
    let eig = herm_eig(&gram);
    let lmax = eig.values[DIM * DIM - 1].max(T::zero());
    let floor = lmax * T::epsilon() * T::epsilon();
    let l1 = eig.values[0].max(floor).max(T::min_positive_value());
    let gap = eig.values[1] / l1;
    if !(gap >= min_gap) {
        return Err(Error::AmbiguousNullSpace(gap.as_f64()));
    }
    let v = refine_null(m, eig.vector(0));
    Ok((CMat::from_fn(DIM, DIM, |i, j| v[DIM * i + j]), gap))
}

/// Iterative refinement of an approximate null vector of `m`.
///
/// The eigenvector of `m^dagger m` only resolves the null direction to about
/// the square root of machine precision. Pinning the largest component and
/// solving the least-squares correction a few times recovers full precision,
/// because each correction is computed relative to its own (small) size.
fn refine_null<T: Real>(m: &CMat<T>, mut v: Vec<C<T>>) -> Vec<C<T>> {
    let n = v.len();
    let pin = (0..n).max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap()).unwrap_or(0);
    let lead = v[pin];
    for z in v.iter_mut() {
        *z /= lead;
    }
    let free: Vec<usize> = (0..n).filter(|&k| k != pin).collect();
    let a = CMat::from_fn(m.rows(), free.len(), |r, k| m[(r, free[k])]);
    let ah = a.adjoint();
    let normal = &ah * &a;
    for _ in 0..3 {
        let r = m.mul_vec(&v);
        let rhs = CMat::from_fn(free.len(), 1, |i, _| -ah.mul_vec(&r)[i]);
        let Ok(delta) = normal.solve(&rhs) else { break };
        for (i, k) in free.iter().enumerate() {
            v[*k] += delta[(i, 0)];
        }
    }
    let nv = norm(&v);
    v.iter().map(|z| *z / cr(nv)).collect()
}

/// Matrices `C`, `D` with `C u_k || phi_k`, `D v_k || chi_k`.
#[derive(Clone, Debug)]
pub struct Orthogonalization<T: Real> {
    pub c_matrix: CMat<T>,
    pub d_matrix: CMat<T>,
    /// Largest sine of angle between `C u_k` and `phi_k`, or `D v_k` and `chi_k`.
    pub residual: T,
    /// The smaller of the two null gaps.
    pub null_gap: T,
}

impl<T: Real> Orthogonalization<T> {
    /// `V_A (x) V_B` mapping the standard-form state to the input state.
    pub fn state_transform(&self) -> Result<ProductTransform<T>> {
        let va = self.c_matrix.adjoint().inverse()?;
        let vb = self.d_matrix.adjoint().inverse()?;
        ProductTransform::new(va, vb)
    }

    /// `max(sin angle(C u, phi), sin angle(D v, chi))` for one pair.
    pub fn parallelism(&self, target: &ProductVector<T>, u: &CVec3<T>, v: &CVec3<T>) -> T {
        let cu = self.c_matrix.mul_vec3(u);
        let dv = self.d_matrix.mul_vec3(v);
        sine_angle(target.phi(), &cu).max(sine_angle(target.chi(), &dv))
    }
}

/// Solves for `C` and `D` mapping the standard-form columns onto `targets`.
pub fn orthogonalize<T: Real>(
    targets: &[ProductVector<T>],
    params: &UpbParams<T>,
    min_gap: T,
) -> Result<Orthogonalization<T>> {
    if targets.len() != UPB_SIZE {
        return Err(Error::Dimension(format!("expected 5 targets, got {}", targets.len())));
    }
    let u = build_u(params.a, params.b)?;
    let v = build_v(params.c, params.d)?;
    let us: Vec<CVec3<T>> = (0..UPB_SIZE).map(|k| u.column3(k)).collect();
    let vs: Vec<CVec3<T>> = (0..UPB_SIZE).map(|k| v.column3(k)).collect();
    let phis: Vec<CVec3<T>> = targets.iter().map(|t| *t.phi()).collect();
    let chis: Vec<CVec3<T>> = targets.iter().map(|t| *t.chi()).collect();
    let (c_matrix, gap_c) = solve_null_with(&build_m_matrix(&phis, &us)?, min_gap)?;
    let (d_matrix, gap_d) = solve_null_with(&build_m_matrix(&chis, &vs)?, min_gap)?;
    let mut out = Orthogonalization { c_matrix, d_matrix, residual: T::zero(), null_gap: gap_c.min(gap_d) };
    out.residual = (0..UPB_SIZE)
        .map(|k| out.parallelism(&targets[k], &us[k], &vs[k]))
        .fold(T::zero(), T::max);
    Ok(out)
}

/// Stages of [`classify`], reported with failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Ranks,
    KernelSearch,
    Orderings,
    Parameters,
    Orthogonalize,
    Reconstruct,
    Canonical,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ranks => "ranks",
            Stage::KernelSearch => "kernel-search",
            Stage::Orderings => "orderings",
            Stage::Parameters => "parameters",
            Stage::Orthogonalize => "orthogonalize",
            Stage::Reconstruct => "reconstruct",
            Stage::Canonical => "canonical",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A classification failure and the stage it happened in.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("classification failed at stage {stage}: {error}")]
pub struct ClassifyError {
    pub stage: Stage,
    #[source]
    pub error: Error,
}

trait AtStage<V> {
    fn at(self, stage: Stage) -> std::result::Result<V, ClassifyError>;
}

impl<V> AtStage<V> for Result<V> {
    fn at(self, stage: Stage) -> std::result::Result<V, ClassifyError> {
        self.map_err(|error| ClassifyError { stage, error })
    }
}

/// Thresholds for [`classify_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions<T: Real> {
    pub search: SearchConfig<T>,
    pub rank_tol: T,
    pub positivity_tol: T,
    pub min_null_gap: T,
    pub reconstruction_tol: T,
    /// Also locate the sixth standard-form vector and check it is mapped onto the
    /// unused sixth kernel vector.
    pub check_sixth: bool,
}

impl<T: Real> Default for ClassifyOptions<T> {
    fn default() -> Self {
        Self::from_search(SearchConfig::default())
    }
}

impl<T: Real> ClassifyOptions<T> {
    pub fn from_search(search: SearchConfig<T>) -> Self {
        Self {
            search,
            rank_tol: T::lit(DEFAULT_RANK_TOL),
            positivity_tol: T::lit(POSITIVITY_TOL),
            min_null_gap: T::lit(MIN_NULL_GAP),
            reconstruction_tol: T::lit(RECONSTRUCTION_TOL),
            check_sixth: true,
        }
    }
}

/// Residuals backing a classification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals<T: Real> {
    /// `|rho - a2 V rho1 V^dagger|_F`.
    pub reconstruction: T,
    /// Largest `|rho psi| / |rho|` over the kernel product vectors.
    pub kernel: T,
    /// Largest parallelism sine over the five fitted vectors.
    pub parallel_fit: T,
    /// Parallelism sine for the sixth vector, not used in the fit.
    pub parallel_sixth: Option<T>,
    /// Smaller null gap of the two `M^dagger M` systems.
    pub null_gap: T,
    /// Largest `|Im s| / (1 + |s|)` over the chosen invariants.
    pub invariant_imag: T,
}

/// Everything recovered about a rank-(4,4) state.
#[derive(Clone, Debug)]
pub struct ClassificationReport<T: Real> {
    pub params: UpbParams<T>,
    pub canonical_params: UpbParams<T>,
    pub kernel_vectors: Vec<ProductVector<T>>,
    pub orderings: OrderingReport<T>,
    /// Index into `orderings.admissible` used for the fit.
    pub chosen: usize,
    pub transform: ProductTransform<T>,
    pub c_matrix: CMat<T>,
    pub d_matrix: CMat<T>,
    pub residuals: Residuals<T>,
}

/// [`classify_with`] using default thresholds and the given search settings.
pub fn classify<T: Real>(
    rho: &DensityMatrix<T>,
    config: &SearchConfig<T>,
) -> std::result::Result<ClassificationReport<T>, ClassifyError> {
    classify_with(rho, &ClassifyOptions::from_search(*config))
}

/// Recovers the standard-form parameters of a rank-(4,4) PPT state and the
/// product transformation relating it to the standard-form state.
pub fn classify_with<T: Real>(
    rho: &DensityMatrix<T>,
    opts: &ClassifyOptions<T>,
) -> std::result::Result<ClassificationReport<T>, ClassifyError> {
    let ranks = rank_pair(rho, opts.rank_tol);
    if (ranks.rank, ranks.rank_pt) != (4, 4) {
        return Err(ClassifyError {
            stage: Stage::Ranks,
            error: Error::NotInClass(format!("rank pair ({}, {}) instead of (4, 4)", ranks.rank, ranks.rank_pt)),
        });
    }

    let search = SearchConfig { rank_tol: opts.rank_tol, ..opts.search };
    let found = find_product_vectors_in_kernel(rho, &search).at(Stage::KernelSearch)?;
    if found.len() != 6 {
        return Err(ClassifyError {
            stage: Stage::KernelSearch,
            error: Error::NotInClass(format!("{} product vectors in the kernel instead of 6", found.len())),
        });
    }
    let kernel_vectors = found.vectors;
    let rho_norm = rho.as_mat().frobenius_norm();
    let kernel = kernel_vectors
        .iter()
        .map(|v| norm(&rho.as_mat().mul_vec(v.psi())) / rho_norm)
        .fold(T::zero(), T::max);

    let orderings =
        find_positive_orderings_with_tol(&kernel_vectors, opts.positivity_tol).at(Stage::Orderings)?;
    if orderings.admissible.is_empty() {
        return Err(ClassifyError { stage: Stage::Orderings, error: Error::NotOrthogonalizable });
    }
    let chosen = 0;
    let adm = orderings.admissible[chosen];
    let params = recover_parameters(&adm.invariants).at(Stage::Parameters)?;
    let invariant_imag = adm
        .invariants
        .s
        .iter()
        .map(|z| z.im.abs() / (T::one() + z.norm()))
        .fold(T::zero(), T::max);

    let targets: Vec<ProductVector<T>> = adm.ordering[..UPB_SIZE].iter().map(|&k| kernel_vectors[k]).collect();
    let orth = orthogonalize(&targets, &params, opts.min_null_gap).at(Stage::Orthogonalize)?;
    if !(orth.residual < T::lit(PARALLEL_TOL)) {
        return Err(ClassifyError {
            stage: Stage::Orthogonalize,
            error: Error::Degenerate(format!("fitted vectors not parallel (sine {:e})", orth.residual.as_f64())),
        });
    }
    let transform = orth.state_transform().at(Stage::Orthogonalize)?;

    let standard = build_upb(&params).at(Stage::Reconstruct)?;
    let rho1 = build_state(&standard).at(Stage::Reconstruct)?;
    let rebuilt = apply_to_state(&transform, &rho1).at(Stage::Reconstruct)?;
    let reconstruction = (rho.as_mat() - rebuilt.as_mat()).frobenius_norm();
    if !(reconstruction < opts.reconstruction_tol) {
        return Err(ClassifyError { stage: Stage::Reconstruct, error: Error::Reconstruction(reconstruction.as_f64()) });
    }

    let parallel_sixth = if opts.check_sixth {
        let sixth_std = find_sixth_vector(standard.vectors(), &search).at(Stage::Reconstruct)?;
        let sixth = kernel_vectors[adm.excluded()];
        Some(orth.parallelism(&sixth, sixth_std.phi(), sixth_std.chi()))
    } else {
        None
    };

    let canonical_params = canonical_params(&params).at(Stage::Canonical)?;
    Ok(ClassificationReport {
        params,
        canonical_params,
        kernel_vectors,
        orderings,
        chosen,
        transform,
        c_matrix: orth.c_matrix,
        d_matrix: orth.d_matrix,
        residuals: Residuals {
            reconstruction,
            kernel,
            parallel_fit: orth.residual,
            parallel_sixth,
            null_gap: orth.null_gap,
            invariant_imag,
        },
    })
}

/// Rescales `m` so that its largest-modulus entry (first in row-major order
/// on ties) equals one. Fixes the free complex scale of a null solution.
pub fn normalize_leading<T: Real>(m: &CMat<T>) -> CMat<T> {
    let mut lead = czero::<T>();
    for z in m.as_slice() {
        if z.norm() > lead.norm() * (T::one() + T::lit(1e-12)) {
            lead = *z;
        }
    }
    if lead == czero::<T>() {
        return m.clone();
    }
    m.scale(C::new(T::one(), T::zero()) / lead)
}
