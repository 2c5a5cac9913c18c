//! Product vectors in a subspace, found by alternating ("see-saw") minimization.
//!
//! To find the product vectors `phi (x) chi` in a subspace `W` of `C^3 (x) C^3`
//! we minimize `psi^dagger Q psi` over normalized product vectors, where `Q` is
//! positive semidefinite with kernel `W` (a density matrix, or `1 - P_W`). With
//! `chi` fixed the objective is a Hermitian form in `phi`, minimized exactly by
//! the lowest eigenvector of a 3x3 matrix, and vice versa. Candidates from many
//! random starts are then refined by a Gauss-Newton solve of
//! `B^dagger (phi (x) chi) = 0`, `B` an orthonormal basis of `W^perp`, which
//! brings true members of `W` to machine precision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::scalar::{c, czero, Real, C};
use crate::tensor::{herm_eig, image_basis, pair_index, CMat, CVec3, HermMat, DEFAULT_RANK_TOL, DIM};
use crate::transform::filter_normal_form;
use crate::upb::{span_projector, ProductVector};

/// Knobs for the restart search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig<T: Real> {
    pub restarts: usize,
    pub max_iters: usize,
    /// See-saw stops once one sweep lowers the objective by less than this.
    pub conv_tol: T,
    /// Candidates closer than this (projective distance on each factor) are merged.
    pub dedup_tol: T,
    /// Objective below which a candidate counts as lying in the subspace.
    pub accept_tol: T,
    /// Gauss-Newton refinement steps applied to every candidate.
    pub polish_iters: usize,
    /// Relative eigenvalue cutoff separating image from kernel.
    pub rank_tol: T,
    pub seed: u64,
}

impl<T: Real> Default for SearchConfig<T> {
    fn default() -> Self {
        Self {
            restarts: 200,
            max_iters: 500,
            conv_tol: T::lit(1e-13),
            dedup_tol: T::lit(1e-8),
            accept_tol: T::lit(1e-10),
            polish_iters: 30,
            rank_tol: T::lit(DEFAULT_RANK_TOL),
            seed: 0,
        }
    }
}

impl<T: Real> SearchConfig<T> {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.conv_tol, self.dedup_tol, self.accept_tol, self.rank_tol]
            .iter()
            .all(|&v| v > T::zero() && v.is_finite());
        if self.restarts == 0 || self.max_iters == 0 || !positive {
            return Err(Error::InvalidParameter("search configuration values must be positive".into()));
        }
        Ok(())
    }

    fn rng(&self, restart: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(restart as u64);
        rng
    }
}

/// Outcome of one see-saw run.
#[derive(Clone, Copy, Debug)]
pub struct SeesawResult<T: Real> {
    pub vector: ProductVector<T>,
    pub objective: T,
    pub iterations: usize,
}

/// Deduplicated product vectors with the objective attained by each.
#[derive(Clone, Debug, Default)]
pub struct ProductVectorSet<T: Real> {
    pub vectors: Vec<ProductVector<T>>,
    pub objectives: Vec<T>,
}

impl<T: Real> ProductVectorSet<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProductVector<T>, T)> {
        self.vectors.iter().zip(self.objectives.iter().copied())
    }
}

/// `A_{ii'} = sum_{jj'} conj(chi_j) q_{(i,j),(i',j')} chi_{j'}`.
fn reduce_b<T: Real>(q: &CMat<T>, chi: &CVec3<T>) -> HermMat<T> {
    let m = CMat::from_fn(DIM, DIM, |i, ip| {
        let mut acc = czero();
        for j in 0..DIM {
            for jp in 0..DIM {
                acc += chi[j].conj() * q[(pair_index(i, j), pair_index(ip, jp))] * chi[jp];
            }
        }
        acc
    });
    HermMat::from_mat_symmetrized(&m)
}

/// `B_{jj'} = sum_{ii'} conj(phi_i) q_{(i,j),(i',j')} phi_{i'}`.
fn reduce_a<T: Real>(q: &CMat<T>, phi: &CVec3<T>) -> HermMat<T> {
    let m = CMat::from_fn(DIM, DIM, |j, jp| {
        let mut acc = czero();
        for i in 0..DIM {
            for ip in 0..DIM {
                acc += phi[i].conj() * q[(pair_index(i, j), pair_index(ip, jp))] * phi[ip];
            }
        }
        acc
    });
    HermMat::from_mat_symmetrized(&m)
}

fn objective<T: Real>(q: &HermMat<T>, pv: &ProductVector<T>) -> T {
    q.expectation(pv.psi()).max(T::zero())
}

/// Alternating exact minimization of `psi^dagger q psi` over normalized product vectors.
///
/// The objective is non-increasing from sweep to sweep; the run stops when a
/// sweep lowers it by less than `config.conv_tol` or after `config.max_iters` sweeps.
pub fn seesaw_minimize<T: Real>(
    q: &HermMat<T>,
    config: &SearchConfig<T>,
    start: &ProductVector<T>,
) -> SeesawResult<T> {
    seesaw_traced(q, config, start, None)
}

/// [`seesaw_minimize`], recording the objective after every half-step.
pub fn seesaw_minimize_traced<T: Real>(
    q: &HermMat<T>,
    config: &SearchConfig<T>,
    start: &ProductVector<T>,
) -> (SeesawResult<T>, Vec<T>) {
    let mut trace = Vec::new();
    let res = seesaw_traced(q, config, start, Some(&mut trace));
    (res, trace)
}

fn seesaw_traced<T: Real>(
    q: &HermMat<T>,
    config: &SearchConfig<T>,
    start: &ProductVector<T>,
    mut trace: Option<&mut Vec<T>>,
) -> SeesawResult<T> {
    let qm = q.as_mat();
    let mut phi = *start.phi();
    let mut chi = *start.chi();
    let mut current = objective(q, start);
    if let Some(t) = trace.as_deref_mut() {
        t.push(current);
    }
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        iterations += 1;
        let ea = herm_eig(&reduce_b(qm, &chi));
        phi = ea.min_vector3();
        if let Some(t) = trace.as_deref_mut() {
            t.push(ea.values[0]);
        }
        let eb = herm_eig(&reduce_a(qm, &phi));
        chi = eb.min_vector3();
        let next = eb.values[0];
        if let Some(t) = trace.as_deref_mut() {
            t.push(next);
        }
        let decrease = current - next;
        current = next;
        if decrease < config.conv_tol {
            break;
        }
    }
    let vector = ProductVector::new(phi, chi).expect("eigenvectors are unit vectors");
    SeesawResult { objective: objective(q, &vector), vector, iterations }
}

/// Random product vector with complex-Gaussian factors.
pub fn random_product_vector<T: Real, R: Rng + ?Sized>(rng: &mut R) -> ProductVector<T> {
    loop {
        let mut draw = || -> CVec3<T> {
            std::array::from_fn(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c(T::lit(re), T::lit(im))
            })
        };
        let phi = draw();
        let chi = draw();
        if let Ok(pv) = ProductVector::new(phi, chi) {
            return pv;
        }
    }
}

/// Gauss-Newton refinement of `pv` towards a root of `complement^dagger (phi (x) chi) = 0`.
///
/// The largest component of each factor is pinned to one, leaving four complex
/// unknowns; the residual is holomorphic in them, so complex Newton steps apply.
pub fn polish<T: Real>(
    complement: &[Vec<C<T>>],
    pv: &ProductVector<T>,
    iters: usize,
) -> ProductVector<T> {
    if complement.is_empty() {
        return *pv;
    }
    let argmax = |v: &CVec3<T>| {
        (0..DIM).max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap()).unwrap()
    };
    let p = argmax(pv.phi());
    let qi = argmax(pv.chi());
    let mut x = pv.phi().map(|z| z / pv.phi()[p]);
    let mut y = pv.chi().map(|z| z / pv.chi()[qi]);
    let free_x: Vec<usize> = (0..DIM).filter(|&i| i != p).collect();
    let free_y: Vec<usize> = (0..DIM).filter(|&j| j != qi).collect();
    let r = complement.len();

    let residual = |x: &CVec3<T>, y: &CVec3<T>| -> Vec<C<T>> {
        complement
            .iter()
            .map(|b| {
                let mut acc = czero();
                for i in 0..DIM {
                    for j in 0..DIM {
                        acc += b[pair_index(i, j)].conj() * x[i] * y[j];
                    }
                }
                acc
            })
            .collect()
    };

    let mut f = residual(&x, &y);
    let mut fnorm = crate::tensor::norm(&f);
    for _ in 0..iters {
        if fnorm == T::zero() {
            break;
        }
        let jac = CMat::from_fn(r, 4, |m, col| {
            let b = &complement[m];
            let mut acc = czero();
            if col < 2 {
                let i = free_x[col];
                for j in 0..DIM {
                    acc += b[pair_index(i, j)].conj() * y[j];
                }
            } else {
                let j = free_y[col - 2];
                for i in 0..DIM {
                    acc += b[pair_index(i, j)].conj() * x[i];
                }
            }
            acc
        });
        let jh = jac.adjoint();
        let mut normal = &jh * &jac;
        let damping = normal.trace().re * T::lit(1e-14);
        for k in 0..4 {
            normal[(k, k)] += damping;
        }
        let rhs_vec = jh.mul_vec(&f);
        let rhs = CMat::from_fn(4, 1, |k, _| -rhs_vec[k]);
        let Ok(step) = normal.solve(&rhs) else { break };
        let mut nx = x;
        let mut ny = y;
        for (k, &i) in free_x.iter().enumerate() {
            nx[i] += step[(k, 0)];
        }
        for (k, &j) in free_y.iter().enumerate() {
            ny[j] += step[(k + 2, 0)];
        }
        let nf = residual(&nx, &ny);
        let nn = crate::tensor::norm(&nf);
        if !(nn < fnorm) {
            break;
        }
        x = nx;
        y = ny;
        f = nf;
        fnorm = nn;
    }
    ProductVector::new(x, y).unwrap_or(*pv)
}

/// All product vectors (up to phase) with `psi^dagger q psi < accept_tol`, where
/// `complement` is an orthonormal basis of the image of `q`.
pub fn find_product_vectors_in_subspace<T: Real>(
    q: &HermMat<T>,
    complement: &[Vec<C<T>>],
    config: &SearchConfig<T>,
) -> Result<ProductVectorSet<T>> {
    config.validate()?;
    let candidates: Vec<(ProductVector<T>, T)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = config.rng(r);
            let start = random_product_vector(&mut rng);
            let run = seesaw_minimize(q, config, &start);
            let refined = polish(complement, &run.vector, config.polish_iters);
            let refined_obj = objective(q, &refined);
            if refined_obj <= run.objective {
                (refined, refined_obj)
            } else {
                (run.vector, run.objective)
            }
        })
        .collect();

    let accepted: Vec<(ProductVector<T>, T)> =
        candidates.into_iter().filter(|(_, o)| *o < config.accept_tol).collect();
    Ok(dedup(accepted, config.dedup_tol))
}

/// Sorts lexicographically and merges vectors closer than `tol`, keeping the
/// lower objective. The result does not depend on the input order.
fn dedup<T: Real>(mut accepted: Vec<(ProductVector<T>, T)>, tol: T) -> ProductVectorSet<T> {
    accepted.sort_by(|a, b| lex_cmp(&a.0.sort_key(), &b.0.sort_key()));
    let mut set = ProductVectorSet::default();
    for (pv, obj) in accepted {
        match set.vectors.iter().position(|v| v.distance(&pv) < tol) {
            Some(k) => {
                if obj < set.objectives[k] {
                    set.vectors[k] = pv;
                    set.objectives[k] = obj;
                }
            }
            None => {
                set.vectors.push(pv);
                set.objectives.push(obj);
            }
        }
    }
    set
}

fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Marginal tolerance for the filter normal form used by the kernel search.
const FILTER_TOL: f64 = 1e-12;

/// Product vectors in the kernel of `rho`. An empty result means the kernel
/// is trivial or holds no product vector.
///
/// The see-saw is only unitarily covariant, so an ill-conditioned local
/// transformation can shrink some basins of attraction to almost nothing. The
/// search therefore runs on the filter normal form of `rho`, where every state
/// of an SL x SL orbit looks the same up to local unitaries; the vectors are
/// mapped back and polished against `rho psi = 0` in the original frame.
pub fn find_product_vectors_in_kernel<T: Real>(
    rho: &DensityMatrix<T>,
    config: &SearchConfig<T>,
) -> Result<ProductVectorSet<T>> {
    config.validate()?;
    let eig = herm_eig(rho.herm());
    let image = image_basis(rho.herm(), config.rank_tol);
    if image.len() == rho.herm().dim() {
        return Ok(ProductVectorSet::default());
    }
    let q = HermMat::projector(&image, rho.herm().dim());
    let Ok(nf) = filter_normal_form(rho, T::lit(FILTER_TOL)) else {
        return find_product_vectors_in_subspace(&q, &image, config);
    };
    let image_nf = image_basis(nf.state.herm(), config.rank_tol);
    let q_nf = HermMat::projector(&image_nf, rho.herm().dim());
    let found = find_product_vectors_in_subspace(&q_nf, &image_nf, config)?;

    // Rows of rho in its eigenbasis: the polish residual is then rho psi itself.
    let lmax = eig.values.iter().copied().fold(T::zero(), T::max);
    let rows: Vec<Vec<C<T>>> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > config.rank_tol * lmax)
        .map(|k| eig.vector(k).iter().map(|z| *z * eig.values[k]).collect())
        .collect();
    let mut accepted = Vec::with_capacity(found.len());
    for pv in &found.vectors {
        let back = nf.kernel_vector_to_original(pv)?;
        let refined = polish(&rows, &back, config.polish_iters);
        let obj = objective(&q, &refined);
        if obj < config.accept_tol {
            accepted.push((refined, obj));
        }
    }
    Ok(dedup(accepted, config.dedup_tol))
}

/// All product vectors in the span of the given product vectors.
pub fn find_product_vectors_in_span<T: Real>(
    vectors: &[ProductVector<T>],
    config: &SearchConfig<T>,
) -> Result<ProductVectorSet<T>> {
    let q = span_projector(vectors)?.complement();
    let complement = image_basis(&q, config.rank_tol);
    find_product_vectors_in_subspace(&q, &complement, config)
}

/// The extra product vector in the span of five linearly independent product vectors.
pub fn find_sixth_vector<T: Real>(
    vectors: &[ProductVector<T>],
    config: &SearchConfig<T>,
) -> Result<ProductVector<T>> {
    if vectors.len() != 5 {
        return Err(Error::Dimension(format!("expected 5 product vectors, got {}", vectors.len())));
    }
    let found = find_product_vectors_in_span(vectors, config)?;
    let extra: Vec<ProductVector<T>> = found
        .vectors
        .into_iter()
        .filter(|pv| vectors.iter().all(|v| v.distance(pv) >= config.dedup_tol))
        .collect();
    match extra.as_slice() {
        [one] => Ok(*one),
        [] => Err(Error::Search("no sixth product vector found; degenerate configuration".into())),
        many => Err(Error::Search(format!(
            "{} extra product vectors found; the span is not generic",
            many.len()
        ))),
    }
}

/// Smallest value of `psi^dagger q psi` over normalized product vectors, best of
/// `config.restarts` see-saw runs.
pub fn minimize_over_products<T: Real>(
    q: &HermMat<T>,
    config: &SearchConfig<T>,
) -> Result<SeesawResult<T>> {
    config.validate()?;
    let runs: Vec<SeesawResult<T>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = config.rng(r);
            let start = random_product_vector(&mut rng);
            seesaw_minimize(q, config, &start)
        })
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, r| if r.objective < best.objective { r } else { best })
        .expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cr;
    use crate::upb::{build_state, build_upb, UpbParams};

    fn config() -> SearchConfig<f64> {
        SearchConfig { restarts: 60, ..SearchConfig::with_seed(1) }
    }

    #[test]
    fn identity_objective_is_one() {
        let q = HermMat::new(CMat::<f64>::identity(9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let start = random_product_vector(&mut rng);
            let res = seesaw_minimize(&q, &config(), &start);
            assert!((res.objective - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn upb_member_is_a_fixed_point() {
        let upb = build_upb(&UpbParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        let q = span_projector(upb.vectors()).unwrap().complement();
        let start = upb.vectors()[2];
        let res = seesaw_minimize(&q, &config(), &start);
        assert!(res.objective < 1e-28);
        assert!(res.vector.distance(&start) < 1e-14);
    }

    #[test]
    fn seesaw_is_monotone_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let g = CMat::from_fn(9, 9, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c(re, im)
            });
            let q = HermMat::from_mat_symmetrized(&(&g.adjoint() * &g));
            let start = random_product_vector(&mut rng);
            let (_, trace) = seesaw_minimize_traced(&q, &config(), &start);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn maximally_mixed_has_no_kernel_vectors() {
        let set = find_product_vectors_in_kernel(&DensityMatrix::<f64>::maximally_mixed(), &config()).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn six_kernel_vectors_of_standard_state() {
        let upb = build_upb(&UpbParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        let rho = build_state(&upb).unwrap();
        let set = find_product_vectors_in_kernel(&rho, &config()).unwrap();
        assert_eq!(set.len(), 6);
        for member in upb.vectors() {
            assert!(set.vectors.iter().any(|v| v.distance(member) < 1e-10));
        }
    }

    #[test]
    fn sixth_vector_lies_in_span() {
        let upb = build_upb(&UpbParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        let sixth = find_sixth_vector(upb.vectors(), &config()).unwrap();
        let p = span_projector(upb.vectors()).unwrap();
        let inside = p.expectation(sixth.psi());
        assert!((1.0 - inside).abs() < 1e-12);
        for v in upb.vectors() {
            assert!(v.distance(&sixth) > 1e-3);
        }
    }

    #[test]
    fn polish_converges_quadratically_to_member() {
        let upb = build_upb(&UpbParams::new(0.4, 1.9, 1.2, 0.7).unwrap()).unwrap();
        let q = span_projector(upb.vectors()).unwrap().complement();
        let complement = image_basis(&q, 1e-8);
        let target = upb.vectors()[0];
        let nudged = ProductVector::new(
            target.phi().map(|z| z + cr(1e-3)),
            target.chi().map(|z| z - c(0.0, 1e-3)),
        )
        .unwrap();
        let refined = polish(&complement, &nudged, 30);
        assert!(refined.distance(&target) < 1e-20);
    }

    #[test]
    fn config_validation() {
        let bad = SearchConfig::<f64> { restarts: 0, ..SearchConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SearchConfig::<f64> { accept_tol: -1.0, ..SearchConfig::default() };
        assert!(bad.validate().is_err());
    }
}
