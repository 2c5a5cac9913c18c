//! Standard-form orthogonal UPBs of the 3x3 system and the PPT states built from them.
//!
//! Five product vectors `phi_k (x) chi_k` form an orthogonal UPB when, in a
//! suitable ordering, the A-factors are orthogonal around the pentagon
//! (`phi_k _|_ phi_{k+1}`) and the B-factors around the pentagram
//! (`chi_k _|_ chi_{k+2}`), indices mod 5. Up to local unitaries every such UPB
//! is given by four positive reals `(a, b, c, d)` through the column matrices
//! returned by [`build_u`] and [`build_v`].

use std::fmt;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::scalar::{cr, Real, C};
use crate::tensor::{
    det3, inner, kron, norm, orthonormalize, phase_fixed, CMat, CVec3, CVec9, HermMat, DIM2,
};

/// Number of members of an orthogonal UPB in the 3x3 system.
pub const UPB_SIZE: usize = 5;

/// Parameter range outside of which rank thresholds start to interact with conditioning.
pub const WELL_CONDITIONED_RANGE: (f64, f64) = (1e-3, 1e3);

/// The four strictly positive standard-form parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpbParams<T: Real> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> UpbParams<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and > 0")));
            }
        }
        Ok(Self { a, b, c, d })
    }

    pub fn from_slice(p: &[T]) -> Result<Self> {
        match p {
            [a, b, c, d] => Self::new(*a, *b, *c, *d),
            _ => Err(Error::InvalidParameter(format!("expected 4 parameters, got {}", p.len()))),
        }
    }

    /// From the squared parameters `(alpha, beta, gamma, delta)`.
    pub fn from_squares(sq: [T; 4]) -> Result<Self> {
        Self::new(sq[0].sqrt(), sq[1].sqrt(), sq[2].sqrt(), sq[3].sqrt())
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `(alpha, beta, gamma, delta) = (a^2, b^2, c^2, d^2)`.
    pub fn squares(&self) -> [T; 4] {
        [self.a * self.a, self.b * self.b, self.c * self.c, self.d * self.d]
    }

    pub fn is_well_conditioned(&self) -> bool {
        let (lo, hi) = (T::lit(WELL_CONDITIONED_RANGE.0), T::lit(WELL_CONDITIONED_RANGE.1));
        self.to_array().iter().all(|&v| v >= lo && v <= hi)
    }

    /// Largest relative componentwise difference.
    pub fn max_rel_diff(&self, other: &Self) -> T {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(&x, y)| (x - y).abs() / x.abs().max(y.abs()))
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> fmt::Display for UpbParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.a, self.b, self.c, self.d)
    }
}

/// A product vector `phi (x) chi` with both factors unit-norm and phase-fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductVector<T: Real> {
    phi: CVec3<T>,
    chi: CVec3<T>,
    psi: CVec9<T>,
}

impl<T: Real> ProductVector<T> {
    pub fn new(phi: CVec3<T>, chi: CVec3<T>) -> Result<Self> {
        let phi = phase_fixed(&phi).ok_or_else(|| Error::Degenerate("zero A factor".into()))?;
        let chi = phase_fixed(&chi).ok_or_else(|| Error::Degenerate("zero B factor".into()))?;
        Ok(Self { phi, chi, psi: kron(&phi, &chi) })
    }

    pub fn phi(&self) -> &CVec3<T> {
        &self.phi
    }

    pub fn chi(&self) -> &CVec3<T> {
        &self.chi
    }

    /// The Kronecker product, unit norm.
    pub fn psi(&self) -> &CVec9<T> {
        &self.psi
    }

    /// The same product vector with the B factor complex-conjugated; the image of
    /// `psi psi^dagger` under partial transposition is the projector on this vector.
    pub fn conj_b(&self) -> Self {
        Self::new(self.phi, self.chi.map(|z| z.conj())).expect("unit vectors")
    }

    /// Projective distance on the A and B factors separately, the larger of the two.
    pub fn distance(&self, other: &Self) -> T {
        use crate::tensor::projective_distance;
        projective_distance(&self.phi, &other.phi).max(projective_distance(&self.chi, &other.chi))
    }

    /// Lexicographic key over the real and imaginary parts of both factors.
    pub(crate) fn sort_key(&self) -> [T; 12] {
        let mut k = [T::zero(); 12];
        for (i, z) in self.phi.iter().chain(self.chi.iter()).enumerate() {
            k[2 * i] = z.re;
            k[2 * i + 1] = z.im;
        }
        k
    }
}

/// Standard-form A-factor columns:
///
/// ```text
/// [ 1  0  a  b  0 ]
/// [ 0  1  0  1  a ]
/// [ 0  0  b -a  1 ]
/// ```
pub fn build_u<T: Real>(a: T, b: T) -> Result<CMat<T>> {
    positive(&[("a", a), ("b", b)])?;
    let (o, z) = (T::one(), T::zero());
    Ok(real_mat([[o, z, a, b, z], [z, o, z, o, a], [z, z, b, -a, o]]))
}

/// Standard-form B-factor columns:
///
/// ```text
/// [ 1  d  0  0  c ]
/// [ 0  1  1  c  0 ]
/// [ 0 -c  0  1  d ]
/// ```
pub fn build_v<T: Real>(c: T, d: T) -> Result<CMat<T>> {
    positive(&[("c", c), ("d", d)])?;
    let (o, z) = (T::one(), T::zero());
    Ok(real_mat([[o, d, z, z, c], [z, o, o, c, z], [z, -c, z, o, d]]))
}

fn positive<T: Real>(vals: &[(&str, T)]) -> Result<()> {
    for (name, v) in vals {
        if !(*v > T::zero() && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and > 0")));
        }
    }
    Ok(())
}

fn real_mat<T: Real>(rows: [[T; 5]; 3]) -> CMat<T> {
    CMat::from_fn(3, 5, |i, j| cr(rows[i][j]))
}

/// An ordered set of five product vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Upb<T: Real> {
    vectors: Vec<ProductVector<T>>,
    origin: Option<UpbParams<T>>,
}

impl<T: Real> Upb<T> {
    /// Minimal `|det|` over 3-subsets of normalized factors accepted as linearly independent.
    pub const INDEPENDENCE_TOL: f64 = 1e-10;

    /// Validates that any three A factors and any three B factors are linearly independent.
    pub fn new(vectors: Vec<ProductVector<T>>) -> Result<Self> {
        if vectors.len() != UPB_SIZE {
            return Err(Error::Dimension(format!("a UPB needs 5 vectors, got {}", vectors.len())));
        }
        let upb = Self { vectors, origin: None };
        let (da, db) = upb.min_triple_dets();
        let tol = T::lit(Self::INDEPENDENCE_TOL);
        if !(da > tol && db > tol) {
            return Err(Error::Degenerate(format!(
                "three factors are nearly coplanar (min |det| A {:e}, B {:e})",
                da.as_f64(),
                db.as_f64()
            )));
        }
        Ok(upb)
    }

    pub fn vectors(&self) -> &[ProductVector<T>] {
        &self.vectors
    }

    pub fn origin(&self) -> Option<&UpbParams<T>> {
        self.origin.as_ref()
    }

    pub fn phis(&self) -> Vec<CVec3<T>> {
        self.vectors.iter().map(|v| *v.phi()).collect()
    }

    pub fn chis(&self) -> Vec<CVec3<T>> {
        self.vectors.iter().map(|v| *v.chi()).collect()
    }

    /// Smallest `|det|` over all ten 3-subsets of the (unit) A factors and of the B factors.
    pub fn min_triple_dets(&self) -> (T, T) {
        let mut da = T::infinity();
        let mut db = T::infinity();
        for (i, j, k) in triples() {
            let [x, y, z] = [&self.vectors[i], &self.vectors[j], &self.vectors[k]];
            da = da.min(det3(x.phi(), y.phi(), z.phi()).norm());
            db = db.min(det3(x.chi(), y.chi(), z.chi()).norm());
        }
        (da, db)
    }
}

/// The ten 3-subsets of `0..5`.
pub fn triples() -> impl Iterator<Item = (usize, usize, usize)> {
    (0..UPB_SIZE).flat_map(|i| {
        (i + 1..UPB_SIZE).flat_map(move |j| (j + 1..UPB_SIZE).map(move |k| (i, j, k)))
    })
}

/// The standard-form UPB: `phi_k` is column `k` of [`build_u`], `chi_k` column `k` of [`build_v`].
pub fn build_upb<T: Real>(params: &UpbParams<T>) -> Result<Upb<T>> {
    let u = build_u(params.a, params.b)?;
    let v = build_v(params.c, params.d)?;
    let vectors = (0..UPB_SIZE)
        .map(|k| ProductVector::new(u.column3(k), v.column3(k)))
        .collect::<Result<Vec<_>>>()?;
    let mut upb = Upb::new(vectors)?;
    upb.origin = Some(*params);
    Ok(upb)
}

/// A-factor edges `(k, k+1)` and B-factor edges `(k, k+2)`, indices mod 5.
pub fn a_edges() -> [(usize, usize); 5] {
    std::array::from_fn(|k| (k, (k + 1) % UPB_SIZE))
}

pub fn b_edges() -> [(usize, usize); 5] {
    std::array::from_fn(|k| (k, (k + 2) % UPB_SIZE))
}

/// Largest overlaps over the orthogonality graph edges; both vanish for a
/// correctly ordered orthogonal UPB.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthogonalityReport<T: Real> {
    pub max_a: T,
    pub max_b: T,
}

impl<T: Real> OrthogonalityReport<T> {
    pub fn holds(&self, tol: T) -> bool {
        self.max_a < tol && self.max_b < tol
    }
}

pub fn check_orthogonality_graph<T: Real>(upb: &Upb<T>) -> OrthogonalityReport<T> {
    let v = upb.vectors();
    let overlap = |x: &CVec3<T>, y: &CVec3<T>| inner(x, y).norm() / (norm(x) * norm(y));
    let max_a = a_edges().iter().map(|&(i, j)| overlap(v[i].phi(), v[j].phi())).fold(T::zero(), T::max);
    let max_b = b_edges().iter().map(|&(i, j)| overlap(v[i].chi(), v[j].chi())).fold(T::zero(), T::max);
    OrthogonalityReport { max_a, max_b }
}

/// Orthogonal projection onto the span of the given product vectors; errors when
/// they span fewer dimensions than there are vectors.
pub fn span_projector<T: Real>(vectors: &[ProductVector<T>]) -> Result<HermMat<T>> {
    let psis: Vec<Vec<C<T>>> = vectors.iter().map(|v| v.psi().to_vec()).collect();
    let basis = orthonormalize(&psis, T::lit(1e-10));
    if basis.len() != vectors.len() {
        return Err(Error::Degenerate(format!(
            "{} product vectors span only {} dimensions",
            vectors.len(),
            basis.len()
        )));
    }
    Ok(HermMat::projector(&basis, DIM2))
}

/// `rho = (1 - P_U) / (9 - 5)` with `P_U` the projection onto the span of the UPB.
pub fn build_state<T: Real>(upb: &Upb<T>) -> Result<DensityMatrix<T>> {
    let p = span_projector(upb.vectors())?;
    let free = T::lit((DIM2 - UPB_SIZE) as f64);
    let m = p.complement().as_mat().scale_real(T::one() / free);
    DensityMatrix::new(HermMat::from_mat_symmetrized(&m))
}
