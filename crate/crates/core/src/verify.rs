//! Certification predicates for two-qutrit states.
//!
//! Every flag comes with the number that decided it.

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::product_search::{minimize_over_products, SearchConfig};
use crate::scalar::{c, cr, czero, Real, C};
use crate::tensor::{
    herm_eig, image_basis, partial_trace_a, partial_trace_b, partial_transpose, rank_of_spectrum, CMat,
    HermMat, DEFAULT_RANK_TOL, DIM2,
};

/// Minimum eigenvalue of the partial transpose accepted as non-negative.
pub const PPT_TOL: f64 = 1e-10;
/// Image-distance minimum above which the image is certified product-free.
pub const ENTANGLED_MIN: f64 = 1e-6;
/// Image-distance minimum below which a product vector is taken to lie in the image.
pub const PRODUCT_MAX: f64 = 1e-10;
/// Relative singular-value cutoff for the extremality nullity.
pub const EXTREMAL_SV_TOL: f64 = 1e-6;

/// A boolean verdict and the value behind it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flag<T: Real> {
    pub value: bool,
    pub witness: T,
}

/// `true` iff the smallest eigenvalue of the partial transpose exceeds `-1e-10`.
pub fn is_ppt<T: Real>(rho: &DensityMatrix<T>) -> Flag<T> {
    let min = herm_eig(&partial_transpose(rho.herm())).values[0];
    Flag { value: min > -T::lit(PPT_TOL), witness: min }
}

/// Ranks of the state, its partial transpose, and the two reduced states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub rank: usize,
    pub rank_pt: usize,
    pub local_a: usize,
    pub local_b: usize,
}

pub fn rank_pair<T: Real>(rho: &DensityMatrix<T>, rel_tol: T) -> RankReport {
    let rank_of = |m: &HermMat<T>| rank_of_spectrum(&herm_eig(m).values, rel_tol);
    RankReport {
        rank: rank_of(rho.herm()),
        rank_pt: rank_of(&partial_transpose(rho.herm())),
        local_a: rank_of(&partial_trace_b(rho.herm())),
        local_b: rank_of(&partial_trace_a(rho.herm())),
    }
}

/// Outcome of the product-vector-in-image test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageVerdict {
    /// No product vector in the image: the state is entangled.
    Entangled,
    /// A product vector lies in the image; nothing is concluded about separability.
    ContainsProduct,
    /// The minimum fell between the two thresholds.
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageTest<T: Real> {
    pub verdict: ImageVerdict,
    /// `min psi^dagger (1 - P_im) psi` over normalized product vectors.
    pub minimum: T,
}

impl<T: Real> ImageTest<T> {
    pub fn entangled(&self) -> bool {
        self.verdict == ImageVerdict::Entangled
    }
}

/// Searches for product vectors in the image of `rho`.
pub fn is_entangled_by_image<T: Real>(rho: &DensityMatrix<T>, config: &SearchConfig<T>) -> Result<ImageTest<T>> {
    let image = image_basis(rho.herm(), config.rank_tol);
    let q = HermMat::projector(&image, DIM2).complement();
    let best = minimize_over_products(&q, config)?;
    let minimum = best.objective;
    let verdict = if minimum > T::lit(ENTANGLED_MIN) {
        ImageVerdict::Entangled
    } else if minimum < T::lit(PRODUCT_MAX) {
        ImageVerdict::ContainsProduct
    } else {
        ImageVerdict::Indeterminate
    };
    Ok(ImageTest { verdict, minimum })
}

/// Dimension of the space of Hermitian `H` with `Im H` inside `Im rho` and
/// `Im H^P` inside `Im rho^P`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremalityTest<T: Real> {
    pub extremal: bool,
    pub nullity: usize,
    /// Second-smallest singular value of the constraint map, relative to the largest.
    pub witness: T,
}

/// Extremality of a PPT state as a nullity computation.
///
/// Hermitian matrices supported on `Im rho` are parametrized as `B X B^dagger`
/// with `B` an orthonormal image basis and `X` Hermitian (`m^2` real
/// parameters); the constraint map sends `X` to `(1 - P) (B X B^dagger)^P`,
/// `P` the projector onto `Im rho^P`. The state is extremal iff this map has a
/// one-dimensional kernel, which then is spanned by `rho` itself.
pub fn is_extremal<T: Real>(rho: &DensityMatrix<T>) -> Result<ExtremalityTest<T>> {
    let ppt = is_ppt(rho);
    if !ppt.value {
        return Err(Error::NotPpt(ppt.witness.as_f64()));
    }
    let rank_tol = T::lit(DEFAULT_RANK_TOL);
    let image = image_basis(rho.herm(), rank_tol);
    let image_pt = image_basis(&partial_transpose(rho.herm()), rank_tol);
    let outside_pt = HermMat::projector(&image_pt, DIM2).complement();
    let m = image.len();
    let b = CMat::from_fn(DIM2, m, |i, a| image[a][i]);

    // Real basis of m x m Hermitian matrices.
    let mut basis: Vec<CMat<T>> = Vec::with_capacity(m * m);
    for a in 0..m {
        for bb in a..m {
            if a == bb {
                let mut e = CMat::zeros(m, m);
                e[(a, a)] = cr(T::one());
                basis.push(e);
            } else {
                let mut e = CMat::zeros(m, m);
                e[(a, bb)] = cr(T::one());
                e[(bb, a)] = cr(T::one());
                basis.push(e);
                let mut f = CMat::zeros(m, m);
                f[(a, bb)] = c(T::zero(), T::one());
                f[(bb, a)] = c(T::zero(), -T::one());
                basis.push(f);
            }
        }
    }

    let bh = b.adjoint();
    let columns: Vec<Vec<T>> = basis
        .iter()
        .map(|x| {
            let h = HermMat::from_mat_symmetrized(&(&(&b * x) * &bh));
            let img = &outside_pt.as_mat().clone() * partial_transpose(&h).as_mat();
            img.as_slice().iter().flat_map(|z| [z.re, z.im]).collect()
        })
        .collect();

    let n = columns.len();
    let gram = CMat::from_fn(n, n, |i, j| {
        cr(columns[i].iter().zip(&columns[j]).map(|(x, y)| *x * *y).sum::<T>())
    });
    let eig = herm_eig(&HermMat::from_mat_symmetrized(&gram));
    let svals: Vec<T> = eig.values.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
    let smax = svals.iter().copied().fold(T::zero(), T::max);
    let (nullity, witness) = if smax == T::zero() {
        (n, T::zero())
    } else {
        let cut = T::lit(EXTREMAL_SV_TOL) * smax;
        let nullity = svals.iter().filter(|&&s| s <= cut).count();
        let witness = if n > 1 { svals[1] / smax } else { T::zero() };
        (nullity, witness)
    };
    Ok(ExtremalityTest { extremal: nullity == 1, nullity, witness })
}

/// All certification results for one state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateCertificate<T: Real> {
    pub ppt: Flag<T>,
    pub ranks: RankReport,
    pub image: ImageTest<T>,
    /// `None` when the state is not PPT.
    pub extremality: Option<ExtremalityTest<T>>,
}

impl<T: Real> StateCertificate<T> {
    pub fn is_ppt(&self) -> bool {
        self.ppt.value
    }

    pub fn entangled(&self) -> bool {
        self.image.entangled()
    }

    pub fn extremal(&self) -> bool {
        self.extremality.is_some_and(|e| e.extremal)
    }
}

pub fn certify<T: Real>(rho: &DensityMatrix<T>, config: &SearchConfig<T>) -> Result<StateCertificate<T>> {
    let ppt = is_ppt(rho);
    let extremality = if ppt.value { Some(is_extremal(rho)?) } else { None };
    Ok(StateCertificate {
        ppt,
        ranks: rank_pair(rho, config.rank_tol),
        image: is_entangled_by_image(rho, config)?,
        extremality,
    })
}

/// `(sum_i e_i (x) e_i) / sqrt(3)`.
pub fn maximally_entangled<T: Real>() -> Vec<C<T>> {
    let s = T::one() / T::lit(3.0).sqrt();
    (0..DIM2).map(|k| if k % 4 == 0 { cr(s) } else { czero() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::upb::{build_state, build_upb, UpbParams};

    fn upb_state() -> DensityMatrix<f64> {
        build_state(&build_upb(&UpbParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap()).unwrap()
    }

    fn config() -> SearchConfig<f64> {
        SearchConfig { restarts: 40, ..SearchConfig::with_seed(5) }
    }

    #[test]
    fn ppt_cases() {
        assert!(is_ppt(&upb_state()).value);
        assert!(is_ppt(&DensityMatrix::<f64>::maximally_mixed()).value);
        let me = DensityMatrix::<f64>::pure(&maximally_entangled()).unwrap();
        let flag = is_ppt(&me);
        assert!(!flag.value);
        assert!((flag.witness + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rank_cases() {
        let r = rank_pair(&upb_state(), 1e-8);
        assert_eq!((r.rank, r.rank_pt, r.local_a, r.local_b), (4, 4, 3, 3));
        let mut psi = vec![czero::<f64>(); 9];
        psi[4] = cr(1.0);
        let r = rank_pair(&DensityMatrix::pure(&psi).unwrap(), 1e-8);
        assert_eq!((r.rank, r.rank_pt, r.local_a, r.local_b), (1, 1, 1, 1));
    }

    #[test]
    fn image_test_cases() {
        let t = is_entangled_by_image(&upb_state(), &config()).unwrap();
        assert!(t.entangled() && t.minimum > 1e-3, "{t:?}");
        let diag = DensityMatrix::<f64>::diagonal(&[1.0; 9]).unwrap();
        let t = is_entangled_by_image(&diag, &config()).unwrap();
        assert_eq!(t.verdict, ImageVerdict::ContainsProduct);
    }

    #[test]
    fn extremality_cases() {
        let e = is_extremal(&upb_state()).unwrap();
        assert!(e.extremal && e.nullity == 1, "{e:?}");
        let e = is_extremal(&DensityMatrix::<f64>::maximally_mixed()).unwrap();
        assert!(!e.extremal);
        assert_eq!(e.nullity, 81);
        let me = DensityMatrix::<f64>::pure(&maximally_entangled()).unwrap();
        assert!(matches!(is_extremal(&me), Err(Error::NotPpt(_))));
    }
}
