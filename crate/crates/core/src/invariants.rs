//! SL-invariant determinant ratios of five product vectors.
//!
//! With `u_k` the A factors and `v_k` the B factors of five product vectors
//! (1-based labels below),
//!
//! ```text
//! s1 = -[u1u2u4][u1u3u5] / ([u1u2u5][u1u3u4])
//! s2 = -[u1u2u3][u2u4u5] / ([u1u2u4][u2u3u5])
//! s3 =  [v1v2v3][v1v4v5] / ([v1v2v5][v1v3v4])
//! s4 =  [v1v3v5][v2v3v4] / ([v1v2v3][v3v4v5])
//! ```
//!
//! where `[xyz]` is a 3x3 determinant. Every column appears equally often in
//! numerator and denominator, so the ratios do not depend on column scaling,
//! and any `V in SL(3)` multiplies each determinant by `det V = 1`. On the
//! standard form they evaluate to `(a^2, b^2/a^2, c^2, d^2/c^2)`.

use crate::error::{Error, Result};
use crate::scalar::{Real, C};
use crate::tensor::{det3, phase_fixed, CVec3};
use crate::upb::{ProductVector, UpbParams};

/// Number of product vectors in the kernel of a rank-4 state.
pub const KERNEL_SIZE: usize = 6;

/// Smallest `|det|` of unit columns allowed in a denominator.
pub const DENOMINATOR_TOL: f64 = 1e-12;

/// Reality / positivity tolerance factor; a value `s` is accepted as positive
/// when `|Im s| < tol (1 + |s|)` and `Re s > tol`.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// An ordering of the six kernel vectors: the first five define the invariants.
pub type Ordering6 = [usize; KERNEL_SIZE];

/// The four invariants of an ordered set of five product vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantTuple<T: Real> {
    pub s: [C<T>; 4],
    /// The ordering of the six kernel vectors these were computed from, if any.
    pub ordering: Option<Ordering6>,
}

impl<T: Real> InvariantTuple<T> {
    /// True when all four invariants are real and positive within `tol`.
    pub fn is_positive(&self, tol: T) -> bool {
        self.s.iter().all(|z| z.im.abs() < tol * (T::one() + z.norm()) && z.re > tol)
    }

    pub fn real_parts(&self) -> [T; 4] {
        self.s.map(|z| z.re)
    }

    /// Largest relative difference to another tuple.
    pub fn max_rel_diff(&self, other: &Self) -> T {
        self.s
            .iter()
            .zip(other.s.iter())
            .map(|(x, y)| (x - y).norm() / x.norm().max(y.norm()).max(T::min_positive_value()))
            .fold(T::zero(), T::max)
    }
}

fn unit<T: Real>(v: &CVec3<T>) -> Result<CVec3<T>> {
    phase_fixed(v).ok_or_else(|| Error::Degenerate("zero factor".into()))
}

struct Dets<'a, T: Real>(&'a [CVec3<T>]);

impl<T: Real> Dets<'_, T> {
    /// Determinant of the columns with 1-based labels `i, j, k`.
    fn at(&self, i: usize, j: usize, k: usize) -> C<T> {
        det3(&self.0[i - 1], &self.0[j - 1], &self.0[k - 1])
    }

    fn ratio(&self, num: [(usize, usize, usize); 2], den: [(usize, usize, usize); 2]) -> Result<C<T>> {
        let d0 = self.at(den[0].0, den[0].1, den[0].2);
        let d1 = self.at(den[1].0, den[1].1, den[1].2);
        let tol = T::lit(DENOMINATOR_TOL);
        if !(d0.norm() > tol && d1.norm() > tol) {
            return Err(Error::Degenerate(format!(
                "near-zero determinant in invariant denominator ({:e}, {:e})",
                d0.norm().as_f64(),
                d1.norm().as_f64()
            )));
        }
        let n0 = self.at(num[0].0, num[0].1, num[0].2);
        let n1 = self.at(num[1].0, num[1].1, num[1].2);
        Ok(n0 * n1 / (d0 * d1))
    }
}

/// The invariants `(s1, s2, s3, s4)` from A factors `u` and B factors `v` (five each).
pub fn invariants_from_factors<T: Real>(u: &[CVec3<T>], v: &[CVec3<T>]) -> Result<[C<T>; 4]> {
    if u.len() != 5 || v.len() != 5 {
        return Err(Error::Dimension(format!("invariants need 5 columns, got {} and {}", u.len(), v.len())));
    }
    let u: Vec<CVec3<T>> = u.iter().map(unit).collect::<Result<_>>()?;
    let v: Vec<CVec3<T>> = v.iter().map(unit).collect::<Result<_>>()?;
    let du = Dets(&u);
    let dv = Dets(&v);
    let s1 = -du.ratio([(1, 2, 4), (1, 3, 5)], [(1, 2, 5), (1, 3, 4)])?;
    let s2 = -du.ratio([(1, 2, 3), (2, 4, 5)], [(1, 2, 4), (2, 3, 5)])?;
    let s3 = dv.ratio([(1, 2, 3), (1, 4, 5)], [(1, 2, 5), (1, 3, 4)])?;
    let s4 = dv.ratio([(1, 3, 5), (2, 3, 4)], [(1, 2, 3), (3, 4, 5)])?;
    Ok([s1, s2, s3, s4])
}

/// Invariants of five product vectors, in the given order.
pub fn compute_invariants<T: Real>(vectors: &[ProductVector<T>]) -> Result<InvariantTuple<T>> {
    let u: Vec<CVec3<T>> = vectors.iter().map(|p| *p.phi()).collect();
    let v: Vec<CVec3<T>> = vectors.iter().map(|p| *p.chi()).collect();
    Ok(InvariantTuple { s: invariants_from_factors(&u, &v)?, ordering: None })
}

/// An ordering whose first five vectors give four positive invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibleOrdering<T: Real> {
    pub ordering: Ordering6,
    pub invariants: InvariantTuple<T>,
}

impl<T: Real> AdmissibleOrdering<T> {
    /// Index of the vector left out of the invariants.
    pub fn excluded(&self) -> usize {
        self.ordering[KERNEL_SIZE - 1]
    }
}

/// Result of scanning all orderings of six product vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderingReport<T: Real> {
    pub admissible: Vec<AdmissibleOrdering<T>>,
    pub total_tested: usize,
}

impl<T: Real> OrderingReport<T> {
    /// Number of admissible orderings leaving out vector `k`.
    pub fn count_excluding(&self, k: usize) -> usize {
        self.admissible.iter().filter(|a| a.excluded() == k).count()
    }

    pub fn orderings(&self) -> Vec<Ordering6> {
        self.admissible.iter().map(|a| a.ordering).collect()
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    while let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) {
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

/// Scans all 720 orderings of six product vectors for four positive invariants.
///
/// An empty admissible list means the vectors are not SL-equivalent to an
/// orthogonal UPB (together with its sixth vector).
pub fn find_positive_orderings<T: Real>(vectors: &[ProductVector<T>]) -> Result<OrderingReport<T>> {
    find_positive_orderings_with_tol(vectors, T::lit(POSITIVITY_TOL))
}

pub fn find_positive_orderings_with_tol<T: Real>(
    vectors: &[ProductVector<T>],
    tol: T,
) -> Result<OrderingReport<T>> {
    if vectors.len() != KERNEL_SIZE {
        return Err(Error::Dimension(format!("expected 6 product vectors, got {}", vectors.len())));
    }
    let perms = permutations(KERNEL_SIZE);
    let mut admissible = Vec::new();
    for p in &perms {
        let ordered: Vec<ProductVector<T>> = p[..5].iter().map(|&k| vectors[k]).collect();
        // Orderings hitting a singular denominator are simply not admissible.
        let Ok(mut inv) = compute_invariants(&ordered) else { continue };
        if inv.is_positive(tol) {
            let ordering: Ordering6 = std::array::from_fn(|i| p[i]);
            inv.ordering = Some(ordering);
            admissible.push(AdmissibleOrdering { ordering, invariants: inv });
        }
    }
    Ok(OrderingReport { admissible, total_tested: perms.len() })
}

/// `a = sqrt(s1)`, `b = sqrt(s1 s2)`, `c = sqrt(s3)`, `d = sqrt(s3 s4)`.
pub fn recover_parameters<T: Real>(inv: &InvariantTuple<T>) -> Result<UpbParams<T>> {
    if !inv.is_positive(T::lit(POSITIVITY_TOL)) {
        return Err(Error::InvalidParameter(format!(
            "invariants must be real and positive, got {:?}",
            inv.s.map(|z| (z.re.as_f64(), z.im.as_f64()))
        )));
    }
    let [s1, s2, s3, s4] = inv.real_parts();
    UpbParams::new(s1.sqrt(), (s1 * s2).sqrt(), s3.sqrt(), (s3 * s4).sqrt())
}

/// Invariants expected for the standard form: `(a^2, b^2/a^2, c^2, d^2/c^2)`.
pub fn standard_form_invariants<T: Real>(p: &UpbParams<T>) -> [T; 4] {
    let [al, be, ga, de] = p.squares();
    [al, be / al, ga, de / ga]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cr;
    use crate::upb::{build_upb, build_u, build_v};

    fn inv(s: [f64; 4]) -> InvariantTuple<f64> {
        InvariantTuple { s: s.map(cr), ordering: None }
    }

    #[test]
    fn recovery_examples() {
        let p = recover_parameters(&inv([4.0, 0.25, 9.0, 1.0 / 9.0])).unwrap();
        assert!(p.max_rel_diff(&UpbParams::new(2.0, 1.0, 3.0, 1.0).unwrap()) < 1e-15);
        let p = recover_parameters(&inv([1.0; 4])).unwrap();
        assert_eq!(p.to_array(), [1.0; 4]);
        assert!(recover_parameters(&inv([1.0, -1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn standard_form_closed_form() {
        let p = UpbParams::<f64>::new(1.3, 0.45, 2.2, 0.9).unwrap();
        let u = build_u(p.a, p.b).unwrap();
        let v = build_v(p.c, p.d).unwrap();
        let uc: Vec<_> = (0..5).map(|k| u.column3(k)).collect();
        let vc: Vec<_> = (0..5).map(|k| v.column3(k)).collect();
        let s = invariants_from_factors(&uc, &vc).unwrap();
        let want = standard_form_invariants(&p);
        for (got, w) in s.iter().zip(want) {
            assert!((got - cr(w)).norm() < 1e-14 * w.max(1.0), "{got} vs {w}");
        }
        let back = recover_parameters(&compute_invariants(build_upb(&p).unwrap().vectors()).unwrap()).unwrap();
        assert!(back.max_rel_diff(&p) < 1e-12);
    }

    #[test]
    fn permutation_enumeration() {
        let perms = permutations(6);
        assert_eq!(perms.len(), 720);
        assert_eq!(perms[0], vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(perms[719], vec![5, 4, 3, 2, 1, 0]);
    }

    #[test]
    fn coplanar_factors_rejected() {
        let p = UpbParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let upb = build_upb(&p).unwrap();
        let mut v = upb.vectors().to_vec();
        v[3] = v[0];
        assert!(matches!(compute_invariants(&v), Err(Error::Degenerate(_))));
    }
}
