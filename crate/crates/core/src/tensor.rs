//! Small dense complex linear algebra for the 3x3 bipartite system.
//!
//! Composite indices follow `(i, j) -> 3 * i + j` with `i` the subsystem-A index
//! and `j` the subsystem-B index. [`kron`], [`partial_transpose`] and the
//! partial traces all rely on this convention.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};
use crate::scalar::{cone, cr, czero, Real, C};

/// Local dimension of each subsystem.
pub const DIM: usize = 3;
/// Dimension of the composite space.
pub const DIM2: usize = DIM * DIM;

pub type CVec3<T> = [C<T>; DIM];
pub type CVec9<T> = [C<T>; DIM2];

/// Composite index of the basis vector `e_i (x) e_j`.
#[inline]
pub const fn pair_index(i: usize, j: usize) -> usize {
    DIM * i + j
}

/// `phi (x) chi`, i.e. `result[3i + j] = phi[i] * chi[j]`.
pub fn kron<T: Real>(phi: &CVec3<T>, chi: &CVec3<T>) -> CVec9<T> {
    let mut out = [czero(); DIM2];
    for i in 0..DIM {
        for j in 0..DIM {
            out[pair_index(i, j)] = phi[i] * chi[j];
        }
    }
    out
}

/// `<a, b>`, conjugate-linear in the first argument.
pub fn inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sqr<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm<T: Real>(v: &[C<T>]) -> T {
    norm_sqr(v).sqrt()
}

/// Unit-norm copy with the first component of magnitude above `1e-10`
/// rotated to be real positive. `None` for a (numerically) zero vector.
pub fn phase_fixed<T: Real, const N: usize>(v: &[C<T>; N]) -> Option<[C<T>; N]> {
    let n = norm(v);
    if !(n > T::zero()) || !n.is_finite() {
        return None;
    }
    let thresh = T::lit(1e-10);
    let mut out = *v;
    for z in out.iter_mut() {
        *z /= n;
    }
    if let Some(lead) = out.iter().find(|z| z.norm() > thresh).copied() {
        let phase = lead.conj() / lead.norm();
        for z in out.iter_mut() {
            *z *= phase;
        }
    }
    Some(out)
}

/// `1 - |<x, y>|^2 / (|x|^2 |y|^2)`; zero iff the vectors are parallel.
pub fn projective_distance<T: Real>(x: &[C<T>], y: &[C<T>]) -> T {
    let s = sine_angle(x, y);
    s * s
}

/// Sine of the angle between two complex lines.
///
/// Computed from the component of `x` orthogonal to `y`, which keeps full
/// relative precision for nearly parallel lines (`sqrt(1 - cos^2)` does not).
pub fn sine_angle<T: Real>(x: &[C<T>], y: &[C<T>]) -> T {
    let (nx, ny) = (norm_sqr(x), norm_sqr(y));
    if nx == T::zero() || ny == T::zero() {
        return T::one();
    }
    let proj = inner(y, x) / C::new(ny, T::zero());
    let perp = x.iter().zip(y).map(|(a, b)| (*a - *b * proj).norm_sqr()).sum::<T>();
    (perp / nx).sqrt().min(T::one())
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> fmt::Debug for CMat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for col in 0..self.cols {
                let z = self[(r, col)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re.as_f64(), z.im.as_f64())?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { cone() } else { czero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major data; `None` when the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<T>>) -> Option<Self> {
        (rows > 0 && cols > 0 && data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows[0].len();
        Self::from_fn(rows.len(), cols, |i, j| cr(T::lit(rows[i][j])))
    }

    pub fn from_columns(columns: &[&[C<T>]]) -> Self {
        let rows = columns[0].len();
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn diag(entries: &[C<T>]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { czero() })
    }

    /// Outer product `x y^dagger`.
    pub fn outer(x: &[C<T>], y: &[C<T>]) -> Self {
        Self::from_fn(x.len(), y.len(), |i, j| x[i] * y[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column3(&self, j: usize) -> CVec3<T> {
        assert_eq!(self.rows, DIM);
        [self[(0, j)], self[(1, j)], self[(2, j)]]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius_norm(&self) -> T {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension");
        (0..self.rows).map(|i| inner_plain(self.row(i), v)).collect()
    }

    pub fn mul_vec3(&self, v: &CVec3<T>) -> CVec3<T> {
        assert!(self.rows == DIM && self.cols == DIM);
        let w = self.mul_vec(v);
        [w[0], w[1], w[2]]
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    /// Largest absolute deviation from Hermiticity, `max |m_ij - conj(m_ji)|`.
    pub fn hermitian_deviation(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut dev = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(m + m^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> C<T> {
        assert!(self.is_square(), "det of non-square matrix");
        if self.rows == DIM {
            return det3(&self.column3(0), &self.column3(1), &self.column3(2));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = cone::<T>();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].norm().partial_cmp(&a[y * n + k].norm()).unwrap())
                .unwrap();
            if a[p * n + k].norm() == T::zero() {
                return czero();
            }
            if p != k {
                for j in 0..n {
                    a.swap(p * n + j, k * n + j);
                }
                det = -det;
            }
            let pivot = a[k * n + k];
            det *= pivot;
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                for j in k..n {
                    let v = a[k * n + j];
                    a[i * n + j] -= f * v;
                }
            }
        }
        det
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        if !self.is_square() || rhs.rows != self.rows {
            return Err(Error::Dimension(format!(
                "solve: {}x{} against {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        let scale = self.max_abs();
        let tiny = scale * T::epsilon() * T::lit(n as f64);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].norm().partial_cmp(&a[y * n + k].norm()).unwrap())
                .unwrap();
            if !(a[p * n + k].norm() > tiny) {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(p * n + j, k * n + j);
                }
                for j in 0..m {
                    b.swap(p * m + j, k * m + j);
                }
            }
            let pivot = a[k * n + k];
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[i * n + k] / pivot;
                if f == czero() {
                    continue;
                }
                for j in k..n {
                    let v = a[k * n + j];
                    a[i * n + j] -= f * v;
                }
                for j in 0..m {
                    let v = b[k * m + j];
                    b[i * m + j] -= f * v;
                }
            }
        }
        for k in 0..n {
            let pivot = a[k * n + k];
            for j in 0..m {
                b[k * m + j] /= pivot;
            }
        }
        Ok(Self { rows: n, cols: m, data: b })
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.rows))
    }

    /// Singular values in descending order, from the spectrum of `m^dagger m`.
    pub fn singular_values(&self) -> Vec<T> {
        let gram = HermMat::from_mat_symmetrized(&(&self.adjoint() * self));
        let eig = herm_eig(&gram);
        let mut s: Vec<T> = eig.values.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
        s.reverse();
        s
    }

    /// Ratio of largest to smallest singular value.
    pub fn condition_number(&self) -> T {
        let s = self.singular_values();
        let lo = *s.last().unwrap();
        if lo == T::zero() {
            T::infinity()
        } else {
            s[0] / lo
        }
    }
}

fn inner_plain<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + *x * *y)
}

/// Determinant of the 3x3 matrix with columns `(x, y, z)`.
pub fn det3<T: Real>(x: &CVec3<T>, y: &CVec3<T>, z: &CVec3<T>) -> C<T> {
    x[0] * (y[1] * z[2] - y[2] * z[1]) - y[0] * (x[1] * z[2] - x[2] * z[1])
        + z[0] * (x[1] * y[2] - x[2] * y[1])
}

impl<T: Real> Index<(usize, usize)> for CMat<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a, T: Real> Mul<&'a CMat<T>> for &'a CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: &'a CMat<T>) -> CMat<T> {
        assert_eq!(self.cols, rhs.rows, "matmul dimension");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == czero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<'a, T: Real> Add<&'a CMat<T>> for &'a CMat<T> {
    type Output = CMat<T>;
    fn add(self, rhs: &'a CMat<T>) -> CMat<T> {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "add dimension");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a, T: Real> Sub<&'a CMat<T>> for &'a CMat<T> {
    type Output = CMat<T>;
    fn sub(self, rhs: &'a CMat<T>) -> CMat<T> {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "sub dimension");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Square matrix known to be Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMat<T: Real>(CMat<T>);

impl<T: Real> HermMat<T> {
    /// Absolute tolerance on `|m_ij - conj(m_ji)|` accepted by [`HermMat::new`].
    pub const TOLERANCE: f64 = 1e-12;

    /// Validates Hermiticity within [`HermMat::TOLERANCE`] and stores the exact Hermitian part.
    pub fn new(m: CMat<T>) -> Result<Self> {
        Self::with_tolerance(m, T::lit(Self::TOLERANCE))
    }

    pub fn with_tolerance(m: CMat<T>, tol: T) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("{}x{} is not square", m.rows, m.cols)));
        }
        let dev = m.hermitian_deviation();
        if !(dev <= tol) {
            return Err(Error::NotHermitian(dev.as_f64()));
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Hermitian part of `m`, no validation.
    pub fn from_mat_symmetrized(m: &CMat<T>) -> Self {
        assert!(m.is_square());
        Self(m.hermitian_part())
    }

    /// Orthogonal projection onto the span of the given orthonormal columns.
    pub fn projector(basis: &[Vec<C<T>>], dim: usize) -> Self {
        let mut p = CMat::zeros(dim, dim);
        for v in basis {
            p = &p + &CMat::outer(v, v);
        }
        Self::from_mat_symmetrized(&p)
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_mat(&self) -> &CMat<T> {
        &self.0
    }

    pub fn into_mat(self) -> CMat<T> {
        self.0
    }

    pub fn trace(&self) -> T {
        self.0.trace().re
    }

    /// `v^dagger m v`, real for Hermitian `m`.
    pub fn expectation(&self, v: &[C<T>]) -> T {
        inner(v, &self.0.mul_vec(v)).re
    }

    /// `identity - self`, e.g. the complementary projector.
    pub fn complement(&self) -> Self {
        Self::from_mat_symmetrized(&(&CMat::identity(self.dim()) - &self.0))
    }

    /// `a m a^dagger` with the result re-symmetrized against roundoff.
    pub fn congruence(&self, a: &CMat<T>) -> Self {
        let m = &(a * &self.0) * &a.adjoint();
        Self::from_mat_symmetrized(&m)
    }
}

/// Entry `((i,j),(i',j'))` of the result is entry `((i,j'),(i',j))` of `rho`,
/// i.e. the transpose taken on subsystem B.
pub fn partial_transpose<T: Real>(rho: &HermMat<T>) -> HermMat<T> {
    partial_transpose_dims(rho, DIM, DIM)
}

pub fn partial_transpose_dims<T: Real>(rho: &HermMat<T>, da: usize, db: usize) -> HermMat<T> {
    let n = da * db;
    assert_eq!(rho.dim(), n, "partial transpose dimension");
    let m = rho.as_mat();
    let out = CMat::from_fn(n, n, |r, s| {
        let (i, j) = (r / db, r % db);
        let (ip, jp) = (s / db, s % db);
        m[(i * db + jp, ip * db + j)]
    });
    // Permuting entries of a Hermitian matrix this way keeps it Hermitian exactly.
    HermMat(out)
}

/// Reduced matrix on subsystem A (trace over B).
pub fn partial_trace_b<T: Real>(rho: &HermMat<T>) -> HermMat<T> {
    let m = rho.as_mat();
    HermMat(CMat::from_fn(DIM, DIM, |i, ip| {
        (0..DIM).fold(czero(), |acc, j| acc + m[(pair_index(i, j), pair_index(ip, j))])
    }))
}

/// Reduced matrix on subsystem B (trace over A).
pub fn partial_trace_a<T: Real>(rho: &HermMat<T>) -> HermMat<T> {
    let m = rho.as_mat();
    HermMat(CMat::from_fn(DIM, DIM, |j, jp| {
        (0..DIM).fold(czero(), |acc, i| acc + m[(pair_index(i, j), pair_index(i, jp))])
    }))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig<T: Real> {
    /// Ascending.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMat<T>,
}

impl<T: Real> HermEig<T> {
    pub fn vector(&self, k: usize) -> Vec<C<T>> {
        self.vectors.column(k)
    }

    pub fn min_vector3(&self) -> CVec3<T> {
        self.vectors.column3(0)
    }

    /// `Q diag(values) Q^dagger`.
    pub fn reconstruct(&self) -> CMat<T> {
        let lam = CMat::diag(&self.values.iter().map(|&l| cr(l)).collect::<Vec<_>>());
        &(&self.vectors * &lam) * &self.vectors.adjoint()
    }
}

/// Eigendecomposition of an arbitrary square matrix after checking it is Hermitian.
pub fn herm_eig_checked<T: Real>(m: &CMat<T>) -> Result<HermEig<T>> {
    let scale = T::one().max(m.max_abs());
    let h = HermMat::with_tolerance(m.clone(), T::lit(HermMat::<T>::TOLERANCE) * scale)?;
    Ok(herm_eig(&h))
}

/// Cyclic complex Jacobi eigensolver. Eigenvalues ascending; deterministic in its input.
pub fn herm_eig<T: Real>(h: &HermMat<T>) -> HermEig<T> {
    let n = h.dim();
    let mut a = h.as_mat().clone();
    let mut v = CMat::<T>::identity(n);
    let total = a.frobenius_norm();
    let eps = T::epsilon();

    if total > T::zero() {
        for _sweep in 0..100 {
            let mut off = T::zero();
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= eps * total * T::lit(1e-2) {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q, eps * total * T::lit(1e-3));
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&x, &y| diag[x].partial_cmp(&diag[y]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| diag[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    HermEig { values, vectors }
}

/// One Jacobi rotation annihilating `a[p][q]`: `a <- G^dagger a G`, `v <- v G`.
fn rotate<T: Real>(a: &mut CMat<T>, v: &mut CMat<T>, p: usize, q: usize, skip_below: T) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r <= skip_below {
        return;
    }
    let n = a.rows;
    // phase = exp(-i arg apq); W = diag(1, phase) makes the pivot block real.
    let phase = apq.conj() / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (T::lit(2.0) * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    let cs = T::one() / (t * t + T::one()).sqrt();
    let sn = t * cs;
    // G = W R with R = [[c, s], [-s, c]].
    let g_pp = cr(cs);
    let g_pq = cr(sn);
    let g_qp = phase * (-sn);
    let g_qq = phase * cs;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = czero();
    a[(q, p)] = czero();
    a[(p, p)] = cr(a[(p, p)].re);
    a[(q, q)] = cr(a[(q, q)].re);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

/// Number of eigenvalues with `|lambda| > rel_tol * max |lambda|`; zero for the zero matrix.
pub fn numerical_rank<T: Real>(m: &HermMat<T>, rel_tol: T) -> usize {
    rank_of_spectrum(&herm_eig(m).values, rel_tol)
}

pub fn rank_of_spectrum<T: Real>(values: &[T], rel_tol: T) -> usize {
    let max = values.iter().fold(T::zero(), |acc, l| acc.max(l.abs()));
    if max == T::zero() {
        return 0;
    }
    values.iter().filter(|l| l.abs() > rel_tol * max).count()
}

/// Default relative tolerance for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Orthonormal basis of the span of `vectors` by modified Gram-Schmidt, dropping
/// directions whose residual norm falls below `rel_tol` times the input norm.
pub fn orthonormalize<T: Real>(vectors: &[Vec<C<T>>], rel_tol: T) -> Vec<Vec<C<T>>> {
    let mut basis: Vec<Vec<C<T>>> = Vec::new();
    for v in vectors {
        let n0 = norm(v);
        if n0 == T::zero() {
            continue;
        }
        let mut w: Vec<C<T>> = v.iter().map(|z| z / n0).collect();
        for _pass in 0..2 {
            for e in &basis {
                let proj = inner(e, &w);
                for (wi, ei) in w.iter_mut().zip(e) {
                    *wi -= proj * ei;
                }
            }
        }
        let n = norm(&w);
        if n > rel_tol {
            basis.push(w.into_iter().map(|z| z / n).collect());
        }
    }
    basis
}

/// Eigenvectors of `m` whose eigenvalues exceed `rel_tol * max |lambda|`, i.e. an
/// orthonormal basis of the image.
pub fn image_basis<T: Real>(m: &HermMat<T>, rel_tol: T) -> Vec<Vec<C<T>>> {
    let eig = herm_eig(m);
    let max = eig.values.iter().fold(T::zero(), |acc, l| acc.max(l.abs()));
    (0..m.dim())
        .filter(|&k| max > T::zero() && eig.values[k].abs() > rel_tol * max)
        .map(|k| eig.vector(k))
        .collect()
}

/// Orthonormal basis of the kernel; complement of [`image_basis`].
pub fn kernel_basis<T: Real>(m: &HermMat<T>, rel_tol: T) -> Vec<Vec<C<T>>> {
    let eig = herm_eig(m);
    let max = eig.values.iter().fold(T::zero(), |acc, l| acc.max(l.abs()));
    (0..m.dim())
        .filter(|&k| max == T::zero() || eig.values[k].abs() <= rel_tol * max)
        .map(|k| eig.vector(k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn e(i: usize) -> CVec3<f64> {
        let mut v = [czero(); 3];
        v[i] = cone();
        v
    }

    fn pseudo_random_mat(n: usize, seed: u64) -> CMat<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        CMat::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn kron_of_basis_vectors() {
        let k = kron(&e(0), &e(0));
        assert_eq!(k[0], cone());
        assert!(k[1..].iter().all(|z| *z == czero()));
        let k = kron(&e(0), &e(1));
        assert_eq!(k[1], cone());
        assert_eq!(k.iter().filter(|z| **z != czero()).count(), 1);
    }

    #[test]
    fn herm_eig_small_cases() {
        let eig = herm_eig(&HermMat::new(CMat::<f64>::identity(9)).unwrap());
        assert!(eig.values.iter().all(|l| (l - 1.0).abs() < 1e-15));

        let d = CMat::<f64>::diag(&[cr(3.0), cr(1.0), cr(2.0)]);
        let eig = herm_eig(&HermMat::new(d).unwrap());
        for (got, want) in eig.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-15);
        }

        let psi = kron::<f64>(&[c(0.6, 0.0), c(0.0, 0.8), czero()], &[cr(1.0), czero(), czero()]);
        let eig = herm_eig(&HermMat::new(CMat::outer(&psi, &psi)).unwrap());
        assert!((eig.values[8] - 1.0).abs() < 1e-14);
        assert!(eig.values[..8].iter().all(|l| l.abs() < 1e-14));
    }

    #[test]
    fn herm_eig_reconstructs_random_matrices() {
        for seed in 0..20 {
            let h = HermMat::from_mat_symmetrized(&pseudo_random_mat(9, seed));
            let eig = herm_eig(&h);
            let resid = (&eig.reconstruct() - h.as_mat()).frobenius_norm();
            assert!(resid < 1e-10 * h.as_mat().frobenius_norm(), "seed {seed}: {resid}");
            let q = &eig.vectors;
            let gram = &q.adjoint() * q;
            assert!((&gram - &CMat::identity(9)).frobenius_norm() < 1e-10);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let mut m = CMat::<f64>::identity(3);
        m[(0, 1)] = cr(1.0);
        assert!(matches!(herm_eig_checked(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn numerical_rank_cases() {
        assert_eq!(numerical_rank(&HermMat::new(CMat::<f64>::zeros(9, 9)).unwrap(), 1e-8), 0);
        let basis: Vec<Vec<C<f64>>> = (0..4)
            .map(|k| {
                let mut v = vec![czero(); 9];
                v[2 * k] = cone();
                v
            })
            .collect();
        let p = HermMat::projector(&basis, 9);
        assert_eq!(numerical_rank(&p, 1e-8), 4);
    }

    #[test]
    fn partial_transpose_of_product_projector_conjugates_chi() {
        let phi = [c(0.3, 0.1), c(-0.2, 0.7), c(0.5, 0.0)];
        let chi = [c(0.1, -0.4), c(0.9, 0.2), c(0.0, 0.3)];
        let psi = kron(&phi, &chi);
        let rho = HermMat::new(CMat::outer(&psi, &psi)).unwrap();
        let chi_conj = chi.map(|z| z.conj());
        let psi_t = kron(&phi, &chi_conj);
        let want = CMat::outer(&psi_t, &psi_t);
        let got = partial_transpose(&rho);
        assert!((got.as_mat() - &want).frobenius_norm() < 1e-15);
        let back = partial_transpose(&got);
        assert_eq!(back.as_mat(), rho.as_mat());
    }

    #[test]
    fn det_and_inverse() {
        let m = pseudo_random_mat(3, 5);
        let inv = m.inverse().unwrap();
        assert!((&(&m * &inv) - &CMat::identity(3)).frobenius_norm() < 1e-12);
        let m4 = pseudo_random_mat(4, 9);
        let d4 = m4.det();
        let scaled = m4.scale(cr(2.0));
        assert!((scaled.det() - d4 * 16.0).norm() < 1e-12);
        assert!(matches!(CMat::<f64>::zeros(3, 3).inverse(), Err(Error::Singular)));
    }

    #[test]
    fn phase_fixing_is_canonical() {
        let v: CVec3<f64> = [czero(), c(0.0, 2.0), c(1.0, 1.0)];
        let w = v.map(|z| z * c(0.3, -0.8));
        let a = phase_fixed(&v).unwrap();
        let b = phase_fixed(&w).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-15);
        }
        assert!(a[1].im.abs() < 1e-16 && a[1].re > 0.0);
        assert!(phase_fixed(&[czero::<f64>(); 3]).is_none());
    }

    #[test]
    fn f32_instantiation() {
        let phi = [c(1.0f32, 0.0), c(0.0, 1.0), czero()];
        let k = kron(&phi, &phi);
        assert!((norm(&k) - 2.0f32).abs() < 1e-6);
        let eig = herm_eig(&HermMat::new(CMat::<f32>::diag(&[cr(2.0), cr(-1.0)])).unwrap());
        assert!((eig.values[0] + 1.0).abs() < 1e-6);
    }
}
