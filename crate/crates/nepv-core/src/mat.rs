//! Column-major dense matrices over `f64` or `Complex64`.
//!
//! The solvers only need a small surface: construction, elementwise access,
//! products, the Frobenius inner product, and column-major vectorization.
//! Storage is column-major so that column slices (the hot access pattern in
//! the eigensolver and the Krylov kernels) are contiguous.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Scalar field of a matrix: `f64` or `Complex64`.
///
/// The trait is deliberately small; everything the solvers need reduces to
/// real/imaginary parts, conjugation, magnitude, and scaling by a real number.
pub trait Scalar:
    Copy
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    const IS_COMPLEX: bool;

    fn zero() -> Self;
    fn one() -> Self;
    /// Embeds a real number into the field.
    fn from_re(re: f64) -> Self;
    /// Builds an element from real and imaginary parts. For `f64` the
    /// imaginary part must be zero.
    fn from_parts(re: f64, im: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn conj(self) -> Self;
    fn abs(self) -> f64;
    fn abs_sq(self) -> f64 {
        self.re() * self.re() + self.im() * self.im()
    }
    /// Multiplication by a real scalar.
    fn scale(self, s: f64) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_re(re: f64) -> Self {
        re
    }
    fn from_parts(re: f64, im: f64) -> Self {
        debug_assert!(im == 0.0, "imaginary part dropped in real field");
        re
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn conj(self) -> Self {
        self
    }
    fn abs(self) -> f64 {
        Float::abs(self)
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn is_finite(self) -> bool {
        Float::is_finite(self)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_re(re: f64) -> Self {
        Complex64::new(re, 0.0)
    }
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn conj(self) -> Self {
        Complex64::new(self.re, -self.im)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Dense matrix with column-major storage.
#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Wraps a column-major buffer; `data.len()` must equal `rows * cols`.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> crate::Result<Self> {
        if data.len() != rows * cols {
            return Err(crate::Error::Dimension(alloc::format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from rows of a nested array, handy in tests.
    pub fn from_rows(rows: &[&[T]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Contiguous slice of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Two distinct mutable column slices (`a != b`).
    #[inline]
    pub fn two_cols_mut(&mut self, a: usize, b: usize) -> (&mut [T], &mut [T]) {
        assert!(a != b && a < self.cols && b < self.cols);
        let r = self.rows;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * r);
            (&mut lo[a * r..(a + 1) * r], &mut hi[..r])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * r);
            let (bs, as_) = (&mut lo[b * r..(b + 1) * r], &mut hi[..r]);
            (as_, bs)
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose; equals `transpose` over the reals.
    pub fn conj_transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// `self * b`.
    pub fn matmul(&self, b: &Mat<T>) -> Mat<T> {
        assert_eq!(
            self.cols, b.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, b.rows, b.cols
        );
        let mut out = Mat::zeros(self.rows, b.cols);
        for j in 0..b.cols {
            let out_col = out.col_mut(j);
            for l in 0..self.cols {
                let blj = b[(l, j)];
                if blj == T::zero() {
                    continue;
                }
                let a_col = self.col(l);
                for (o, &a) in out_col.iter_mut().zip(a_col) {
                    *o += a * blj;
                }
            }
        }
        out
    }

    /// `self^H * b` without forming the transpose; columns of `self` are
    /// dotted against columns of `b`, which is contiguous on both sides.
    pub fn conj_t_mul(&self, b: &Mat<T>) -> Mat<T> {
        assert_eq!(
            self.rows, b.rows,
            "conj_t_mul shape mismatch: ({}x{})^H * {}x{}",
            self.rows, self.cols, b.rows, b.cols
        );
        Mat::from_fn(self.cols, b.cols, |i, j| {
            let mut acc = T::zero();
            for (&x, &y) in self.col(i).iter().zip(b.col(j)) {
                acc += x.conj() * y;
            }
            acc
        })
    }

    pub fn scale(&self, s: T) -> Mat<T> {
        self.map(|x| x * s)
    }

    pub fn scale_re(&self, s: f64) -> Mat<T> {
        self.map(|x| x.scale(s))
    }

    /// `self += alpha * x`.
    pub fn axpy(&mut self, alpha: T, x: &Mat<T>) {
        assert_eq!((self.rows, self.cols), (x.rows, x.cols), "axpy shape mismatch");
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += alpha * v;
        }
    }

    /// `self += alpha * x` with a real coefficient.
    pub fn axpy_re(&mut self, alpha: f64, x: &Mat<T>) {
        assert_eq!((self.rows, self.cols), (x.rows, x.cols), "axpy shape mismatch");
        for (s, &v) in self.data.iter_mut().zip(&x.data) {
            *s += v.scale(alpha);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Stacks `self` on top of `bottom` (matching column counts).
    pub fn vstack(&self, bottom: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, bottom.cols, "vstack column mismatch");
        let mut out = Mat::zeros(self.rows + bottom.rows, self.cols);
        for j in 0..self.cols {
            let col = out.col_mut(j);
            col[..self.rows].copy_from_slice(self.col(j));
            col[self.rows..].copy_from_slice(bottom.col(j));
        }
        out
    }

    /// Splits into the first `top_rows` rows and the rest.
    pub fn vsplit(&self, top_rows: usize) -> (Mat<T>, Mat<T>) {
        assert!(top_rows <= self.rows, "vsplit beyond row count");
        let bottom_rows = self.rows - top_rows;
        let mut top = Mat::zeros(top_rows, self.cols);
        let mut bottom = Mat::zeros(bottom_rows, self.cols);
        for j in 0..self.cols {
            let col = self.col(j);
            top.col_mut(j).copy_from_slice(&col[..top_rows]);
            bottom.col_mut(j).copy_from_slice(&col[top_rows..]);
        }
        (top, bottom)
    }
}

impl<T: Scalar> Index<(usize, usize)> for Mat<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl<T: Scalar> Add for &Mat<T> {
    type Output = Mat<T>;

    fn add(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        let mut out = self.clone();
        out.axpy(T::one(), rhs);
        out
    }
}

impl<T: Scalar> Sub for &Mat<T> {
    type Output = Mat<T>;

    fn sub(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        let mut out = self.clone();
        out.axpy(-T::one(), rhs);
        out
    }
}

impl<T: Scalar> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                write!(f, "{:>14} ", self[(i, j)])?;
            }
            writeln!(f, "{}", if self.cols > 8 { "..." } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Frobenius inner product `<X, Y> = trace(X^H Y) = sum conj(x_ij) y_ij`,
/// computed entrywise in O(rows * cols) without forming `X^H Y`.
pub fn frob_inner<T: Scalar>(x: &Mat<T>, y: &Mat<T>) -> T {
    assert_eq!(
        (x.rows, x.cols),
        (y.rows, y.cols),
        "frob_inner shape mismatch: {}x{} vs {}x{}",
        x.rows,
        x.cols,
        y.rows,
        y.cols
    );
    let mut acc = T::zero();
    for (&a, &b) in x.data.iter().zip(&y.data) {
        acc += a.conj() * b;
    }
    acc
}

/// Real part of the Frobenius inner product. This is the inner product of the
/// realified Krylov spaces used by the GMRES kernels; over the reals it equals
/// [`frob_inner`].
pub fn frob_inner_re<T: Scalar>(x: &Mat<T>, y: &Mat<T>) -> f64 {
    assert_eq!(
        (x.rows, x.cols),
        (y.rows, y.cols),
        "frob_inner shape mismatch"
    );
    let mut acc = 0.0;
    for (&a, &b) in x.data.iter().zip(&y.data) {
        acc += a.re() * b.re() + a.im() * b.im();
    }
    acc
}

/// Frobenius norm; always real and nonnegative.
pub fn frob_norm<T: Scalar>(x: &Mat<T>) -> f64 {
    let mut acc = 0.0;
    for &a in &x.data {
        acc += a.abs_sq();
    }
    Float::sqrt(acc)
}

/// Stacks the columns of `X` into a single vector (column-major order).
pub fn vectorize<T: Scalar>(x: &Mat<T>) -> Vec<T> {
    x.data.clone()
}

/// Kronecker product `A (x) B`: the block matrix with `a[(i,j)] * B` in
/// block position `(i, j)`.
pub fn kron<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let mut out = Mat::zeros(ar * br, ac * bc);
    for ja in 0..ac {
        for ia in 0..ar {
            let factor = a[(ia, ja)];
            if factor == T::zero() {
                continue;
            }
            for jb in 0..bc {
                for ib in 0..br {
                    out[(ia * br + ib, ja * bc + jb)] = factor * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Inverse of [`vectorize`]: reshapes `x` into a `rows x cols` matrix.
pub fn devectorize<T: Scalar>(x: &[T], rows: usize, cols: usize) -> crate::Result<Mat<T>> {
    if x.len() != rows * cols {
        return Err(crate::Error::Dimension(alloc::format!(
            "vector of length {} cannot reshape to {rows}x{cols}",
            x.len()
        )));
    }
    Ok(Mat {
        rows,
        cols,
        data: x.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mat_2x2() -> Mat<f64> {
        // columns (1,2) and (3,4)
        Mat::from_col_major(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn indexing_is_column_major() {
        let m = mat_2x2();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 0)], 2.0);
        assert_eq!(m[(0, 1)], 3.0);
        assert_eq!(m[(1, 1)], 4.0);
        assert_eq!(m.col(1), &[3.0, 4.0]);
    }

    #[test]
    fn vectorize_stacks_columns() {
        let m = mat_2x2();
        assert_eq!(vectorize(&m), vec![1.0, 2.0, 3.0, 4.0]);
        let back = devectorize(&vectorize(&m), 2, 2).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn devectorize_rejects_bad_length() {
        assert!(devectorize(&[1.0, 2.0, 3.0], 2, 2).is_err());
    }

    #[test]
    fn frob_inner_of_identity_counts_dimension() {
        let i2 = Mat::<f64>::identity(2);
        assert_eq!(frob_inner(&i2, &i2), 2.0);
    }

    #[test]
    fn frob_inner_matches_trace_oracle() {
        // Independent route: form X^H Y densely and take its trace.
        let x = Mat::from_fn(7, 3, |i, j| ((3 * i + 2 * j) % 11) as f64 - 5.0);
        let y = Mat::from_fn(7, 3, |i, j| ((5 * i + j) % 7) as f64 / 3.0);
        let xty = x.conj_t_mul(&y);
        let mut trace = 0.0;
        for d in 0..3 {
            trace += xty[(d, d)];
        }
        assert!((frob_inner(&x, &y) - trace).abs() <= 1e-13 * trace.abs().max(1.0));
    }

    #[test]
    fn frob_norm_matches_vector_norm() {
        let x = Mat::from_fn(5, 4, |i, j| (i as f64 - 1.5) * (j as f64 + 0.5));
        let v = vectorize(&x);
        let two_norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((frob_norm(&x) - two_norm).abs() <= 1e-13 * two_norm);
    }

    #[test]
    fn complex_frob_inner_conjugates_first_argument() {
        use num_complex::Complex64 as C;
        let x = Mat::from_fn(2, 1, |i, _| C::new(i as f64, 1.0));
        let y = Mat::from_fn(2, 1, |i, _| C::new(1.0, -(i as f64)));
        // <x,y> = conj(x0)y0 + conj(x1)y1 = (0-1i)(1-0i) + (1-1i)(1-1i)
        let expect = C::new(0.0, -1.0) + C::new(1.0, -1.0) * C::new(1.0, -1.0);
        let got = frob_inner(&x, &y);
        assert!((got - expect).norm() < 1e-15);
        assert!((frob_inner_re(&x, &y) - expect.re).abs() < 1e-15);
    }

    #[test]
    fn matmul_and_conj_t_mul_agree_with_hand_product() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let b = Mat::from_rows(&[&[1.0, -1.0], &[0.5, 2.0]]);
        let ab = a.matmul(&b);
        assert_eq!(ab[(0, 0)], 2.0);
        assert_eq!(ab[(2, 1)], 7.0);
        let atb = a.conj_t_mul(&a);
        let oracle = a.transpose().matmul(&a);
        assert!((&atb - &oracle).max_abs() < 1e-14);
    }

    #[test]
    fn vstack_vsplit_roundtrip() {
        let top = mat_2x2();
        let bottom = Mat::from_rows(&[&[9.0, 8.0]]);
        let stacked = top.vstack(&bottom);
        assert_eq!(stacked.rows(), 3);
        assert_eq!(stacked[(2, 0)], 9.0);
        let (t, b) = stacked.vsplit(2);
        assert_eq!(t, top);
        assert_eq!(b, bottom);
    }

    #[test]
    fn two_cols_mut_returns_disjoint_slices() {
        let mut m = Mat::<f64>::identity(3);
        let (a, b) = m.two_cols_mut(2, 0);
        a[0] = 7.0;
        b[1] = -7.0;
        assert_eq!(m[(0, 2)], 7.0);
        assert_eq!(m[(1, 0)], -7.0);
    }

    #[test]
    fn kron_matches_hand_blocks() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[0.0, -1.0]]);
        let b = Mat::from_rows(&[&[1.0, 0.0], &[3.0, 4.0]]);
        let k = kron(&a, &b);
        assert_eq!(k.rows(), 4);
        assert_eq!(k.cols(), 4);
        // Top-left block is 1*B, top-right 2*B, bottom-left 0, bottom-right -B.
        assert_eq!(k[(1, 1)], 4.0);
        assert_eq!(k[(0, 2)], 2.0);
        assert_eq!(k[(1, 3)], 8.0);
        assert_eq!(k[(2, 0)], 0.0);
        assert_eq!(k[(3, 3)], -4.0);
        // Mixed-product sanity: (A (x) B)(x (x) y) = (Ax) (x) (By).
        let x = Mat::from_rows(&[&[1.0], &[2.0]]);
        let y = Mat::from_rows(&[&[-1.0], &[1.0]]);
        let lhs = k.matmul(&kron(&x, &y));
        let rhs = kron(&a.matmul(&x), &b.matmul(&y));
        assert!((&lhs - &rhs).max_abs() < 1e-14);
    }
}
