//! Dense symmetric/Hermitian eigendecomposition.
//!
//! Householder tridiagonalization followed by implicit-shift QL with
//! accumulated transformations (the classic EISPACK `tred2`/`tql2` pair).
//! Hermitian matrices are handled through the real symmetric embedding
//! `[[X, -Y], [Y, X]]` of `A = X + iY`; each complex eigenpair shows up twice
//! in the embedding, and the complex eigenvectors are recovered from the
//! doubled eigenspace by Gram-Schmidt deduplication.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::mat::{Mat, Scalar};
#[allow(unused_imports)]
use num_traits::Float;

/// Which end of the spectrum an eigensolve or an SCF step should target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumEnd {
    Smallest,
    Largest,
}

/// Result of [`sym_eigs_k`]: `vectors` is `n x k` with orthonormal columns,
/// `values` the corresponding real eigenvalues, ordered ascending for
/// [`SpectrumEnd::Smallest`] and descending for [`SpectrumEnd::Largest`].
#[derive(Clone, Debug)]
pub struct EigPairs<T: Scalar> {
    pub vectors: Mat<T>,
    pub values: Vec<f64>,
}

/// Full eigendecomposition of a real symmetric matrix.
///
/// Returns all eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. The input is symmetrized as `(A + A^T)/2` before
/// reduction, so mildly asymmetric roundoff in the caller is harmless.
pub fn sym_eig_full(a: &Mat<f64>) -> crate::Result<(Vec<f64>, Mat<f64>)> {
    if !a.is_square() {
        return Err(crate::Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(crate::Error::Numerical(
            "matrix contains non-finite entries".into(),
        ));
    }
    let n = a.rows();
    let mut v = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    sort_ascending(&mut d, &mut v);
    Ok((d, v))
}

/// `k` extremal eigenpairs of a symmetric (`f64`) or Hermitian (`Complex64`)
/// matrix.
///
/// Eigenvectors are orthonormal and deterministically normalized: the entry
/// of largest magnitude in each column is made real and positive. Values are
/// sorted ascending for `Smallest` and descending for `Largest`.
pub fn sym_eigs_k<T: Scalar>(
    a: &Mat<T>,
    k: usize,
    which: SpectrumEnd,
) -> crate::Result<EigPairs<T>> {
    if !a.is_square() {
        return Err(crate::Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if k > n {
        return Err(crate::Error::Dimension(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix"
        )));
    }
    if T::IS_COMPLEX {
        hermitian_eigs_k(a, k, which)
    } else {
        let ar = Mat::from_fn(n, n, |i, j| a[(i, j)].re());
        let (vals, vecs) = sym_eig_full(&ar)?;
        let idx = pick_extremal(n, k, which);
        let mut vectors = Mat::zeros(n, k);
        let mut values = Vec::with_capacity(k);
        for (out_j, &j) in idx.iter().enumerate() {
            values.push(vals[j]);
            for i in 0..n {
                vectors[(i, out_j)] = T::from_re(vecs[(i, j)]);
            }
        }
        normalize_phases(&mut vectors);
        Ok(EigPairs { vectors, values })
    }
}

fn pick_extremal(n: usize, k: usize, which: SpectrumEnd) -> Vec<usize> {
    match which {
        SpectrumEnd::Smallest => (0..k).collect(),
        SpectrumEnd::Largest => (n - k..n).rev().collect(),
    }
}

/// Hermitian eigenpairs through the doubled real symmetric problem.
fn hermitian_eigs_k<T: Scalar>(
    a: &Mat<T>,
    k: usize,
    which: SpectrumEnd,
) -> crate::Result<EigPairs<T>> {
    let n = a.rows();
    // Hermitian-symmetrize, then embed: X = Re(A) symmetric, Y = Im(A) skew.
    let mut emb = Mat::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let h = (a[(i, j)] + a[(j, i)].conj()).scale(0.5);
            emb[(i, j)] = h.re();
            emb[(n + i, n + j)] = h.re();
            emb[(n + i, j)] = h.im();
            emb[(i, n + j)] = -h.im();
        }
    }
    let (vals, vecs) = sym_eig_full(&emb)?;
    let order: Vec<usize> = match which {
        SpectrumEnd::Smallest => (0..2 * n).collect(),
        SpectrumEnd::Largest => (0..2 * n).rev().collect(),
    };

    // Each complex eigenvector z = u + iv of A appears in the embedding as
    // both (u; v) and (-v; u); walk the requested end of the spectrum and
    // keep candidates that are independent (in the complex span) of what has
    // already been accepted.
    let mut vectors = Mat::<T>::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    let mut accepted = 0usize;
    for &idx in &order {
        if accepted == k {
            break;
        }
        let w = vecs.col(idx);
        let mut z: Vec<T> = (0..n).map(|i| T::from_parts(w[i], w[n + i])).collect();
        for _ in 0..2 {
            for a_col in 0..accepted {
                let prev = vectors.col(a_col);
                let mut h = T::zero();
                for (p, zi) in prev.iter().zip(&z) {
                    h += p.conj() * *zi;
                }
                for (zi, p) in z.iter_mut().zip(prev) {
                    *zi -= h * *p;
                }
            }
        }
        let nrm = z.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt();
        if nrm > 1e-3 {
            for (i, zi) in z.iter().enumerate() {
                vectors[(i, accepted)] = zi.scale(1.0 / nrm);
            }
            values.push(vals[idx]);
            accepted += 1;
        }
    }
    if accepted < k {
        return Err(crate::Error::Numerical(format!(
            "failed to extract {k} independent eigenvectors from Hermitian embedding (got {accepted})"
        )));
    }
    normalize_phases(&mut vectors);
    Ok(EigPairs { vectors, values })
}

/// Scales each column so its entry of largest magnitude becomes real and
/// positive (the first such entry wins among near-ties). Makes eigenvector
/// output deterministic across runs.
fn normalize_phases<T: Scalar>(v: &mut Mat<T>) {
    for j in 0..v.cols() {
        let col = v.col_mut(j);
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for (i, x) in col.iter().enumerate() {
            let a = x.abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if best_abs == 0.0 {
            continue;
        }
        let phase = col[best].conj().scale(1.0 / best_abs);
        for x in col.iter_mut() {
            *x = *x * phase;
        }
    }
}

fn sort_ascending(d: &mut [f64], v: &mut Mat<f64>) {
    let n = d.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("non-NaN eigenvalues"));
    let sorted_d: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    let mut sorted_v = Mat::zeros(n, n);
    for (new_j, &old_j) in idx.iter().enumerate() {
        sorted_v.col_mut(new_j).copy_from_slice(v.col(old_j));
    }
    d.copy_from_slice(&sorted_d);
    *v = sorted_v;
}

/// Householder reduction of a symmetric matrix to tridiagonal form, with the
/// orthogonal transformation accumulated in `v`. On exit `d` holds the
/// diagonal and `e[1..]` the subdiagonal.
fn tred2(v: &mut Mat<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = v.rows();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            // Build the Householder vector in d[0..i].
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            // Apply the similarity transform to the leading i x i block.
            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                let col_j = v.col(j);
                for k in j + 1..i {
                    g += col_j[k] * d[k];
                    e[k] += col_j[k] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let col_j = v.col_mut(j);
                for k in j..i {
                    col_j[k] -= f * e[k] + g * d[k];
                }
                d[j] = col_j[i - 1];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the Householder transformations.
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                {
                    let col_next = v.col(i + 1);
                    let col_j = v.col(j);
                    for k in 0..=i {
                        g += col_next[k] * col_j[k];
                    }
                }
                let col_j = v.col_mut(j);
                for k in 0..=i {
                    col_j[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on the tridiagonal matrix produced by
/// [`tred2`], accumulating the rotations into the eigenvector matrix `v`.
fn tql2(v: &mut Mat<f64>, d: &mut [f64], e: &mut [f64]) -> crate::Result<()> {
    let n = v.rows();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());

        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(crate::Error::NoConvergence(format!(
                        "QL iteration exceeded 50 sweeps at eigenvalue {l}"
                    )));
                }

                // Implicit shift from the leading 2x2.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // QL sweep with accumulated Givens rotations.
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    let r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (col_i, col_next) = v.two_cols_mut(i, i + 1);
                    for (vi, vn) in col_i.iter_mut().zip(col_next.iter_mut()) {
                        let h = *vn;
                        *vn = s * *vi + c * h;
                        *vi = c * *vi - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
