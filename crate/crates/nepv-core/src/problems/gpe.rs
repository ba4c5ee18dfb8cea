//! Ground states of a rotating Bose-Einstein condensate: the discrete
//! Gross-Pitaevskii problem on a square domain, in two formulations.
//!
//! On `[-l, l]^2` with an `N x N` interior mesh (`h = 2l/(N+1)`, mesh points
//! `x_j = y_j = -l + j h`), the complex Hamiltonian is
//!
//! `H(V) = A_f + gamma Diag(|V|^2)`, `A_f = Diag(f~) - (1/2) M - i omega M_Phi`,
//!
//! where `f~ = h^2 [f(x_1,y_1), f(x_2,y_1), ..., f(x_N,y_N)]` is the scaled
//! potential (first coordinate fastest), `M` is the symmetric second-
//! difference Kronecker sum, and `M_Phi` is the skew-symmetric angular-
//! momentum stencil built from centered first differences:
//!
//! `M = D2 (x) I + I (x) D2`, `M_Phi = (h Diag(y)) (x) D1 + D1 (x) (h Diag(x))`,
//!
//! with `D1 = tridiag(-1/2, 0, 1/2)` and `D2 = tridiag(1, -2, 1)`.
//!
//! [`GpeComplexModel`] works directly on the complex vector; its derivative
//! `D_H(V,E) = 2 gamma Diag(Re(conj(V) .* E))` is linear only over real
//! scalars, so the model sets [`NepvModel::real_linear_only`] and the inner
//! solver restricts its least-squares coefficients to the reals.
//! [`GpeRealModel`] doubles the problem to `[Re V; Im V]` with the symmetric
//!
//! `H~(V~) = [Re A_f, -Im A_f; Im A_f, Re A_f] + (gamma / V~^T V~) B(V~)`,
//!
//! `B(V~) = blkdiag(Diag(v1)^2 + Diag(v2)^2, same)`, which is everywhere
//! Frechet differentiable:
//!
//! `L_H~(V~,E~) = (gamma / V~^T V~) L_B(V~,E~) - (2 gamma V~^T E~ / (V~^T V~)^2) B(V~)`,
//!
//! `L_B(V~,E~) = blkdiag(2 Diag(v1 .* e1 + v2 .* e2), same)`. At unit norm
//! (`V~^T V~ = 1`) both formulations describe the same physics and their
//! residuals coincide under stacking.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::linalg::SpectrumEnd;
use crate::mat::{kron, Mat};
use crate::model::NepvModel;

/// Discretization of the square domain `[-l, l]^2` with the rotation speed
/// `omega` of the condensate frame.
#[derive(Clone, Copy, Debug)]
pub struct GpeGrid {
    /// Half-width of the domain.
    pub ell: f64,
    /// Interior mesh points per direction; the problem size is `N^2`.
    pub n_side: usize,
    /// Angular velocity of the rotating frame.
    pub omega: f64,
}

impl GpeGrid {
    pub fn new(ell: f64, n_side: usize, omega: f64) -> crate::Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(crate::Error::InvalidInput(format!(
                "domain half-width must be positive and finite, got {ell}"
            )));
        }
        if n_side < 2 {
            return Err(crate::Error::InvalidInput(format!(
                "need at least two mesh points per direction, got {n_side}"
            )));
        }
        if !omega.is_finite() {
            return Err(crate::Error::InvalidInput("omega must be finite".into()));
        }
        Ok(GpeGrid {
            ell,
            n_side,
            omega,
        })
    }

    /// Mesh width `h = 2l/(N+1)`.
    pub fn mesh_width(&self) -> f64 {
        2.0 * self.ell / (self.n_side as f64 + 1.0)
    }

    /// Interior coordinates `-l + j h` for `j = 1..=N` (same in x and y).
    pub fn coordinates(&self) -> Vec<f64> {
        let h = self.mesh_width();
        (1..=self.n_side).map(|j| -self.ell + j as f64 * h).collect()
    }
}

/// Assembled grid operators shared by both formulations.
#[derive(Clone, Debug)]
pub struct GpeOperators {
    grid: GpeGrid,
    /// Scaled potential samples `h^2 f(x_i, y_j)`, first coordinate fastest.
    f_tilde: Vec<f64>,
    /// Symmetric Kronecker-sum second-difference operator.
    m: Mat<f64>,
    /// Skew-symmetric angular-momentum stencil.
    m_phi: Mat<f64>,
    /// `A_f = Diag(f~) - M/2 - i omega M_Phi`.
    a_f: Mat<Complex64>,
}

impl GpeOperators {
    /// Assembles the operators for a potential `f(x, y)`.
    pub fn assemble(grid: GpeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n_side = grid.n_side;
        let n = n_side * n_side;
        let h = grid.mesh_width();
        let coords = grid.coordinates();

        let mut f_tilde = vec![0.0; n];
        for (j, &y) in coords.iter().enumerate() {
            for (i, &x) in coords.iter().enumerate() {
                f_tilde[j * n_side + i] = h * h * f(x, y);
            }
        }

        let d1 = Mat::from_fn(n_side, n_side, |r, c| {
            if c == r + 1 {
                0.5
            } else if r == c + 1 {
                -0.5
            } else {
                0.0
            }
        });
        let d2 = Mat::from_fn(n_side, n_side, |r, c| {
            if r == c {
                -2.0
            } else if r.abs_diff(c) == 1 {
                1.0
            } else {
                0.0
            }
        });
        let eye = Mat::identity(n_side);
        let m = &kron(&d2, &eye) + &kron(&eye, &d2);
        let scaled_coord = Mat::from_fn(n_side, n_side, |r, c| {
            if r == c {
                h * coords[r]
            } else {
                0.0
            }
        });
        let m_phi = &kron(&scaled_coord, &d1) + &kron(&d1, &scaled_coord);

        let omega = grid.omega;
        let a_f = Mat::from_fn(n, n, |r, c| {
            let re = if r == c { f_tilde[r] } else { 0.0 } - 0.5 * m[(r, c)];
            Complex64::new(re, -omega * m_phi[(r, c)])
        });

        GpeOperators {
            grid,
            f_tilde,
            m,
            m_phi,
            a_f,
        }
    }

    /// The standard benchmark setup: harmonic trap `f = (x^2 + y^2) / 2`.
    pub fn harmonic(grid: GpeGrid) -> Self {
        GpeOperators::assemble(grid, |x, y| 0.5 * (x * x + y * y))
    }

    pub fn grid(&self) -> &GpeGrid {
        &self.grid
    }

    pub fn f_tilde(&self) -> &[f64] {
        &self.f_tilde
    }

    pub fn m(&self) -> &Mat<f64> {
        &self.m
    }

    pub fn m_phi(&self) -> &Mat<f64> {
        &self.m_phi
    }

    pub fn a_f(&self) -> &Mat<Complex64> {
        &self.a_f
    }

    /// Canonical starting block: the uniform positive function, normalized to
    /// unit Frobenius norm. It overlaps the nodeless ground state for every
    /// trap considered here, so both solver families start in its basin.
    pub fn unit_start(&self) -> Mat<Complex64> {
        let n = self.a_f.rows();
        Mat::from_fn(n, 1, |_, _| Complex64::new(1.0, 0.0)).scale_re(1.0 / (n as f64).sqrt())
    }

    /// The complex formulation with nonlinearity strength `gamma`.
    pub fn complex_model(&self, gamma: f64) -> crate::Result<GpeComplexModel> {
        check_gamma(gamma)?;
        Ok(GpeComplexModel {
            a_f: self.a_f.clone(),
            gamma,
        })
    }

    /// The real-doubled formulation with nonlinearity strength `gamma`.
    pub fn real_model(&self, gamma: f64) -> crate::Result<GpeRealModel> {
        check_gamma(gamma)?;
        let n = self.a_f.rows();
        let h0 = Mat::from_fn(2 * n, 2 * n, |r, c| {
            let (ri, ci) = (r % n, c % n);
            match (r < n, c < n) {
                (true, true) | (false, false) => self.a_f[(ri, ci)].re,
                (true, false) => -self.a_f[(ri, ci)].im,
                (false, true) => self.a_f[(ri, ci)].im,
            }
        });
        Ok(GpeRealModel {
            h0,
            gamma,
            n_half: n,
        })
    }
}

fn check_gamma(gamma: f64) -> crate::Result<()> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(crate::Error::InvalidInput(format!(
            "gamma must be finite and nonnegative, got {gamma}"
        )));
    }
    Ok(())
}

/// Complex single-vector formulation `H(V) = A_f + gamma Diag(|V|^2)`.
#[derive(Clone, Debug)]
pub struct GpeComplexModel {
    a_f: Mat<Complex64>,
    gamma: f64,
}

impl GpeComplexModel {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Particle density `|psi_i|^2` of a state vector.
    pub fn density(v: &Mat<Complex64>) -> Vec<f64> {
        v.col(0).iter().map(|x| x.norm_sqr()).collect()
    }
}

impl NepvModel for GpeComplexModel {
    type Field = Complex64;

    fn n(&self) -> usize {
        self.a_f.rows()
    }

    fn k(&self) -> usize {
        1
    }

    fn spectrum_end(&self) -> SpectrumEnd {
        SpectrumEnd::Smallest
    }

    fn real_linear_only(&self) -> bool {
        true
    }

    fn eval_h(&self, v: &Mat<Complex64>) -> crate::Result<Mat<Complex64>> {
        let mut h = self.a_f.clone();
        for (i, x) in v.col(0).iter().enumerate() {
            h[(i, i)] += Complex64::new(self.gamma * x.norm_sqr(), 0.0);
        }
        Ok(h)
    }

    /// `D_H(V,E) W = 2 gamma Diag(Re(conj(V) .* E)) W`: the directional
    /// derivative of the density term, linear over real scalars only.
    fn apply_lh_to(
        &self,
        v: &Mat<Complex64>,
        ev: &Mat<Complex64>,
        w: &Mat<Complex64>,
    ) -> crate::Result<Mat<Complex64>> {
        let mut out = w.clone();
        let vs = v.col(0);
        let es = ev.col(0);
        for j in 0..out.cols() {
            for (i, o) in out.col_mut(j).iter_mut().enumerate() {
                let d = 2.0 * self.gamma * (vs[i].conj() * es[i]).re;
                *o = o.scale(d);
            }
        }
        Ok(out)
    }
}

/// Real-doubled formulation on `[Re V; Im V]` of size `2n`.
#[derive(Clone, Debug)]
pub struct GpeRealModel {
    h0: Mat<f64>,
    gamma: f64,
    n_half: usize,
}

impl GpeRealModel {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Size `n` of the underlying complex problem.
    pub fn n_half(&self) -> usize {
        self.n_half
    }

    /// Particle density `v1_i^2 + v2_i^2` of a doubled state vector.
    pub fn density(&self, v: &Mat<f64>) -> Vec<f64> {
        let col = v.col(0);
        (0..self.n_half)
            .map(|i| col[i] * col[i] + col[i + self.n_half] * col[i + self.n_half])
            .collect()
    }

    /// The diagonal of `B(V~)` restricted to the first block:
    /// `v1_i^2 + v2_i^2` (the second block repeats it).
    fn b_diag(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n_half)
            .map(|i| v[i] * v[i] + v[i + self.n_half] * v[i + self.n_half])
            .collect()
    }
}

impl NepvModel for GpeRealModel {
    type Field = f64;

    fn n(&self) -> usize {
        2 * self.n_half
    }

    fn k(&self) -> usize {
        1
    }

    fn spectrum_end(&self) -> SpectrumEnd {
        SpectrumEnd::Smallest
    }

    fn eval_h(&self, v: &Mat<f64>) -> crate::Result<Mat<f64>> {
        let col = v.col(0);
        let nrm: f64 = col.iter().map(|x| x * x).sum();
        if nrm == 0.0 {
            return Err(crate::Error::Numerical(
                "the doubled Hamiltonian is undefined at V = 0".into(),
            ));
        }
        let b = self.b_diag(col);
        let mut h = self.h0.clone();
        let scale = self.gamma / nrm;
        for (i, &bi) in b.iter().enumerate() {
            h[(i, i)] += scale * bi;
            h[(i + self.n_half, i + self.n_half)] += scale * bi;
        }
        Ok(h)
    }

    /// `L_H~(V~,E~) W` with the diagonal derivative
    /// `(gamma/s) L_B - (2 gamma (V~^T E~) / s^2) B`, `s = V~^T V~`.
    fn apply_lh_to(&self, v: &Mat<f64>, ev: &Mat<f64>, w: &Mat<f64>) -> crate::Result<Mat<f64>> {
        let vs = v.col(0);
        let es = ev.col(0);
        let s: f64 = vs.iter().map(|x| x * x).sum();
        if s == 0.0 {
            return Err(crate::Error::Numerical(
                "the doubled derivative is undefined at V = 0".into(),
            ));
        }
        let ve: f64 = vs.iter().zip(es).map(|(a, b)| a * b).sum();
        let b = self.b_diag(vs);
        let mut diag = vec![0.0; self.n_half];
        for i in 0..self.n_half {
            let lb = 2.0 * (vs[i] * es[i] + vs[i + self.n_half] * es[i + self.n_half]);
            diag[i] = self.gamma / s * lb - 2.0 * self.gamma * ve / (s * s) * b[i];
        }
        let mut out = w.clone();
        for j in 0..out.cols() {
            for (i, o) in out.col_mut(j).iter_mut().enumerate() {
                *o *= diag[i % self.n_half];
            }
        }
        Ok(out)
    }
}

/// Stacks a complex state into its doubled form `[Re V; Im V]`.
pub fn complex_to_doubled(v: &Mat<Complex64>) -> Mat<f64> {
    let n = v.rows();
    Mat::from_fn(2 * n, v.cols(), |i, j| {
        if i < n {
            v[(i, j)].re
        } else {
            v[(i - n, j)].im
        }
    })
}

/// Reassembles a complex state from its doubled form.
pub fn doubled_to_complex(v: &Mat<f64>) -> crate::Result<Mat<Complex64>> {
    if v.rows() % 2 != 0 {
        return Err(crate::Error::Dimension(format!(
            "doubled state must have even length, got {}",
            v.rows()
        )));
    }
    let n = v.rows() / 2;
    Ok(Mat::from_fn(n, v.cols(), |i, j| {
        Complex64::new(v[(i, j)], v[(i + n, j)])
    }))
}
