use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::system::hermiticity_defect;
use super::CMatrix;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const MAX_DIMENSION: usize = 16;

struct Interaction {
    energies: Vec<f64>,
    vectors: CMatrix,
    /// `B` in the eigenbasis of `A`.
    b_eigen: CMatrix,
}

impl Interaction {
    fn new(a: &CMatrix, b: &CMatrix) -> Self {
        let eig = SymmetricEigen::new(a.clone());
        let vectors = eig.eigenvectors;
        let b_eigen = vectors.adjoint() * b * &vectors;
        Self {
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors,
            b_eigen,
        }
    }

    /// `F(λ) = e^{iAλ} B e^{−iAλ}` in the eigenbasis of `A`.
    fn f(&self, lambda: f64) -> CMatrix {
        let n = self.energies.len();
        CMatrix::from_fn(n, n, |i, j| {
            self.b_eigen[(i, j)]
                * Complex64::from_polar(1.0, (self.energies[i] - self.energies[j]) * lambda)
        })
    }

    fn exp_a(&self, t: f64) -> CMatrix {
        let n = self.energies.len();
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::from_polar(1.0, -self.energies[i] * t)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn to_lab(&self, m: &CMatrix) -> CMatrix {
        &self.vectors * m * self.vectors.adjoint()
    }
}

/// The second-order integrals over `[0, τ]` with an `n`-point rule:
/// `∫[F(λ) − F(−λ)]`, `∫∫_{ξ<λ}[F(λ)F(ξ) + F(−ξ)F(−λ)]` and `∫∫ F(λ)F(−ξ)`.
fn integrals(op: &Interaction, tau: f64, n: usize) -> (CMatrix, CMatrix, CMatrix) {
    let (x, w) = gauss_legendre(n);
    let dim = op.energies.len();
    let zero = CMatrix::zeros(dim, dim);
    let half = 0.5 * tau;
    let nodes: Vec<f64> = x.iter().map(|xi| half * (xi + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|wi| half * wi).collect();

    let mut first = zero.clone();
    let mut full_plus = zero.clone();
    let mut full_minus = zero.clone();
    let mut triangle = zero.clone();
    for (&lam, &wl) in nodes.iter().zip(&weights) {
        let fp = op.f(lam);
        let fm = op.f(-lam);
        first += (&fp - &fm) * Complex64::new(wl, 0.0);
        full_plus += &fp * Complex64::new(wl, 0.0);
        full_minus += &fm * Complex64::new(wl, 0.0);
        // inner ∫_0^λ on the same rule mapped to [0, λ]
        let mut inner_plus = zero.clone();
        let mut inner_minus = zero.clone();
        for (xi, wi) in x.iter().zip(&w) {
            let s = 0.5 * lam * (xi + 1.0);
            let ws = Complex64::new(0.5 * lam * wi, 0.0);
            inner_plus += op.f(s) * ws;
            inner_minus += op.f(-s) * ws;
        }
        triangle += (&fp * inner_plus + inner_minus * &fm) * Complex64::new(wl, 0.0);
    }
    let square = full_plus * full_minus;
    (first, triangle, square)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_pair(a: &CMatrix, b: &CMatrix) -> Result<()> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::Domain(
            "A and B must be square and of equal size".into(),
        ));
    }
    if n > MAX_DIMENSION {
        return Err(Error::Resource {
            dimension: n,
            cap: MAX_DIMENSION,
        });
    }
    let scale = max_abs(a).max(max_abs(b)).max(1.0);
    if hermiticity_defect(a) > 1e-12 * scale || hermiticity_defect(b) > 1e-12 * scale {
        return Err(Error::Domain("A and B must be Hermitian".into()));
    }
    Ok(())
}

/// Second-order expansion of `e^{−i(A−εB)τ} e^{−i(A+εB)τ}`:
///
/// `e^{−iAτ}(1 + iε∫[F(λ)−F(−λ)] − ε²∫∫_{ξ<λ}[F(λ)F(ξ)+F(−ξ)F(−λ)] + ε²∫∫F(λ)F(−ξ)) e^{−iAτ}`
///
/// with the integrals on Gauss–Legendre rules doubled until the result
/// changes by less than `1e-12`.
pub fn perturbation_expansion(a: &CMatrix, b: &CMatrix, eps: f64, tau: f64) -> Result<CMatrix> {
    check_pair(a, b)?;
    let op = Interaction::new(a, b);
    let dim = a.nrows();
    let assemble = |(first, triangle, square): (CMatrix, CMatrix, CMatrix)| {
        let inner = CMatrix::identity(dim, dim) + first * Complex64::new(0.0, eps)
            - triangle * Complex64::new(eps * eps, 0.0)
            + square * Complex64::new(eps * eps, 0.0);
        let e = op.exp_a(tau);
        &e * inner * &e
    };
    let mut n = 8;
    let mut prev = assemble(integrals(&op, tau, n));
    loop {
        n *= 2;
        let next = assemble(integrals(&op, tau, n));
        let change = max_abs(&(&next - &prev));
        if change < 1e-12 {
            return Ok(op.to_lab(&next));
        }
        if n >= 512 {
            return Err(Error::Accuracy {
                estimate: max_abs(&next),
                error: change,
            });
        }
        prev = next;
    }
}

fn exp_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let v = eig.eigenvectors;
    let n = h.nrows();
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, -eig.eigenvalues[i] * t)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    &v * d * v.adjoint()
}

fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Operator-norm distance between `e^{−i(A−εB)τ} e^{−i(A+εB)τ}` and its
/// second-order expansion.
pub fn perturbation_defect(a: &CMatrix, b: &CMatrix, eps: f64, tau: f64) -> Result<f64> {
    let expansion = perturbation_expansion(a, b, eps, tau)?;
    let scaled = b * Complex64::new(eps, 0.0);
    let exact = exp_hermitian(&(a - &scaled), tau) * exp_hermitian(&(a + &scaled), tau);
    Ok(spectral_norm(&(exact - expansion)))
}
