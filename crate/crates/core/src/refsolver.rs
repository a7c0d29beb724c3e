//! Dense reference solvers.
//!
//! Fields are stored in full; Poisson solves divide by the eigenvalues of
//! `Δ` between two dense DSTs. The Stokes solver runs the same GMRES as the
//! low-rank path, so differences between the two come from the low-rank
//! arithmetic alone.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::operators::{assemble_dense, Component, Operators};
use crate::stokes::{deflate_dense, gmres, Applied, GmresConfig, StokesProblem, StokesSolution};

pub const DENSE_POISSON_MAX_N: usize = 4096;
pub const DENSE_STOKES_MAX_N: usize = 1024;
/// The spectrum is computed from an `n²×n²` dense eigenproblem.
pub const SPECTRUM_MAX_N: usize = 24;

fn check_n(n: usize, max: usize) -> Result<()> {
    if n > max {
        Err(Error::TooLargeForDense { n, max })
    } else {
        Ok(())
    }
}

/// `Δ⁻¹g` by DST, elementwise division and DST.
pub fn dense_poisson(ops: &Operators, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_n(ops.n(), DENSE_POISSON_MAX_N)?;
    let shape = ops.grid().velocity_shape();
    if g.shape() != shape {
        return Err(Error::ShapeMismatch { op: "dense_poisson", expected: shape, got: g.shape() });
    }
    let table = ops.spectrum();
    let mut hat = ops.dst2_dense(g);
    for j in 0..shape.1 {
        for i in 0..shape.0 {
            hat[(i, j)] /= table.eval_d(i, j);
        }
    }
    Ok(ops.dst2_dense(&hat))
}

/// Dense `Σ_c B_cᵀΔ⁻¹B_c·p`, deflated.
pub fn dense_schur_apply(ops: &Operators, p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut s = DMatrix::zeros(p.nrows(), p.ncols());
    for c in Component::ALL {
        let f = dense_poisson(ops, &ops.apply_b_dense(c, p))?;
        s += ops.apply_bt_dense(c, &f);
    }
    Ok(deflate_dense(&s))
}

/// Uzawa with dense fields and exact inner solves.
pub fn dense_stokes(prob: &StokesProblem, cfg: &GmresConfig) -> Result<StokesSolution<DMatrix<f64>>> {
    check_n(prob.grid.n(), DENSE_STOKES_MAX_N)?;
    let ops = Operators::new(prob.grid);
    let f = [prob.f_x.to_dense(), prob.f_y.to_dense()];
    let mut rhs = -prob.g.to_dense();
    for (c, fc) in Component::ALL.into_iter().zip(&f) {
        rhs += ops.apply_bt_dense(c, &dense_poisson(&ops, fc)?);
    }
    let rhs = deflate_dense(&rhs);
    let apply = |x: &DMatrix<f64>, _eps: f64| -> Result<Applied<DMatrix<f64>>> {
        Ok((dense_schur_apply(&ops, x)?, Vec::new()))
    };
    let (p, report) = gmres(&rhs, cfg, apply, |x| Ok(deflate_dense(x)))?;
    let mut u = Vec::with_capacity(2);
    for (c, fc) in Component::ALL.into_iter().zip(&f) {
        u.push(dense_poisson(&ops, &(fc - ops.apply_b_dense(c, &p)))?);
    }
    let u_y = u.pop().expect("two components");
    let u_x = u.pop().expect("two components");
    Ok(StokesSolution { p, u_x, u_y, report })
}

/// Sorted eigenvalues of the dense Schur complement `Σ_c B_cᵀΔ⁻¹B_c`.
pub fn schur_spectrum(n: usize) -> Result<Vec<f64>> {
    check_n(n, SPECTRUM_MAX_N)?;
    let d = assemble_dense(n)?;
    let chol = d
        .laplace
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidConfig("dense Laplacian is not positive definite".into()))?;
    let mut s = DMatrix::zeros(n * n, n * n);
    for b in [&d.b_x, &d.b_y] {
        s += b.transpose() * chol.solve(b);
    }
    // Symmetrize away round-off before the symmetric eigensolver.
    let s = (&s + s.transpose()) * 0.5;
    let mut eig: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Counts extracted from a Schur spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSummary {
    pub n: usize,
    pub zeros: usize,
    pub ones: usize,
    pub min_nonzero: f64,
    pub max: f64,
    pub min: f64,
}

impl SpectrumSummary {
    pub fn from_eigenvalues(n: usize, eig: &[f64], tol: f64) -> Self {
        let zeros = eig.iter().filter(|&&x| x.abs() <= tol).count();
        let ones = eig.iter().filter(|&&x| (x - 1.0).abs() <= tol).count();
        let min_nonzero = eig.iter().copied().filter(|&x| x > tol).fold(f64::INFINITY, f64::min);
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        Self { n, zeros, ones, min_nonzero, max, min }
    }
}
