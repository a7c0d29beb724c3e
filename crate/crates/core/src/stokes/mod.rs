//! Uzawa solver for the discrete Stokes system
//!
//! ```text
//! Δu_c + B_c p = f_c   (c = x, y)
//! Σ_c B_cᵀ u_c = g
//! ```
//!
//! Eliminating the velocity leaves the pressure equation
//! `S p = Σ_c B_cᵀΔ⁻¹f_c − g` with `S = Σ_c B_cᵀΔ⁻¹B_c`. `S` is symmetric
//! positive semi-definite with a two-dimensional kernel (the constant and
//! the checkerboard pressure), which is projected out of every Krylov
//! vector. All fields stay in low-rank form; every Poisson solve goes
//! through [`solve_poisson_cross`].

mod gmres;

pub use gmres::{gmres, Applied, GmresConfig, IterationRecord, KrylovVector, SolveReport};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lowrank::{LowRankMatrix, TruncationPolicy};
use crate::operators::{BoundaryData, Component, Grid2D, Operators};
use crate::poisson::{solve_poisson_cross, PoissonSolveStats};

/// Relative threshold of the rounding after deflation.
const DEFLATE_EPS: f64 = 1e-14;

/// Orthonormal basis of the kernel of `B` on an `n×n` pressure grid:
/// `1⊗1` and the checkerboard `a⊗a`, `a_i = (−1)^i`.
pub fn kernel_basis(n: usize) -> [LowRankMatrix; 2] {
    let ones = DVector::from_element(n, 1.0);
    let alt = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    let q1 = LowRankMatrix::outer(&ones, &ones).scale(1.0 / n as f64);
    let q2 = LowRankMatrix::outer(&alt, &alt).scale(1.0 / n as f64);
    // The two are orthogonal for even n only.
    let overlap = q1.dot(&q2).expect("same shape");
    let q2 = q2.lin_comb(1.0, &q1, -overlap).expect("same shape");
    let norm = q2.frob_norm();
    [q1, q2.scale(1.0 / norm)]
}

/// Removes the kernel components of a pressure field.
pub fn deflate(p: &LowRankMatrix) -> Result<LowRankMatrix> {
    let (m, n) = p.shape();
    if m != n {
        return Err(Error::ShapeMismatch { op: "deflate", expected: (m, m), got: (m, n) });
    }
    if p.rank() == 0 {
        return Ok(p.clone());
    }
    let [q1, q2] = kernel_basis(n);
    let (a, b) = (p.dot(&q1)?, p.dot(&q2)?);
    let out = LowRankMatrix::sum((n, n), [(1.0, p), (-a, &q1), (-b, &q2)])?;
    Ok(out.round(&TruncationPolicy::relative(DEFLATE_EPS)))
}

/// Dense counterpart of [`deflate`].
pub fn deflate_dense(p: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = p.clone();
    for q in kernel_basis(p.nrows()) {
        let q = q.to_dense();
        let a = out.dot(&q);
        out -= q * a;
    }
    out
}

/// `deflate(round(Σ_c B_cᵀ·Δ⁻¹·B_c·p))` with all inner operations at `eps`.
pub fn schur_apply(ops: &Operators, p: &LowRankMatrix, eps: f64) -> Result<Applied<LowRankMatrix>> {
    let shape = ops.grid().pressure_shape();
    if p.shape() != shape {
        return Err(Error::ShapeMismatch { op: "schur_apply", expected: shape, got: p.shape() });
    }
    let policy = TruncationPolicy::relative(eps);
    let mut parts = Vec::with_capacity(2);
    let mut stats = Vec::with_capacity(2);
    for c in Component::ALL {
        let v = ops.apply_b(c, p)?;
        let (f, st) = solve_poisson_cross(ops, &v, &policy)?;
        parts.push(ops.apply_bt(c, &f)?);
        stats.push(st);
    }
    let s = LowRankMatrix::sum(shape, parts.iter().map(|x| (1.0, x)))?.round(&policy);
    Ok((deflate(&s)?, stats))
}

/// Assembled Stokes problem: momentum and divergence right-hand sides with
/// the boundary contributions already added.
#[derive(Debug, Clone)]
pub struct StokesProblem {
    pub grid: Grid2D,
    pub f_x: LowRankMatrix,
    pub f_y: LowRankMatrix,
    pub g: LowRankMatrix,
    pub bc: BoundaryData,
}

impl StokesProblem {
    /// Folds the boundary corrections of `bc` into the given interior data.
    pub fn new(
        grid: Grid2D,
        f_x: LowRankMatrix,
        f_y: LowRankMatrix,
        g: LowRankMatrix,
        bc: BoundaryData,
    ) -> Result<Self> {
        let vs = grid.velocity_shape();
        let ps = grid.pressure_shape();
        for (op, want, got) in [("f_x", vs, f_x.shape()), ("f_y", vs, f_y.shape()), ("g", ps, g.shape())] {
            if want != got {
                return Err(Error::ShapeMismatch { op, expected: want, got });
            }
        }
        if bc.n() != grid.n() {
            return Err(Error::InvalidConfig(format!("boundary data for n={} on a grid with n={}", bc.n(), grid.n())));
        }
        let (f_x, f_y, g) = if bc.is_homogeneous() {
            (f_x, f_y, g)
        } else {
            let corr = bc.corrections(&Operators::new(grid))?;
            (f_x.add(&corr.f_x)?, f_y.add(&corr.f_y)?, g.add(&corr.g)?)
        };
        Ok(Self { grid, f_x, f_y, g, bc })
    }

    pub fn f(&self, c: Component) -> &LowRankMatrix {
        match c {
            Component::X => &self.f_x,
            Component::Y => &self.f_y,
        }
    }
}

/// `deflate(round(Σ_c B_cᵀ·Δ⁻¹·f_c − g))`.
pub fn schur_rhs(ops: &Operators, prob: &StokesProblem, eps: f64) -> Result<Applied<LowRankMatrix>> {
    let policy = TruncationPolicy::relative(eps);
    let mut parts = Vec::with_capacity(3);
    let mut stats = Vec::with_capacity(2);
    for c in Component::ALL {
        let (f, st) = solve_poisson_cross(ops, prob.f(c), &policy)?;
        parts.push(ops.apply_bt(c, &f)?);
        stats.push(st);
    }
    parts.push(prob.g.scale(-1.0));
    let s = LowRankMatrix::sum(ops.grid().pressure_shape(), parts.iter().map(|x| (1.0, x)))?.round(&policy);
    Ok((deflate(&s)?, stats))
}

/// Pressure and velocity of a Stokes solve.
#[derive(Debug, Clone)]
pub struct StokesSolution<F> {
    pub p: F,
    pub u_x: F,
    pub u_y: F,
    pub report: SolveReport,
}

impl<F> StokesSolution<F> {
    pub fn u(&self, c: Component) -> &F {
        match c {
            Component::X => &self.u_x,
            Component::Y => &self.u_y,
        }
    }
}

/// Solves the pressure equation by inexact GMRES, then recovers the velocity
/// `u_c = Δ⁻¹(f_c − B_c p)`.
pub fn uzawa_solve(prob: &StokesProblem, cfg: &GmresConfig) -> Result<StokesSolution<LowRankMatrix>> {
    cfg.validate()?;
    let ops = Operators::new(prob.grid);
    let (rhs, rhs_stats) = schur_rhs(&ops, prob, cfg.base_eps)?;
    let (p, mut report) = gmres(&rhs, cfg, |x, eps| schur_apply(&ops, x, eps), deflate)?;
    report.rhs_poisson = rhs_stats;

    let policy = TruncationPolicy::relative(cfg.base_eps);
    let mut velocity = Vec::with_capacity(2);
    for c in Component::ALL {
        let r = prob.f(c).sub(&ops.apply_b(c, &p)?)?.round(&policy);
        let (u, st) = solve_poisson_cross(&ops, &r, &policy)?;
        report.velocity_poisson.push(st);
        velocity.push(u);
    }
    let u_y = velocity.pop().expect("two components");
    let u_x = velocity.pop().expect("two components");
    Ok(StokesSolution { p, u_x, u_y, report })
}

/// `‖Σ_c B_cᵀu_c − g‖_F`, in low-rank arithmetic.
pub fn divergence_residual(ops: &Operators, u_x: &LowRankMatrix, u_y: &LowRankMatrix, g: &LowRankMatrix) -> Result<f64> {
    let dx = ops.apply_bt(Component::X, u_x)?;
    let dy = ops.apply_bt(Component::Y, u_y)?;
    Ok(LowRankMatrix::sum(g.shape(), [(1.0, &dx), (1.0, &dy), (-1.0, g)])?.frob_norm())
}

/// Any Poisson solve in the report that missed its residual target.
pub fn poisson_failures(report: &SolveReport) -> usize {
    let all: Vec<&PoissonSolveStats> = report
        .iterations
        .iter()
        .flat_map(|r| r.poisson.iter())
        .chain(&report.rhs_poisson)
        .chain(&report.velocity_poisson)
        .collect();
    all.iter().filter(|s| !s.converged).count()
}
