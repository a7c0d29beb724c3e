//! Inexact GMRES over an abstract vector type.
//!
//! The same iteration drives the low-rank and the dense Uzawa solvers, so
//! differences between the two isolate the low-rank arithmetic. Vectors are
//! combined through [`KrylovVector`], whose operations may compress (round)
//! their result at a caller-supplied accuracy.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lowrank::LowRankMatrix;
use crate::poisson::PoissonSolveStats;

/// Vector space operations needed by [`gmres`].
pub trait KrylovVector: Clone {
    fn dot(&self, other: &Self) -> f64;
    fn norm(&self) -> f64;
    fn scale(&self, a: f64) -> Self;
    /// `Σ c_i·x_i`, compressed with an absolute error of at most `atol`.
    fn combine(terms: &[(f64, &Self)], atol: f64) -> Result<Self>;
    /// Storage rank (the full dimension for dense vectors).
    fn rank(&self) -> usize;
}

impl KrylovVector for LowRankMatrix {
    fn dot(&self, other: &Self) -> f64 {
        LowRankMatrix::dot(self, other).expect("Krylov vectors share a shape")
    }

    fn norm(&self) -> f64 {
        self.frob_norm()
    }

    fn scale(&self, a: f64) -> Self {
        LowRankMatrix::scale(self, a)
    }

    fn combine(terms: &[(f64, &Self)], atol: f64) -> Result<Self> {
        let shape = terms.first().map(|t| t.1.shape()).unwrap_or((0, 0));
        Ok(LowRankMatrix::sum(shape, terms.iter().copied())?.round_abs(atol))
    }

    fn rank(&self) -> usize {
        LowRankMatrix::rank(self)
    }
}

impl KrylovVector for DMatrix<f64> {
    fn dot(&self, other: &Self) -> f64 {
        DMatrix::dot(self, other)
    }

    fn norm(&self) -> f64 {
        DMatrix::norm(self)
    }

    fn scale(&self, a: f64) -> Self {
        self * a
    }

    fn combine(terms: &[(f64, &Self)], _atol: f64) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidConfig("empty combination".into()))?;
        let mut acc = DMatrix::zeros(first.1.nrows(), first.1.ncols());
        for &(c, x) in terms {
            acc += x * c;
        }
        Ok(acc)
    }

    fn rank(&self) -> usize {
        self.nrows().min(self.ncols())
    }
}

/// Outer solver settings.
///
/// The matvec accuracy at step `k` is
/// `clamp(base_eps / max(r̃, tol), relax_floor, relax_cap)` with `r̃` the
/// current relative residual estimate: products may get less accurate as
/// the residual drops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub base_eps: f64,
    pub relax_floor: f64,
    pub relax_cap: f64,
}

impl GmresConfig {
    /// Defaults tied to a truncation threshold `eps`: `tol = 10·eps`,
    /// `base_eps = relax_floor = eps`, `relax_cap = 0.01`.
    pub fn for_eps(eps: f64) -> Self {
        Self { tol: 10.0 * eps, max_iter: 100, base_eps: eps, relax_floor: eps, relax_cap: 0.01f64.max(eps) }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.relax_floor > 0.0
            && self.relax_floor <= self.base_eps
            && self.base_eps <= self.tol
            && self.base_eps <= self.relax_cap
            && self.relax_cap < 1.0
            && self.tol < 1.0
            && self.max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "GMRES needs 0 < relax_floor ≤ base_eps ≤ min(tol, relax_cap), tol < 1, relax_cap < 1, max_iter > 0; got {self:?}"
            )))
        }
    }

    pub fn matvec_eps(&self, residual: f64) -> f64 {
        (self.base_eps / residual.max(self.tol)).clamp(self.relax_floor, self.relax_cap)
    }
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self::for_eps(crate::lowrank::DEFAULT_EPS)
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Relative residual estimate after this iteration.
    pub residual: f64,
    /// Rank of the new Krylov vector.
    pub krylov_rank: usize,
    pub matvec_eps: f64,
    pub poisson: Vec<PoissonSolveStats>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    /// Relative residual estimate of the returned iterate.
    pub residual: f64,
    pub solution_rank: usize,
    pub rhs_poisson: Vec<PoissonSolveStats>,
    pub velocity_poisson: Vec<PoissonSolveStats>,
    pub elapsed: Duration,
}

impl SolveReport {
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }

    pub fn max_krylov_rank(&self) -> usize {
        self.iterations.iter().map(|r| r.krylov_rank).max().unwrap_or(0)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.residual).collect()
    }

    pub fn krylov_ranks(&self) -> Vec<usize> {
        self.iterations.iter().map(|r| r.krylov_rank).collect()
    }
}

/// Matvec result: the product and the inner solve statistics.
pub type Applied<F> = (F, Vec<PoissonSolveStats>);

/// Full-orthogonalization GMRES from a zero initial guess, without restarts.
///
/// `apply(x, eps)` is the (inexact) operator, `project` is applied to every
/// new Krylov vector to keep it out of the operator's kernel. Modified
/// Gram-Schmidt compresses after each update with the absolute tolerance
/// `eps_k·‖A·v_k‖`, the error level the inexact product already carries.
pub fn gmres<F: KrylovVector>(
    b: &F,
    cfg: &GmresConfig,
    mut apply: impl FnMut(&F, f64) -> Result<Applied<F>>,
    mut project: impl FnMut(&F) -> Result<F>,
) -> Result<(F, SolveReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = SolveReport { converged: true, ..Default::default() };
    let beta = b.norm();
    if beta == 0.0 {
        report.residual = 0.0;
        report.elapsed = start.elapsed();
        return Ok((b.clone(), report));
    }

    let mut basis = vec![b.scale(1.0 / beta)];
    // Hessenberg columns after Givens rotations, the rotations, and the
    // rotated right-hand side `β·e₁`.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut rot: Vec<(f64, f64)> = Vec::new();
    let mut rhs = vec![beta];
    let mut residual = 1.0;

    while r_cols.len() < cfg.max_iter && residual > cfg.tol {
        let k = r_cols.len();
        let iter_start = Instant::now();
        let eps_k = cfg.matvec_eps(residual);
        let (mut w, poisson) = apply(&basis[k], eps_k)?;
        let atol = eps_k * w.norm();
        let mut h = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            h[i] = w.dot(v);
            w = F::combine(&[(1.0, &w), (-h[i], v)], atol)?;
        }
        w = project(&w)?;
        h[k + 1] = w.norm();

        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, bb) = (h[i], h[i + 1]);
            h[i] = c * a + s * bb;
            h[i + 1] = -s * a + c * bb;
        }
        let denom = h[k].hypot(h[k + 1]);
        let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
        h[k] = denom;
        let sub = h[k + 1];
        h.truncate(k + 1);
        rot.push((c, s));
        let g = rhs[k];
        rhs[k] = c * g;
        rhs.push(-s * g);
        residual = rhs[k + 1].abs() / beta;
        r_cols.push(h);

        // Happy breakdown: the Krylov space is invariant to working accuracy.
        let breakdown = sub <= 1e-14 * beta;
        let next = if breakdown { w.clone() } else { w.scale(1.0 / sub) };
        report.iterations.push(IterationRecord {
            iter: k + 1,
            residual,
            krylov_rank: next.rank(),
            matvec_eps: eps_k,
            poisson,
            elapsed: iter_start.elapsed(),
        });
        if breakdown {
            break;
        }
        basis.push(next);
    }

    // Back substitution on the triangular factor.
    let m = r_cols.len();
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = rhs[i];
        for (j, yj) in y.iter().enumerate().skip(i + 1) {
            acc -= r_cols[j][i] * yj;
        }
        y[i] = if r_cols[i][i] == 0.0 { 0.0 } else { acc / r_cols[i][i] };
    }
    let terms: Vec<(f64, &F)> = y.iter().copied().zip(&basis).collect();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let x = F::combine(&terms, cfg.base_eps * y_norm)?;
    let x = project(&x)?;

    report.residual = residual;
    report.converged = residual <= cfg.tol;
    report.solution_rank = x.rank();
    report.elapsed = start.elapsed();
    Ok((x, report))
}
