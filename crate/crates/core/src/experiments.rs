//! Benchmark problems and the drivers shared by the CLI and the acceptance
//! tests.
//!
//! * `sine`: homogeneous walls, forcing `f_x = sin 2πy`, `f_y = sin 2πx`
//!   at the velocity nodes and `g = −(1/π)·sin 2πx·sin 2πy` at the cell
//!   centers. Its pressure is `p = (1/π)·sin 2πx·sin 2πy`, which is sampled
//!   at the cell centers for the error.
//! * `cavity`: no forcing, unit tangential velocity on the lid `y = 1`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lowrank::LowRankMatrix;
use crate::operators::{BoundaryData, Grid2D};
use crate::refsolver::dense_stokes;
use crate::stokes::{deflate, deflate_dense, uzawa_solve, GmresConfig, SolveReport, StokesProblem};

/// Low-rank or full-format arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    LowRank,
    Full,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::LowRank => "lowrank",
            Mode::Full => "full",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowrank" | "lr" => Ok(Mode::LowRank),
            "full" => Ok(Mode::Full),
            _ => Err(Error::InvalidConfig(format!("unknown mode `{s}`"))),
        }
    }
}

fn sampled(points: &[f64], f: impl Fn(f64) -> f64) -> DVector<f64> {
    DVector::from_iterator(points.len(), points.iter().map(|&x| f(x)))
}

/// The sine problem and its analytic pressure at the cell centers.
pub fn sine_problem(n: usize) -> Result<(StokesProblem, LowRankMatrix)> {
    let grid = Grid2D::new(n)?;
    let nodes = grid.interior_nodes();
    let centers = grid.cell_centers();
    let ones = DVector::from_element(n - 1, 1.0);
    let s_nodes = sampled(&nodes, |x| (TAU * x).sin());
    let s_centers = sampled(&centers, |x| (TAU * x).sin());

    let f_x = LowRankMatrix::outer(&ones, &s_nodes);
    let f_y = LowRankMatrix::outer(&s_nodes, &ones);
    let p = LowRankMatrix::outer(&s_centers, &s_centers).scale(1.0 / PI);
    let g = p.scale(-1.0);
    let prob = StokesProblem::new(grid, f_x, f_y, g, BoundaryData::homogeneous(n))?;
    Ok((prob, p))
}

/// Lid-driven cavity with lid speed 1.
pub fn cavity_problem(n: usize) -> Result<StokesProblem> {
    let grid = Grid2D::new(n)?;
    let v0 = LowRankMatrix::zeros(n - 1, n - 1);
    StokesProblem::new(grid, v0.clone(), v0, LowRankMatrix::zeros(n, n), BoundaryData::lid_driven(n, 1.0))
}

/// `‖deflate(p) − deflate(q)‖ / ‖deflate(q)‖`.
pub fn relative_pressure_error(p: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let r = deflate_dense(reference);
    (deflate_dense(p) - &r).norm() / r.norm()
}

/// Low-rank version of [`relative_pressure_error`].
pub fn relative_pressure_error_lr(p: &LowRankMatrix, reference: &LowRankMatrix) -> Result<f64> {
    let r = deflate(reference)?;
    Ok(deflate(p)?.sub(&r)?.frob_norm() / r.frob_norm())
}

/// One Stokes solve with its pressure in dense form.
#[derive(Debug, Clone)]
pub struct SolveRecord {
    pub n: usize,
    pub mode: Mode,
    pub elapsed: Duration,
    pub iterations: usize,
    /// Largest Krylov-vector rank (the full dimension in full mode).
    pub max_rank: usize,
    pub pressure_rank: usize,
    pub converged: bool,
    pub report: SolveReport,
    pub pressure: DMatrix<f64>,
}

/// Solves `prob` in the given mode.
pub fn solve(prob: &StokesProblem, mode: Mode, cfg: &GmresConfig) -> Result<SolveRecord> {
    let start = Instant::now();
    let n = prob.grid.n();
    let (pressure, pressure_rank, report) = match mode {
        Mode::LowRank => {
            let sol = uzawa_solve(prob, cfg)?;
            (sol.p.to_dense(), sol.p.rank(), sol.report)
        }
        Mode::Full => {
            let sol = dense_stokes(prob, cfg)?;
            (sol.p, n, sol.report)
        }
    };
    Ok(SolveRecord {
        n,
        mode,
        elapsed: start.elapsed(),
        iterations: report.iteration_count(),
        max_rank: report.max_krylov_rank(),
        pressure_rank,
        converged: report.converged,
        report,
        pressure,
    })
}

/// Sine test: the solve and the relative pressure error.
pub fn run_sine(n: usize, mode: Mode, cfg: &GmresConfig) -> Result<(SolveRecord, f64)> {
    let (prob, exact) = sine_problem(n)?;
    let rec = solve(&prob, mode, cfg)?;
    let err = relative_pressure_error(&rec.pressure, &exact.to_dense());
    Ok((rec, err))
}

/// Cavity in both modes and the relative difference of the pressures.
pub fn run_cavity(n: usize, cfg: &GmresConfig) -> Result<(SolveRecord, SolveRecord, f64)> {
    let prob = cavity_problem(n)?;
    let lr = solve(&prob, Mode::LowRank, cfg)?;
    let full = solve(&prob, Mode::Full, cfg)?;
    let diff = relative_pressure_error(&lr.pressure, &full.pressure);
    Ok((lr, full, diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{Component, Operators};

    #[test]
    fn sine_data_is_consistent_with_analytic_pressure() {
        // With the analytic pressure the momentum equation leaves a smooth
        // velocity; its divergence must reproduce g up to O(h²).
        let n = 64;
        let (prob, p) = sine_problem(n).unwrap();
        let ops = Operators::with_n(n).unwrap();
        let mut div = DMatrix::zeros(n, n);
        for c in Component::ALL {
            let r = prob.f(c).to_dense() - ops.apply_b_dense(c, &p.to_dense());
            let u = crate::refsolver::dense_poisson(&ops, &r).unwrap();
            div += ops.apply_bt_dense(c, &u);
        }
        let g = prob.g.to_dense();
        assert!((div - &g).norm() <= 1e-2 * g.norm());
    }

    #[test]
    fn small_sine_runs_in_both_modes() {
        let cfg = GmresConfig::for_eps(1e-9);
        let (lr, e_lr) = run_sine(16, Mode::LowRank, &cfg).unwrap();
        let (full, e_full) = run_sine(16, Mode::Full, &cfg).unwrap();
        assert!(lr.converged && full.converged);
        assert!((e_lr - e_full).abs() <= 1e-6, "{e_lr} vs {e_full}");
        assert!(relative_pressure_error(&lr.pressure, &full.pressure) <= 1e-6);
        assert_eq!("full".parse::<Mode>().unwrap(), Mode::Full);
        assert!("dense".parse::<Mode>().is_err());
    }
}
