//! Cross (skeleton) approximation of a matrix known only through an
//! element evaluator.
//!
//! [`aca_cross`] runs adaptive cross approximation with partial pivoting:
//! each step evaluates one residual row and one residual column and appends
//! their cross as a dyad. It stops when the newest dyad is small relative to
//! the running norm estimate *and* a batch of random entries confirms the
//! residual is small. [`maxvol`] finds a dominant `r×r` submatrix of a tall
//! matrix and is used for the optional skeleton refinement.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lowrank::{LowRankMatrix, TruncationPolicy};

/// Max residual over the validation sample may exceed the RMS level
/// `eps·‖F‖/√(mn)` by this factor.
const VALIDATION_SLACK: f64 = 10.0;

/// Matrix entries on demand. Implementations must be deterministic and
/// re-entrant.
pub trait ElementEvaluator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn eval(&self, i: usize, j: usize) -> f64;

    fn eval_row(&self, i: usize, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.eval(i, j);
        }
    }

    fn eval_col(&self, j: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.eval(i, j);
        }
    }
}

/// Closure-backed evaluator.
pub struct FnEvaluator<F> {
    nrows: usize,
    ncols: usize,
    f: F,
}

impl<F: Fn(usize, usize) -> f64 + Sync> FnEvaluator<F> {
    pub fn new(nrows: usize, ncols: usize, f: F) -> Self {
        Self { nrows, ncols, f }
    }
}

impl<F: Fn(usize, usize) -> f64 + Sync> ElementEvaluator for FnEvaluator<F> {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn eval(&self, i: usize, j: usize) -> f64 {
        (self.f)(i, j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossConfig {
    pub eps_rel: f64,
    pub rank_max: usize,
    /// Random entries checked before accepting convergence (≥ 25).
    pub validation_samples: usize,
    /// Allowed growth above 1 of the maxvol coefficients.
    pub maxvol_delta: f64,
    pub seed: u64,
    /// Replace the row side by exact rows at maxvol-selected indices.
    pub maxvol_refine: bool,
}

impl CrossConfig {
    pub fn new(eps_rel: f64) -> Self {
        Self {
            eps_rel,
            rank_max: usize::MAX,
            validation_samples: 64,
            maxvol_delta: 1e-2,
            seed: 0x5eed,
            maxvol_refine: false,
        }
    }

    pub fn with_rank_max(mut self, rank_max: usize) -> Self {
        self.rank_max = rank_max;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_rel > 0.0) || !self.eps_rel.is_finite() {
            return Err(Error::InvalidConfig(format!("cross eps_rel must be positive, got {}", self.eps_rel)));
        }
        if self.rank_max == 0 {
            return Err(Error::InvalidConfig("cross rank_max must be positive".into()));
        }
        if self.validation_samples < 25 {
            return Err(Error::InvalidConfig(format!(
                "validation_samples must be at least 25, got {}",
                self.validation_samples
            )));
        }
        if !(self.maxvol_delta >= 0.0) {
            return Err(Error::InvalidConfig("maxvol_delta must be >= 0".into()));
        }
        Ok(())
    }
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self::new(crate::lowrank::DEFAULT_EPS)
    }
}

#[derive(Debug, Clone)]
pub struct CrossResult {
    /// Cross approximant after rounding at `eps_rel`.
    pub matrix: LowRankMatrix,
    /// The raw skeleton before rounding; interpolates every pivot row and column.
    pub interpolant: LowRankMatrix,
    pub pivots: Vec<(usize, usize)>,
    /// `false` when `rank_max` was hit before the stopping test passed.
    pub converged: bool,
    /// Last observed residual level relative to the approximant norm.
    pub residual_estimate: f64,
    pub evaluations: usize,
}

/// Indices of a dominant `r×r` submatrix of the tall matrix `a` (`n×r`):
/// every entry of `a·a[I,:]⁻¹` is bounded by `1 + delta` in modulus.
pub fn maxvol(a: &DMatrix<f64>, delta: f64) -> Result<Vec<usize>> {
    let (n, r) = a.shape();
    if r > n {
        return Err(Error::ShapeMismatch { op: "maxvol", expected: (r, r), got: (n, r) });
    }
    if r == 0 {
        return Ok(Vec::new());
    }
    // Start from the pivots of Gaussian elimination with row pivoting.
    let scale = a.amax();
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut work = a.clone();
    let mut chosen = vec![false; n];
    let mut rows = Vec::with_capacity(r);
    for k in 0..r {
        let mut best = None;
        let mut best_val = tol;
        for i in 0..n {
            if !chosen[i] && work[(i, k)].abs() > best_val {
                best_val = work[(i, k)].abs();
                best = Some(i);
            }
        }
        let p = best.ok_or(Error::RankDeficient { column: k })?;
        chosen[p] = true;
        rows.push(p);
        let piv = work[(p, k)];
        for i in 0..n {
            if i == p {
                continue;
            }
            let f = work[(i, k)] / piv;
            if f != 0.0 {
                for c in k..r {
                    work[(i, c)] -= f * work[(p, c)];
                }
            }
        }
    }

    let sub = a.select_rows(&rows);
    let inv = sub.try_inverse().ok_or(Error::RankDeficient { column: r - 1 })?;
    let mut b = a * inv;
    let bound = 1.0 + delta;
    // Each swap multiplies |det| by more than `bound`; the cap only guards
    // against floating-point cycling.
    for _ in 0..(100 * n.max(r)) {
        let (mut bi, mut bj, mut bv) = (0, 0, 0.0f64);
        for j in 0..r {
            for i in 0..n {
                let v = b[(i, j)].abs();
                if v > bv {
                    (bi, bj, bv) = (i, j, v);
                }
            }
        }
        if bv <= bound {
            break;
        }
        rows[bj] = bi;
        // B ← B − B[:,j]·(B[i,:] − e_jᵀ) / B[i,j]
        let col = b.column(bj).clone_owned();
        let mut row = b.row(bi).clone_owned();
        row[bj] -= 1.0;
        let piv = b[(bi, bj)];
        b -= (col * row) / piv;
    }
    Ok(rows)
}

fn argmax_unused(values: &[f64], used: &[bool]) -> Option<usize> {
    let mut best = None;
    let mut best_val = -1.0;
    for (k, (&v, &u)) in values.iter().zip(used).enumerate() {
        if !u && v.abs() > best_val {
            best_val = v.abs();
            best = Some(k);
        }
    }
    best
}

struct Skeleton {
    m: usize,
    n: usize,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Skeleton {
    fn value(&self, i: usize, j: usize) -> f64 {
        self.u.iter().zip(&self.v).map(|(u, v)| u[i] * v[j]).sum()
    }

    fn to_lowrank(&self) -> LowRankMatrix {
        let k = self.u.len();
        let u = DMatrix::from_fn(self.m, k, |i, a| self.u[a][i]);
        let v = DMatrix::from_fn(self.n, k, |j, a| self.v[a][j]);
        LowRankMatrix::new(u, v).expect("consistent skeleton")
    }
}

/// Adaptive cross approximation with partial pivoting and random validation.
pub fn aca_cross<E: ElementEvaluator + ?Sized>(f: &E, cfg: &CrossConfig) -> Result<CrossResult> {
    cfg.validate()?;
    let (m, n) = (f.nrows(), f.ncols());
    let rank_cap = cfg.rank_max.min(m.min(n));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sk = Skeleton { m, n, u: Vec::new(), v: Vec::new() };
    let mut used_rows = vec![false; m];
    let mut used_cols = vec![false; n];
    let mut pivots = Vec::new();
    let mut evaluations = 0usize;
    let mut norm2 = 0.0f64;
    let mut row = vec![0.0; n];
    let mut col = vec![0.0; m];
    let mut converged = false;
    let mut residual_estimate = f64::INFINITY;
    let mut next_row = Some(0usize);

    // Random-entry check of the current residual. Returns the worst sample
    // and whether it is below the threshold.
    let mut validate = |sk: &Skeleton, norm2: f64, evaluations: &mut usize| -> (bool, (usize, usize), f64) {
        let mut worst = (0usize, 0usize);
        let mut worst_res = -1.0f64;
        let mut fmax = 0.0f64;
        for _ in 0..cfg.validation_samples {
            let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..n));
            let fij = f.eval(i, j);
            let res = (fij - sk.value(i, j)).abs();
            fmax = fmax.max(fij.abs());
            if res > worst_res {
                worst_res = res;
                worst = (i, j);
            }
        }
        *evaluations += cfg.validation_samples;
        let rms = norm2.sqrt() / ((m * n) as f64).sqrt();
        let threshold = (VALIDATION_SLACK * cfg.eps_rel * rms).max(64.0 * f64::EPSILON * fmax);
        let level = if rms > 0.0 { worst_res / (rms * VALIDATION_SLACK) } else { worst_res };
        (worst_res <= threshold, worst, level)
    };

    while let Some(i_star) = next_row {
        if sk.u.len() >= rank_cap {
            break;
        }
        f.eval_row(i_star, &mut row);
        evaluations += n;
        let raw_max = row.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        for (u, v) in sk.u.iter().zip(&sk.v) {
            let ui = u[i_star];
            for (r, vj) in row.iter_mut().zip(v) {
                *r -= ui * vj;
            }
        }
        used_rows[i_star] = true;
        let j_star = argmax_unused(&row, &used_cols);
        let pivot = j_star.map(|j| row[j]).unwrap_or(0.0);
        // A residual row at cancellation level carries no information.
        if pivot == 0.0 || pivot.abs() <= 1e3 * f64::EPSILON * raw_max {
            // Residual row vanishes: look elsewhere or stop.
            let (ok, worst, level) = validate(&sk, norm2, &mut evaluations);
            residual_estimate = level * cfg.eps_rel;
            if ok {
                converged = true;
                break;
            }
            next_row = if used_rows[worst.0] { used_rows.iter().position(|u| !u) } else { Some(worst.0) };
            continue;
        }
        let j_star = j_star.unwrap();
        f.eval_col(j_star, &mut col);
        evaluations += m;
        for (u, v) in sk.u.iter().zip(&sk.v) {
            let vj = v[j_star];
            for (c, ui) in col.iter_mut().zip(u) {
                *c -= vj * ui;
            }
        }
        used_cols[j_star] = true;
        let v_new: Vec<f64> = row.iter().map(|&x| x / pivot).collect();
        let u_new = col.clone();

        let unorm2: f64 = u_new.iter().map(|x| x * x).sum();
        let vnorm2: f64 = v_new.iter().map(|x| x * x).sum();
        let mut cross_terms = 0.0;
        for (u, v) in sk.u.iter().zip(&sk.v) {
            let uu: f64 = u.iter().zip(&u_new).map(|(a, b)| a * b).sum();
            let vv: f64 = v.iter().zip(&v_new).map(|(a, b)| a * b).sum();
            cross_terms += uu * vv;
        }
        norm2 = (norm2 + 2.0 * cross_terms + unorm2 * vnorm2).max(0.0);
        let dyad_norm = (unorm2 * vnorm2).sqrt();
        pivots.push((i_star, j_star));
        sk.u.push(u_new);
        sk.v.push(v_new);
        next_row = argmax_unused(&col, &used_rows);

        if dyad_norm <= cfg.eps_rel * norm2.sqrt() {
            let (ok, worst, level) = validate(&sk, norm2, &mut evaluations);
            residual_estimate = (dyad_norm / norm2.sqrt().max(f64::MIN_POSITIVE)).max(level * cfg.eps_rel);
            if ok {
                converged = true;
                break;
            }
            if !used_rows[worst.0] {
                next_row = Some(worst.0);
            }
        } else {
            residual_estimate = dyad_norm / norm2.sqrt().max(f64::MIN_POSITIVE);
        }
    }
    if next_row.is_none() && !converged {
        // Every row has been used: the skeleton reproduces the matrix.
        converged = true;
        residual_estimate = 0.0;
    }

    let mut interpolant = sk.to_lowrank();
    if cfg.maxvol_refine && interpolant.rank() > 0 {
        let q = interpolant.u().clone().qr().q();
        let idx = maxvol(&q, cfg.maxvol_delta)?;
        let inv = q.select_rows(&idx).try_inverse().ok_or(Error::RankDeficient { column: idx.len() - 1 })?;
        let mut rows_t = DMatrix::zeros(n, idx.len());
        for (a, &i) in idx.iter().enumerate() {
            f.eval_row(i, &mut row);
            rows_t.set_column(a, &nalgebra::DVector::from_column_slice(&row));
        }
        evaluations += idx.len() * n;
        interpolant = LowRankMatrix::new(q * inv, rows_t)?;
    }
    let policy = TruncationPolicy::relative(cfg.eps_rel).with_rank_max(cfg.rank_max)?;
    let matrix = interpolant.round(&policy);
    Ok(CrossResult { matrix, interpolant, pivots, converged, residual_estimate, evaluations })
}
