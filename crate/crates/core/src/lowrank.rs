//! Factorized low-rank matrices `M = U·Vᵀ` and their arithmetic.
//!
//! Every operation works on the factors only. Additions and Hadamard
//! products are exact and grow the rank; [`LowRankMatrix::truncate`]
//! brings it back down with a QR of each factor followed by an SVD of the
//! small `r×r` core, so the cost is `O((m + n)·r² + r³)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative truncation tolerance used throughout the solvers.
pub const DEFAULT_EPS: f64 = 5e-9;

/// Relative Frobenius-norm truncation tolerance with a hard rank cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    eps_rel: f64,
    rank_max: usize,
}

impl TruncationPolicy {
    /// `rank_max = usize::MAX` means "no cap". A zero tolerance needs a
    /// finite cap, otherwise rounding would keep every direction.
    pub fn new(eps_rel: f64, rank_max: usize) -> Result<Self> {
        if !(eps_rel >= 0.0) || !eps_rel.is_finite() {
            return Err(Error::InvalidPolicy(format!("eps_rel must be finite and >= 0, got {eps_rel}")));
        }
        if rank_max == 0 {
            return Err(Error::InvalidPolicy("rank_max must be positive".into()));
        }
        if eps_rel == 0.0 && rank_max == usize::MAX {
            return Err(Error::InvalidPolicy("eps_rel = 0 requires a finite rank_max".into()));
        }
        Ok(Self { eps_rel, rank_max })
    }

    /// Tolerance-only policy. Panics on a negative or non-finite `eps`.
    pub fn relative(eps_rel: f64) -> Self {
        assert!(eps_rel > 0.0 && eps_rel.is_finite(), "eps_rel must be positive, got {eps_rel}");
        Self { eps_rel, rank_max: usize::MAX }
    }

    /// Best rank-`r` approximation, no tolerance.
    pub fn fixed_rank(rank: usize) -> Self {
        assert!(rank > 0, "rank cap must be positive");
        Self { eps_rel: 0.0, rank_max: rank }
    }

    pub fn with_rank_max(self, rank_max: usize) -> Result<Self> {
        Self::new(self.eps_rel, rank_max)
    }

    pub fn eps_rel(&self) -> f64 {
        self.eps_rel
    }

    pub fn rank_max(&self) -> usize {
        self.rank_max
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self::relative(DEFAULT_EPS)
    }
}

/// Outcome of a truncation: the matrix plus whether the tolerance was met
/// before the rank cap kicked in.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub matrix: LowRankMatrix,
    pub tolerance_met: bool,
    /// `‖A − Ã‖_F / ‖A‖_F` as given by the discarded singular values.
    pub rel_error: f64,
}

/// An `nrows × ncols` matrix stored as `U·Vᵀ` with `U: nrows×r`, `V: ncols×r`.
///
/// Rank 0 is the exact zero matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankMatrix {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
}

fn check_shape(op: &'static str, expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { op, expected, got })
    }
}

impl LowRankMatrix {
    pub fn new(u: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(Error::ShapeMismatch {
                op: "LowRankMatrix::new",
                expected: (u.nrows(), u.ncols()),
                got: (v.nrows(), v.ncols()),
            });
        }
        Ok(Self { u, v })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { u: DMatrix::zeros(nrows, 0), v: DMatrix::zeros(ncols, 0) }
    }

    /// Rank-1 matrix `x·yᵀ`.
    pub fn outer(x: &DVector<f64>, y: &DVector<f64>) -> Self {
        Self {
            u: DMatrix::from_column_slice(x.len(), 1, x.as_slice()),
            v: DMatrix::from_column_slice(y.len(), 1, y.as_slice()),
        }
    }

    /// Truncated SVD of a dense matrix.
    pub fn from_dense(m: &DMatrix<f64>, policy: &TruncationPolicy) -> Truncation {
        let (nr, nc) = m.shape();
        if nr == 0 || nc == 0 || m.iter().all(|&x| x == 0.0) {
            return Truncation { matrix: Self::zeros(nr, nc), tolerance_met: true, rel_error: 0.0 };
        }
        let svd = m.clone().svd(true, true);
        let (u, s, vt) = (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
        Self::from_svd_parts(&u, s.as_slice(), &vt.transpose(), 0.0, policy)
    }

    /// Keep the leading singular triplets of `U·diag(s)·Vᵀ` according to `policy`.
    /// Singular values at or below `floor` are treated as exact zeros.
    fn from_svd_parts(
        u: &DMatrix<f64>,
        s: &[f64],
        v: &DMatrix<f64>,
        floor: f64,
        policy: &TruncationPolicy,
    ) -> Truncation {
        let s: Vec<f64> = s.iter().map(|&x| if x <= floor { 0.0 } else { x }).collect();
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&i| s[i]).collect();
        let (k, tolerance_met, rel_error) = truncation_rank(&sorted, policy);
        let mut uk = DMatrix::zeros(u.nrows(), k);
        let mut vk = DMatrix::zeros(v.nrows(), k);
        for (col, &src) in order.iter().take(k).enumerate() {
            uk.set_column(col, &(u.column(src) * s[src]));
            vk.set_column(col, &v.column(src));
        }
        Truncation { matrix: Self { u: uk, v: vk }, tolerance_met, rel_error }
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn into_factors(self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.u, self.v)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        if self.rank() == 0 {
            return DMatrix::zeros(self.nrows(), self.ncols());
        }
        &self.u * self.v.transpose()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        (0..self.rank()).map(|a| self.u[(i, a)] * self.v[(j, a)]).sum()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self { u: &self.u * alpha, v: self.v.clone() }
    }

    /// `a·self + b·other`, exact (ranks add).
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        check_shape("lin_comb", self.shape(), other.shape())?;
        let (m, n) = self.shape();
        let (ra, rb) = (self.rank(), other.rank());
        let mut u = DMatrix::zeros(m, ra + rb);
        let mut v = DMatrix::zeros(n, ra + rb);
        u.columns_mut(0, ra).copy_from(&(&self.u * a));
        u.columns_mut(ra, rb).copy_from(&(&other.u * b));
        v.columns_mut(0, ra).copy_from(&self.v);
        v.columns_mut(ra, rb).copy_from(&other.v);
        Ok(Self { u, v })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    /// Sum of several matrices of one shape, concatenating all factors.
    pub fn sum<'a>(shape: (usize, usize), terms: impl IntoIterator<Item = (f64, &'a Self)>) -> Result<Self> {
        let mut us = Vec::new();
        let mut vs = Vec::new();
        for (coef, t) in terms {
            check_shape("sum", shape, t.shape())?;
            if t.rank() > 0 {
                us.push(&t.u * coef);
                vs.push(t.v.clone());
            }
        }
        let r: usize = us.iter().map(|u| u.ncols()).sum();
        let mut u = DMatrix::zeros(shape.0, r);
        let mut v = DMatrix::zeros(shape.1, r);
        let mut off = 0;
        for (ui, vi) in us.iter().zip(&vs) {
            u.columns_mut(off, ui.ncols()).copy_from(ui);
            v.columns_mut(off, vi.ncols()).copy_from(vi);
            off += ui.ncols();
        }
        Ok(Self { u, v })
    }

    /// `L·A·Rᵀ` computed on the factors; the rank is unchanged.
    pub fn apply_factors(&self, left: &DMatrix<f64>, right: &DMatrix<f64>) -> Result<Self> {
        check_shape("apply_factors (left)", (left.nrows(), self.nrows()), left.shape())?;
        check_shape("apply_factors (right)", (right.nrows(), self.ncols()), right.shape())?;
        Ok(Self { u: left * &self.u, v: right * &self.v })
    }

    /// Same as [`apply_factors`](Self::apply_factors) but with arbitrary maps
    /// on the column spaces of each factor (e.g. a fast transform).
    pub fn map_factors(
        &self,
        left: impl FnOnce(&DMatrix<f64>) -> DMatrix<f64>,
        right: impl FnOnce(&DMatrix<f64>) -> DMatrix<f64>,
    ) -> Self {
        let u = left(&self.u);
        let v = right(&self.v);
        debug_assert_eq!(u.ncols(), v.ncols());
        Self { u, v }
    }

    /// Exact elementwise product; the rank is `rank(A)·rank(B)`.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        check_shape("hadamard", self.shape(), other.shape())?;
        let (m, n) = self.shape();
        let (ra, rb) = (self.rank(), other.rank());
        let mut u = DMatrix::zeros(m, ra * rb);
        let mut v = DMatrix::zeros(n, ra * rb);
        for a in 0..ra {
            for b in 0..rb {
                let k = a * rb + b;
                u.set_column(k, &self.u.column(a).component_mul(&other.u.column(b)));
                v.set_column(k, &self.v.column(a).component_mul(&other.v.column(b)));
            }
        }
        Ok(Self { u, v })
    }

    /// Frobenius inner product through the two `r_a×r_b` Gram matrices.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        check_shape("dot", self.shape(), other.shape())?;
        if self.rank() == 0 || other.rank() == 0 {
            return Ok(0.0);
        }
        let gu = self.u.transpose() * &other.u;
        let gv = self.v.transpose() * &other.v;
        Ok(gu.component_mul(&gv).sum())
    }

    /// `‖R_u·R_vᵀ‖_F` from the QR factors, accurate even when the
    /// represented matrix is a small difference of large terms.
    pub fn frob_norm(&self) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        let ru = self.u.clone().qr().r();
        let rv = self.v.clone().qr().r();
        (ru * rv.transpose()).norm()
    }

    /// Recompress to the smallest rank meeting `policy`, with a report.
    pub fn truncate(&self, policy: &TruncationPolicy) -> Truncation {
        self.truncate_with(|_| *policy)
    }

    /// Smallest rank with `‖A − Ã‖_F ≤ atol`.
    pub fn round_abs(&self, atol: f64) -> Self {
        self.truncate_with(|norm| {
            if norm <= atol {
                TruncationPolicy::relative(1.0)
            } else {
                TruncationPolicy::relative((atol / norm).max(f64::MIN_POSITIVE))
            }
        })
        .matrix
    }

    /// Truncation with a policy chosen once `‖A‖_F` is known.
    fn truncate_with(&self, policy_for: impl FnOnce(f64) -> TruncationPolicy) -> Truncation {
        let (m, n) = self.shape();
        if self.rank() == 0 {
            return Truncation { matrix: self.clone(), tolerance_met: true, rel_error: 0.0 };
        }
        let qr_u = self.u.clone().qr();
        let qr_v = self.v.clone().qr();
        let (qu, ru) = (qr_u.q(), qr_u.r());
        let (qv, rv) = (qr_v.q(), qr_v.r());
        let core = &ru * rv.transpose();
        if core.iter().all(|&x| x == 0.0) {
            return Truncation { matrix: Self::zeros(m, n), tolerance_met: true, rel_error: 0.0 };
        }
        // Cancellation noise of the factor representation (e.g. A − A).
        let scale: f64 = (0..self.rank()).map(|a| self.u.column(a).norm() * self.v.column(a).norm()).sum();
        let floor = 8.0 * f64::EPSILON * scale;
        let svd = core.svd(true, true);
        let (w, s, zt) = (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
        let policy = policy_for(s.norm());
        let trunc = Self::from_svd_parts(&w, s.as_slice(), &zt.transpose(), floor, &policy);
        let (wk, zk) = trunc.matrix.into_factors();
        Truncation {
            matrix: Self { u: qu * wk, v: qv * zk },
            tolerance_met: trunc.tolerance_met,
            rel_error: trunc.rel_error,
        }
    }

    /// [`truncate`](Self::truncate) without the report.
    pub fn round(&self, policy: &TruncationPolicy) -> Self {
        self.truncate(policy).matrix
    }
}

/// Smallest `k` with `‖σ[k..]‖ ≤ eps·‖σ‖`, capped at `rank_max`.
/// `sigma` must be sorted in decreasing order.
pub(crate) fn truncation_rank(sigma: &[f64], policy: &TruncationPolicy) -> (usize, bool, f64) {
    let len = sigma.len();
    // tails[k] = Σ_{i ≥ k} σ_i², accumulated from the small end
    let mut tails = vec![0.0; len + 1];
    for k in (0..len).rev() {
        tails[k] = tails[k + 1] + sigma[k] * sigma[k];
    }
    let total = tails[0];
    if total == 0.0 {
        return (0, true, 0.0);
    }
    let bound = policy.eps_rel() * policy.eps_rel() * total;
    let mut k = (0..=len).find(|&k| tails[k] <= bound).unwrap_or(len);
    // Never keep exactly-zero directions.
    while k > 0 && sigma[k - 1] == 0.0 {
        k -= 1;
    }
    let capped = k.min(policy.rank_max());
    let met = capped == k || policy.eps_rel() == 0.0;
    (capped, met, (tails[capped] / total).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_lr(rng: &mut ChaCha8Rng, m: usize, n: usize, r: usize) -> LowRankMatrix {
        LowRankMatrix::new(random(rng, m, r), random(rng, n, r)).unwrap()
    }

    fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    /// Dense-SVD eps-rank oracle, independent of the factor path.
    fn dense_eps_rank(m: &DMatrix<f64>, eps: f64) -> usize {
        let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = s.iter().map(|x| x * x).sum();
        (0..=s.len()).find(|&k| s[k..].iter().map(|x| x * x).sum::<f64>() <= eps * eps * total).unwrap()
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(0.0, usize::MAX).is_err());
        assert!(TruncationPolicy::new(0.0, 4).is_ok());
        assert!(TruncationPolicy::new(-1.0, 4).is_err());
        assert!(TruncationPolicy::new(1e-3, 0).is_err());
        assert_eq!(TruncationPolicy::default().eps_rel(), 5e-9);
    }

    #[test]
    fn from_dense_zero_and_outer() {
        let z = DMatrix::zeros(6, 4);
        assert_eq!(LowRankMatrix::from_dense(&z, &TruncationPolicy::relative(1e-3)).matrix.rank(), 0);

        let x = DVector::from_fn(7, |i, _| i as f64 + 1.0);
        let y = DVector::from_fn(5, |i, _| (i as f64).sin() + 2.0);
        let m = &x * y.transpose();
        let t = LowRankMatrix::from_dense(&m, &TruncationPolicy::relative(1e-12));
        assert_eq!(t.matrix.rank(), 1);
        assert!(rel_diff(&t.matrix.to_dense(), &m) < 1e-14);
    }

    #[test]
    fn from_dense_hilbert_matches_dense_eps_rank() {
        let h = DMatrix::from_fn(10, 10, |i, j| 1.0 / (i + j + 1) as f64);
        let expected = dense_eps_rank(&h, 1e-8);
        let t = LowRankMatrix::from_dense(&h, &TruncationPolicy::relative(1e-8));
        assert_eq!(t.matrix.rank(), expected);
        assert!(t.tolerance_met);
        assert!(rel_diff(&t.matrix.to_dense(), &h) <= 1e-8);
    }

    #[test]
    fn from_dense_flags_rank_cap() {
        let h = DMatrix::from_fn(10, 10, |i, j| 1.0 / (i + j + 1) as f64);
        let t = LowRankMatrix::from_dense(&h, &TruncationPolicy::new(1e-12, 3).unwrap());
        assert_eq!(t.matrix.rank(), 3);
        assert!(!t.tolerance_met);
        assert!(t.rel_error > 1e-12);
    }

    #[test]
    fn add_and_cancel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_lr(&mut rng, 9, 7, 3);
        let z = LowRankMatrix::zeros(9, 7);
        assert_eq!(a.add(&z).unwrap(), a);
        let c = a.add(&a.scale(-1.0)).unwrap().round(&TruncationPolicy::relative(1e-13));
        assert_eq!(c.rank(), 0);

        let b1 = random_lr(&mut rng, 9, 7, 1);
        let b2 = random_lr(&mut rng, 9, 7, 1);
        assert_eq!(b1.add(&b2).unwrap().rank(), 2);
        assert!(a.add(&random_lr(&mut rng, 9, 6, 1)).is_err());
    }

    #[test]
    fn add_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_lr(&mut rng, 12, 8, 2);
        let b = random_lr(&mut rng, 12, 8, 3);
        let s = a.lin_comb(2.0, &b, -0.5).unwrap();
        let expect = a.to_dense() * 2.0 - b.to_dense() * 0.5;
        assert!(rel_diff(&s.to_dense(), &expect) < 1e-13);
    }

    #[test]
    fn apply_factors_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_lr(&mut rng, 6, 5, 2);
        let same = a.apply_factors(&DMatrix::identity(6, 6), &DMatrix::identity(5, 5)).unwrap();
        assert!(rel_diff(&same.to_dense(), &a.to_dense()) < 1e-15);

        let ql = random(&mut rng, 6, 6).qr().q();
        let qr = random(&mut rng, 5, 5).qr().q();
        let rot = a.apply_factors(&ql, &qr).unwrap();
        assert!(((rot.frob_norm() - a.frob_norm()) / a.frob_norm()).abs() < 1e-13);

        // G annihilates constants: difference operator applied to ones⊗ones.
        let n = 6;
        let g = DMatrix::from_fn(n - 1, n, |i, j| if j == i + 1 { 1.0 } else if j == i { -1.0 } else { 0.0 });
        let h = DMatrix::from_fn(n - 1, n, |i, j| if j == i + 1 || j == i { 1.0 } else { 0.0 });
        let ones = LowRankMatrix::outer(&DVector::repeat(n, 1.0), &DVector::repeat(n, 1.0));
        let out = ones.apply_factors(&g, &h).unwrap();
        let dense = &g * ones.to_dense() * h.transpose();
        assert_eq!(dense.norm(), 0.0);
        assert_eq!(out.frob_norm(), 0.0);

        assert!(a.apply_factors(&DMatrix::identity(6, 5), &DMatrix::identity(5, 5)).is_err());
    }

    #[test]
    fn hadamard_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_lr(&mut rng, 8, 6, 2);
        let ones = LowRankMatrix::outer(&DVector::repeat(8, 1.0), &DVector::repeat(6, 1.0));
        assert!(rel_diff(&a.hadamard(&ones).unwrap().to_dense(), &a.to_dense()) < 1e-15);

        let r1 = random_lr(&mut rng, 8, 6, 1);
        let r2 = random_lr(&mut rng, 8, 6, 1);
        assert_eq!(r1.hadamard(&r2).unwrap().rank(), 1);

        let b = random_lr(&mut rng, 8, 6, 3);
        let h = a.hadamard(&b).unwrap();
        assert_eq!(h.rank(), 6);
        assert!(rel_diff(&h.to_dense(), &a.to_dense().component_mul(&b.to_dense())) < 1e-13);
        assert!(a.hadamard(&random_lr(&mut rng, 7, 6, 1)).is_err());
    }

    #[test]
    fn round_recovers_exact_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Two dyads spread over five factor columns.
        let x = random(&mut rng, 20, 2);
        let y = random(&mut rng, 15, 2);
        let mix = random(&mut rng, 2, 5);
        let u = &x * &mix;
        let coef = mix.clone().pseudo_inverse(1e-14).unwrap();
        let v = &y * coef.transpose();
        let a = LowRankMatrix::new(u, v).unwrap();
        assert_eq!(a.rank(), 5);
        let r = a.round(&TruncationPolicy::relative(1e-12));
        assert_eq!(r.rank(), 2);
        assert!(rel_diff(&r.to_dense(), &a.to_dense()) < 1e-12);
        assert_eq!(LowRankMatrix::zeros(4, 4).round(&TruncationPolicy::relative(1e-3)).rank(), 0);
    }

    #[test]
    fn round_fixed_rank_is_best_approximation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_lr(&mut rng, 30, 25, 8);
        let dense = a.to_dense();
        let mut s: Vec<f64> = dense.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|x, y| y.total_cmp(x));
        let tail = s[4..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let r = a.round(&TruncationPolicy::fixed_rank(4));
        assert_eq!(r.rank(), 4);
        let err = (r.to_dense() - &dense).norm();
        assert!((err - tail).abs() <= 1e-10 * dense.norm(), "err {err} tail {tail}");
    }

    #[test]
    fn dot_and_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_lr(&mut rng, 11, 9, 3);
        let b = random_lr(&mut rng, 11, 9, 3);
        let d = a.dot(&a).unwrap();
        assert!((d - a.frob_norm().powi(2)).abs() < 1e-12 * d);
        assert_eq!(a.dot(&LowRankMatrix::zeros(11, 9)).unwrap(), 0.0);
        let dense = a.to_dense().dot(&b.to_dense());
        assert!((a.dot(&b).unwrap() - dense).abs() <= 1e-12 * dense.abs().max(1.0));
        assert!(a.dot(&random_lr(&mut rng, 11, 8, 1)).is_err());
    }

    #[test]
    fn round_error_bound_up_to_256() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for &n in &[16usize, 64, 256] {
            // Decaying spectrum so truncation actually discards something.
            let mut u = random(&mut rng, n, 12);
            for k in 0..12 {
                u.column_mut(k).scale_mut(10f64.powi(-(k as i32)));
            }
            let a = LowRankMatrix::new(u, random(&mut rng, n, 12)).unwrap();
            for &eps in &[1e-2, 1e-5, 1e-9] {
                let r = a.round(&TruncationPolicy::relative(eps));
                let dense = a.to_dense();
                assert!((r.to_dense() - &dense).norm() <= eps * dense.norm() * (1.0 + 1e-8));
                assert_eq!(r.rank(), dense_eps_rank(&dense, eps));
            }
        }
    }
}
