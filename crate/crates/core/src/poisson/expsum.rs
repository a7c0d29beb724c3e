//! Exponential sums `1/x ≈ Σ w_k·exp(−p_k·x)` on a positive interval.
//!
//! The integral `1/x = ∫₀^∞ exp(−px) dp` is mapped to the real line with
//! `p = exp(t)` and discretized by the trapezoidal rule with step `τ`:
//! `p_k = exp(kτ)`, `w_k = τ·exp(kτ)`. The step and the retained index window
//! are the smallest ones whose relative error on a dense log-uniform grid
//! stays below the target.

use crate::error::{Error, Result};

/// Largest number of terms [`build_expsum`] will return.
pub const MAX_TERMS: usize = 512;

const CHECK_POINTS: usize = 2000;
/// Required margin on the check grid below the requested `eps`.
const CHECK_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumQuadrature {
    /// `(w_k, p_k)`, both positive.
    terms: Vec<(f64, f64)>,
    a: f64,
    b: f64,
    eps_target: f64,
    step: f64,
    max_rel_error: f64,
}

impl ExpSumQuadrature {
    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn eps_target(&self) -> f64 {
        self.eps_target
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Largest relative error measured on the construction grid.
    pub fn max_rel_error(&self) -> f64 {
        self.max_rel_error
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(w, p)| w * (-p * x).exp()).sum()
    }
}

/// Relative error of every window `[lo, hi)` is checked through prefix sums
/// of the term values at each grid point.
struct Window {
    xs: Vec<f64>,
    prefix: Vec<Vec<f64>>,
}

impl Window {
    fn new(xs: &[f64], terms: &[(f64, f64)]) -> Self {
        let prefix = xs
            .iter()
            .map(|&x| {
                let mut acc = 0.0;
                let mut row = Vec::with_capacity(terms.len() + 1);
                row.push(0.0);
                for &(w, p) in terms {
                    acc += w * (-p * x).exp();
                    row.push(acc);
                }
                row
            })
            .collect();
        Self { xs: xs.to_vec(), prefix }
    }

    fn error(&self, lo: usize, hi: usize) -> f64 {
        self.xs
            .iter()
            .zip(&self.prefix)
            .map(|(&x, row)| ((row[hi] - row[lo]) * x - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds a quadrature with relative error at most `eps` on `[a, b]`.
pub fn build_expsum(a: f64, b: f64, eps: f64) -> Result<ExpSumQuadrature> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidConfig(format!("expsum needs 0 < a < b, got [{a}, {b}]")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidConfig(format!("expsum eps must lie in (0, 1), got {eps}")));
    }
    let (la, lb) = (a.ln(), b.ln());
    let xs: Vec<f64> = (0..CHECK_POINTS)
        .map(|k| (la + (lb - la) * k as f64 / (CHECK_POINTS - 1) as f64).exp())
        .collect();
    let target = CHECK_MARGIN * eps;

    // The integrand is negligible once p·a exceeds ln(1/eps) by a margin
    // (upper end) or p·b drops far below eps (lower end).
    let p_hi = ((1.0 / eps).ln() + 10.0) / a;
    let t_hi = p_hi.ln() + 1.0;
    let t_lo = (1e-3 * eps / b).ln();

    let mut best: Option<ExpSumQuadrature> = None;
    let mut step = 1.5;
    let mut steps_after_first = 0;
    while step > 1e-3 && steps_after_first < 20 {
        let k_lo = (t_lo / step).floor() as i64;
        let k_hi = (t_hi / step).ceil() as i64;
        let terms: Vec<(f64, f64)> = (k_lo..=k_hi)
            .map(|k| {
                let p = (k as f64 * step).exp();
                (step * p, p)
            })
            .filter(|&(w, p)| w > 0.0 && p > 0.0)
            .collect();
        let win = Window::new(&xs, &terms);
        let (mut lo, mut hi) = (0, terms.len());
        if win.error(lo, hi) <= target {
            while hi - lo > 1 && win.error(lo + 1, hi) <= target {
                lo += 1;
            }
            while hi - lo > 1 && win.error(lo, hi - 1) <= target {
                hi -= 1;
            }
            let count = hi - lo;
            if count <= MAX_TERMS && best.as_ref().is_none_or(|q| count < q.len()) {
                best = Some(ExpSumQuadrature {
                    terms: terms[lo..hi].to_vec(),
                    a,
                    b,
                    eps_target: eps,
                    step,
                    max_rel_error: win.error(lo, hi),
                });
            }
        }
        if best.is_some() {
            steps_after_first += 1;
        }
        if terms.len() > 4 * MAX_TERMS {
            break;
        }
        step *= 0.97;
    }
    best.ok_or(Error::QuadratureUnreachable { a, b, eps, cap: MAX_TERMS })
}
