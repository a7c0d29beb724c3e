//! Semi-staggered discretization on the unit square.
//!
//! Pressure lives at the `n×n` cell centers, each velocity component at the
//! `(n−1)×(n−1)` interior vertices. With the one-dimensional selections
//! `E` (drop first entry) and `Z` (drop last entry), `G = E − Z` and
//! `H = E + Z`, the discrete gradient and Laplacian are
//!
//! ```text
//! B_x = c·G⊗H,  B_y = c·H⊗G,  c = 1/(2h)
//! Δ   = B_x B_xᵀ + B_y B_yᵀ = c²·(A1⊗A2 + A2⊗A1),  A1 = GGᵀ, A2 = HHᵀ
//! ```
//!
//! A Kronecker product `C⊗D` acts on a grid field in index form:
//! `Y(i₁,i₂) = Σ C(i₁,j₁)·D(i₂,j₂)·X(j₁,j₂)`, the first grid index being
//! `x`. On a low-rank field `U·Vᵀ` that is `(C·U)·(D·V)ᵀ`.

mod boundary;
mod dst;

pub use boundary::{BoundaryCorrections, BoundaryData, Side};
pub use dst::Dst1;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lowrank::LowRankMatrix;

/// Largest `n` accepted by [`assemble_dense`]; the Laplacian has `(n−1)⁴` entries.
pub const DENSE_ASSEMBLY_MAX_N: usize = 64;

/// Uniform grid with `n` cells per direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid2D {
    n: usize,
}

impl Grid2D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::GridTooSmall { n });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn pressure_shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    pub fn velocity_shape(&self) -> (usize, usize) {
        (self.n - 1, self.n - 1)
    }

    /// Cell-center coordinates `(i + 1/2)·h`, `i = 0..n`.
    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| (i as f64 + 0.5) * self.h()).collect()
    }

    /// Interior vertex coordinates `i·h`, `i = 1..n`.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.n).map(|i| i as f64 * self.h()).collect()
    }
}

/// Velocity component / direction of a gradient block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    X,
    Y,
}

impl Component {
    pub const ALL: [Component; 2] = [Component::X, Component::Y];
}

/// Dense one-dimensional building blocks, `(n−1)×n` for `E, Z, G, H`.
#[derive(Debug, Clone)]
pub struct OneDimOps {
    pub e: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
}

impl OneDimOps {
    pub fn new(n: usize) -> Self {
        let e = DMatrix::from_fn(n - 1, n, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        let z = DMatrix::from_fn(n - 1, n, |i, j| if j == i { 1.0 } else { 0.0 });
        let g = &e - &z;
        let h = &e + &z;
        let a1 = &g * g.transpose();
        let a2 = &h * h.transpose();
        Self { e, z, g, h, a1, a2 }
    }
}

// Matrix-free stencils on the columns of a factor.

/// `G·X`: `(n−1)` rows from `n`.
fn diff(x: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows() - 1, x.ncols(), |i, c| x[(i + 1, c)] - x[(i, c)])
}

/// `H·X`
fn pair_sum(x: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows() - 1, x.ncols(), |i, c| x[(i + 1, c)] + x[(i, c)])
}

/// `Gᵀ·Y`: `n` rows from `n − 1`.
fn diff_t(y: &DMatrix<f64>) -> DMatrix<f64> {
    let m = y.nrows();
    DMatrix::from_fn(m + 1, y.ncols(), |i, c| {
        let prev = if i > 0 { y[(i - 1, c)] } else { 0.0 };
        let cur = if i < m { y[(i, c)] } else { 0.0 };
        prev - cur
    })
}

/// `Hᵀ·Y`
fn pair_sum_t(y: &DMatrix<f64>) -> DMatrix<f64> {
    let m = y.nrows();
    DMatrix::from_fn(m + 1, y.ncols(), |i, c| {
        let prev = if i > 0 { y[(i - 1, c)] } else { 0.0 };
        let cur = if i < m { y[(i, c)] } else { 0.0 };
        prev + cur
    })
}

/// `A1·X = tridiag(−1, 2, −1)·X`
fn stencil_a1(x: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.nrows();
    DMatrix::from_fn(m, x.ncols(), |i, c| {
        let lo = if i > 0 { x[(i - 1, c)] } else { 0.0 };
        let hi = if i + 1 < m { x[(i + 1, c)] } else { 0.0 };
        2.0 * x[(i, c)] - lo - hi
    })
}

/// `A2·X = tridiag(1, 2, 1)·X = 4X − A1·X`
fn stencil_a2(x: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.nrows();
    DMatrix::from_fn(m, x.ncols(), |i, c| {
        let lo = if i > 0 { x[(i - 1, c)] } else { 0.0 };
        let hi = if i + 1 < m { x[(i + 1, c)] } else { 0.0 };
        2.0 * x[(i, c)] + lo + hi
    })
}

/// Eigenvalues of `A1` and the elementwise eigenvalues of `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    lambda: Vec<f64>,
    scale: f64,
}

impl SpectrumTable {
    pub fn new(grid: &Grid2D) -> Self {
        let n = grid.n();
        let lambda = (1..n)
            .map(|k| {
                let s = (k as f64 * std::f64::consts::PI / (2 * n) as f64).sin();
                4.0 * s * s
            })
            .collect();
        let c = gradient_scale(grid);
        Self { lambda, scale: c * c }
    }

    /// `λ_k = 2 − 2cos(kπ/n) = 4 sin²(kπ/2n)`, `k = 1..n−1` (0-based slice).
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Eigenvalue of `Δ` for the sine mode `(i+1, j+1)`.
    #[inline]
    pub fn eval_d(&self, i: usize, j: usize) -> f64 {
        let (li, lj) = (self.lambda[i], self.lambda[j]);
        self.scale * (li * (4.0 - lj) + (4.0 - li) * lj)
    }

    /// Scaled one-dimensional `μ_i = c²·λ_i(4 − λ_i)`, the separable
    /// spectrum used by the exponential-sum baseline.
    pub fn mu(&self) -> Vec<f64> {
        self.lambda.iter().map(|&l| self.scale * l * (4.0 - l)).collect()
    }

    /// `D ∘ X`: since `D = c²(λ(4−λ)ᵀ + (4−λ)λᵀ)` has elementwise rank 2,
    /// the rank doubles.
    pub fn multiply(&self, x: &LowRankMatrix) -> LowRankMatrix {
        fn rows(u: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
            let mut u = u.clone();
            for mut col in u.column_iter_mut() {
                col.component_mul_assign(d);
            }
            u
        }
        let lam = DVector::from_column_slice(&self.lambda);
        let rest = lam.map(|l| 4.0 - l);
        let a = x.map_factors(|u| rows(u, &(&lam * self.scale)), |v| rows(v, &rest));
        let b = x.map_factors(|u| rows(u, &(&rest * self.scale)), |v| rows(v, &lam));
        a.add(&b).expect("same shape")
    }

    /// Smallest and largest eigenvalue of `Δ`.
    pub fn bounds(&self) -> (f64, f64) {
        let m = self.lambda.len();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..m {
            for j in [0, m - 1, i] {
                let d = self.eval_d(i, j);
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        (lo, hi)
    }
}

/// `c = 1/(2h)` in `B_x = c·G⊗H`.
pub fn gradient_scale(grid: &Grid2D) -> f64 {
    0.5 / grid.h()
}

/// The structured Stokes operators on one grid.
#[derive(Debug, Clone)]
pub struct Operators {
    grid: Grid2D,
    spectrum: SpectrumTable,
    dst: Dst1,
    c: f64,
}

impl Operators {
    pub fn new(grid: Grid2D) -> Self {
        Self {
            spectrum: SpectrumTable::new(&grid),
            dst: Dst1::new(grid.n()),
            c: gradient_scale(&grid),
            grid,
        }
    }

    pub fn with_n(n: usize) -> Result<Self> {
        Ok(Self::new(Grid2D::new(n)?))
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn spectrum(&self) -> &SpectrumTable {
        &self.spectrum
    }

    pub fn dst(&self) -> &Dst1 {
        &self.dst
    }

    pub fn gradient_scale(&self) -> f64 {
        self.c
    }

    fn check(&self, op: &'static str, expected: (usize, usize), a: &LowRankMatrix) -> Result<()> {
        if a.shape() != expected {
            return Err(Error::ShapeMismatch { op, expected, got: a.shape() });
        }
        Ok(())
    }

    /// `B_c·P`: pressure `n×n` to velocity `(n−1)×(n−1)`.
    pub fn apply_b(&self, component: Component, p: &LowRankMatrix) -> Result<LowRankMatrix> {
        self.check("apply_b", self.grid.pressure_shape(), p)?;
        let c = self.c;
        Ok(match component {
            Component::X => p.map_factors(|u| diff(u) * c, pair_sum),
            Component::Y => p.map_factors(|u| pair_sum(u) * c, diff),
        })
    }

    /// `B_cᵀ·V`: velocity to pressure.
    pub fn apply_bt(&self, component: Component, v: &LowRankMatrix) -> Result<LowRankMatrix> {
        self.check("apply_bt", self.grid.velocity_shape(), v)?;
        let c = self.c;
        Ok(match component {
            Component::X => v.map_factors(|u| diff_t(u) * c, pair_sum_t),
            Component::Y => v.map_factors(|u| pair_sum_t(u) * c, diff_t),
        })
    }

    /// `Δ·V`, exact; the rank doubles.
    pub fn apply_laplace(&self, v: &LowRankMatrix) -> Result<LowRankMatrix> {
        self.check("apply_laplace", self.grid.velocity_shape(), v)?;
        let s = self.c * self.c;
        let t1 = v.map_factors(|u| stencil_a1(u) * s, stencil_a2);
        let t2 = v.map_factors(|u| stencil_a2(u) * s, stencil_a1);
        t1.add(&t2)
    }

    /// `S·V·S` with the orthonormal DST-I `S` on both modes.
    pub fn dst2(&self, v: &LowRankMatrix) -> Result<LowRankMatrix> {
        self.check("dst2", self.grid.velocity_shape(), v)?;
        Ok(v.map_factors(|u| self.dst.apply_columns(u), |w| self.dst.apply_columns(w)))
    }

    /// Dense-field counterparts, used by the full-format reference path.
    pub fn apply_b_dense(&self, component: Component, p: &DMatrix<f64>) -> DMatrix<f64> {
        let c = self.c;
        match component {
            Component::X => dense_kron_apply(p, diff, pair_sum) * c,
            Component::Y => dense_kron_apply(p, pair_sum, diff) * c,
        }
    }

    pub fn apply_bt_dense(&self, component: Component, v: &DMatrix<f64>) -> DMatrix<f64> {
        let c = self.c;
        match component {
            Component::X => dense_kron_apply(v, diff_t, pair_sum_t) * c,
            Component::Y => dense_kron_apply(v, pair_sum_t, diff_t) * c,
        }
    }

    pub fn apply_laplace_dense(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let s = self.c * self.c;
        (dense_kron_apply(v, stencil_a1, stencil_a2) + dense_kron_apply(v, stencil_a2, stencil_a1)) * s
    }

    /// `S·V·S` on a dense field.
    pub fn dst2_dense(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let t = self.dst.apply_columns(v);
        self.dst.apply_columns(&t.transpose()).transpose()
    }
}

/// `(C⊗D)·X = C·X·Dᵀ` with `C`, `D` given as column maps.
fn dense_kron_apply(
    x: &DMatrix<f64>,
    left: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
    right: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
) -> DMatrix<f64> {
    let cx = left(x);
    right(&cx.transpose()).transpose()
}

/// Explicit dense matrices acting on row-major vectorized fields
/// (`vec(X)[i₁·n₂ + i₂] = X(i₁, i₂)`), so `C⊗D` is the ordinary Kronecker product.
#[derive(Debug, Clone)]
pub struct DenseAssembly {
    pub one_dim: OneDimOps,
    pub b_x: DMatrix<f64>,
    pub b_y: DMatrix<f64>,
    pub laplace: DMatrix<f64>,
}

/// Builds `B_x`, `B_y` and `Δ` densely from the explicit `E`, `Z` products.
pub fn assemble_dense(n: usize) -> Result<DenseAssembly> {
    let grid = Grid2D::new(n)?;
    if n > DENSE_ASSEMBLY_MAX_N {
        return Err(Error::TooLargeForDense { n, max: DENSE_ASSEMBLY_MAX_N });
    }
    let one_dim = OneDimOps::new(n);
    let c = gradient_scale(&grid);
    let b_x = one_dim.g.kronecker(&one_dim.h) * c;
    let b_y = one_dim.h.kronecker(&one_dim.g) * c;
    let laplace = &b_x * b_x.transpose() + &b_y * b_y.transpose();
    Ok(DenseAssembly { one_dim, b_x, b_y, laplace })
}

/// Row-major vectorization matching [`DenseAssembly`].
pub fn vec_field(x: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    let (m, n) = x.shape();
    nalgebra::DVector::from_fn(m * n, |k, _| x[(k / n, k % n)])
}

/// Inverse of [`vec_field`].
pub fn unvec_field(v: &nalgebra::DVector<f64>, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |i, j| v[i * n + j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_lr(rng: &mut ChaCha8Rng, m: usize, n: usize, r: usize) -> LowRankMatrix {
        LowRankMatrix::new(
            DMatrix::from_fn(m, r, |_, _| rng.gen_range(-1.0..1.0)),
            DMatrix::from_fn(n, r, |_, _| rng.gen_range(-1.0..1.0)),
        )
        .unwrap()
    }

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn grid_guard_and_geometry() {
        assert!(Grid2D::new(3).is_err());
        let g = Grid2D::new(8).unwrap();
        assert_eq!(g.h() * 8.0, 1.0);
        assert_eq!(g.cell_centers()[0], 0.0625);
        assert_eq!(g.interior_nodes().len(), 7);
    }

    #[test]
    fn one_dim_identities() {
        let ops = OneDimOps::new(9);
        let four = DMatrix::<f64>::identity(8, 8) * 4.0;
        assert_eq!(&ops.a1 + &ops.a2, four);
        for i in 0..8usize {
            for j in 0..8 {
                let expect = match i.abs_diff(j) {
                    0 => 2.0,
                    1 => -1.0,
                    _ => 0.0,
                };
                assert_eq!(ops.a1[(i, j)], expect);
            }
        }
    }

    #[test]
    fn lambda_matches_dense_eigenvalues() {
        for &n in &[8usize, 16, 32] {
            let table = SpectrumTable::new(&Grid2D::new(n).unwrap());
            let mut ev: Vec<f64> = OneDimOps::new(n).a1.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            for (a, b) in ev.iter().zip(table.lambda()) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!(table.lambda().windows(2).all(|w| w[0] < w[1]));
            assert!(table.lambda()[0] > 0.0 && *table.lambda().last().unwrap() < 4.0);
            let m = n - 1;
            for i in 0..m {
                for j in 0..m {
                    assert!(table.eval_d(i, j) > 0.0);
                    assert_eq!(table.eval_d(i, j), table.eval_d(j, i));
                }
            }
        }
    }

    #[test]
    fn apply_b_kernel_vectors() {
        let n = 8;
        let ops = Operators::with_n(n).unwrap();
        let ones = LowRankMatrix::outer(&DVector::repeat(n, 1.0), &DVector::repeat(n, 1.0));
        let alt_v = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
        let alt = LowRankMatrix::outer(&alt_v, &alt_v);
        for c in Component::ALL {
            assert_eq!(ops.apply_b(c, &ones).unwrap().to_dense().amax(), 0.0);
            assert_eq!(ops.apply_b(c, &alt).unwrap().to_dense().amax(), 0.0);
        }
    }

    #[test]
    fn structured_matches_dense_assembly() {
        let n = 8;
        let ops = Operators::with_n(n).unwrap();
        let dense = assemble_dense(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_lr(&mut rng, n, n, 2);
        let v = random_lr(&mut rng, n - 1, n - 1, 3);
        for (c, b) in [(Component::X, &dense.b_x), (Component::Y, &dense.b_y)] {
            let got = ops.apply_b(c, &p).unwrap().to_dense();
            let expect = unvec_field(&(b * vec_field(&p.to_dense())), n - 1, n - 1);
            assert!(rel(&got, &expect) < 1e-13);
            assert!(rel(&ops.apply_b_dense(c, &p.to_dense()), &expect) < 1e-13);

            let got_t = ops.apply_bt(c, &v).unwrap().to_dense();
            let expect_t = unvec_field(&(b.transpose() * vec_field(&v.to_dense())), n, n);
            assert!(rel(&got_t, &expect_t) < 1e-13);
            assert!(rel(&ops.apply_bt_dense(c, &v.to_dense()), &expect_t) < 1e-13);
        }
        let lap = ops.apply_laplace(&v).unwrap();
        assert!(lap.rank() <= 6);
        let expect = unvec_field(&(&dense.laplace * vec_field(&v.to_dense())), n - 1, n - 1);
        assert!(rel(&lap.to_dense(), &expect) < 1e-13);
        assert!(rel(&ops.apply_laplace_dense(&v.to_dense()), &expect) < 1e-13);
    }

    #[test]
    fn adjointness() {
        let n = 12;
        let ops = Operators::with_n(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..5 {
            let p = random_lr(&mut rng, n, n, 2);
            let v = random_lr(&mut rng, n - 1, n - 1, 2);
            for c in Component::ALL {
                let lhs = ops.apply_b(c, &p).unwrap().dot(&v).unwrap();
                let rhs = p.dot(&ops.apply_bt(c, &v).unwrap()).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }
        }
        let zero = LowRankMatrix::zeros(n - 1, n - 1);
        assert_eq!(ops.apply_bt(Component::X, &zero).unwrap().rank(), 0);
        assert!(ops.apply_b(Component::X, &zero).is_err());
    }

    #[test]
    fn sine_mode_is_laplace_eigenvector() {
        let n = 16;
        let ops = Operators::with_n(n).unwrap();
        let dense = assemble_dense(n).unwrap();
        for &(k, l) in &[(1usize, 1usize), (3, 7), (15, 2)] {
            let sk = DVector::from_fn(n - 1, |i, _| ((i + 1) as f64 * k as f64 * std::f64::consts::PI / n as f64).sin());
            let sl = DVector::from_fn(n - 1, |i, _| ((i + 1) as f64 * l as f64 * std::f64::consts::PI / n as f64).sin());
            let v = LowRankMatrix::outer(&sk, &sl);
            let d = ops.spectrum().eval_d(k - 1, l - 1);
            let out = ops.apply_laplace(&v).unwrap().to_dense();
            assert!(rel(&out, &(v.to_dense() * d)) < 1e-12);
            let dense_out = unvec_field(&(&dense.laplace * vec_field(&v.to_dense())), n - 1, n - 1);
            assert!(rel(&dense_out, &(v.to_dense() * d)) < 1e-12);
        }
        assert_eq!(ops.apply_laplace(&LowRankMatrix::zeros(n - 1, n - 1)).unwrap().rank(), 0);
    }

    #[test]
    fn dense_laplace_spectrum_and_dst_diagonalization() {
        let n = 8;
        let ops = Operators::with_n(n).unwrap();
        let dense = assemble_dense(n).unwrap();
        let lap = &dense.laplace;
        assert!((lap - lap.transpose()).amax() == 0.0);
        let mut ev: Vec<f64> = lap.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0] > 0.0);
        let mut expect: Vec<f64> =
            (0..n - 1).flat_map(|i| (0..n - 1).map(move |j| (i, j))).map(|(i, j)| ops.spectrum().eval_d(i, j)).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
        }

        let s = ops.dst().matrix();
        let ss = s.kronecker(&s);
        let diag = &ss * lap * &ss;
        let m = n - 1;
        let scale = diag.amax();
        for a in 0..m * m {
            for b in 0..m * m {
                if a == b {
                    let d = ops.spectrum().eval_d(a / m, a % m);
                    assert!((diag[(a, b)] - d).abs() <= 1e-11 * scale);
                } else {
                    assert!(diag[(a, b)].abs() <= 1e-11 * scale);
                }
            }
        }
    }

    #[test]
    fn dense_kernel_of_b_is_two_dimensional() {
        let n = 8;
        let dense = assemble_dense(n).unwrap();
        let mut b = DMatrix::zeros(2 * (n - 1) * (n - 1), n * n);
        b.rows_mut(0, (n - 1) * (n - 1)).copy_from(&dense.b_x);
        b.rows_mut((n - 1) * (n - 1), (n - 1) * (n - 1)).copy_from(&dense.b_y);
        let sv = b.svd(false, false).singular_values;
        let smax = sv.max();
        assert_eq!(sv.iter().filter(|&&s| s <= 1e-10 * smax).count(), 2);
    }

    #[test]
    fn assemble_dense_guard() {
        assert!(matches!(assemble_dense(65), Err(Error::TooLargeForDense { .. })));
        let d = assemble_dense(4).unwrap();
        assert_eq!(d.b_x.shape(), (9, 16));
    }
}
