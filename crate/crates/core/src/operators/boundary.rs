//! Dirichlet velocity data on the boundary vertices and its elimination
//! into right-hand-side corrections.
//!
//! The full vertex grid is `(n+1)×(n+1)`. On it the cell operators become
//! `Ĝ, Ĥ: n×(n+1)` with `(Ĝx)_i = x_i − x_{i+1}` and `(Ĥx)_i = x_i + x_{i+1}`;
//! their interior columns are exactly `Gᵀ` and `Hᵀ`. Moving the boundary
//! part of `Δ·u` and `Bᵀ·u` to the right-hand side gives
//! `f_c ← −(Δ_ext·u_b)|interior` and `g ← −Bᵀ_ext·u_b`.

use nalgebra::{DMatrix, DVector};

use super::{diff, pair_sum, Component, Operators};
use crate::error::{Error, Result};
use crate::lowrank::{LowRankMatrix, TruncationPolicy};

/// Side of the unit square. The first grid index is `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `y = 0`
    Bottom,
    /// `y = 1`
    Top,
    /// `x = 0`
    Left,
    /// `x = 1`
    Right,
}

/// Per-side velocity values at the `n − 1` non-corner vertices of each side.
/// Corners always carry the wall value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    n: usize,
    sides: Vec<(Component, Side, DVector<f64>)>,
}

/// Right-hand-side contributions of the boundary values.
#[derive(Debug, Clone)]
pub struct BoundaryCorrections {
    pub f_x: LowRankMatrix,
    pub f_y: LowRankMatrix,
    pub g: LowRankMatrix,
}

impl BoundaryCorrections {
    pub fn f(&self, c: Component) -> &LowRankMatrix {
        match c {
            Component::X => &self.f_x,
            Component::Y => &self.f_y,
        }
    }
}

/// `Ĝ·X`
fn diff_ext(x: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows() - 1, x.ncols(), |i, c| x[(i, c)] - x[(i + 1, c)])
}

/// `Ĥ·X`
fn pair_sum_ext(x: &DMatrix<f64>) -> DMatrix<f64> {
    pair_sum(x)
}

impl BoundaryData {
    /// Homogeneous (no-slip) walls.
    pub fn homogeneous(n: usize) -> Self {
        Self { n, sides: Vec::new() }
    }

    /// Lid-driven cavity: `u_x = speed` on the top side, zero elsewhere.
    pub fn lid_driven(n: usize, speed: f64) -> Self {
        Self::homogeneous(n)
            .with_side(Component::X, Side::Top, DVector::repeat(n - 1, speed))
            .expect("profile length matches")
    }

    pub fn with_side(mut self, component: Component, side: Side, profile: DVector<f64>) -> Result<Self> {
        if profile.len() != self.n - 1 {
            return Err(Error::ShapeMismatch {
                op: "BoundaryData::with_side",
                expected: (self.n - 1, 1),
                got: (profile.len(), 1),
            });
        }
        self.sides.push((component, side, profile));
        Ok(self)
    }

    /// Reads the boundary ring of an `(n+1)×(n+1)` vertex field. Nonzero
    /// interior or corner values cannot be expressed per side.
    pub fn from_node_field(n: usize, component: Component, field: &DMatrix<f64>) -> Result<Self> {
        if field.shape() != (n + 1, n + 1) {
            return Err(Error::ShapeMismatch {
                op: "BoundaryData::from_node_field",
                expected: (n + 1, n + 1),
                got: field.shape(),
            });
        }
        for i in 1..n {
            for j in 1..n {
                if field[(i, j)] != 0.0 {
                    return Err(Error::NonSeparableBoundary(format!("interior vertex ({i}, {j}) is nonzero")));
                }
            }
        }
        for (i, j) in [(0, 0), (0, n), (n, 0), (n, n)] {
            if field[(i, j)] != 0.0 {
                return Err(Error::NonSeparableBoundary(format!("corner ({i}, {j}) is nonzero")));
            }
        }
        let mut bc = Self::homogeneous(n);
        let sides = [
            (Side::Bottom, DVector::from_fn(n - 1, |k, _| field[(k + 1, 0)])),
            (Side::Top, DVector::from_fn(n - 1, |k, _| field[(k + 1, n)])),
            (Side::Left, DVector::from_fn(n - 1, |k, _| field[(0, k + 1)])),
            (Side::Right, DVector::from_fn(n - 1, |k, _| field[(n, k + 1)])),
        ];
        for (side, profile) in sides {
            if profile.iter().any(|&x| x != 0.0) {
                bc = bc.with_side(component, side, profile)?;
            }
        }
        Ok(bc)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_homogeneous(&self) -> bool {
        self.sides.iter().all(|(_, _, p)| p.iter().all(|&x| x == 0.0))
    }

    /// Boundary-only vertex field of one component, rank ≤ 4.
    pub fn node_field(&self, component: Component) -> LowRankMatrix {
        let n = self.n;
        let mut terms = Vec::new();
        for (c, side, profile) in &self.sides {
            if *c != component {
                continue;
            }
            let mut along = DVector::zeros(n + 1);
            along.rows_mut(1, n - 1).copy_from(profile);
            let mut at = DVector::zeros(n + 1);
            let term = match side {
                Side::Bottom => {
                    at[0] = 1.0;
                    LowRankMatrix::outer(&along, &at)
                }
                Side::Top => {
                    at[n] = 1.0;
                    LowRankMatrix::outer(&along, &at)
                }
                Side::Left => {
                    at[0] = 1.0;
                    LowRankMatrix::outer(&at, &along)
                }
                Side::Right => {
                    at[n] = 1.0;
                    LowRankMatrix::outer(&at, &along)
                }
            };
            terms.push(term);
        }
        LowRankMatrix::sum((n + 1, n + 1), terms.iter().map(|t| (1.0, t))).expect("uniform shapes")
    }

    /// Eliminates the boundary values into momentum and divergence corrections.
    pub fn corrections(&self, ops: &Operators) -> Result<BoundaryCorrections> {
        let n = ops.n();
        if self.n != n {
            return Err(Error::ShapeMismatch { op: "BoundaryData::corrections", expected: (n, n), got: (self.n, self.n) });
        }
        let c = ops.gradient_scale();
        let policy = TruncationPolicy::relative(1e-14);
        let ub_x = self.node_field(Component::X);
        let ub_y = self.node_field(Component::Y);

        // g = −(c·Ĝ⊗Ĥ·u_x + c·Ĥ⊗Ĝ·u_y)
        let gx = ub_x.map_factors(|u| diff_ext(u) * (-c), pair_sum_ext);
        let gy = ub_y.map_factors(|u| pair_sum_ext(u) * (-c), diff_ext);
        let g = gx.add(&gy)?.round(&policy);

        // Δ_ext = c²·(GĜ ⊗ HĤ + HĤ ⊗ GĜ), rows restricted to interior vertices.
        let gg = |x: &DMatrix<f64>| diff(&diff_ext(x));
        let hh = |x: &DMatrix<f64>| pair_sum(&pair_sum_ext(x));
        let s = c * c;
        let momentum = |ub: &LowRankMatrix| -> Result<LowRankMatrix> {
            let t1 = ub.map_factors(|u| gg(u) * (-s), hh);
            let t2 = ub.map_factors(|u| hh(u) * (-s), gg);
            Ok(t1.add(&t2)?.round(&policy))
        };
        Ok(BoundaryCorrections { f_x: momentum(&ub_x)?, f_y: momentum(&ub_y)?, g })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Loop-based elimination on explicit vertex arrays.
    fn dense_elimination(n: usize, ux: &DMatrix<f64>, uy: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let c = 0.5 * n as f64;
        // Bᵀ_ext on the full vertex field: cell (i, j) has corners (i..=i+1, j..=j+1).
        let bt = |u: &DMatrix<f64>, comp: Component| {
            DMatrix::from_fn(n, n, |i, j| {
                let (a, b, d, e) = (u[(i, j)], u[(i, j + 1)], u[(i + 1, j)], u[(i + 1, j + 1)]);
                match comp {
                    Component::X => c * ((a + b) - (d + e)),
                    Component::Y => c * ((a + d) - (b + e)),
                }
            })
        };
        // B on cells: interior vertex (k+1, l+1) touches cells k..=k+1, l..=l+1.
        let b = |q: &DMatrix<f64>, comp: Component| {
            DMatrix::from_fn(n - 1, n - 1, |k, l| {
                let (a, bb, d, e) = (q[(k, l)], q[(k, l + 1)], q[(k + 1, l)], q[(k + 1, l + 1)]);
                match comp {
                    Component::X => c * ((d + e) - (a + bb)),
                    Component::Y => c * ((bb + e) - (a + d)),
                }
            })
        };
        let lap = |u: &DMatrix<f64>| {
            -(b(&bt(u, Component::X), Component::X) + b(&bt(u, Component::Y), Component::Y))
        };
        let g = -(bt(ux, Component::X) + bt(uy, Component::Y));
        (lap(ux), lap(uy), g)
    }

    #[test]
    fn zero_bc_gives_zero_corrections() {
        let ops = Operators::with_n(8).unwrap();
        let corr = BoundaryData::homogeneous(8).corrections(&ops).unwrap();
        assert_eq!(corr.f_x.rank(), 0);
        assert_eq!(corr.f_y.rank(), 0);
        assert_eq!(corr.g.rank(), 0);
    }

    #[test]
    fn lid_matches_loop_elimination() {
        let n = 8;
        let ops = Operators::with_n(n).unwrap();
        let bc = BoundaryData::lid_driven(n, 1.0);
        let corr = bc.corrections(&ops).unwrap();
        let mut ux = DMatrix::zeros(n + 1, n + 1);
        for i in 1..n {
            ux[(i, n)] = 1.0;
        }
        let (fx, fy, g) = dense_elimination(n, &ux, &DMatrix::zeros(n + 1, n + 1));
        assert!((corr.f_x.to_dense() - &fx).norm() <= 1e-13 * fx.norm());
        assert_eq!(fy.norm(), 0.0);
        assert_eq!(corr.f_y.rank(), 0);
        assert!((corr.g.to_dense() - &g).norm() <= 1e-13 * g.norm());
        assert_eq!(corr.g.rank(), 1);

        // Divergence correction lives in the top cell row only.
        let gd = corr.g.to_dense();
        for i in 0..n {
            for j in 0..n - 1 {
                assert!(gd[(i, j)].abs() < 1e-13);
            }
        }
        assert!(gd.column(n - 1).amax() > 0.0);
    }

    #[test]
    fn general_sides_match_loop_elimination() {
        let n = 10;
        let ops = Operators::with_n(n).unwrap();
        let mut ux = DMatrix::zeros(n + 1, n + 1);
        let mut uy = DMatrix::zeros(n + 1, n + 1);
        for k in 1..n {
            ux[(0, k)] = (k as f64).sin();
            ux[(k, 0)] = 0.3 * k as f64;
            uy[(n, k)] = (k as f64 * 0.7).cos();
        }
        let bc_x = BoundaryData::from_node_field(n, Component::X, &ux).unwrap();
        let mut bc = bc_x;
        for (comp, side, p) in BoundaryData::from_node_field(n, Component::Y, &uy).unwrap().sides {
            bc = bc.with_side(comp, side, p).unwrap();
        }
        assert_eq!((bc.node_field(Component::X).to_dense() - &ux).amax(), 0.0);
        let corr = bc.corrections(&ops).unwrap();
        let (fx, fy, g) = dense_elimination(n, &ux, &uy);
        assert!((corr.f_x.to_dense() - &fx).norm() <= 1e-13 * fx.norm());
        assert!((corr.f_y.to_dense() - &fy).norm() <= 1e-13 * fy.norm());
        assert!((corr.g.to_dense() - &g).norm() <= 1e-13 * g.norm());
    }

    #[test]
    fn non_separable_fields_rejected() {
        let n = 6;
        let mut f = DMatrix::zeros(n + 1, n + 1);
        f[(2, 3)] = 1.0;
        assert!(matches!(
            BoundaryData::from_node_field(n, Component::X, &f),
            Err(Error::NonSeparableBoundary(_))
        ));
        let mut f = DMatrix::zeros(n + 1, n + 1);
        f[(0, n)] = 1.0;
        assert!(BoundaryData::from_node_field(n, Component::X, &f).is_err());
        assert!(BoundaryData::homogeneous(n).with_side(Component::X, Side::Top, DVector::zeros(3)).is_err());
    }
}
