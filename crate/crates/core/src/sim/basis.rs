//! Orthonormal function bases evaluated on a grid.
//!
//! All families are defined on the standardized domain [0, 1] and rescaled
//! so they stay L2-orthonormal on the actual grid span. B-splines are not
//! orthogonal by nature and go through a Gram-Schmidt pass under trapezoid
//! quadrature; the analytic families are orthonormal up to quadrature error
//! and can be tightened with [`Basis::orthonormalize`].

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::data::Grid1D;
use crate::error::{FdError, Result};
use crate::numeric::trapezoid_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisName {
    Legendre,
    Wiener,
    Fourier,
    Bsplines,
}

impl BasisName {
    pub fn parse(name: &str) -> Result<BasisName> {
        match name {
            "legendre" => Ok(BasisName::Legendre),
            "wiener" => Ok(BasisName::Wiener),
            "fourier" => Ok(BasisName::Fourier),
            "bsplines" => Ok(BasisName::Bsplines),
            other => Err(FdError::InvalidParameter(format!("unknown basis '{other}'"))),
        }
    }
}

/// A set of `J` basis functions evaluated on a common grid, stored as a
/// `(J, M)` matrix of function values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Basis {
    pub name: BasisName,
    pub grid: Grid1D,
    /// Row j holds the values of the j-th basis function.
    pub matrix: Array2<f64>,
}

impl Basis {
    pub fn n_functions(&self) -> usize {
        self.matrix.nrows()
    }

    /// Quadrature Gram matrix of the rows.
    pub fn gram(&self) -> Array2<f64> {
        let w = trapezoid_weights(self.grid.points());
        let j = self.n_functions();
        let mut g = Array2::zeros((j, j));
        for a in 0..j {
            for b in a..j {
                let v: f64 = (0..self.grid.len())
                    .map(|m| w[m] * self.matrix[(a, m)] * self.matrix[(b, m)])
                    .sum();
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        g
    }

    /// Re-orthonormalize the rows under trapezoid quadrature (two passes of
    /// modified Gram-Schmidt), bringing the Gram matrix within 1e-6 of the
    /// identity.
    pub fn orthonormalize(&mut self) -> Result<()> {
        let w = trapezoid_weights(self.grid.points());
        gram_schmidt(&mut self.matrix, &w)
    }
}

fn gram_schmidt(matrix: &mut Array2<f64>, w: &[f64]) -> Result<()> {
    let (j, m) = matrix.dim();
    for _pass in 0..2 {
        for a in 0..j {
            for b in 0..a {
                let dot: f64 = (0..m).map(|k| w[k] * matrix[(a, k)] * matrix[(b, k)]).sum();
                for k in 0..m {
                    let sub = dot * matrix[(b, k)];
                    matrix[(a, k)] -= sub;
                }
            }
            let norm2: f64 = (0..m).map(|k| w[k] * matrix[(a, k)] * matrix[(a, k)]).sum();
            if norm2 <= 1e-24 {
                return Err(FdError::Numerical(format!(
                    "function {a} is linearly dependent on its predecessors at grid resolution"
                )));
            }
            let inv = 1.0 / norm2.sqrt();
            for k in 0..m {
                matrix[(a, k)] *= inv;
            }
        }
    }
    Ok(())
}

/// Build a named basis with `n_functions` functions on `grid`.
pub fn make_basis(name: BasisName, n_functions: usize, grid: &Grid1D) -> Result<Basis> {
    if n_functions == 0 {
        return Err(FdError::InvalidParameter("need at least one function".into()));
    }
    if n_functions > grid.len() {
        return Err(FdError::InvalidParameter(format!(
            "cannot represent {} functions on a {}-point grid",
            n_functions,
            grid.len()
        )));
    }
    let std = grid.standardized();
    let t = std.points();
    let m = t.len();
    // scale keeps L2 norms equal to one on the actual span
    let span = grid.max() - grid.min();
    let scale = if span > 0.0 { 1.0 / span.sqrt() } else { 1.0 };

    let mut matrix = Array2::zeros((n_functions, m));
    match name {
        BasisName::Wiener => {
            for j in 0..n_functions {
                let freq = (j as f64 + 0.5) * std::f64::consts::PI;
                for (k, &tk) in t.iter().enumerate() {
                    matrix[(j, k)] = scale * std::f64::consts::SQRT_2 * (freq * tk).sin();
                }
            }
        }
        BasisName::Fourier => {
            for k in 0..m {
                matrix[(0, k)] = scale;
            }
            for j in 1..n_functions {
                let pair = (j + 1) / 2;
                let angle = 2.0 * std::f64::consts::PI * pair as f64;
                for (k, &tk) in t.iter().enumerate() {
                    let v = if j % 2 == 1 {
                        (angle * tk).sin()
                    } else {
                        (angle * tk).cos()
                    };
                    matrix[(j, k)] = scale * std::f64::consts::SQRT_2 * v;
                }
            }
        }
        BasisName::Legendre => {
            // orthonormal shifted Legendre: sqrt(2j+1) P_j(2t - 1)
            for (k, &tk) in t.iter().enumerate() {
                let x = 2.0 * tk - 1.0;
                let mut p_prev = 1.0;
                let mut p = x;
                matrix[(0, k)] = scale * p_prev;
                if n_functions > 1 {
                    matrix[(1, k)] = scale * 3f64.sqrt() * p;
                }
                for j in 2..n_functions {
                    let n = (j - 1) as f64;
                    let p_next = ((2.0 * n + 1.0) * x * p - n * p_prev) / (n + 1.0);
                    p_prev = p;
                    p = p_next;
                    matrix[(j, k)] = scale * ((2 * j + 1) as f64).sqrt() * p;
                }
            }
            // high orders drift past quadrature orthonormality at desk grids
            let w = trapezoid_weights(grid.points());
            gram_schmidt(&mut matrix, &w)?;
        }
        BasisName::Bsplines => {
            let order = n_functions.min(4);
            let n_interior = n_functions - order;
            let mut knots = vec![0.0; order];
            for i in 1..=n_interior {
                knots.push(i as f64 / (n_interior + 1) as f64);
            }
            knots.extend(std::iter::repeat_n(1.0, order));
            for j in 0..n_functions {
                for (k, &tk) in t.iter().enumerate() {
                    matrix[(j, k)] = bspline_value(&knots, order, j, tk);
                }
            }
            let w = trapezoid_weights(grid.points());
            gram_schmidt(&mut matrix, &w).map_err(|_| {
                FdError::InvalidParameter(format!(
                    "{n_functions} B-spline functions exceed the rank of the knot layout"
                ))
            })?;
        }
    }
    Ok(Basis {
        name,
        grid: grid.clone(),
        matrix,
    })
}

/// Cox-de Boor evaluation of the `i`-th B-spline of the given order
/// (order = degree + 1) on a clamped knot vector.
fn bspline_value(knots: &[f64], order: usize, i: usize, t: f64) -> f64 {
    // close the last interval so the final spline reaches t = 1
    let last = *knots.last().unwrap();
    if order == 1 {
        let hit = (knots[i] <= t && t < knots[i + 1])
            || (t == last && knots[i] < knots[i + 1] && knots[i + 1] == last);
        return if hit { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[i + order - 1] - knots[i];
    if d1 > 0.0 {
        v += (t - knots[i]) / d1 * bspline_value(knots, order - 1, i, t);
    }
    let d2 = knots[i + order] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + order] - t) / d2 * bspline_value(knots, order - 1, i + 1, t);
    }
    v
}

/// Tensor product of two 1-D bases: functions phi_ij(s, t) = phi_i(s) psi_j(t)
/// ordered row-major (i slow, j fast).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorBasis2D {
    pub x: Basis,
    pub y: Basis,
}

/// Combine two 1-D bases into their tensor product.
pub fn tensor_basis_2d(x: Basis, y: Basis) -> TensorBasis2D {
    TensorBasis2D { x, y }
}

impl TensorBasis2D {
    pub fn n_functions(&self) -> usize {
        self.x.n_functions() * self.y.n_functions()
    }

    /// Surface values of function `k` as an `(Mx, My)` matrix.
    pub fn surface(&self, k: usize) -> Array2<f64> {
        let jy = self.y.n_functions();
        let (i, j) = (k / jy, k % jy);
        let mx = self.x.grid.len();
        let my = self.y.grid.len();
        Array2::from_shape_fn((mx, my), |(a, b)| self.x.matrix[(i, a)] * self.y.matrix[(j, b)])
    }

    /// All surfaces stacked as a `(J, Mx, My)` tensor.
    pub fn surfaces(&self) -> Array3<f64> {
        let j = self.n_functions();
        let mx = self.x.grid.len();
        let my = self.y.grid.len();
        let mut out = Array3::zeros((j, mx, my));
        for k in 0..j {
            out.index_axis_mut(ndarray::Axis(0), k).assign(&self.surface(k));
        }
        out
    }

    /// Quadrature Gram matrix under the 2-D trapezoid product rule.
    pub fn gram(&self) -> Array2<f64> {
        let gx = self.x.gram();
        let gy = self.y.gram();
        let (jx, jy) = (self.x.n_functions(), self.y.n_functions());
        let j = jx * jy;
        Array2::from_shape_fn((j, j), |(a, b)| {
            let (ia, ja) = (a / jy, a % jy);
            let (ib, jb) = (b / jy, b % jy);
            gx[(ia, ib)] * gy[(ja, jb)]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;
    use approx::assert_abs_diff_eq;

    fn unit_grid(m: usize) -> Grid1D {
        Grid1D::new(linspace(0.0, 1.0, m)).unwrap()
    }

    fn assert_gram_near_identity(g: &Array2<f64>, tol: f64) {
        for a in 0..g.nrows() {
            for b in 0..g.ncols() {
                let target = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (g[(a, b)] - target).abs() <= tol,
                    "gram[{a},{b}] = {} (tol {tol})",
                    g[(a, b)]
                );
            }
        }
    }

    #[test]
    fn wiener_matches_analytic_eigenfunctions() {
        let grid = unit_grid(101);
        let basis = make_basis(BasisName::Wiener, 5, &grid).unwrap();
        for j in 0..5 {
            for (k, &t) in grid.points().iter().enumerate() {
                let expected = std::f64::consts::SQRT_2
                    * ((j as f64 + 0.5) * std::f64::consts::PI * t).sin();
                assert_abs_diff_eq!(basis.matrix[(j, k)], expected, epsilon = 1e-12);
            }
        }
        assert_gram_near_identity(&basis.gram(), 1e-2);
    }

    #[test]
    fn fourier_constant_sin_cos() {
        let grid = unit_grid(101);
        let basis = make_basis(BasisName::Fourier, 3, &grid).unwrap();
        // constant term
        assert_abs_diff_eq!(basis.matrix[(0, 17)], 1.0, epsilon = 1e-12);
        // quadrature oracle for orthonormality
        assert_gram_near_identity(&basis.gram(), 1e-2);
    }

    #[test]
    fn every_family_orthonormal_at_grid_resolution() {
        let grid = unit_grid(101);
        for name in [
            BasisName::Legendre,
            BasisName::Wiener,
            BasisName::Fourier,
            BasisName::Bsplines,
        ] {
            for j in [1usize, 4, 10] {
                let basis = make_basis(name, j, &grid).unwrap();
                assert_gram_near_identity(&basis.gram(), 1e-2);
                let mut tight = basis.clone();
                tight.orthonormalize().unwrap();
                assert_gram_near_identity(&tight.gram(), 1e-6);
            }
        }
    }

    #[test]
    fn single_function_has_unit_norm() {
        let grid = unit_grid(51);
        for name in [
            BasisName::Legendre,
            BasisName::Wiener,
            BasisName::Fourier,
            BasisName::Bsplines,
        ] {
            let basis = make_basis(name, 1, &grid).unwrap();
            assert_abs_diff_eq!(basis.gram()[(0, 0)], 1.0, epsilon = 1e-2);
        }
    }

    #[test]
    fn too_many_functions_rejected() {
        let grid = unit_grid(5);
        assert!(make_basis(BasisName::Wiener, 6, &grid).is_err());
    }

    #[test]
    fn nonunit_span_keeps_orthonormality() {
        let grid = Grid1D::new(linspace(0.0, 3.0, 151)).unwrap();
        let basis = make_basis(BasisName::Wiener, 4, &grid).unwrap();
        assert_gram_near_identity(&basis.gram(), 1e-2);
    }

    #[test]
    fn tensor_product_gram_and_pointwise_values() {
        let grid = unit_grid(101);
        let bx = make_basis(BasisName::Wiener, 2, &grid).unwrap();
        let by = make_basis(BasisName::Wiener, 2, &grid).unwrap();
        let tb = tensor_basis_2d(bx.clone(), by.clone());
        assert_eq!(tb.n_functions(), 4);
        // 2-D quadrature oracle: Gram close to I4
        assert_gram_near_identity(&tb.gram(), 2e-2);
        // evaluation equals the product of 1-D evaluations
        let s = tb.surface(3); // (i, j) = (1, 1)
        assert_abs_diff_eq!(
            s[(10, 20)],
            bx.matrix[(1, 10)] * by.matrix[(1, 20)],
            epsilon = 1e-14
        );
        // single-function tensor product
        let tb1 = tensor_basis_2d(
            make_basis(BasisName::Fourier, 1, &grid).unwrap(),
            make_basis(BasisName::Fourier, 1, &grid).unwrap(),
        );
        assert_eq!(tb1.n_functions(), 1);
    }

    #[test]
    fn bsplines_small_counts() {
        let grid = unit_grid(101);
        for j in 1..=6 {
            let basis = make_basis(BasisName::Bsplines, j, &grid).unwrap();
            assert_eq!(basis.n_functions(), j);
            assert_gram_near_identity(&basis.gram(), 1e-6); // Gram-Schmidt applied
        }
    }
}
