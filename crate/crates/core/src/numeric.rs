//! Small numerical helpers shared across modules: quadrature weights,
//! interpolation and symmetric eigendecomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{FdError, Result};

/// Trapezoidal quadrature weights for a (strictly increasing) grid.
///
/// A single-point grid gets weight 1 so that inner products degenerate to
/// plain products instead of vanishing.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let m = grid.len();
    if m == 1 {
        return vec![1.0];
    }
    let mut w = vec![0.0; m];
    w[0] = 0.5 * (grid[1] - grid[0]);
    w[m - 1] = 0.5 * (grid[m - 1] - grid[m - 2]);
    for i in 1..m - 1 {
        w[i] = 0.5 * (grid[i + 1] - grid[i - 1]);
    }
    w
}

/// Trapezoidal integral of sampled values over `grid`.
pub fn trapezoid_integral(grid: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(grid.len(), values.len());
    trapezoid_weights(grid)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Weighted inner product sum_i w_i a_i b_i.
pub fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

/// `count` equally spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let step = (stop - start) / (count - 1) as f64;
    let mut v: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
    // land exactly on the endpoint
    v[count - 1] = stop;
    v
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x`, clamped to the
/// boundary values outside the support.
pub fn linear_interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert!(!xs.is_empty());
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    // binary search for the bracketing interval
    let idx = match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i,
    };
    let (x0, x1) = (xs[idx - 1], xs[idx]);
    let (y0, y1) = (ys[idx - 1], ys[idx]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// non-increasing order. Returns `(eigenvalues, eigenvectors)` with
/// eigenvectors in columns.
pub fn symmetric_eigen_desc(mat: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    let eig = nalgebra::SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        vectors.set_column(new, &eig.eigenvectors.column(old));
    }
    (values, vectors)
}

/// Flip the sign of a vector so its entry of largest absolute value is
/// positive. Ties resolve to the first index attaining the maximum.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Solve the symmetric positive definite system `mat * x = rhs` via
/// Cholesky, with an error if the matrix is not positive definite.
pub fn solve_spd(mat: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    nalgebra::Cholesky::new(mat)
        .map(|ch| ch.solve(&rhs))
        .ok_or_else(|| FdError::Numerical("matrix is not positive definite".into()))
}

/// log(sum(exp(xs))) evaluated stably.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trapezoid_matches_analytic_integral() {
        // integral of t^2 over [0,1] = 1/3, trapezoid error O(h^2)
        let grid = linspace(0.0, 1.0, 1001);
        let vals: Vec<f64> = grid.iter().map(|t| t * t).collect();
        assert_abs_diff_eq!(trapezoid_integral(&grid, &vals), 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn trapezoid_weights_sum_to_span() {
        let grid = vec![0.0, 0.3, 0.5, 1.0];
        let w = trapezoid_weights(&grid);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn linear_interp_is_exact_on_lines() {
        let xs = vec![0.0, 1.0, 3.0];
        let ys = vec![1.0, 3.0, 7.0]; // y = 1 + 2x
        assert_abs_diff_eq!(linear_interp(&xs, &ys, 0.5), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(linear_interp(&xs, &ys, 2.0), 5.0, epsilon = 1e-15);
        // clamped outside
        assert_abs_diff_eq!(linear_interp(&xs, &ys, -1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(linear_interp(&xs, &ys, 9.0), 7.0, epsilon = 1e-15);
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let (vals, vecs) = symmetric_eigen_desc(m);
        assert_abs_diff_eq!(vals[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vecs.column(0)[1].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fix_sign_flips_on_negative_peak() {
        let mut v = vec![0.5, -2.0, 1.0];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.5, 2.0, -1.0]);
    }

    #[test]
    fn log_sum_exp_stable() {
        let xs = vec![1000.0, 1000.0];
        assert_abs_diff_eq!(log_sum_exp(&xs), 1000.0 + 2f64.ln(), epsilon = 1e-12);
    }
}
