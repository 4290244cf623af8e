//! The quadratic form `f(y, z) = sum y_i^2 + z^2 - (sum y_i) z` and its spectrum.
//!
//! The Hessian of `f` is the arrowhead matrix with diagonal 2 and `-1` in the
//! last row and column. Its characteristic polynomial is
//! `(2 - l)^(n-1) (l^2 - 4 l + 4 - n)`, so the eigenvalues are 2 (n - 1 times)
//! and `2 +- sqrt(n)`. For `n > 4` one eigenvalue is negative: `f` is not
//! convex, and it is not bounded below on the nonnegative orthant either, as
//! the witness `y = [5, 4, 3, 4, 5], z = 10` with `f = -19` shows.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::determinant;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("dimension n must be at least 1")]
    ZeroDimension,
    #[error("block A of the partition is singular")]
    SingularBlock,
    #[error("block dimensions are not conformal: {0}")]
    NonConformal(&'static str),
}

/// `y` and `z` of the witness on which `f` is negative for `n = 5`.
pub const WITNESS_Y: [i64; 5] = [5, 4, 3, 4, 5];
pub const WITNESS_Z: i64 = 10;
pub const WITNESS_VALUE: i64 = -19;

pub fn f_eval(y: &[f64], z: f64) -> f64 {
    let sq: f64 = y.iter().map(|v| v * v).sum();
    let sum: f64 = y.iter().sum();
    sq + z * z - sum * z
}

/// Exact evaluation on integers.
pub fn f_eval_int(y: &[i64], z: i64) -> i128 {
    let z = z as i128;
    let sq: i128 = y.iter().map(|&v| (v as i128) * (v as i128)).sum();
    let sum: i128 = y.iter().map(|&v| v as i128).sum();
    sq + z * z - sum * z
}

/// Hessian of `f` for `dim y = n`, as an `(n + 1) x (n + 1)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrowheadHessian {
    n: usize,
    matrix: DMatrix<f64>,
}

impl ArrowheadHessian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// `x^T H x` for `x = [y; z]`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n + 1);
        let v = nalgebra::DVector::from_column_slice(x);
        v.dot(&(&self.matrix * &v))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

pub fn build_hessian(n: usize) -> Result<ArrowheadHessian, SpectraError> {
    if n == 0 {
        return Err(SpectraError::ZeroDimension);
    }
    let size = n + 1;
    let matrix = DMatrix::from_fn(size, size, |i, j| {
        if i == j {
            2.0
        } else if i == n || j == n {
            -1.0
        } else {
            0.0
        }
    });
    Ok(ArrowheadHessian { n, matrix })
}

/// `det([A, B; C, D]) = det(A) * det(D - C A^{-1} B)` for square invertible `A`.
pub fn schur_det(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> Result<f64, SpectraError> {
    if !a.is_square() {
        return Err(SpectraError::NonConformal("A must be square"));
    }
    if !d.is_square() {
        return Err(SpectraError::NonConformal("D must be square"));
    }
    if b.nrows() != a.nrows() || b.ncols() != d.ncols() {
        return Err(SpectraError::NonConformal("B must be rows(A) x cols(D)"));
    }
    if c.nrows() != d.nrows() || c.ncols() != a.ncols() {
        return Err(SpectraError::NonConformal("C must be rows(D) x cols(A)"));
    }
    let det_a = determinant(a);
    if det_a == 0.0 {
        return Err(SpectraError::SingularBlock);
    }
    let a_inv_b = a
        .clone()
        .lu()
        .solve(b)
        .ok_or(SpectraError::SingularBlock)?;
    let complement = d - c * a_inv_b;
    Ok(det_a * determinant(&complement))
}

/// Closed-form `det(H - l I) = (2 - l)^(n-1) (l^2 - 4 l + 4 - n)`.
pub fn charpoly_eval(n: usize, lambda: f64) -> f64 {
    assert!(n >= 1, "charpoly_eval needs n >= 1");
    (2.0 - lambda).powi(n as i32 - 1) * (lambda * lambda - 4.0 * lambda + 4.0 - n as f64)
}

fn shifted(n: usize, lambda: f64) -> Result<DMatrix<f64>, SpectraError> {
    let mut m = build_hessian(n)?.into_matrix();
    for i in 0..=n {
        m[(i, i)] -= lambda;
    }
    Ok(m)
}

/// `det(H - l I)` by direct elimination.
pub fn charpoly_direct(n: usize, lambda: f64) -> Result<f64, SpectraError> {
    Ok(determinant(&shifted(n, lambda)?))
}

/// `det(H - l I)` through the Schur complement of the leading `n x n` block.
pub fn charpoly_schur(n: usize, lambda: f64) -> Result<f64, SpectraError> {
    let m = shifted(n, lambda)?;
    let a = m.view((0, 0), (n, n)).into_owned();
    let b = m.view((0, n), (n, 1)).into_owned();
    let c = m.view((n, 0), (1, n)).into_owned();
    let d = m.view((n, n), (1, 1)).into_owned();
    schur_det(&a, &b, &c, &d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub n: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub convex: bool,
}

/// Closed-form spectrum of the `n`-dimensional Hessian.
pub fn eigenvalues(n: usize) -> Result<SpectrumResult, SpectraError> {
    if n == 0 {
        return Err(SpectraError::ZeroDimension);
    }
    let root = (n as f64).sqrt();
    let mut eig = Vec::with_capacity(n + 1);
    eig.push(2.0 - root);
    eig.extend(std::iter::repeat_n(2.0, n - 1));
    eig.push(2.0 + root);
    eig.sort_by(f64::total_cmp);
    let min = eig[0];
    Ok(SpectrumResult {
        n,
        eigenvalues: eig,
        min_eigenvalue: min,
        convex: min >= 0.0,
    })
}

/// Eigenvalues of the built Hessian from a symmetric QR solver, ascending.
pub fn numeric_eigenvalues(n: usize) -> Result<Vec<f64>, SpectraError> {
    let h = build_hessian(n)?.into_matrix();
    let mut eig: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Whether `f` is convex in dimension `n`; equivalently whether its minimum
/// over the nonnegative orthant is 0, attained at the origin.
pub fn convexity_verdict(n: usize) -> bool {
    n <= 4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMinimum {
    pub value: f64,
    /// First minimizer in lexicographic grid order, as `[y; z]`.
    pub argmin: Vec<f64>,
    pub points: u64,
}

/// Exhaustive minimum of `f` over the grid `{0, step, 2 step, ..., upper}^(n+1)`.
pub fn grid_minimum(n: usize, upper: f64, step: f64) -> GridMinimum {
    assert!(n >= 1 && step > 0.0 && upper >= 0.0);
    let ticks = (upper / step).round() as usize;
    let dims = n + 1;
    let mut idx = vec![0usize; dims];
    let mut point = vec![0.0; dims];
    let mut best = GridMinimum {
        value: f64::INFINITY,
        argmin: point.clone(),
        points: 0,
    };
    loop {
        for (p, &i) in point.iter_mut().zip(&idx) {
            *p = i as f64 * step;
        }
        let v = f_eval(&point[..n], point[n]);
        best.points += 1;
        if v < best.value {
            best.value = v;
            best.argmin.copy_from_slice(&point);
        }
        let mut k = dims;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < ticks {
                idx[k] += 1;
                break;
            }
            idx[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_value() {
        assert_eq!(f_eval_int(&WITNESS_Y, WITNESS_Z), -19);
        assert_eq!(f_eval(&[5.0, 4.0, 3.0, 4.0, 5.0], 10.0), -19.0);
        assert_eq!(f_eval(&[0.0; 5], 0.0), 0.0);
        assert_eq!(f_eval(&[10.0, 8.0, 6.0, 8.0, 10.0], 20.0), -76.0);
    }

    #[test]
    fn hessian_examples() {
        let h = build_hessian(2).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, -1.0, 0.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        assert_eq!(h.matrix(), &expected);
        let h = build_hessian(1).unwrap();
        assert_eq!(h.matrix(), &DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
        assert_eq!(build_hessian(0), Err(SpectraError::ZeroDimension));
    }

    #[test]
    fn hessian_structure() {
        let h = build_hessian(7).unwrap();
        let m = h.matrix();
        assert_eq!(m, &m.transpose());
        for i in 0..8 {
            for j in 0..8 {
                let want = match (i == j, i == 7 || j == 7) {
                    (true, _) => 2.0,
                    (false, true) => -1.0,
                    _ => 0.0,
                };
                assert_eq!(m[(i, j)], want);
            }
        }
    }

    #[test]
    fn schur_examples() {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        assert_eq!(schur_det(&one(2.0), &one(-1.0), &one(-1.0), &one(2.0)).unwrap(), 3.0);

        let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 2.0]);
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 2.0, 5.0]);
        let zero = DMatrix::zeros(2, 2);
        assert_eq!(schur_det(&a, &zero, &zero, &d).unwrap(), 6.0 * -3.0);

        assert_eq!(
            schur_det(&DMatrix::zeros(1, 1), &one(1.0), &one(1.0), &one(1.0)),
            Err(SpectraError::SingularBlock)
        );
        assert!(matches!(
            schur_det(&one(1.0), &DMatrix::zeros(2, 1), &one(1.0), &one(1.0)),
            Err(SpectraError::NonConformal(_))
        ));
    }

    #[test]
    fn hessian_determinant_at_zero() {
        let h = build_hessian(5).unwrap();
        let m = h.matrix();
        let a = m.view((0, 0), (5, 5)).into_owned();
        let b = m.view((0, 5), (5, 1)).into_owned();
        let c = m.view((5, 0), (1, 5)).into_owned();
        let d = m.view((5, 5), (1, 1)).into_owned();
        let det = schur_det(&a, &b, &c, &d).unwrap();
        assert!((det + 16.0).abs() < 1e-12, "{det}");
        assert_eq!(charpoly_eval(5, 0.0), -16.0);
    }

    #[test]
    fn charpoly_examples() {
        assert_eq!(charpoly_eval(5, 0.0), -16.0);
        assert_eq!(charpoly_eval(1, 0.0), 3.0);
        for n in 2..10 {
            assert_eq!(charpoly_eval(n, 2.0), 0.0);
        }
    }

    #[test]
    fn spectrum_examples() {
        let s = eigenvalues(5).unwrap();
        let r5 = 5f64.sqrt();
        assert_eq!(s.eigenvalues, vec![2.0 - r5, 2.0, 2.0, 2.0, 2.0, 2.0 + r5]);
        assert!((s.eigenvalues[5] - 4.23607).abs() < 1e-5);
        assert!((s.eigenvalues[0] + 0.23607).abs() < 1e-5);
        assert!(!s.convex);

        let s = eigenvalues(4).unwrap();
        assert_eq!(s.min_eigenvalue, 0.0);
        assert!(s.convex);

        assert_eq!(eigenvalues(1).unwrap().eigenvalues, vec![1.0, 3.0]);
    }

    #[test]
    fn numeric_matches_closed_form() {
        for n in 1..=12 {
            let closed = eigenvalues(n).unwrap().eigenvalues;
            let num = numeric_eigenvalues(n).unwrap();
            for (a, b) in closed.iter().zip(&num) {
                assert!((a - b).abs() < 1e-9, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn verdict_boundary() {
        assert!(convexity_verdict(4));
        assert!(!convexity_verdict(5));
        // Unbounded below along the witness ray.
        for s in [1i64, 2, 10, 1000] {
            let y: Vec<i64> = WITNESS_Y.iter().map(|v| v * s).collect();
            assert_eq!(f_eval_int(&y, WITNESS_Z * s), -19 * (s as i128) * (s as i128));
        }
    }

    #[test]
    fn small_grid() {
        let g = grid_minimum(2, 2.0, 0.5);
        assert_eq!(g.points, 125);
        assert_eq!(g.value, 0.0);
        assert_eq!(g.argmin, vec![0.0; 3]);
    }
}
