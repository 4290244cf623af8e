//! Small dense determinants.

use nalgebra::DMatrix;

/// Determinant by Gaussian elimination with partial pivoting.
///
/// The result is the signed product of the pivots. Fraction-free elimination
/// is kept for the integer path only: on floats its intermediate products
/// underflow once the pivots are small and the matrix is large.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = 1.0;
    for k in 0..n {
        let pivot_row = (k..n)
            .max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))
            .unwrap_or(k);
        let pivot = a[(pivot_row, k)];
        if pivot == 0.0 {
            return 0.0;
        }
        if pivot_row != k {
            a.swap_rows(pivot_row, k);
            det = -det;
        }
        det *= pivot;
        for i in k + 1..n {
            let factor = a[(i, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in k + 1..n {
                a[(i, j)] -= factor * a[(k, j)];
            }
        }
    }
    det
}

/// Exact integer determinant (Bareiss); panics on overflow.
pub fn determinant_i128(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1;
    let mut prev = 1;
    for k in 0..n - 1 {
        let Some(p) = (k..n).find(|&i| a[i][k] != 0) else {
            return 0;
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        let pivot = a[k][k];
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[i][j]
                    .checked_mul(pivot)
                    .and_then(|x| x.checked_sub(a[i][k].checked_mul(a[k][j])?))
                    .expect("integer determinant overflow");
                a[i][j] = num / prev;
            }
            a[i][k] = 0;
        }
        prev = pivot;
    }
    sign * a[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(determinant(&DMatrix::from_row_slice(1, 1, &[7.0])), 7.0);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert_eq!(determinant(&m), 3.0);
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 4.0, -3.0, 8.0]);
        assert_eq!(determinant(&m), -2.0);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(determinant(&singular), 0.0);
    }

    #[test]
    fn integer_path_matches() {
        let rows = vec![vec![0, 1, 2], vec![1, 0, 3], vec![4, -3, 8]];
        assert_eq!(determinant_i128(&rows), -2);
        assert_eq!(determinant_i128(&[vec![1, 2], vec![2, 4]]), 0);
    }

    #[test]
    fn agrees_with_lu() {
        let m = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5 + (i == j) as u8 as f64);
        let lu = m.clone().lu().determinant();
        assert!((determinant(&m) - lu).abs() <= 1e-10 * lu.abs().max(1.0));
    }
}
