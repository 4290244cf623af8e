use priceflow_core::linalg::{determinant, determinant_i128};
use priceflow_core::spectra::{
    build_hessian, charpoly_direct, charpoly_eval, charpoly_schur, convexity_verdict, eigenvalues,
    f_eval, grid_minimum, numeric_eigenvalues,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn half_quadratic_form_is_f() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=16 {
        let h = build_hessian(n).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..=n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let quad = 0.5 * h.quadratic_form(&x);
            let f = f_eval(&x[..n], x[n]);
            let scale = x.iter().map(|v| v * v).sum::<f64>();
            assert!((quad - f).abs() <= 1e-12 * scale, "n={n}: {quad} vs {f}");
        }
    }
}

#[test]
fn closed_form_charpoly_matches_determinants() {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    for n in 1..=64usize {
        let r = (n as f64).sqrt();
        for _ in 0..100 {
            let lambda = rng.random_range(1.0 - r..3.0 + r);
            let closed = charpoly_eval(n, lambda);
            let direct = charpoly_direct(n, lambda).unwrap();
            let schur = charpoly_schur(n, lambda).unwrap_or_else(|e| panic!("n={n} l={lambda}: {e}"));
            assert!(rel_close(closed, direct, 1e-8), "n={n} l={lambda}: {closed} vs {direct}");
            assert!(rel_close(schur, direct, 1e-8), "n={n} l={lambda}: {schur} vs {direct}");
        }
    }
}

#[test]
fn integer_characteristic_values() {
    // Exact det(H - kI) at integer shifts against the closed form.
    for n in 1..=12usize {
        for k in -3i128..=6 {
            let rows: Vec<Vec<i128>> = (0..=n)
                .map(|i| {
                    (0..=n)
                        .map(|j| {
                            if i == j {
                                2 - k
                            } else if i == n || j == n {
                                -1
                            } else {
                                0
                            }
                        })
                        .collect()
                })
                .collect();
            let exact = determinant_i128(&rows);
            let closed = (2 - k).pow(n as u32 - 1) * (k * k - 4 * k + 4 - n as i128);
            assert_eq!(exact, closed, "n={n} k={k}");
        }
    }
}

#[test]
fn spectral_sums() {
    for n in 1..=64usize {
        let eig = numeric_eigenvalues(n).unwrap();
        let h = build_hessian(n).unwrap();
        let trace = 2.0 * (n as f64 + 1.0);
        assert_eq!(h.trace(), trace);
        assert!(rel_close(eig.iter().sum(), trace, 1e-9));

        let det = 2f64.powi(n as i32 - 1) * (4.0 - n as f64);
        let prod: f64 = eig.iter().product();
        let direct = determinant(h.matrix());
        let floor = 1e-9 * 2f64.powi(n as i32 - 1);
        assert!((prod - det).abs() <= 1e-9 * det.abs() + floor, "n={n}: {prod} vs {det}");
        assert!((direct - det).abs() <= 1e-9 * det.abs() + floor, "n={n}: {direct} vs {det}");
    }
}

#[test]
fn numeric_spectrum_matches_closed_form() {
    for n in 1..=64usize {
        let closed = eigenvalues(n).unwrap();
        let numeric = numeric_eigenvalues(n).unwrap();
        for (a, b) in closed.eigenvalues.iter().zip(&numeric) {
            assert!((a - b).abs() < 1e-9, "n={n}: {a} vs {b}");
        }
        let psd = numeric[0] >= -1e-12;
        assert_eq!(convexity_verdict(n), psd, "n={n}");
        assert_eq!(closed.convex, psd, "n={n}");
    }
}

#[test]
fn grid_minimum_small_dimensions() {
    for n in 1..=3 {
        let g = grid_minimum(n, 10.0, 0.25);
        assert_eq!(g.points, 41u64.pow(n as u32 + 1));
        assert_eq!(g.value, 0.0);
        assert!(g.argmin.iter().all(|&v| v == 0.0));
    }
}
