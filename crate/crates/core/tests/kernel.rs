use evtrack::matkit::{lambda_max, lambda_min, mat_exp, solve_care, step_pair, sym_eig, Mat};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat {
    let data = (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect();
    Mat::from_vec(rows, cols, data).unwrap()
}

fn rel_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm_fro() / a.norm_fro().max(b.norm_fro()).max(1.0)
}

/// Dense Taylor series with many terms; fine for small `||A t||`.
fn taylor_exp(a: &Mat, t: f64) -> Mat {
    let n = a.rows();
    let at = a.scale(t);
    let mut term = Mat::identity(n);
    let mut sum = Mat::identity(n);
    for k in 1..60 {
        term = (&term * &at).scale(1.0 / k as f64);
        sum = &sum + &term;
    }
    sum
}

#[test]
fn semigroup_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = 2 + case % 5;
        // alternate mostly stable and unstable spectra
        let shift = if case % 2 == 0 { -1.5 } else { 0.8 };
        let a = &random_mat(&mut rng, n, n, 1.5) + &Mat::identity(n).scale(shift);
        let s = rng.gen_range(0.0..1.5);
        let t = rng.gen_range(0.0..1.5);
        let lhs = mat_exp(&a, s + t).unwrap();
        let rhs = &mat_exp(&a, s).unwrap() * &mat_exp(&a, t).unwrap();
        worst = worst.max(rel_diff(&lhs, &rhs));
    }
    assert!(worst <= 1e-9, "worst semigroup error {worst:e}");
}

#[test]
fn exponential_matches_taylor_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=6 {
        let a = random_mat(&mut rng, n, n, 1.0);
        for t in [0.01, 0.3, 1.0] {
            let d = rel_diff(&mat_exp(&a, t).unwrap(), &taylor_exp(&a, t));
            assert!(d < 1e-12, "n = {n}, t = {t}: {d:e}");
        }
    }
}

#[test]
fn step_pair_identity_and_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..50 {
        let n = 2 + case % 5;
        let a = random_mat(&mut rng, n, n, 2.0);
        let delta = rng.gen_range(1e-6..2.0);
        let sp = step_pair(&a, delta).unwrap();
        // E = I + A Psi
        let rebuilt = &Mat::identity(n) + &(&a * &sp.psi);
        assert!(rel_diff(&sp.e, &rebuilt) <= 1e-10, "case {case}");
        // Psi = int_0^delta e^{A s} ds by composite Simpson on mat_exp
        let m = 400;
        let h = delta / m as f64;
        let mut acc = Mat::zeros(n, n);
        for k in 0..=m {
            let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            acc = &acc + &mat_exp(&a, k as f64 * h).unwrap().scale(w * h / 3.0);
        }
        assert!(rel_diff(&sp.psi, &acc) < 1e-8, "case {case}");
    }
}

fn pendulum() -> (Mat, Mat, Mat) {
    (
        Mat::from_rows(&[[0.0, 1.0], [-9.8, 0.0]]).unwrap(),
        Mat::column(&[0.0, -1.0]),
        Mat::from_rows(&[[10.59, 0.42], [0.42, 1.05]]).unwrap(),
    )
}

fn care_residual(a: &Mat, b: &Mat, r: &Mat, q: &Mat, c: f64, y: &Mat) -> Mat {
    let rinv = evtrack::matkit::inverse(r).unwrap();
    let s = (&(b * &rinv) * &b.transpose()).scale(c);
    let t = &(&(y * a) + &(&a.transpose() * y)) - &(&(y * &s) * y);
    &t + q
}

#[test]
fn care_on_pendulum_instances() {
    let (a, b, q) = pendulum();
    // (R, c) pairs of the three bundled designs plus the undirected one
    for (r, c) in [(1.1394, 1.5434), (0.1, 0.12235), (1.5405, 1.8848), (1.0, 1.0)] {
        let r = Mat::scalar(r);
        let y = solve_care(&a, &b, &r, &q, c).unwrap();
        let res = care_residual(&a, &b, &r, &q, c, &y).norm_fro();
        assert!(res <= 1e-8 * q.norm_fro(), "residual {res:e}");
        assert!(lambda_min(&y).unwrap() > 0.0);
    }
}

#[test]
fn care_on_random_stabilizable_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let n = 2 + case % 4;
        let m = 1 + case % 2;
        let a = random_mat(&mut rng, n, n, 1.0);
        // generic (A, B) is controllable
        let b = random_mat(&mut rng, n, m, 1.0);
        let g = random_mat(&mut rng, n, n, 1.0);
        let q = &(&g * &g.transpose()) + &Mat::identity(n).scale(0.5);
        let r = Mat::diag(&(0..m).map(|_| rng.gen_range(0.2..2.0)).collect::<Vec<_>>());
        let c = rng.gen_range(0.3..2.0);
        let y = solve_care(&a, &b, &r, &q, c).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let res = care_residual(&a, &b, &r, &q, c, &y).norm_fro();
        assert!(res <= 1e-8 * q.norm_fro(), "case {case}: residual {res:e}");
        assert!(lambda_min(&y).unwrap() > 0.0, "case {case}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_of_negated_is_inverse(entries in prop::collection::vec(-2.0f64..2.0, 9), t in 0.0f64..1.0) {
        let a = Mat::from_vec(3, 3, entries).unwrap();
        let prod = &mat_exp(&a, t).unwrap() * &mat_exp(&a, -t).unwrap();
        prop_assert!(rel_diff(&prod, &Mat::identity(3)) < 1e-11);
    }

    #[test]
    fn symmetric_eigen_reconstructs(entries in prop::collection::vec(-3.0f64..3.0, 16)) {
        let m = Mat::from_vec(4, 4, entries).unwrap().symmetrized();
        let e = sym_eig(&m).unwrap();
        prop_assert!(rel_diff(&e.reconstruct(), &m) < 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((e.values.iter().sum::<f64>() - m.trace()).abs() < 1e-10 * (1.0 + m.norm_fro()));
        prop_assert!(lambda_max(&m).unwrap() >= lambda_min(&m).unwrap());
    }
}
