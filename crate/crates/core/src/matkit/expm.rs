//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant, and the exact step pair used for piecewise-constant inputs.

use super::{lu, Mat, MatError};

/// Largest `||A||_1` for which the unscaled degree-13 approximant is used.
pub const PADE13_THETA: f64 = 5.371920351148152;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^{A t}`.
pub fn mat_exp(a: &Mat, t: f64) -> Result<Mat, MatError> {
    let n = a.require_square("exponent")?;
    if !t.is_finite() {
        return Err(MatError::Domain(format!("non-finite time {t}")));
    }
    if t == 0.0 {
        return Ok(Mat::identity(n));
    }
    expm(&a.scale(t))
}

fn expm(a: &Mat) -> Result<Mat, MatError> {
    let n = a.rows();
    let norm = a.norm_1();
    if norm == 0.0 {
        return Ok(Mat::identity(n));
    }
    let squarings = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(squarings));

    let b = &PADE13;
    let ident = Mat::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| {
        let mut m = a6.scale(c6);
        m = &m + &a4.scale(c4);
        m = &m + &a2.scale(c2);
        &m + &ident.scale(c0)
    };

    let u_inner = {
        let hi = &a6 * &(&(&a6.scale(b[13]) + &a4.scale(b[11])) + &a2.scale(b[9]));
        &hi + &lin(b[7], b[5], b[3], b[1])
    };
    let u = &a * &u_inner;
    let v = {
        let hi = &a6 * &(&(&a6.scale(b[12]) + &a4.scale(b[10])) + &a2.scale(b[8]));
        &hi + &lin(b[6], b[4], b[2], b[0])
    };

    let mut r = lu::solve_linear(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(MatError::Domain("matrix exponential overflowed".into()));
    }
    Ok(r)
}

/// Exact one-step propagators for `x' = A x + v` with `v` held constant:
/// `x(t + delta) = E x(t) + Psi v`.
#[derive(Debug, Clone)]
pub struct StepPair {
    pub delta: f64,
    /// `e^{A delta}`.
    pub e: Mat,
    /// `int_0^delta e^{A s} ds`.
    pub psi: Mat,
}

/// Computes `(e^{A delta}, int_0^delta e^{A s} ds)` from the exponential of
/// the augmented block matrix `[[A, I], [0, 0]] delta`.
pub fn step_pair(a: &Mat, delta: f64) -> Result<StepPair, MatError> {
    let n = a.require_square("state matrix")?;
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(MatError::Domain(format!(
            "step length must be finite and non-negative, got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(StepPair {
            delta,
            e: Mat::identity(n),
            psi: Mat::zeros(n, n),
        });
    }
    let mut aug = Mat::zeros(2 * n, 2 * n);
    aug.set_block(0, 0, a);
    aug.set_block(0, n, &Mat::identity(n));
    let full = mat_exp(&aug, delta)?;
    Ok(StepPair {
        delta,
        e: full.block(0, 0, n, n),
        psi: full.block(0, n, n, n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_time_is_identity() {
        let a = Mat::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(mat_exp(&a, 0.0).unwrap(), Mat::identity(2));
    }

    #[test]
    fn diagonal_case() {
        let a = Mat::diag(&[-1.5, 0.7]);
        for t in [0.1, 1.0, -2.0, 20.0] {
            let e = mat_exp(&a, t).unwrap();
            assert!(((e[(0, 0)] - (-1.5f64 * t).exp()) / (-1.5f64 * t).exp()).abs() < 1e-13);
            assert!(((e[(1, 1)] - (0.7f64 * t).exp()) / (0.7f64 * t).exp()).abs() < 1e-13);
            assert_eq!(e[(0, 1)], 0.0);
            assert_eq!(e[(1, 0)], 0.0);
        }
    }

    #[test]
    fn rotation_generator() {
        // e^{[[0,w],[-w,0]] t} is a rotation by w t.
        let w = 3.0;
        let a = Mat::from_rows(&[[0.0, w], [-w, 0.0]]).unwrap();
        let t = 7.3;
        let e = mat_exp(&a, t).unwrap();
        let (s, c) = (w * t).sin_cos();
        let expect = Mat::from_rows(&[[c, s], [-s, c]]).unwrap();
        assert!((&e - &expect).max_abs() < 1e-12);
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(mat_exp(&Mat::zeros(2, 3), 1.0), Err(MatError::Dimension(_))));
    }

    #[test]
    fn step_pair_edge_cases() {
        let a = Mat::from_rows(&[[0.0, 1.0], [-9.8, 0.0]]).unwrap();
        let p = step_pair(&a, 0.0).unwrap();
        assert_eq!(p.e, Mat::identity(2));
        assert_eq!(p.psi, Mat::zeros(2, 2));

        let z = step_pair(&Mat::zeros(3, 3), 0.25).unwrap();
        assert_eq!(z.e, Mat::identity(3));
        assert!((&z.psi - &Mat::identity(3).scale(0.25)).max_abs() < 1e-15);

        assert!(matches!(step_pair(&a, -1e-3), Err(MatError::Domain(_))));
    }

    #[test]
    fn step_pair_identity_for_singular_a() {
        let a = Mat::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]).unwrap();
        let p = step_pair(&a, 1.7).unwrap();
        let lhs = &Mat::identity(3) + &(&a * &p.psi);
        assert!((&lhs - &p.e).max_abs() < 1e-12);
    }
}
