//! Continuous-time algebraic Riccati equation
//! `Y A + A' Y - c Y B R^{-1} B' Y + Q = 0`.
//!
//! The stabilizing solution is reached by integrating the Riccati
//! differential equation forward from `Y(0) = Q` with an error-controlled
//! RK4 scheme, then polished with Newton-Kleinman steps once the iterate is
//! close enough for the closed loop to be stabilizing.

use super::{eig, lu, Mat, MatError};

#[derive(Debug, Clone, PartialEq)]
pub struct CareOptions {
    /// Required `||residual|| / ||Q||` on return.
    pub residual_tol: f64,
    /// ODE phase hands over to Newton below this relative residual.
    pub handover_tol: f64,
    /// ODE stationarity target when Newton is unavailable.
    pub stationary_tol: f64,
    pub max_ode_steps: usize,
    pub max_newton_steps: usize,
}

impl Default for CareOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            handover_tol: 1e-4,
            stationary_tol: 1e-10,
            max_ode_steps: 200_000,
            max_newton_steps: 50,
        }
    }
}

struct Riccati<'a> {
    a: &'a Mat,
    at: Mat,
    q: &'a Mat,
    /// `c B R^{-1} B'`.
    s: Mat,
}

impl Riccati<'_> {
    fn rhs(&self, y: &Mat) -> Mat {
        let ys = y * &self.s;
        let mut f = &(&self.at * y) + &(y * self.a);
        f = &f - &(&ys * y);
        (&f + self.q).symmetrized()
    }
}

/// `Y A + A' Y - c Y B R^{-1} B' Y + Q`.
pub fn care_residual(a: &Mat, b: &Mat, r: &Mat, q: &Mat, c: f64, y: &Mat) -> Result<Mat, MatError> {
    let ric = setup(a, b, r, q, c)?;
    Ok(ric.rhs(y))
}

fn setup<'a>(a: &'a Mat, b: &Mat, r: &Mat, q: &'a Mat, c: f64) -> Result<Riccati<'a>, MatError> {
    let n = a.require_square("A")?;
    let p = r.require_square("R")?;
    if b.rows() != n || b.cols() != p {
        return Err(MatError::Dimension(format!(
            "B is {}x{}, expected {n}x{p}",
            b.rows(),
            b.cols()
        )));
    }
    if q.rows() != n || q.cols() != n {
        return Err(MatError::Dimension(format!("Q must be {n}x{n}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(MatError::Domain(format!("coupling scalar must be positive, got {c}")));
    }
    let rinv_bt = lu::solve_linear(r, &b.transpose())?;
    let s = (b * &rinv_bt).scale(c).symmetrized();
    Ok(Riccati {
        a,
        at: a.transpose(),
        q,
        s,
    })
}

/// Stabilizing solution of `Y A + A' Y - c Y B R^{-1} B' Y + Q = 0`.
pub fn solve_care(a: &Mat, b: &Mat, r: &Mat, q: &Mat, c: f64) -> Result<Mat, MatError> {
    solve_care_with(a, b, r, q, c, &CareOptions::default())
}

pub fn solve_care_with(
    a: &Mat,
    b: &Mat,
    r: &Mat,
    q: &Mat,
    c: f64,
    opts: &CareOptions,
) -> Result<Mat, MatError> {
    for (name, m) in [("R", r), ("Q", q)] {
        let e = eig::sym_eig(m)?;
        if e.min() <= 0.0 {
            return Err(MatError::Domain(format!("{name} must be positive definite")));
        }
    }
    let ric = setup(a, b, r, q, c)?;
    let qnorm = q.norm_fro();

    let mut y = integrate(&ric, q.clone(), opts.handover_tol * qnorm, opts)?;
    if let Some(polished) = newton(&ric, &y, opts) {
        y = polished;
    }
    if ric.rhs(&y).norm_fro() > opts.residual_tol * qnorm {
        // Newton was unavailable or stalled; finish on the ODE.
        y = integrate(&ric, y, opts.stationary_tol * qnorm, opts)?;
    }

    let res = ric.rhs(&y).norm_fro();
    if res > opts.residual_tol * qnorm {
        return Err(MatError::Infeasible(format!(
            "Riccati iteration did not converge (relative residual {:e})",
            res / qnorm
        )));
    }
    let y = y.symmetrized();
    let lmin = eig::lambda_min(&y)?;
    if lmin <= 0.0 {
        return Err(MatError::Infeasible(format!(
            "Riccati solution is not positive definite (lambda_min = {lmin:e})"
        )));
    }
    Ok(y)
}

fn rk4(ric: &Riccati, y: &Mat, h: f64) -> Mat {
    let k1 = ric.rhs(y);
    let k2 = ric.rhs(&(y + &k1.scale(h / 2.0)));
    let k3 = ric.rhs(&(y + &k2.scale(h / 2.0)));
    let k4 = ric.rhs(&(y + &k3.scale(h)));
    let incr = &(&k1 + &k2.scale(2.0)) + &(&k3.scale(2.0) + &k4);
    y + &incr.scale(h / 6.0)
}

/// Integrates until `||Y'|| <= target`, with step-doubling error control.
fn integrate(ric: &Riccati, mut y: Mat, target: f64, opts: &CareOptions) -> Result<Mat, MatError> {
    let scale = ric.a.norm_fro() + ric.s.norm_fro() * ric.q.norm_fro() + 1.0;
    let mut h = 0.1 / scale;
    let local_tol = 1e-9;
    for _ in 0..opts.max_ode_steps {
        if ric.rhs(&y).norm_fro() <= target {
            return Ok(y);
        }
        let full = rk4(ric, &y, h);
        let half = rk4(ric, &rk4(ric, &y, h / 2.0), h / 2.0);
        let err = (&half - &full).norm_fro() / 15.0;
        let bound = local_tol * (1.0 + half.norm_fro());
        if !half.is_finite() || err > bound {
            h /= 2.0;
            if h < 1e-14 {
                break;
            }
            continue;
        }
        y = half;
        let grow = if err == 0.0 { 2.0 } else { (0.9 * (bound / err).powf(0.2)).min(2.0) };
        h *= grow.max(1.0);
    }
    if ric.rhs(&y).norm_fro() <= target {
        Ok(y)
    } else {
        Err(MatError::Infeasible(
            "Riccati differential equation did not reach a stationary point".into(),
        ))
    }
}

/// Newton-Kleinman: solve `(A - S Y_k)' X + X (A - S Y_k) = -(Q + Y_k S Y_k)`.
fn newton(ric: &Riccati, y0: &Mat, opts: &CareOptions) -> Option<Mat> {
    let n = ric.a.rows();
    let ident = Mat::identity(n);
    let mut y = y0.clone();
    let mut best = ric.rhs(&y).norm_fro();
    for _ in 0..opts.max_newton_steps {
        let closed = ric.a - &(&ric.s * &y);
        let ct = closed.transpose();
        let op = &ct.kron(&ident) + &ident.kron(&ct);
        let rhs = -&(ric.q + &(&(&y * &ric.s) * &y));
        let vec_rhs = Mat::from_vec(n * n, 1, rhs.as_slice().to_vec()).ok()?;
        let x = lu::solve_linear(&op, &vec_rhs).ok()?;
        let next = Mat::from_vec(n, n, x.as_slice().to_vec()).ok()?.symmetrized();
        let res = ric.rhs(&next).norm_fro();
        if !res.is_finite() || res >= best {
            break;
        }
        y = next;
        best = res;
        if best <= 1e-14 * ric.q.norm_fro() {
            break;
        }
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case_is_sqrt_q() {
        let q = 4.0;
        let y = solve_care(
            &Mat::scalar(0.0),
            &Mat::scalar(1.0),
            &Mat::scalar(1.0),
            &Mat::scalar(q),
            1.0,
        )
        .unwrap();
        assert!((y[(0, 0)] - q.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn scalar_unstable_plant() {
        // 2 a y - c y^2 / r + q = 0  =>  y = r (a + sqrt(a^2 + c q / r)) / c
        let (a, r, q, c) = (1.5, 0.3, 2.0, 0.8);
        let y = solve_care(
            &Mat::scalar(a),
            &Mat::scalar(1.0),
            &Mat::scalar(r),
            &Mat::scalar(q),
            c,
        )
        .unwrap();
        let expect = r * (a + (a * a + c * q / r).sqrt()) / c;
        assert!((y[(0, 0)] - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn rejects_indefinite_weights() {
        let a = Mat::scalar(0.0);
        let b = Mat::scalar(1.0);
        assert!(solve_care(&a, &b, &Mat::scalar(-1.0), &Mat::scalar(1.0), 1.0).is_err());
        assert!(solve_care(&a, &b, &Mat::scalar(1.0), &Mat::scalar(0.0), 1.0).is_err());
        assert!(solve_care(&a, &b, &Mat::scalar(1.0), &Mat::scalar(1.0), 0.0).is_err());
    }

    #[test]
    fn unstabilizable_is_infeasible() {
        // Unstable mode with no input authority.
        let a = Mat::diag(&[1.0, -1.0]);
        let b = Mat::column(&[0.0, 1.0]);
        let opts = CareOptions {
            max_ode_steps: 2_000,
            ..CareOptions::default()
        };
        let res = solve_care_with(&a, &b, &Mat::scalar(1.0), &Mat::identity(2), 1.0, &opts);
        assert!(matches!(res, Err(MatError::Infeasible(_))));
    }
}
