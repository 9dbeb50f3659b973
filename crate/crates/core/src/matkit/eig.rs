use super::{Mat, MatError};

/// Relative asymmetry accepted by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Mat,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.vectors.rows()).map(|i| self.vectors[(i, k)]).collect()
    }

    /// `V diag(values) V'`.
    pub fn reconstruct(&self) -> Mat {
        let v = &self.vectors;
        let scaled = v * &Mat::diag(&self.values);
        &scaled * &v.transpose()
    }
}

/// Cyclic Jacobi eigensolver for symmetric input.
pub fn sym_eig(s: &Mat) -> Result<SymEig, MatError> {
    let n = s.require_square("symmetric eigen input")?;
    let norm = s.norm_fro();
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(MatError::Domain(format!(
            "matrix is not symmetric (max |S - S'| = {asym:e})"
        )));
    }
    let mut a = s.symmetrized();
    let mut v = Mat::identity(n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-2 * norm || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymEig { values, vectors })
}

pub fn lambda_min(s: &Mat) -> Result<f64, MatError> {
    Ok(sym_eig(s)?.min())
}

pub fn lambda_max(s: &Mat) -> Result<f64, MatError> {
    Ok(sym_eig(s)?.max())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_spectrum() {
        let e = sym_eig(&Mat::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_analytic() {
        let s = Mat::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let e = sym_eig(&s).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        assert!((&e.reconstruct() - &s).norm_fro() < 1e-13);
    }

    #[test]
    fn rejects_asymmetric() {
        let s = Mat::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&s), Err(MatError::Domain(_))));
    }

    #[test]
    fn handles_zero_and_diagonal() {
        let e = sym_eig(&Mat::zeros(2, 2)).unwrap();
        assert_eq!(e.values, vec![0.0, 0.0]);
        let e = sym_eig(&Mat::diag(&[3.0, -1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0, 0.0]);
    }
}
