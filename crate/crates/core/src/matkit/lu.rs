use super::{Mat, MatError};

/// Pivots below this fraction of `||M||_1` are treated as zero.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

/// Packed LU factors with row permutation (`P M = L U`, unit lower `L`).
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn factor(m: &Mat) -> Result<Self, MatError> {
        let n = m.require_square("LU input")?;
        let scale = m.norm_1();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= SINGULAR_PIVOT_RATIO * scale || pivot == 0.0 {
                return Err(MatError::Singular { pivot, scale });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn det(&self) -> f64 {
        self.lu.diagonal().iter().product::<f64>() * self.sign
    }

    pub fn solve(&self, b: &Mat) -> Result<Mat, MatError> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(MatError::Dimension(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows()
            )));
        }
        let k = b.cols();
        let mut x = Mat::zeros(n, k);
        for (i, &p) in self.perm.iter().enumerate() {
            for c in 0..k {
                x[(i, c)] = b[(p, c)];
            }
        }
        for c in 0..k {
            for i in 0..n {
                let mut acc = x[(i, c)];
                for j in 0..i {
                    acc -= self.lu[(i, j)] * x[(j, c)];
                }
                x[(i, c)] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = x[(i, c)];
                for j in (i + 1)..n {
                    acc -= self.lu[(i, j)] * x[(j, c)];
                }
                x[(i, c)] = acc / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Solves `M X = b` by partial-pivoting LU.
pub fn solve_linear(m: &Mat, b: &Mat) -> Result<Mat, MatError> {
    Lu::factor(m)?.solve(b)
}

pub fn inverse(m: &Mat) -> Result<Mat, MatError> {
    let n = m.require_square("inverse input")?;
    Lu::factor(m)?.solve(&Mat::identity(n))
}

pub fn det(m: &Mat) -> Result<f64, MatError> {
    m.require_square("determinant input")?;
    match Lu::factor(m) {
        Ok(lu) => Ok(lu.det()),
        Err(MatError::Singular { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}
