//! Follower topology, leader pinning, Laplacian construction and the
//! graph-derived quantities consumed by the synthesis.
//!
//! Agent ids are 0-based here; configuration files use 1-based ids.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::matkit::{lambda_max, lambda_min, solve_linear, sym_eig, Mat};
use crate::{Error, Result};

/// Follower communication graph with 0/1 weights plus the pinning set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    n: usize,
    directed: bool,
    /// `neighbors[i]`: agents `j` with `a_ij = 1`, ascending.
    neighbors: Vec<Vec<usize>>,
    pinned: Vec<bool>,
}

impl Topology {
    /// `edges` holds `(from, to)` pairs: `to` receives from `from`. For an
    /// undirected topology each pair is added in both directions.
    pub fn from_edges(n: usize, directed: bool, edges: &[(usize, usize)], pinned: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Topology("at least one follower is required".into()));
        }
        let mut adj = vec![vec![false; n]; n];
        for &(from, to) in edges {
            if from >= n || to >= n {
                return Err(Error::Topology(format!(
                    "edge ({from}, {to}) references an agent outside 0..{n}"
                )));
            }
            if from == to {
                return Err(Error::Topology(format!("self-loop at agent {from}")));
            }
            if directed && adj[to][from] {
                return Err(Error::Topology(format!("repeated edge ({from}, {to})")));
            }
            adj[to][from] = true;
            if !directed {
                adj[from][to] = true;
            }
        }
        let mut pin = vec![false; n];
        for &p in pinned {
            if p >= n {
                return Err(Error::Topology(format!("pinned agent {p} outside 0..{n}")));
            }
            pin[p] = true;
        }
        if !pin.iter().any(|&p| p) {
            return Err(Error::Topology("no follower observes the leader".into()));
        }
        let neighbors = adj
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, &a)| a).map(|(j, _)| j).collect())
            .collect();
        Ok(Self {
            n,
            directed,
            neighbors,
            pinned: pin,
        })
    }

    /// Chain `0 -> 1 -> ... -> n-1`; undirected adds the reverse links.
    pub fn chain(n: usize, directed: bool, pinned: &[usize]) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, directed, &edges, pinned)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Agents `r` with `i` among their neighbors.
    pub fn recipients(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&r| self.neighbors[r].binary_search(&i).is_ok()).collect()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn is_pinned(&self, i: usize) -> bool {
        self.pinned[i]
    }

    pub fn pinned(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.pinned[i]).collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (to, nb) in self.neighbors.iter().enumerate() {
            for &from in nb {
                if self.directed || from < to {
                    out.push((from, to));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.neighbors[i].iter().all(|&j| self.neighbors[j].binary_search(&i).is_ok()))
    }

    pub fn adjacency(&self) -> Mat {
        let mut a = Mat::zeros(self.n, self.n);
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                a[(i, j)] = 1.0;
            }
        }
        a
    }
}

/// `L = D - A` and the pinning matrix `G`.
pub fn build_laplacian(top: &Topology) -> (Mat, Mat) {
    let a = top.adjacency();
    let n = top.len();
    let mut l = -&a;
    for i in 0..n {
        l[(i, i)] = top.in_degree(i) as f64;
    }
    let g = Mat::diag(&(0..n).map(|i| if top.is_pinned(i) { 1.0 } else { 0.0 }).collect::<Vec<_>>());
    (l, g)
}

/// True iff some pinned follower reaches every follower along the
/// information-flow direction.
pub fn check_spanning_tree(top: &Topology) -> bool {
    let n = top.len();
    let out: Vec<Vec<usize>> = (0..n).map(|i| top.recipients(i)).collect();
    top.pinned().into_iter().any(|root| {
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &out[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    })
}

/// How the diagonal stability certificate is obtained.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaChoice {
    /// M-matrix construction with numerical verification and a
    /// coordinate-ascent fallback.
    #[default]
    Auto,
    Identity,
    /// Explicit diagonal entries of `Theta`.
    Explicit(Vec<f64>),
    /// Another choice rescaled so that `alpha` takes the given value.
    /// Scaling `Theta` by `s` divides `alpha` and multiplies `theta_min` by
    /// `s`, so the scale is a free design parameter.
    Scaled { shape: Box<ThetaChoice>, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    MMatrix,
    CoordinateAscent,
    Identity,
    Explicit,
}

/// Positive diagonal `Theta` with `H = Theta^{-1} M + M' Theta^{-1}` positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalCertificate {
    pub theta: Vec<f64>,
    pub h: Mat,
    pub alpha: f64,
    pub method: CertificateMethod,
}

const ASCENT_BUDGET: usize = 10_000;

fn h_matrix(lg: &Mat, theta_inv: &[f64]) -> Mat {
    let ti = Mat::diag(theta_inv);
    let left = &ti * lg;
    &left + &left.transpose()
}

fn certificate_from(lg: &Mat, theta: Vec<f64>, method: CertificateMethod) -> Result<DiagonalCertificate> {
    if theta.len() != lg.rows() {
        return Err(Error::Input(format!(
            "Theta has {} entries for {} followers",
            theta.len(),
            lg.rows()
        )));
    }
    if let Some(bad) = theta.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::GraphInfeasible(format!("Theta entry {bad} is not positive")));
    }
    let inv: Vec<f64> = theta.iter().map(|t| 1.0 / t).collect();
    let h = h_matrix(lg, &inv);
    let lmin = lambda_min(&h)?;
    if !(lmin > 0.0) {
        return Err(Error::GraphInfeasible(format!(
            "H = Theta^-1 (L+G) + (L+G)' Theta^-1 is not positive definite (lambda_min = {lmin:e})"
        )));
    }
    Ok(DiagonalCertificate {
        theta,
        h,
        alpha: 0.5 * lmin,
        method,
    })
}

/// Diagonal stability certificate for `-(L+G)`.
///
/// With `x = M^{-1} 1` and `y = M'^{-1} 1` (both positive for a nonsingular
/// M-matrix) the choice `theta_i^{-1} = y_i / x_i` makes `H` positive
/// definite; the result is verified and, failing that, `lambda_min(H)` is
/// maximized over `log theta` by coordinate ascent.
pub fn theta_certificate(lg: &Mat) -> Result<DiagonalCertificate> {
    if !lg.is_square() {
        return Err(Error::Input("L+G must be square".into()));
    }
    let n = lg.rows();
    let ones = Mat::column(&vec![1.0; n]);
    let x = solve_linear(lg, &ones)?;
    let y = solve_linear(&lg.transpose(), &ones)?;
    let positive = x.as_slice().iter().chain(y.as_slice()).all(|v| *v > 0.0);
    let start: Vec<f64> = if positive {
        x.as_slice().iter().zip(y.as_slice()).map(|(xi, yi)| xi / yi).collect()
    } else {
        vec![1.0; n]
    };
    if positive {
        if let Ok(cert) = certificate_from(lg, start.clone(), CertificateMethod::MMatrix) {
            return Ok(cert);
        }
    }
    coordinate_ascent(lg, start)
}

fn coordinate_ascent(lg: &Mat, start: Vec<f64>) -> Result<DiagonalCertificate> {
    let n = start.len();
    let mut log_inv: Vec<f64> = start.iter().map(|t| -t.ln()).collect();
    let eval = |li: &[f64]| -> f64 {
        let inv: Vec<f64> = li.iter().map(|v| v.exp()).collect();
        lambda_min(&h_matrix(lg, &inv)).unwrap_or(f64::NEG_INFINITY)
    };
    let mut best = eval(&log_inv);
    let mut evals = 1;
    let mut step = 0.5;
    while evals < ASCENT_BUDGET && step > 1e-6 {
        let mut improved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                if evals >= ASCENT_BUDGET {
                    break;
                }
                let mut trial = log_inv.clone();
                trial[i] += dir * step;
                let v = eval(&trial);
                evals += 1;
                if v > best {
                    best = v;
                    log_inv = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    let theta = log_inv.iter().map(|v| (-v).exp()).collect();
    certificate_from(lg, theta, CertificateMethod::CoordinateAscent).map_err(|e| match e {
        Error::GraphInfeasible(msg) => {
            Error::GraphInfeasible(format!("no diagonal stability certificate found: {msg}"))
        }
        other => other,
    })
}

pub fn certificate_for(lg: &Mat, choice: &ThetaChoice) -> Result<DiagonalCertificate> {
    match choice {
        ThetaChoice::Auto => theta_certificate(lg),
        ThetaChoice::Identity => certificate_from(lg, vec![1.0; lg.rows()], CertificateMethod::Identity),
        ThetaChoice::Explicit(t) => certificate_from(lg, t.clone(), CertificateMethod::Explicit),
        ThetaChoice::Scaled { shape, alpha } => {
            if !(*alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::Input(format!("target alpha {alpha} must be > 0")));
            }
            let base = certificate_for(lg, shape)?;
            let s = base.alpha / alpha;
            let theta = base.theta.iter().map(|t| t * s).collect();
            certificate_from(lg, theta, base.method)
        }
    }
}

/// Spectral data of `L+G` for symmetric topologies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSpectrum {
    /// Smallest eigenvalue of `L+G`.
    pub lambda_underbar: f64,
    pub lambda_max: f64,
}

/// All graph-derived data used by the two synthesis routes.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphAnalysis {
    pub topology: Topology,
    pub l: Mat,
    pub g: Mat,
    pub lg: Mat,
    pub certificate: DiagonalCertificate,
    /// `Theta^{-1} (L+G) (L+G)' Theta^{-1}`.
    pub p: Mat,
    /// `(L+G)' (L+G)`.
    pub f: Mat,
    pub lambda_min_f: f64,
    pub lambda_max_p: f64,
    pub symmetric: Option<SymmetricSpectrum>,
}

impl GraphAnalysis {
    pub fn n(&self) -> usize {
        self.topology.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.certificate.theta
    }

    pub fn theta_inv(&self, i: usize) -> f64 {
        1.0 / self.certificate.theta[i]
    }

    /// `alpha = lambda_min(H) / 2`.
    pub fn alpha(&self) -> f64 {
        self.certificate.alpha
    }

    pub fn h(&self) -> &Mat {
        &self.certificate.h
    }

    pub fn theta_min(&self) -> f64 {
        self.certificate.theta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `min_i theta_i^{-1}`.
    pub fn theta_underbar(&self) -> f64 {
        1.0 / self.certificate.theta.iter().copied().fold(0.0, f64::max)
    }

    pub fn g_of(&self, i: usize) -> f64 {
        self.g[(i, i)]
    }
}

pub fn analyze(top: &Topology) -> Result<GraphAnalysis> {
    analyze_with(top, &ThetaChoice::Auto)
}

pub fn analyze_with(top: &Topology, choice: &ThetaChoice) -> Result<GraphAnalysis> {
    if !check_spanning_tree(top) {
        return Err(Error::GraphInfeasible(
            "graph has no spanning tree rooted at a pinned follower".into(),
        ));
    }
    let (l, g) = build_laplacian(top);
    let lg = &l + &g;
    let certificate = certificate_for(&lg, choice)?;
    let inv: Vec<f64> = certificate.theta.iter().map(|t| 1.0 / t).collect();
    let ti = Mat::diag(&inv);
    let lgt = lg.transpose();
    let p = (&(&(&ti * &lg) * &lgt) * &ti).symmetrized();
    let f = (&lgt * &lg).symmetrized();
    let lambda_min_f = lambda_min(&f)?;
    let lambda_max_p = lambda_max(&p)?;
    let symmetric = if top.is_symmetric() {
        let e = sym_eig(&lg)?;
        if e.min() <= 0.0 {
            return Err(Error::GraphInfeasible(format!(
                "L+G has a non-positive eigenvalue {:e}",
                e.min()
            )));
        }
        Some(SymmetricSpectrum {
            lambda_underbar: e.min(),
            lambda_max: e.max(),
        })
    } else {
        None
    };
    Ok(GraphAnalysis {
        topology: top.clone(),
        l,
        g,
        lg,
        certificate,
        p,
        f,
        lambda_min_f,
        lambda_max_p,
        symmetric,
    })
}
