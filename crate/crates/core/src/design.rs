//! Gain and trigger-parameter synthesis.
//!
//! Two routes share the same pipeline (Riccati solve, gain, decay margin,
//! tracking bound):
//!
//! * [`synthesize_directed`] works for any topology with a diagonal
//!   stability certificate; the Riccati coupling is `2 theta_min` and the gain
//!   is `K = -(1/alpha) R^{-1} B' Y`.
//! * [`synthesize_undirected`] exploits a symmetric `L+G`; the coupling is
//!   `2 lambda_min(L+G)` and `K = -R^{-1} B' Y`.
//!
//! Inter-event lower bounds depend on the initial Lyapunov value, so they are
//! produced separately by [`zeno_bounds`] once the initial state is known.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::GraphAnalysis;
use crate::matkit::{
    inverse, lambda_max, lambda_min, solve_care_with, solve_linear, sym_eig, CareOptions, Mat,
};
use crate::{Error, Result};

/// Identical linear dynamics shared by the leader and every follower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    pub a: Mat,
    pub b: Mat,
}

impl PlantModel {
    pub fn new(a: Mat, b: Mat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Input(format!("A must be square, got {}x{}", a.rows(), a.cols())));
        }
        if b.rows() != a.rows() {
            return Err(Error::Input(format!(
                "B has {} rows but A is {}x{}",
                b.rows(),
                a.rows(),
                a.cols()
            )));
        }
        Ok(Self { a, b })
    }

    /// Linearized pendulum `m l^2 theta'' = -m g l theta - u` with state
    /// `(theta, theta')`.
    pub fn pendulum(mass: f64, length: f64, gravity: f64) -> Self {
        let a = Mat::from_rows(&[[0.0, 1.0], [-gravity / length, 0.0]]).expect("finite pendulum data");
        let b = Mat::column(&[0.0, -1.0 / (mass * length * length)]);
        Self { a, b }
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn p(&self) -> usize {
        self.b.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Directed,
    Undirected,
}

/// Which eigenvalue of `Q` enters `alpha_1 = lambda(Q) / lambda_max(Y)`.
///
/// `Min` is the value the decay argument needs. `Max` is provided because
/// published parameter tables were computed with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QEigenvalue {
    #[default]
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub q_eigenvalue: QEigenvalue,
    /// Margin subtracted from `lambda_min(L+G)` in the undirected Riccati
    /// coupling, for when only an estimate of that eigenvalue is available.
    pub lambda_margin: f64,
    pub care: CareOptions,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            q_eigenvalue: QEigenvalue::Min,
            lambda_margin: 0.0,
            care: CareOptions::default(),
        }
    }
}

/// Per-agent trigger parameters. `omega` is used by the directed rule only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerParams {
    pub omega: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub nu: Vec<f64>,
    pub gamma: f64,
}

impl TriggerParams {
    pub fn uniform(n: usize, omega: f64, mu: f64, sigma: f64, nu: f64, gamma: f64) -> Self {
        Self {
            omega,
            mu: vec![mu; n],
            sigma: vec![sigma; n],
            nu: vec![nu; n],
            gamma,
        }
    }

    fn check_lengths(&self, n: usize) -> Result<()> {
        for (name, v) in [("mu", &self.mu), ("sigma", &self.sigma), ("nu", &self.nu)] {
            if v.len() != n {
                return Err(Error::Validation(format!("{name} has {} entries for {n} agents", v.len())));
            }
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Validation(format!("gamma = {} must be > 0", self.gamma)));
        }
        for (i, nu) in self.nu.iter().enumerate() {
            if !(*nu > 0.0) {
                return Err(Error::Validation(format!("nu_{} = {nu} must be > 0", i + 1)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub variant: Variant,
    pub graph: Arc<GraphAnalysis>,
    pub plant: PlantModel,
    pub q: Mat,
    pub r: Mat,
    /// Scalar `c` in `Y A + A' Y - c Y B R^{-1} B' Y + Q = 0`.
    pub riccati_coupling: f64,
    pub y: Mat,
    pub k: Mat,
    /// `B K`.
    pub bk: Mat,
    /// `Y B R^{-1} B' Y`.
    pub ybrby: Mat,
    pub params: TriggerParams,
    pub alpha1: f64,
    /// Directed route only.
    pub alpha2: Option<f64>,
    /// Per-agent decay margins (all equal for the undirected route).
    pub rho: Vec<f64>,
    pub rho_min: f64,
    /// `lambda_max(L+G) lambda_max(Y B R^{-1} B' Y)`, undirected route only.
    pub varpi2: Option<f64>,
    /// Guaranteed asymptotic bound on `sum_i ||x_0 - x_i||^2`.
    pub delta: f64,
    pub lambda_min_y: f64,
    pub lambda_max_y: f64,
    pub norm_a: f64,
    pub norm_bk: f64,
}

impl SynthesisResult {
    pub fn n_agents(&self) -> usize {
        self.graph.n()
    }

    /// Relative Riccati residual `||Y A + A'Y - c Y B R^-1 B' Y + Q|| / ||Q||`.
    pub fn riccati_residual(&self) -> f64 {
        riccati_expression(&self.plant, &self.r, &self.q, self.riccati_coupling, &self.y)
            .map(|m| m.norm_fro() / self.q.norm_fro())
            .unwrap_or(f64::INFINITY)
    }

    /// Largest eigenvalue of the Riccati expression, relative to `||Q||`.
    /// Non-positive (up to rounding) means the inequality holds.
    pub fn riccati_excess(&self) -> f64 {
        riccati_expression(&self.plant, &self.r, &self.q, self.riccati_coupling, &self.y)
            .and_then(|m| Ok(lambda_max(&m.symmetrized())?))
            .map(|v| v / self.q.norm_fro())
            .unwrap_or(f64::INFINITY)
    }

    /// `sum_i Delta`-style linear map used by the bound: `Delta / gamma`.
    pub fn delta_per_gamma(&self) -> f64 {
        self.delta / self.params.gamma
    }

    /// Same synthesis with a different `gamma`; every gamma-free quantity is
    /// unchanged.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params.gamma = gamma;
        params.check_lengths(self.n_agents())?;
        let mut out = self.clone();
        out.delta = self.delta * (gamma / self.params.gamma);
        out.params = params;
        Ok(out)
    }
}

fn riccati_expression(plant: &PlantModel, r: &Mat, q: &Mat, c: f64, y: &Mat) -> Result<Mat> {
    Ok(crate::matkit::care_residual(&plant.a, &plant.b, r, q, c, y)?)
}

fn check_weights(plant: &PlantModel, q: &Mat, r: &Mat) -> Result<()> {
    let n = plant.n();
    let p = plant.p();
    if q.rows() != n || q.cols() != n {
        return Err(Error::Input(format!("Q must be {n}x{n}")));
    }
    if r.rows() != p || r.cols() != p {
        return Err(Error::Input(format!("R must be {p}x{p}")));
    }
    for (name, m) in [("Q", q), ("R", r)] {
        if lambda_min(m)? <= 0.0 {
            return Err(Error::Input(format!("{name} must be symmetric positive definite")));
        }
    }
    Ok(())
}

fn solve_y(plant: &PlantModel, q: &Mat, r: &Mat, c: f64, opts: &SynthesisOptions) -> Result<Mat> {
    solve_care_with(&plant.a, &plant.b, r, q, c, &opts.care).map_err(|e| match e {
        crate::MatError::Infeasible(msg) => Error::Infeasible(msg),
        other => Error::Mat(other),
    })
}

struct Common {
    y: Mat,
    rinv_bt_y: Mat,
    ybrby: Mat,
    lambda_min_y: f64,
    lambda_max_y: f64,
    alpha1: f64,
}

fn common(plant: &PlantModel, q: &Mat, r: &Mat, c: f64, opts: &SynthesisOptions) -> Result<Common> {
    let y = solve_y(plant, q, r, c, opts)?;
    let bt_y = &plant.b.transpose() * &y;
    let rinv_bt_y = solve_linear(r, &bt_y)?;
    let ybrby = (&bt_y.transpose() * &rinv_bt_y).symmetrized();
    let ey = sym_eig(&y)?;
    let eq = sym_eig(q)?;
    let q_lambda = match opts.q_eigenvalue {
        QEigenvalue::Min => eq.min(),
        QEigenvalue::Max => eq.max(),
    };
    Ok(Common {
        alpha1: q_lambda / ey.max(),
        lambda_min_y: ey.min(),
        lambda_max_y: ey.max(),
        y,
        rinv_bt_y,
        ybrby,
    })
}

/// Directed-graph design: `Y` from the Riccati equation with coupling
/// `2 theta_min`, `K = -(1/alpha) R^{-1} B' Y`,
/// `rho_i = alpha_1 - mu_i - (omega/alpha) alpha_2`.
pub fn synthesize_directed(
    plant: &PlantModel,
    graph: Arc<GraphAnalysis>,
    q: &Mat,
    r: &Mat,
    params: TriggerParams,
    opts: &SynthesisOptions,
) -> Result<SynthesisResult> {
    check_weights(plant, q, r)?;
    let n_agents = graph.n();
    params.check_lengths(n_agents)?;
    if !(params.omega > 0.0) {
        return Err(Error::Validation(format!("omega = {} must be > 0", params.omega)));
    }
    for (i, mu) in params.mu.iter().enumerate() {
        if !(*mu > 0.0) {
            return Err(Error::Validation(format!("mu_{} = {mu} must be > 0", i + 1)));
        }
    }

    let alpha = graph.alpha();
    let c = 2.0 * graph.theta_min();
    let cm = common(plant, q, r, c, opts)?;
    let k = cm.rinv_bt_y.scale(-1.0 / alpha);
    let lmax_s = lambda_max(&cm.ybrby)?;
    let alpha2 = graph.lambda_max_p * lmax_s * lmax_s / (graph.theta_underbar() * cm.lambda_min_y);
    let rho: Vec<f64> = params
        .mu
        .iter()
        .map(|mu| cm.alpha1 - mu - params.omega / alpha * alpha2)
        .collect();
    for (i, r) in rho.iter().enumerate() {
        if !(*r > 0.0) {
            return Err(Error::Validation(format!(
                "rho_{} = alpha_1 - mu_{} - (omega/alpha) alpha_2 = {r:.6e} must be > 0 \
                 (alpha_1 = {:.6e}, alpha_2 = {alpha2:.6e}, alpha = {alpha:.6e})",
                i + 1,
                i + 1,
                cm.alpha1
            )));
        }
    }
    let rho_min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    check_sigma(&params.sigma, rho_min, "rho_min")?;
    let delta = n_agents as f64 * params.gamma
        / (graph.theta_underbar() * cm.lambda_min_y * graph.lambda_min_f * rho_min);
    finish(
        Variant::Directed,
        plant,
        graph,
        q,
        r,
        c,
        cm,
        k,
        params,
        Some(alpha2),
        rho,
        None,
        delta,
    )
}

/// Undirected-graph design: coupling `2 (lambda_min(L+G) - margin)`,
/// `K = -R^{-1} B' Y`, `rho = (1 - mu_max) alpha_1`.
pub fn synthesize_undirected(
    plant: &PlantModel,
    graph: Arc<GraphAnalysis>,
    q: &Mat,
    r: &Mat,
    params: TriggerParams,
    opts: &SynthesisOptions,
) -> Result<SynthesisResult> {
    check_weights(plant, q, r)?;
    let spectrum = graph.symmetric.ok_or_else(|| {
        Error::VariantMismatch("the undirected design requires a symmetric follower graph".into())
    })?;
    let n_agents = graph.n();
    params.check_lengths(n_agents)?;
    for (i, mu) in params.mu.iter().enumerate() {
        if !(*mu > 0.0 && *mu < 1.0) {
            return Err(Error::Validation(format!("mu_{} = {mu} must lie in (0, 1)", i + 1)));
        }
    }
    let c = undirected_coupling(spectrum.lambda_underbar, opts.lambda_margin)?;
    let cm = common(plant, q, r, c, opts)?;
    let k = cm.rinv_bt_y.scale(-1.0);
    let varpi2 = spectrum.lambda_max * lambda_max(&cm.ybrby)?;
    let mu_max = params.mu.iter().copied().fold(0.0, f64::max);
    let rho_val = (1.0 - mu_max) * cm.alpha1;
    if !(rho_val > 0.0) {
        return Err(Error::Validation(format!("rho = (1 - mu_max) alpha_1 = {rho_val:e} must be > 0")));
    }
    check_sigma(&params.sigma, rho_val, "rho")?;
    let delta = n_agents as f64 * params.gamma / (rho_val * cm.lambda_min_y * graph.lambda_min_f);
    finish(
        Variant::Undirected,
        plant,
        graph,
        q,
        r,
        c,
        cm,
        k,
        params,
        None,
        vec![rho_val; n_agents],
        Some(varpi2),
        delta,
    )
}

fn undirected_coupling(lambda_underbar: f64, margin: f64) -> Result<f64> {
    if !(margin >= 0.0) {
        return Err(Error::Input(format!("eigenvalue margin {margin} must be >= 0")));
    }
    let eff = lambda_underbar - margin;
    if !(eff > 0.0) {
        return Err(Error::Infeasible(format!(
            "eigenvalue margin {margin} exhausts lambda_min(L+G) = {lambda_underbar}"
        )));
    }
    Ok(2.0 * eff)
}

fn check_sigma(sigma: &[f64], bound: f64, name: &str) -> Result<()> {
    for (i, s) in sigma.iter().enumerate() {
        if !(*s > 0.0 && *s < bound) {
            return Err(Error::Validation(format!(
                "sigma_{} = {s} must lie in (0, {name} = {bound:.6e})",
                i + 1
            )));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    variant: Variant,
    plant: &PlantModel,
    graph: Arc<GraphAnalysis>,
    q: &Mat,
    r: &Mat,
    c: f64,
    cm: Common,
    k: Mat,
    params: TriggerParams,
    alpha2: Option<f64>,
    rho: Vec<f64>,
    varpi2: Option<f64>,
    delta: f64,
) -> Result<SynthesisResult> {
    let bk = &plant.b * &k;
    let rho_min = rho.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SynthesisResult {
        variant,
        graph,
        plant: plant.clone(),
        q: q.clone(),
        r: r.clone(),
        riccati_coupling: c,
        norm_a: plant.a.norm_spectral(),
        norm_bk: bk.norm_spectral(),
        y: cm.y,
        k,
        bk,
        ybrby: cm.ybrby,
        params,
        alpha1: cm.alpha1,
        alpha2,
        rho,
        rho_min,
        varpi2,
        delta,
        lambda_min_y: cm.lambda_min_y,
        lambda_max_y: cm.lambda_max_y,
    })
}

/// `Y` for the undirected Riccati equation with coupling
/// `2 (lambda_min(L+G) - rho1)`.
pub fn lambda_margin_care(
    plant: &PlantModel,
    graph: &GraphAnalysis,
    q: &Mat,
    r: &Mat,
    rho1: f64,
    care: &CareOptions,
) -> Result<Mat> {
    check_weights(plant, q, r)?;
    let spectrum = graph.symmetric.ok_or_else(|| {
        Error::VariantMismatch("eigenvalue margin applies to symmetric follower graphs".into())
    })?;
    let c = undirected_coupling(spectrum.lambda_underbar, rho1)?;
    let opts = SynthesisOptions {
        care: care.clone(),
        ..SynthesisOptions::default()
    };
    solve_y(plant, q, r, c, &opts)
}

/// Block matrix `[[A X + X A' - c B R^{-1} B', X], [X, -Q^{-1}]]` with
/// `X = Y^{-1}`; negative semidefinite iff the Riccati inequality holds at `Y`.
pub fn lmi_block(result: &SynthesisResult) -> Result<Mat> {
    let n = result.plant.n();
    let x = inverse(&result.y)?.symmetrized();
    let a = &result.plant.a;
    let b = &result.plant.b;
    let brb = (b * &solve_linear(&result.r, &b.transpose())?).scale(result.riccati_coupling);
    let top_left = &(&(a * &x) + &(&x * &a.transpose())) - &brb;
    let qinv = inverse(&result.q)?.symmetrized();
    let mut block = Mat::zeros(2 * n, 2 * n);
    block.set_block(0, 0, &top_left);
    block.set_block(0, n, &x);
    block.set_block(n, 0, &x);
    block.set_block(n, n, &-&qinv);
    Ok(block.symmetrized())
}

/// Largest eigenvalue of [`lmi_block`], relative to the block's norm.
pub fn lmi_excess(result: &SynthesisResult) -> Result<f64> {
    let block = lmi_block(result)?;
    Ok(lambda_max(&block)? / block.norm_fro())
}

/// Inter-event lower bounds and the constants they depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZenoBounds {
    pub variant: Variant,
    pub initial_v: f64,
    /// `eta_i = ||A|| + (2 d_i + g_i) ||B K||`.
    pub eta: Vec<f64>,
    pub eta_bar: f64,
    /// Directed: Lyapunov ceiling.
    pub kappa: Option<f64>,
    /// Directed: bound on every `||z_i||`.
    pub kappa_bar: Option<f64>,
    /// Directed: uniform lower bound on inter-event times.
    pub t_lower: Option<f64>,
    /// Directed: asymptotic lower bound for the given `delta` margin.
    pub pi_asymptotic: Option<f64>,
    /// Undirected: Lyapunov ceiling.
    pub h: Option<f64>,
    pub hbar: Option<f64>,
    pub t_lower_undirected: Option<f64>,
}

impl ZenoBounds {
    /// The uniform lower bound of the active variant.
    pub fn lower_bound(&self) -> f64 {
        match self.variant {
            Variant::Directed => self.t_lower.unwrap_or(0.0),
            Variant::Undirected => self.t_lower_undirected.unwrap_or(0.0),
        }
    }

    /// The Lyapunov ceiling of the active variant.
    pub fn ceiling(&self) -> f64 {
        match self.variant {
            Variant::Directed => self.kappa.unwrap_or(f64::INFINITY),
            Variant::Undirected => self.h.unwrap_or(f64::INFINITY),
        }
    }
}

/// `(1/a) ln(1 + a x)`, continuous at `a = 0` where it equals `x`.
pub fn log_growth_bound(norm_a: f64, x: f64) -> f64 {
    if norm_a == 0.0 {
        x
    } else {
        (norm_a * x).ln_1p() / norm_a
    }
}

/// Inter-event bounds for a synthesized design.
///
/// `initial_v` is the variant's Lyapunov function at `t = 0`:
/// `z' (Theta^{-1} (x) Y) z` (directed) or `z' (I (x) Y) z` (undirected).
/// `delta` is the margin in the asymptotic bound (directed only).
pub fn zeno_bounds(result: &SynthesisResult, initial_v: f64, delta: f64) -> Result<ZenoBounds> {
    if !(initial_v >= 0.0) {
        return Err(Error::Input(format!("initial Lyapunov value {initial_v} must be >= 0")));
    }
    if !(delta > 0.0) {
        return Err(Error::Input(format!("margin delta = {delta} must be > 0")));
    }
    let g = &result.graph;
    let n = g.n();
    let p = &result.params;
    let eta: Vec<f64> = (0..n)
        .map(|i| {
            let d = g.topology.in_degree(i) as f64;
            result.norm_a + (2.0 * d + g.g_of(i)) * result.norm_bk
        })
        .collect();
    let eta_bar = eta.iter().copied().fold(0.0, f64::max);
    let na = result.norm_a;
    let nf = n as f64;
    let decay_sum = |rho: f64| -> f64 {
        p.nu.iter().zip(&p.sigma).map(|(nu, s)| nu / (rho - s)).sum::<f64>() + nf * p.gamma / rho
    };

    let mut out = ZenoBounds {
        variant: result.variant,
        initial_v,
        eta,
        eta_bar,
        kappa: None,
        kappa_bar: None,
        t_lower: None,
        pi_asymptotic: None,
        h: None,
        hbar: None,
        t_lower_undirected: None,
    };
    match result.variant {
        Variant::Directed => {
            let alpha = g.alpha();
            let tub = g.theta_underbar();
            let kappa = initial_v + decay_sum(result.rho_min);
            let kappa_bar = (kappa / (tub * result.lambda_min_y)).sqrt();
            let x = (alpha * p.omega * p.gamma).sqrt() / (eta_bar * kappa_bar);
            let x_pi = (alpha * p.omega * tub * result.lambda_min_y * result.rho_min).sqrt()
                / (eta_bar * (1.0 + delta) * nf.sqrt());
            out.kappa = Some(kappa);
            out.kappa_bar = Some(kappa_bar);
            out.t_lower = Some(log_growth_bound(na, x));
            out.pi_asymptotic = Some(log_growth_bound(na, x_pi));
        }
        Variant::Undirected => {
            let varpi2 = result.varpi2.expect("undirected synthesis carries varpi2");
            let h = initial_v + decay_sum(result.rho_min);
            let hbar = (h / result.lambda_min_y).sqrt();
            let x = p.gamma / (2.0 * varpi2 * eta_bar * hbar * hbar);
            out.h = Some(h);
            out.hbar = Some(hbar);
            out.t_lower_undirected = Some(log_growth_bound(na, x));
        }
    }
    Ok(out)
}

/// Default trigger parameters following the usual selection order: solve
/// the Riccati equation, pick `mu`, then `omega` (directed), `sigma`, `gamma`
/// from the desired tracking bound, and finally `nu`.
pub fn suggest_params(
    plant: &PlantModel,
    graph: &GraphAnalysis,
    q: &Mat,
    r: &Mat,
    variant: Variant,
    desired_delta: f64,
    opts: &SynthesisOptions,
) -> Result<TriggerParams> {
    check_weights(plant, q, r)?;
    if !(desired_delta > 0.0) {
        return Err(Error::Input(format!("desired bound {desired_delta} must be > 0")));
    }
    let n = graph.n();
    let nf = n as f64;
    match variant {
        Variant::Directed => {
            let cm = common(plant, q, r, 2.0 * graph.theta_min(), opts)?;
            let lmax_s = lambda_max(&cm.ybrby)?;
            let alpha2 = graph.lambda_max_p * lmax_s * lmax_s / (graph.theta_underbar() * cm.lambda_min_y);
            let mu = 0.1 * cm.alpha1;
            // rho_i = alpha_1 - mu - (omega/alpha) alpha_2 = alpha_1 / 2
            let omega = 0.4 * cm.alpha1 * graph.alpha() / alpha2;
            let rho_min = 0.5 * cm.alpha1;
            let gamma = desired_delta * graph.theta_underbar() * cm.lambda_min_y * graph.lambda_min_f * rho_min / nf;
            Ok(TriggerParams::uniform(n, omega, mu, 0.5 * rho_min, 1.0, gamma))
        }
        Variant::Undirected => {
            let spectrum = graph.symmetric.ok_or_else(|| {
                Error::VariantMismatch("the undirected design requires a symmetric follower graph".into())
            })?;
            let c = undirected_coupling(spectrum.lambda_underbar, opts.lambda_margin)?;
            let cm = common(plant, q, r, c, opts)?;
            let mu = 0.1;
            let rho = (1.0 - mu) * cm.alpha1;
            let gamma = desired_delta * rho * cm.lambda_min_y * graph.lambda_min_f / nf;
            Ok(TriggerParams::uniform(n, 0.0, mu, 0.5 * rho, 1.0, gamma))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{analyze, Topology};

    fn two_agent_directed() -> Arc<GraphAnalysis> {
        Arc::new(analyze(&Topology::chain(2, true, &[0]).unwrap()).unwrap())
    }

    #[test]
    fn log_growth_limit_at_zero_norm() {
        assert_eq!(log_growth_bound(0.0, 0.3), 0.3);
        let near = log_growth_bound(1e-12, 0.3);
        assert!((near - 0.3).abs() < 1e-12);
        assert!(log_growth_bound(2.0, 0.3) < 0.3);
    }

    #[test]
    fn undirected_route_rejects_directed_graph() {
        let plant = PlantModel::pendulum(1.0, 1.0, 9.8);
        let q = Mat::identity(2);
        let r = Mat::scalar(1.0);
        let err = synthesize_undirected(
            &plant,
            two_agent_directed(),
            &q,
            &r,
            TriggerParams::uniform(2, 0.0, 0.1, 0.01, 1.0, 1e-3),
            &SynthesisOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::VariantMismatch(_)));
    }

    #[test]
    fn suggested_params_validate() {
        let plant = PlantModel::pendulum(1.0, 1.0, 9.8);
        let q = Mat::identity(2);
        let r = Mat::scalar(1.0);
        let graph = two_agent_directed();
        let opts = SynthesisOptions::default();
        let p = suggest_params(&plant, &graph, &q, &r, Variant::Directed, 0.01, &opts).unwrap();
        let res = synthesize_directed(&plant, graph, &q, &r, p, &opts).unwrap();
        assert!((res.delta - 0.01).abs() < 1e-9);
        for rho in &res.rho {
            assert!((rho - 0.5 * res.alpha1).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_lengths_checked() {
        let plant = PlantModel::pendulum(1.0, 1.0, 9.8);
        let mut p = TriggerParams::uniform(2, 1e-3, 0.01, 0.001, 1.0, 1e-3);
        p.nu.pop();
        let err = synthesize_directed(
            &plant,
            two_agent_directed(),
            &Mat::identity(2),
            &Mat::scalar(1.0),
            p,
            &SynthesisOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
