//! Bundled 20-pendulum scenarios.
//!
//! All three share the plant (`m = l = 1`, `g = 9.8`), `Q`, the chain graph
//! pinned at agents 1, 8, 12, 15, and a seeded random start. They differ in
//! graph direction, `R`, the design route and the trigger parameters. For
//! the directed route the tabulated `alpha` is realized by scaling an
//! identity-shaped certificate.

use evtrack::design::QEigenvalue;
use evtrack::engine::Mode;
use evtrack::graph::ThetaChoice;

use crate::config::{
    ChainSpec, GraphSpec, InitialSpec, Outputs, PerAgent, PlantSpec, ScenarioConfig, TriggerSpec, VariantSpec,
    Weights,
};

pub const NAMES: [&str; 3] = ["sim1", "sim2", "sim3"];
pub const DEFAULT_SEED: u64 = 42;
pub const PINNED: [usize; 4] = [1, 8, 12, 15];

fn base(name: &str, directed: bool, r: f64, variant: VariantSpec, trigger: TriggerSpec) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        plant: PlantSpec {
            a: vec![vec![0.0, 1.0], vec![-9.8, 0.0]],
            b: vec![vec![0.0], vec![-1.0]],
        },
        graph: GraphSpec::Chain {
            chain: ChainSpec {
                n: 20,
                pinned: PINNED.to_vec(),
                directed,
            },
        },
        weights: Weights {
            q: vec![vec![10.59, 0.42], vec![0.42, 1.05]],
            r: vec![vec![r]],
        },
        trigger,
        variant,
        theta: ThetaChoice::Auto,
        q_eigenvalue: QEigenvalue::Max,
        lambda_margin: 0.0,
        initial: InitialSpec::Random {
            seed: DEFAULT_SEED,
            bounds: vec![[-1.0, 1.0], [-1.0, 1.0]],
            leader: vec![0.5, 0.0],
        },
        horizon: 20.0,
        dt_base: 1e-4,
        sample_rate: 1000.0,
        windows: vec![[0.0, 20.0], [18.0, 20.0]],
        mode: Mode::Distributed,
        outputs: Outputs::default(),
    }
}

fn trigger(omega: Option<f64>, mu: f64, sigma: f64, nu: f64, gamma: f64) -> TriggerSpec {
    TriggerSpec {
        omega,
        mu: PerAgent::Scalar(mu),
        sigma: PerAgent::Scalar(sigma),
        nu: PerAgent::Scalar(nu),
        gamma,
    }
}

/// Directed design on the one-way chain.
pub fn sim1() -> ScenarioConfig {
    let mut cfg = base(
        "sim1",
        true,
        1.1394,
        VariantSpec::Directed,
        trigger(Some(0.001), 0.1, 0.5025, 2.5, 2.9769e-5),
    );
    cfg.theta = alpha_scaled(0.0877);
    cfg
}

/// Identity-shaped certificate scaled to the tabulated `alpha`.
fn alpha_scaled(alpha: f64) -> ThetaChoice {
    ThetaChoice::Scaled {
        shape: Box::new(ThetaChoice::Identity),
        alpha,
    }
}

/// Undirected design on the two-way chain.
pub fn sim2() -> ScenarioConfig {
    // sigma must stay below rho = 0.71955
    base(
        "sim2",
        false,
        0.1,
        VariantSpec::Undirected,
        trigger(None, 0.1, 0.7195, 2.0, 7.9990e-6),
    )
}

/// Directed design applied to the two-way chain.
pub fn sim3() -> ScenarioConfig {
    let mut cfg = base(
        "sim3",
        false,
        1.5405,
        VariantSpec::UndirectedViaDirected,
        trigger(Some(0.001), 0.1, 0.3007, 1.2, 3.1507e-6),
    );
    cfg.theta = alpha_scaled(0.0649);
    cfg
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    match name {
        "sim1" => Some(sim1()),
        "sim2" => Some(sim2()),
        "sim3" => Some(sim3()),
        _ => None,
    }
}
