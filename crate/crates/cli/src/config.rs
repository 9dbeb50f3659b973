//! Scenario files: JSON with row-major nested arrays for matrices and
//! 1-based agent ids.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use evtrack::design::{
    synthesize_directed, synthesize_undirected, PlantModel, QEigenvalue, SynthesisOptions, SynthesisResult,
    TriggerParams,
};
use evtrack::engine::{InitialConditions, Mode, RunConfig};
use evtrack::graph::{analyze_with, ThetaChoice, Topology};
use evtrack::Mat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub plant: PlantSpec,
    pub graph: GraphSpec,
    pub weights: Weights,
    pub trigger: TriggerSpec,
    pub variant: VariantSpec,
    #[serde(default)]
    pub theta: ThetaChoice,
    #[serde(default)]
    pub q_eigenvalue: QEigenvalue,
    #[serde(default)]
    pub lambda_margin: f64,
    pub initial: InitialSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt_base: f64,
    /// Time-series sampling rate in Hz.
    #[serde(default = "default_rate")]
    pub sample_rate: f64,
    #[serde(default)]
    pub windows: Vec<[f64; 2]>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_name() -> String {
    "scenario".into()
}
fn default_horizon() -> f64 {
    20.0
}
fn default_dt() -> f64 {
    1e-4
}
fn default_rate() -> f64 {
    1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

/// A follower graph: `"chain(20, pinned=[1,8], directed=true)"`, a chain
/// object, or an explicit edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Text(String),
    Chain { chain: ChainSpec },
    Edges(EdgeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub n: usize,
    pub pinned: Vec<usize>,
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub n: usize,
    /// `[from, to]`: `to` receives from `from`.
    pub edges: Vec<[usize; 2]>,
    pub pinned: Vec<usize>,
    pub directed: bool,
}

/// Either one value for every agent or one value per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerAgent {
    fn expand(&self, n: usize, name: &str) -> anyhow::Result<Vec<f64>> {
        match self {
            PerAgent::Scalar(v) => Ok(vec![*v; n]),
            PerAgent::List(v) if v.len() == n => Ok(v.clone()),
            PerAgent::List(v) => bail!("trigger.{name} has {} entries for {n} agents", v.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSpec {
    /// Required by the directed rule only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub mu: PerAgent,
    pub sigma: PerAgent,
    pub nu: PerAgent,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantSpec {
    Directed,
    Undirected,
    /// Directed-graph design applied to a symmetric graph.
    UndirectedViaDirected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Explicit {
        leader: Vec<f64>,
        followers: Vec<Vec<f64>>,
    },
    /// Followers drawn uniformly from `box` (one `[lo, hi]` per state
    /// component), leader fixed.
    Random {
        seed: u64,
        #[serde(rename = "box")]
        bounds: Vec<[f64; 2]>,
        leader: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_timeseries")]
    pub timeseries: String,
    #[serde(default = "default_events")]
    pub events: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

fn default_timeseries() -> String {
    "timeseries.csv".into()
}
fn default_events() -> String {
    "events.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            timeseries: default_timeseries(),
            events: default_events(),
            summary: default_summary(),
        }
    }
}

fn matrix(rows: &[Vec<f64>], name: &str) -> anyhow::Result<Mat> {
    Mat::from_rows(rows).with_context(|| format!("{name} is not a valid matrix"))
}

fn one_based(ids: &[usize], n: usize, what: &str) -> anyhow::Result<Vec<usize>> {
    ids.iter()
        .map(|&id| {
            if id == 0 || id > n {
                Err(anyhow!("{what} id {id} is outside 1..={n}"))
            } else {
                Ok(id - 1)
            }
        })
        .collect()
}

/// Parses `chain(N, pinned=[..], directed=true|false)`.
fn parse_chain(text: &str) -> anyhow::Result<ChainSpec> {
    let bad = || anyhow!("graph string {text:?} is not of the form chain(N, pinned=[..], directed=bool)");
    let inner = text
        .trim()
        .strip_prefix("chain(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(bad)?;
    let (n_part, rest) = inner.split_once(',').ok_or_else(bad)?;
    let n: usize = n_part.trim().parse().map_err(|_| bad())?;
    let rest = rest.trim();
    let rest = rest.strip_prefix("pinned").ok_or_else(bad)?.trim_start();
    let rest = rest.strip_prefix('=').ok_or_else(bad)?.trim_start();
    let rest = rest.strip_prefix('[').ok_or_else(bad)?;
    let (list, rest) = rest.split_once(']').ok_or_else(bad)?;
    let pinned = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let rest = rest.trim().strip_prefix(',').ok_or_else(bad)?.trim();
    let rest = rest.strip_prefix("directed").ok_or_else(bad)?.trim_start();
    let value = rest.strip_prefix('=').ok_or_else(bad)?.trim();
    let directed = match value {
        "true" => true,
        "false" => false,
        _ => return Err(bad()),
    };
    Ok(ChainSpec { n, pinned, directed })
}

impl GraphSpec {
    pub fn topology(&self) -> anyhow::Result<Topology> {
        let chain = |c: &ChainSpec| -> anyhow::Result<Topology> {
            let pinned = one_based(&c.pinned, c.n, "pinned")?;
            Ok(Topology::chain(c.n, c.directed, &pinned)?)
        };
        match self {
            GraphSpec::Text(s) => chain(&parse_chain(s)?),
            GraphSpec::Chain { chain: c } => chain(c),
            GraphSpec::Edges(e) => {
                let pinned = one_based(&e.pinned, e.n, "pinned")?;
                let mut edges = Vec::with_capacity(e.edges.len());
                for [from, to] in &e.edges {
                    let ids = one_based(&[*from, *to], e.n, "edge endpoint")?;
                    edges.push((ids[0], ids[1]));
                }
                Ok(Topology::from_edges(e.n, e.directed, &edges, &pinned)?)
            }
        }
    }
}

/// Everything needed to run a scenario, derived from a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub design: SynthesisResult,
    pub initial: InitialConditions,
    pub run: RunConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            anyhow!("config schema error at line {}, column {}: {e}", e.line(), e.column())
        })?;
        Ok(cfg.with_defaults())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fills defaults that depend on other fields.
    pub fn with_defaults(mut self) -> Self {
        if self.windows.is_empty() {
            self.windows = vec![[0.0, self.horizon]];
        }
        self
    }

    pub fn plant(&self) -> anyhow::Result<PlantModel> {
        Ok(PlantModel::new(matrix(&self.plant.a, "plant.a")?, matrix(&self.plant.b, "plant.b")?)?)
    }

    pub fn params(&self, n: usize, directed: bool) -> anyhow::Result<TriggerParams> {
        let t = &self.trigger;
        let omega = match (directed, t.omega) {
            (true, Some(w)) => w,
            (true, None) => bail!("trigger.omega is required by the directed design"),
            (false, w) => w.unwrap_or(0.0),
        };
        Ok(TriggerParams {
            omega,
            mu: t.mu.expand(n, "mu")?,
            sigma: t.sigma.expand(n, "sigma")?,
            nu: t.nu.expand(n, "nu")?,
            gamma: t.gamma,
        })
    }

    pub fn synthesis_options(&self) -> SynthesisOptions {
        SynthesisOptions {
            q_eigenvalue: self.q_eigenvalue,
            lambda_margin: self.lambda_margin,
            ..SynthesisOptions::default()
        }
    }

    pub fn design(&self) -> anyhow::Result<SynthesisResult> {
        let plant = self.plant()?;
        let top = self.graph.topology()?;
        if self.variant == VariantSpec::UndirectedViaDirected && !top.is_symmetric() {
            bail!("variant undirected-via-directed needs a symmetric graph");
        }
        let graph = Arc::new(analyze_with(&top, &self.theta)?);
        let q = matrix(&self.weights.q, "weights.q")?;
        let r = matrix(&self.weights.r, "weights.r")?;
        let opts = self.synthesis_options();
        let n = top.len();
        let res = match self.variant {
            VariantSpec::Directed | VariantSpec::UndirectedViaDirected => {
                synthesize_directed(&plant, graph, &q, &r, self.params(n, true)?, &opts)?
            }
            VariantSpec::Undirected => synthesize_undirected(&plant, graph, &q, &r, self.params(n, false)?, &opts)?,
        };
        Ok(res)
    }

    pub fn initial_conditions(&self, n_agents: usize, dim: usize) -> anyhow::Result<InitialConditions> {
        match &self.initial {
            InitialSpec::Explicit { leader, followers } => Ok(InitialConditions {
                leader: leader.clone(),
                followers: followers.clone(),
            }),
            InitialSpec::Random { seed, bounds, leader } => {
                if bounds.len() != dim {
                    bail!("initial.box has {} ranges for state dimension {dim}", bounds.len());
                }
                if let Some([lo, hi]) = bounds.iter().find(|[lo, hi]| !(lo <= hi)) {
                    bail!("initial.box range [{lo}, {hi}] is empty");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let followers = (0..n_agents)
                    .map(|_| {
                        bounds
                            .iter()
                            .map(|[lo, hi]| if lo == hi { *lo } else { rng.gen_range(*lo..*hi) })
                            .collect()
                    })
                    .collect();
                Ok(InitialConditions {
                    leader: leader.clone(),
                    followers,
                })
            }
        }
    }

    pub fn run_config(&self) -> anyhow::Result<RunConfig> {
        if !(self.sample_rate > 0.0) {
            bail!("sample_rate must be > 0");
        }
        Ok(RunConfig {
            horizon: self.horizon,
            dt_base: self.dt_base,
            sample_period: 1.0 / self.sample_rate,
            windows: self.windows.iter().map(|w| (w[0], w[1])).collect(),
            mode: self.mode,
            ..RunConfig::default()
        })
    }

    pub fn set_seed(&mut self, new_seed: u64) {
        if let InitialSpec::Random { seed, .. } = &mut self.initial {
            *seed = new_seed;
        }
    }

    pub fn scenario(&self) -> anyhow::Result<Scenario> {
        let design = self.design()?;
        let initial = self.initial_conditions(design.n_agents(), design.plant.n())?;
        let run = self.run_config()?;
        Ok(Scenario {
            config: self.clone(),
            design,
            initial,
            run,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_string_parses() {
        let c = parse_chain("chain(20, pinned=[1, 8,12,15], directed=true)").unwrap();
        assert_eq!(c, ChainSpec { n: 20, pinned: vec![1, 8, 12, 15], directed: true });
        assert!(parse_chain("ring(3)").is_err());
        assert!(parse_chain("chain(3, pinned=[1], directed=maybe)").is_err());
    }

    #[test]
    fn per_agent_expansion() {
        assert_eq!(PerAgent::Scalar(0.5).expand(3, "mu").unwrap(), vec![0.5; 3]);
        assert!(PerAgent::List(vec![1.0]).expand(2, "mu").is_err());
    }
}
