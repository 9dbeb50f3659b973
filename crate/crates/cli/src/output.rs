use std::io::Write;

use serde::{Deserialize, Serialize};

use evtrack::design::{SynthesisResult, TriggerParams, Variant, ZenoBounds};
use evtrack::engine::{EventRecord, Mode, RunChecks, RunReport, Sample, WindowMetrics};
use evtrack::graph::CertificateMethod;
use evtrack::Mat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub variant: Variant,
    pub k: Mat,
    pub y: Mat,
    pub theta: Vec<f64>,
    pub theta_method: CertificateMethod,
    pub alpha: f64,
    pub alpha1: f64,
    pub alpha2: Option<f64>,
    pub rho_min: f64,
    pub varpi2: Option<f64>,
    pub delta: f64,
    pub riccati_residual: f64,
    pub params: TriggerParams,
}

impl DesignSummary {
    pub fn new(d: &SynthesisResult) -> Self {
        Self {
            variant: d.variant,
            k: d.k.clone(),
            y: d.y.clone(),
            theta: d.graph.theta().to_vec(),
            theta_method: d.graph.certificate.method,
            alpha: d.graph.alpha(),
            alpha1: d.alpha1,
            alpha2: d.alpha2,
            rho_min: d.rho_min,
            varpi2: d.varpi2,
            delta: d.delta,
            riccati_residual: d.riccati_residual(),
            params: d.params.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub horizon: f64,
    pub initial_v: f64,
    pub bounds: ZenoBounds,
    pub windows: Vec<WindowMetrics>,
    pub total_events: usize,
    pub min_interval: Option<f64>,
    pub max_recon_err: Option<f64>,
    pub max_closed_form_err: Option<f64>,
    pub max_trigger_ratio: f64,
    pub trigger_violations: usize,
    pub max_lyapunov: f64,
    pub lyapunov_violations: usize,
    pub checks: RunChecks,
}

impl RunSummary {
    pub fn new(r: &RunReport) -> Self {
        Self {
            mode: r.mode,
            horizon: r.horizon,
            initial_v: r.initial_v,
            bounds: r.bounds.clone(),
            windows: r.windows.clone(),
            total_events: r.total_events,
            min_interval: r.min_interval,
            max_recon_err: r.max_recon_err,
            max_closed_form_err: r.max_closed_form_err,
            max_trigger_ratio: r.max_trigger_ratio,
            trigger_violations: r.trigger_violations,
            max_lyapunov: r.max_lyapunov,
            lyapunov_violations: r.lyapunov_violations,
            checks: r.checks.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOutput {
    pub name: String,
    pub design: DesignSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSummary>,
}

impl SummaryOutput {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn fmt(v: f64) -> String {
    // Display gives the shortest representation that round-trips
    format!("{v}")
}

/// `t`, then `eps_i, z_i, s_i, recon_err_i` per agent (1-based).
pub fn write_timeseries<W: Write>(w: W, samples: &[Sample], n_agents: usize) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    for i in 1..=n_agents {
        for col in ["eps", "z", "s", "recon_err"] {
            header.push(format!("{col}_{i}"));
        }
    }
    out.write_record(&header)?;
    for s in samples {
        let mut row = Vec::with_capacity(header.len());
        row.push(fmt(s.t));
        for i in 0..n_agents {
            row.push(fmt(s.eps[i]));
            row.push(fmt(s.z[i]));
            row.push(fmt(s.s[i]));
            row.push(s.recon_err.as_ref().map(|r| fmt(r[i])).unwrap_or_default());
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `t, agent` (1-based), then the broadcast vector.
pub fn write_events<W: Write>(w: W, events: &[EventRecord], dim: usize) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string(), "agent".to_string()];
    header.extend((1..=dim).map(|k| format!("z{k}")));
    out.write_record(&header)?;
    for e in events {
        let mut row = vec![fmt(e.time), (e.agent + 1).to_string()];
        row.extend(e.z_broadcast.iter().map(|v| fmt(*v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$e}")).unwrap_or_else(|| "-".into())
}

/// Plain-text table of one or more summaries.
pub fn render_table(summaries: &[SummaryOutput]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:<10} {:<11} {:>22} {:>9} {:>9} {:>10} {:>10} {:>10} {:>8} {:>10}\n",
        "scenario", "variant", "K", "alpha", "Delta", "J(last)", "t_min", "t_lower", "events", "checks"
    ));
    for o in summaries {
        let d = &o.design;
        let k: Vec<String> = d.k.as_slice().iter().map(|v| format!("{v:.3}")).collect();
        let variant = match d.variant {
            Variant::Directed => "directed",
            Variant::Undirected => "undirected",
        };
        let (j, tmin, tlow, ev, checks) = match &o.run {
            Some(r) => (
                opt(r.windows.last().map(|w| w.j), 2),
                opt(r.min_interval, 2),
                opt(Some(r.bounds.lower_bound()), 2),
                r.total_events.to_string(),
                if r.checks.all_pass() { "pass" } else { "FAIL" }.to_string(),
            ),
            None => ("-".into(), "-".into(), "-".into(), "-".into(), "-".into()),
        };
        s.push_str(&format!(
            "{:<10} {:<11} {:>22} {:>9.4} {:>9.4} {:>10} {:>10} {:>10} {:>8} {:>10}\n",
            o.name,
            variant,
            format!("[{}]", k.join(", ")),
            d.alpha,
            d.delta,
            j,
            tmin,
            tlow,
            ev,
            checks
        ));
    }
    s
}
