//! Event-driven closed-loop simulation.
//!
//! Between events every signal is the response of an LTI system to a
//! constant input, so the simulator advances exactly with `(E, Psi)` pairs
//! on a uniform base grid and bisects trigger crossings inside a step.
//!
//! Agents only ever see their own state, their held combinational state and
//! the broadcasts in their inbox. Each agent's `z_i` obeys
//! `z_i' = A z_i + B K c_i` with `c_i = (d_i + g_i) zhat_i - sum_j zhat_j`,
//! which is piecewise constant and changes only at broadcasts, so the local
//! reconstruction is exact. [`SimState::reconstruct_z`] evaluates the same
//! quantity in closed form from the inbox and is used as a cross-check.

use serde::{Deserialize, Serialize};

use crate::design::{zeno_bounds, SynthesisResult, Variant, ZenoBounds};
use crate::matkit::{dot, norm2, step_pair, sub_vec, Mat, StepPair};
use crate::{Error, Result};

/// Where the triggers take `z_i` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Local reconstruction from broadcasts only.
    #[default]
    Distributed,
    /// Direct evaluation from true global states; no reconstruction.
    Omniscient,
    /// Distributed, with every sample compared against the omniscient value.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon: f64,
    pub dt_base: f64,
    /// Must be an integer multiple of `dt_base`.
    pub sample_period: f64,
    pub windows: Vec<(f64, f64)>,
    pub mode: Mode,
    pub bisection_tol: f64,
    /// Margin used for the asymptotic inter-event bound.
    pub zeno_delta: f64,
    pub max_events: usize,
    pub min_event_gap: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            dt_base: 1e-4,
            sample_period: 1e-3,
            windows: vec![(0.0, 20.0), (18.0, 20.0)],
            mode: Mode::Distributed,
            bisection_tol: 1e-9,
            zeno_delta: 0.1,
            max_events: 1_000_000,
            min_event_gap: 1e-12,
        }
    }
}

impl RunConfig {
    fn grid(&self) -> Result<(usize, usize)> {
        if !(self.dt_base > 0.0) || !self.dt_base.is_finite() {
            return Err(Error::Input(format!("dt_base = {} must be > 0", self.dt_base)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::Input(format!("horizon = {} must be >= 0", self.horizon)));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(Error::Input("bisection tolerance must be > 0".into()));
        }
        let ratio = self.horizon / self.dt_base;
        let steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        };
        let stride = self.sample_period / self.dt_base;
        if !(stride >= 1.0 - 1e-9) || (stride - stride.round()).abs() > 1e-6 {
            return Err(Error::Input(format!(
                "sample period {} is not a positive integer multiple of dt_base {}",
                self.sample_period, self.dt_base
            )));
        }
        for &(a, b) in &self.windows {
            if !(a >= 0.0 && a <= b && b <= self.horizon) {
                return Err(Error::Input(format!(
                    "window [{a}, {b}] must lie within [0, {}]",
                    self.horizon
                )));
            }
        }
        Ok((steps, stride.round() as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub leader: Vec<f64>,
    pub followers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderRuntime {
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Broadcast {
    pub sender: usize,
    pub time: f64,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRuntime {
    pub id: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub z_held: Vec<f64>,
    /// Locally reconstructed `z_i(t)` (equal to the true value in omniscient
    /// mode, where it is not used).
    pub z_recon: Vec<f64>,
    pub t_last_event: f64,
    pub event_count: usize,
    /// Broadcasts from neighbors; pruned at own events to the latest value
    /// per neighbor.
    pub inbox: Vec<Broadcast>,
    /// Latest received value per neighbor, in `Topology::neighbors` order.
    neighbor_held: Vec<Vec<f64>>,
    /// `B u`.
    bu: Vec<f64>,
    /// `B K c_i`, the constant forcing term of the `z_i` dynamics.
    drive: Vec<f64>,
}

impl AgentRuntime {
    pub fn s(&self) -> Vec<f64> {
        sub_vec(&self.z_held, &self.z_recon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub agent: usize,
    /// 0 for the initialization broadcast.
    pub index: usize,
    pub z_broadcast: Vec<f64>,
    pub recipients: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SimState<'a> {
    design: &'a SynthesisResult,
    mode: Mode,
    t: f64,
    pub leader: LeaderRuntime,
    pub agents: Vec<AgentRuntime>,
    pub events: Vec<EventRecord>,
    recipients: Vec<Vec<usize>>,
    /// Largest closed-form vs incremental reconstruction gap seen at events.
    closed_form_err: f64,
}

fn mul_add(m: &Mat, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o += dot(m.row(i), v);
    }
}

fn affine(pair: &StepPair, x: &[f64], forcing: &[f64]) -> Vec<f64> {
    let mut out = pair.e.mul_vec(x);
    mul_add(&pair.psi, forcing, &mut out);
    out
}

impl<'a> SimState<'a> {
    /// Initialization: agents exchange `x(0)`, compute and broadcast
    /// `z_i(0)`, and start with `s_i = 0`, `u_i = -K z_i(0)`.
    pub fn init(design: &'a SynthesisResult, ic: &InitialConditions, mode: Mode) -> Result<Self> {
        let n = design.plant.n();
        let top = &design.graph.topology;
        let count = top.len();
        if ic.leader.len() != n {
            return Err(Error::Input(format!("leader state has {} entries, expected {n}", ic.leader.len())));
        }
        if ic.followers.len() != count {
            return Err(Error::Input(format!(
                "{} follower states given for {count} agents",
                ic.followers.len()
            )));
        }
        for (i, x) in ic.followers.iter().enumerate() {
            if x.len() != n {
                return Err(Error::Input(format!("follower {} state has {} entries, expected {n}", i + 1, x.len())));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("follower {} state is not finite", i + 1)));
            }
        }
        if ic.leader.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("leader state is not finite".into()));
        }

        let recipients: Vec<Vec<usize>> = (0..count).map(|i| top.recipients(i)).collect();
        let agents = (0..count)
            .map(|i| AgentRuntime {
                id: i,
                x: ic.followers[i].clone(),
                u: vec![0.0; design.plant.p()],
                z_held: vec![0.0; n],
                z_recon: vec![0.0; n],
                t_last_event: 0.0,
                event_count: 0,
                inbox: Vec::new(),
                neighbor_held: vec![vec![0.0; n]; top.neighbors(i).len()],
                bu: vec![0.0; n],
                drive: vec![0.0; n],
            })
            .collect();
        let mut st = Self {
            design,
            mode,
            t: 0.0,
            leader: LeaderRuntime { x0: ic.leader.clone() },
            agents,
            events: Vec::new(),
            recipients,
            closed_form_err: 0.0,
        };
        let z0: Vec<Vec<f64>> = (0..count).map(|i| st.omniscient_z(i)).collect();
        for (i, z) in z0.into_iter().enumerate() {
            let ag = &mut st.agents[i];
            ag.z_recon = z.clone();
            ag.z_held = z;
        }
        for i in 0..count {
            st.set_input(i);
            st.broadcast(i);
        }
        for i in 0..count {
            st.refresh_drive(i);
        }
        Ok(st)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn design(&self) -> &SynthesisResult {
        self.design
    }

    fn set_input(&mut self, i: usize) {
        let d = self.design;
        let ag = &mut self.agents[i];
        ag.u = d.k.mul_vec(&ag.z_held).iter().map(|v| -v).collect();
        ag.bu = d.plant.b.mul_vec(&ag.u);
    }

    fn broadcast(&mut self, i: usize) {
        let value = self.agents[i].z_held.clone();
        let t = self.t;
        let index = self.agents[i].event_count;
        let recips = self.recipients[i].clone();
        for &r in &recips {
            let pos = self.design.graph.topology.neighbors(r).binary_search(&i).expect("recipient lists sender as neighbor");
            let ag = &mut self.agents[r];
            ag.inbox.push(Broadcast { sender: i, time: t, value: value.clone() });
            ag.neighbor_held[pos] = value.clone();
        }
        self.events.push(EventRecord { time: t, agent: i, index, z_broadcast: value, recipients: recips });
    }

    /// `c_i = (d_i + g_i) zhat_i - sum_j zhat_j` from the agent's own data.
    fn forcing_vector(&self, i: usize, held: &[f64], neighbors: &[Vec<f64>]) -> Vec<f64> {
        let w = neighbors.len() as f64 + self.design.graph.g_of(i);
        let mut c: Vec<f64> = held.iter().map(|v| w * v).collect();
        for zj in neighbors {
            for (ck, v) in c.iter_mut().zip(zj) {
                *ck -= v;
            }
        }
        c
    }

    fn refresh_drive(&mut self, i: usize) {
        let ag = &self.agents[i];
        let c = self.forcing_vector(i, &ag.z_held, &ag.neighbor_held);
        self.agents[i].drive = self.design.bk.mul_vec(&c);
    }

    /// Eq. (3) on true states.
    pub fn omniscient_z(&self, i: usize) -> Vec<f64> {
        let top = &self.design.graph.topology;
        let xi = &self.agents[i].x;
        let mut z = vec![0.0; xi.len()];
        for &j in top.neighbors(i) {
            for (zk, (a, b)) in z.iter_mut().zip(self.agents[j].x.iter().zip(xi)) {
                *zk += a - b;
            }
        }
        let g = self.design.graph.g_of(i);
        if g != 0.0 {
            for (zk, (a, b)) in z.iter_mut().zip(self.leader.x0.iter().zip(xi)) {
                *zk += g * (a - b);
            }
        }
        z
    }

    /// `z_i` as used by agent `i`'s trigger under the current mode.
    pub fn working_z(&self, i: usize) -> Vec<f64> {
        match self.mode {
            Mode::Omniscient => self.omniscient_z(i),
            _ => self.agents[i].z_recon.clone(),
        }
    }

    /// Closed-form reconstruction of `z_i` at the current time from
    /// `z_i(t_k)` and the inbox: `E(t - t_k) z_i(t_k)` plus, for every
    /// interval `[a, b)` on which the neighbors' held values are constant,
    /// `(Psi(t - a) - Psi(t - b)) B K c`.
    pub fn reconstruct_z(&self, i: usize) -> Result<Vec<f64>> {
        let d = self.design;
        let a_mat = &d.plant.a;
        let ag = &self.agents[i];
        let tk = ag.t_last_event;
        let t = self.t;
        let nbrs = d.graph.topology.neighbors(i);

        let mut cuts = vec![tk];
        for b in &ag.inbox {
            if b.time > tk && b.time < t && *cuts.last().unwrap() != b.time {
                cuts.push(b.time);
            }
        }
        cuts.push(t);

        let base = step_pair(a_mat, t - tk)?;
        let mut z = base.e.mul_vec(&ag.z_held);
        let mut psi_from = base.psi;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let held: Vec<Vec<f64>> = nbrs
                .iter()
                .map(|&j| {
                    ag.inbox
                        .iter()
                        .rev()
                        .find(|m| m.sender == j && m.time <= a)
                        .map(|m| m.value.clone())
                        .ok_or_else(|| {
                            Error::Protocol(format!(
                                "agent {} has no broadcast from neighbor {} at or before t = {a}",
                                i + 1,
                                j + 1
                            ))
                        })
                })
                .collect::<Result<_>>()?;
            let c = self.forcing_vector(i, &ag.z_held, &held);
            let drive = d.bk.mul_vec(&c);
            let psi_to = step_pair(a_mat, t - b)?.psi;
            let seg = &psi_from - &psi_to;
            mul_add(&seg, &drive, &mut z);
            psi_from = psi_to;
        }
        Ok(z)
    }

    /// Right-hand side of the active trigger inequality (always > 0).
    fn threshold(&self, i: usize, z: &[f64], t: f64) -> f64 {
        let d = self.design;
        let p = &d.params;
        let decay = p.nu[i] * (-p.sigma[i] * t).exp() + p.gamma;
        match d.variant {
            Variant::Directed => {
                let g = &d.graph;
                g.alpha() * p.omega * (p.mu[i] * g.theta_inv(i) * d.y.quad_form(z) + decay)
            }
            Variant::Undirected => {
                let varpi2 = d.varpi2.expect("undirected design carries varpi2");
                (p.mu[i] * d.q.quad_form(z) + decay) / (2.0 * varpi2)
            }
        }
    }

    fn trigger_lhs(&self, z: &[f64], s: &[f64]) -> f64 {
        match self.design.variant {
            Variant::Directed => dot(s, s),
            Variant::Undirected => norm2(z) * norm2(s),
        }
    }

    fn trigger_parts(&self, i: usize, z: &[f64], t: f64) -> (f64, f64) {
        let s = sub_vec(&self.agents[i].z_held, z);
        (self.trigger_lhs(z, &s), self.threshold(i, z, t))
    }

    /// Trigger function `LHS - RHS` of agent `i` now; the agent fires when it
    /// is `>= 0`.
    pub fn trigger_value(&self, i: usize) -> f64 {
        let (lhs, rhs) = self.trigger_parts(i, &self.working_z(i), self.t);
        lhs - rhs
    }

    /// Working `z` of every agent after advancing by `pair.delta`, without
    /// mutating the state.
    fn z_after(&self, pair: &StepPair) -> Vec<Vec<f64>> {
        match self.mode {
            Mode::Omniscient => {
                let mut trial = self.clone_states();
                trial.advance_states(pair);
                (0..self.agents.len()).map(|i| trial.omniscient_z(i)).collect()
            }
            _ => self.agents.iter().map(|ag| affine(pair, &ag.z_recon, &ag.drive)).collect(),
        }
    }

    fn triggers_after(&self, pair: &StepPair) -> Vec<f64> {
        let t = self.t + pair.delta;
        self.z_after(pair)
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let (lhs, rhs) = self.trigger_parts(i, z, t);
                lhs - rhs
            })
            .collect()
    }

    /// Copy of the dynamic states only (no inboxes or event log).
    fn clone_states(&self) -> SimState<'a> {
        SimState {
            design: self.design,
            mode: self.mode,
            t: self.t,
            leader: self.leader.clone(),
            agents: self
                .agents
                .iter()
                .map(|ag| AgentRuntime { inbox: Vec::new(), ..ag.clone() })
                .collect(),
            events: Vec::new(),
            recipients: self.recipients.clone(),
            closed_form_err: 0.0,
        }
    }

    fn advance_states(&mut self, pair: &StepPair) {
        self.leader.x0 = pair.e.mul_vec(&self.leader.x0);
        let track_recon = self.mode != Mode::Omniscient;
        for ag in &mut self.agents {
            ag.x = affine(pair, &ag.x, &ag.bu);
            if track_recon {
                ag.z_recon = affine(pair, &ag.z_recon, &ag.drive);
            }
        }
        self.t += pair.delta;
    }

    /// Advances every signal exactly by `delta`. The caller guarantees that
    /// no trigger fires inside the interval.
    pub fn propagate(&mut self, delta: f64) -> Result<()> {
        if !(delta >= 0.0) {
            return Err(Error::Input(format!("propagation step {delta} must be >= 0")));
        }
        if delta == 0.0 {
            return Ok(());
        }
        let pair = step_pair(&self.design.plant.a, delta)?;
        self.propagate_with(&pair);
        Ok(())
    }

    fn propagate_with(&mut self, pair: &StepPair) {
        self.advance_states(pair);
        if self.mode == Mode::Omniscient {
            for i in 0..self.agents.len() {
                self.agents[i].z_recon = self.omniscient_z(i);
            }
        }
    }

    /// Earliest trigger crossing in `(t, t_end]`, located by bisection to
    /// `tol`. Returns the crossing time and every agent whose trigger is
    /// non-negative there, in ascending id order.
    pub fn locate_event(&self, t_end: f64, tol: f64) -> Result<Option<(f64, Vec<usize>)>> {
        let span = t_end - self.t;
        if !(span > 0.0) {
            return Ok(None);
        }
        let pair = step_pair(&self.design.plant.a, span)?;
        self.locate_with(&pair, tol)
    }

    fn locate_with(&self, full: &StepPair, tol: f64) -> Result<Option<(f64, Vec<usize>)>> {
        let end_vals = self.triggers_after(full);
        if end_vals.iter().all(|v| *v < 0.0) {
            return Ok(None);
        }
        let a = &self.design.plant.a;
        let (mut lo, mut hi) = (0.0, full.delta);
        let mut hi_vals = end_vals;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let vals = self.triggers_after(&step_pair(a, mid)?);
            if vals.iter().any(|v| *v >= 0.0) {
                hi = mid;
                hi_vals = vals;
            } else {
                lo = mid;
            }
        }
        let who = hi_vals
            .iter()
            .enumerate()
            .filter(|(_, v)| **v >= 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Some((self.t + hi, who)))
    }

    /// Own event of agent `i` at the current time: hold and broadcast the
    /// current `z_i`, reset `s_i`, update `u_i`.
    pub fn fire_event(&mut self, i: usize, min_gap: f64) -> Result<()> {
        let t = self.t;
        let last = self.agents[i].t_last_event;
        if self.agents[i].event_count > 0 && t - last < min_gap {
            return Err(Error::Zeno(format!(
                "agent {} fired twice within {:e} s (t = {t})",
                i + 1,
                t - last
            )));
        }
        if self.mode == Mode::Both {
            let closed = self.reconstruct_z(i)?;
            let z = &self.agents[i].z_recon;
            let err = norm2(&sub_vec(&closed, z)) / (1.0 + norm2(z));
            self.closed_form_err = self.closed_form_err.max(err);
        }
        let z = self.working_z(i);
        let nbrs: Vec<usize> = self.design.graph.topology.neighbors(i).to_vec();
        {
            let ag = &mut self.agents[i];
            ag.z_recon = z.clone();
            ag.z_held = z;
            ag.event_count += 1;
            ag.t_last_event = t;
            // keep only the latest value from each neighbor
            let mut kept: Vec<Broadcast> = Vec::with_capacity(nbrs.len());
            for &j in &nbrs {
                if let Some(m) = ag.inbox.iter().rev().find(|m| m.sender == j) {
                    kept.push(m.clone());
                }
            }
            kept.sort_by(|a, b| a.time.total_cmp(&b.time));
            ag.inbox = kept;
        }
        self.set_input(i);
        self.broadcast(i);
        self.refresh_drive(i);
        for r in self.recipients[i].clone() {
            self.refresh_drive(r);
        }
        Ok(())
    }

    /// Advances to `t_end`, firing every event on the way. `base` is used
    /// for the first attempt when it spans exactly the remaining interval.
    fn advance_to(&mut self, t_end: f64, base: Option<&StepPair>, cfg: &RunConfig) -> Result<()> {
        let a = &self.design.plant.a;
        let mut first = true;
        loop {
            let span = t_end - self.t;
            if span <= 0.0 {
                break;
            }
            let owned;
            let pair = match base {
                Some(p) if first => p,
                _ => {
                    owned = step_pair(a, span)?;
                    &owned
                }
            };
            first = false;
            match self.locate_with(pair, cfg.bisection_tol)? {
                None => {
                    self.propagate_with(pair);
                    break;
                }
                Some((t_star, who)) => {
                    let hit = step_pair(a, t_star - self.t)?;
                    self.propagate_with(&hit);
                    self.t = t_star;
                    for i in who {
                        self.fire_event(i, cfg.min_event_gap)?;
                    }
                    if self.events.len() > cfg.max_events + self.agents.len() {
                        return Err(Error::Zeno(format!(
                            "more than {} events by t = {t_star}",
                            cfg.max_events
                        )));
                    }
                }
            }
        }
        self.t = t_end;
        Ok(())
    }

    /// `sum_i theta_i^{-1} z_i' Y z_i` (directed) or `sum_i z_i' Y z_i`
    /// (undirected), on true states.
    pub fn lyapunov(&self) -> f64 {
        let d = self.design;
        (0..self.agents.len())
            .map(|i| {
                let w = match d.variant {
                    Variant::Directed => d.graph.theta_inv(i),
                    Variant::Undirected => 1.0,
                };
                w * d.y.quad_form(&self.omniscient_z(i))
            })
            .sum()
    }

    pub fn tracking_errors(&self) -> Vec<f64> {
        self.agents.iter().map(|ag| norm2(&sub_vec(&ag.x, &self.leader.x0))).collect()
    }

    /// Largest closed-form vs incremental reconstruction gap seen at events
    /// (relative to `1 + ||z||`); zero unless the mode is `Both`.
    pub fn closed_form_error(&self) -> f64 {
        self.closed_form_err
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub eps: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    /// `||z_recon - z_true|| / (1 + ||z_true||)`; only in `Both` mode.
    pub recon_err: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub start: f64,
    pub end: f64,
    /// Max over samples of `sum_i ||x_i - x_0||^2`.
    pub j: f64,
    /// Smallest interval between consecutive events of one agent with both
    /// endpoints in the window (`t = 0` counts as an event).
    pub min_interval: Option<f64>,
    pub min_interval_per_agent: Vec<Option<f64>>,
    /// Events with index >= 1 inside the window.
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunChecks {
    /// `None` when no oracle comparison was made.
    pub reconstruction: Option<bool>,
    pub trigger: bool,
    pub lyapunov: bool,
    pub zeno_bound: bool,
}

impl RunChecks {
    pub fn all_pass(&self) -> bool {
        self.reconstruction.unwrap_or(true) && self.trigger && self.lyapunov && self.zeno_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub variant: Variant,
    pub horizon: f64,
    pub samples: Vec<Sample>,
    pub events: Vec<EventRecord>,
    pub windows: Vec<WindowMetrics>,
    pub total_events: usize,
    /// Smallest inter-event interval over the whole run.
    pub min_interval: Option<f64>,
    pub delta: f64,
    pub initial_v: f64,
    pub bounds: ZenoBounds,
    pub max_recon_err: Option<f64>,
    pub max_closed_form_err: Option<f64>,
    /// Max over samples and agents of `(LHS - RHS) / RHS`; must stay < 0.
    pub max_trigger_ratio: f64,
    pub trigger_violations: usize,
    pub max_lyapunov: f64,
    pub lyapunov_violations: usize,
    pub checks: RunChecks,
}

pub const RECON_TOL: f64 = 1e-8;

/// Simulates the closed loop from `ic` over `[0, cfg.horizon]`.
pub fn run(design: &SynthesisResult, ic: &InitialConditions, cfg: &RunConfig) -> Result<RunReport> {
    let (steps, stride) = cfg.grid()?;
    let mut st = SimState::init(design, ic, cfg.mode)?;
    let initial_v = st.lyapunov();
    let bounds = zeno_bounds(design, initial_v, cfg.zeno_delta)?;
    let ceiling = bounds.ceiling();
    let base = step_pair(&design.plant.a, cfg.dt_base)?;

    let mut samples = Vec::with_capacity(steps / stride + 2);
    let mut acc = Accum::default();
    acc.sample(&st, ceiling, &mut samples);
    for step in 0..steps {
        let t_end = if step + 1 == steps { cfg.horizon } else { (step + 1) as f64 * cfg.dt_base };
        let full = ((t_end - st.t) - cfg.dt_base).abs() <= 1e-12 * cfg.dt_base;
        st.advance_to(t_end, full.then_some(&base), cfg)?;
        if (step + 1) % stride == 0 {
            acc.sample(&st, ceiling, &mut samples);
        }
    }

    let count = st.agents.len();
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); count];
    for e in &st.events {
        times[e.agent].push(e.time);
    }
    let windows: Vec<WindowMetrics> = cfg
        .windows
        .iter()
        .map(|&(a, b)| window_metrics(a, b, &samples, &times))
        .collect();
    let min_interval = window_metrics(0.0, cfg.horizon, &[], &times).min_interval;
    let total_events = st.events.iter().filter(|e| e.index >= 1).count();

    let max_recon_err = (cfg.mode == Mode::Both).then_some(acc.recon);
    let max_closed_form_err = (cfg.mode == Mode::Both).then(|| st.closed_form_error());
    let checks = RunChecks {
        reconstruction: max_recon_err
            .zip(max_closed_form_err)
            .map(|(r, c)| r <= RECON_TOL && c <= RECON_TOL),
        trigger: acc.trigger_violations == 0,
        lyapunov: acc.lyapunov_violations == 0,
        zeno_bound: min_interval.map_or(true, |m| m > 0.0 && m >= bounds.lower_bound()),
    };
    Ok(RunReport {
        mode: cfg.mode,
        variant: design.variant,
        horizon: cfg.horizon,
        samples,
        events: st.events,
        windows,
        total_events,
        min_interval,
        delta: design.delta,
        initial_v,
        bounds,
        max_recon_err,
        max_closed_form_err,
        max_trigger_ratio: acc.trigger_ratio,
        trigger_violations: acc.trigger_violations,
        max_lyapunov: acc.max_v,
        lyapunov_violations: acc.lyapunov_violations,
        checks,
    })
}

struct Accum {
    recon: f64,
    trigger_ratio: f64,
    trigger_violations: usize,
    max_v: f64,
    lyapunov_violations: usize,
}

impl Default for Accum {
    fn default() -> Self {
        Self {
            recon: 0.0,
            trigger_ratio: f64::NEG_INFINITY,
            trigger_violations: 0,
            max_v: 0.0,
            lyapunov_violations: 0,
        }
    }
}

impl Accum {
    fn sample(&mut self, st: &SimState, ceiling: f64, out: &mut Vec<Sample>) {
        let count = st.agents.len();
        let mut z_norm = Vec::with_capacity(count);
        let mut s_norm = Vec::with_capacity(count);
        let mut recon = Vec::with_capacity(count);
        for i in 0..count {
            let z = st.working_z(i);
            let (lhs, rhs) = st.trigger_parts(i, &z, st.t);
            let ratio = (lhs - rhs) / rhs;
            self.trigger_ratio = self.trigger_ratio.max(ratio);
            if ratio > 0.0 {
                self.trigger_violations += 1;
            }
            z_norm.push(norm2(&z));
            s_norm.push(norm2(&sub_vec(&st.agents[i].z_held, &z)));
            if st.mode == Mode::Both {
                let truth = st.omniscient_z(i);
                let err = norm2(&sub_vec(&z, &truth)) / (1.0 + norm2(&truth));
                self.recon = self.recon.max(err);
                recon.push(err);
            }
        }
        let v = st.lyapunov();
        self.max_v = self.max_v.max(v);
        if v > ceiling * (1.0 + 1e-9) {
            self.lyapunov_violations += 1;
        }
        out.push(Sample {
            t: st.t,
            eps: st.tracking_errors(),
            z: z_norm,
            s: s_norm,
            recon_err: (st.mode == Mode::Both).then_some(recon),
        });
    }
}

fn window_metrics(a: f64, b: f64, samples: &[Sample], times: &[Vec<f64>]) -> WindowMetrics {
    let tol = 1e-12 * b.abs().max(1.0);
    let inside = |t: f64| t >= a - tol && t <= b + tol;
    let j = samples
        .iter()
        .filter(|s| inside(s.t))
        .map(|s| s.eps.iter().map(|e| e * e).sum::<f64>())
        .fold(0.0, f64::max);
    let per_agent: Vec<Option<f64>> = times
        .iter()
        .map(|ts| {
            ts.windows(2)
                .filter(|w| inside(w[0]) && inside(w[1]))
                .map(|w| w[1] - w[0])
                .reduce(f64::min)
        })
        .collect();
    let min_interval = per_agent.iter().flatten().copied().reduce(f64::min);
    // the first entry of each agent is the initialization broadcast
    let events = times.iter().map(|ts| ts.iter().skip(1).filter(|t| inside(**t)).count()).sum();
    WindowMetrics {
        start: a,
        end: b,
        j,
        min_interval,
        min_interval_per_agent: per_agent,
        events,
    }
}
