//! End-to-end acceptance run on the bundled pendulum scenarios. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use evtrack::design::{lmi_excess, zeno_bounds, SynthesisResult, Variant};
use evtrack::engine::{run, Mode, RunReport};
use evtrack::matkit::{inverse, lambda_min, mat_exp, solve_care, step_pair, Mat};
use evtrack_cli::{presets, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K_REF: [f64; 2] = [5.23, 13.08];
const K_TOL: f64 = 0.05;
const SCALAR_TOL: f64 = 0.02;
const DELTA_REF: f64 = 0.0462;
const J_QUALITATIVE: f64 = 1e-3;
const DESIGN_BUDGET: Duration = Duration::from_secs(1);
const RUN_BUDGET: Duration = Duration::from_secs(60);

struct Line {
    ok: bool,
    text: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

struct Preset {
    name: &'static str,
    design: SynthesisResult,
    design_time: Duration,
    report: RunReport,
    run_time: Duration,
}

fn load(cfg: ScenarioConfig) -> Preset {
    let t0 = Instant::now();
    let design = cfg.design().expect("design");
    let design_time = t0.elapsed();
    let initial = cfg.initial_conditions(design.n_agents(), design.plant.n()).unwrap();
    let mut rc = cfg.run_config().unwrap();
    rc.mode = Mode::Both;
    let t1 = Instant::now();
    let report = run(&design, &initial, &rc).expect("run");
    let run_time = t1.elapsed();
    let name = presets::NAMES.iter().find(|n| **n == cfg.name).copied().unwrap();
    Preset { name, design, design_time, report, run_time }
}

fn gains(ps: &[Preset]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in ps {
        let k = [p.design.k[(0, 0)], p.design.k[(0, 1)]];
        let good = k.iter().zip(K_REF).all(|(a, b)| rel(*a, b) <= K_TOL) && p.design_time < DESIGN_BUDGET;
        ok &= good;
        parts.push(format!("{} K=[{:.3}, {:.3}] ({:.1?})", p.name, k[0], k[1], p.design_time));
    }
    Line { ok, text: format!("gain reproduction vs [5.23, 13.08] tol {K_TOL}: {}", parts.join("; ")) }
}

fn scalars(ps: &[Preset]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in ps {
        if let Some(target) = match p.name {
            "sim1" => Some(0.0877),
            "sim3" => Some(0.0649),
            _ => None,
        } {
            let a = p.design.graph.alpha();
            ok &= rel(a, target) <= SCALAR_TOL;
            parts.push(format!("{} alpha={a:.4} (design input)", p.name));
        }
        let d = p.design.delta;
        let good = rel(d, DELTA_REF) <= SCALAR_TOL && p.design_time < DESIGN_BUDGET;
        ok &= good;
        parts.push(format!(
            "{} Delta={d:.5} ({:+.1}%){}",
            p.name,
            100.0 * (d - DELTA_REF) / DELTA_REF,
            if good { "" } else { " MISS" }
        ));
    }
    Line { ok, text: format!("alpha and Delta=0.0462 tol {SCALAR_TOL}: {}", parts.join("; ")) }
}

fn tracking(ps: &[Preset]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in ps {
        let w = p.report.windows.iter().find(|w| w.start == 18.0 && w.end == 20.0).expect("[18, 20] window");
        let good = w.j <= DELTA_REF && w.j <= p.design.delta && w.j <= J_QUALITATIVE && p.run_time < RUN_BUDGET;
        ok &= good;
        parts.push(format!("{} J[18,20]={:.3e} ({:.1?})", p.name, w.j, p.run_time));
    }
    Line { ok, text: format!("tracking J <= Delta and <= {J_QUALITATIVE:e}: {}", parts.join("; ")) }
}

fn zeno(ps: &[Preset]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in ps {
        let r = &p.report;
        let lower = r.bounds.lower_bound();
        let min = r.min_interval.unwrap_or(0.0);
        let good = min > 0.0 && min >= lower && (200..=30_000).contains(&r.total_events);
        ok &= good;
        parts.push(format!("{} min={min:.3e} >= {lower:.3e}, events={}", p.name, r.total_events));
    }
    Line { ok, text: format!("Zeno exclusion, events within 10x of 2000-3000: {}", parts.join("; ")) }
}

fn reconstruction(ps: &[Preset]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in ps {
        let good = p.report.checks.reconstruction == Some(true);
        ok &= good;
        parts.push(format!(
            "{} max={:.2e} closed-form={:.2e}",
            p.name,
            p.report.max_recon_err.unwrap_or(f64::NAN),
            p.report.max_closed_form_err.unwrap_or(f64::NAN)
        ));
    }
    Line { ok, text: format!("reconstruction vs omniscient <= 1e-8(1+|z|): {}", parts.join("; ")) }
}

fn triggers(ps: &[Preset]) -> Line {
    let ok = ps.iter().all(|p| p.report.trigger_violations == 0 && p.report.checks.trigger);
    let parts: Vec<_> = ps
        .iter()
        .map(|p| format!("{} violations={} max ratio={:.3e}", p.name, p.report.trigger_violations, p.report.max_trigger_ratio))
        .collect();
    Line { ok, text: format!("trigger enforcement: {}", parts.join("; ")) }
}

fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

fn care_residual(a: &Mat, b: &Mat, r: &Mat, q: &Mat, c: f64, y: &Mat) -> f64 {
    let s = (&(b * &inverse(r).unwrap()) * &b.transpose()).scale(c);
    (&(&(&(y * a) + &(&a.transpose() * y)) - &(&(y * &s) * y)) + q).norm_fro()
}

fn kernel(ps: &[Preset]) -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut semigroup: f64 = 0.0;
    let mut step: f64 = 0.0;
    for case in 0..100 {
        let n = 2 + case % 5;
        let shift = if case % 2 == 0 { -1.5 } else { 0.8 };
        let a = &random_mat(&mut rng, n, n, 1.5) + &Mat::identity(n).scale(shift);
        let (s, t) = (rng.gen_range(0.0..1.5), rng.gen_range(0.0..1.5));
        let lhs = mat_exp(&a, s + t).unwrap();
        let rhs = &mat_exp(&a, s).unwrap() * &mat_exp(&a, t).unwrap();
        semigroup = semigroup.max((&lhs - &rhs).norm_fro() / lhs.norm_fro().max(1.0));
        let sp = step_pair(&a, t).unwrap();
        let rebuilt = &Mat::identity(n) + &(&a * &sp.psi);
        step = step.max((&sp.e - &rebuilt).norm_fro() / sp.e.norm_fro().max(1.0));
    }

    let mut care: f64 = 0.0;
    let mut y_pd = true;
    for p in ps {
        let d = &p.design;
        let res = care_residual(&d.plant.a, &d.plant.b, &d.r, &d.q, d.riccati_coupling, &d.y);
        care = care.max(res / d.q.norm_fro());
        y_pd &= lambda_min(&d.y).unwrap() > 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let n = 2 + case % 4;
        let m = 1 + case % 2;
        let a = random_mat(&mut rng, n, n, 1.0);
        let b = random_mat(&mut rng, n, m, 1.0);
        let g = random_mat(&mut rng, n, n, 1.0);
        let q = &(&g * &g.transpose()) + &Mat::identity(n).scale(0.5);
        let r = Mat::diag(&(0..m).map(|_| rng.gen_range(0.2..2.0)).collect::<Vec<_>>());
        let c = rng.gen_range(0.3..2.0);
        match solve_care(&a, &b, &r, &q, c) {
            Ok(y) => {
                care = care.max(care_residual(&a, &b, &r, &q, c, &y) / q.norm_fro());
                y_pd &= lambda_min(&y).unwrap() > 0.0;
            }
            Err(_) => y_pd = false,
        }
    }
    let lmi = ps.iter().map(|p| lmi_excess(&p.design).unwrap()).fold(f64::NEG_INFINITY, f64::max);
    let ok = semigroup <= 1e-9 && step <= 1e-10 && care <= 1e-8 && y_pd && lmi <= 1e-9;
    Line {
        ok,
        text: format!(
            "numerical kernel: semigroup {semigroup:.2e} (<=1e-9), E=I+A*Psi {step:.2e} (<=1e-10), \
             CARE {care:.2e}*|Q| (<=1e-8), Y>0 {y_pd}, LMI max eig {lmi:.2e} (<=1e-9)"
        ),
    }
}

fn corollary(ps: &[Preset]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in ps.iter().filter(|p| p.design.variant == Variant::Directed) {
        let d = &p.design;
        let g = d.params.gamma;
        let v0 = p.report.initial_v;
        let lo = zeno_bounds(d, v0, 0.1).unwrap();
        let hi = zeno_bounds(&d.with_gamma(10.0 * g).unwrap(), v0, 0.1).unwrap();
        let (pi_lo, pi_hi) = (lo.pi_asymptotic.unwrap(), hi.pi_asymptotic.unwrap());
        let (t_lo, t_hi) = (lo.t_lower.unwrap(), hi.t_lower.unwrap());
        ok &= pi_lo == pi_hi && t_hi > t_lo;
        parts.push(format!("{} pi={pi_lo:.6e}|{pi_hi:.6e}, t_lower {t_lo:.3e} -> {t_hi:.3e}", p.name));
    }
    Line { ok, text: format!("pi independent of gamma, t_lower increasing (gamma x10): {}", parts.join("; ")) }
}

fn lyapunov(ps: &[Preset]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in ps.iter().filter(|p| p.design.variant == Variant::Directed) {
        let r = &p.report;
        let kappa = r.bounds.kappa.unwrap();
        ok &= r.lyapunov_violations == 0 && r.max_lyapunov <= kappa;
        parts.push(format!("{} max V={:.4e} <= kappa={kappa:.4e}", p.name, r.max_lyapunov));
    }
    Line { ok, text: format!("Lyapunov ceiling on directed runs: {}", parts.join("; ")) }
}

fn main() -> ExitCode {
    let ps: Vec<Preset> = presets::NAMES.iter().map(|n| load(presets::preset(n).unwrap())).collect();
    let lines = [
        gains(&ps),
        scalars(&ps),
        tracking(&ps),
        zeno(&ps),
        reconstruction(&ps),
        triggers(&ps),
        kernel(&ps),
        corollary(&ps),
        lyapunov(&ps),
    ];
    let mut failed = 0;
    for (i, l) in lines.iter().enumerate() {
        println!("{} criterion {}: {}", if l.ok { "PASS" } else { "FAIL" }, i + 1, l.text);
        failed += usize::from(!l.ok);
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
