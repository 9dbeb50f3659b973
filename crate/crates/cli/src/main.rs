use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail};
use clap::{Args, Parser, Subcommand};

use evtrack::engine::Mode;
use evtrack_cli::{
    design, load_summaries, output, presets, simulate_to, verify, CheckStatus, ScenarioConfig, VerifyOptions,
};

#[derive(Parser)]
#[command(name = "evtrack", version, about = "Event-triggered leader-follower tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize gains and check trigger parameters.
    Design(ScenarioArgs),
    /// Run the closed loop and write time series, events and a summary.
    Simulate(ScenarioArgs),
    /// Run the invariant suite on a scenario.
    Verify {
        #[command(flatten)]
        args: ScenarioArgs,
        /// Scale the Riccati solution by this factor before checking.
        #[arg(long, hide = true)]
        corrupt_y: Option<f64>,
    },
    /// Render summary tables from earlier `simulate` outputs.
    Report {
        /// Summary files or output directories.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file (JSON); may be repeated.
    #[arg(long)]
    config: Vec<PathBuf>,
    /// Bundled scenario; may be repeated.
    #[arg(long, value_parser = ["sim1", "sim2", "sim3"])]
    preset: Vec<String>,
    /// Seed for randomly drawn initial conditions.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Scenarios to run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum ModeArg {
    Distributed,
    Omniscient,
    Both,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Distributed => Mode::Distributed,
            ModeArg::Omniscient => Mode::Omniscient,
            ModeArg::Both => Mode::Both,
        }
    }
}

impl ScenarioArgs {
    fn scenarios(&self) -> anyhow::Result<Vec<ScenarioConfig>> {
        let mut out = Vec::new();
        for p in &self.config {
            out.push(ScenarioConfig::load(p)?);
        }
        for name in &self.preset {
            out.push(presets::preset(name).ok_or_else(|| anyhow!("unknown preset {name}"))?);
        }
        if out.is_empty() {
            bail!("give at least one --config or --preset");
        }
        for cfg in &mut out {
            if let Some(seed) = self.seed {
                cfg.set_seed(seed);
            }
            if let Some(m) = self.mode {
                cfg.mode = m.into();
            }
        }
        Ok(out)
    }

    fn out_dir(&self, cfg: &ScenarioConfig, many: bool) -> PathBuf {
        if many {
            self.out.join(&cfg.name)
        } else {
            self.out.clone()
        }
    }
}

/// Runs `f` over the scenarios on up to `jobs` threads, returning results
/// in input order.
fn batch<T: Send>(
    cfgs: &[ScenarioConfig],
    jobs: usize,
    f: impl Fn(&ScenarioConfig) -> T + Sync,
) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..cfgs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, cfgs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cfgs.len() {
                    break;
                }
                let r = f(&cfgs[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("every job ran")).collect()
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let mut failed = false;
    match cli.command {
        Command::Design(args) => {
            let cfgs = args.scenarios()?;
            let many = cfgs.len() > 1;
            for (cfg, res) in cfgs.iter().zip(batch(&cfgs, args.jobs, design)) {
                match res {
                    Ok(summary) => {
                        let dir = args.out_dir(cfg, many);
                        std::fs::create_dir_all(&dir)?;
                        std::fs::write(dir.join("design.json"), summary.to_json() + "\n")?;
                        print!("{}", output::render_table(std::slice::from_ref(&summary)));
                    }
                    Err(e) => {
                        eprintln!("{}: {e:#}", cfg.name);
                        failed = true;
                    }
                }
            }
        }
        Command::Simulate(args) => {
            let cfgs = args.scenarios()?;
            let many = cfgs.len() > 1;
            let results = batch(&cfgs, args.jobs, |cfg| simulate_to(cfg, &args.out_dir(cfg, many)));
            let mut ok = Vec::new();
            for (cfg, res) in cfgs.iter().zip(results) {
                match res {
                    Ok(summary) => ok.push(summary),
                    Err(e) => {
                        eprintln!("{}: {e:#}", cfg.name);
                        failed = true;
                    }
                }
            }
            print!("{}", output::render_table(&ok));
        }
        Command::Verify { args, corrupt_y } => {
            let cfgs = args.scenarios()?;
            let opts = VerifyOptions { corrupt_y };
            for (cfg, res) in cfgs.iter().zip(batch(&cfgs, args.jobs, |c| verify(c, &opts))) {
                let checks = match res {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("{}: {e:#}", cfg.name);
                        failed = true;
                        continue;
                    }
                };
                let mut bad = Vec::new();
                for c in &checks {
                    let tag = match c.status {
                        CheckStatus::Pass => "PASS",
                        CheckStatus::Fail => "FAIL",
                        CheckStatus::Skipped => "SKIP",
                    };
                    println!("{} {tag} {}: {}", cfg.name, c.name, c.detail);
                    if c.status == CheckStatus::Fail {
                        bad.push(c.name.as_str());
                    }
                }
                if !bad.is_empty() {
                    eprintln!("{}: failed checks: {}", cfg.name, bad.join(", "));
                    failed = true;
                }
            }
        }
        Command::Report { paths } => {
            print!("{}", output::render_table(&load_summaries(&paths)?));
        }
    }
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}
