use std::process::Command;

use evtrack::engine::Mode;
use evtrack_cli::config::{ChainSpec, EdgeSpec, GraphSpec, InitialSpec, PerAgent, VariantSpec};
use evtrack_cli::{design, presets, simulate, simulate_to, verify, CheckStatus, ScenarioConfig, VerifyOptions};

fn short(mut cfg: ScenarioConfig, horizon: f64) -> ScenarioConfig {
    cfg.horizon = horizon;
    cfg.windows = vec![[0.0, horizon]];
    cfg
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evtrack"))
}

#[test]
fn presets_round_trip_through_json() {
    for name in presets::NAMES {
        let cfg = presets::preset(name).unwrap();
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg, "{name}");
    }
    assert!(presets::preset("sim4").is_none());
}

#[test]
fn presets_encode_tabulated_parameters() {
    let expect = [
        ("sim1", true, 1.1394, Some(0.001), 0.5025, 2.5, 2.9769e-5, VariantSpec::Directed),
        ("sim2", false, 0.1, None, 0.7195, 2.0, 7.9990e-6, VariantSpec::Undirected),
        ("sim3", false, 1.5405, Some(0.001), 0.3007, 1.2, 3.1507e-6, VariantSpec::UndirectedViaDirected),
    ];
    for (name, directed, r, omega, sigma, nu, gamma, variant) in expect {
        let c = presets::preset(name).unwrap();
        assert_eq!(c.weights.r, vec![vec![r]]);
        assert_eq!(c.weights.q, vec![vec![10.59, 0.42], vec![0.42, 1.05]]);
        assert_eq!(c.trigger.omega, omega);
        assert_eq!(c.trigger.mu, PerAgent::Scalar(0.1));
        assert_eq!(c.trigger.sigma, PerAgent::Scalar(sigma));
        assert_eq!(c.trigger.nu, PerAgent::Scalar(nu));
        assert_eq!(c.trigger.gamma, gamma);
        assert_eq!(c.variant, variant);
        assert_eq!(c.horizon, 20.0);
        let GraphSpec::Chain { chain } = &c.graph else { panic!("{name}: expected a chain") };
        assert_eq!(chain, &ChainSpec { n: 20, pinned: vec![1, 8, 12, 15], directed });
    }
}

#[test]
fn unknown_field_is_reported_with_location() {
    let mut v: serde_json::Value = serde_json::from_str(&presets::sim2().to_json()).unwrap();
    v["trigger"]["gama"] = 1.0.into();
    let err = ScenarioConfig::from_json(&serde_json::to_string_pretty(&v).unwrap()).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("gama") && msg.contains("line"), "{msg}");
}

#[test]
fn graph_forms_agree() {
    let object = presets::sim1().graph.topology().unwrap();
    let text = GraphSpec::Text("chain(20, pinned=[1, 8, 12, 15], directed=true)".into())
        .topology()
        .unwrap();
    let edges = GraphSpec::Edges(EdgeSpec {
        n: 20,
        edges: (1..20).map(|i| [i, i + 1]).collect(),
        pinned: vec![1, 8, 12, 15],
        directed: true,
    })
    .topology()
    .unwrap();
    assert_eq!(object, text);
    assert_eq!(object, edges);
    let zero_id = GraphSpec::Edges(EdgeSpec { n: 3, edges: vec![[0, 1]], pinned: vec![1], directed: true });
    assert!(zero_id.topology().is_err());
}

#[test]
fn oversized_mu_names_the_failing_rho() {
    let mut cfg = presets::sim1();
    cfg.trigger.mu = PerAgent::Scalar(5.0);
    let msg = format!("{:#}", design(&cfg).unwrap_err());
    assert!(msg.contains("rho_1"), "{msg}");
}

#[test]
fn zero_horizon_runs() {
    let cfg = short(presets::sim2(), 0.0);
    let (summary, _, report) = simulate(&cfg).unwrap();
    assert_eq!(report.samples.len(), 1);
    assert_eq!(summary.run.unwrap().total_events, 0);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cfg = short(presets::sim1(), 1.0);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate_to(&cfg, a.path()).unwrap();
    simulate_to(&cfg, b.path()).unwrap();
    for f in ["timeseries.csv", "events.csv", "summary.json", "effective_config.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(!x.is_empty(), "{f} is empty");
        assert_eq!(x, y, "{f} differs");
    }
    let ts = std::fs::read_to_string(a.path().join("timeseries.csv")).unwrap();
    let header = ts.lines().next().unwrap();
    assert!(header.starts_with("t,eps_1,"), "{header}");
    assert_eq!(ts.lines().count(), 1 + 1001);
    let back = ScenarioConfig::load(&a.path().join("effective_config.json")).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn seed_changes_initial_conditions() {
    let mut cfg = presets::sim2();
    let a = cfg.scenario().unwrap().initial;
    cfg.set_seed(7);
    let b = cfg.scenario().unwrap().initial;
    assert_ne!(a.followers, b.followers);
    assert!(matches!(cfg.initial, InitialSpec::Random { seed: 7, .. }));
}

#[test]
fn verify_passes_and_catches_corrupted_riccati() {
    let cfg = short(presets::sim2(), 2.0);
    let ok = verify(&cfg, &VerifyOptions::default()).unwrap();
    // the tracking bound is asymptotic; a 2 s transient window exceeds it
    for c in &ok {
        let want = if c.name == "tracking_bound" { CheckStatus::Fail } else { CheckStatus::Pass };
        assert_eq!(c.status, want, "{c:?}");
    }
    let bad = verify(&cfg, &VerifyOptions { corrupt_y: Some(0.5) }).unwrap();
    let ric = bad.iter().find(|c| c.name == "riccati_residual").unwrap();
    assert_eq!(ric.status, CheckStatus::Fail);
}

#[test]
fn omniscient_verify_skips_reconstruction() {
    let mut cfg = short(presets::sim3(), 1.0);
    cfg.mode = Mode::Omniscient;
    let checks = verify(&cfg, &VerifyOptions::default()).unwrap();
    let rec = checks.iter().find(|c| c.name == "reconstruction").unwrap();
    assert_eq!(rec.status, CheckStatus::Skipped);
}

#[test]
fn binary_design_and_failing_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["design", "--preset", "sim2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("design.json").exists());

    let cfg = short(presets::sim2(), 0.5);
    let path = dir.path().join("short.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let out = bin()
        .args(["verify", "--corrupt-y", "0.5", "--config"])
        .arg(&path)
        .args(["--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL riccati_residual"));

    let out = bin().args(["design", "--preset", "sim9"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn binary_simulate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short(presets::sim1(), 0.5);
    cfg.name = "tiny".into();
    let path = dir.path().join("tiny.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let run_dir = dir.path().join("run");
    let out = bin().arg("simulate").arg("--config").arg(&path).arg("--out").arg(&run_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin().arg("report").arg(&run_dir).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("tiny"));
}
