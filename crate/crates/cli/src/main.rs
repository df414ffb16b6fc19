use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use eqkit::detection::{
    self, generate_normal_agent_data, potential_game_responses, spsa_optimize, CostContext, MaliciousGameSpec,
    NoiseModel, NoisyDataset, SpsaConfig, DEFAULT_M_SAMPLES,
};
use eqkit::experiment::{self, one_based, ExperimentConfig};
use eqkit::learning::{run_simulation, LearnerConfig, Variant};
use eqkit::revealed::{afriat_test, garp_check, nash_rationality_test, GarpOutcome, Verdict};
use eqkit::rng::{self, Domain};
use eqkit::{io, Dataset};

/// Regret-matching learning over networks and revealed-preference detection
/// of equilibrium play.
#[derive(Parser)]
#[command(name = "eqkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average d_n over independent runs of the learning dynamics.
    SimulateLearning {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        /// Step size, also scaling the diffusion weights.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Exploration.
        #[arg(long, default_value_t = 0.15)]
        delta: f64,
        #[arg(long, default_value_t = 5000)]
        horizon: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value = "diffusion")]
        variant: Variant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace CSV: n, mean_d_n, std_d_n.
        #[arg(long)]
        out: PathBuf,
    },
    /// Afriat test for a single agent; exit 0 on pass, 1 on fail.
    TestAfriat {
        #[arg(long)]
        data: PathBuf,
    },
    /// Nash rationality test; exit 0 on pass, 1 on fail.
    TestNash {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        agents: Option<usize>,
    },
    /// Noise-robust test of Nash rationality at significance gamma.
    StatTest {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        agents: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        /// `gaussian:SIGMA` or `uniform:KAPPA`.
        #[arg(long)]
        noise: NoiseModel,
        /// Monte Carlo draws of M.
        #[arg(long, default_value_t = DEFAULT_M_SAMPLES)]
        mc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// SPSA search for probes that lower the Type-II error.
    OptimizeProbe {
        /// Malicious-agent game spec (JSON); the default setup when absent.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0.2)]
        step: f64,
        #[arg(long, default_value_t = 300)]
        iters: usize,
        #[arg(long, default_value_t = 100)]
        cost_samples: usize,
        #[arg(long = "T", default_value_t = 20)]
        num_obs: usize,
        #[arg(long, default_value = "uniform:0.1")]
        noise: NoiseModel,
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_M_SAMPLES)]
        mc: usize,
        /// Starting probes (CSV `t,p_1..p_m`); drawn from the spec otherwise.
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Final probes (CSV `t,p_1..p_m`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic dataset from the malicious-agent game or random responders.
    GenData {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long = "T", default_value_t = 20)]
        num_obs: usize,
        /// Random responders instead of potential maximizers.
        #[arg(long)]
        normal: bool,
        /// Range of the random responders' actions.
        #[arg(long, num_args = 2, default_values_t = [1.0, 50.0])]
        normal_range: Vec<f64>,
        /// Add measurement noise to the actions.
        #[arg(long)]
        noise: Option<NoiseModel>,
        /// Fixed probes (CSV `t,p_1..p_m`) instead of random ones.
        #[arg(long)]
        probes: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config; writes summary.json and traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    // A closed pipe (e.g. `| head`) is not an error of the computation.
    match writeln!(out, "{}", serde_json::to_string_pretty(v)?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn load_spec(path: Option<&Path>) -> Result<MaliciousGameSpec> {
    let spec = match path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => MaliciousGameSpec::default(),
    };
    spec.validate()?;
    Ok(spec)
}

fn load_probes(path: &Path, spec: &MaliciousGameSpec) -> Result<Vec<f64>> {
    let (probes, m) = io::read_probes(fs::File::open(path).with_context(|| format!("opening {}", path.display()))?)?;
    if m != spec.probe_dim {
        bail!("{} has {} probe columns, the spec expects {}", path.display(), m, spec.probe_dim);
    }
    Ok(probes)
}

fn load_data(path: &Path, agents: Option<usize>) -> Result<Dataset> {
    io::load_dataset(path, agents).with_context(|| format!("loading {}", path.display()))
}

/// Runs one command; `Ok(false)` means a test verdict of "fail".
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SimulateLearning {
            game,
            graph,
            eps,
            delta,
            horizon,
            runs,
            variant,
            seed,
            out,
        } => {
            let g = experiment::load_game(&game).with_context(|| format!("loading {}", game.display()))?;
            let w = experiment::load_weights(&graph, eps).with_context(|| format!("loading {}", graph.display()))?;
            let cfg = LearnerConfig::new(eps, delta, seed);
            let trace = run_simulation(&g, &w, &cfg, horizon, runs, variant)?;
            io::write_trace(fs::File::create(&out)?, &trace)?;
            print_json(&json!({
                "trace": out,
                "final_mean_d_n": trace.mean_distance.last(),
            }))?;
            Ok(true)
        }
        Command::TestAfriat { data } => {
            let d = load_data(&data, Some(1))?;
            match afriat_test(&d)? {
                Verdict::Pass(c) => {
                    print_json(&json!({"verdict": "pass", "certificate": c}))?;
                    Ok(true)
                }
                Verdict::Fail => {
                    let cycle = match garp_check(&d)? {
                        GarpOutcome::Fail { cycle } => Some(one_based(&cycle)),
                        GarpOutcome::Pass => None,
                    };
                    print_json(&json!({"verdict": "fail", "cycle": cycle}))?;
                    Ok(false)
                }
            }
        }
        Command::TestNash { data, agents } => {
            let d = load_data(&data, agents)?;
            match nash_rationality_test(&d)? {
                Verdict::Pass(c) => {
                    print_json(&json!({"verdict": "pass", "certificate": c}))?;
                    Ok(true)
                }
                Verdict::Fail => {
                    print_json(&json!({"verdict": "fail"}))?;
                    Ok(false)
                }
            }
        }
        Command::StatTest {
            data,
            agents,
            gamma,
            noise,
            mc,
            seed,
        } => {
            let noisy = NoisyDataset::from_observed(load_data(&data, agents)?, noise)?;
            let outcome = detection::statistical_test(&noisy, gamma, mc, seed)?;
            print_json(&serde_json::to_value(outcome)?)?;
            Ok(true)
        }
        Command::OptimizeProbe {
            spec,
            sigma,
            step,
            iters,
            cost_samples,
            num_obs,
            noise,
            gamma,
            mc,
            initial,
            seed,
            out,
        } => {
            let spec = load_spec(spec.as_deref())?;
            let p0 = match initial {
                Some(path) => load_probes(&path, &spec)?,
                None => {
                    let mut r = rng::stream(seed, Domain::Probes, 0);
                    (0..num_obs).flat_map(|_| spec.draw_probe(&mut r)).collect()
                }
            };
            let cfg = SpsaConfig {
                sigma,
                step,
                iterations: iters,
                cost_samples,
                seed,
            };
            let ctx = CostContext {
                num_agents: spec.num_agents,
                probe_dim: spec.probe_dim,
                noise,
                gamma,
                m_samples: mc,
                ..CostContext::default()
            };
            let trace = spsa_optimize(&p0, &cfg, &ctx)?;
            io::write_probes(fs::File::create(&out)?, trace.final_probe(), spec.probe_dim)?;
            print_json(&json!({
                "probes": out,
                "costs": trace.costs,
                "final_tenth_mean_cost": if trace.costs.is_empty() { None } else { Some(trace.tail_mean(0.1)) },
            }))?;
            Ok(true)
        }
        Command::GenData {
            spec,
            num_obs,
            normal,
            normal_range,
            noise,
            probes,
            seed,
            out,
        } => {
            let spec = load_spec(spec.as_deref())?;
            let mut r = rng::stream(seed, Domain::Experiment, 0);
            let p = match probes {
                Some(path) => load_probes(&path, &spec)?,
                None => {
                    if num_obs == 0 {
                        bail!("T >= 1 required");
                    }
                    (0..num_obs).flat_map(|_| spec.draw_probe(&mut r)).collect()
                }
            };
            let clean = if normal {
                let range = (normal_range[0], normal_range[1]);
                generate_normal_agent_data(&p, spec.probe_dim, spec.num_agents, range, &mut r)?
            } else {
                potential_game_responses(&spec, &p, &mut r)?
            };
            let data = match noise {
                Some(n) => NoisyDataset::observe(&clean, n, &mut r)?.observed().clone(),
                None => clean,
            };
            io::save_dataset(&out, &data)?;
            Ok(true)
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let base = config.parent().unwrap_or(Path::new("."));
            let out = match (out, &cfg.output) {
                (Some(o), _) => o,
                (None, Some(o)) => o.clone(),
                (None, None) => {
                    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    PathBuf::from(format!("{}-out", stem))
                }
            };
            experiment::run_experiment(&cfg, base, &out)?;
            print_json(&json!({"output": out}))?;
            Ok(true)
        }
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("EQKIT_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("EQKIT_THREADS must be a positive integer, got {:?}", v))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
