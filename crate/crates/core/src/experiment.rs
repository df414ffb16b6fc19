//! Seeded experiment configurations and their runner.
//!
//! A config is a JSON object with a `kind` tag, a `seed`, and the parameters
//! of that kind. Input paths are resolved against the directory holding the
//! config file. Every run writes `summary.json` (the full config plus the
//! results) and kind-specific CSV traces into its output directory; nothing
//! time- or host-dependent is recorded, so equal configs give byte-identical
//! files.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::detection::{
    self, generate_normal_agent_data, generate_potential_game_data, potential_game_responses, spsa_optimize,
    CostContext, Decision, MaliciousGameSpec, NoiseModel, NoisyDataset, SpsaConfig, DEFAULT_M_SAMPLES,
};
use crate::error::{Error, Result};
use crate::game::{ce_epsilon_violation, GameFile, NetworkFile, NormalFormGame, WeightMatrix};
use crate::io;
use crate::learning::{run_simulation, LearnerConfig, Variant};
use crate::revealed::{afriat_test, garp_check, nash_rationality_test, GarpOutcome, Verdict};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory; the runner's caller may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Learning(LearningParams),
    Afriat(DataParams),
    Nash(DataParams),
    StatTest(StatTestParams),
    Spsa(SpsaParams),
    Detection(DetectionParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Learning(_) => "learning",
            Experiment::Afriat(_) => "afriat",
            Experiment::Nash(_) => "nash",
            Experiment::StatTest(_) => "stat-test",
            Experiment::Spsa(_) => "spsa",
            Experiment::Detection(_) => "detection",
        }
    }
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Diffusion, Variant::Isolated]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    pub game: PathBuf,
    pub network: PathBuf,
    /// Step size `eps` of the regret recursion and the diffusion weights.
    pub step_size: f64,
    /// Exploration `delta`.
    pub exploration: f64,
    pub horizon: usize,
    pub runs: usize,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<Vec<f64>>,
    /// Spacing of the checkpoints reported in the summary.
    #[serde(default = "default_checkpoint")]
    pub checkpoint_every: usize,
}

fn default_checkpoint() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataParams {
    pub data: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<usize>,
}

fn default_gamma() -> f64 {
    0.05
}

fn default_m_samples() -> usize {
    DEFAULT_M_SAMPLES
}

fn default_noise() -> NoiseModel {
    NoiseModel::Uniform { kappa: 0.1 }
}

fn default_num_obs() -> usize {
    20
}

fn default_normal_range() -> (f64, f64) {
    (1.0, 50.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestParams {
    pub data: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<usize>,
    pub noise: NoiseModel,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_m_samples")]
    pub m_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpsaParams {
    #[serde(default)]
    pub spec: MaliciousGameSpec,
    #[serde(default = "default_num_obs")]
    pub num_obs: usize,
    pub sigma: f64,
    pub step: f64,
    pub iterations: usize,
    pub cost_samples: usize,
    #[serde(default = "default_noise")]
    pub noise: NoiseModel,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_normal_range")]
    pub normal_range: (f64, f64),
    #[serde(default = "default_m_samples")]
    pub m_samples: usize,
    /// Starting probes (`t, p_1..p_m` CSV); drawn from the spec's probe
    /// range when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_probes: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    #[serde(default)]
    pub spec: MaliciousGameSpec,
    #[serde(default = "default_num_obs")]
    pub num_obs: usize,
    #[serde(default = "default_noise")]
    pub noise: NoiseModel,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_m_samples")]
    pub m_samples: usize,
    pub repetitions: usize,
    #[serde(default = "default_normal_range")]
    pub normal_range: (f64, f64),
    /// Fixed probes for every repetition (e.g. an SPSA result); fresh probes
    /// from the spec's range per repetition when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn existing(base: &Path, p: &Path) -> Result<PathBuf> {
    let full = resolve(base, p);
    if full.is_file() {
        Ok(full)
    } else {
        Err(Error::config(format!("input file {} does not exist", full.display())))
    }
}

/// Runs `cfg`, resolving inputs against `base` and writing into `out`.
/// Returns the summary that was written to `out/summary.json`.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path, out: &Path) -> Result<Value> {
    let result = match &cfg.experiment {
        Experiment::Learning(p) => run_learning(p, cfg.seed, base, out)?,
        Experiment::Afriat(p) => run_afriat(p, base)?,
        Experiment::Nash(p) => run_nash(p, base)?,
        Experiment::StatTest(p) => run_stat_test(p, cfg.seed, base)?,
        Experiment::Spsa(p) => run_spsa(p, cfg.seed, base, out)?,
        Experiment::Detection(p) => run_detection(p, cfg.seed, base)?,
    };
    let summary = json!({
        "kind": cfg.experiment.kind(),
        "seed": cfg.seed,
        "config": cfg,
        "result": result,
    });
    fs::create_dir_all(out)?;
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

pub fn load_game(path: &Path) -> Result<NormalFormGame<f64>> {
    let file: GameFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.into_game()
}

pub fn load_weights(path: &Path, step_size: f64) -> Result<WeightMatrix<f64>> {
    let net = NetworkFile::load(path)?;
    WeightMatrix::new(&net.graph()?, &net.combination()?, step_size)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Diffusion => "diffusion",
        Variant::Isolated => "isolated",
    }
}

fn run_learning(p: &LearningParams, seed: u64, base: &Path, out: &Path) -> Result<Value> {
    let game = load_game(&existing(base, &p.game)?)?;
    let weights = load_weights(&existing(base, &p.network)?, p.step_size)?;
    if p.variants.is_empty() {
        return Err(Error::config("at least one variant is required"));
    }
    if p.checkpoint_every == 0 {
        return Err(Error::config("checkpoint_every must be positive"));
    }
    let mut cfg = LearnerConfig::new(p.step_size, p.exploration, seed);
    cfg.inertia = p.inertia.clone();
    fs::create_dir_all(out)?;

    let checkpoints: Vec<usize> = (1..=p.horizon / p.checkpoint_every).map(|k| k * p.checkpoint_every).collect();
    let mut variants = serde_json::Map::new();
    let mut means = Vec::new();
    for (k, &variant) in p.variants.iter().enumerate() {
        let trace = run_simulation(&game, &weights, &cfg, p.horizon, p.runs, variant)?;
        let name = variant_name(variant);
        let file = if k == 0 {
            "trace.csv".to_string()
        } else {
            format!("trace-{}.csv", name)
        };
        io::write_trace(fs::File::create(out.join(&file))?, &trace)?;
        let ce: Vec<f64> = trace
            .final_behavior
            .iter()
            .map(|z| ce_epsilon_violation(&game, z.as_slice()))
            .collect::<Result<_>>()?;
        variants.insert(
            name.to_string(),
            json!({
                "trace": file,
                "final_mean_d_n": trace.mean_distance[p.horizon - 1],
                "checkpoints": checkpoints
                    .iter()
                    .map(|&n| json!({"n": n, "mean_d_n": trace.mean_distance[n - 1]}))
                    .collect::<Vec<_>>(),
                "median_ce_violation": median(ce),
            }),
        );
        means.push((variant, trace.mean_distance));
    }
    let mut result = json!({ "variants": variants });
    let find = |v: Variant| means.iter().find(|(w, _)| *w == v).map(|(_, m)| m);
    if let (Some(d), Some(i)) = (find(Variant::Diffusion), find(Variant::Isolated)) {
        if !checkpoints.is_empty() {
            let wins = checkpoints.iter().filter(|&&n| d[n - 1] <= i[n - 1]).count();
            result["diffusion_not_worse_fraction"] = json!(wins as f64 / checkpoints.len() as f64);
        }
    }
    Ok(result)
}

/// 1-based observation labels of a GARP witness.
pub fn one_based(cycle: &[usize]) -> Vec<usize> {
    cycle.iter().map(|t| t + 1).collect()
}

fn run_afriat(p: &DataParams, base: &Path) -> Result<Value> {
    let data = io::load_dataset(existing(base, &p.data)?, Some(p.agents.unwrap_or(1)))?;
    Ok(match afriat_test(&data)? {
        Verdict::Pass(c) => json!({"verdict": "pass", "certificate": c}),
        Verdict::Fail => {
            let cycle = match garp_check(&data)? {
                GarpOutcome::Fail { cycle } => Some(one_based(&cycle)),
                GarpOutcome::Pass => None,
            };
            json!({"verdict": "fail", "cycle": cycle})
        }
    })
}

fn run_nash(p: &DataParams, base: &Path) -> Result<Value> {
    let data = io::load_dataset(existing(base, &p.data)?, p.agents)?;
    Ok(match nash_rationality_test(&data)? {
        Verdict::Pass(c) => json!({"verdict": "pass", "certificate": c}),
        Verdict::Fail => json!({"verdict": "fail"}),
    })
}

fn run_stat_test(p: &StatTestParams, seed: u64, base: &Path) -> Result<Value> {
    let data = io::load_dataset(existing(base, &p.data)?, p.agents)?;
    let noisy = NoisyDataset::from_observed(data, p.noise)?;
    Ok(serde_json::to_value(detection::statistical_test(&noisy, p.gamma, p.m_samples, seed)?)?)
}

fn draw_probes<R: Rng + ?Sized>(spec: &MaliciousGameSpec, num_obs: usize, rng: &mut R) -> Vec<f64> {
    (0..num_obs).flat_map(|_| spec.draw_probe(rng)).collect()
}

fn run_spsa(p: &SpsaParams, seed: u64, base: &Path, out: &Path) -> Result<Value> {
    p.spec.validate()?;
    let p0 = match &p.initial_probes {
        Some(path) => {
            let (probes, m) = io::read_probes(fs::File::open(existing(base, path)?)?)?;
            if m != p.spec.probe_dim {
                return Err(Error::config("initial probes do not match the spec's probe dimension"));
            }
            probes
        }
        None => draw_probes(&p.spec, p.num_obs, &mut rng::stream(seed, Domain::Probes, 0)),
    };
    let cfg = SpsaConfig {
        sigma: p.sigma,
        step: p.step,
        iterations: p.iterations,
        cost_samples: p.cost_samples,
        seed,
    };
    let ctx = CostContext {
        num_agents: p.spec.num_agents,
        probe_dim: p.spec.probe_dim,
        noise: p.noise,
        gamma: p.gamma,
        normal_range: p.normal_range,
        m_samples: p.m_samples,
    };
    let trace = spsa_optimize(&p0, &cfg, &ctx)?;
    fs::create_dir_all(out)?;
    io::write_probes(fs::File::create(out.join("probes.csv"))?, trace.final_probe(), p.spec.probe_dim)?;
    let mut w = csv::Writer::from_path(out.join("spsa-trace.csv"))?;
    w.write_record(["q", "cost"])?;
    for (q, c) in trace.costs.iter().enumerate() {
        w.write_record([(q + 1).to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(json!({
        "first_cost": trace.costs.first(),
        "final_tenth_mean_cost": if trace.costs.is_empty() { None } else { Some(trace.tail_mean(0.1)) },
        "initial_probes": p0,
        "final_probes": trace.final_probe(),
        "trace": "spsa-trace.csv",
        "probes": "probes.csv",
    }))
}

/// Error rates of the decision test (clean data) and the statistical test
/// (noisy data) over repeated draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRates {
    pub repetitions: usize,
    /// Statistical test rejects noisy potential-game data.
    pub type_one: f64,
    /// Statistical test accepts noisy random-responder data.
    pub type_two: f64,
    /// Decision test rejects clean potential-game data.
    pub decision_type_one: f64,
    /// Decision test accepts clean random-responder data.
    pub decision_type_two: f64,
}

/// Outcome of one repetition: (stat rejects malicious, stat accepts
/// normal, decision rejects malicious, decision accepts normal).
fn detection_repetition(p: &DetectionParams, fixed: Option<&[f64]>, seed: u64, r: u64) -> Result<[bool; 4]> {
    let mut rng = rng::stream(seed, Domain::Experiment, r);
    let probes = match fixed {
        Some(f) => f.to_vec(),
        None => draw_probes(&p.spec, p.num_obs, &mut rng),
    };
    let malicious = potential_game_responses(&p.spec, &probes, &mut rng)?;
    let normal = generate_normal_agent_data(&probes, p.spec.probe_dim, p.spec.num_agents, p.normal_range, &mut rng)?;
    let noisy_mal = NoisyDataset::observe(&malicious, p.noise, &mut rng)?;
    let noisy_norm = NoisyDataset::observe(&normal, p.noise, &mut rng)?;
    let m_seed: u64 = rng.random();
    let dist = detection::MDistribution::estimate(
        &probes,
        p.spec.probe_dim,
        p.spec.num_agents,
        &p.noise,
        p.m_samples,
        m_seed,
    )?;
    Ok([
        !detection::accepts(noisy_mal.observed(), &dist, p.gamma)?,
        detection::accepts(noisy_norm.observed(), &dist, p.gamma)?,
        !nash_rationality_test(&malicious)?.passed(),
        nash_rationality_test(&normal)?.passed(),
    ])
}

pub fn detection_rates(p: &DetectionParams, fixed_probes: Option<&[f64]>, seed: u64) -> Result<DetectionRates> {
    p.spec.validate()?;
    p.noise.validate()?;
    if p.repetitions == 0 {
        return Err(Error::config("repetitions must be positive"));
    }
    if let Some(f) = fixed_probes {
        if f.len() % p.spec.probe_dim != 0 || f.is_empty() {
            return Err(Error::config("fixed probes do not match the spec's probe dimension"));
        }
    }
    let outcomes = (0..p.repetitions as u64)
        .into_par_iter()
        .map(|r| detection_repetition(p, fixed_probes, seed, r))
        .collect::<Result<Vec<_>>>()?;
    let rate = |k: usize| outcomes.iter().filter(|o| o[k]).count() as f64 / p.repetitions as f64;
    Ok(DetectionRates {
        repetitions: p.repetitions,
        type_one: rate(0),
        type_two: rate(1),
        decision_type_one: rate(2),
        decision_type_two: rate(3),
    })
}

/// Statistical-test decisions on noisy potential-game data, one per
/// repetition, with fresh probes, budgets and noise each time.
pub fn type_one_decisions(p: &DetectionParams, seed: u64) -> Result<Vec<Decision>> {
    p.spec.validate()?;
    (0..p.repetitions as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, Domain::Experiment, r);
            let clean = generate_potential_game_data(&p.spec, p.num_obs, &mut rng)?;
            let noisy = NoisyDataset::observe(&clean, p.noise, &mut rng)?;
            let m_seed: u64 = rng.random();
            Ok(detection::statistical_test(&noisy, p.gamma, p.m_samples, m_seed)?.decision)
        })
        .collect()
}

fn run_detection(p: &DetectionParams, seed: u64, base: &Path) -> Result<Value> {
    let fixed = match &p.probes {
        Some(path) => {
            let (probes, m) = io::read_probes(fs::File::open(existing(base, path)?)?)?;
            if m != p.spec.probe_dim {
                return Err(Error::config("probe file does not match the spec's probe dimension"));
            }
            Some(probes)
        }
        None => None,
    };
    Ok(serde_json::to_value(detection_rates(p, fixed.as_deref(), seed)?)?)
}
