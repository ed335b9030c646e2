use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frontier::{sweep_entropy_throughput, FrontierRow};
use super::models::{analytic_acceptance, simulate_trial, ModelKind, ParticipantModel, SimContext};
use super::{Result, SimError};
use crate::protocol::{plan_validated, trial_time, DeviceGeometry, SessionConfig};
use crate::rng::{split_seed, stream, Domain};

/// Trials per work unit. Fixed so that results do not depend on thread count.
const CHUNK: u64 = 1 << 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub model: ParticipantModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Code length, alphabet, condition schedule and time model.
    pub session: SessionConfig,
    pub geometry: DeviceGeometry,
    /// Population mixture; weights sum to 1.
    pub mixture: Vec<MixtureComponent>,
    pub trials_total: u64,
    pub rng_seed: u64,
    /// Code lengths for the frontier table, inclusive.
    pub frontier_n: (u32, u32),
}

impl CampaignConfig {
    pub fn new(session: SessionConfig, mixture: Vec<MixtureComponent>, trials_total: u64, rng_seed: u64) -> Self {
        CampaignConfig { session, geometry: DeviceGeometry::default(), mixture, trials_total, rng_seed, frontier_n: (2, 5) }
    }

    pub fn validate(&self) -> Result<()> {
        self.session.validate()?;
        self.geometry.validate()?;
        if self.trials_total == 0 {
            return Err(SimError::InvalidConfiguration("trials_total must be >= 1".into()));
        }
        if self.mixture.is_empty() {
            return Err(SimError::InvalidConfiguration("mixture must have at least one model".into()));
        }
        let mut total = 0.0;
        for c in &self.mixture {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(SimError::InvalidConfiguration(format!("mixture weight {} is negative", c.weight)));
            }
            c.model.validate()?;
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidConfiguration(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub component: usize,
    pub kind: ModelKind,
    pub weight: f64,
    pub foveated: bool,
    pub trials: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub acceptance_ci95: (f64, f64),
    /// Mean exact acceptance probability of this model over every planned trial.
    pub expected_acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMetrics {
    pub condition: String,
    pub opacity: f64,
    pub trials: u64,
    pub accepted: u64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignMetrics {
    pub rng_seed: u64,
    pub code_length: usize,
    pub alphabet_size: u8,
    pub trials_total: u64,
    pub accepted_count: u64,
    pub success_rate: f64,
    pub success_ci95: (f64, f64),
    pub per_condition: Vec<ConditionMetrics>,
    pub per_model: Vec<ModelMetrics>,
    /// Accepted trials produced without foveation / accepted trials.
    pub label_noise_rate: f64,
    /// Same quantity from mixture weights and exact per-model acceptance.
    pub label_noise_closed_form: f64,
    pub trial_time_ms: f64,
    pub throughput_trials_per_min: f64,
    pub frontier_rows: Vec<FrontierRow>,
}

/// `sum(w*a over non-foveating) / sum(w*a over all)`; zero when nothing is accepted.
pub fn bayes_label_noise(components: &[(f64, f64, bool)]) -> f64 {
    let all: f64 = components.iter().map(|(w, a, _)| w * a).sum();
    let cheat: f64 = components.iter().filter(|(_, _, fov)| !fov).map(|(w, a, _)| w * a).sum();
    if all > 0.0 {
        cheat / all
    } else {
        0.0
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Default)]
struct Tally {
    model_trials: Vec<u64>,
    model_accepted: Vec<u64>,
    model_accepted_cheat: Vec<u64>,
    expected_sum: Vec<f64>,
    block_trials: Vec<u64>,
    block_accepted: Vec<u64>,
}

impl Tally {
    fn new(models: usize, blocks: usize) -> Self {
        Tally {
            model_trials: vec![0; models],
            model_accepted: vec![0; models],
            model_accepted_cheat: vec![0; models],
            expected_sum: vec![0.0; models],
            block_trials: vec![0; blocks],
            block_accepted: vec![0; blocks],
        }
    }

    fn merge(mut self, other: &Tally) -> Self {
        let add = |a: &mut Vec<u64>, b: &Vec<u64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.model_trials, &other.model_trials);
        add(&mut self.model_accepted, &other.model_accepted);
        add(&mut self.model_accepted_cheat, &other.model_accepted_cheat);
        add(&mut self.block_trials, &other.block_trials);
        add(&mut self.block_accepted, &other.block_accepted);
        self.expected_sum.iter_mut().zip(&other.expected_sum).for_each(|(x, y)| *x += y);
        self
    }
}

fn block_index(session: &SessionConfig, trial: u64) -> usize {
    let cycle: u64 = session.schedule.iter().map(|b| b.repeats as u64).sum();
    let mut k = trial % cycle;
    for (i, b) in session.schedule.iter().enumerate() {
        if k < b.repeats as u64 {
            return i;
        }
        k -= b.repeats as u64;
    }
    0
}

fn run_chunk(cfg: &CampaignConfig, range: std::ops::Range<u64>) -> Result<Tally> {
    let models = cfg.mixture.len();
    let mut tally = Tally::new(models, cfg.session.schedule.len());
    let ctx = SimContext { geometry: cfg.geometry, alphabet_size: cfg.session.alphabet_size };
    let cumulative: Vec<f64> = cfg
        .mixture
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.weight;
            Some(*acc)
        })
        .collect();

    for trial in range {
        let b = block_index(&cfg.session, trial);
        let block = cfg.session.schedule[b];
        let spec = plan_validated(
            &cfg.session,
            &block,
            &cfg.geometry,
            trial,
            split_seed(cfg.rng_seed, Domain::TrialPlan, trial),
        )?;
        let mut rng = stream(cfg.rng_seed, Domain::Behaviour, trial);
        let u: f64 = rng.gen();
        let m = cumulative.iter().position(|&c| u < c).unwrap_or(models - 1);
        let model = &cfg.mixture[m].model;
        let outcome = simulate_trial(model, &spec, &ctx, &mut rng)?;

        for (i, c) in cfg.mixture.iter().enumerate() {
            tally.expected_sum[i] += analytic_acceptance(&c.model, &spec, &ctx)?;
        }
        tally.model_trials[m] += 1;
        tally.block_trials[b] += 1;
        if outcome.accepted {
            tally.model_accepted[m] += 1;
            tally.block_accepted[b] += 1;
            if !outcome.foveated_per_digit.iter().all(|&f| f) {
                tally.model_accepted_cheat[m] += 1;
            }
        }
    }
    Ok(tally)
}

fn rate(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Run `trials_total` simulated trials and summarize them.
///
/// Trial `i` is planned from `(seed, TrialPlan, i)` and played from
/// `(seed, Behaviour, i)`, and work is cut into fixed-size chunks reduced in
/// order, so the metrics are bit-identical for any thread count.
pub fn simulate_campaign(cfg: &CampaignConfig) -> Result<CampaignMetrics> {
    cfg.validate()?;
    let chunks = cfg.trials_total.div_ceil(CHUNK);
    let partials: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(cfg, c * CHUNK..((c + 1) * CHUNK).min(cfg.trials_total)))
        .collect::<Result<_>>()?;
    let tally = partials
        .iter()
        .fold(Tally::new(cfg.mixture.len(), cfg.session.schedule.len()), |acc, t| acc.merge(t));

    let total = cfg.trials_total;
    let accepted: u64 = tally.model_accepted.iter().sum();
    let cheat: u64 = tally.model_accepted_cheat.iter().sum();

    let per_model: Vec<ModelMetrics> = cfg
        .mixture
        .iter()
        .enumerate()
        .map(|(i, c)| ModelMetrics {
            component: i,
            kind: c.model.kind(),
            weight: c.weight,
            foveated: c.model.foveates(),
            trials: tally.model_trials[i],
            accepted: tally.model_accepted[i],
            acceptance_rate: rate(tally.model_accepted[i], tally.model_trials[i]),
            acceptance_ci95: wilson_interval(tally.model_accepted[i], tally.model_trials[i]),
            expected_acceptance: tally.expected_sum[i] / total as f64,
        })
        .collect();

    let per_condition = cfg
        .session
        .schedule
        .iter()
        .enumerate()
        .map(|(i, b)| ConditionMetrics {
            condition: b.condition.label(),
            opacity: b.opacity,
            trials: tally.block_trials[i],
            accepted: tally.block_accepted[i],
            success_rate: rate(tally.block_accepted[i], tally.block_trials[i]),
        })
        .collect();

    let closed: Vec<(f64, f64, bool)> =
        per_model.iter().map(|m| (m.weight, m.expected_acceptance, m.foveated)).collect();
    let n = cfg.session.code_length as u32;
    let t = trial_time(&cfg.session.time_model, n);
    let (lo, hi) = cfg.frontier_n;

    Ok(CampaignMetrics {
        rng_seed: cfg.rng_seed,
        code_length: cfg.session.code_length,
        alphabet_size: cfg.session.alphabet_size,
        trials_total: total,
        accepted_count: accepted,
        success_rate: rate(accepted, total),
        success_ci95: wilson_interval(accepted, total),
        per_condition,
        per_model,
        label_noise_rate: rate(cheat, accepted),
        label_noise_closed_form: bayes_label_noise(&closed),
        trial_time_ms: t,
        throughput_trials_per_min: 60_000.0 / t,
        frontier_rows: sweep_entropy_throughput(lo..=hi, &cfg.session.time_model)?,
    })
}
