//! Desk-scale closed training loop.
//!
//! A tabular bigram policy emits tagged responses for synthetic
//! cue-dependent tasks; the reward module scores them, dynamic sampling
//! filters the groups, and ascent on the surrogate objective drives both
//! format and accuracy up from their untrained baselines. The whole loop
//! is deterministic: per-rollout RNG streams are derived from
//! (seed, step, task, attempt), reductions run in a fixed order, and two
//! runs with the same seed produce bitwise-identical metric histories.

mod policy;
mod tasks;
mod vocab;

pub use policy::{PolicyBinding, ToyPolicy};
pub use tasks::{feature_map, make_synthetic_suite, SyntheticTask, NUM_FEATURES};
pub use vocab::{golden_sequence, render_response, symbols, ToyVocab};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dapo::{
    self, dynamic_sample_filter, DapoConfig, DapoError, GroupPolicy, Rollout, RolloutGroup,
};
use crate::pattern::PatternConfig;
use crate::reward::{compute_reward, RewardBreakdown, RewardConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("importance ratio {ratio} within 1e-3 of a clip boundary; re-sample the point")]
    BoundaryTooClose { ratio: f64 },
    #[error(transparent)]
    Dapo(#[from] DapoError),
}

/// Everything the training loop needs. All defaults are overridable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    /// Rollouts per task group (G).
    pub group_size: usize,
    pub tasks_per_batch: usize,
    pub learning_rate: f64,
    pub max_steps: usize,
    /// Fresh-group resampling attempts per task when a group is filtered.
    pub oversample_factor: usize,
    /// Fixed response length T; with `use_stop_symbol`, the upper bound.
    pub max_response_len: usize,
    /// Variable-length variant: the final "." symbol ends the response
    /// early, exercising token-level normalization with unequal lengths.
    pub use_stop_symbol: bool,
    pub dapo: DapoConfig,
    pub reward: RewardConfig,
    pub pattern: PatternConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            group_size: 16,
            tasks_per_batch: 8,
            // Tuned for the tabular policy: the objective's pooled 1/Σ|o_i|
            // normalization makes per-parameter gradients ~1e-2, so unit-ish
            // step sizes are what actually move the logits.
            learning_rate: 2.5,
            max_steps: 500,
            oversample_factor: 3,
            max_response_len: 12,
            use_stop_symbol: false,
            dapo: DapoConfig::default(),
            reward: RewardConfig::default(),
            pattern: PatternConfig::lenient(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.oversample_factor == 0 {
            return Err(SimError::InvalidConfig(
                "oversample_factor must be >= 1".into(),
            ));
        }
        if self.group_size < 2 {
            return Err(SimError::InvalidConfig("group_size must be >= 2".into()));
        }
        if self.tasks_per_batch == 0 {
            return Err(SimError::InvalidConfig(
                "tasks_per_batch must be >= 1".into(),
            ));
        }
        if self.max_response_len == 0 {
            return Err(SimError::InvalidConfig(
                "max_response_len must be >= 1".into(),
            ));
        }
        self.dapo.validate()?;
        self.reward
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

/// The untrained starting policy.
///
/// The backbone transitions of the golden response are near-deterministic,
/// with two deliberate spreads: the answer label is uniform over A–D
/// (chance accuracy, 1/F) and the think block either completes or jumps
/// straight to the answer block (roughly 50/50 well-formed), leaving the
/// format reward something to shape.
pub fn untrained_policy(vocab: &ToyVocab) -> ToyPolicy {
    use symbols::*;
    const BACKBONE: f64 = 10.0;
    const SPLIT: f64 = 9.0;
    const LABEL_SPREAD: f64 = 7.0;

    let mut policy = ToyPolicy::zeros(NUM_FEATURES, vocab.size());
    for feature in 0..NUM_FEATURES {
        let mut pref = |prev: Option<u32>, next: u32, weight: f64| {
            policy.set_logit(feature, prev, next, weight);
        };
        pref(None, THINK_OPEN, BACKBONE);
        pref(Some(THINK_OPEN), FILLER_LOOK, BACKBONE);
        pref(Some(FILLER_LOOK), VCUE1_OPEN, BACKBONE);
        pref(Some(VCUE1_OPEN), CUE_TEXT + feature as u32, BACKBONE);
        for cue in 0..NUM_FEATURES as u32 {
            pref(Some(CUE_TEXT + cue), VCUE1_CLOSE, BACKBONE);
        }
        pref(Some(VCUE1_CLOSE), FILLER_REASON, BACKBONE);
        // Format fork: finish the think block properly, or jump straight
        // into the answer and leave <think> unclosed.
        pref(Some(FILLER_REASON), FILLER_CONFIRM, SPLIT);
        pref(Some(FILLER_REASON), ANSWER_OPEN, SPLIT);
        pref(Some(FILLER_CONFIRM), THINK_CLOSE, BACKBONE);
        pref(Some(THINK_CLOSE), ANSWER_OPEN, BACKBONE);
        for label in 0..NUM_FEATURES as u32 {
            pref(Some(ANSWER_OPEN), LABEL + label, LABEL_SPREAD);
            pref(Some(LABEL + label), ANSWER_CLOSE, BACKBONE);
        }
        pref(Some(ANSWER_CLOSE), PERIOD, BACKBONE);
        pref(Some(PERIOD), SPACE, BACKBONE);
        pref(Some(SPACE), PERIOD, BACKBONE);
    }
    policy
}

/// One sampled response with its rendering and reward breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRollout {
    pub rollout: Rollout,
    pub text: String,
    pub breakdown: RewardBreakdown,
}

/// Sample one response left to right and score it.
pub fn sample_rollout(
    policy: &ToyPolicy,
    task: &SyntheticTask,
    vocab: &ToyVocab,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> SimRollout {
    let mut tokens = Vec::with_capacity(config.max_response_len);
    let mut logps = Vec::with_capacity(config.max_response_len);
    let mut prev = None;
    for _ in 0..config.max_response_len {
        let (symbol, lp) = policy.sample_symbol(task.feature, prev, rng);
        tokens.push(symbol);
        logps.push(lp);
        prev = Some(symbol);
        if config.use_stop_symbol && symbol == symbols::PERIOD {
            break;
        }
    }
    let text = render_response(&tokens, vocab);
    let token_length = tokens.len() as u32;
    let breakdown = compute_reward(
        &text,
        token_length,
        &task.question,
        &config.reward,
        &config.pattern,
    );
    let rollout = Rollout {
        tokens,
        logp_old: logps,
        reward: breakdown.total,
        is_equivalent: breakdown.is_equivalent,
    };
    SimRollout {
        rollout,
        text,
        breakdown,
    }
}

/// Aggregates over every rollout sampled during one collection pass,
/// including rollouts of groups that were later filtered or resampled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollectStats {
    pub sampled_rollouts: usize,
    pub well_formed: usize,
    pub correct: usize,
    pub reward_sum: f64,
    pub response_tokens: usize,
    pub dropped_groups: usize,
    /// Tasks whose groups were filtered on every attempt.
    pub exhausted_tasks: Vec<String>,
}

impl CollectStats {
    pub fn well_formed_fraction(&self) -> f64 {
        if self.sampled_rollouts == 0 {
            0.0
        } else {
            self.well_formed as f64 / self.sampled_rollouts as f64
        }
    }

    pub fn mean_accuracy(&self) -> f64 {
        if self.sampled_rollouts == 0 {
            0.0
        } else {
            self.correct as f64 / self.sampled_rollouts as f64
        }
    }

    pub fn mean_reward(&self) -> f64 {
        if self.sampled_rollouts == 0 {
            0.0
        } else {
            self.reward_sum / self.sampled_rollouts as f64
        }
    }

    pub fn mean_response_len(&self) -> f64 {
        if self.sampled_rollouts == 0 {
            0.0
        } else {
            self.response_tokens as f64 / self.sampled_rollouts as f64
        }
    }
}

/// RNG stream id for one (step, task, attempt) triple. Streams are
/// independent, so rollout sampling could run per-task in parallel without
/// changing any draw.
fn stream_id(step: usize, task_index: usize, attempt: usize) -> u64 {
    ((step as u64) << 20) | ((task_index as u64 & 0xfff) << 8) | (attempt as u64 & 0xff)
}

/// Sample one group per task, apply dynamic sampling, and refill filtered
/// tasks with fresh groups up to `oversample_factor` attempts.
pub fn collect_groups(
    policy: &ToyPolicy,
    tasks: &[SyntheticTask],
    vocab: &ToyVocab,
    config: &TrainConfig,
    step: usize,
) -> (Vec<RolloutGroup>, CollectStats) {
    let mut groups = Vec::with_capacity(tasks.len());
    let mut stats = CollectStats::default();
    for (task_index, task) in tasks.iter().enumerate() {
        let mut kept = None;
        for attempt in 0..config.oversample_factor {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream_id(step, task_index, attempt));
            let mut rollouts = Vec::with_capacity(config.group_size);
            for _ in 0..config.group_size {
                let sim = sample_rollout(policy, task, vocab, config, &mut rng);
                stats.sampled_rollouts += 1;
                stats.well_formed += usize::from(sim.breakdown.format_ok);
                stats.correct += usize::from(sim.breakdown.is_equivalent);
                stats.reward_sum += sim.breakdown.total;
                stats.response_tokens += sim.rollout.len();
                rollouts.push(sim.rollout);
            }
            let outcome = dynamic_sample_filter(vec![RolloutGroup {
                question_id: task.id.clone(),
                rollouts,
            }]);
            match outcome.kept.into_iter().next() {
                Some(group) => {
                    kept = Some(group);
                    break;
                }
                None => stats.dropped_groups += 1,
            }
        }
        match kept {
            Some(group) => groups.push(group),
            None => stats.exhausted_tasks.push(task.id.clone()),
        }
    }
    (groups, stats)
}

/// Per-step training metrics, in emission order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    pub mean_reward: f64,
    pub mean_accuracy: f64,
    pub kept_fraction: f64,
    pub well_formed_fraction: f64,
    pub mean_response_len: f64,
    pub objective: f64,
    pub grad_norm: f64,
}

/// Mutable loop state: the policy, the step counter (which doubles as the
/// RNG cursor — streams are derived, not carried), and the metric history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub policy: ToyPolicy,
    pub step: usize,
    pub metrics: Vec<StepMetrics>,
}

impl TrainState {
    pub fn new(policy: ToyPolicy) -> Self {
        Self {
            policy,
            step: 0,
            metrics: Vec::new(),
        }
    }
}

/// One collect → filter → gradient → ascent step. Skips the update (but
/// still logs metrics) when every group was filtered out.
pub fn train_step(
    state: &mut TrainState,
    tasks: &[SyntheticTask],
    vocab: &ToyVocab,
    config: &TrainConfig,
) -> Result<(), SimError> {
    let (groups, stats) = collect_groups(&state.policy, tasks, vocab, config, state.step);
    let kept_fraction = groups.len() as f64 / tasks.len() as f64;
    let (objective, grad_norm) = if groups.is_empty() {
        (0.0, 0.0)
    } else {
        let features = feature_map(tasks);
        let binding = PolicyBinding::new(&state.policy, &features);
        let eval = dapo::dapo_objective_with_gradient(&binding, &groups, &config.dapo)?;
        let gradient = eval.gradient.as_deref().expect("gradient requested");
        let grad_norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        state.policy.apply_gradient(gradient, config.learning_rate);
        (eval.value, grad_norm)
    };
    state.metrics.push(StepMetrics {
        step: state.step,
        mean_reward: stats.mean_reward(),
        mean_accuracy: stats.mean_accuracy(),
        kept_fraction,
        well_formed_fraction: stats.well_formed_fraction(),
        mean_response_len: stats.mean_response_len(),
        objective,
        grad_norm,
    });
    state.step += 1;
    Ok(())
}

/// Run the full loop over a fixed task suite; deterministic for fixed seed.
pub fn run_training(config: &TrainConfig) -> Result<TrainState, SimError> {
    config.validate()?;
    let vocab = ToyVocab::standard();
    let tasks = make_synthetic_suite(config.seed, config.tasks_per_batch)?;
    let mut state = TrainState::new(untrained_policy(&vocab));
    for _ in 0..config.max_steps {
        train_step(&mut state, &tasks, &vocab, config)?;
    }
    Ok(state)
}

/// Central-difference check of the analytic surrogate gradient.
///
/// Perturbs every parameter by ±h and returns the maximum over parameters
/// of |analytic - numeric| / max(|numeric|, 1e-12). Errors with
/// [`SimError::BoundaryTooClose`] when any importance ratio sits within
/// 1e-3 of a clip boundary, where the subgradient is one-sided.
pub fn finite_difference_check(
    policy: &ToyPolicy,
    features: &std::collections::BTreeMap<String, usize>,
    groups: &[RolloutGroup],
    config: &DapoConfig,
    h: f64,
) -> Result<f64, SimError> {
    let binding = PolicyBinding::new(policy, features);
    for group in groups {
        for rollout in &group.rollouts {
            let logps = binding.rollout_logps(&group.question_id, &rollout.tokens)?;
            for (new, old) in logps.iter().zip(&rollout.logp_old) {
                let ratio = (new - old).exp();
                for boundary in [1.0 - config.epsilon_low, 1.0 + config.epsilon_high] {
                    if (ratio - boundary).abs() <= 1e-3 {
                        return Err(SimError::BoundaryTooClose { ratio });
                    }
                }
            }
        }
    }

    let analytic = dapo::dapo_gradient(&binding, groups, config)?;
    let eval_at = |p: &ToyPolicy| -> Result<f64, SimError> {
        let binding = PolicyBinding::new(p, features);
        Ok(dapo::dapo_objective_with_gradient(&binding, groups, config)?.value)
    };
    let mut work = policy.clone();
    let mut max_err = 0.0f64;
    for p in 0..policy.param_count() {
        let original = policy.logits()[p];
        work.logits_mut()[p] = original + h;
        let plus = eval_at(&work)?;
        work.logits_mut()[p] = original - h;
        let minus = eval_at(&work)?;
        work.logits_mut()[p] = original;
        let numeric = (plus - minus) / (2.0 * h);
        let err = (analytic[p] - numeric).abs() / numeric.abs().max(1e-12);
        max_err = max_err.max(err);
    }
    Ok(max_err)
}
