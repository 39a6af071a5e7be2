//! The clipped surrogate objective with group-relative advantages.
//!
//! For a batch of rollout groups the objective is
//!
//! ```text
//! J = (1 / Σ_i |o_i|) Σ_i Σ_t min( r_{i,t} Â_i,
//!                                  clip(r_{i,t}, 1 - ε_low, 1 + ε_high) Â_i )
//! r_{i,t} = exp(logp_new_{i,t} - logp_old_{i,t})
//! Â_i     = (R_i - mean(R)) / max(std(R), std_floor)
//! ```
//!
//! with the token normalization pooled across every rollout of every kept
//! group (not per rollout and not per group), and the advantage treated as
//! a constant. There is no KL term and no critic. Groups whose rollouts
//! are all correct or all incorrect carry no signal and are removed by
//! [`dynamic_sample_filter`] before evaluation.
//!
//! Reductions run in a fixed order — group, then rollout, then token — so
//! results are bitwise reproducible at any parallelism level.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DapoError {
    #[error("group {question_id} has {got} rollouts; need at least 2")]
    GroupTooSmall { question_id: String, got: usize },
    #[error("length mismatch: {context}")]
    LengthMismatch { context: String },
    #[error("non-finite log-probability or ratio: {context}")]
    NonFinite { context: String },
    #[error("empty batch: no groups or no tokens to aggregate")]
    EmptyBatch,
    #[error("policy cannot represent token/context pair: {context}")]
    ContextMiss { context: String },
    #[error("invalid rollout: {0}")]
    InvalidRollout(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// One sampled response: token ids, sampling-time log-probabilities, and
/// the scalar reward plus correctness flag from the reward module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub tokens: Vec<u32>,
    pub logp_old: Vec<f64>,
    pub reward: f64,
    pub is_equivalent: bool,
}

impl Rollout {
    pub fn new(
        tokens: Vec<u32>,
        logp_old: Vec<f64>,
        reward: f64,
        is_equivalent: bool,
    ) -> Result<Self, DapoError> {
        if tokens.len() != logp_old.len() {
            return Err(DapoError::InvalidRollout(format!(
                "{} tokens but {} log-probabilities",
                tokens.len(),
                logp_old.len()
            )));
        }
        if let Some(bad) = logp_old.iter().find(|lp| !lp.is_finite() || **lp > 0.0) {
            return Err(DapoError::InvalidRollout(format!(
                "log-probability {bad} is not a finite value <= 0"
            )));
        }
        Ok(Self {
            tokens,
            logp_old,
            reward,
            is_equivalent,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One question with its G sampled responses — the unit the objective
/// averages over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub question_id: String,
    pub rollouts: Vec<Rollout>,
}

impl RolloutGroup {
    pub fn group_size(&self) -> usize {
        self.rollouts.len()
    }

    pub fn token_count(&self) -> usize {
        self.rollouts.iter().map(Rollout::len).sum()
    }

    fn require_valid(&self) -> Result<(), DapoError> {
        if self.group_size() < 2 {
            return Err(DapoError::GroupTooSmall {
                question_id: self.question_id.clone(),
                got: self.group_size(),
            });
        }
        Ok(())
    }
}

/// Clipping, group-size, and advantage-normalization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DapoConfig {
    pub epsilon_low: f64,
    pub epsilon_high: f64,
    /// Target rollouts per group.
    pub group_size: usize,
    /// Replaces the advantage denominator when the reward std degenerates.
    pub std_floor: f64,
    /// Bessel-corrected std instead of population std.
    pub use_sample_std: bool,
}

impl Default for DapoConfig {
    fn default() -> Self {
        Self {
            epsilon_low: 0.20,
            epsilon_high: 0.28,
            group_size: 16,
            std_floor: 1e-8,
            use_sample_std: false,
        }
    }
}

impl DapoConfig {
    pub fn validate(&self) -> Result<(), DapoError> {
        if !(self.epsilon_low > 0.0) {
            return Err(DapoError::InvalidConfig(format!(
                "epsilon_low must be > 0, got {}",
                self.epsilon_low
            )));
        }
        if self.epsilon_high < self.epsilon_low {
            return Err(DapoError::InvalidConfig(format!(
                "epsilon_high {} < epsilon_low {}",
                self.epsilon_high, self.epsilon_low
            )));
        }
        if self.group_size < 2 {
            return Err(DapoError::InvalidConfig(format!(
                "group_size must be >= 2, got {}",
                self.group_size
            )));
        }
        if !(self.std_floor > 0.0) {
            return Err(DapoError::InvalidConfig(format!(
                "std_floor must be > 0, got {}",
                self.std_floor
            )));
        }
        Ok(())
    }
}

/// Group-relative advantages, one per rollout, broadcast to every token of
/// that rollout during aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageSet {
    pub advantages: Vec<f64>,
    pub group_mean: f64,
    pub group_std: f64,
}

/// Â_i = (R_i - mean) / max(std, std_floor) over one group's rewards.
pub fn compute_advantages(
    group: &RolloutGroup,
    config: &DapoConfig,
) -> Result<AdvantageSet, DapoError> {
    group.require_valid()?;
    let n = group.group_size() as f64;
    // Identical rewards must yield exactly zero advantages; a naive mean
    // of e.g. three 0.7s misses by one ulp and the std floor would blow
    // that up into noise.
    let first = group.rollouts[0].reward;
    if group.rollouts.iter().all(|r| r.reward == first) {
        return Ok(AdvantageSet {
            advantages: vec![0.0; group.group_size()],
            group_mean: first,
            group_std: 0.0,
        });
    }
    let mean = group.rollouts.iter().map(|r| r.reward).sum::<f64>() / n;
    let sum_sq: f64 = group
        .rollouts
        .iter()
        .map(|r| (r.reward - mean) * (r.reward - mean))
        .sum();
    let denom = if config.use_sample_std { n - 1.0 } else { n };
    let std = (sum_sq / denom).sqrt();
    let divisor = std.max(config.std_floor);
    let advantages = group
        .rollouts
        .iter()
        .map(|r| (r.reward - mean) / divisor)
        .collect();
    Ok(AdvantageSet {
        advantages,
        group_mean: mean,
        group_std: std,
    })
}

/// Per-token importance ratios exp(logp_new - logp_old).
pub fn importance_ratio(logp_new: &[f64], logp_old: &[f64]) -> Result<Vec<f64>, DapoError> {
    if logp_new.len() != logp_old.len() {
        return Err(DapoError::LengthMismatch {
            context: format!(
                "logp_new has {} entries, logp_old has {}",
                logp_new.len(),
                logp_old.len()
            ),
        });
    }
    let mut ratios = Vec::with_capacity(logp_new.len());
    for (t, (new, old)) in logp_new.iter().zip(logp_old).enumerate() {
        if !new.is_finite() || !old.is_finite() {
            return Err(DapoError::NonFinite {
                context: format!("token {t}: logp_new={new}, logp_old={old}"),
            });
        }
        let ratio = (new - old).exp();
        if !ratio.is_finite() || ratio <= 0.0 {
            return Err(DapoError::NonFinite {
                context: format!("token {t}: ratio {ratio}"),
            });
        }
        ratios.push(ratio);
    }
    Ok(ratios)
}

/// One token's clipped surrogate term:
/// min(r·adv, clip(r, 1-ε_low, 1+ε_high)·adv).
pub fn clipped_term(ratio: f64, advantage: f64, config: &DapoConfig) -> f64 {
    let clipped = ratio.clamp(1.0 - config.epsilon_low, 1.0 + config.epsilon_high);
    (ratio * advantage).min(clipped * advantage)
}

/// The evaluated objective, with the stored per-token terms it was
/// composed from; `value` equals their fixed-order sum divided by the
/// pooled token count, exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    /// terms[group][rollout][token].
    pub token_terms: Vec<Vec<Vec<f64>>>,
    pub total_tokens: usize,
    /// Flat parameter gradient, present when evaluated through
    /// [`dapo_objective_with_gradient`].
    pub gradient: Option<Vec<f64>>,
}

/// Evaluate the surrogate objective over kept groups.
///
/// `logp_new[g][i][t]` aligns with `groups[g].rollouts[i].tokens[t]`.
/// Callers are expected to have applied [`dynamic_sample_filter`] first.
pub fn dapo_objective(
    groups: &[RolloutGroup],
    logp_new: &[Vec<Vec<f64>>],
    config: &DapoConfig,
) -> Result<ObjectiveEval, DapoError> {
    if groups.is_empty() {
        return Err(DapoError::EmptyBatch);
    }
    if logp_new.len() != groups.len() {
        return Err(DapoError::LengthMismatch {
            context: format!(
                "{} groups but logp_new for {}",
                groups.len(),
                logp_new.len()
            ),
        });
    }
    let mut token_terms = Vec::with_capacity(groups.len());
    let mut sum = 0.0;
    let mut total_tokens = 0usize;
    for (group, group_logps) in groups.iter().zip(logp_new) {
        if group_logps.len() != group.group_size() {
            return Err(DapoError::LengthMismatch {
                context: format!(
                    "group {}: {} rollouts but logp_new for {}",
                    group.question_id,
                    group.group_size(),
                    group_logps.len()
                ),
            });
        }
        let advantages = compute_advantages(group, config)?;
        let mut group_terms = Vec::with_capacity(group.group_size());
        for (i, (rollout, logps)) in group.rollouts.iter().zip(group_logps).enumerate() {
            let ratios = importance_ratio(logps, &rollout.logp_old).map_err(|e| match e {
                DapoError::LengthMismatch { context } => DapoError::LengthMismatch {
                    context: format!("group {} rollout {i}: {context}", group.question_id),
                },
                other => other,
            })?;
            let advantage = advantages.advantages[i];
            let mut rollout_terms = Vec::with_capacity(ratios.len());
            for ratio in ratios {
                let term = clipped_term(ratio, advantage, config);
                sum += term;
                rollout_terms.push(term);
            }
            total_tokens += rollout.len();
            group_terms.push(rollout_terms);
        }
        token_terms.push(group_terms);
    }
    if total_tokens == 0 {
        return Err(DapoError::EmptyBatch);
    }
    Ok(ObjectiveEval {
        value: sum / total_tokens as f64,
        token_terms,
        total_tokens,
        gradient: None,
    })
}

/// A policy whose per-token log-probabilities and score function the
/// gradient can query. Tabular policies implement this exactly; the
/// conditioning context is derived from the group's question id and the
/// token prefix.
pub trait GroupPolicy {
    fn param_count(&self) -> usize;

    /// log π(tokens[t] | question, tokens[..t]) for every t.
    fn rollout_logps(&self, question_id: &str, tokens: &[u32]) -> Result<Vec<f64>, DapoError>;

    /// Add `coeff * ∇_θ log π(tokens[t] | question, tokens[..t])` into
    /// `grad`.
    fn accumulate_logp_grad(
        &self,
        question_id: &str,
        tokens: &[u32],
        t: usize,
        coeff: f64,
        grad: &mut [f64],
    ) -> Result<(), DapoError>;
}

/// Exact gradient of [`dapo_objective`] with respect to the policy
/// parameters, treating π_old and the advantages as constants.
///
/// Per token the contribution is `Â·r·∇logπ / Σ|o_i|` on the unclipped
/// branch and zero on the clipped branch; exact ties at the clip boundary
/// take the unclipped branch.
pub fn dapo_gradient(
    policy: &dyn GroupPolicy,
    groups: &[RolloutGroup],
    config: &DapoConfig,
) -> Result<Vec<f64>, DapoError> {
    let (_, gradient) = evaluate_with_gradient(policy, groups, config)?;
    Ok(gradient)
}

/// Evaluate objective and gradient in one pass over the policy.
pub fn dapo_objective_with_gradient(
    policy: &dyn GroupPolicy,
    groups: &[RolloutGroup],
    config: &DapoConfig,
) -> Result<ObjectiveEval, DapoError> {
    let (mut eval, gradient) = evaluate_with_gradient(policy, groups, config)?;
    eval.gradient = Some(gradient);
    Ok(eval)
}

fn evaluate_with_gradient(
    policy: &dyn GroupPolicy,
    groups: &[RolloutGroup],
    config: &DapoConfig,
) -> Result<(ObjectiveEval, Vec<f64>), DapoError> {
    let logp_new: Vec<Vec<Vec<f64>>> = groups
        .iter()
        .map(|group| {
            group
                .rollouts
                .iter()
                .map(|rollout| policy.rollout_logps(&group.question_id, &rollout.tokens))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let eval = dapo_objective(groups, &logp_new, config)?;
    let scale = 1.0 / eval.total_tokens as f64;

    let mut grad = vec![0.0; policy.param_count()];
    for (g, group) in groups.iter().enumerate() {
        let advantages = compute_advantages(group, config)?;
        for (i, rollout) in group.rollouts.iter().enumerate() {
            let advantage = advantages.advantages[i];
            for t in 0..rollout.len() {
                let ratio = (logp_new[g][i][t] - rollout.logp_old[t]).exp();
                let unclipped = ratio * advantage;
                let clipped =
                    ratio.clamp(1.0 - config.epsilon_low, 1.0 + config.epsilon_high) * advantage;
                // min() takes the unclipped branch on ties, so the
                // subgradient there is Â·r·∇logπ; the clipped branch is
                // constant in θ.
                if unclipped <= clipped {
                    policy.accumulate_logp_grad(
                        &group.question_id,
                        &rollout.tokens,
                        t,
                        scale * advantage * ratio,
                        &mut grad,
                    )?;
                }
            }
        }
    }
    Ok((eval, grad))
}

/// Why a group was removed by dynamic sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    AllCorrect,
    AllIncorrect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedGroup {
    pub question_id: String,
    pub reason: DropReason,
}

/// Result of the dynamic-sampling constraint 0 < |correct| < G.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<RolloutGroup>,
    pub dropped: usize,
    pub reasons: Vec<DroppedGroup>,
}

/// Keep exactly the groups with at least one correct and one incorrect
/// rollout; all-correct and all-incorrect groups carry no group-relative
/// signal. The decision is a pure function of the `is_equivalent` flags.
pub fn dynamic_sample_filter(groups: Vec<RolloutGroup>) -> FilterOutcome {
    let mut kept = Vec::with_capacity(groups.len());
    let mut reasons = Vec::new();
    for group in groups {
        let correct = group.rollouts.iter().filter(|r| r.is_equivalent).count();
        if correct == 0 {
            reasons.push(DroppedGroup {
                question_id: group.question_id.clone(),
                reason: DropReason::AllIncorrect,
            });
        } else if correct == group.group_size() {
            reasons.push(DroppedGroup {
                question_id: group.question_id.clone(),
                reason: DropReason::AllCorrect,
            });
        } else {
            kept.push(group);
        }
    }
    FilterOutcome {
        dropped: reasons.len(),
        kept,
        reasons,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rollout(tokens: Vec<u32>, reward: f64, is_equivalent: bool) -> Rollout {
        let logp_old = vec![-0.5; tokens.len()];
        Rollout::new(tokens, logp_old, reward, is_equivalent).unwrap()
    }

    fn group_with_rewards(rewards: &[f64]) -> RolloutGroup {
        RolloutGroup {
            question_id: "q".into(),
            rollouts: rewards
                .iter()
                .map(|&r| rollout(vec![0, 1, 2], r, r > 0.5))
                .collect(),
        }
    }

    #[test]
    fn advantages_direct_arithmetic() {
        let group = group_with_rewards(&[1.0, 0.0, 0.0, 1.0]);
        let set = compute_advantages(&group, &DapoConfig::default()).unwrap();
        assert_eq!(set.group_mean, 0.5);
        assert_eq!(set.group_std, 0.5);
        assert_eq!(set.advantages, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn advantages_all_equal_hit_floor() {
        let group = group_with_rewards(&[0.7, 0.7, 0.7]);
        let set = compute_advantages(&group, &DapoConfig::default()).unwrap();
        assert_eq!(set.advantages, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn advantages_pair() {
        let group = group_with_rewards(&[1.0, 0.0]);
        let set = compute_advantages(&group, &DapoConfig::default()).unwrap();
        assert_eq!(set.advantages, vec![1.0, -1.0]);
    }

    #[test]
    fn advantages_group_too_small() {
        let group = group_with_rewards(&[1.0]);
        let err = compute_advantages(&group, &DapoConfig::default()).unwrap_err();
        assert!(matches!(err, DapoError::GroupTooSmall { .. }));
    }

    #[test]
    fn sample_std_option() {
        let group = group_with_rewards(&[1.0, 0.0]);
        let config = DapoConfig {
            use_sample_std: true,
            ..DapoConfig::default()
        };
        let set = compute_advantages(&group, &config).unwrap();
        // Sample std of {1,0} is sqrt(0.5); advantages are ±0.5/sqrt(0.5).
        let expected = 0.5 / 0.5f64.sqrt();
        assert!((set.advantages[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn ratio_identities() {
        let ratios = importance_ratio(&[-0.5, -1.0], &[-0.5, -1.0]).unwrap();
        assert_eq!(ratios, vec![1.0, 1.0]);
        let ratios = importance_ratio(&[-0.5], &[-0.5 - 2f64.ln()]).unwrap();
        assert!((ratios[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_errors() {
        assert!(matches!(
            importance_ratio(&[-0.5], &[-0.5, -0.5]),
            Err(DapoError::LengthMismatch { .. })
        ));
        assert!(matches!(
            importance_ratio(&[f64::NAN], &[-0.5]),
            Err(DapoError::NonFinite { .. })
        ));
        assert!(matches!(
            importance_ratio(&[f64::NEG_INFINITY], &[-0.5]),
            Err(DapoError::NonFinite { .. })
        ));
    }

    #[test]
    fn clipped_term_goldens() {
        let config = DapoConfig::default();
        assert!((clipped_term(1.5, 1.0, &config) - 1.28).abs() < 1e-15);
        assert!((clipped_term(0.5, -1.0, &config) - (-0.8)).abs() < 1e-15);
        assert_eq!(clipped_term(1.0, 0.37, &config), 0.37);
        assert_eq!(clipped_term(1.0, -2.0, &config), -2.0);
    }

    #[test]
    fn objective_at_unit_ratio_is_weighted_advantage_mean() {
        // With r = 1 every term is Â_i, so the objective reduces to the
        // length-weighted mean of advantages.
        let group = RolloutGroup {
            question_id: "q".into(),
            rollouts: vec![
                rollout(vec![0, 1], 1.0, true),
                rollout(vec![0, 1, 2, 3], 0.0, false),
            ],
        };
        let logp_new = vec![group
            .rollouts
            .iter()
            .map(|r| r.logp_old.clone())
            .collect::<Vec<_>>()];
        let config = DapoConfig::default();
        let eval = dapo_objective(std::slice::from_ref(&group), &logp_new, &config).unwrap();
        let advantages = compute_advantages(&group, &config).unwrap().advantages;
        let expected = (2.0 * advantages[0] + 4.0 * advantages[1]) / 6.0;
        assert!((eval.value - expected).abs() < 1e-15);
    }

    #[test]
    fn objective_zero_for_balanced_equal_lengths() {
        let group = group_with_rewards(&[1.0, 0.0, 0.0, 1.0]);
        let logp_new = vec![group
            .rollouts
            .iter()
            .map(|r| r.logp_old.clone())
            .collect::<Vec<_>>()];
        let eval = dapo_objective(
            std::slice::from_ref(&group),
            &logp_new,
            &DapoConfig::default(),
        )
        .unwrap();
        assert!(eval.value.abs() < 1e-15);
    }

    #[test]
    fn objective_zero_advantages() {
        let group = group_with_rewards(&[0.5, 0.5]);
        let logp_new = vec![group
            .rollouts
            .iter()
            .map(|r| r.logp_old.clone())
            .collect::<Vec<_>>()];
        let eval = dapo_objective(
            std::slice::from_ref(&group),
            &logp_new,
            &DapoConfig::default(),
        )
        .unwrap();
        assert_eq!(eval.value, 0.0);
    }

    #[test]
    fn objective_recomposes_from_stored_terms() {
        let group = group_with_rewards(&[1.0, 0.0, 1.0]);
        let logp_new = vec![group
            .rollouts
            .iter()
            .map(|r| r.logp_old.iter().map(|lp| lp - 0.1).collect())
            .collect::<Vec<_>>()];
        let eval = dapo_objective(
            std::slice::from_ref(&group),
            &logp_new,
            &DapoConfig::default(),
        )
        .unwrap();
        let mut sum = 0.0;
        for group_terms in &eval.token_terms {
            for rollout_terms in group_terms {
                for term in rollout_terms {
                    sum += term;
                }
            }
        }
        assert_eq!(eval.value, sum / eval.total_tokens as f64);
    }

    #[test]
    fn objective_errors() {
        assert!(matches!(
            dapo_objective(&[], &[], &DapoConfig::default()),
            Err(DapoError::EmptyBatch)
        ));
        let group = group_with_rewards(&[1.0, 0.0]);
        assert!(matches!(
            dapo_objective(std::slice::from_ref(&group), &[], &DapoConfig::default()),
            Err(DapoError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn filter_exhaustive_g4() {
        // Brute-force enumeration over all 16 equivalence patterns.
        let mut kept_count = 0;
        for pattern in 0..16u32 {
            let rollouts: Vec<Rollout> = (0..4)
                .map(|i| {
                    let correct = pattern & (1 << i) != 0;
                    rollout(vec![0], f64::from(u8::from(correct)), correct)
                })
                .collect();
            let outcome = dynamic_sample_filter(vec![RolloutGroup {
                question_id: format!("p{pattern}"),
                rollouts,
            }]);
            kept_count += outcome.kept.len();
            let correct = pattern.count_ones();
            assert_eq!(outcome.kept.len() == 1, correct > 0 && correct < 4);
        }
        assert_eq!(kept_count, 14);
    }

    #[test]
    fn filter_reports_reasons() {
        let all_correct = RolloutGroup {
            question_id: "ac".into(),
            rollouts: vec![rollout(vec![0], 1.0, true), rollout(vec![0], 1.0, true)],
        };
        let all_wrong = RolloutGroup {
            question_id: "aw".into(),
            rollouts: vec![rollout(vec![0], 0.0, false), rollout(vec![0], 0.0, false)],
        };
        let mixed = RolloutGroup {
            question_id: "mx".into(),
            rollouts: vec![rollout(vec![0], 1.0, true), rollout(vec![0], 0.0, false)],
        };
        let outcome = dynamic_sample_filter(vec![all_correct, all_wrong, mixed]);
        assert_eq!(outcome.dropped, 2);
        assert_eq!(outcome.kept.len(), 1);
        assert_eq!(outcome.kept[0].question_id, "mx");
        assert_eq!(outcome.reasons[0].reason, DropReason::AllCorrect);
        assert_eq!(outcome.reasons[1].reason, DropReason::AllIncorrect);
    }

    #[test]
    fn filter_is_pure_in_equivalence_flags() {
        // Rewards disagree with flags; only flags matter.
        let group = RolloutGroup {
            question_id: "q".into(),
            rollouts: vec![rollout(vec![0], -1.0, true), rollout(vec![0], 5.0, false)],
        };
        let outcome = dynamic_sample_filter(vec![group]);
        assert_eq!(outcome.kept.len(), 1);
    }

    #[test]
    fn rollout_validation() {
        assert!(Rollout::new(vec![1], vec![-0.1, -0.2], 0.0, false).is_err());
        assert!(Rollout::new(vec![1], vec![0.5], 0.0, false).is_err());
        assert!(Rollout::new(vec![1], vec![f64::NAN], 0.0, false).is_err());
        assert!(Rollout::new(vec![1], vec![0.0], 0.0, false).is_ok());
    }

    #[test]
    fn config_validation() {
        assert!(DapoConfig::default().validate().is_ok());
        for bad in [
            DapoConfig {
                epsilon_low: 0.0,
                ..DapoConfig::default()
            },
            DapoConfig {
                epsilon_high: 0.1,
                ..DapoConfig::default()
            },
            DapoConfig {
                group_size: 1,
                ..DapoConfig::default()
            },
            DapoConfig {
                std_floor: 0.0,
                ..DapoConfig::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
