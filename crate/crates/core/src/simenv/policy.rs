//! Tabular bigram softmax policy.
//!
//! Logits are indexed by context = (task-feature bucket, previous symbol)
//! with a start sentinel for the first position, so the parameter count is
//! `F * (V + 1) * V` and the surrogate gradient is exact — no autograd,
//! every derivative is the categorical score function in closed form.

use std::collections::BTreeMap;

use rand::Rng;

use crate::dapo::{DapoError, GroupPolicy};

/// Softmax policy over a small symbol vocabulary, conditioned on
/// (feature, previous symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPolicy {
    num_features: usize,
    vocab_size: usize,
    /// Flat logits laid out as [feature][prev symbol + start][symbol].
    logits: Vec<f64>,
}

impl ToyPolicy {
    /// All-zero logits: uniform over the vocabulary in every context.
    pub fn zeros(num_features: usize, vocab_size: usize) -> Self {
        Self {
            num_features,
            vocab_size,
            logits: vec![0.0; num_features * (vocab_size + 1) * vocab_size],
        }
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn param_count(&self) -> usize {
        self.logits.len()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    /// Flat index of the first logit of a context row; `prev = None` is
    /// the start-of-sequence context.
    pub fn row_start(&self, feature: usize, prev: Option<u32>) -> usize {
        debug_assert!(feature < self.num_features);
        let prev_index = match prev {
            Some(symbol) => {
                debug_assert!((symbol as usize) < self.vocab_size);
                symbol as usize
            }
            None => self.vocab_size,
        };
        (feature * (self.vocab_size + 1) + prev_index) * self.vocab_size
    }

    pub fn set_logit(&mut self, feature: usize, prev: Option<u32>, symbol: u32, value: f64) {
        let index = self.row_start(feature, prev) + symbol as usize;
        self.logits[index] = value;
    }

    fn row(&self, feature: usize, prev: Option<u32>) -> &[f64] {
        let start = self.row_start(feature, prev);
        &self.logits[start..start + self.vocab_size]
    }

    /// Log-softmax over one context row, computed in index order.
    pub fn row_logps(&self, feature: usize, prev: Option<u32>) -> Vec<f64> {
        let row = self.row(feature, prev);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|l| (l - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        row.iter().map(|l| l - log_z).collect()
    }

    pub fn logp(&self, feature: usize, prev: Option<u32>, symbol: u32) -> f64 {
        self.row_logps(feature, prev)[symbol as usize]
    }

    /// Sample one symbol; returns (symbol, its log-probability).
    pub fn sample_symbol<R: Rng>(
        &self,
        feature: usize,
        prev: Option<u32>,
        rng: &mut R,
    ) -> (u32, f64) {
        let logps = self.row_logps(feature, prev);
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        for (symbol, lp) in logps.iter().enumerate() {
            cumulative += lp.exp();
            if u < cumulative {
                return (symbol as u32, *lp);
            }
        }
        // Rounding can leave the total marginally below 1; take the last.
        let last = self.vocab_size - 1;
        (last as u32, logps[last])
    }

    /// Plain gradient-ascent update.
    pub fn apply_gradient(&mut self, gradient: &[f64], learning_rate: f64) {
        assert_eq!(gradient.len(), self.logits.len());
        for (logit, g) in self.logits.iter_mut().zip(gradient) {
            *logit += learning_rate * g;
        }
    }
}

/// Binds a policy to a question-id → feature map so the objective can
/// resolve conditioning contexts from rollout groups.
#[derive(Debug, Clone, Copy)]
pub struct PolicyBinding<'a> {
    pub policy: &'a ToyPolicy,
    pub features: &'a BTreeMap<String, usize>,
}

impl<'a> PolicyBinding<'a> {
    pub fn new(policy: &'a ToyPolicy, features: &'a BTreeMap<String, usize>) -> Self {
        Self { policy, features }
    }

    fn feature_of(&self, question_id: &str) -> Result<usize, DapoError> {
        self.features
            .get(question_id)
            .copied()
            .ok_or_else(|| DapoError::ContextMiss {
                context: format!("unknown question id {question_id:?}"),
            })
    }

    fn check_token(&self, question_id: &str, token: u32) -> Result<(), DapoError> {
        if (token as usize) >= self.policy.vocab_size() {
            return Err(DapoError::ContextMiss {
                context: format!(
                    "token {token} outside vocabulary of size {} (question {question_id:?})",
                    self.policy.vocab_size()
                ),
            });
        }
        Ok(())
    }
}

impl GroupPolicy for PolicyBinding<'_> {
    fn param_count(&self) -> usize {
        self.policy.param_count()
    }

    fn rollout_logps(&self, question_id: &str, tokens: &[u32]) -> Result<Vec<f64>, DapoError> {
        let feature = self.feature_of(question_id)?;
        let mut prev = None;
        let mut logps = Vec::with_capacity(tokens.len());
        for &token in tokens {
            self.check_token(question_id, token)?;
            logps.push(self.policy.logp(feature, prev, token));
            prev = Some(token);
        }
        Ok(logps)
    }

    fn accumulate_logp_grad(
        &self,
        question_id: &str,
        tokens: &[u32],
        t: usize,
        coeff: f64,
        grad: &mut [f64],
    ) -> Result<(), DapoError> {
        let feature = self.feature_of(question_id)?;
        let token = tokens[t];
        self.check_token(question_id, token)?;
        let prev = if t == 0 {
            None
        } else {
            self.check_token(question_id, tokens[t - 1])?;
            Some(tokens[t - 1])
        };
        // d log softmax(row)[token] / d row[v] = Ι(v = token) - p_v
        let logps = self.policy.row_logps(feature, prev);
        let start = self.policy.row_start(feature, prev);
        for (v, lp) in logps.iter().enumerate() {
            grad[start + v] -= coeff * lp.exp();
        }
        grad[start + token as usize] += coeff;
        Ok(())
    }
}
