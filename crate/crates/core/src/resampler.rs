//! Importance-weighted bootstrap.
//!
//! Samples from the merged on/off-target set are redrawn with probability
//! proportional to their estimated importance weight, which makes the
//! resampled set distributed (up to a constant) like the on-target
//! distribution while keeping every draw an ordinary, equally weighted record.

use rand::Rng;

use crate::importance::{ImportanceModel, LabeledSample};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapPlan {
    source: Vec<LabeledSample>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
    effective_sample_size: f64,
}

impl BootstrapPlan {
    /// Builds a plan from explicit non-negative weights, one per sample.
    pub fn from_weights(source: Vec<LabeledSample>, weights: &[f64]) -> Result<Self> {
        if source.len() != weights.len() {
            return Err(Error::Dimension(format!("{} samples but {} weights", source.len(), weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidConfig(format!("bootstrap weight {w} is not a finite non-negative number")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroWeights);
        }
        let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { source, probabilities, cumulative, effective_sample_size: total })
    }

    pub fn source(&self) -> &[LabeledSample] {
        &self.source
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Sum of the raw weights.
    pub fn effective_sample_size(&self) -> f64 {
        self.effective_sample_size
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    /// Index drawn for a uniform variate `u` in `[0, 1)`: the first index whose
    /// cumulative probability is strictly greater than `u`. Zero-probability
    /// entries can never satisfy this against their predecessor, so they are
    /// never returned.
    pub fn index_for(&self, u: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= u);
        if i < self.cumulative.len() {
            return i;
        }
        // Rounding can leave the last cumulative value just below 1.
        self.probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Plan over `samples` (normally the merged on- and off-target sets) with
/// probabilities proportional to the model's weights.
pub fn build_plan(samples: Vec<LabeledSample>, model: &ImportanceModel) -> Result<BootstrapPlan> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("no samples to bootstrap".into()));
    }
    let weights = samples.iter().map(|s| model.weight_of(s)).collect::<Result<Vec<_>>>()?;
    BootstrapPlan::from_weights(samples, &weights)
}

/// `n` i.i.d. draws with replacement.
pub fn bootstrap<R: Rng + ?Sized>(plan: &BootstrapPlan, n: usize, rng: &mut R) -> Vec<LabeledSample> {
    bootstrap_indices(plan, n, rng).into_iter().map(|i| plan.source[i].clone()).collect()
}

pub fn bootstrap_indices<R: Rng + ?Sized>(plan: &BootstrapPlan, n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| plan.index_for(rng.random::<f64>())).collect()
}

/// Bootstrap of the default size, equal to the number of source samples.
pub fn bootstrap_default<R: Rng + ?Sized>(plan: &BootstrapPlan, rng: &mut R) -> Vec<LabeledSample> {
    bootstrap(plan, plan.len(), rng)
}
