use crate::error::{Error, Result};
use crate::quantum::ProbabilityVector;

use super::SequentialDetector;

/// One step of the clamped recursion `S ← [S + Z]_+`.
#[inline]
pub fn cusum_update(statistic: f64, increment: f64) -> f64 {
    (statistic + increment).max(0.0)
}

/// Page's CUSUM with known pre- and post-change distributions.
///
/// Increments are `Z = log(q_k/p_k)`. Outcomes with `q_k = 0` give
/// `Z = −∞`, which the clamp sends straight back to zero.
#[derive(Debug, Clone)]
pub struct CusumDetector {
    statistic: f64,
    threshold: f64,
    steps: u64,
    log_likelihood: Vec<f64>,
}

impl CusumDetector {
    pub fn new(p: &[f64], q: &[f64], threshold: f64) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return Err(Error::LabelMismatch);
        }
        if let Some(pk) = p.iter().find(|&&pk| pk <= 0.0 || !pk.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pre-change probability {pk} is not positive"
            )));
        }
        if !(threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} must be >= 0"
            )));
        }
        let log_likelihood = p.iter().zip(q).map(|(&pk, &qk)| (qk / pk).ln()).collect();
        Ok(Self {
            statistic: 0.0,
            threshold,
            steps: 0,
            log_likelihood,
        })
    }

    pub fn from_distributions(
        p: &ProbabilityVector,
        q: &ProbabilityVector,
        threshold: f64,
    ) -> Result<Self> {
        if p.labels() != q.labels() {
            return Err(Error::LabelMismatch);
        }
        Self::new(p.probs(), q.probs(), threshold)
    }

    /// `log(q_k/p_k)` per outcome.
    pub fn log_likelihood_table(&self) -> &[f64] {
        &self.log_likelihood
    }
}

impl SequentialDetector for CusumDetector {
    #[inline]
    fn step(&mut self, outcome: usize) -> Result<bool> {
        let z = *self
            .log_likelihood
            .get(outcome)
            .ok_or_else(|| Error::UnknownOutcome(outcome.to_string()))?;
        self.steps += 1;
        self.statistic = cusum_update(self.statistic, z);
        Ok(self.statistic >= self.threshold)
    }

    fn statistic(&self) -> f64 {
        self.statistic
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    fn set_threshold(&mut self, h: f64) {
        self.threshold = h;
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn reset(&mut self) {
        self.statistic = 0.0;
        self.steps = 0;
    }
}
