use crate::error::{Error, Result};
use crate::quantum::ProbabilityVector;

use super::cusum::cusum_update;
use super::window::WindowedEstimator;
use super::SequentialDetector;

/// Window-limited CUSUM with an unknown post-change distribution.
///
/// Step `n` (1-based): for `n ≤ w` the increment is zero and the statistic
/// stays at zero. Afterwards `Ẑ_n = log(p̂[X_n] / P[X_n])` where `p̂` comes
/// from `X_{n−w} … X_{n−1}` only. The outcome enters the window after it has
/// been scored.
#[derive(Debug, Clone)]
pub struct NwlaDetector {
    estimator: WindowedEstimator,
    statistic: f64,
    threshold: f64,
    steps: u64,
    pre_change: Vec<f64>,
    /// `log(((1 + c)/(w + d)) / P[j])` at index `c * d + j`.
    increments: Vec<f64>,
}

impl NwlaDetector {
    pub fn new(pre_change: &[f64], window: usize, threshold: f64) -> Result<Self> {
        let d = pre_change.len();
        if let Some(pk) = pre_change.iter().find(|&&pk| pk <= 0.0 || !pk.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "pre-change probability {pk} is not positive"
            )));
        }
        if !(threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} must be >= 0"
            )));
        }
        let estimator = WindowedEstimator::new(window, d)?;
        let denom = (window + d) as f64;
        let mut increments = Vec::with_capacity((window + 1) * d);
        for c in 0..=window {
            let p_hat = (1.0 + c as f64) / denom;
            increments.extend(pre_change.iter().map(|&p| (p_hat / p).ln()));
        }
        Ok(Self {
            estimator,
            statistic: 0.0,
            threshold,
            steps: 0,
            pre_change: pre_change.to_vec(),
            increments,
        })
    }

    pub fn from_distribution(p: &ProbabilityVector, window: usize, threshold: f64) -> Result<Self> {
        Self::new(p.probs(), window, threshold)
    }

    pub fn estimator(&self) -> &WindowedEstimator {
        &self.estimator
    }

    pub fn window(&self) -> usize {
        self.estimator.window()
    }

    pub fn pre_change(&self) -> &[f64] {
        &self.pre_change
    }

    /// The increment the next observation of `outcome` would receive.
    pub fn next_increment(&self, outcome: usize) -> Result<f64> {
        let d = self.pre_change.len();
        if outcome >= d {
            return Err(Error::UnknownOutcome(outcome.to_string()));
        }
        if self.steps < self.window() as u64 {
            return Ok(0.0);
        }
        Ok(self.increments[self.estimator.counts()[outcome] * d + outcome])
    }
}

impl SequentialDetector for NwlaDetector {
    #[inline]
    fn step(&mut self, outcome: usize) -> Result<bool> {
        let z = self.next_increment(outcome)?;
        self.steps += 1;
        if self.steps > self.window() as u64 {
            self.statistic = cusum_update(self.statistic, z);
        }
        self.estimator.push(outcome)?;
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
        self.estimator.clear();
    }

    fn warmup_len(&self) -> usize {
        self.window()
    }
}
