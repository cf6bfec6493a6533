use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::quantum::ProbabilityVector;

/// Add-one smoothed histogram over the last `w` outcomes:
/// `p̂_j = (1 + #{j in window}) / (w + d)`.
#[derive(Debug, Clone)]
pub struct WindowedEstimator {
    window: usize,
    support: usize,
    buffer: VecDeque<usize>,
    counts: Vec<usize>,
}

impl WindowedEstimator {
    pub fn new(window: usize, support: usize) -> Result<Self> {
        if window == 0 || support == 0 {
            return Err(Error::InvalidArgument(
                "window and support size must be positive".into(),
            ));
        }
        Ok(Self {
            window,
            support,
            buffer: VecDeque::with_capacity(window),
            counts: vec![0; support],
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn filled(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.window
    }

    /// Most recent outcomes, oldest first.
    pub fn contents(&self) -> impl Iterator<Item = usize> + '_ {
        self.buffer.iter().copied()
    }

    /// Appends an outcome, evicting the oldest once the window is full.
    pub fn push(&mut self, outcome: usize) -> Result<()> {
        if outcome >= self.support {
            return Err(Error::UnknownOutcome(outcome.to_string()));
        }
        if self.buffer.len() == self.window {
            let old = self.buffer.pop_front().expect("full window");
            self.counts[old] -= 1;
        }
        self.buffer.push_back(outcome);
        self.counts[outcome] += 1;
        Ok(())
    }

    pub fn clear(&mut self) {
        self.buffer.clear();
        self.counts.iter_mut().for_each(|c| *c = 0);
    }

    /// The smoothed estimate. Only defined on a full window.
    pub fn kernel_estimate(&self) -> Result<ProbabilityVector> {
        if !self.is_full() {
            return Err(Error::NotWarmedUp {
                filled: self.buffer.len(),
                window: self.window,
            });
        }
        let denom = (self.window + self.support) as f64;
        ProbabilityVector::unlabeled(
            self.counts
                .iter()
                .map(|&c| (1.0 + c as f64) / denom)
                .collect(),
        )
    }
}
