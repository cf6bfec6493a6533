//! Counter-based random streams for reproducible parallel Monte Carlo.
//!
//! A run seed and a purpose tag form the ChaCha key; the trial index selects
//! the ChaCha stream. Each trial therefore sees the same numbers no matter
//! which worker runs it or in which order.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type TrialRng = ChaCha8Rng;

/// Separates random streams used for different estimates within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Calibration = 1,
    FalseAlarm = 2,
    Delay = 3,
    DelayFromStart = 4,
    DelayHostile = 5,
    Drift = 6,
    KlLoss = 7,
    SecondMoment = 8,
    Family = 9,
}

pub fn trial_rng(seed: u64, purpose: Purpose, trial: u64) -> TrialRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Inverse-CDF categorical sampler: one uniform draw per sample.
#[derive(Debug, Clone)]
pub struct Categorical {
    index: WeightedIndex<f64>,
}

impl Categorical {
    pub fn new(probs: &[f64]) -> Result<Self> {
        WeightedIndex::new(probs.iter().copied())
            .map(|index| Self { index })
            .map_err(|e| Error::InvalidArgument(format!("bad categorical weights: {e}")))
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}
