use super::scenario::{BlockChange, CompiledScenario};
use crate::rng::{trial_rng, Categorical, Purpose, TrialRng};

/// Endless stream of block outcomes for one trial.
///
/// Block `t < m` comes from `P`, block `m` from the hybrid when `r > 0`, and
/// every later block from `Q`. Each block consumes exactly one uniform draw,
/// so streams with the same seed but different change points stay coupled.
#[derive(Debug, Clone)]
pub struct BlockStream<'a> {
    cs: &'a CompiledScenario,
    change: Option<BlockChange>,
    block: u64,
    rng: TrialRng,
}

impl<'a> BlockStream<'a> {
    pub fn new(cs: &'a CompiledScenario, change: Option<BlockChange>, rng: TrialRng) -> Self {
        Self {
            cs,
            change,
            block: 0,
            rng,
        }
    }

    fn sampler(&self) -> &'a Categorical {
        let s = &self.cs.samplers;
        match self.change {
            None => &s.pre,
            Some(c) if self.block < c.block => &s.pre,
            Some(c) if self.block == c.block && c.remainder > 0 => &s.hybrid[c.remainder - 1],
            Some(_) => &s.post,
        }
    }
}

impl Iterator for BlockStream<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        let x = self.sampler().sample(&mut self.rng);
        self.block += 1;
        Some(x)
    }
}

/// The scenario's own stream for trial `trial_seed`.
pub fn sample_stream(cs: &CompiledScenario, seed: u64, trial_seed: u64) -> BlockStream<'_> {
    BlockStream::new(cs, cs.change, trial_rng(seed, Purpose::Delay, trial_seed))
}
