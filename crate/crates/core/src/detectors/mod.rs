//! Sequential change detectors on categorical streams.
//!
//! Outcomes are indices into the pre-change distribution. Both detectors
//! declare a change at the first step whose statistic is `≥ h`.

mod cusum;
mod nwla;
mod window;

pub use cusum::{cusum_update, CusumDetector};
pub use nwla::NwlaDetector;
pub use window::WindowedEstimator;

use serde::Serialize;

use crate::error::{Error, Result};

pub trait SequentialDetector {
    /// Consumes one outcome; returns true when the statistic reaches the threshold.
    fn step(&mut self, outcome: usize) -> Result<bool>;
    fn statistic(&self) -> f64;
    fn threshold(&self) -> f64;
    fn set_threshold(&mut self, h: f64);
    fn steps(&self) -> u64;
    /// Back to the initial state (threshold kept).
    fn reset(&mut self);
    /// Number of initial steps during which the statistic is pinned at zero.
    fn warmup_len(&self) -> usize {
        0
    }
}

/// Result of running a detector until it alarms or gives up.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingReport {
    pub stopped: bool,
    /// First step with statistic ≥ h; the number of steps consumed when censored.
    pub stopping_step: u64,
    pub censored: bool,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic_trace: Option<Vec<f64>>,
}

/// Feeds `stream` to `det` until the first crossing or `max_steps` outcomes.
pub fn run_to_stop<D, I>(
    det: &mut D,
    stream: I,
    max_steps: u64,
    record_trace: bool,
) -> Result<StoppingReport>
where
    D: SequentialDetector + ?Sized,
    I: IntoIterator<Item = usize>,
{
    if max_steps == 0 {
        return Err(Error::InvalidArgument("max_steps must be >= 1".into()));
    }
    let mut trace = record_trace.then(Vec::new);
    let mut consumed = 0;
    for outcome in stream.into_iter().take(max_steps as usize) {
        let crossed = det.step(outcome)?;
        consumed += 1;
        if let Some(t) = trace.as_mut() {
            t.push(det.statistic());
        }
        if crossed {
            return Ok(StoppingReport {
                stopped: true,
                stopping_step: consumed,
                censored: false,
                threshold: det.threshold(),
                statistic_trace: trace,
            });
        }
    }
    Ok(StoppingReport {
        stopped: false,
        stopping_step: consumed,
        censored: true,
        threshold: det.threshold(),
        statistic_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_threshold_stops_at_first_step() {
        let mut det = CusumDetector::new(&[0.5, 0.5], &[0.9, 0.1], 0.0).unwrap();
        let r = run_to_stop(&mut det, [1, 1, 1], 10, false).unwrap();
        assert!(r.stopped);
        assert_eq!(r.stopping_step, 1);
    }

    #[test]
    fn negative_stream_is_censored() {
        let mut det = CusumDetector::new(&[0.5, 0.5], &[0.9, 0.1], 1.0).unwrap();
        let r = run_to_stop(&mut det, std::iter::repeat(1), 50, true).unwrap();
        assert!(!r.stopped && r.censored);
        assert_eq!(r.stopping_step, 50);
        assert_eq!(r.statistic_trace.unwrap(), vec![0.0; 50]);
    }

    #[test]
    fn hand_rolled_trace() {
        // Z(0) = log 1.8, Z(1) = log 0.2
        let (up, down) = (1.8f64.ln(), 0.2f64.ln());
        let stream = [0, 0, 1, 0, 0, 0];
        let mut s = 0.0;
        let mut expected = Vec::new();
        for &x in &stream {
            s = f64::max(0.0, s + if x == 0 { up } else { down });
            expected.push(s);
        }
        let h = 1.7;
        let first = expected.iter().position(|&v| v >= h).unwrap() as u64 + 1;
        let mut det = CusumDetector::new(&[0.5, 0.5], &[0.9, 0.1], h).unwrap();
        let r = run_to_stop(&mut det, stream, 100, true).unwrap();
        assert_eq!(r.stopping_step, first);
        assert_eq!(
            r.statistic_trace.unwrap(),
            expected[..first as usize].to_vec()
        );
    }

    #[test]
    fn rejects_zero_budget() {
        let mut det = CusumDetector::new(&[0.5, 0.5], &[0.9, 0.1], 1.0).unwrap();
        assert!(run_to_stop(&mut det, [0], 0, false).is_err());
    }
}
