use rayon::prelude::*;
use serde::Serialize;

use super::scenario::{BlockChange, CompiledScenario, DetectorKind};
use super::stream::BlockStream;
use crate::detectors::{run_to_stop, SequentialDetector, StoppingReport};
use crate::error::{Error, Result};
use crate::rng::{trial_rng, Purpose};
use crate::stats::{fit_line, LineFit, MeanSe};

/// Points with more censored false-alarm runs than this are flagged.
pub const CENSOR_WARN_FRACTION: f64 = 0.01;
/// Calibration stops once the estimate is within this relative distance of the target.
pub const CALIBRATION_RTOL: f64 = 0.10;
pub const CALIBRATION_MAX_ITER: usize = 20;
/// Run budget for false-alarm estimation at a target, as a multiple of the target.
pub const TFA_BUDGET_FACTOR: f64 = 50.0;
/// Divergences at or below this make delay undefined.
pub const DEGENERATE_DIVERGENCE: f64 = 1e-12;

/// Mean run length with no change, in blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TfaEstimate {
    pub threshold: f64,
    pub mean: f64,
    pub se: f64,
    pub trials: usize,
    pub censored: usize,
    pub censor_frac: f64,
    /// More than 1% of runs hit the step budget; the mean is biased low.
    pub unreliable: bool,
}

fn run_trials<F>(
    cs: &CompiledScenario,
    kind: DetectorKind,
    h: f64,
    trials: usize,
    f: F,
) -> Result<Vec<StoppingReport>>
where
    F: Fn(usize, &mut super::scenario::AnyDetector) -> Result<StoppingReport> + Sync,
{
    let template = cs.detector(kind, h)?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut det = template.clone();
            f(i, &mut det)
        })
        .collect()
}

fn tfa_with(
    cs: &CompiledScenario,
    kind: DetectorKind,
    h: f64,
    trials: usize,
    max_steps: u64,
    seed: u64,
    purpose: Purpose,
) -> Result<TfaEstimate> {
    if trials < 10 {
        return Err(Error::InvalidArgument(format!(
            "false-alarm estimation needs >= 10 trials, got {trials}"
        )));
    }
    let reports = run_trials(cs, kind, h, trials, |i, det| {
        let stream = BlockStream::new(cs, None, trial_rng(seed, purpose, i as u64));
        run_to_stop(det, stream, max_steps, false)
    })?;
    let lengths: Vec<f64> = reports.iter().map(|r| r.stopping_step as f64).collect();
    let censored = reports.iter().filter(|r| r.censored).count();
    let ms = MeanSe::from_samples(&lengths);
    let censor_frac = censored as f64 / trials as f64;
    Ok(TfaEstimate {
        threshold: h,
        mean: ms.mean,
        se: ms.se,
        trials,
        censored,
        censor_frac,
        unreliable: censor_frac > CENSOR_WARN_FRACTION,
    })
}

/// Mean stopping time on change-free streams. Censored runs count as `max_steps`.
pub fn estimate_tfa(
    cs: &CompiledScenario,
    kind: DetectorKind,
    h: f64,
    trials: usize,
    max_steps: u64,
    seed: u64,
) -> Result<TfaEstimate> {
    tfa_with(cs, kind, h, trials, max_steps, seed, Purpose::FalseAlarm)
}

/// Step budget for false-alarm runs aimed at `target` blocks.
pub fn tfa_budget(cs: &CompiledScenario, target: f64) -> u64 {
    cs.config
        .max_steps
        .max((TFA_BUDGET_FACTOR * target).ceil() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub target_tfa: f64,
    pub threshold: f64,
    pub achieved: TfaEstimate,
    pub iterations: usize,
    pub within_tolerance: bool,
}

/// Bisection for the threshold whose mean run length hits `target` blocks.
///
/// All evaluations share random streams, so the estimate is monotone in `h`
/// and the bisection is well posed. Returns the closest evaluation when 20
/// iterations do not reach ±10%.
pub fn calibrate_threshold(
    cs: &CompiledScenario,
    kind: DetectorKind,
    target: f64,
    trials: usize,
    seed: u64,
) -> Result<Calibration> {
    if !(target >= 1.0) || !target.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "target_tfa {target} must be finite and >= 1"
        )));
    }
    let budget = tfa_budget(cs, target);
    let eval = |h: f64| tfa_with(cs, kind, h, trials, budget, seed, Purpose::Calibration);
    let close = |e: &TfaEstimate| (e.mean / target - 1.0).abs() <= CALIBRATION_RTOL;
    let done = |h: f64, achieved: TfaEstimate, iterations: usize| Calibration {
        target_tfa: target,
        threshold: h,
        achieved,
        iterations,
        within_tolerance: close(&achieved),
    };

    if target <= 1.0 {
        return Ok(done(0.0, eval(0.0)?, 0));
    }
    let (mut lo, mut hi) = (0.0, target.ln() + 10.0);
    let top = eval(hi)?;
    if top.mean < target * (1.0 - CALIBRATION_RTOL) {
        return Err(Error::CalibrationFailed(format!(
            "mean run length {:.4} at h = {hi:.4} is below target {target}",
            top.mean
        )));
    }
    let mut best = (hi, top);
    let distance = |e: &TfaEstimate| (e.mean / target).ln().abs();
    for it in 1..=CALIBRATION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        let est = eval(mid)?;
        if distance(&est) < distance(&best.1) {
            best = (mid, est);
        }
        if close(&est) {
            return Ok(done(mid, est, it));
        }
        if est.mean < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(done(best.0, best.1, CALIBRATION_MAX_ITER))
}

/// Detection delay in single copies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayEstimate {
    pub threshold: f64,
    pub nu: u64,
    pub mean: f64,
    pub se: f64,
    pub trials: usize,
    /// Trials that stopped at or after the change (censored ones included).
    pub counted: usize,
    pub false_alarms: usize,
    pub censored: usize,
}

fn check_divergence(cs: &CompiledScenario) -> Result<()> {
    if cs.divergence <= DEGENERATE_DIVERGENCE {
        return Err(Error::DegenerateScenario(format!(
            "post-change divergence {:.3e} per block is zero; delays are undefined",
            cs.divergence
        )));
    }
    Ok(())
}

/// `max_steps` is the block budget after the change block.
#[allow(clippy::too_many_arguments)]
fn delay_with(
    cs: &CompiledScenario,
    kind: DetectorKind,
    h: f64,
    change: BlockChange,
    trials: usize,
    max_steps: u64,
    seed: u64,
    purpose: Purpose,
) -> Result<DelayEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let budget = change.block + max_steps;
    let reports = run_trials(cs, kind, h, trials, |i, det| {
        let stream = BlockStream::new(cs, Some(change), trial_rng(seed, purpose, i as u64));
        run_to_stop(det, stream, budget, false)
    })?;
    let ell = cs.ell as f64;
    let mut delays = Vec::with_capacity(trials);
    let (mut false_alarms, mut censored) = (0, 0);
    for r in &reports {
        // stopping_step is 1-based: the alarm lands at single copy stopping_step·ℓ
        if r.stopped && r.stopping_step <= change.block {
            false_alarms += 1;
            continue;
        }
        censored += r.censored as usize;
        delays.push((r.stopping_step - change.block) as f64 * ell - change.remainder as f64);
    }
    let ms = MeanSe::from_samples(&delays);
    Ok(DelayEstimate {
        threshold: h,
        nu: change.nu(cs.ell),
        mean: ms.mean,
        se: ms.se,
        trials,
        counted: delays.len(),
        false_alarms,
        censored,
    })
}

/// Mean delay after the scenario's change point, on the streams of [`super::sample_stream`].
pub fn estimate_delay(
    cs: &CompiledScenario,
    kind: DetectorKind,
    h: f64,
    trials: usize,
    max_steps: u64,
    seed: u64,
) -> Result<DelayEstimate> {
    let change = cs
        .change
        .ok_or_else(|| Error::InvalidArgument("delay needs a finite change point".into()))?;
    check_divergence(cs)?;
    delay_with(cs, kind, h, change, trials, max_steps, seed, Purpose::Delay)
}

/// Delay at an arbitrary change point with the scenario's delay streams.
pub fn estimate_delay_at(
    cs: &CompiledScenario,
    kind: DetectorKind,
    h: f64,
    nu: u64,
    trials: usize,
    max_steps: u64,
    seed: u64,
) -> Result<DelayEstimate> {
    check_divergence(cs)?;
    let change = BlockChange::split(nu, cs.ell);
    delay_with(cs, kind, h, change, trials, max_steps, seed, Purpose::Delay)
}

/// Worst-case delay surrogate: change at time zero, and change right after the
/// window has filled with pre-change outcomes while the statistic sits at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaddEstimate {
    pub protocol: &'static str,
    pub threshold: f64,
    pub mean: f64,
    pub se: f64,
    pub from_start: DelayEstimate,
    pub hostile: DelayEstimate,
}

pub fn worst_case_delay_protocol(
    cs: &CompiledScenario,
    kind: DetectorKind,
    h: f64,
    trials: usize,
    max_steps: u64,
    seed: u64,
) -> Result<WaddEstimate> {
    check_divergence(cs)?;
    let start = BlockChange {
        block: 0,
        remainder: 0,
    };
    let from_start = delay_with(
        cs,
        kind,
        h,
        start,
        trials,
        max_steps,
        seed,
        Purpose::DelayFromStart,
    )?;
    let warmup = cs.detector(kind, h)?.warmup_len() as u64;
    let hostile = if warmup == 0 {
        from_start
    } else {
        let change = BlockChange {
            block: warmup,
            remainder: 0,
        };
        delay_with(
            cs,
            kind,
            h,
            change,
            trials,
            max_steps,
            seed,
            Purpose::DelayHostile,
        )?
    };
    let worst = if hostile.mean > from_start.mean || from_start.mean.is_nan() {
        hostile
    } else {
        from_start
    };
    Ok(WaddEstimate {
        protocol: "WADD-protocol",
        threshold: h,
        mean: worst.mean,
        se: worst.se,
        from_start,
        hostile,
    })
}

/// Operating points for a tradeoff sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatingGrid {
    Thresholds(Vec<f64>),
    /// Each target (blocks) is calibrated to a threshold first.
    TargetTfa(Vec<f64>),
}

impl OperatingGrid {
    pub fn len(&self) -> usize {
        match self {
            Self::Thresholds(v) | Self::TargetTfa(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_tfa: Option<f64>,
    pub tfa_mean: f64,
    pub tfa_se: f64,
    pub delay_mean: f64,
    pub delay_se: f64,
    pub censor_frac: f64,
    pub unreliable: bool,
    /// Alarms raised before the change in the worst-case protocol runs.
    pub false_alarms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub detector: DetectorKind,
    pub rows: Vec<TradeoffRow>,
    /// Delay (single copies) against ln T̄_FA (blocks).
    pub fit: Option<LineFit>,
    /// `ℓ / D(Q^{(ℓ)}‖P^{(ℓ)})`.
    pub achievable_slope: f64,
    /// `1 / S(σ‖ρ)`.
    pub converse_slope: f64,
    /// False-alarm times nondecreasing in `h` within 3 standard errors.
    pub tfa_monotone: bool,
}

impl TradeoffCurve {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// Runs the worst-case delay protocol and a false-alarm estimate at every grid point.
pub fn tradeoff_sweep(
    cs: &CompiledScenario,
    kind: DetectorKind,
    grid: &OperatingGrid,
    trials: usize,
    seed: u64,
) -> Result<TradeoffCurve> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs >= 3 grid points, got {}",
            grid.len()
        )));
    }
    check_divergence(cs)?;
    let points: Vec<(f64, Option<f64>)> = match grid {
        OperatingGrid::Thresholds(hs) => hs.iter().map(|&h| (h, None)).collect(),
        OperatingGrid::TargetTfa(ts) => ts
            .iter()
            .map(|&t| {
                calibrate_threshold(cs, kind, t, trials, seed).map(|c| (c.threshold, Some(t)))
            })
            .collect::<Result<_>>()?,
    };
    let mut rows = Vec::with_capacity(points.len());
    for (h, target) in points {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "threshold {h} must be finite and >= 0"
            )));
        }
        let budget = target.map_or(cs.config.max_steps, |t| tfa_budget(cs, t));
        let tfa = estimate_tfa(cs, kind, h, trials, budget, seed)?;
        let delay = worst_case_delay_protocol(cs, kind, h, trials, cs.config.max_steps, seed)?;
        rows.push(TradeoffRow {
            threshold: h,
            target_tfa: target,
            tfa_mean: tfa.mean,
            tfa_se: tfa.se,
            delay_mean: delay.mean,
            delay_se: delay.se,
            censor_frac: tfa.censor_frac,
            unreliable: tfa.unreliable,
            false_alarms: delay.from_start.false_alarms + delay.hostile.false_alarms,
        });
    }

    let x: Vec<f64> = rows.iter().map(|r| r.tfa_mean.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.delay_mean).collect();
    let y_se: Vec<f64> = rows.iter().map(|r| r.delay_se).collect();
    let mut by_h: Vec<&TradeoffRow> = rows.iter().collect();
    by_h.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
    let tfa_monotone = by_h
        .windows(2)
        .all(|w| w[1].tfa_mean >= w[0].tfa_mean - 3.0 * w[0].tfa_se.hypot(w[1].tfa_se));
    Ok(TradeoffCurve {
        detector: kind,
        fit: fit_line(&x, &y, &y_se),
        achievable_slope: cs.ell as f64 / cs.divergence,
        converse_slope: 1.0 / cs.relative_entropy,
        rows,
        tfa_monotone,
    })
}

/// Which side of the change a drift estimate samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    PreChange,
    PostChange,
}

/// Per-block mean of the known-`Q` log-likelihood ratio `ln(q/p)` over `steps` i.i.d. blocks.
pub fn llr_drift(cs: &CompiledScenario, regime: Regime, steps: u64, seed: u64) -> Result<MeanSe> {
    const CHUNKS: u64 = 64;
    if steps < 2 {
        return Err(Error::InvalidArgument("drift needs >= 2 steps".into()));
    }
    let table: Vec<f64> = cs
        .model
        .q
        .probs()
        .iter()
        .zip(cs.model.p.probs())
        .map(|(q, p)| (q / p).ln())
        .collect();
    let (sampler, offset) = match regime {
        Regime::PreChange => (&cs.samplers.pre, 0),
        Regime::PostChange => (&cs.samplers.post, CHUNKS),
    };
    let sums: Vec<(f64, f64)> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let n = steps / CHUNKS + u64::from(c < steps % CHUNKS);
            let mut rng = trial_rng(seed, Purpose::Drift, offset + c);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let z = table[sampler.sample(&mut rng)];
                s += z;
                s2 += z * z;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums
        .iter()
        .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    let n = steps as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MeanSe {
        mean,
        se: (var / n).sqrt(),
        n: steps as usize,
    })
}
