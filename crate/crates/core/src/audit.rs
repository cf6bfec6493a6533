//! Monte Carlo audit of the smoothed windowed histogram: KL loss and second
//! moment of the log ratio, with their decay rates in the window size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::random_simplex;
use crate::error::{Error, Result};
use crate::quantum::kl_divergence;
use crate::rng::{trial_rng, Categorical, Purpose, TrialRng};
use crate::stats::{fit_line, MeanSe};

pub const MIN_AUDIT_TRIALS: usize = 100;
/// Slack when comparing a distribution's smallest entry to the floor.
const FLOOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Uniform,
    /// Flat-simplex draw conditioned on every entry being at least `w^{-1/2}`.
    RandomFloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub windows: Vec<usize>,
    /// Support size is `ceil(support_multiplier·√w)`.
    pub support_multiplier: f64,
    pub family: Family,
    pub trials: usize,
    pub seed: u64,
}

impl AuditConfig {
    pub fn new(windows: Vec<usize>, family: Family, trials: usize, seed: u64) -> Self {
        Self {
            windows,
            support_multiplier: 1.0,
            family,
            trials,
            seed,
        }
    }

    pub fn support_size(&self, w: usize) -> usize {
        ((self.support_multiplier * (w as f64).sqrt()).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub w: usize,
    pub d: usize,
    pub p_min: f64,
    /// `p_min ≥ w^{-1/2}`.
    pub floor_ok: bool,
    pub kl_mean: f64,
    pub kl_se: f64,
    pub m2_mean: f64,
    pub m2_se: f64,
    /// `1.5·d/w`.
    pub kl_bound: f64,
    /// `kl_bound − (kl_mean + 3·kl_se)`; negative means the bound check failed.
    pub kl_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub rows: Vec<AuditRow>,
    /// Decay exponent of the KL loss; `None` with fewer than three window sizes.
    pub kl_exponent: Option<f64>,
    pub m2_exponent: Option<f64>,
    /// Some audited distribution violated the probability floor.
    pub floor_warning: bool,
}

fn check_inputs(p: &[f64], w: usize, trials: usize) -> Result<Categorical> {
    if trials < MIN_AUDIT_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "audit needs >= {MIN_AUDIT_TRIALS} trials, got {trials}"
        )));
    }
    if w == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    Categorical::new(p)
}

fn audit_rng(seed: u64, purpose: Purpose, w: usize, trial: usize) -> TrialRng {
    trial_rng(seed, purpose, ((w as u64) << 32) | trial as u64)
}

/// Smoothed histogram of `w` fresh draws.
fn windowed_estimate(sampler: &Categorical, d: usize, w: usize, rng: &mut TrialRng) -> Vec<f64> {
    let mut counts = vec![0usize; d];
    for _ in 0..w {
        counts[sampler.sample(rng)] += 1;
    }
    let denom = (w + d) as f64;
    counts
        .into_iter()
        .map(|c| (1.0 + c as f64) / denom)
        .collect()
}

/// Mean of `D(P‖p̂)` over trials, each estimate built from `w` draws of `P`.
pub fn condition1_estimate(p: &[f64], w: usize, trials: usize, seed: u64) -> Result<MeanSe> {
    let sampler = check_inputs(p, w, trials)?;
    let losses: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = audit_rng(seed, Purpose::KlLoss, w, i);
            kl_divergence(p, &windowed_estimate(&sampler, p.len(), w, &mut rng))
        })
        .collect();
    Ok(MeanSe::from_samples(&losses))
}

/// Mean of `(ln P[X]/p̂[X])²` with `X` a fresh draw independent of the window.
pub fn condition2_estimate(p: &[f64], w: usize, trials: usize, seed: u64) -> Result<MeanSe> {
    let sampler = check_inputs(p, w, trials)?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = audit_rng(seed, Purpose::SecondMoment, w, i);
            let est = windowed_estimate(&sampler, p.len(), w, &mut rng);
            let x = sampler.sample(&mut rng);
            (p[x] / est[x]).ln().powi(2)
        })
        .collect();
    Ok(MeanSe::from_samples(&values))
}

/// Uniform draw from `{p : Σp = 1, p_i ≥ floor}`.
///
/// Rejection from the flat simplex has this law, and so does the affine image
/// `floor + (1 − d·floor)·Dirichlet(1)`, which is what gets sampled.
pub fn floor_distribution(d: usize, floor: f64, rng: &mut TrialRng) -> Result<Vec<f64>> {
    let slack = 1.0 - d as f64 * floor;
    if slack < -FLOOR_TOL {
        return Err(Error::InvalidArgument(format!(
            "no distribution on {d} outcomes has every entry >= {floor:.6}"
        )));
    }
    let slack = slack.max(0.0);
    let mut p: Vec<f64> = random_simplex(d, rng)
        .into_iter()
        .map(|x| floor + slack * x)
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// Decay exponent `β` of `mean ∝ w^{-β}` from a log-log least-squares fit.
pub fn fitted_exponent(windows: &[usize], means: &[f64]) -> Option<f64> {
    if windows.len() < 3 || means.iter().any(|&m| !(m > 0.0)) {
        return None;
    }
    let x: Vec<f64> = windows.iter().map(|&w| (w as f64).ln()).collect();
    let y: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    fit_line(&x, &y, &vec![0.0; x.len()]).map(|f| -f.slope)
}

pub fn audit(config: &AuditConfig) -> Result<AuditReport> {
    if !(config.support_multiplier > 0.0) {
        return Err(Error::InvalidArgument(
            "support multiplier must be positive".into(),
        ));
    }
    let mut rows = Vec::with_capacity(config.windows.len());
    for &w in &config.windows {
        let d = config.support_size(w);
        let floor = 1.0 / (w as f64).sqrt();
        let p = match config.family {
            Family::Uniform => vec![1.0 / d as f64; d],
            Family::RandomFloor => {
                floor_distribution(d, floor, &mut audit_rng(config.seed, Purpose::Family, w, 0))?
            }
        };
        let p_min = p.iter().copied().fold(f64::INFINITY, f64::min);
        let kl = condition1_estimate(&p, w, config.trials, config.seed)?;
        let m2 = condition2_estimate(&p, w, config.trials, config.seed)?;
        let kl_bound = 1.5 * d as f64 / w as f64;
        rows.push(AuditRow {
            w,
            d,
            p_min,
            floor_ok: p_min >= floor - FLOOR_TOL,
            kl_mean: kl.mean,
            kl_se: kl.se,
            m2_mean: m2.mean,
            m2_se: m2.se,
            kl_bound,
            kl_margin: kl_bound - (kl.mean + 3.0 * kl.se),
        });
    }
    let windows: Vec<usize> = rows.iter().map(|r| r.w).collect();
    let kl: Vec<f64> = rows.iter().map(|r| r.kl_mean).collect();
    let m2: Vec<f64> = rows.iter().map(|r| r.m2_mean).collect();
    Ok(AuditReport {
        config: config.clone(),
        kl_exponent: fitted_exponent(&windows, &kl),
        m2_exponent: fitted_exponent(&windows, &m2),
        floor_warning: rows.iter().any(|r| !r.floor_ok),
        rows,
    })
}
