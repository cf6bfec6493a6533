use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::detectors::{CusumDetector, NwlaDetector, SequentialDetector};
use crate::error::{Error, Result};
use crate::quantum::{quantum_relative_entropy, DensityFile, DensityOperator};
use crate::rng::Categorical;
use crate::schur::{build_isotypic_pvm, induce, InducedModel};

/// When the source switches from `ρ` to `σ`, in single-copy units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangePoint {
    Never,
    At(u64),
}

impl Serialize for ChangePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Never => s.serialize_str("never"),
            Self::At(nu) => s.serialize_u64(*nu),
        }
    }
}

impl<'de> Deserialize<'de> for ChangePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            At(u64),
            Word(String),
            Null(()),
        }
        match Raw::deserialize(d)? {
            Raw::At(nu) => Ok(Self::At(nu)),
            Raw::Null(()) => Ok(Self::Never),
            Raw::Word(w) if w == "never" || w == "inf" => Ok(Self::Never),
            Raw::Word(w) => Err(de::Error::custom(format!(
                "change point must be an integer or \"never\", got {w:?}"
            ))),
        }
    }
}

/// A size parameter that is either fixed or derived from the other settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Auto,
    Fixed(usize),
}

impl Serialize for Schedule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Auto => s.serialize_str("auto"),
            Self::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Fixed(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Fixed(n) => Ok(Self::Fixed(n)),
            Raw::Word(w) if w == "auto" => Ok(Self::Auto),
            Raw::Word(w) => Err(de::Error::custom(format!(
                "expected an integer or \"auto\", got {w:?}"
            ))),
        }
    }
}

fn default_auto() -> Schedule {
    Schedule::Auto
}

/// Scenario file contents. `target_tfa` is in blocks; `nu` in single copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub rho: DensityFile,
    pub sigma: DensityFile,
    pub nu: ChangePoint,
    #[serde(default = "default_auto")]
    pub ell: Schedule,
    #[serde(default = "default_auto")]
    pub w: Schedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_tfa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub trials: usize,
    pub max_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("scenario: {e}")))
    }
}

/// Where the change falls relative to block boundaries: `ν = mℓ + r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockChange {
    pub block: u64,
    pub remainder: usize,
}

impl BlockChange {
    pub fn split(nu: u64, ell: usize) -> Self {
        Self {
            block: nu / ell as u64,
            remainder: (nu % ell as u64) as usize,
        }
    }

    pub fn nu(&self, ell: usize) -> u64 {
        self.block * ell as u64 + self.remainder as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// Windowed CUSUM with the smoothed histogram in place of `Q`.
    Nwla,
    /// CUSUM that knows the post-change distribution.
    OracleCusum,
}

/// Either detector behind one concrete type, so Monte Carlo loops stay monomorphic.
#[derive(Debug, Clone)]
pub enum AnyDetector {
    Nwla(NwlaDetector),
    Cusum(CusumDetector),
}

impl SequentialDetector for AnyDetector {
    #[inline]
    fn step(&mut self, outcome: usize) -> Result<bool> {
        match self {
            Self::Nwla(d) => d.step(outcome),
            Self::Cusum(d) => d.step(outcome),
        }
    }

    fn statistic(&self) -> f64 {
        match self {
            Self::Nwla(d) => d.statistic(),
            Self::Cusum(d) => d.statistic(),
        }
    }

    fn threshold(&self) -> f64 {
        match self {
            Self::Nwla(d) => d.threshold(),
            Self::Cusum(d) => d.threshold(),
        }
    }

    fn set_threshold(&mut self, h: f64) {
        match self {
            Self::Nwla(d) => d.set_threshold(h),
            Self::Cusum(d) => d.set_threshold(h),
        }
    }

    fn steps(&self) -> u64 {
        match self {
            Self::Nwla(d) => d.steps(),
            Self::Cusum(d) => d.steps(),
        }
    }

    fn reset(&mut self) {
        match self {
            Self::Nwla(d) => d.reset(),
            Self::Cusum(d) => d.reset(),
        }
    }

    fn warmup_len(&self) -> usize {
        match self {
            Self::Nwla(d) => d.warmup_len(),
            Self::Cusum(d) => d.warmup_len(),
        }
    }
}

/// Samplers for every block distribution a stream can use.
#[derive(Debug, Clone)]
pub(crate) struct BlockSamplers {
    pub pre: Categorical,
    pub post: Categorical,
    /// `hybrid[r-1]` for `r ∈ [1, ℓ-1]`.
    pub hybrid: Vec<Categorical>,
}

/// A scenario with its measurement built and every schedule resolved.
#[derive(Debug, Clone)]
pub struct CompiledScenario {
    pub config: ScenarioConfig,
    pub model: InducedModel,
    pub ell: usize,
    pub window: usize,
    pub change: Option<BlockChange>,
    /// `S(σ‖ρ)` in nats per copy.
    pub relative_entropy: f64,
    /// `D(Q^{(ℓ)}‖P^{(ℓ)})` in nats per block.
    pub divergence: f64,
    pub gamma_min: f64,
    pub(crate) samplers: BlockSamplers,
}

/// `ceil(√(ln target))`, at least 1.
pub fn auto_window(target_tfa: f64) -> usize {
    (target_tfa.max(1.0).ln().sqrt().ceil() as usize).max(1)
}

/// `max(1, ceil(½·ln w / ln(1/γ_min)))`.
pub fn auto_block_length(window: usize, gamma_min: f64) -> usize {
    let denom = (1.0 / gamma_min).ln();
    if !(denom > 0.0) {
        return 1;
    }
    let raw = (0.5 * (window as f64).ln() / denom).ceil();
    if raw.is_finite() && raw > 1.0 {
        raw as usize
    } else {
        1
    }
}

pub fn compile(config: &ScenarioConfig) -> Result<CompiledScenario> {
    let rho = config.rho.to_density()?;
    let sigma = config.sigma.to_density()?;
    compile_states(config, &rho, &sigma)
}

/// Like [`compile`] with the states already validated.
pub fn compile_states(
    config: &ScenarioConfig,
    rho: &DensityOperator,
    sigma: &DensityOperator,
) -> Result<CompiledScenario> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if config.max_steps == 0 {
        return Err(Error::InvalidArgument("max_steps must be >= 1".into()));
    }
    if let Some(t) = config.target_tfa {
        if !(t >= 1.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "target_tfa {t} must be a finite number >= 1"
            )));
        }
    }
    if let Some(h) = config.threshold {
        if !(h >= 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "threshold {h} must be finite and >= 0"
            )));
        }
    }
    let relative_entropy = quantum_relative_entropy(sigma, rho)?;
    if relative_entropy.is_infinite() && config.nu != ChangePoint::Never {
        return Err(Error::InfiniteDivergence);
    }
    let spectrum = rho.spectrum();
    if !rho.is_full_rank() {
        return Err(Error::RankDeficient {
            min_eigenvalue: spectrum.eigenvalues[spectrum.dim() - 1],
        });
    }
    let gamma_min = spectrum.eigenvalues[spectrum.dim() - 1];

    let window = match config.w {
        Schedule::Fixed(0) => return Err(Error::InvalidArgument("w must be >= 1".into())),
        Schedule::Fixed(w) => w,
        Schedule::Auto => match config.target_tfa {
            Some(t) => auto_window(t),
            None => {
                return Err(Error::InvalidArgument(
                    "w = \"auto\" needs target_tfa".into(),
                ))
            }
        },
    };
    let ell = match config.ell {
        Schedule::Fixed(0) => return Err(Error::InvalidArgument("ell must be >= 1".into())),
        Schedule::Fixed(l) => l,
        Schedule::Auto => auto_block_length(window, gamma_min),
    };

    let pvm = build_isotypic_pvm(rho, ell)?;
    let model = induce(pvm, rho, sigma)?;
    let divergence = model.divergence();
    let samplers = BlockSamplers {
        pre: Categorical::new(model.p.probs())?,
        post: Categorical::new(model.q.probs())?,
        hybrid: model
            .hybrids
            .iter()
            .map(|h| Categorical::new(h.probs()))
            .collect::<Result<_>>()?,
    };
    let change = match config.nu {
        ChangePoint::Never => None,
        ChangePoint::At(nu) => Some(BlockChange::split(nu, ell)),
    };
    Ok(CompiledScenario {
        config: config.clone(),
        model,
        ell,
        window,
        change,
        relative_entropy,
        divergence,
        gamma_min,
        samplers,
    })
}

impl CompiledScenario {
    pub fn outcome_count(&self) -> usize {
        self.model.outcome_count()
    }

    /// `S(σ‖ρ) − D/ℓ`.
    pub fn entropy_gap(&self) -> f64 {
        self.relative_entropy - self.divergence / self.ell as f64
    }

    /// Seed from the config, if any.
    pub fn seed(&self) -> Option<u64> {
        self.config.seed
    }

    /// A fresh detector of the given kind at threshold `h`.
    pub fn detector(&self, kind: DetectorKind, h: f64) -> Result<AnyDetector> {
        Ok(match kind {
            DetectorKind::Nwla => {
                AnyDetector::Nwla(NwlaDetector::new(self.model.p.probs(), self.window, h)?)
            }
            DetectorKind::OracleCusum => AnyDetector::Cusum(CusumDetector::new(
                self.model.p.probs(),
                self.model.q.probs(),
                h,
            )?),
        })
    }

    /// Same scenario with a different change point.
    pub fn with_change(&self, nu: ChangePoint) -> Self {
        let mut cs = self.clone();
        cs.config.nu = nu;
        cs.change = match nu {
            ChangePoint::Never => None,
            ChangePoint::At(nu) => Some(BlockChange::split(nu, self.ell)),
        };
        cs
    }
}
