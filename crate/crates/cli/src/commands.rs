use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use qusum_core::audit::{audit, AuditConfig, AuditRow, Family};
use qusum_core::detectors::{run_to_stop, CusumDetector, NwlaDetector, SequentialDetector};
use qusum_core::quantum::{
    quantum_relative_entropy, DensityFile, DensityOperator, ProbabilityVector,
};
use qusum_core::schur::{build_pvm, entropy_gap_sweep, induce, PvmKind};
use qusum_core::sim::{
    calibrate_threshold, compile, tradeoff_sweep, CompiledScenario, DetectorKind, OperatingGrid,
    ScenarioConfig,
};

use crate::args::*;
use crate::output::{emit, sidecar, to_csv, to_json, write_atomic, RecordedConfig};
use crate::CliError;

/// What a command leaves behind for the terminal.
pub struct Done {
    pub summary: String,
}

pub fn run(command: Command) -> Result<Done, CliError> {
    match command {
        Command::PvmBuild(a) => pvm_build(a),
        Command::EntropyGap(a) => entropy_gap(a),
        Command::Induce(a) => induce_cmd(a),
        Command::Detect(a) => detect(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Conditions(a) => conditions(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_density(path: &Path) -> Result<DensityOperator, CliError> {
    Ok(DensityFile::from_json(&read_text(path)?)?.to_density()?)
}

fn pvm_kind(kind: MeasurementKind) -> PvmKind {
    match kind {
        MeasurementKind::Isotypic => PvmKind::Isotypic,
        MeasurementKind::TypeOnly => PvmKind::TypeOnly,
    }
}

fn detector_kind(choice: DetectorChoice) -> DetectorKind {
    match choice {
        DetectorChoice::Nwla => DetectorKind::Nwla,
        DetectorChoice::OracleCusum => DetectorKind::OracleCusum,
    }
}

#[derive(Serialize)]
struct PvmReport {
    ell: usize,
    b: usize,
    outcome_count: usize,
    bound: u64,
    labels: Vec<String>,
    ranks: Vec<usize>,
    class_values: Vec<f64>,
    completeness_residual: f64,
    config: RecordedConfig,
}

fn pvm_build(args: PvmBuildArgs) -> Result<Done, CliError> {
    let rho = read_density(&args.rho)?;
    let pvm = build_pvm(&rho, args.ell, pvm_kind(args.kind))?;
    let report = PvmReport {
        ell: pvm.ell,
        b: pvm.base_dim,
        outcome_count: pvm.outcome_count(),
        bound: pvm.count_bound() as u64,
        labels: pvm.label_strings(),
        ranks: pvm.ranks.clone(),
        class_values: pvm.class_values.clone(),
        completeness_residual: pvm.completeness_residual,
        config: RecordedConfig::new(&Command::PvmBuild(args.clone())),
    };
    emit(args.out.as_deref(), &to_json(&report))?;
    Ok(Done {
        summary: format!(
            "pvm-build: ell={} b={} outcomes={} (bound {}) completeness residual {:.2e}",
            report.ell, report.b, report.outcome_count, report.bound, report.completeness_residual
        ),
    })
}

#[derive(Serialize)]
struct GapRow {
    ell: usize,
    normalized_divergence: f64,
    quantum_relative_entropy: f64,
    gap: f64,
}

fn entropy_gap(args: EntropyGapArgs) -> Result<Done, CliError> {
    let rho = read_density(&args.rho)?;
    let sigma = read_density(&args.sigma)?;
    let rows = entropy_gap_sweep(&rho, &sigma, args.ell_max, pvm_kind(args.kind))?;
    let table: Vec<GapRow> = rows
        .iter()
        .map(|r| GapRow {
            ell: r.ell,
            normalized_divergence: r.normalized_divergence,
            quantum_relative_entropy: r.quantum_relative_entropy,
            gap: r.gap,
        })
        .collect();
    emit(args.out.as_deref(), &to_csv(&table)?)?;
    if let Some(out) = &args.out {
        write_atomic(
            &sidecar(out),
            to_json(&RecordedConfig::new(&Command::EntropyGap(args.clone()))).as_bytes(),
        )?;
    }
    let last = rows.last().expect("ell_max >= 1");
    Ok(Done {
        summary: format!(
            "entropy-gap: {} rows, S = {}, gap at ell={} is {:.6}",
            rows.len(),
            last.quantum_relative_entropy,
            last.ell,
            last.gap
        ),
    })
}

#[derive(Serialize)]
struct InduceReport {
    ell: usize,
    b: usize,
    labels: Vec<String>,
    p: Vec<f64>,
    q: Vec<f64>,
    /// Entry `r-1`: `r` pre-change copies then `ℓ-r` post-change copies.
    hybrids: Vec<Vec<f64>>,
    divergence: f64,
    normalized_divergence: f64,
    quantum_relative_entropy: f64,
    config: RecordedConfig,
}

fn induce_cmd(args: InduceArgs) -> Result<Done, CliError> {
    let rho = read_density(&args.rho)?;
    let sigma = read_density(&args.sigma)?;
    let pvm = build_pvm(&rho, args.ell, pvm_kind(args.kind))?;
    let labels = pvm.label_strings();
    let model = induce(pvm, &rho, &sigma)?;
    let d = model.divergence();
    let report = InduceReport {
        ell: model.ell(),
        b: rho.dim(),
        labels,
        p: model.p.probs().to_vec(),
        q: model.q.probs().to_vec(),
        hybrids: model.hybrids.iter().map(|h| h.probs().to_vec()).collect(),
        divergence: d,
        normalized_divergence: d / model.ell() as f64,
        quantum_relative_entropy: quantum_relative_entropy(&sigma, &rho)?,
        config: RecordedConfig::new(&Command::Induce(args.clone())),
    };
    emit(args.out.as_deref(), &to_json(&report))?;
    Ok(Done {
        summary: format!(
            "induce: ell={} outcomes={} D/ell={:.6} S={:.6}",
            report.ell,
            report.p.len(),
            report.normalized_divergence,
            report.quantum_relative_entropy
        ),
    })
}

/// Detector model file. The output of `induce` is accepted as is.
#[derive(Debug, Deserialize)]
struct ModelFile {
    #[serde(default)]
    labels: Option<Vec<String>>,
    p: Vec<f64>,
    #[serde(default)]
    q: Option<Vec<f64>>,
    #[serde(default, alias = "window")]
    w: Option<usize>,
    #[serde(default)]
    d: Option<usize>,
    #[serde(default, alias = "threshold")]
    h: Option<f64>,
}

fn parse_stream(
    text: &str,
    outcomes: &ProbabilityVector,
    column: Option<usize>,
) -> Result<Vec<usize>, CliError> {
    let fields: Vec<String> = match column {
        None => text
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect(),
        Some(c) => csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes())
            .records()
            .enumerate()
            .map(|(n, rec)| {
                let rec = rec.map_err(|e| CliError::Input(format!("stream: {e}")))?;
                rec.get(c).map(|f| f.trim().to_string()).ok_or_else(|| {
                    CliError::Input(format!("stream record {} has no column {c}", n + 1))
                })
            })
            .collect::<Result<_, _>>()?,
    };
    let mut stream = Vec::with_capacity(fields.len());
    for (n, field) in fields.iter().enumerate() {
        let index = outcomes
            .index_of(field)
            .or_else(|| field.parse::<usize>().ok().filter(|&i| i < outcomes.len()));
        match index {
            Some(i) => stream.push(i),
            // a header line
            None if n == 0 => {}
            None => return Err(qusum_core::Error::UnknownOutcome(field.clone()).into()),
        }
    }
    Ok(stream)
}

#[derive(Serialize)]
struct DetectReport {
    detector: DetectorChoice,
    stopped: bool,
    stopping_step: u64,
    censored: bool,
    threshold: f64,
    final_statistic: f64,
    stream_length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
    config: RecordedConfig,
}

fn detect(args: DetectArgs) -> Result<Done, CliError> {
    let model: ModelFile = serde_json::from_str(&read_text(&args.model)?)
        .map_err(|e| CliError::Input(format!("model file: {e}")))?;
    let d = model.p.len();
    if let Some(md) = model.d {
        if md != d {
            return Err(qusum_core::Error::DimensionMismatch {
                expected: md,
                actual: d,
            }
            .into());
        }
    }
    let labels = model
        .labels
        .clone()
        .unwrap_or_else(|| (0..d).map(|i| i.to_string()).collect());
    let p = ProbabilityVector::new(model.p.clone(), labels.clone())?;
    let h = args.threshold.or(model.h).ok_or_else(|| {
        CliError::Input("no threshold: pass --threshold or set \"h\" in the model".into())
    })?;
    let stream = parse_stream(&read_text(&args.stream)?, &p, args.column)?;
    let max_steps = args.max_steps.unwrap_or(stream.len() as u64);

    let (mut det, window): (Box<dyn SequentialDetector>, Option<usize>) = match args.detector {
        DetectorChoice::Nwla => {
            let w = args.window.or(model.w).ok_or_else(|| {
                CliError::Input("no window: pass --window or set \"w\" in the model".into())
            })?;
            (
                Box::new(NwlaDetector::from_distribution(&p, w, h)?),
                Some(w),
            )
        }
        DetectorChoice::OracleCusum => {
            let q = model.q.clone().ok_or_else(|| {
                CliError::Input("the oracle CUSUM needs \"q\" in the model".into())
            })?;
            let q = ProbabilityVector::new(q, labels)?;
            (
                Box::new(CusumDetector::from_distributions(&p, &q, h)?),
                None,
            )
        }
    };
    let result = run_to_stop(
        det.as_mut(),
        stream.iter().copied(),
        max_steps,
        args.trace.is_some(),
    )?;
    if let (Some(path), Some(trace)) = (&args.trace, &result.statistic_trace) {
        #[derive(Serialize)]
        struct TraceRow {
            step: usize,
            statistic: f64,
        }
        let rows: Vec<TraceRow> = trace
            .iter()
            .enumerate()
            .map(|(i, &s)| TraceRow {
                step: i + 1,
                statistic: s,
            })
            .collect();
        write_atomic(path, to_csv(&rows)?.as_bytes())?;
    }
    let report = DetectReport {
        detector: args.detector,
        stopped: result.stopped,
        stopping_step: result.stopping_step,
        censored: result.censored,
        threshold: result.threshold,
        final_statistic: det.statistic(),
        stream_length: stream.len(),
        window,
        config: RecordedConfig::new(&Command::Detect(args.clone())),
    };
    emit(args.out.as_deref(), &to_json(&report))?;
    Ok(Done {
        summary: if report.stopped {
            format!(
                "detect: alarm at step {} (h = {})",
                report.stopping_step, report.threshold
            )
        } else {
            format!(
                "detect: no alarm in {} steps (h = {})",
                report.stopping_step, report.threshold
            )
        },
    })
}

/// Scenario with seed and trial count resolved from flags or the file.
struct LoadedScenario {
    config: ScenarioConfig,
    seed: u64,
    trials: usize,
}

fn load_scenario(
    path: &Path,
    seed: Option<u64>,
    trials: Option<usize>,
) -> Result<LoadedScenario, CliError> {
    let config = ScenarioConfig::from_json(&read_text(path)?)?;
    let seed = seed.or(config.seed).ok_or_else(|| {
        CliError::Input("no seed: pass --seed or set \"seed\" in the scenario".into())
    })?;
    let trials = trials.unwrap_or(config.trials);
    Ok(LoadedScenario {
        config,
        seed,
        trials,
    })
}

#[derive(Serialize)]
struct CalibrationReport {
    detector: DetectorChoice,
    target_tfa: f64,
    threshold: f64,
    achieved_tfa: f64,
    achieved_se: f64,
    censor_frac: f64,
    unreliable: bool,
    iterations: usize,
    within_tolerance: bool,
    ell: usize,
    w: usize,
    d: usize,
    tfa_units: &'static str,
    config: RecordedConfig,
}

fn calibrate(mut args: CalibrateArgs) -> Result<Done, CliError> {
    let mut sc = load_scenario(&args.scenario, args.seed, args.trials)?;
    let target = args.target.or(sc.config.target_tfa).ok_or_else(|| {
        CliError::Input("no target: pass --target or set \"target_tfa\" in the scenario".into())
    })?;
    sc.config.target_tfa.get_or_insert(target);
    let cs = compile(&sc.config)?;
    let cal = calibrate_threshold(
        &cs,
        detector_kind(args.detector),
        target,
        sc.trials,
        sc.seed,
    )?;
    args.seed = Some(sc.seed);
    args.trials = Some(sc.trials);
    args.target = Some(target);
    let report = CalibrationReport {
        detector: args.detector,
        target_tfa: target,
        threshold: cal.threshold,
        achieved_tfa: cal.achieved.mean,
        achieved_se: cal.achieved.se,
        censor_frac: cal.achieved.censor_frac,
        unreliable: cal.achieved.unreliable,
        iterations: cal.iterations,
        within_tolerance: cal.within_tolerance,
        ell: cs.ell,
        w: cs.window,
        d: cs.outcome_count(),
        tfa_units: "blocks",
        config: RecordedConfig::new(&Command::Calibrate(args.clone())),
    };
    emit(args.out.as_deref(), &to_json(&report))?;
    Ok(Done {
        summary: format!(
            "calibrate: h = {:.6} gives mean false-alarm time {:.1} ± {:.1} blocks (target {})",
            cal.threshold, cal.achieved.mean, cal.achieved.se, target
        ),
    })
}

#[derive(Serialize)]
struct ConditionsSummary {
    family: FamilyChoice,
    support_multiplier: f64,
    trials: usize,
    seed: u64,
    kl_exponent: Option<f64>,
    m2_exponent: Option<f64>,
    floor_warning: bool,
    rows: Vec<AuditRow>,
    config: RecordedConfig,
}

fn conditions(mut args: ConditionsArgs) -> Result<Done, CliError> {
    let (family, default_mult) = match args.family {
        FamilyChoice::Uniform => (Family::Uniform, 1.0),
        FamilyChoice::RandomFloor => (Family::RandomFloor, 0.5),
    };
    let mult = *args.d_multiplier.get_or_insert(default_mult);
    let config = AuditConfig {
        windows: args.w_list.clone(),
        support_multiplier: mult,
        family,
        trials: args.trials,
        seed: args.seed,
    };
    let report = audit(&config)?;
    #[derive(Serialize)]
    struct Row {
        w: usize,
        d: usize,
        kl_mean: f64,
        kl_se: f64,
        m2_mean: f64,
        m2_se: f64,
    }
    let table: Vec<Row> = report
        .rows
        .iter()
        .map(|r| Row {
            w: r.w,
            d: r.d,
            kl_mean: r.kl_mean,
            kl_se: r.kl_se,
            m2_mean: r.m2_mean,
            m2_se: r.m2_se,
        })
        .collect();
    let summary = ConditionsSummary {
        family: args.family,
        support_multiplier: mult,
        trials: args.trials,
        seed: args.seed,
        kl_exponent: report.kl_exponent,
        m2_exponent: report.m2_exponent,
        floor_warning: report.floor_warning,
        rows: report.rows,
        config: RecordedConfig::new(&Command::Conditions(args.clone())),
    };
    write_atomic(&args.out.join("conditions.csv"), to_csv(&table)?.as_bytes())?;
    write_atomic(
        &args.out.join("conditions.json"),
        to_json(&summary).as_bytes(),
    )?;
    let fmt = |e: Option<f64>| e.map_or("n/a".to_string(), |x| format!("{x:.3}"));
    Ok(Done {
        summary: format!(
            "conditions: {} window sizes, KL exponent {}, second-moment exponent {}{}",
            summary.rows.len(),
            fmt(summary.kl_exponent),
            fmt(summary.m2_exponent),
            if summary.floor_warning {
                " (floor violated)"
            } else {
                ""
            }
        ),
    })
}

#[derive(Serialize)]
struct SweepSummary {
    detector: DetectorChoice,
    fitted_slope: Option<f64>,
    slope_se: Option<f64>,
    intercept: Option<f64>,
    /// ℓ / D(Q‖P) per block.
    achievable_slope: f64,
    /// 1 / S(σ‖ρ).
    converse_slope: f64,
    ell: usize,
    w: usize,
    d: usize,
    relative_entropy: f64,
    divergence_per_block: f64,
    entropy_gap: f64,
    tfa_units: &'static str,
    delay_units: &'static str,
    delay_protocol: &'static str,
    tfa_monotone: bool,
    unreliable_points: usize,
    points: usize,
    config: RecordedConfig,
}

/// One line of `curve.csv`.
#[derive(Debug, Serialize, Deserialize)]
struct CurveRow {
    h: f64,
    tfa_mean: f64,
    tfa_se: f64,
    delay_mean: f64,
    delay_se: f64,
    censor_frac: f64,
}

fn sweep(mut args: SweepArgs) -> Result<Done, CliError> {
    let mut sc = load_scenario(&args.scenario, args.seed, args.trials)?;
    let grid = match (&args.tfa, &args.h) {
        (Some(t), _) => OperatingGrid::TargetTfa(t.clone()),
        (None, Some(h)) => OperatingGrid::Thresholds(h.clone()),
        (None, None) => return Err(CliError::Input("pass --tfa or --h".into())),
    };
    if sc.config.target_tfa.is_none() {
        if let OperatingGrid::TargetTfa(t) = &grid {
            sc.config.target_tfa = t.iter().copied().reduce(f64::max);
        }
    }
    let cs: CompiledScenario = compile(&sc.config)?;
    let kind = detector_kind(args.detector);
    let curve = tradeoff_sweep(&cs, kind, &grid, sc.trials, sc.seed)?;
    args.seed = Some(sc.seed);
    args.trials = Some(sc.trials);

    let table: Vec<CurveRow> = curve
        .rows
        .iter()
        .map(|r| CurveRow {
            h: r.threshold,
            tfa_mean: r.tfa_mean,
            tfa_se: r.tfa_se,
            delay_mean: r.delay_mean,
            delay_se: r.delay_se,
            censor_frac: r.censor_frac,
        })
        .collect();
    let summary = SweepSummary {
        detector: args.detector,
        fitted_slope: curve.fit.map(|f| f.slope),
        slope_se: curve.fit.map(|f| f.slope_se),
        intercept: curve.fit.map(|f| f.intercept),
        achievable_slope: curve.achievable_slope,
        converse_slope: curve.converse_slope,
        ell: cs.ell,
        w: cs.window,
        d: cs.outcome_count(),
        relative_entropy: cs.relative_entropy,
        divergence_per_block: cs.divergence,
        entropy_gap: cs.entropy_gap(),
        tfa_units: "blocks",
        delay_units: "single copies",
        delay_protocol: "WADD-protocol",
        tfa_monotone: curve.tfa_monotone,
        unreliable_points: curve.rows.iter().filter(|r| r.unreliable).count(),
        points: curve.rows.len(),
        config: RecordedConfig::new(&Command::Sweep(args.clone())),
    };
    write_atomic(&args.out.join("curve.csv"), to_csv(&table)?.as_bytes())?;
    write_atomic(&args.out.join("summary.json"), to_json(&summary).as_bytes())?;
    Ok(Done {
        summary: format!(
            "sweep: {} points, slope {} (achievable {:.4}, converse {:.4}), ell={} w={} d={}",
            summary.points,
            summary
                .fitted_slope
                .map_or("n/a".into(), |s| format!("{s:.4}")),
            summary.achievable_slope,
            summary.converse_slope,
            summary.ell,
            summary.w,
            summary.d
        ),
    })
}

#[derive(Serialize)]
struct SweepReport {
    dir: String,
    detector: Value,
    points: usize,
    fitted_slope: Option<f64>,
    achievable_slope: Option<f64>,
    converse_slope: Option<f64>,
    slope_over_achievable: Option<f64>,
    slope_over_converse: Option<f64>,
    tfa_range: [f64; 2],
    delay_range: [f64; 2],
    max_censor_frac: f64,
    unreliable_points: usize,
    config: RecordedConfig,
}

fn report(args: ReportArgs) -> Result<Done, CliError> {
    let summary: Value = serde_json::from_str(&read_text(&args.dir.join("summary.json"))?)
        .map_err(|e| CliError::Input(format!("summary.json: {e}")))?;
    let curve_path = args.dir.join("curve.csv");
    let rows: Vec<CurveRow> = csv::Reader::from_path(&curve_path)
        .and_then(|mut r| r.deserialize().collect())
        .map_err(|e| CliError::Input(format!("{}: {e}", curve_path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Input("curve.csv has no rows".into()));
    }
    let range = |f: fn(&CurveRow) -> f64| {
        let vals = rows.iter().map(f);
        [
            vals.clone().fold(f64::INFINITY, f64::min),
            vals.fold(f64::NEG_INFINITY, f64::max),
        ]
    };
    let num = |key: &str| summary.get(key).and_then(Value::as_f64);
    let slope = num("fitted_slope");
    let ratio = |den: Option<f64>| slope.zip(den).map(|(s, d)| s / d);
    let out = SweepReport {
        dir: args.dir.display().to_string(),
        detector: summary.get("detector").cloned().unwrap_or(Value::Null),
        points: rows.len(),
        fitted_slope: slope,
        achievable_slope: num("achievable_slope"),
        converse_slope: num("converse_slope"),
        slope_over_achievable: ratio(num("achievable_slope")),
        slope_over_converse: ratio(num("converse_slope")),
        tfa_range: range(|r| r.tfa_mean),
        delay_range: range(|r| r.delay_mean),
        max_censor_frac: range(|r| r.censor_frac)[1],
        unreliable_points: rows
            .iter()
            .filter(|r| r.censor_frac > qusum_core::sim::CENSOR_WARN_FRACTION)
            .count(),
        config: RecordedConfig::new(&Command::Report(args.clone())),
    };
    emit(args.out.as_deref(), &to_json(&out))?;
    Ok(Done {
        summary: format!(
            "report: {} points, slope/achievable {}, slope/converse {}",
            out.points,
            out.slope_over_achievable
                .map_or("n/a".into(), |x| format!("{x:.3}")),
            out.slope_over_converse
                .map_or("n/a".into(), |x| format!("{x:.3}"))
        ),
    })
}
