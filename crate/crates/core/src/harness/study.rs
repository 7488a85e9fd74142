//! Frequency sweeps and controller comparisons built from paired runs.

use serde::{Deserialize, Serialize};

use super::batch;
use super::config::{ControllerKind, ScenarioConfig};
use super::metrics::{MetricsReport, Reduction};
use super::scenario::{metrics, run_scenario, simulate};
use super::HarnessError;
use crate::plant::GustProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub frequency: f64,
    pub metrics: MetricsReport,
}

/// Copy of `cfg` with the gust frequency replaced and the run long enough
/// for the gust train to pass.
pub fn at_frequency(cfg: &ScenarioConfig, frequency: f64) -> ScenarioConfig {
    let gust = GustProfile { frequency, ..cfg.gust.clone().unwrap_or_default() };
    let duration = cfg.duration.max((gust.end_time() + 2.0).ceil());
    ScenarioConfig { name: format!("{}_{frequency}hz", cfg.name), gust: Some(gust), duration, ..cfg.clone() }
}

/// Gust-frequency sweep at fixed gains.
pub fn sweep(cfg: &ScenarioConfig, frequencies: &[f64]) -> Result<Vec<SweepPoint>, HarnessError> {
    let runs = batch::map(frequencies, |f| run_scenario(&at_frequency(cfg, *f)).map(|r| (*f, r.metrics)));
    runs.into_iter()
        .map(|r| r.map(|(frequency, metrics)| SweepPoint { frequency, metrics }))
        .collect()
}

/// Allowed number of increases in a sequence that should not increase.
pub fn count_inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    NoNoise,
    Noise,
    NoiseFaultBacklash,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::NoNoise, Condition::Noise, Condition::NoiseFaultBacklash];

    pub fn apply(self, cfg: &ScenarioConfig) -> ScenarioConfig {
        let (noise, fault, backlash) = match self {
            Condition::NoNoise => (false, false, false),
            Condition::Noise => (true, false, false),
            Condition::NoiseFaultBacklash => (true, true, true),
        };
        ScenarioConfig { noise, fault, backlash, ..cfg.clone() }
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::NoNoise => "no-noise",
            Condition::Noise => "noise",
            Condition::NoiseFaultBacklash => "noise+fault+backlash",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub controller: ControllerKind,
    pub reduction: Reduction,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub condition: Condition,
    pub entries: Vec<ComparisonEntry>,
}

impl ComparisonRow {
    pub fn get(&self, controller: ControllerKind) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.controller == controller)
    }
}

/// One row per condition, one entry per controller. Every controller in a
/// row is scored against the same open-loop run.
pub fn compare_controllers(
    cfg: &ScenarioConfig,
    controllers: &[ControllerKind],
    conditions: &[Condition],
) -> Result<Vec<ComparisonRow>, HarnessError> {
    let mut jobs = Vec::new();
    for &cond in conditions {
        let base = cond.apply(cfg);
        jobs.push(base.with_controller(ControllerKind::OpenLoop));
        for &c in controllers {
            jobs.push(base.with_controller(c));
        }
    }
    let outputs = batch::map(&jobs, simulate);
    let mut outputs = outputs.into_iter();
    let mut jobs = jobs.iter();
    let mut rows = Vec::with_capacity(conditions.len());
    for &cond in conditions {
        jobs.next();
        let open = outputs.next().expect("open-loop job per condition")?;
        let mut entries = Vec::with_capacity(controllers.len());
        for &controller in controllers {
            let job = jobs.next().expect("one job per controller");
            let closed = outputs.next().expect("one output per job")?;
            let report = metrics(job, &closed, &open);
            entries.push(ComparisonEntry { controller, reduction: report.reduction, metrics: report });
        }
        rows.push(ComparisonRow { condition: cond, entries });
    }
    Ok(rows)
}
