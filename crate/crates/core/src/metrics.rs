//! Time-series summaries, knob sweeps and their CSV/text serializations.

use std::io::{self, Write};
use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Protocol, ScenarioConfig};
use crate::format::sig9;
use crate::sim::{run_scenario, RoundReport, RunOutput, SimError};

pub const TIMESERIES_COLUMNS: [&str; 7] =
    ["round", "alive", "mean_residual_J", "generated", "delivered", "coverage_ratio", "ch_count"];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty round window {0:?}")]
    EmptyWindow(Range<u64>),
    #[error("sweep needs at least one knob value and one seed")]
    EmptySweep,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Round-indexed reports of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub label: String,
    pub protocol: Protocol,
    pub seed: u64,
    pub node_count: usize,
    pub reports: Vec<RoundReport>,
}

impl TimeSeries {
    pub fn from_run(label: &str, out: &RunOutput) -> Self {
        Self {
            label: label.to_string(),
            protocol: out.config.protocol.name,
            seed: out.config.seeds.placement,
            node_count: out.config.field.node_count,
            reports: out.reports.clone(),
        }
    }

    /// `<label>_<protocol>_<seed>.csv`
    pub fn file_name(&self) -> String {
        format!("{}_{}_{}.csv", self.label, self.protocol, self.seed)
    }

    /// First round that starts with fewer than all sensors alive.
    pub fn first_death_round(&self) -> Option<u64> {
        self.reports.iter().find(|r| r.alive < self.node_count).map(|r| r.round)
    }

    /// First round that starts with no sensor alive.
    pub fn last_death_round(&self) -> Option<u64> {
        self.reports.iter().find(|r| r.alive == 0).map(|r| r.round)
    }

    /// Delivered over generated readings for rounds in `window`; `None` when
    /// nothing was generated.
    pub fn pdf(&self, window: Range<u64>) -> Result<Option<f64>, MetricsError> {
        if window.is_empty() {
            return Err(MetricsError::EmptyWindow(window));
        }
        let (g, d) = self
            .reports
            .iter()
            .filter(|r| window.contains(&r.round))
            .fold((0u64, 0u64), |(g, d), r| (g + r.generated, d + r.delivered));
        Ok((g > 0).then(|| d as f64 / g as f64))
    }

    /// PDF over the rounds before the first sensor death (the whole run if
    /// none died).
    pub fn pdf_before_first_death(&self) -> Option<f64> {
        let end = self.first_death_round().unwrap_or(self.reports.len() as u64);
        self.pdf(0..end.max(1)).ok().flatten()
    }

    /// Report at `round`, clamped to the last report when the run ended
    /// earlier. `None` for an empty series.
    pub fn at(&self, round: u64) -> Option<Clamped<&RoundReport>> {
        let last = self.reports.last()?;
        match self.reports.iter().find(|r| r.round == round) {
            Some(r) => Some(Clamped { value: r, clamped: false }),
            None => Some(Clamped { value: last, clamped: true }),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), MetricsError> {
        let mut out = csv_writer(w);
        out.write_record(TIMESERIES_COLUMNS)?;
        for r in &self.reports {
            out.write_record([
                r.round.to_string(),
                r.alive.to_string(),
                sig9(r.mean_residual),
                r.generated.to_string(),
                r.delivered.to_string(),
                sig9(r.coverage_ratio),
                r.cluster_heads.len().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamped<T> {
    pub value: T,
    /// The requested round was past the end of the run.
    pub clamped: bool,
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub protocol: Protocol,
    pub seed: u64,
    pub rounds: u64,
    pub first_death_round: Option<u64>,
    pub last_death_round: Option<u64>,
    pub pdf: Option<f64>,
    pub pdf_before_first_death: Option<f64>,
    pub checkpoint_round: u64,
    pub alive_at_checkpoint: usize,
    pub mean_residual_at_checkpoint: f64,
    pub checkpoint_clamped: bool,
    pub violations: usize,
}

pub fn summarize(series: &TimeSeries, config: &ScenarioConfig, violations: usize) -> RunSummary {
    let checkpoint = config.checkpoint_round();
    let at = series.at(checkpoint);
    let rounds = series.reports.len() as u64;
    RunSummary {
        protocol: series.protocol,
        seed: series.seed,
        rounds,
        first_death_round: series.first_death_round(),
        last_death_round: series.last_death_round(),
        pdf: if rounds > 0 { series.pdf(0..rounds).ok().flatten() } else { None },
        pdf_before_first_death: series.pdf_before_first_death(),
        checkpoint_round: checkpoint,
        alive_at_checkpoint: at.map(|a| a.value.alive).unwrap_or(config.field.node_count),
        mean_residual_at_checkpoint: at.map(|a| a.value.mean_residual).unwrap_or(config.radio.initial_energy),
        checkpoint_clamped: at.is_none_or(|a| a.clamped),
        violations,
    }
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "none".to_string())
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_else(|| "none".to_string())
}

impl RunSummary {
    /// `name=value` lines prefixed with the protocol name.
    pub fn to_lines(&self) -> String {
        let p = self.protocol;
        [
            format!("{p}.seed={}", self.seed),
            format!("{p}.rounds={}", self.rounds),
            format!("{p}.first_death_round={}", opt_u64(self.first_death_round)),
            format!("{p}.last_death_round={}", opt_u64(self.last_death_round)),
            format!("{p}.pdf={}", opt_f64(self.pdf)),
            format!("{p}.pdf_before_first_death={}", opt_f64(self.pdf_before_first_death)),
            format!("{p}.checkpoint_round={}", self.checkpoint_round),
            format!("{p}.alive_at_checkpoint={}", self.alive_at_checkpoint),
            format!("{p}.mean_residual_at_checkpoint_J={}", sig9(self.mean_residual_at_checkpoint)),
            format!("{p}.checkpoint_clamped={}", self.checkpoint_clamped),
            format!("{p}.violations={}", self.violations),
        ]
        .join("\n")
            + "\n"
    }
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub knob_value: f64,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, min, max })
    }
}

/// Seed aggregate at one knob value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub knob_value: f64,
    pub seeds: usize,
    pub alive_at_checkpoint: Stat,
    pub mean_residual_at_checkpoint: Stat,
    /// Over the seeds where the window produced readings.
    pub pdf_before_first_death: Option<Stat>,
    /// Runs without a death count at their last round.
    pub first_death_round: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub knob_name: String,
    pub protocol: Protocol,
    pub points: Vec<SweepPoint>,
    pub runs: Vec<SweepRun>,
}

/// Runs every `(value, seed)` pair of `protocol` with `jobs` worker threads.
/// Results are ordered by value then seed regardless of `jobs`.
pub fn sweep(
    base: &ScenarioConfig,
    protocol: Protocol,
    knob: &str,
    values: &[f64],
    seeds: &[u64],
    jobs: usize,
) -> Result<SweepResult, MetricsError> {
    if values.is_empty() || seeds.is_empty() {
        return Err(MetricsError::EmptySweep);
    }
    let mut configs = Vec::new();
    for &v in values {
        let c = base.with_override(knob, &format!("{v:?}"))?.with_protocol(protocol);
        for &s in seeds {
            configs.push((v, c.clone().with_seed(s)));
        }
    }
    let runs = run_parallel(&configs, jobs, |(v, c)| {
        let out = run_scenario(c)?;
        let series = TimeSeries::from_run("sweep", &out);
        Ok(SweepRun { knob_value: *v, summary: summarize(&series, c, out.violations.len()) })
    })?;
    let points = values
        .iter()
        .enumerate()
        .map(|(i, &v)| aggregate(v, &runs[i * seeds.len()..(i + 1) * seeds.len()]))
        .collect();
    Ok(SweepResult { knob_name: knob.to_string(), protocol, points, runs })
}

fn aggregate(knob_value: f64, runs: &[SweepRun]) -> SweepPoint {
    let collect = |f: &dyn Fn(&RunSummary) -> Option<f64>| -> Vec<f64> { runs.iter().filter_map(|r| f(&r.summary)).collect() };
    SweepPoint {
        knob_value,
        seeds: runs.len(),
        alive_at_checkpoint: Stat::of(&collect(&|s| Some(s.alive_at_checkpoint as f64))).expect("non-empty"),
        mean_residual_at_checkpoint: Stat::of(&collect(&|s| Some(s.mean_residual_at_checkpoint))).expect("non-empty"),
        pdf_before_first_death: Stat::of(&collect(&|s| s.pdf_before_first_death)),
        first_death_round: Stat::of(&collect(&|s| Some(s.first_death_round.unwrap_or(s.rounds) as f64)))
            .expect("non-empty"),
    }
}

/// Maps `f` over `items` on a pool of `jobs` threads, keeping input order.
pub fn run_parallel<T, U, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<U>, MetricsError>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U, MetricsError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| MetricsError::Pool(e.to_string()))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

impl SweepResult {
    /// One row per knob value: seed means, minima and maxima.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), MetricsError> {
        let mut out = csv_writer(w);
        let mut header = vec![self.knob_name.clone(), "seeds".to_string()];
        for m in ["alive_at_checkpoint", "mean_residual_at_checkpoint_J", "pdf_before_first_death", "first_death_round"] {
            for s in ["mean", "min", "max"] {
                header.push(format!("{m}_{s}"));
            }
        }
        out.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![sig9(p.knob_value), p.seeds.to_string()];
            for stat in [Some(p.alive_at_checkpoint), Some(p.mean_residual_at_checkpoint), p.pdf_before_first_death, Some(p.first_death_round)]
            {
                match stat {
                    Some(s) => row.extend([sig9(s.mean), sig9(s.min), sig9(s.max)]),
                    None => row.extend(["none".to_string(), "none".to_string(), "none".to_string()]),
                }
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// One row per run.
    pub fn write_raw_csv<W: Write>(&self, w: W) -> Result<(), MetricsError> {
        let mut out = csv_writer(w);
        out.write_record([
            self.knob_name.as_str(),
            "seed",
            "rounds",
            "first_death_round",
            "alive_at_checkpoint",
            "mean_residual_at_checkpoint_J",
            "pdf_before_first_death",
            "pdf",
            "violations",
        ])?;
        for r in &self.runs {
            let s = &r.summary;
            out.write_record([
                sig9(r.knob_value),
                s.seed.to_string(),
                s.rounds.to_string(),
                opt_u64(s.first_death_round),
                s.alive_at_checkpoint.to_string(),
                sig9(s.mean_residual_at_checkpoint),
                opt_f64(s.pdf_before_first_death),
                opt_f64(s.pdf),
                s.violations.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
