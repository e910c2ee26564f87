//! Fixed experiment definitions: the discretisation table, the random-init
//! convergence table, the method comparison and the figure traces.
//!
//! Everything here is deterministic given the master seed. Wall-clock cost
//! is the one exception; it is reported as a ratio between methods measured
//! on the same replayed states.

use std::fmt;
use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::barrier;
use crate::constraints::{ConstraintLaw, FtBaselineParams};
use crate::dynamics::{ControlInput, ModelKind, State};
use crate::error::Result;
use crate::filter;
use crate::simulator::{run_batch, run_episode, EpisodeTrace, InitBox, Method, SimConfig};
use crate::trace_io::{self, TraceIoError};

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Fig1,
    Table1,
    Table2,
    Table3Compare,
    Custom,
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fig1" => Ok(ExperimentId::Fig1),
            "table1" => Ok(ExperimentId::Table1),
            "table2" => Ok(ExperimentId::Table2),
            "table3" | "table3compare" | "table3-compare" => Ok(ExperimentId::Table3Compare),
            "custom" => Ok(ExperimentId::Custom),
            other => Err(format!("unknown experiment `{other}`")),
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentId::Fig1 => "fig1",
            ExperimentId::Table1 => "table1",
            ExperimentId::Table2 => "table2",
            ExperimentId::Table3Compare => "table3",
            ExperimentId::Custom => "custom",
        })
    }
}

/// A rendered summary: header names and stringified rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl SummaryTable {
    pub fn write_file(&self, path: &Path) -> std::result::Result<(), TraceIoError> {
        let header: Vec<&str> = self.header.iter().map(String::as_str).collect();
        trace_io::write_table(&header, &self.rows, std::fs::File::create(path)?)
    }
}

fn opt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "none".to_owned(), |t| format!("{t:.6}"))
}

// ---------------------------------------------------------------------------
// Discretisation table

pub const TABLE1_PRESCRIBED_TIME: f64 = 10.0;
pub const TABLE1_STEPS: [f64; 2] = [1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub model: ModelKind,
    /// Convergence time for each entry of [`TABLE1_STEPS`].
    pub convergence: [Option<f64>; 2],
}

pub fn table1_config(model: ModelKind, dt: f64) -> SimConfig {
    SimConfig::new(model, Method::FixedTime, TABLE1_PRESCRIBED_TIME, dt, [0.0; 4])
}

pub fn table1() -> Result<Vec<Table1Row>> {
    ModelKind::ALL
        .into_iter()
        .map(|model| {
            let mut convergence = [None; 2];
            for (slot, dt) in convergence.iter_mut().zip(TABLE1_STEPS) {
                *slot = run_episode(&table1_config(model, dt))?.convergence_time();
            }
            Ok(Table1Row { model, convergence })
        })
        .collect()
}

pub fn table1_summary(rows: &[Table1Row]) -> SummaryTable {
    SummaryTable {
        header: vec!["model".into(), "convergence_time_dt_0.001".into(), "convergence_time_dt_0.0001".into()],
        rows: rows
            .iter()
            .map(|r| vec![r.model.to_string(), opt_time(r.convergence[0]), opt_time(r.convergence[1])])
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Random-init convergence table

pub const TABLE2_PRESCRIBED_TIME: f64 = 5.0;
pub const TABLE2_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table2Row {
    pub model: ModelKind,
    pub trials: usize,
    pub converged_by_t: usize,
    pub converged_by_1_5t: usize,
    pub failures: usize,
}

pub fn table2_config(model: ModelKind) -> SimConfig {
    SimConfig::new(model, Method::FixedTime, TABLE2_PRESCRIBED_TIME, TABLE2_DT, [0.0; 4])
        .with_horizon(1.5 * TABLE2_PRESCRIBED_TIME)
}

pub fn table2(seed: u64, trials: usize) -> Result<Vec<Table2Row>> {
    let t = TABLE2_PRESCRIBED_TIME;
    ModelKind::ALL
        .into_iter()
        .map(|model| {
            let report = run_batch(&table2_config(model), trials, seed, &InitBox::default())?;
            Ok(Table2Row {
                model,
                trials,
                converged_by_t: report.converged_by(t),
                converged_by_1_5t: report.converged_by(1.5 * t),
                failures: report.failures(),
            })
        })
        .collect()
}

pub fn table2_summary(rows: &[Table2Row]) -> SummaryTable {
    SummaryTable {
        header: ["model", "trials", "converged_by_5s", "converged_by_7.5s", "failed_episodes"].map(String::from).to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.model.to_string(),
                    r.trials.to_string(),
                    r.converged_by_t.to_string(),
                    r.converged_by_1_5t.to_string(),
                    r.failures.to_string(),
                ]
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Step cost

/// Mean wall-clock nanoseconds to evaluate the barrier, build the row and
/// filter, over `states`, repeated `repeats` times.
pub fn measure_step_cost(cfg: &SimConfig, law: &ConstraintLaw, states: &[State], repeats: usize) -> f64 {
    let geom = cfg.geom.as_ref();
    let start = Instant::now();
    for _ in 0..repeats {
        for s in states {
            let Ok(d) = barrier::evaluate(black_box(s), &cfg.barrier, geom) else { continue };
            let row = law.row(black_box(&d));
            let _ = black_box(filter::solve(&row, &ControlInput::zero()));
        }
    }
    let steps = (repeats * states.len()).max(1);
    start.elapsed().as_nanos() as f64 / steps as f64
}

/// States visited by `trace`, tagged with the model kind.
pub fn trace_states(trace: &EpisodeTrace, kind: ModelKind) -> Vec<State> {
    trace.rows.iter().map(|r| State { values: r.state, kind }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCost {
    pub proposed_ns: f64,
    pub baseline_ns: f64,
}

impl StepCost {
    pub fn ratio(&self) -> f64 {
        self.baseline_ns / self.proposed_ns
    }
}

/// Replays the proposed method's states under both laws. The two laws are
/// interleaved over `rounds` and the per-law minimum is kept.
pub fn compare_step_cost(cfg: &SimConfig, baseline: FtBaselineParams, rounds: usize) -> Result<StepCost> {
    let trace = run_episode(cfg)?;
    let states = trace_states(&trace, cfg.model);
    let proposed = trace.law;
    let baseline = ConstraintLaw::FtBaseline(baseline);
    let repeats = (200_000 / states.len().max(1)).max(1);
    let mut cost = StepCost { proposed_ns: f64::INFINITY, baseline_ns: f64::INFINITY };
    for _ in 0..rounds.max(1) {
        cost.proposed_ns = cost.proposed_ns.min(measure_step_cost(cfg, &proposed, &states, repeats));
        cost.baseline_ns = cost.baseline_ns.min(measure_step_cost(cfg, &baseline, &states, repeats));
    }
    Ok(cost)
}

// ---------------------------------------------------------------------------
// Method comparison table

pub const TABLE3_PRESCRIBED_TIME: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table3Summary {
    pub trials: usize,
    pub proposed_reached: usize,
    pub baseline_reached: usize,
    pub cost: StepCost,
    pub proposed_power_evals: usize,
    pub baseline_power_evals: usize,
    pub proposed_parameters: usize,
    pub baseline_parameters: usize,
}

impl Table3Summary {
    pub fn proposed_percent(&self) -> f64 {
        100.0 * self.proposed_reached as f64 / self.trials as f64
    }

    pub fn baseline_percent(&self) -> f64 {
        100.0 * self.baseline_reached as f64 / self.trials as f64
    }
}

pub fn table3_config(method: Method) -> SimConfig {
    let t = TABLE3_PRESCRIBED_TIME;
    SimConfig::new(ModelKind::PointMass, method, t, TABLE2_DT, [0.0; 4]).with_horizon(3.0 * t)
}

/// Point-mass goal-reaching rate within `3T` for both methods on the same
/// random initial states, plus the relative per-step cost.
pub fn table3(seed: u64, trials: usize, baseline: FtBaselineParams) -> Result<Table3Summary> {
    let horizon = 3.0 * TABLE3_PRESCRIBED_TIME;
    let proposed = run_batch(&table3_config(Method::FixedTime), trials, seed, &InitBox::default())?;
    let mut base_cfg = table3_config(Method::FtBaseline);
    base_cfg.baseline = baseline;
    let base = run_batch(&base_cfg, trials, seed, &InitBox::default())?;

    let cost_cfg = SimConfig::new(ModelKind::PointMass, Method::FixedTime, 10.0, 1e-3, [0.0, 0.0, -10.0, 0.0])
        .with_horizon(10.0);
    let cost = compare_step_cost(&cost_cfg, baseline, 5)?;

    Ok(Table3Summary {
        trials,
        proposed_reached: proposed.converged_by(horizon),
        baseline_reached: base.converged_by(horizon),
        cost,
        proposed_power_evals: 0,
        baseline_power_evals: ConstraintLaw::FtBaseline(baseline).power_evaluations_per_step(),
        proposed_parameters: 0,
        baseline_parameters: FtBaselineParams::USER_PARAMETERS,
    })
}

pub fn table3_summary(s: &Table3Summary) -> SummaryTable {
    let row = |metric: &str, existing: String, proposed: String| vec![metric.to_owned(), existing, proposed];
    SummaryTable {
        header: ["metric", "existing_method", "proposed_method"].map(String::from).to_vec(),
        rows: vec![
            row("percent_reaching_goal_within_3T", format!("{:.1}", s.baseline_percent()), format!("{:.1}", s.proposed_percent())),
            row("per_step_cost_ns", format!("{:.1}", s.cost.baseline_ns), format!("{:.1}", s.cost.proposed_ns)),
            row("per_step_cost_relative", format!("{:.3}", s.cost.ratio()), "1.000".into()),
            row("power_evaluations_per_step", s.baseline_power_evals.to_string(), s.proposed_power_evals.to_string()),
            row("parameters", s.baseline_parameters.to_string(), s.proposed_parameters.to_string()),
        ],
    }
}

// ---------------------------------------------------------------------------
// Two-method comparison from one initial state

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub prescribed_time: f64,
    pub proposed: EpisodeTrace,
    pub baseline: EpisodeTrace,
}

/// Slack on the prescribed time allowed before the proposed method counts as
/// late in a verdict.
pub const ON_TIME_TOLERANCE: f64 = 0.1;

impl Comparison {
    pub fn proposed_on_time(&self) -> bool {
        self.proposed.convergence_time().is_some_and(|t| t <= self.prescribed_time + ON_TIME_TOLERANCE)
    }

    pub fn baseline_converged(&self) -> bool {
        self.baseline.convergence.is_some()
    }

    /// Largest barrier value the baseline reached.
    pub fn baseline_peak_h(&self) -> f64 {
        self.baseline.h_values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn verdict(&self) -> String {
        let t = self.prescribed_time;
        let horizon = self.baseline.rows.last().map_or(0.0, |r| r.t);
        let proposed = match self.proposed.convergence_time() {
            Some(c) if self.proposed_on_time() => format!("proposed converged at {c:.4} s (within T + {ON_TIME_TOLERANCE} s)"),
            Some(c) => format!("proposed converged late at {c:.4} s"),
            None => "proposed did not converge".to_owned(),
        };
        let baseline = match self.baseline.convergence_time() {
            Some(c) => format!("baseline converged at {c:.4} s"),
            None => format!(
                "baseline did not converge within {horizon:.1} s ({:.1} T); peak h = {:.4}",
                horizon / t,
                self.baseline_peak_h()
            ),
        };
        format!("{proposed}; {baseline}")
    }
}

/// Runs the fixed-time and baseline laws from the same configuration.
pub fn compare(template: &SimConfig, baseline: FtBaselineParams) -> Result<Comparison> {
    let proposed = run_episode(&SimConfig { method: Method::FixedTime, ..*template })?;
    let base = run_episode(&SimConfig { method: Method::FtBaseline, baseline, ..*template })?;
    Ok(Comparison { prescribed_time: template.prescribed_time, proposed, baseline: base })
}

/// Default comparison: point mass from `(0, 0, -10, 0)`, `T = 10`, run to `5T`.
pub fn fig2_config() -> SimConfig {
    SimConfig::new(ModelKind::PointMass, Method::FixedTime, 10.0, 1e-3, [0.0, 0.0, -10.0, 0.0]).with_horizon(50.0)
}

// ---------------------------------------------------------------------------
// Figure traces

pub const FIG1_PRESCRIBED_TIME: f64 = 5.0;

pub type Fig1Error = Box<dyn std::error::Error>;

/// Initial state of each figure panel, read in the model's own ordering.
pub fn fig1_init(model: ModelKind) -> [f64; 4] {
    match model {
        ModelKind::PointMass => [0.0, 0.0, -10.0, 0.0],
        ModelKind::Unicycle | ModelKind::Bicycle => [0.0, 0.0, 0.0, -20.0],
    }
}

pub fn fig1_config(model: ModelKind, method: Method) -> SimConfig {
    let t = FIG1_PRESCRIBED_TIME;
    SimConfig::new(model, method, t, 1e-3, fig1_init(model)).with_horizon(3.0 * t)
}

/// Writes one trace per (model, method) to `out_dir` and returns the paths
/// with each episode's convergence time.
pub fn fig1(out_dir: &Path) -> std::result::Result<Vec<(PathBuf, Option<f64>)>, Fig1Error> {
    std::fs::create_dir_all(out_dir)?;
    let mut out = Vec::new();
    for model in ModelKind::ALL {
        for method in [Method::FixedTime, Method::FtBaseline] {
            let trace = run_episode(&fig1_config(model, method))?;
            let path = out_dir.join(format!("fig1_{model}_{method}.csv"));
            trace_io::write_trace_file(&trace, &path)?;
            out.push((path, trace.convergence_time()));
        }
    }
    Ok(out)
}
