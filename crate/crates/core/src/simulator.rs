//! Explicit-Euler episode runner and seeded batch runner.
//!
//! Each step evaluates the barrier, builds the row of the episode's
//! constraint law, filters the reference input and advances the state by
//! `x <- x + dt (f(x) + g(x) u)`. Fixed-time parameters are frozen from the
//! state at step 0 and the same row stays active after the safe set is
//! entered.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::barrier::{self, BarrierDerivatives, BarrierSpec};
use crate::constraints::{ConstraintLaw, ExpHocbfParams, FixedTimeParams, FtBaselineParams};
use crate::dynamics::{self, BicycleGeometry, ControlInput, ModelKind, State};
use crate::error::{Error, Result};
use crate::filter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    FixedTime,
    ExpHocbf,
    FtBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::FixedTime => "fixed-time",
            Method::ExpHocbf => "exp-hocbf",
            Method::FtBaseline => "ft-baseline",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fixed-time" => Ok(Method::FixedTime),
            "exp-hocbf" => Ok(Method::ExpHocbf),
            "ft-baseline" => Ok(Method::FtBaseline),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Reference controller fed to the safety filter.
pub type ReferenceFn = fn(f64, &State) -> ControlInput;

pub fn zero_reference(_t: f64, _state: &State) -> ControlInput {
    ControlInput::zero()
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub model: ModelKind,
    pub method: Method,
    pub dt: f64,
    /// Prescribed convergence time `T`.
    pub prescribed_time: f64,
    pub horizon: f64,
    pub init: State,
    pub barrier: BarrierSpec,
    pub geom: Option<BicycleGeometry>,
    pub exp: ExpHocbfParams,
    pub baseline: FtBaselineParams,
    pub reference: ReferenceFn,
    /// Any state component beyond this magnitude ends the episode as diverged.
    pub divergence_limit: f64,
}

impl SimConfig {
    /// Default goal disk, horizon `1.5 T`, zero reference and default gains.
    pub fn new(model: ModelKind, method: Method, prescribed_time: f64, dt: f64, init: [f64; 4]) -> Self {
        Self {
            model,
            method,
            dt,
            prescribed_time,
            horizon: 1.5 * prescribed_time,
            init: State::new(model, init),
            barrier: BarrierSpec::default(),
            geom: (model == ModelKind::Bicycle).then(BicycleGeometry::default),
            exp: ExpHocbfParams::default(),
            baseline: FtBaselineParams::default(),
            reference: zero_reference,
            divergence_limit: 1e9,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_init(mut self, init: [f64; 4]) -> Self {
        self.init = State::new(self.model, init);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.prescribed_time > 0.0 && self.prescribed_time.is_finite()) {
            return Err(Error::NonPositiveTime(self.prescribed_time));
        }
        if !(self.horizon >= self.prescribed_time) || !self.horizon.is_finite() {
            return bad(format!("horizon {} is shorter than T = {}", self.horizon, self.prescribed_time));
        }
        if self.init.kind != self.model {
            return bad(format!("initial state is a {} state but the model is {}", self.init.kind, self.model));
        }
        if self.init.values.iter().any(|v| !v.is_finite()) {
            return bad("initial state must be finite".into());
        }
        if self.model == ModelKind::Bicycle && self.geom.is_none() {
            return Err(Error::MissingGeometry);
        }
        Ok(())
    }

    /// Non-fatal configuration concerns.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.prescribed_time / self.dt < 100.0 {
            out.push(format!(
                "T/dt = {:.1} is below 100; discretisation error will dominate",
                self.prescribed_time / self.dt
            ));
        }
        out
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn derivatives(&self, state: &State) -> Result<BarrierDerivatives> {
        barrier::evaluate(state, &self.barrier, self.geom.as_ref())
    }

    /// Resolves the constraint law from the initial state.
    ///
    /// A fixed-time episode that already starts inside the safe set runs
    /// under the exponential law instead.
    pub fn initial_law(&self) -> Result<ConstraintLaw> {
        let d0 = self.derivatives(&self.init)?;
        Ok(match self.method {
            Method::FixedTime if d0.h >= 0.0 => ConstraintLaw::ExpHocbf(self.exp),
            Method::FixedTime => {
                ConstraintLaw::FixedTime(FixedTimeParams::init(d0.h, d0.h_dot, self.prescribed_time)?)
            }
            Method::ExpHocbf => ConstraintLaw::ExpHocbf(self.exp),
            Method::FtBaseline => ConstraintLaw::FtBaseline(self.baseline),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub state: Vector4<f64>,
    pub h: f64,
    pub h_dot: f64,
    pub u: Vector2<f64>,
    pub slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub time: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FailureKind {
    /// Zero input coefficient with a positive lower bound.
    Infeasible { bound: f64 },
    /// The state or the constraint row stopped being finite.
    Diverged,
}

/// Step at which the episode had to stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Failure {
    pub iteration: usize,
    pub time: f64,
    pub kind: FailureKind,
}

/// Outcome of an episode without the per-step rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    /// Law in force from step 0.
    pub law: ConstraintLaw,
    pub convergence: Option<Convergence>,
    pub failure: Option<Failure>,
    pub final_state: State,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub dt: f64,
    pub law: ConstraintLaw,
    pub rows: Vec<TraceRow>,
    pub convergence: Option<Convergence>,
    pub failure: Option<Failure>,
}

impl EpisodeTrace {
    pub fn convergence_time(&self) -> Option<f64> {
        self.convergence.map(|c| c.time)
    }

    pub fn h_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.h)
    }
}

/// First index with `h >= 0`, reported as `(index * dt, index)`.
pub fn detect_convergence<I: IntoIterator<Item = f64>>(h: I, dt: f64) -> Option<Convergence> {
    h.into_iter()
        .position(|h| h >= 0.0)
        .map(|iteration| Convergence { time: iteration as f64 * dt, iteration })
}

/// Runs an episode and hands every step to `observe`.
///
/// Filter infeasibility or numerical divergence ends the episode early and is
/// reported in the summary rather than as an error.
pub fn simulate_with<F: FnMut(&TraceRow)>(cfg: &SimConfig, mut observe: F) -> Result<EpisodeSummary> {
    cfg.validate()?;
    let law = cfg.initial_law()?;
    let steps = cfg.steps();
    let geom = cfg.geom.as_ref();

    let mut state = cfg.init;
    let mut convergence = None;
    let mut failure = None;

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let fail = |kind| Some(Failure { iteration: k, time: t, kind });
        let d = cfg.derivatives(&state)?;
        if convergence.is_none() && d.h >= 0.0 {
            convergence = Some(Convergence { time: t, iteration: k });
        }
        let row = law.row(&d);
        if !row.is_finite() || state.values.iter().any(|v| !(v.abs() <= cfg.divergence_limit)) {
            failure = fail(FailureKind::Diverged);
            break;
        }
        let u_ref = (cfg.reference)(t, &state);
        let filtered = match filter::solve(&row, &u_ref) {
            Ok(r) => r,
            Err(Error::Infeasible { bound }) => {
                failure = fail(FailureKind::Infeasible { bound });
                break;
            }
            Err(e) => return Err(e),
        };
        observe(&TraceRow { t, state: state.values, h: d.h, h_dot: d.h_dot, u: filtered.u.0, slack: filtered.slack });
        if k == steps {
            break;
        }
        let x_dot = dynamics::derivative(&state, &filtered.u, geom)?;
        state.values += x_dot * cfg.dt;
    }

    Ok(EpisodeSummary { law, convergence, failure, final_state: state, steps })
}

pub fn run_episode(cfg: &SimConfig) -> Result<EpisodeTrace> {
    let mut rows = Vec::with_capacity(cfg.steps() + 1);
    let summary = simulate_with(cfg, |r| rows.push(*r))?;
    Ok(EpisodeTrace {
        dt: cfg.dt,
        law: summary.law,
        rows,
        convergence: summary.convergence,
        failure: summary.failure,
    })
}

/// Axis-aligned box initial states are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitBox {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl Default for InitBox {
    /// `[0,20] x [0,20] x [-10,10] x [-10,10]`.
    fn default() -> Self {
        Self { lo: [0.0, 0.0, -10.0, -10.0], hi: [20.0, 20.0, 10.0, 10.0] }
    }
}

impl InitBox {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 4] {
        std::array::from_fn(|i| if self.hi[i] > self.lo[i] { rng.gen_range(self.lo[i]..self.hi[i]) } else { self.lo[i] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub init: [f64; 4],
    pub convergence: Option<Convergence>,
    pub failure: Option<Failure>,
}

impl TrialOutcome {
    /// Entry time into the safe set.
    ///
    /// Infeasible episodes never count as converged. A divergence after the
    /// entry does not undo it.
    pub fn converged_time(&self) -> Option<f64> {
        match self.failure {
            Some(Failure { kind: FailureKind::Infeasible { .. }, .. }) => None,
            _ => self.convergence.map(|c| c.time),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub master_seed: u64,
    pub outcomes: Vec<TrialOutcome>,
}

impl BatchReport {
    pub fn trials(&self) -> usize {
        self.outcomes.len()
    }

    /// Trials whose first entry into the safe set happened no later than `t`.
    pub fn converged_by(&self, t: f64) -> usize {
        let cutoff = t + 1e-9 * t.abs().max(1.0);
        self.outcomes.iter().filter(|o| o.converged_time().is_some_and(|c| c <= cutoff)).count()
    }

    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.failure.is_some()).count()
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        self.outcomes.iter().map(|o| o.seed)
    }
}

/// Per-trial seeds, drawn in order from a stream keyed by the master seed.
pub fn trial_seeds(master_seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..trials).map(|_| rng.gen()).collect()
}

/// Runs `trials` independent episodes from random initial states.
///
/// Trials execute in parallel; outcomes are returned in trial order.
pub fn run_batch(template: &SimConfig, trials: usize, master_seed: u64, init_box: &InitBox) -> Result<BatchReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("a batch needs at least one trial".into()));
    }
    template.validate()?;
    let outcomes = trial_seeds(master_seed, trials)
        .into_par_iter()
        .map(|seed| {
            let init = init_box.sample(&mut ChaCha8Rng::seed_from_u64(seed));
            let summary = simulate_with(&template.with_init(init), |_| {})?;
            Ok(TrialOutcome { seed, init, convergence: summary.convergence, failure: summary.failure })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchReport { master_seed, outcomes })
}
