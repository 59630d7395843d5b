//! Transport experiments: time for the sink to reach a target population,
//! grid searches for optimal pump/runoff rates, and two-parameter sweeps.
//!
//! Sweep cells are independent. [`run_sweep`] evaluates them in parallel and
//! always returns them in grid order; Hamiltonians shared between cells are
//! diagonalised once.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::ProjectedBasis;
use crate::error::{Error, Result};
use crate::evolution::{diagonalize, sink_observable, step_count, Propagator, StepScratch, Stepper};
use crate::model::{build_basis, ChainConfig, ChainModel, Dephasing, HamiltonianKey};

pub const DEFAULT_TARGET: f64 = 0.995;
pub const DEFAULT_T_MAX: f64 = 400.0;
pub const DEFAULT_DT: f64 = 0.01;

/// Full-state checks during long runs happen this often (in steps).
const CHECK_EVERY: usize = 1000;

/// Rates 0.1, 0.2, …, 4.0.
pub fn default_rate_grid() -> Vec<f64> {
    (1..=40).map(|i| i as f64 / 10.0).collect()
}

/// Dephasing strengths 0.0, 0.05, …, 2.0.
pub fn default_g_grid() -> Vec<f64> {
    (0..=40).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    RateIn,
    RateOut,
    K,
    Mu,
    G,
}

impl SweepParam {
    pub fn keyword(self) -> &'static str {
        match self {
            SweepParam::RateIn => "rate_in",
            SweepParam::RateOut => "rate_out",
            SweepParam::K => "k",
            SweepParam::Mu => "mu",
            SweepParam::G => "g",
        }
    }

    pub fn apply(self, config: &mut ChainConfig, value: f64) {
        match self {
            SweepParam::RateIn => config.rate_in = value,
            SweepParam::RateOut => config.rate_out = value,
            SweepParam::K => config.k = value,
            SweepParam::Mu => config.mu = value,
            SweepParam::G => config.g = value,
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rate_in" => Ok(SweepParam::RateIn),
            "rate_out" => Ok(SweepParam::RateOut),
            "k" => Ok(SweepParam::K),
            "mu" => Ok(SweepParam::Mu),
            "g" => Ok(SweepParam::G),
            _ => Err("expected one of rate_in|rate_out|k|mu|g".to_string()),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Result<Self> {
        let axis = Self { param, values };
        axis.validate()?;
        Ok(axis)
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Sweep(format!("{} axis has no values", self.param)));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Sweep(format!("{} axis has non-finite values", self.param)));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Sweep(format!("{} axis values must be strictly increasing", self.param)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Time for the sink population to reach `target`, capped at `t_max`.
    TimeToReach { target: f64, t_max: f64 },
    /// Sink population at time `t`.
    SinkAtTime { t: f64 },
}

impl Objective {
    fn validate(&self) -> Result<()> {
        match *self {
            Objective::TimeToReach { target, t_max } => {
                check_target(target)?;
                check_horizon(t_max)
            }
            Objective::SinkAtTime { t } => check_horizon(t),
        }
    }
}

fn check_target(target: f64) -> Result<()> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Sweep(format!("target must lie in (0, 1), got {target}")));
    }
    Ok(())
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Sweep(format!("time horizon must be finite and >= 0, got {t}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ChainConfig,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub objective: Objective,
    pub dt: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        if let Some(axis2) = &self.axis2 {
            axis2.validate()?;
            if axis2.param == self.axis1.param {
                return Err(Error::Sweep(format!("both axes sweep {}", axis2.param)));
            }
        }
        self.objective.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Sweep(format!("dt must be positive, got {}", self.dt)));
        }
        for (i, j) in self.cells() {
            self.cell_config(i, j).validate()?;
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.values.len(), self.axis2.as_ref().map_or(1, |a| a.values.len()))
    }

    /// Cells in grid order (axis1 outer, axis2 inner).
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let (rows, cols) = self.shape();
        (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect()
    }

    pub fn cell_config(&self, i: usize, j: usize) -> ChainConfig {
        let mut config = self.base.clone();
        self.axis1.param.apply(&mut config, self.axis1.values[i]);
        if let Some(axis2) = &self.axis2 {
            axis2.param.apply(&mut config, axis2.values[j]);
        }
        config
    }
}

/// Time-to-target outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reach {
    At(f64),
    Capped,
}

impl Reach {
    pub fn time(self) -> Option<f64> {
        match self {
            Reach::At(t) => Some(t),
            Reach::Capped => None,
        }
    }

    /// The time, or `cap` when not reached.
    pub fn or_cap(self, cap: f64) -> f64 {
        self.time().unwrap_or(cap)
    }

    pub fn is_capped(self) -> bool {
        matches!(self, Reach::Capped)
    }
}

/// Objective value of one cell plus the state checks seen while computing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOutcome {
    pub value: f64,
    pub capped: bool,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// `grid[i][j]`: objective at `(axis1[i], axis2[j])`; one column without axis2.
    pub grid: Vec<Vec<f64>>,
    pub cap_mask: Vec<Vec<bool>>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
}

impl SweepResult {
    /// Objective along axis1 for a fixed axis2 column.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.grid.iter().map(|row| row[j]).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.grid.iter().map(Vec::len).sum()
    }
}

/// Shared model pieces for repeated runs of one configuration family.
struct Engine {
    basis: Arc<ProjectedBasis>,
    propagators: HashMap<HamiltonianKey, Arc<Propagator>>,
}

impl Engine {
    fn new(configs: &[ChainConfig], dt: f64) -> Result<Self> {
        let first = configs.first().ok_or_else(|| Error::Sweep("no cells".into()))?;
        let basis = build_basis(first)?;
        let mut propagators = HashMap::new();
        for config in configs {
            if let Entry::Vacant(slot) = propagators.entry(config.hamiltonian_key()) {
                let model = ChainModel::on_basis(config, basis.clone())?;
                slot.insert(Arc::new(diagonalize(&model.hamiltonian, dt)?));
            }
        }
        Ok(Self { basis, propagators })
    }

    fn run(&self, config: &ChainConfig, objective: Objective) -> Result<CellOutcome> {
        let model = ChainModel::on_basis(config, self.basis.clone())?;
        let propagator = self.propagators[&config.hamiltonian_key()].clone();
        match objective {
            Objective::TimeToReach { target, t_max } => run_to_target(&model, propagator, target, t_max),
            Objective::SinkAtTime { t } => run_to_time(&model, propagator, t),
        }
    }
}

struct Monitor {
    max_trace_drift: f64,
    min_eigenvalue: f64,
}

impl Monitor {
    fn new() -> Self {
        Self { max_trace_drift: 0.0, min_eigenvalue: f64::INFINITY }
    }

    fn check(&mut self, rho: &crate::state::DensityMatrix) {
        let c = rho.check();
        self.max_trace_drift = self.max_trace_drift.max(c.trace_drift);
        self.min_eigenvalue = self.min_eigenvalue.min(c.min_eigenvalue);
    }

    fn outcome(self, value: f64, capped: bool) -> CellOutcome {
        CellOutcome { value, capped, max_trace_drift: self.max_trace_drift, min_eigenvalue: self.min_eigenvalue }
    }
}

fn run_to_target(model: &ChainModel, propagator: Arc<Propagator>, target: f64, t_max: f64) -> Result<CellOutcome> {
    check_target(target)?;
    let dt = propagator.dt();
    let steps = step_count(t_max, dt)?;
    let stepper = Stepper::new(propagator, &model.terms)?;
    let sink = sink_observable(&model.basis)?;
    let mut rho = model.initial_state()?;
    let mut scratch = StepScratch::new();
    let mut monitor = Monitor::new();
    let mut previous = sink.value(&rho);
    if previous >= target {
        monitor.check(&rho);
        return Ok(monitor.outcome(0.0, false));
    }
    for step in 1..=steps {
        stepper.step(&mut rho, &mut scratch);
        let current = sink.value(&rho);
        if step % CHECK_EVERY == 0 {
            monitor.check(&rho);
        }
        if current >= target {
            monitor.check(&rho);
            let fraction = (target - previous) / (current - previous);
            let t = (step - 1) as f64 * dt + fraction * dt;
            return Ok(monitor.outcome(t, false));
        }
        previous = current;
    }
    monitor.check(&rho);
    Ok(monitor.outcome(t_max, true))
}

fn run_to_time(model: &ChainModel, propagator: Arc<Propagator>, t: f64) -> Result<CellOutcome> {
    let steps = step_count(t, propagator.dt())?;
    let stepper = Stepper::new(propagator, &model.terms)?;
    let sink = sink_observable(&model.basis)?;
    let mut rho = model.initial_state()?;
    let mut scratch = StepScratch::new();
    let mut monitor = Monitor::new();
    for step in 1..=steps {
        stepper.step(&mut rho, &mut scratch);
        if step % CHECK_EVERY == 0 {
            monitor.check(&rho);
        }
    }
    monitor.check(&rho);
    Ok(monitor.outcome(sink.value(&rho), false))
}

/// Time at which the sink population first reaches `target`, linearly
/// interpolated between the bracketing steps.
pub fn time_to_reach(config: &ChainConfig, target: f64, t_max: f64, dt: f64) -> Result<Reach> {
    check_target(target)?;
    check_horizon(t_max)?;
    let engine = Engine::new(std::slice::from_ref(config), dt)?;
    let out = engine.run(config, Objective::TimeToReach { target, t_max })?;
    Ok(if out.capped { Reach::Capped } else { Reach::At(out.value) })
}

/// Sink population at time `t`.
pub fn sink_at_time(config: &ChainConfig, t: f64, dt: f64) -> Result<f64> {
    check_horizon(t)?;
    let engine = Engine::new(std::slice::from_ref(config), dt)?;
    Ok(engine.run(config, Objective::SinkAtTime { t })?.value)
}

/// Best rate found by [`optimal_rate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub rate: f64,
    pub reach: Reach,
}

/// Grid search over `candidates` for the pump or runoff rate minimising the
/// time to reach `target`. Ties go to the smaller rate; when every candidate
/// is capped the smallest candidate is returned with [`Reach::Capped`].
pub fn optimal_rate(
    base: &ChainConfig,
    which: SweepParam,
    candidates: &[f64],
    target: f64,
    t_max: f64,
    dt: f64,
) -> Result<Optimum> {
    if !matches!(which, SweepParam::RateIn | SweepParam::RateOut) {
        return Err(Error::Sweep(format!("optimal_rate searches rate_in or rate_out, not {which}")));
    }
    let spec = SweepSpec {
        base: base.clone(),
        axis1: Axis::new(which, candidates.to_vec())?,
        axis2: None,
        objective: Objective::TimeToReach { target, t_max },
        dt,
    };
    let result = run_sweep(&spec)?;
    Ok(best_of(&spec.axis1.values, &result.column(0), &result.cap_mask.iter().map(|r| r[0]).collect::<Vec<_>>()))
}

fn best_of(rates: &[f64], times: &[f64], capped: &[bool]) -> Optimum {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&t, &c)) in times.iter().zip(capped).enumerate() {
        if c {
            continue;
        }
        if best.is_none_or(|(_, bt)| t < bt) {
            best = Some((i, t));
        }
    }
    match best {
        Some((i, t)) => Optimum { rate: rates[i], reach: Reach::At(t) },
        None => Optimum { rate: rates[0], reach: Reach::Capped },
    }
}

/// Index of the smallest value; ties resolve to the lowest index.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v < values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// The minimum's index if it lies strictly inside the sequence.
pub fn interior_minimum(values: &[f64]) -> Option<usize> {
    argmin(values).filter(|&i| i > 0 && i + 1 < values.len())
}

/// Time-to-target over a pump × runoff grid.
pub fn bottleneck_scan(spec: &SweepSpec) -> Result<SweepResult> {
    if !matches!(spec.objective, Objective::TimeToReach { .. }) {
        return Err(Error::Sweep("bottleneck scan needs the time_to_reach objective".into()));
    }
    let params = axis_params(spec);
    if !params.iter().all(|p| matches!(p, SweepParam::RateIn | SweepParam::RateOut)) {
        return Err(Error::Sweep("bottleneck scan axes must be rate_in and/or rate_out".into()));
    }
    run_sweep(spec)
}

/// Sink population at a fixed time over a runoff × dephasing grid.
pub fn dat_scan(spec: &SweepSpec) -> Result<SweepResult> {
    if !matches!(spec.objective, Objective::SinkAtTime { .. }) {
        return Err(Error::Sweep("dephasing scan needs the sink_at_time objective".into()));
    }
    let params = axis_params(spec);
    if !params.iter().all(|p| matches!(p, SweepParam::RateOut | SweepParam::G)) {
        return Err(Error::Sweep("dephasing scan axes must be rate_out and/or g".into()));
    }
    let g_positive = [Some(&spec.axis1), spec.axis2.as_ref()]
        .into_iter()
        .flatten()
        .any(|a| a.param == SweepParam::G && a.values.iter().any(|&g| g > 0.0));
    if spec.base.dephasing == Dephasing::None && g_positive {
        return Err(Error::Sweep("dephasing scan over g needs dephasing = lindblad or unitary".into()));
    }
    run_sweep(spec)
}

fn axis_params(spec: &SweepSpec) -> Vec<SweepParam> {
    std::iter::once(spec.axis1.param).chain(spec.axis2.as_ref().map(|a| a.param)).collect()
}

/// Evaluates every cell of `spec` in parallel.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let cells = spec.cells();
    let (engine, configs) = prepare(spec, &cells)?;
    let outcomes: Vec<CellOutcome> = configs
        .par_iter()
        .map(|config| engine.run(config, spec.objective))
        .collect::<Result<_>>()?;
    Ok(assemble(spec, &cells, outcomes))
}

/// Evaluates cells one at a time in the order given by `order` (a
/// permutation of cell indices). The result does not depend on the order.
pub fn run_sweep_in_order(spec: &SweepSpec, order: &[usize]) -> Result<SweepResult> {
    spec.validate()?;
    let cells = spec.cells();
    let mut seen = vec![false; cells.len()];
    if order.len() != cells.len() || order.iter().any(|&i| i >= cells.len() || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::Sweep("execution order must be a permutation of the cells".into()));
    }
    let (engine, configs) = prepare(spec, &cells)?;
    let mut outcomes: Vec<Option<CellOutcome>> = vec![None; cells.len()];
    for &i in order {
        outcomes[i] = Some(engine.run(&configs[i], spec.objective)?);
    }
    Ok(assemble(spec, &cells, outcomes.into_iter().map(Option::unwrap).collect()))
}

fn prepare(spec: &SweepSpec, cells: &[(usize, usize)]) -> Result<(Engine, Vec<ChainConfig>)> {
    let configs: Vec<ChainConfig> = cells.iter().map(|&(i, j)| spec.cell_config(i, j)).collect();
    let engine = Engine::new(&configs, spec.dt)?;
    Ok((engine, configs))
}

fn assemble(spec: &SweepSpec, cells: &[(usize, usize)], outcomes: Vec<CellOutcome>) -> SweepResult {
    let (rows, cols) = spec.shape();
    let mut grid = vec![vec![0.0; cols]; rows];
    let mut cap_mask = vec![vec![false; cols]; rows];
    let mut max_trace_drift = 0.0f64;
    let mut min_eigenvalue = f64::INFINITY;
    for (&(i, j), out) in cells.iter().zip(outcomes) {
        grid[i][j] = out.value;
        cap_mask[i][j] = out.capped;
        max_trace_drift = max_trace_drift.max(out.max_trace_drift);
        min_eigenvalue = min_eigenvalue.min(out.min_eigenvalue);
    }
    SweepResult { spec: spec.clone(), grid, cap_mask, max_trace_drift, min_eigenvalue }
}

/// Per-runoff-rate comparison of a dephasing scan against its `g = 0` column.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingGain {
    pub rate_out: f64,
    pub sink_without: f64,
    pub best_g: f64,
    pub sink_best: f64,
}

impl DephasingGain {
    pub fn gain(&self) -> f64 {
        self.sink_best - self.sink_without
    }
}

/// For a `rate_out × g` sink-at-time result whose g axis starts at 0: the
/// runoff rate that is best without dephasing, and the per-row gains.
pub fn dephasing_gains(result: &SweepResult) -> Result<(f64, Vec<DephasingGain>)> {
    let spec = &result.spec;
    let (outs, gs) = match (&spec.axis1, &spec.axis2) {
        (a, Some(b)) if a.param == SweepParam::RateOut && b.param == SweepParam::G => (&a.values, &b.values),
        _ => return Err(Error::Sweep("expected rate_out x g axes".into())),
    };
    if gs[0] != 0.0 {
        return Err(Error::Sweep("g axis must start at 0".into()));
    }
    let without = result.column(0);
    let best_out = outs[argmax(&without).expect("non-empty axis")];
    let gains = outs
        .iter()
        .zip(&result.grid)
        .map(|(&rate_out, row)| {
            let j = argmax(row).expect("non-empty axis");
            DephasingGain { rate_out, sink_without: row[0], best_g: gs[j], sink_best: row[j] }
        })
        .collect();
    Ok((best_out, gains))
}
