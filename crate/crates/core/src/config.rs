//! Flat `key=value` run configuration.
//!
//! One or more `key=value` pairs per line, `#` starts a comment. Spaces
//! around `=` are allowed. Every key may appear at most once.
//!
//! ```text
//! n_atoms = 2
//! k = 1.0
//! mu = 1.0
//! rate_in = 1.5   # pump
//! rate_out = 1.5
//! ```
//!
//! When `max_quanta` and `initial_state` are absent they follow `rate_in`: a
//! pumped chain starts in the vacuum with a saturated window, an unpumped
//! one starts with a photon in the first cavity and at most one quantum.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::basis::QuantaWindow;
use crate::error::{Error, Result};
use crate::experiments::{Axis, Objective, SweepParam, SweepSpec, DEFAULT_DT, DEFAULT_TARGET, DEFAULT_T_MAX};
use crate::model::{ChainConfig, Dephasing, DephasingTarget, InitialState, SinkCoupling};

pub const DEFAULT_SAMPLE_EVERY: usize = 100;
pub const DEFAULT_PHONON_CAP: usize = 1;

/// Largest axis a `start:stop:step` range may expand to.
const MAX_RANGE_LEN: usize = 100_000;

const KEYS: &[&str] = &[
    "n_atoms",
    "k",
    "mu",
    "g",
    "omega_a",
    "omega_p",
    "omega_g",
    "rate_in",
    "rate_out",
    "dephasing",
    "sink_coupling",
    "dephasing_target",
    "cavity_loss",
    "min_quanta",
    "max_quanta",
    "phonon_cap",
    "initial_state",
    "axis1_param",
    "axis1_values",
    "axis2_param",
    "axis2_values",
    "objective",
    "objective_time",
    "dt",
    "t_max",
    "target",
    "sample_every",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    TimeToReach,
    SinkAtTime,
}

impl ObjectiveKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ObjectiveKind::TimeToReach => "time_to_reach",
            ObjectiveKind::SinkAtTime => "sink_at_time",
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "time_to_reach" => Ok(ObjectiveKind::TimeToReach),
            "sink_at_time" => Ok(ObjectiveKind::SinkAtTime),
            _ => Err(format!("expected time_to_reach or sink_at_time, got {s:?}")),
        }
    }
}

/// Everything a CLI run needs: the chain plus stepping and sweep settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chain: ChainConfig,
    pub axis1: Option<Axis>,
    pub axis2: Option<Axis>,
    pub objective: ObjectiveKind,
    /// Evaluation time for `sink_at_time`; `t_max` when unset.
    pub objective_time: Option<f64>,
    pub dt: f64,
    pub t_max: f64,
    pub target: f64,
    pub sample_every: usize,
}

impl RunConfig {
    pub fn new(chain: ChainConfig) -> Self {
        Self {
            chain,
            axis1: None,
            axis2: None,
            objective: ObjectiveKind::TimeToReach,
            objective_time: None,
            dt: DEFAULT_DT,
            t_max: DEFAULT_T_MAX,
            target: DEFAULT_TARGET,
            sample_every: DEFAULT_SAMPLE_EVERY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("dt", "must be > 0"));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::config("t_max", "must be >= 0"));
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return Err(Error::config("target", "must lie in (0, 1)"));
        }
        if self.sample_every == 0 {
            return Err(Error::config("sample_every", "must be >= 1"));
        }
        if let Some(t) = self.objective_time {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::config("objective_time", "must be >= 0"));
            }
        }
        if self.axis2.is_some() && self.axis1.is_none() {
            return Err(Error::config("axis2_param", "axis2 needs axis1"));
        }
        if let (Some(a), Some(b)) = (&self.axis1, &self.axis2) {
            if a.param == b.param {
                return Err(Error::config("axis2_param", "must differ from axis1_param"));
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        self.chain.warnings()
    }

    pub fn objective(&self) -> Objective {
        match self.objective {
            ObjectiveKind::TimeToReach => Objective::TimeToReach { target: self.target, t_max: self.t_max },
            ObjectiveKind::SinkAtTime => Objective::SinkAtTime { t: self.objective_time.unwrap_or(self.t_max) },
        }
    }

    /// Sweep over the configured axes, or over `default_axes` when axis1 is
    /// not set.
    pub fn sweep_spec(&self, default_axes: Option<(Axis, Option<Axis>)>, objective: Objective) -> Result<SweepSpec> {
        let (axis1, axis2) = match (&self.axis1, default_axes) {
            (Some(a), _) => (a.clone(), self.axis2.clone()),
            (None, Some(d)) => d,
            (None, None) => return Err(Error::config("axis1_param", "sweep needs axis1_param and axis1_values")),
        };
        let spec = SweepSpec { base: self.chain.clone(), axis1, axis2, objective, dt: self.dt };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses configuration text. `n_atoms` is required; everything else has a
/// default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let pairs = collect_pairs(text)?;
    let get = |key: &str| pairs.get(key).map(String::as_str);

    let n_atoms = match get("n_atoms") {
        Some(v) => parse_int("n_atoms", v)?,
        None => return Err(Error::config("n_atoms", "required")),
    };
    let mut chain = ChainConfig::new(n_atoms);
    let reals: [(&str, &mut f64); 9] = [
        ("k", &mut chain.k),
        ("mu", &mut chain.mu),
        ("g", &mut chain.g),
        ("omega_a", &mut chain.omega_a),
        ("omega_p", &mut chain.omega_p),
        ("omega_g", &mut chain.omega_g),
        ("rate_in", &mut chain.rate_in),
        ("rate_out", &mut chain.rate_out),
        ("cavity_loss", &mut chain.cavity_loss),
    ];
    for (key, slot) in reals {
        if let Some(v) = get(key) {
            *slot = parse_real(key, v)?;
        }
    }
    if let Some(v) = get("dephasing") {
        chain.dephasing = parse_keyword::<Dephasing>("dephasing", v)?;
    }
    if let Some(v) = get("sink_coupling") {
        chain.sink_coupling = parse_keyword::<SinkCoupling>("sink_coupling", v)?;
    }
    if let Some(v) = get("dephasing_target") {
        chain.dephasing_target = parse_keyword::<DephasingTarget>("dephasing_target", v)?;
    }

    let pumped = chain.rate_in > 0.0;
    chain.initial_state = match get("initial_state") {
        Some(v) => parse_keyword::<InitialState>("initial_state", v)?,
        None if pumped => InitialState::Vacuum,
        None => InitialState::PhotonInFirstCavity,
    };
    let max_quanta = match get("max_quanta") {
        Some(v) => parse_int("max_quanta", v)?,
        None if pumped => chain.saturated_quanta(),
        None => 1,
    };
    let min_quanta = get("min_quanta").map(|v| parse_int("min_quanta", v)).transpose()?.unwrap_or(0);
    let phonon_cap = get("phonon_cap").map(|v| parse_int("phonon_cap", v)).transpose()?.unwrap_or(DEFAULT_PHONON_CAP);
    if max_quanta < min_quanta {
        return Err(Error::config("max_quanta", format!("must be >= min_quanta = {min_quanta}")));
    }
    chain.window = QuantaWindow { min_quanta, max_quanta, phonon_cap };

    let mut run = RunConfig::new(chain);
    run.axis1 = parse_axis(&pairs, "axis1")?;
    run.axis2 = parse_axis(&pairs, "axis2")?;
    if let Some(v) = get("objective") {
        run.objective = parse_keyword::<ObjectiveKind>("objective", v)?;
    }
    if let Some(v) = get("objective_time") {
        run.objective_time = Some(parse_real("objective_time", v)?);
    }
    if let Some(v) = get("dt") {
        run.dt = parse_real("dt", v)?;
    }
    if let Some(v) = get("t_max") {
        run.t_max = parse_real("t_max", v)?;
    }
    if let Some(v) = get("target") {
        run.target = parse_real("target", v)?;
    }
    if let Some(v) = get("sample_every") {
        run.sample_every = parse_int("sample_every", v)?;
    }
    run.validate()?;
    Ok(run)
}

/// Writes every key explicitly, so that `parse_config(serialize(c)) == c`.
pub fn serialize(run: &RunConfig) -> String {
    let c = &run.chain;
    let mut out = String::new();
    let mut put = |key: &str, value: &dyn std::fmt::Display| {
        let _ = writeln!(out, "{key} = {value}");
    };
    put("n_atoms", &c.n_atoms);
    put("k", &c.k);
    put("mu", &c.mu);
    put("g", &c.g);
    put("omega_a", &c.omega_a);
    put("omega_p", &c.omega_p);
    put("omega_g", &c.omega_g);
    put("rate_in", &c.rate_in);
    put("rate_out", &c.rate_out);
    put("dephasing", &c.dephasing);
    put("sink_coupling", &c.sink_coupling);
    put("dephasing_target", &c.dephasing_target);
    put("cavity_loss", &c.cavity_loss);
    put("min_quanta", &c.window.min_quanta);
    put("max_quanta", &c.window.max_quanta);
    put("phonon_cap", &c.window.phonon_cap);
    put("initial_state", &c.initial_state);
    for (name, axis) in [("axis1", &run.axis1), ("axis2", &run.axis2)] {
        if let Some(axis) = axis {
            put(&format!("{name}_param"), &axis.param);
            let values: Vec<String> = axis.values.iter().map(f64::to_string).collect();
            put(&format!("{name}_values"), &values.join(","));
        }
    }
    put("objective", &run.objective.keyword());
    if let Some(t) = run.objective_time {
        put("objective_time", &t);
    }
    put("dt", &run.dt);
    put("t_max", &run.t_max);
    put("target", &run.target);
    put("sample_every", &run.sample_every);
    out
}

/// Parses an axis value list: comma-separated numbers, or `start:stop:step`
/// (both ends included).
pub fn parse_axis_values(text: &str) -> std::result::Result<Vec<f64>, String> {
    let text = text.trim();
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => text.split(',').map(|t| parse_finite(t.trim())).collect(),
        3 => {
            let [start, stop, step] = [parts[0], parts[1], parts[2]].map(|t| parse_finite(t.trim()));
            expand_range(start?, stop?, step?)
        }
        _ => Err(format!("expected a comma list or start:stop:step, got {text:?}")),
    }
}

fn expand_range(start: f64, stop: f64, step: f64) -> std::result::Result<Vec<f64>, String> {
    if step <= 0.0 || stop < start {
        return Err(format!("range {start}:{stop}:{step} needs step > 0 and stop >= start"));
    }
    let span = (stop - start) / step;
    // tolerate stop landing a hair off the grid
    let n = (span + 1e-9).floor();
    if !n.is_finite() || n >= MAX_RANGE_LEN as f64 {
        return Err(format!("range {start}:{stop}:{step} is too long"));
    }
    Ok((0..=n as usize).map(|i| round12(start + i as f64 * step)).collect())
}

/// Strips accumulated float error so `0:1:0.1` yields exactly `0.3`, not
/// `0.30000000000000004`.
fn round12(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let digits = 11 - x.abs().log10().floor() as i32;
    if !(0..=300).contains(&digits) {
        return x;
    }
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}

fn parse_finite(t: &str) -> std::result::Result<f64, String> {
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("{t:?} is not finite")),
        Err(_) => Err(format!("{t:?} is not a number")),
    }
}

fn parse_axis(pairs: &BTreeMap<String, String>, name: &str) -> Result<Option<Axis>> {
    let param_key = format!("{name}_param");
    let values_key = format!("{name}_values");
    match (pairs.get(&param_key), pairs.get(&values_key)) {
        (None, None) => Ok(None),
        (Some(_), None) => Err(Error::config(&values_key, format!("required with {param_key}"))),
        (None, Some(_)) => Err(Error::config(&param_key, format!("required with {values_key}"))),
        (Some(p), Some(v)) => {
            let param = parse_keyword::<SweepParam>(&param_key, p)?;
            let values = parse_axis_values(v).map_err(|e| Error::config(&values_key, e))?;
            Axis::new(param, values).map(Some).map_err(|e| Error::config(&values_key, e.to_string()))
        }
    }
}

fn collect_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("");
        for token in join_equals(content).split_whitespace() {
            let Some((key, value)) = token.split_once('=') else {
                return Err(Error::Syntax { line, reason: format!("expected key=value, got {token:?}") });
            };
            if key.is_empty() || value.is_empty() {
                return Err(Error::Syntax { line, reason: format!("expected key=value, got {token:?}") });
            }
            if !KEYS.contains(&key) {
                return Err(Error::config(key, "unknown key"));
            }
            if pairs.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::config(key, format!("given twice (line {line})")));
            }
        }
    }
    Ok(pairs)
}

/// Removes whitespace around `=` so `k = 1` becomes `k=1`.
fn join_equals(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '=' {
            while out.ends_with(char::is_whitespace) {
                out.pop();
            }
            out.push('=');
            while chars.peek().is_some_and(|c| c.is_whitespace()) {
                chars.next();
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn parse_real(key: &str, v: &str) -> Result<f64> {
    parse_finite(v).map_err(|e| Error::config(key, e))
}

fn parse_int(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| Error::config(key, format!("expected a non-negative integer, got {v:?}")))
}

fn parse_keyword<T: FromStr<Err = String>>(key: &str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|e| Error::config(key, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(err: Error) -> String {
        match err {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_config_needs_n_atoms() {
        assert_eq!(key_of(parse_config("").unwrap_err()), "n_atoms");
        assert_eq!(key_of(parse_config("# nothing\n\n").unwrap_err()), "n_atoms");
    }

    #[test]
    fn single_line_setup() {
        let run = parse_config("n_atoms=2 k=1.0 mu=1.0 rate_in=1.5 rate_out=1.5").unwrap();
        let c = &run.chain;
        assert_eq!((c.n_atoms, c.k, c.mu, c.rate_in, c.rate_out), (2, 1.0, 1.0, 1.5, 1.5));
        assert_eq!((c.omega_a, c.omega_p, c.omega_g), (0.1, 0.1, 0.01));
        assert_eq!(c.initial_state, InitialState::Vacuum);
        assert_eq!(c.window.max_quanta, 5);
        assert_eq!((run.dt, run.t_max, run.target), (0.01, 400.0, 0.995));
        assert!(run.warnings().is_empty());
    }

    #[test]
    fn unpumped_defaults() {
        let run = parse_config("n_atoms = 2\nk = 0.8\n").unwrap();
        assert_eq!(run.chain.initial_state, InitialState::PhotonInFirstCavity);
        assert_eq!(run.chain.window.max_quanta, 1);
    }

    #[test]
    fn unitary_without_g_warns() {
        let run = parse_config("n_atoms=2\ndephasing=unitary").unwrap();
        assert_eq!(run.chain.g, 0.0);
        assert_eq!(run.chain.dephasing, Dephasing::UnitaryPhonon);
        assert_eq!(run.warnings().len(), 1);
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(parse_config("n_atoms=2 speed=3").unwrap_err()), "speed");
        assert_eq!(key_of(parse_config("n_atoms=2 k=fast").unwrap_err()), "k");
        assert_eq!(key_of(parse_config("n_atoms=2 k=inf").unwrap_err()), "k");
        assert_eq!(key_of(parse_config("n_atoms=2 rate_out=-1").unwrap_err()), "rate_out");
        assert_eq!(key_of(parse_config("n_atoms=0").unwrap_err()), "n_atoms");
        assert_eq!(key_of(parse_config("n_atoms=2.5").unwrap_err()), "n_atoms");
        assert_eq!(key_of(parse_config("n_atoms=2 dephasing=strong").unwrap_err()), "dephasing");
        assert_eq!(key_of(parse_config("n_atoms=2 k=1 k=2").unwrap_err()), "k");
        assert_eq!(key_of(parse_config("n_atoms=2 axis1_param=rate_out").unwrap_err()), "axis1_values");
        assert_eq!(key_of(parse_config("n_atoms=2 axis1_param=omega_a axis1_values=1").unwrap_err()), "axis1_param");
        assert_eq!(key_of(parse_config("n_atoms=2 axis1_param=g axis1_values=2,1").unwrap_err()), "axis1_values");
        assert_eq!(key_of(parse_config("n_atoms=2 target=1").unwrap_err()), "target");
        assert_eq!(key_of(parse_config("n_atoms=2 max_quanta=0").unwrap_err()), "max_quanta");
    }

    #[test]
    fn syntax_errors_carry_line() {
        assert!(matches!(parse_config("n_atoms=2\nk 1").unwrap_err(), Error::Syntax { line: 2, .. }));
        assert!(matches!(parse_config("n_atoms=2\n=1").unwrap_err(), Error::Syntax { line: 2, .. }));
    }

    #[test]
    fn axis_values() {
        assert_eq!(parse_axis_values("0.5, 1, 1.5").unwrap(), vec![0.5, 1.0, 1.5]);
        assert_eq!(parse_axis_values("0:0.3:0.1").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert_eq!(parse_axis_values("0.1:4:0.1").unwrap(), crate::experiments::default_rate_grid());
        assert_eq!(parse_axis_values("0:2:0.05").unwrap(), crate::experiments::default_g_grid());
        assert!(parse_axis_values("1:0:0.1").is_err());
        assert!(parse_axis_values("0:1:0").is_err());
        assert!(parse_axis_values("0:1e9:1e-9").is_err());
        assert!(parse_axis_values("1,,2").is_err());
        assert!(parse_axis_values("1:2").is_err());
    }

    #[test]
    fn sweep_keys() {
        let text = "n_atoms=2 dephasing=lindblad\naxis1_param=rate_out axis1_values=0.5,1\naxis2_param=g axis2_values=0:0.1:0.05\nobjective=sink_at_time objective_time=150";
        let run = parse_config(text).unwrap();
        let spec = run.sweep_spec(None, run.objective()).unwrap();
        assert_eq!(spec.shape(), (2, 3));
        assert_eq!(spec.objective, Objective::SinkAtTime { t: 150.0 });
    }

    #[test]
    fn serialize_round_trips() {
        let text = "n_atoms=3 k=0.8 mu=0.2 g=0.35 dephasing=unitary phonon_cap=2 rate_out=1.3 cavity_loss=1e-7\naxis1_param=rate_out axis1_values=0.1:1:0.1 objective=sink_at_time objective_time=60 dt=0.02";
        let run = parse_config(text).unwrap();
        let again = parse_config(&serialize(&run)).unwrap();
        assert_eq!(run, again);
        assert_eq!(serialize(&run), serialize(&again));
    }
}
