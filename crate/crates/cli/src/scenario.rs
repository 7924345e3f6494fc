//! Scenario files.
//!
//! A scenario is a TOML document that describes a problem through analytic
//! initializers instead of nodal values, so one file describes the same
//! continuous problem on every mesh:
//!
//! ```toml
//! [grid]
//! dimension = 1
//! n = 63
//! extent = 1.0
//!
//! [time]
//! horizon = 8.0
//! steps = 512
//!
//! [init]
//! y0 = "sine-mode 1"
//!
//! [cost]
//! gamma = 1.0
//! ```
//!
//! Initializers follow the grammar
//!
//! ```text
//! [a *] zero | constant c | sine-mode k [k2] | gaussian-bump c [c2] w
//!     | decaying-exp r sine-mode k [k2] | uncontrolled-state
//! ```
//!
//! where `uncontrolled-state` is only accepted for `init.yd` and stands for the
//! state of the same scenario with `u = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use bwave_core::state::solve_forward;
use bwave_core::{OptimizerConfig, ProblemFamily, ScalarField, SpaceTimeField, SpatialGrid, TimeGrid, WaveProblem};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Either one value for every axis or one value per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAxis<T> {
    Uniform(T),
    Axes([T; 2]),
}

impl<T: Copy> PerAxis<T> {
    pub fn axes(&self) -> [T; 2] {
        match *self {
            Self::Uniform(v) => [v, v],
            Self::Axes(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Zero,
    Constant(f64),
    SineMode(Vec<u32>),
    GaussianBump { center: Vec<f64>, width: f64 },
    DecayingExp { rate: f64, modes: Vec<u32> },
    UncontrolledState,
}

/// `amplitude * shape`, a function of `(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Initializer {
    pub amplitude: f64,
    pub shape: Shape,
}

impl Initializer {
    pub fn new(shape: Shape) -> Self {
        Self {
            amplitude: 1.0,
            shape,
        }
    }

    pub fn zero() -> Self {
        Self::new(Shape::Zero)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Shape::Constant(c))
    }

    pub fn scaled(self, amplitude: f64) -> Self {
        Self {
            amplitude: amplitude * self.amplitude,
            ..self
        }
    }

    /// Value when the initializer does not depend on `(t, x)`.
    pub fn constant_value(&self) -> Option<f64> {
        match self.shape {
            Shape::Zero => Some(0.0),
            Shape::Constant(c) => Some(self.amplitude * c),
            _ => None,
        }
    }

    pub fn eval(&self, g: &SpatialGrid, t: f64, x: [f64; 2]) -> f64 {
        let v = match &self.shape {
            Shape::Zero | Shape::UncontrolledState => 0.0,
            Shape::Constant(c) => *c,
            Shape::SineMode(k) => sine(g, k, x),
            Shape::GaussianBump { center, width } => {
                let r2: f64 = (0..g.dimension())
                    .map(|a| {
                        let c = center.get(a).copied().unwrap_or(center[0]);
                        (x[a] - c).powi(2)
                    })
                    .sum();
                (-r2 / (2.0 * width * width)).exp()
            }
            Shape::DecayingExp { rate, modes } => (-rate * t).exp() * sine(g, modes, x),
        };
        self.amplitude * v
    }

    pub fn on(&self, g: &SpatialGrid, tg: &TimeGrid) -> SpaceTimeField {
        SpaceTimeField::from_fn(g, tg, |t, x| self.eval(g, t, x))
    }

    pub fn at_start(&self, g: &SpatialGrid) -> ScalarField {
        ScalarField::from_fn(g, |x| self.eval(g, 0.0, x))
    }

    fn check(&self, dimension: usize, field: &str) -> Result<(), String> {
        let bad = |msg: String| Err(format!("init field '{field}': {msg}"));
        match &self.shape {
            Shape::SineMode(k) | Shape::DecayingExp { modes: k, .. } if k.len() > dimension => {
                bad(format!("{} mode numbers for a {dimension}D grid", k.len()))
            }
            Shape::GaussianBump { center, .. } if center.len() != dimension => {
                bad(format!("{} centre coordinates for a {dimension}D grid", center.len()))
            }
            Shape::UncontrolledState if field != "yd" => {
                bad("uncontrolled-state is only allowed for yd".into())
            }
            _ => Ok(()),
        }
    }
}

fn sine(g: &SpatialGrid, k: &[u32], x: [f64; 2]) -> f64 {
    (0..g.dimension())
        .map(|a| {
            let ka = k.get(a).copied().unwrap_or(k[0]) as f64;
            (ka * PI * x[a] / g.extent(a)).sin()
        })
        .product()
}

fn fmt_num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e16) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn join_modes(k: &[u32]) -> String {
    k.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for Initializer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.amplitude != 1.0 {
            write!(f, "{} * ", fmt_num(self.amplitude))?;
        }
        match &self.shape {
            Shape::Zero => write!(f, "zero"),
            Shape::Constant(c) => write!(f, "constant {}", fmt_num(*c)),
            Shape::SineMode(k) => write!(f, "sine-mode {}", join_modes(k)),
            Shape::GaussianBump { center, width } => {
                write!(f, "gaussian-bump")?;
                for c in center {
                    write!(f, " {}", fmt_num(*c))?;
                }
                write!(f, " {}", fmt_num(*width))
            }
            Shape::DecayingExp { rate, modes } => {
                write!(f, "decaying-exp {} sine-mode {}", fmt_num(*rate), join_modes(modes))
            }
            Shape::UncontrolledState => write!(f, "uncontrolled-state"),
        }
    }
}

fn number(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got '{s}'")),
    }
}

fn mode(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("expected a positive mode number, got '{s}'")),
    }
}

const NAMES: [&str; 6] = [
    "zero",
    "constant",
    "sine-mode",
    "gaussian-bump",
    "decaying-exp",
    "uncontrolled-state",
];

fn parse_shape(tokens: &[&str]) -> Result<Shape, String> {
    let Some((&name, args)) = tokens.split_first() else {
        return Err("empty initializer".into());
    };
    if !NAMES.contains(&name) {
        return Err(format!("unknown initializer '{name}'"));
    }
    let shape = match (name, args) {
        ("zero", []) => Shape::Zero,
        ("uncontrolled-state", []) => Shape::UncontrolledState,
        ("constant", [c]) => Shape::Constant(number(c)?),
        ("sine-mode", k) if (1..=2).contains(&k.len()) => {
            Shape::SineMode(k.iter().map(|s| mode(s)).collect::<Result<_, _>>()?)
        }
        ("gaussian-bump", a) if (2..=3).contains(&a.len()) => {
            let (w, c) = a.split_last().expect("non-empty");
            let width = number(w)?;
            if width <= 0.0 {
                return Err(format!("gaussian-bump width must be positive, got {width}"));
            }
            Shape::GaussianBump {
                center: c.iter().map(|s| number(s)).collect::<Result<_, _>>()?,
                width,
            }
        }
        ("decaying-exp", [r, rest @ ..]) => match parse_shape(rest)? {
            Shape::SineMode(modes) => Shape::DecayingExp {
                rate: number(r)?,
                modes,
            },
            _ => return Err("decaying-exp must be followed by a sine-mode".into()),
        },
        _ => return Err(format!("wrong number of arguments for '{name}'")),
    };
    Ok(shape)
}

impl FromStr for Initializer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (amplitude, rest) = match s.split_once('*') {
            Some((a, rest)) => (number(a.trim())?, rest),
            None => (1.0, s),
        };
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        Ok(Self {
            amplitude,
            shape: parse_shape(&tokens).map_err(|e| format!("{e} in '{s}'"))?,
        })
    }
}

impl TryFrom<String> for Initializer {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Initializer> for String {
    fn from(i: Initializer) -> Self {
        i.to_string()
    }
}

fn unit_extent() -> PerAxis<f64> {
    PerAxis::Uniform(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    pub n: PerAxis<usize>,
    #[serde(default = "unit_extent")]
    pub extent: PerAxis<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSpec {
    pub y0: Initializer,
    pub y1: Initializer,
    pub f: Initializer,
    pub yd: Initializer,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            y0: Initializer::zero(),
            y1: Initializer::zero(),
            f: Initializer::zero(),
            yd: Initializer::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSpec {
    pub alpha: Initializer,
    pub beta: Initializer,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        Self {
            alpha: Initializer::constant(-1.0),
            beta: Initializer::constant(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSpec {
    pub u0: Initializer,
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self {
            u0: Initializer::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSpec {
    pub gamma: f64,
}

impl Default for CostSpec {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

/// Serializable mirror of [`OptimizerConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub max_iter: usize,
    pub kkt_tol: f64,
    pub armijo_slope: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub active_set_eps: f64,
    pub rayleigh_samples: usize,
    pub rayleigh_power_iters: usize,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerConfig::default().into()
    }
}

impl From<OptimizerConfig> for OptimizerSpec {
    fn from(c: OptimizerConfig) -> Self {
        Self {
            max_iter: c.max_iter,
            kkt_tol: c.kkt_tol,
            armijo_slope: c.armijo_slope,
            backtrack: c.backtrack,
            initial_step: c.initial_step,
            active_set_eps: c.active_set_eps,
            rayleigh_samples: c.rayleigh_samples,
            rayleigh_power_iters: c.rayleigh_power_iters,
        }
    }
}

impl From<OptimizerSpec> for OptimizerConfig {
    fn from(s: OptimizerSpec) -> Self {
        Self {
            max_iter: s.max_iter,
            kkt_tol: s.kkt_tol,
            armijo_slope: s.armijo_slope,
            backtrack: s.backtrack,
            initial_step: s.initial_step,
            active_set_eps: s.active_set_eps,
            rayleigh_samples: s.rayleigh_samples,
            rayleigh_power_iters: s.rayleigh_power_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Time-slice stride of trajectory CSVs.
    pub stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("bwave-out"),
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec,
    pub time: TimeSpec,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub bounds: BoundsSpec,
    #[serde(default)]
    pub control: ControlSpec,
    #[serde(default)]
    pub cost: CostSpec,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> CliResult<Scenario> {
    let s: Scenario =
        toml::from_str(text).map_err(|e| CliError::Validation(format!("malformed scenario: {e}")))?;
    s.validate()?;
    Ok(s)
}

impl Scenario {
    /// A 1D scenario with every optional field defaulted.
    pub fn minimal(n: usize, horizon: f64, steps: usize) -> Self {
        Self {
            seed: 0,
            grid: GridSpec {
                dimension: 1,
                n: PerAxis::Uniform(n),
                extent: unit_extent(),
            },
            time: TimeSpec { horizon, steps },
            init: InitSpec::default(),
            bounds: BoundsSpec::default(),
            control: ControlSpec::default(),
            cost: CostSpec::default(),
            optimizer: OptimizerSpec::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario fields are always representable")
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        self.optimizer.into()
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        let dim = self.grid.dimension;
        if !(1..=2).contains(&dim) {
            return bad(format!("grid.dimension must be 1 or 2, got {dim}"));
        }
        if dim == 1 {
            if let PerAxis::Axes(_) = self.grid.n {
                return bad("grid.n has two entries for a 1D grid".into());
            }
            if let PerAxis::Axes(_) = self.grid.extent {
                return bad("grid.extent has two entries for a 1D grid".into());
            }
        }
        if self.grid.n.axes().iter().any(|&n| n == 0) {
            return bad("grid.n must be positive".into());
        }
        if self.grid.extent.axes().iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return bad("grid.extent must be positive and finite".into());
        }
        if !(self.time.horizon > 0.0 && self.time.horizon.is_finite()) {
            return bad(format!("time.horizon must be positive, got {}", self.time.horizon));
        }
        if self.time.steps < 2 {
            return bad(format!("time.steps must be at least 2, got {}", self.time.steps));
        }
        if !(self.cost.gamma > 0.0 && self.cost.gamma.is_finite()) {
            return bad(format!("cost.gamma must be positive, got {}", self.cost.gamma));
        }
        if self.output.stride == 0 {
            return bad("output.stride must be positive".into());
        }
        if i64::try_from(self.seed).is_err() {
            return bad(format!("seed {} does not fit a TOML integer", self.seed));
        }
        let fields = [
            (&self.init.y0, "y0"),
            (&self.init.y1, "y1"),
            (&self.init.f, "f"),
            (&self.init.yd, "yd"),
            (&self.bounds.alpha, "alpha"),
            (&self.bounds.beta, "beta"),
            (&self.control.u0, "u0"),
        ];
        for (init, name) in fields {
            init.check(dim, name).map_err(CliError::Validation)?;
        }
        if let (Some(a), Some(b)) = (
            self.bounds.alpha.constant_value(),
            self.bounds.beta.constant_value(),
        ) {
            if a > b {
                return bad(format!("bounds inverted: alpha = {a} > beta = {b}"));
            }
        }
        self.optimizer_config().validate()?;
        Ok(())
    }

    /// Grids after `refine` halvings of both `Δx` and `Δt`.
    pub fn grids(&self, refine: u32) -> CliResult<(SpatialGrid, TimeGrid)> {
        let n = self.grid.n.axes();
        let l = self.grid.extent.axes();
        let mut g = match self.grid.dimension {
            1 => SpatialGrid::new_1d(l[0], n[0])?,
            _ => SpatialGrid::new_2d(l, n)?,
        };
        let mut tg = TimeGrid::new(self.time.horizon, self.time.steps)?;
        for _ in 0..refine {
            g = g.refined();
            tg = tg.refined();
        }
        Ok((g, tg))
    }

    /// The problem on arbitrary grids, with `u0` as the control.
    pub fn problem_on(&self, g: &SpatialGrid, tg: &TimeGrid) -> CliResult<WaveProblem> {
        let init = &self.init;
        let base = WaveProblem::builder(*g, *tg)
            .initial(init.y0.at_start(g), init.y1.at_start(g))
            .forcing(init.f.on(g, tg))
            .bounds(self.bounds.alpha.on(g, tg), self.bounds.beta.on(g, tg))
            .gamma(self.cost.gamma);
        let target = match init.yd.shape {
            Shape::UncontrolledState => {
                let free = base.clone().build()?;
                solve_forward(&free)?.y.scale(init.yd.amplitude)
            }
            _ => init.yd.on(g, tg),
        };
        Ok(base.control(self.control.u0.on(g, tg)).target(target).build()?)
    }

    pub fn problem(&self, refine: u32) -> CliResult<WaveProblem> {
        let (g, tg) = self.grids(refine)?;
        self.problem_on(&g, &tg)
    }
}

/// The scenario on its own spatial grid, re-instantiated on any time grid.
impl ProblemFamily for Scenario {
    fn instantiate(&self, time: &TimeGrid) -> bwave_core::Result<WaveProblem> {
        let (g, _) = self.grids(0).map_err(into_wave)?;
        self.problem_on(&g, time).map_err(into_wave)
    }
}

pub(crate) fn into_wave(e: CliError) -> bwave_core::WaveError {
    match e {
        CliError::Wave(w) => w,
        other => bwave_core::WaveError::InvalidProblem(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initializer_grammar_round_trips() {
        for s in [
            "zero",
            "constant -0.25",
            "sine-mode 3",
            "sine-mode 1 2",
            "gaussian-bump 0.5 0.1",
            "gaussian-bump 0.25 0.75 0.2",
            "decaying-exp 0.5 sine-mode 2",
            "-2 * sine-mode 1",
            "1e-7 * constant 3e20",
            "uncontrolled-state",
        ] {
            let i: Initializer = s.parse().unwrap();
            assert_eq!(i.to_string(), s);
        }
    }

    #[test]
    fn malformed_initializers_are_rejected() {
        for s in [
            "",
            "sin 1",
            "constant",
            "constant x",
            "constant inf",
            "sine-mode 0",
            "sine-mode 1 2 3",
            "gaussian-bump 0.5 0",
            "decaying-exp 1 constant 2",
            "2 * ",
        ] {
            assert!(s.parse::<Initializer>().is_err(), "{s:?}");
        }
        let e = "cosine 1".parse::<Initializer>().unwrap_err();
        assert!(e.contains("unknown initializer 'cosine'"));
    }

    #[test]
    fn sine_mode_is_broadcast_in_two_dimensions() {
        let g = SpatialGrid::new_2d([1.0, 2.0], [3, 3]).unwrap();
        let i: Initializer = "sine-mode 1".parse().unwrap();
        let x = [0.5, 1.0];
        assert!((i.eval(&g, 0.0, x) - 1.0).abs() < 1e-15);
        let d: Initializer = "3 * decaying-exp 2 sine-mode 1".parse().unwrap();
        assert!((d.eval(&g, 1.0, x) - 3.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn refinement_halves_both_steps() {
        let s = Scenario::minimal(7, 2.0, 16);
        let (g, tg) = s.grids(2).unwrap();
        assert_eq!(g.len(), 31);
        assert_eq!(tg.steps(), 64);
        assert_eq!(tg.horizon(), 2.0);
    }
}
