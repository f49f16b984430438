//! Experiment configs: TOML text checked against a key schema, then typed and validated.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};
use ucont_core::carleman::CutoffSpec;
use ucont_core::coeff::{CoefficientField, TransversalField};
use ucont_core::expr::{parse, NoProfile, Point};
use ucont_core::grid::Grid;
use ucont_core::ops::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    Convexity,
    CarlemanSweep,
    SymbolicVerify,
    Subordination,
    Poincare,
    Hardy,
    LowerboundFit,
    GaugeReduce,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Simulate,
        Kind::Convexity,
        Kind::CarlemanSweep,
        Kind::SymbolicVerify,
        Kind::Subordination,
        Kind::Poincare,
        Kind::Hardy,
        Kind::LowerboundFit,
        Kind::GaugeReduce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Convexity => "convexity",
            Kind::CarlemanSweep => "carleman-sweep",
            Kind::SymbolicVerify => "symbolic-verify",
            Kind::Subordination => "subordination",
            Kind::Poincare => "poincare",
            Kind::Hardy => "hardy",
            Kind::LowerboundFit => "lowerbound-fit",
            Kind::GaugeReduce => "gauge-reduce",
        }
    }

    pub fn from_name(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn summary(self) -> &'static str {
        match self {
            Kind::Simulate => "propagate initial data; mass, closed-form, order, regularization and semigroup checks",
            Kind::Convexity => "weighted norms along a trajectory: log-convexity and Gaussian decay schedules",
            Kind::CarlemanSweep => "sampled Carleman inequality at the threshold weight and frontier exponents",
            Kind::SymbolicVerify => "exact conjugation, commutator decomposition and symmetry of the weighted operator",
            Kind::Subordination => "ratio of the subordination integral to exp((κr)^p/p) over log-spaced radii",
            Kind::Poincare => "worst weighted Poincaré ratio over random fields, with grid refinement",
            Kind::Hardy => "Gaussian endpoint decay rates of the free flow against 1/16",
            Kind::LowerboundFit => "annulus mass profile and decay-exponent fit",
            Kind::GaugeReduce => "one-dimensional gauge reduction of a transversal coefficient",
        }
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            Kind::Simulate => &["order_steps", "regularize", "regularize_steps", "semigroup"],
            Kind::Convexity => &["betas", "m1", "max_smallness", "schedule"],
            Kind::CarlemanSweep => &[
                "mode",
                "radius",
                "samples",
                "r0",
                "half_width",
                "nodes",
                "c1",
                "c0",
                "frontier_radii",
                "frontier_seeds",
                "expected_exponent",
                "max_smallness",
            ],
            Kind::SymbolicVerify => &["pairs", "nodes", "half_width", "r0", "radius"],
            Kind::Subordination => &["p", "kappa", "lambda0", "r_min", "r_max", "count", "normalize", "band_oracle"],
            Kind::Poincare => &["radii", "samples", "points"],
            Kind::Hardy => &["s_values"],
            Kind::LowerboundFit => &["radii", "window", "core_radius", "e2_floor", "expected_p"],
            Kind::GaugeReduce => &["lo", "hi", "points", "samples"],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldSection {
    /// Row-major coefficient matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<String>>>,
    /// Transversal form: `a11(x1)` with `ã(x')` below it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a11: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilde: Option<Vec<Vec<String>>>,
    pub potential: String,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection { a: None, a11: None, tilde: None, potential: "0".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSection {
    pub dim: usize,
    pub half: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { dim: 1, half: 16.0, points: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightSection {
    /// `quadratic`, `power`, `scaled-time` or `translated`.
    pub kind: String,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl Default for WeightSection {
    fn default() -> Self {
        WeightSection { kind: "quadratic".into(), beta: 0.1, alpha: None, radius: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeSection {
    pub t_end: f64,
    pub steps: usize,
    pub frames: usize,
    /// Dissipation `a` in `∂t u = (a + ib)(L + V)u`.
    pub a: f64,
    pub b: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { t_end: 1.0, steps: 64, frames: 16, a: 0.0, b: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialSection {
    /// `gaussian` or `harmonic`.
    pub kind: String,
    /// `[Re s, Im s]` in `exp(−|x − c|²/(4s))`.
    pub s: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    pub amp: [f64; 2],
    /// Oscillator frequency for `harmonic` data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    /// Sample the closed-form flow instead of stepping (free Gaussian data only).
    pub exact: bool,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection { kind: "gaussian".into(), s: [1.0, 0.0], center: None, amp: [1.0, 0.0], w: None, exact: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub gamma: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub big_lambda: f64,
    #[serde(default = "one")]
    pub norm_a: f64,
    #[serde(default = "one")]
    pub c_dim: f64,
    #[serde(default)]
    pub v_bound: f64,
}

fn one() -> f64 {
    1.0
}

/// Kind-specific parameters; which keys are accepted depends on the kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_steps: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularize: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularize_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semigroup: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_smallness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frontier_radii: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frontier_seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub core_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e2_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

/// Every tolerance an asserted check may use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub mass: f64,
    pub closed_form: f64,
    pub order_min: f64,
    pub order_max: f64,
    pub semigroup: f64,
    pub interpolation: f64,
    pub second_difference: f64,
    pub schedule: f64,
    pub slack: f64,
    pub direct_gap: f64,
    pub exponent: f64,
    pub symmetry: f64,
    pub band: f64,
    pub hardy: f64,
    pub fit_residual: f64,
    pub refinement: f64,
    pub gauge: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass: 1e-10,
            closed_form: 1e-6,
            order_min: 3.6,
            order_max: 4.4,
            semigroup: 1e-7,
            interpolation: 1e-6,
            second_difference: 1e-3,
            schedule: 1e-12,
            slack: 1e-6,
            direct_gap: 1e-10,
            exponent: 0.2,
            symmetry: 1e-7,
            band: 1e-9,
            hardy: 1e-8,
            fit_residual: 0.05,
            refinement: 0.05,
            gauge: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub checkpoint: bool,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub weight: WeightSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_output() -> PathBuf {
    PathBuf::from("ucont-out")
}

const TOP: &[&str] =
    &["kind", "seed", "output_dir", "checkpoint", "field", "grid", "weight", "time", "initial", "params", "tolerances"];
const FIELD: &[&str] = &["a", "a11", "tilde", "potential"];
const GRID: &[&str] = &["dim", "half", "points"];
const WEIGHT: &[&str] = &["kind", "beta", "alpha", "radius"];
const TIME: &[&str] = &["t_end", "steps", "frames", "a", "b"];
const INITIAL: &[&str] = &["kind", "s", "center", "amp", "w", "exact"];
const SCHEDULE: &[&str] = &["gamma", "lambda", "big_lambda", "norm_a", "c_dim", "v_bound"];
const TOLERANCES: &[&str] = &[
    "mass",
    "closed_form",
    "order_min",
    "order_max",
    "semigroup",
    "interpolation",
    "second_difference",
    "schedule",
    "slack",
    "direct_gap",
    "exponent",
    "symmetry",
    "band",
    "hardy",
    "fit_residual",
    "refinement",
    "gauge",
];

fn unknown_keys(table: &Table, allowed: &[&str], prefix: &str, errors: &mut Vec<String>) {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            errors.push(format!("unknown key `{prefix}{key}`"));
        }
    }
}

fn schema_errors(root: &Table, kind: Option<Kind>) -> Vec<String> {
    let mut errors = Vec::new();
    unknown_keys(root, TOP, "", &mut errors);
    for (name, allowed) in
        [("field", FIELD), ("grid", GRID), ("weight", WEIGHT), ("time", TIME), ("initial", INITIAL), ("tolerances", TOLERANCES)]
    {
        match root.get(name) {
            Some(Value::Table(t)) => unknown_keys(t, allowed, &format!("{name}."), &mut errors),
            Some(_) => errors.push(format!("`{name}` must be a table")),
            None => {}
        }
    }
    match root.get("params") {
        Some(Value::Table(t)) => {
            if let Some(kind) = kind {
                unknown_keys(t, kind.params(), "params.", &mut errors);
            }
            match t.get("schedule") {
                Some(Value::Table(s)) => unknown_keys(s, SCHEDULE, "params.schedule.", &mut errors),
                Some(_) => errors.push("`params.schedule` must be a table".into()),
                None => {}
            }
        }
        Some(_) => errors.push("`params` must be a table".into()),
        None => {}
    }
    errors
}

/// Parses, checks keys, fills defaults and validates; every problem found is returned.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| vec![format!("syntax: {}", e.message())])?;
    let mut errors = Vec::new();
    let kind = match root.get("kind") {
        None => {
            errors.push("missing required field `kind`".to_string());
            None
        }
        Some(Value::String(s)) => {
            let k = Kind::from_name(s);
            if k.is_none() {
                let names: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
                errors.push(format!("kind: unknown experiment kind `{s}` (expected one of {})", names.join(", ")));
            }
            k
        }
        Some(_) => {
            errors.push("kind: must be a string".to_string());
            None
        }
    };
    errors.extend(schema_errors(&root, kind));
    if !errors.is_empty() {
        return Err(errors);
    }
    let mut cfg: ExperimentConfig = Value::Table(root).try_into().map_err(|e: toml::de::Error| vec![e.message().to_string()])?;
    cfg.normalize();
    let errors = cfg.validate();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

fn fill<T>(slot: &mut Option<T>, v: T) {
    if slot.is_none() {
        *slot = Some(v);
    }
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn is_transversal(&self) -> bool {
        self.field.a11.is_some()
    }

    pub fn carleman_translated(&self) -> bool {
        self.params.mode.as_deref() == Some("translated")
    }

    /// Fills kind-specific defaults so the echoed config reproduces the run.
    pub fn normalize(&mut self) {
        let n = self.grid.dim;
        if self.field.a.is_none() && self.field.a11.is_none() {
            self.field.a = Some(
                (0..n).map(|k| (0..n).map(|j| if k == j { "1".to_string() } else { "0".to_string() }).collect()).collect(),
            );
        }
        if self.field.a11.is_some() && self.field.tilde.is_none() {
            let m = n.saturating_sub(1);
            self.field.tilde =
                Some((0..m).map(|k| (0..m).map(|j| if k == j { "1".to_string() } else { "0".to_string() }).collect()).collect());
        }
        if self.initial.center.is_none() {
            self.initial.center = Some(vec![0.0; n]);
        }
        let p = &mut self.params;
        match self.kind {
            Kind::Simulate => {
                fill(&mut p.order_steps, vec![]);
                fill(&mut p.regularize, vec![]);
                fill(&mut p.regularize_steps, 10);
                fill(&mut p.semigroup, false);
            }
            Kind::Convexity => {
                fill(&mut p.betas, vec![self.weight.beta]);
                fill(&mut p.m1, 0.0);
            }
            Kind::CarlemanSweep => {
                fill(&mut p.mode, "cubic".into());
                let translated = p.mode.as_deref() == Some("translated");
                fill(&mut p.radius, if translated { 4.0 } else { 2.0 });
                fill(&mut p.samples, 100);
                fill(&mut p.r0, 1.0);
                fill(&mut p.half_width, if translated { 3.0 } else { 6.0 });
                fill(&mut p.nodes, if translated { 32 } else { 96 });
                fill(&mut p.c1, 1.0);
                fill(&mut p.frontier_radii, vec![2.0, 4.0, 8.0, 16.0]);
                fill(&mut p.frontier_seeds, 48);
                fill(&mut p.expected_exponent, if translated { 2.0 } else { 3.0 });
            }
            Kind::SymbolicVerify => {
                fill(&mut p.pairs, 0);
                fill(&mut p.nodes, if n == 1 { 160 } else { 64 });
                fill(&mut p.half_width, 4.0);
                fill(&mut p.r0, 0.5);
                fill(&mut p.radius, 2.0);
            }
            Kind::Subordination => {
                fill(&mut p.p, 1.5);
                fill(&mut p.kappa, 10.0);
                fill(&mut p.lambda0, 1.0);
                fill(&mut p.r_min, 0.1);
                fill(&mut p.r_max, 10.0);
                fill(&mut p.count, 20);
                fill(&mut p.normalize, false);
            }
            Kind::Poincare => {
                fill(&mut p.radii, vec![0.5, 1.0, 2.0]);
                fill(&mut p.samples, 200);
                fill(&mut p.points, if n == 1 { 256 } else if n == 2 { 64 } else { 16 });
            }
            Kind::Hardy => {
                fill(&mut p.s_values, vec![1.0, 0.5, 0.1, 0.01]);
            }
            Kind::LowerboundFit => {
                fill(&mut p.radii, vec![2.0, 3.0, 4.0, 5.0, 6.0]);
                fill(&mut p.window, [0.125, 0.875]);
                fill(&mut p.core_radius, 1.0);
                fill(&mut p.e2_floor, 0.0);
                fill(&mut p.expected_p, 2.0);
            }
            Kind::GaugeReduce => {
                fill(&mut p.lo, -4.0);
                fill(&mut p.hi, 4.0);
                fill(&mut p.points, 161);
                fill(&mut p.samples, 9);
            }
        }
    }

    /// Semantic checks on a normalized config.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let mut err = |path: &str, msg: String| errors.push(format!("{path}: {msg}"));
        let n = self.grid.dim;
        if let Err(e) = Grid::cube(n, self.grid.half, self.grid.points) {
            err("grid", e.to_string());
        }
        match (&self.field.a, &self.field.a11) {
            (Some(_), Some(_)) => err("field", "give either `a` or `a11`/`tilde`, not both".into()),
            (Some(rows), None) => {
                let mut ok = rows.len() == n && rows.iter().all(|r| r.len() == n);
                if !ok {
                    err("field.a", format!("must be a {n}×{n} matrix to match grid.dim"));
                }
                for (k, row) in rows.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        if let Err(e) = parse(e) {
                            err(&format!("field.a[{k}][{j}]"), e.to_string());
                            ok = false;
                        }
                    }
                }
                if ok {
                    if let Err(e) = self.coefficient_field() {
                        err("field", e.to_string());
                    }
                }
            }
            (None, Some(a11)) => {
                let mut ok = true;
                if let Err(e) = parse(a11) {
                    err("field.a11", e.to_string());
                    ok = false;
                }
                let tilde = self.field.tilde.clone().unwrap_or_default();
                if tilde.len() + 1 != n || tilde.iter().any(|r| r.len() + 1 != n) {
                    err("field.tilde", format!("must be a {}×{} matrix to match grid.dim", n - 1, n - 1));
                    ok = false;
                }
                for (k, row) in tilde.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        if let Err(e) = parse(e) {
                            err(&format!("field.tilde[{k}][{j}]"), e.to_string());
                            ok = false;
                        }
                    }
                }
                if ok {
                    if let Err(e) = self.transversal_field() {
                        err("field", e.to_string());
                    }
                }
            }
            (None, None) => {}
        }
        if let Err(e) = parse(&self.field.potential) {
            err("field.potential", e.to_string());
        }
        if let Err(e) = self.weight_spec() {
            err("weight", e.to_string());
        }
        let t = &self.time;
        if !(t.t_end > 0.0) {
            err("time.t_end", format!("must be positive, got {}", t.t_end));
        }
        if t.frames == 0 || t.steps == 0 || t.steps % t.frames != 0 {
            err("time", format!("steps = {} must be a positive multiple of frames = {}", t.steps, t.frames));
        }
        if !(t.a >= 0.0) || (t.a == 0.0 && t.b == 0.0) {
            err("time", format!("need a ≥ 0 and (a, b) ≠ 0, got ({}, {})", t.a, t.b));
        }
        let i = &self.initial;
        if !(i.s[0] > 0.0) {
            err("initial.s", format!("Re s must be positive, got {}", i.s[0]));
        }
        if i.center.as_ref().is_some_and(|c| c.len() != n) {
            err("initial.center", format!("must have {n} entries"));
        }
        match i.kind.as_str() {
            "gaussian" => {}
            "harmonic" => match i.w {
                Some(w) if w > 0.0 => {
                    if i.center.as_ref().is_some_and(|c| c.iter().any(|v| *v != 0.0)) {
                        err("initial.center", "harmonic data must be centred".into());
                    }
                    if !self.potential_is_harmonic(w) {
                        err("field.potential", format!("harmonic data needs V = −{w}|x|²"));
                    }
                    if t.a != 0.0 || t.b != 1.0 {
                        err("time", "harmonic data needs the Schrödinger flow a = 0, b = 1".into());
                    }
                }
                _ => err("initial.w", "harmonic data needs a positive frequency `w`".into()),
            },
            other => err("initial.kind", format!("unknown initial data `{other}` (expected gaussian or harmonic)")),
        }
        if i.exact && (i.kind != "gaussian" || !self.is_free()) {
            err("initial.exact", "closed-form flow needs Gaussian data, identity coefficients and V = 0".into());
        }
        let p = &self.params;
        let positive = |v: Option<f64>| v.is_some_and(|x| x > 0.0);
        match self.kind {
            Kind::Simulate => {
                if p.order_steps.as_ref().is_some_and(|s| !s.is_empty()) && !self.has_closed_form() {
                    err("params.order_steps", "the order check needs data with a closed-form flow".into());
                }
                if let Some(eps) = &p.regularize {
                    if !eps.is_empty() && t.a != 0.0 {
                        err("params.regularize", "compares against the Schrödinger flow; needs time.a = 0".into());
                    }
                    if eps.iter().any(|e| !(*e > 0.0)) {
                        err("params.regularize", "every ε must be positive".into());
                    }
                }
            }
            Kind::Convexity => {
                if p.betas.as_ref().is_some_and(|b| b.iter().any(|b| !(*b > 0.0))) {
                    err("params.betas", "every β must be positive".into());
                }
                if let Some(s) = &p.schedule {
                    if !(s.gamma > 0.0) {
                        err("params.schedule.gamma", format!("must be positive, got {}", s.gamma));
                    }
                }
            }
            Kind::CarlemanSweep => {
                let mode = p.mode.as_deref().unwrap_or("cubic");
                if mode != "cubic" && mode != "translated" {
                    err("params.mode", format!("unknown mode `{mode}` (expected cubic or translated)"));
                }
                let r0 = p.r0.unwrap_or(1.0);
                for (path, r) in std::iter::once(("params.radius", p.radius.unwrap_or(1.0)))
                    .chain(p.frontier_radii.iter().flatten().map(|r| ("params.frontier_radii", *r)))
                {
                    if let Err(e) = CutoffSpec::new(r0, r) {
                        err(path, e.to_string());
                    }
                }
                if mode == "translated" {
                    if !self.is_transversal() {
                        err("field", "translated mode needs the transversal form `a11`/`tilde`".into());
                    }
                    if n < 2 {
                        err("grid.dim", "translated mode needs dimension ≥ 2".into());
                    }
                    if p.c0.is_none() && p.frontier_radii.as_ref().is_none_or(|r| r.len() < 2) {
                        err("params.c0", "give c0 or at least two frontier radii to fit it".into());
                    }
                }
                if p.c0.is_some() && !positive(p.c0) {
                    err("params.c0", "must be positive".into());
                }
                if p.nodes.is_some_and(|k| k < 16) {
                    err("params.nodes", "at least 16 nodes are needed".into());
                }
            }
            Kind::SymbolicVerify => {
                if p.nodes.is_some_and(|k| k < 16) {
                    err("params.nodes", "at least 16 nodes are needed".into());
                }
                if let Err(e) = CutoffSpec::new(p.r0.unwrap_or(0.5), p.radius.unwrap_or(2.0)) {
                    err("params.radius", e.to_string());
                }
            }
            Kind::Subordination => {
                match ucont_core::analysis::SubordinationCase::new(
                    p.p.unwrap_or(1.5),
                    p.kappa.unwrap_or(10.0),
                    p.lambda0.unwrap_or(1.0),
                    vec![1.0],
                ) {
                    Err(e) => err("params", e.to_string()),
                    Ok(c) if !c.admissible() => err(
                        "params.kappa",
                        format!("κ = {} must exceed 2λ₀(2/(q−2))^(1/q) = {}", c.kappa, c.kappa_threshold()),
                    ),
                    Ok(_) => {}
                }
                if !(positive(p.r_min) && p.r_max > p.r_min) || p.count.unwrap_or(0) < 2 {
                    err("params", "need 0 < r_min < r_max and count ≥ 2".into());
                }
            }
            Kind::Poincare => {
                if p.radii.as_ref().is_none_or(|r| r.is_empty() || r.iter().any(|r| !(*r > 0.0))) {
                    err("params.radii", "need at least one positive radius".into());
                }
                if n > 3 {
                    err("grid.dim", "dimension must be 1, 2 or 3".into());
                }
                if p.points.is_some_and(|k| k < 4 || !k.is_power_of_two()) {
                    err("params.points", "must be a power of two ≥ 4".into());
                }
            }
            Kind::Hardy => {
                if p.s_values.as_ref().is_none_or(|s| s.is_empty() || s.iter().any(|s| !(*s > 0.0))) {
                    err("params.s_values", "need positive values of s".into());
                }
            }
            Kind::LowerboundFit => {
                if p.radii.as_ref().is_none_or(|r| r.len() < 3) {
                    err("params.radii", "the fit needs at least three radii".into());
                }
                if p.window.is_some_and(|[a, b]| !(0.0 <= a && a < b)) {
                    err("params.window", "need 0 ≤ start < end".into());
                }
            }
            Kind::GaugeReduce => {
                if !self.is_transversal() {
                    err("field", "gauge reduction needs the transversal form `a11`/`tilde`".into());
                }
                let (lo, hi) = (p.lo.unwrap_or(-4.0), p.hi.unwrap_or(4.0));
                if !(lo < 0.0 && hi > 0.0) {
                    err("params", format!("the interval [{lo}, {hi}] must contain 0"));
                }
            }
        }
        errors
    }

    pub fn coefficient_field(&self) -> ucont_core::Result<CoefficientField> {
        if self.is_transversal() {
            return self.transversal_field()?.to_field();
        }
        let rows = self.field.a.clone().unwrap_or_default();
        let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
        CoefficientField::parse(&rows, &self.field.potential)
    }

    pub fn transversal_field(&self) -> ucont_core::Result<TransversalField> {
        let a11 = parse(self.field.a11.as_deref().unwrap_or("1"))?;
        let tilde = self
            .field
            .tilde
            .iter()
            .flatten()
            .map(|r| r.iter().map(|e| parse(e)).collect::<ucont_core::Result<Vec<_>>>())
            .collect::<ucont_core::Result<Vec<_>>>()?;
        TransversalField::new(a11, tilde, parse(&self.field.potential)?)
    }

    pub fn weight_spec(&self) -> ucont_core::Result<WeightSpec> {
        let w = &self.weight;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| ucont_core::Error::Precondition(format!("weight kind `{}` needs `{name}`", w.kind)))
        };
        match w.kind.as_str() {
            "quadratic" => WeightSpec::quadratic(w.beta),
            "power" => WeightSpec::power(w.beta, need(w.alpha, "alpha")?),
            "scaled-time" => WeightSpec::scaled_time(w.beta, need(w.radius, "radius")?),
            "translated" => WeightSpec::translated(w.beta, need(w.radius, "radius")?),
            other => Err(ucont_core::Error::Precondition(format!(
                "unknown weight kind `{other}` (expected quadratic, power, scaled-time or translated)"
            ))),
        }
    }

    /// Identity coefficients and `V = 0`.
    pub fn is_free(&self) -> bool {
        let Ok(f) = self.coefficient_field() else { return false };
        let n = f.dim();
        f.potential().is_zero()
            && (0..n).all(|k| {
                (0..n).all(|j| f.entry(k, j).as_constant().is_some_and(|c| c.to_c64() == if k == j { 1.0.into() } else { 0.0.into() }))
            })
    }

    fn potential_is_harmonic(&self, w: f64) -> bool {
        let Ok(v) = parse(&self.field.potential) else { return false };
        let v = v.compile();
        let n = self.grid.dim;
        [0.3, -1.1, 2.7, -0.6].iter().all(|&s| {
            let x: Vec<f64> = (0..n).map(|k| s * (1.0 + 0.37 * k as f64)).collect();
            let r2: f64 = x.iter().map(|c| c * c).sum();
            let got = v.eval_re(&Point::new(0.0, &x), &NoProfile);
            (got + w * r2).abs() <= 1e-12 * (1.0 + w * r2)
        })
    }

    /// Gaussian data on the free flow, or harmonic data on the oscillator.
    pub fn has_closed_form(&self) -> bool {
        match self.initial.kind.as_str() {
            "gaussian" => self.is_free(),
            "harmonic" => true,
            _ => false,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }
}
