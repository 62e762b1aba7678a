//! Textual run configuration: a JSON schema mirroring [`ProblemSpec`] plus an
//! optional sweep section. Parsing is strict (unknown keys rejected) and
//! validation collects *every* violation with a path-qualified message
//! before giving up, so a config can be fixed in one round.

use std::fmt;

use serde::{Deserialize, Serialize};

use fracwave::domain::{CoefficientField, Field, GridSpec};
use fracwave::harness::{SweepAxis, SweepPlan};
use fracwave::monotone::{Knot, MonotoneGraph};
use fracwave::rothe::{Forcing, ProblemSpec};

#[derive(Debug)]
pub enum ConfigError {
    /// The text is not structurally valid (syntax, types, unknown keys).
    Syntax(String),
    /// Structurally fine, semantically wrong: one line per violation.
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax(msg) => write!(f, "config syntax: {msg}"),
            ConfigError::Invalid(violations) => {
                writeln!(f, "invalid config ({} problem(s)):", violations.len())?;
                for v in violations {
                    writeln!(f, "  - {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub length: f64,
    /// Extension factor of the periodic box relative to Ω.
    #[serde(default = "default_kappa")]
    pub kappa: usize,
    /// Grid points per side of the whole box.
    #[serde(rename = "N")]
    pub points: usize,
}

fn default_kappa() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub s: f64,
    pub nu: f64,
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    #[serde(rename = "A", default)]
    pub a: CoeffConfig,
    #[serde(rename = "B", default)]
    pub b: CoeffConfig,
}

/// `"identity"`, `{"scalar": c}`, `{"diagonal": [[..d entries..], ...]}`
/// (one row per grid node), or `{"matrix": [[..d·d entries..], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoeffConfig {
    #[default]
    Identity,
    Scalar(f64),
    Diagonal(Vec<Vec<f64>>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(rename = "type")]
    pub kind: GraphKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub breakpoints: Vec<BreakpointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_before: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_after: Option<f64>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            kind: GraphKind::Free,
            a: None,
            b: None,
            breakpoints: Vec::new(),
            slope_before: None,
            slope_after: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Free,
    Lower,
    Upper,
    TwoSided,
    Staircase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakpointConfig {
    pub x: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub w0: FieldConfig,
    #[serde(default)]
    pub w1: FieldConfig,
    #[serde(default)]
    pub g: FieldConfig,
}

/// Initial/forcing data: `"zero"`, a named analytic profile, or a node
/// table over the interior grid. Positions (`center`, `peak`) and `width`
/// are fractions of L measured from the lower corner of Ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FieldConfig {
    #[default]
    Zero,
    /// Compactly supported C^∞ mollifier bump (radial in 2-D).
    Bump { amplitude: f64, center: f64, width: f64 },
    /// Product of sine modes vanishing on ∂Ω.
    Mode { amplitude: f64, k: usize },
    /// Plucked string: piecewise linear, apex at `peak` (1-D only).
    Triangle { amplitude: f64, peak: f64 },
    /// Values on the interior nodes, x-major row order in 2-D.
    Nodes(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Keep every `node_stride`-th interior node in the trajectory export.
    #[serde(default = "one")]
    pub node_stride: usize,
    /// Keep every `time_stride`-th time node in the trajectory export.
    #[serde(default = "one")]
    pub time_stride: usize,
}

fn default_directory() -> String {
    "out".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn one() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            formats: default_formats(),
            node_stride: 1,
            time_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: AxisConfig,
    pub values: Vec<f64>,
    /// Lower exponent cutoff recorded with exponent sweeps.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_library_size")]
    pub library_size: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_sigma() -> f64 {
    0.3
}

fn default_library_size() -> usize {
    16
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisConfig {
    Epsilon,
    Viscosity,
    ExponentS,
    Timestep,
}

impl From<AxisConfig> for SweepAxis {
    fn from(axis: AxisConfig) -> SweepAxis {
        match axis {
            AxisConfig::Epsilon => SweepAxis::Epsilon,
            AxisConfig::Viscosity => SweepAxis::Viscosity,
            AxisConfig::ExponentS => SweepAxis::ExponentS,
            AxisConfig::Timestep => SweepAxis::Timestep,
        }
    }
}

/// Everything a subcommand needs, built from a validated config.
pub struct Realized {
    pub spec: ProblemSpec,
    pub horizon: f64,
    pub steps: usize,
    pub sweep: Option<SweepPlan>,
    pub output: OutputConfig,
}

/// Structural parse only — shape, types, unknown keys. Used when fields
/// will be overridden before semantic validation.
pub fn parse_syntax(text: &str) -> Result<RunConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config = parse_syntax(text)?;
    let violations = config.validate();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

impl RunConfig {
    /// Every semantic violation, path-qualified, in schema order.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.domain.validate(&mut out);
        self.physics.validate(&mut out);
        let grid = self.domain.build_grid().ok();
        self.coefficients.validate(&mut out, grid.as_ref());
        self.graph.validate(&mut out);
        self.data.validate(&mut out, grid.as_ref(), self.domain.d);
        self.output.validate(&mut out);
        if let Some(sweep) = &self.sweep {
            sweep.validate(&mut out);
        }
        out
    }

    /// Builds the solver-side objects. Assumes `validate` came back empty;
    /// violations found anyway are returned as `ConfigError::Invalid`.
    pub fn realize(&self) -> Result<Realized, ConfigError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(ConfigError::Invalid(violations));
        }
        let grid = self
            .domain
            .build_grid()
            .map_err(|e| ConfigError::Invalid(vec![format!("domain: {e}")]))?;
        let spec = ProblemSpec {
            grid,
            s: self.physics.s,
            elastic: self.coefficients.a.realize(grid, "coefficients.A")?,
            viscous: self.coefficients.b.realize(grid, "coefficients.B")?,
            nu: self.physics.nu,
            graph: self.graph.realize()?,
            eps: self.physics.epsilon,
            forcing: Forcing::Static(self.data.g.realize(grid, "data.g")?),
            w0: self.data.w0.realize(grid, "data.w0")?,
            w1: self.data.w1.realize(grid, "data.w1")?,
        };
        let sweep = match &self.sweep {
            None => None,
            Some(s) => {
                let mut plan = SweepPlan::new(
                    spec.clone(),
                    self.physics.horizon,
                    self.physics.steps,
                    s.axis.into(),
                )
                .with_values(&s.values);
                plan.sigma = s.sigma;
                plan.library_size = s.library_size;
                plan.seed = s.seed;
                Some(plan)
            }
        };
        Ok(Realized {
            spec,
            horizon: self.physics.horizon,
            steps: self.physics.steps,
            sweep,
            output: self.output.clone(),
        })
    }
}

impl DomainConfig {
    fn validate(&self, out: &mut Vec<String>) {
        if !(self.d == 1 || self.d == 2) {
            out.push(format!("domain.d: must be 1 or 2, got {}", self.d));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            out.push(format!("domain.L: must be positive, got {}", self.length));
        }
        if self.kappa < 2 {
            out.push(format!(
                "domain.kappa: extension factor must be at least 2, got {}",
                self.kappa
            ));
        }
        // the grid builder is the authority on resolution arithmetic
        if let Err(e) = self.build_grid() {
            out.push(format!("domain.N: {e}"));
        }
    }

    fn build_grid(&self) -> Result<GridSpec, fracwave::domain::DomainError> {
        GridSpec::build(self.d, self.length, self.kappa, self.points)
    }
}

impl PhysicsConfig {
    fn validate(&self, out: &mut Vec<String>) {
        if !(self.s.is_finite() && self.s > 0.0 && self.s <= 1.0) {
            out.push(format!("physics.s: s must lie in (0,1], got {}", self.s));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            out.push(format!("physics.nu: must be nonnegative, got {}", self.nu));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0 && self.epsilon < 1.0) {
            out.push(format!(
                "physics.epsilon: epsilon must lie in (0,1), got {}",
                self.epsilon
            ));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            out.push(format!("physics.T: must be positive, got {}", self.horizon));
        }
        if self.steps == 0 {
            out.push("physics.steps: must be at least 1".into());
        }
    }
}

impl CoefficientsConfig {
    fn validate(&self, out: &mut Vec<String>, grid: Option<&GridSpec>) {
        self.a.validate(out, grid, "coefficients.A");
        self.b.validate(out, grid, "coefficients.B");
    }
}

impl CoeffConfig {
    fn validate(&self, out: &mut Vec<String>, grid: Option<&GridSpec>, path: &str) {
        match self {
            CoeffConfig::Identity => {}
            CoeffConfig::Scalar(c) => {
                if !(c.is_finite() && *c > 0.0) {
                    out.push(format!("{path}: scalar coefficient must be positive, got {c}"));
                }
            }
            CoeffConfig::Diagonal(rows) | CoeffConfig::Matrix(rows) => {
                let Some(grid) = grid else {
                    return; // domain is already invalid; nothing to size against
                };
                let per_row = match self {
                    CoeffConfig::Diagonal(_) => grid.dimension(),
                    _ => grid.dimension() * grid.dimension(),
                };
                if rows.len() != grid.total_nodes() {
                    out.push(format!(
                        "{path}: table must have one row per grid node (expected {}, got {})",
                        grid.total_nodes(),
                        rows.len()
                    ));
                }
                for (k, row) in rows.iter().enumerate() {
                    if row.len() != per_row {
                        out.push(format!(
                            "{path}[{k}]: expected {per_row} entries, got {}",
                            row.len()
                        ));
                        break; // one shape complaint is enough
                    }
                }
                if rows
                    .iter()
                    .flatten()
                    .any(|e| !e.is_finite())
                {
                    out.push(format!("{path}: table entries must be finite"));
                }
                match self {
                    CoeffConfig::Diagonal(rows) => {
                        if rows.iter().flatten().any(|e| *e <= 0.0) {
                            out.push(format!("{path}: diagonal entries must be positive"));
                        }
                    }
                    CoeffConfig::Matrix(rows) => {
                        let well_shaped = rows.len() == grid.total_nodes()
                            && rows.iter().all(|r| r.len() == per_row)
                            && rows.iter().flatten().all(|e| e.is_finite());
                        if well_shaped && matrix_bounds(rows, grid.dimension()).0 <= 0.0 {
                            out.push(format!(
                                "{path}: symmetric part must be positive definite at every node"
                            ));
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    fn realize(&self, grid: GridSpec, path: &str) -> Result<CoefficientField, ConfigError> {
        let invalid = |msg: String| ConfigError::Invalid(vec![format!("{path}: {msg}")]);
        match self {
            CoeffConfig::Identity => Ok(CoefficientField::identity(grid)),
            CoeffConfig::Scalar(c) => {
                CoefficientField::scalar(grid, *c).map_err(|e| invalid(e.to_string()))
            }
            CoeffConfig::Diagonal(rows) => {
                let d = grid.dimension();
                let (lo, hi) = rows
                    .iter()
                    .flatten()
                    .fold((f64::INFINITY, 0.0_f64), |(l, h), &e| (l.min(e), h.max(e)));
                CoefficientField::from_fn(grid, lo, hi, |p| {
                    let row = &rows[node_of(&grid, p)];
                    let mut m = [[0.0; 2]; 2];
                    for i in 0..d {
                        m[i][i] = row[i];
                    }
                    m
                })
                .map_err(|e| invalid(e.to_string()))
            }
            CoeffConfig::Matrix(rows) => {
                let d = grid.dimension();
                let (lo, hi) = matrix_bounds(rows, d);
                CoefficientField::from_fn(grid, lo, hi, |p| {
                    let row = &rows[node_of(&grid, p)];
                    let mut m = [[0.0; 2]; 2];
                    for i in 0..d {
                        for j in 0..d {
                            m[i][j] = row[i * d + j];
                        }
                    }
                    m
                })
                .map_err(|e| invalid(e.to_string()))
            }
        }
    }
}

/// Flat node index of a grid position (exact inverse of `node_position`).
fn node_of(grid: &GridSpec, p: [f64; 2]) -> usize {
    let dx = grid.dx();
    let i = (p[0] / dx).round() as usize;
    match grid.dimension() {
        1 => i,
        _ => i * grid.points_per_side() + (p[1] / dx).round() as usize,
    }
}

/// Ellipticity interval of a per-node matrix table: smallest symmetric-part
/// eigenvalue and largest Frobenius norm over the nodes.
fn matrix_bounds(rows: &[Vec<f64>], d: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for row in rows {
        if d == 1 {
            lo = lo.min(row[0]);
            hi = hi.max(row[0].abs());
        } else {
            let s01 = 0.5 * (row[1] + row[2]);
            let disc = (0.5 * (row[0] - row[3])).hypot(s01);
            lo = lo.min(0.5 * (row[0] + row[3]) - disc);
            hi = hi.max(row.iter().map(|e| e * e).sum::<f64>().sqrt());
        }
    }
    (lo, hi)
}

impl GraphConfig {
    fn validate(&self, out: &mut Vec<String>) {
        let needs = |out: &mut Vec<String>, field: &str, present: bool| {
            if !present {
                out.push(format!(
                    "graph.{field}: required by a {:?} graph",
                    self.kind
                ));
            }
        };
        let rejects = |out: &mut Vec<String>, field: &str, present: bool| {
            if present {
                out.push(format!(
                    "graph.{field}: not used by a {:?} graph",
                    self.kind
                ));
            }
        };
        match self.kind {
            GraphKind::Free => {
                rejects(out, "a", self.a.is_some());
                rejects(out, "b", self.b.is_some());
                rejects(out, "breakpoints", !self.breakpoints.is_empty());
            }
            GraphKind::Lower => {
                needs(out, "a", self.a.is_some());
                rejects(out, "b", self.b.is_some());
                rejects(out, "breakpoints", !self.breakpoints.is_empty());
                if let Some(a) = self.a {
                    if !(a <= 0.0) {
                        out.push("graph.a: interval must contain 0".into());
                    }
                }
            }
            GraphKind::Upper => {
                needs(out, "b", self.b.is_some());
                rejects(out, "a", self.a.is_some());
                rejects(out, "breakpoints", !self.breakpoints.is_empty());
                if let Some(b) = self.b {
                    if !(b >= 0.0) {
                        out.push("graph.b: interval must contain 0".into());
                    }
                }
            }
            GraphKind::TwoSided => {
                needs(out, "a", self.a.is_some());
                needs(out, "b", self.b.is_some());
                rejects(out, "breakpoints", !self.breakpoints.is_empty());
                if let Some(a) = self.a {
                    if !(a <= 0.0) {
                        out.push("graph.a: interval must contain 0".into());
                    }
                }
                if let Some(b) = self.b {
                    if !(b >= 0.0) {
                        out.push("graph.b: interval must contain 0".into());
                    }
                }
            }
            GraphKind::Staircase => {
                rejects(out, "a", self.a.is_some());
                rejects(out, "b", self.b.is_some());
                if self.breakpoints.is_empty() {
                    out.push("graph.breakpoints: a staircase graph needs at least one".into());
                } else if let Err(e) = self.build_staircase() {
                    out.push(format!("graph.breakpoints: {e}"));
                }
            }
        }
        if self.kind != GraphKind::Staircase {
            rejects(out, "slope_before", self.slope_before.is_some());
            rejects(out, "slope_after", self.slope_after.is_some());
        }
    }

    fn build_staircase(&self) -> Result<MonotoneGraph, fracwave::monotone::MonotoneError> {
        MonotoneGraph::staircase(
            self.breakpoints
                .iter()
                .map(|b| Knot { x: b.x, lo: b.lo, hi: b.hi })
                .collect(),
            self.slope_before.unwrap_or(0.0),
            self.slope_after.unwrap_or(0.0),
        )
    }

    fn realize(&self) -> Result<MonotoneGraph, ConfigError> {
        let invalid = |path: &str, msg: String| ConfigError::Invalid(vec![format!("{path}: {msg}")]);
        match self.kind {
            GraphKind::Free => Ok(MonotoneGraph::free()),
            GraphKind::Lower => MonotoneGraph::interval(self.a.unwrap(), f64::INFINITY)
                .map_err(|e| invalid("graph.a", e.to_string())),
            GraphKind::Upper => MonotoneGraph::interval(f64::NEG_INFINITY, self.b.unwrap())
                .map_err(|e| invalid("graph.b", e.to_string())),
            GraphKind::TwoSided => MonotoneGraph::interval(self.a.unwrap(), self.b.unwrap())
                .map_err(|e| invalid("graph", e.to_string())),
            GraphKind::Staircase => self
                .build_staircase()
                .map_err(|e| invalid("graph.breakpoints", e.to_string())),
        }
    }
}

impl DataConfig {
    fn validate(&self, out: &mut Vec<String>, grid: Option<&GridSpec>, d: usize) {
        self.w0.validate(out, grid, d, "data.w0");
        self.w1.validate(out, grid, d, "data.w1");
        self.g.validate(out, grid, d, "data.g");
    }
}

impl FieldConfig {
    fn validate(&self, out: &mut Vec<String>, grid: Option<&GridSpec>, d: usize, path: &str) {
        match self {
            FieldConfig::Zero => {}
            FieldConfig::Bump { amplitude, center, width } => {
                if !amplitude.is_finite() {
                    out.push(format!("{path}.amplitude: must be finite"));
                }
                if !(center.is_finite() && *center > 0.0 && *center < 1.0) {
                    out.push(format!(
                        "{path}.center: must lie in (0,1) as a fraction of L, got {center}"
                    ));
                }
                if !(width.is_finite() && *width > 0.0) {
                    out.push(format!("{path}.width: must be positive, got {width}"));
                }
            }
            FieldConfig::Mode { amplitude, k } => {
                if !amplitude.is_finite() {
                    out.push(format!("{path}.amplitude: must be finite"));
                }
                if *k == 0 {
                    out.push(format!("{path}.k: mode number must be at least 1"));
                }
            }
            FieldConfig::Triangle { amplitude, peak } => {
                if !amplitude.is_finite() {
                    out.push(format!("{path}.amplitude: must be finite"));
                }
                if !(peak.is_finite() && *peak > 0.0 && *peak < 1.0) {
                    out.push(format!(
                        "{path}.peak: must lie in (0,1) as a fraction of L, got {peak}"
                    ));
                }
                if d == 2 {
                    out.push(format!("{path}: the triangle profile is one-dimensional"));
                }
            }
            FieldConfig::Nodes(values) => {
                if values.iter().any(|v| !v.is_finite()) {
                    out.push(format!("{path}: node values must be finite"));
                }
                if let Some(grid) = grid {
                    if values.len() != grid.interior_count() {
                        out.push(format!(
                            "{path}: expected one value per interior node ({}), got {}",
                            grid.interior_count(),
                            values.len()
                        ));
                    }
                }
            }
        }
    }

    fn realize(&self, grid: GridSpec, path: &str) -> Result<Field, ConfigError> {
        let origin = grid.omega_origin();
        let length = grid.domain_side();
        match self {
            FieldConfig::Zero => Ok(Field::zeros(grid, 1)),
            FieldConfig::Bump { amplitude, center, width } => {
                let (a, c, w) = (*amplitude, *center, *width);
                let d = grid.dimension();
                Ok(Field::interior_from_fn(grid, move |p| {
                    let xr = (p[0] - origin) / length - c;
                    let yr = if d == 2 { (p[1] - origin) / length - c } else { 0.0 };
                    let rho2 = (xr * xr + yr * yr) / (w * w);
                    if rho2 < 1.0 {
                        a * (1.0 - 1.0 / (1.0 - rho2)).exp()
                    } else {
                        0.0
                    }
                }))
            }
            FieldConfig::Mode { amplitude, k } => {
                let (a, k) = (*amplitude, *k as f64);
                let d = grid.dimension();
                Ok(Field::interior_from_fn(grid, move |p| {
                    let sx = (k * std::f64::consts::PI * (p[0] - origin) / length).sin();
                    let sy = if d == 2 {
                        (k * std::f64::consts::PI * (p[1] - origin) / length).sin()
                    } else {
                        1.0
                    };
                    a * sx * sy
                }))
            }
            FieldConfig::Triangle { amplitude, peak } => {
                let (a, peak) = (*amplitude, *peak);
                Ok(Field::interior_from_fn(grid, move |p| {
                    let xr = (p[0] - origin) / length;
                    if xr <= 0.0 || xr >= 1.0 {
                        0.0
                    } else if xr < peak {
                        a * xr / peak
                    } else {
                        a * (1.0 - xr) / (1.0 - peak)
                    }
                }))
            }
            FieldConfig::Nodes(values) => {
                if values.len() != grid.interior_count() {
                    return Err(ConfigError::Invalid(vec![format!(
                        "{path}: expected one value per interior node ({}), got {}",
                        grid.interior_count(),
                        values.len()
                    )]));
                }
                let mut field = Field::zeros(grid, 1);
                for k in 0..grid.total_nodes() {
                    if let Some(idx) = interior_index(&grid, k) {
                        field.data_mut()[k] = values[idx];
                    }
                }
                Ok(field)
            }
        }
    }
}

/// Position of node `k` in the x-major enumeration of interior nodes, if it
/// is interior.
pub fn interior_index(grid: &GridSpec, k: usize) -> Option<usize> {
    if !grid.is_interior(k) {
        return None;
    }
    let len = grid.points_per_side() / grid.extension_factor();
    let start = (grid.extension_factor() - 1) * len / 2;
    match grid.dimension() {
        1 => Some(k - start),
        _ => {
            let n = grid.points_per_side();
            Some((k / n - start) * len + (k % n - start))
        }
    }
}

impl OutputConfig {
    fn validate(&self, out: &mut Vec<String>) {
        if self.directory.is_empty() {
            out.push("output.directory: must not be empty".into());
        }
        if self.formats.is_empty() {
            out.push("output.formats: must not be empty".into());
        }
        if self.node_stride == 0 {
            out.push("output.node_stride: must be at least 1".into());
        }
        if self.time_stride == 0 {
            out.push("output.time_stride: must be at least 1".into());
        }
    }
}

impl SweepConfig {
    fn validate(&self, out: &mut Vec<String>) {
        if self.values.is_empty() {
            out.push("sweep.values: must not be empty".into());
            return;
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            out.push("sweep.values: must be finite".into());
        }
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        match self.axis {
            AxisConfig::Epsilon => {
                if self.values.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
                    out.push("sweep.values: epsilon must lie in (0,1)".into());
                }
                if !decreasing {
                    out.push("sweep.values: an epsilon sweep must decrease strictly".into());
                }
            }
            AxisConfig::Viscosity => {
                if self.values.iter().any(|&v| !(v > 0.0)) {
                    out.push("sweep.values: viscosity must be positive".into());
                }
                if !decreasing {
                    out.push("sweep.values: a viscosity sweep must decrease strictly".into());
                }
            }
            AxisConfig::ExponentS => {
                if !(self.sigma > 0.0 && self.sigma < 1.0) {
                    out.push(format!(
                        "sweep.sigma: must lie in (0,1), got {}",
                        self.sigma
                    ));
                } else if self.values.iter().any(|&v| !(v > self.sigma && v <= 1.0)) {
                    out.push(format!(
                        "sweep.values: exponents must lie in (sigma, 1] = ({}, 1]",
                        self.sigma
                    ));
                }
                if !increasing {
                    out.push("sweep.values: an exponent sweep must increase strictly".into());
                }
            }
            AxisConfig::Timestep => {
                if self
                    .values
                    .iter()
                    .any(|&v| !(v > 0.0 && v.fract() == 0.0))
                {
                    out.push("sweep.values: time-step counts must be positive integers".into());
                }
                if !increasing {
                    out.push("sweep.values: a time-step sweep must increase strictly".into());
                }
            }
        }
        if self.library_size == 0 || self.library_size > 64 {
            out.push(format!(
                "sweep.library_size: must lie in 1..=64, got {}",
                self.library_size
            ));
        }
    }
}
