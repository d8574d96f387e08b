//! Experiment configuration files (TOML).

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use liouville::algebra::{parse_operator_expression, Ket};
use liouville::dynamics::TimeGrid;
use liouville::superop::Jump;
use liouville::{HilbertSpace, LindbladModel, Operator};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Spectrum,
    Evolve,
    Trajectories,
    Qec,
    Envbench,
    Zeno,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Output directory.
    pub output: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<Spanned<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectoryBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qec: Option<QecBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envbench: Option<EnvBenchBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeno: Option<ZenoBlock>,
    /// Written into sidecars; ignored on input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metadata: Option<toml::Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub dims: Spanned<Vec<usize>>,
    pub hamiltonian: Spanned<String>,
    #[serde(default)]
    pub jumps: Vec<JumpEntry>,
    /// Basis labels of the initial product state, one per factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Spanned<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpEntry {
    pub rate: f64,
    pub op: Spanned<String>,
}

fn default_sample_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Counting,
    Homodyne,
    /// Counting with the coherent offset `beta`.
    Offset,
    /// Counting restricted to the no-jump branch.
    NoJump,
}

impl SchemeName {
    pub fn label(self) -> &'static str {
        match self {
            SchemeName::Counting => "counting",
            SchemeName::Homodyne => "homodyne",
            SchemeName::Offset => "offset",
            SchemeName::NoJump => "no_jump",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryBlock {
    pub schemes: Vec<SchemeName>,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub beta: f64,
    /// Also write the master-equation result for the same observables.
    #[serde(default)]
    pub master_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QecBlock {
    pub gamma: f64,
    pub taus: Vec<f64>,
}

fn one() -> f64 {
    1.0
}
fn default_gbar1() -> f64 {
    1e-3
}
fn default_rel_sigma() -> f64 {
    0.05
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvBenchBlock {
    pub modes: Vec<usize>,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "default_gbar1")]
    pub gbar1: f64,
    #[serde(default = "default_rel_sigma")]
    pub rel_sigma: f64,
    pub seed: u64,
    #[serde(default = "yes")]
    pub rwa: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZenoBlock {
    pub g: f64,
    pub cutoff: usize,
    pub taus: Vec<f64>,
    pub n_cycles: usize,
}

/// A parsed configuration together with the text its spans refer to.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub source: String,
}

/// 1-based line of a byte offset.
pub fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

impl Loaded {
    pub fn parse(source: String) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(&source).map_err(|e| {
            let line = e.span().map(|s| line_of(&source, s.start));
            CliError::Schema { line, message: e.message().trim().to_string() }
        })?;
        let loaded = Loaded { config, source };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(source)
    }

    fn at(&self, span: Range<usize>, message: impl Into<String>) -> CliError {
        CliError::Schema { line: Some(line_of(&self.source, span.start)), message: message.into() }
    }

    fn missing(&self, block: &str) -> CliError {
        CliError::Schema {
            line: None,
            message: format!("experiment kind {:?} requires a [{block}] table", self.config.kind),
        }
    }

    /// Checks kind-specific requirements and that every expression builds.
    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        match c.kind {
            Kind::Spectrum => {
                self.model()?;
            }
            Kind::Evolve => {
                self.model()?;
                self.initial()?;
                self.grid()?;
                self.observables()?;
            }
            Kind::Trajectories => {
                self.model()?;
                self.initial()?;
                self.grid()?;
                self.observables()?;
                let t = c.trajectories.as_ref().ok_or_else(|| self.missing("trajectories"))?;
                if t.schemes.is_empty() {
                    return Err(CliError::schema("trajectories.schemes must name at least one scheme"));
                }
                if t.n == 0 {
                    return Err(CliError::schema("trajectories.n must be positive"));
                }
            }
            Kind::Qec => {
                let q = c.qec.as_ref().ok_or_else(|| self.missing("qec"))?;
                if q.taus.is_empty() {
                    return Err(CliError::schema("qec.taus must not be empty"));
                }
            }
            Kind::Envbench => {
                let e = c.envbench.as_ref().ok_or_else(|| self.missing("envbench"))?;
                if e.modes.is_empty() {
                    return Err(CliError::schema("envbench.modes must not be empty"));
                }
                self.grid()?;
            }
            Kind::Zeno => {
                let z = c.zeno.as_ref().ok_or_else(|| self.missing("zeno"))?;
                if z.taus.is_empty() {
                    return Err(CliError::schema("zeno.taus must not be empty"));
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> Result<HilbertSpace, CliError> {
        let m = self.config.model.as_ref().ok_or_else(|| self.missing("model"))?;
        HilbertSpace::new(m.dims.get_ref().clone()).map_err(|e| self.at(m.dims.span(), e.to_string()))
    }

    fn operator(&self, expr: &Spanned<String>, space: &HilbertSpace) -> Result<Operator, CliError> {
        parse_operator_expression(expr.get_ref(), space)
            .map_err(|e| self.at(expr.span(), format!("in expression {:?}: {e}", expr.get_ref())))
    }

    pub fn model(&self) -> Result<LindbladModel, CliError> {
        let m = self.config.model.as_ref().ok_or_else(|| self.missing("model"))?;
        let space = self.space()?;
        let h = self.operator(&m.hamiltonian, &space)?;
        if !h.is_hermitian(1e-10) {
            return Err(self.at(m.hamiltonian.span(), "hamiltonian is not Hermitian"));
        }
        let mut jumps = Vec::new();
        for j in &m.jumps {
            if !(j.rate >= 0.0) || !j.rate.is_finite() {
                return Err(self.at(j.op.span(), format!("jump rate must be finite and non-negative, got {}", j.rate)));
            }
            jumps.push(Jump::new(j.rate, self.operator(&j.op, &space)?));
        }
        LindbladModel::new(h, jumps).map_err(|e| self.at(m.hamiltonian.span(), e.to_string()))
    }

    pub fn initial(&self) -> Result<Ket, CliError> {
        let m = self.config.model.as_ref().ok_or_else(|| self.missing("model"))?;
        let init = m
            .initial
            .as_ref()
            .ok_or_else(|| CliError::schema(format!("experiment kind {:?} requires model.initial", self.config.kind)))?;
        Ket::basis(&self.space()?, init.get_ref()).map_err(|e| self.at(init.span(), e.to_string()))
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        let g = self.config.grid.as_ref().ok_or_else(|| self.missing("grid"))?;
        TimeGrid::new(g.t0, g.t1, g.dt, g.sample_every).map_err(|e| CliError::schema(format!("[grid]: {e}")))
    }

    /// Observables with their CSV column stems.
    pub fn observables(&self) -> Result<Vec<(String, Operator)>, CliError> {
        let space = self.space()?;
        let mut out: Vec<(String, Operator)> = Vec::new();
        for expr in &self.config.observables {
            let op = self.operator(expr, &space)?;
            let mut name = column_stem(expr.get_ref());
            let base = name.clone();
            let mut k = 2;
            while out.iter().any(|(n, _)| *n == name) {
                name = format!("{base}_{k}");
                k += 1;
            }
            out.push((name, op));
        }
        Ok(out)
    }
}

/// Alphanumeric runs of an expression joined by `_`; `'` becomes `dag`.
pub fn column_stem(expr: &str) -> String {
    let mut out = String::new();
    let mut gap = false;
    for ch in expr.replace('\'', "dag").chars() {
        if ch.is_ascii_alphanumeric() || ch == '.' {
            if gap && !out.is_empty() {
                out.push('_');
            }
            out.push(if ch == '.' { 'p' } else { ch });
            gap = false;
        } else {
            gap = true;
        }
    }
    if out.is_empty() {
        "obs".into()
    } else {
        out
    }
}
