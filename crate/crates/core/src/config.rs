//! TOML problem description.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fluxmodel::{FluxError, FluxModel, Kernel, StateBox};
use crate::grid::InitialData;
use crate::scalar::Scalar;
use crate::solver1d::{SolverConfig, DEFAULT_CFL};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io { path: String, message: String },
    /// TOML syntax or schema problem at a 1-based line.
    Parse { line: usize, message: String },
    /// Every field that failed validation.
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "cannot read {path}: {message}"),
            ConfigError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            ConfigError::Invalid(v) => {
                writeln!(f, "invalid config ({} problem(s)):", v.len())?;
                for p in v {
                    writeln!(f, "  {p}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `burgers`, `lwr`, `linear` or `constant`.
    pub kernel: String,
    pub x_lo: f64,
    pub x_hi: f64,
    #[serde(default)]
    pub interfaces: Vec<f64>,
    /// One coefficient per subinterval.
    pub k: Vec<f64>,
    pub u_min: f64,
    pub u_max: f64,
    #[serde(default)]
    pub m_override: Option<f64>,
}

fn default_n_v() -> usize {
    128
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_cells: usize,
    #[serde(default = "default_n_v")]
    pub n_v: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

fn default_snapshots() -> usize {
    11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    #[serde(default = "default_snapshots")]
    pub n_snapshots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol_rh: f64,
    /// `C` in `tol_neg = C·(Δx + Δv)·(1 + M)`.
    pub tol_neg_coeff: f64,
    /// Defaults to `4·M` when absent.
    pub c_slack: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_rh: crate::germ::TOL_RH,
            tol_neg_coeff: crate::kinetic::DEFAULT_TOL_NEG_COEFF,
            c_slack: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub seed: u64,
    /// Pairs for the W sweep.
    pub n_samples: usize,
    pub pool_size: usize,
    /// Random pairs for `contract`.
    pub pairs: usize,
    /// Kruzkov constants per entropy sweep.
    pub n_c: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            seed: 0,
            n_samples: 100_000,
            pool_size: 4000,
            pairs: 20,
            n_c: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommutatorSection {
    pub eps: Vec<f64>,
    pub n_v: usize,
}

impl Default for CommutatorSection {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.1, 0.05],
            n_v: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub initial: InitialData,
    /// Second datum for `contract`; random pairs are drawn when absent.
    #[serde(default)]
    pub initial_pair: Option<InitialData>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub commutator: CommutatorSection,
}

fn line_of(src: &str, offset: usize) -> usize {
    src.as_bytes()[..offset.min(src.len())]
        .iter()
        .filter(|b| **b == b'\n')
        .count()
        + 1
}

impl ProblemConfig {
    pub fn parse_str(src: &str) -> Result<Self, ConfigError> {
        let cfg: ProblemConfig = toml::from_str(src).map_err(|e| ConfigError::Parse {
            line: e.span().map(|s| line_of(src, s.start)).unwrap_or(1),
            message: e.message().trim().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        let m = &self.model;
        if Kernel::<f64>::from_name(&m.kernel).is_none() {
            bad.push(format!("model.kernel: unknown kernel '{}'", m.kernel));
        }
        if !(m.x_lo < m.x_hi) {
            bad.push("model.x_lo: must be below model.x_hi".into());
        }
        for (i, x) in m.interfaces.iter().enumerate() {
            if !(*x > m.x_lo && *x < m.x_hi) {
                bad.push(format!("model.interfaces[{i}]: {x} lies outside ({}, {})", m.x_lo, m.x_hi));
            }
        }
        if m.interfaces.windows(2).any(|w| w[1] <= w[0]) {
            bad.push("model.interfaces: must be strictly increasing".into());
        }
        if m.k.len() != m.interfaces.len() + 1 {
            bad.push(format!(
                "model.k: {} interface(s) need {} coefficient(s), got {}",
                m.interfaces.len(),
                m.interfaces.len() + 1,
                m.k.len()
            ));
        }
        for (i, k) in m.k.iter().enumerate() {
            if !(*k > 0.0) {
                bad.push(format!("model.k[{i}]: must be positive"));
            }
        }
        if !(m.u_min < m.u_max) {
            bad.push("model.u_min: must be below model.u_max".into());
        }
        if let Some(v) = m.m_override {
            if !(v > 0.0) {
                bad.push("model.m_override: must be positive".into());
            }
        }
        let g = &self.grid;
        if g.n_cells == 0 {
            bad.push("grid.n_cells: must be positive".into());
        } else if m.x_lo < m.x_hi {
            let dx = (m.x_hi - m.x_lo) / g.n_cells as f64;
            for (i, x) in m.interfaces.iter().enumerate() {
                let s = (x - m.x_lo) / dx;
                if (s - s.round()).abs() > 1e-9 {
                    bad.push(format!("model.interfaces[{i}]: {x} is not a cell edge for n_cells = {}", g.n_cells));
                }
            }
        }
        if g.n_v < crate::kinetic::MIN_NV {
            bad.push(format!("grid.n_v: must be at least {}", crate::kinetic::MIN_NV));
        }
        if !(g.cfl > 0.0 && g.cfl <= DEFAULT_CFL) {
            bad.push(format!("grid.cfl: must lie in (0, {DEFAULT_CFL}]"));
        }
        if !(self.time.t_final > 0.0) {
            bad.push("time.t_final: must be positive".into());
        }
        if self.time.n_snapshots < 2 {
            bad.push("time.n_snapshots: must be at least 2".into());
        }
        for (name, data) in [("initial", Some(&self.initial)), ("initial_pair", self.initial_pair.as_ref())] {
            let Some(data) = data else { continue };
            if let Err(e) = data.validate() {
                bad.push(format!("{name}: {e}"));
            }
            let (lo, hi) = data.range();
            if lo < m.u_min || hi > m.u_max {
                bad.push(format!(
                    "{name}: values [{lo}, {hi}] leave the state box [{}, {}]",
                    m.u_min, m.u_max
                ));
            }
        }
        let t = &self.tolerances;
        if !(t.tol_rh > 0.0) {
            bad.push("tolerances.tol_rh: must be positive".into());
        }
        if !(t.tol_neg_coeff > 0.0) {
            bad.push("tolerances.tol_neg_coeff: must be positive".into());
        }
        if let Some(c) = t.c_slack {
            if !(c > 0.0) {
                bad.push("tolerances.c_slack: must be positive".into());
            }
        }
        let s = &self.sweep;
        if s.pool_size == 0 {
            bad.push("sweep.pool_size: must be positive".into());
        }
        if s.n_c == 0 {
            bad.push("sweep.n_c: must be positive".into());
        }
        let c = &self.commutator;
        if c.eps.is_empty() || c.eps.iter().any(|e| !(*e > 0.0)) {
            bad.push("commutator.eps: needs positive values".into());
        }
        if c.eps.windows(2).any(|w| w[1] >= w[0]) {
            bad.push("commutator.eps: must be strictly decreasing".into());
        }
        if c.n_v < crate::kinetic::MIN_NV {
            bad.push(format!("commutator.n_v: must be at least {}", crate::kinetic::MIN_NV));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad))
        }
    }

    pub fn model<T: Scalar>(&self) -> Result<FluxModel<T>, FluxError> {
        let m = &self.model;
        let kernel = Kernel::from_name(&m.kernel)
            .ok_or_else(|| FluxError::InvalidModel(format!("unknown kernel '{}'", m.kernel)))?;
        let model = FluxModel::new(
            kernel,
            (T::lit(m.x_lo), T::lit(m.x_hi)),
            m.interfaces.iter().map(|x| T::lit(*x)).collect(),
            m.k.iter().map(|k| T::lit(*k)).collect(),
            StateBox::new(T::lit(m.u_min), T::lit(m.u_max))?,
        )?;
        match m.m_override {
            Some(v) => model.with_m_override(T::lit(v)),
            None => Ok(model),
        }
    }

    pub fn solver<T: Scalar>(&self) -> SolverConfig<T> {
        let mut c = SolverConfig::new(self.grid.n_cells, T::lit(self.time.t_final));
        c.cfl = T::lit(self.grid.cfl);
        c.n_snapshots = self.time.n_snapshots;
        c
    }

    /// Configured `C_slack`, or `4·M` of `model`.
    pub fn c_slack<T: Scalar>(&self, model: &FluxModel<T>) -> T {
        self.tolerances
            .c_slack
            .map(T::lit)
            .unwrap_or_else(|| T::lit(4.0) * model.m_bound)
    }
}

pub fn parse_config(path: &Path) -> Result<ProblemConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ProblemConfig::parse_str(&src)
}
