//! Experiment configuration: a versioned TOML file, overridable from the command line.
//!
//! ```toml
//! schema_version = 1
//! shape = "a"
//! level = 5
//! modes = 20
//! mode_list = [1, 8, 9, 13]
//! grid_points = 400
//! output_dir = "results"
//!
//! [tolerances]
//! bound = 0.02
//!
//! [fit]
//! floor = 1e-9
//! cap = 0.1
//! model = "dirichlet_end"
//! ```

use crate::error::CliError;
use branchdecay::analysis::FitWindow;
use branchdecay::fem::{BcKind, BoundaryCondition};
use branchdecay::geometry::{build_catalog_domain, rotate_to_axis, CatalogParams, DomainConfig, DomainSpec, Marker, Point, ShapeId};
use branchdecay::mesh::DEFAULT_BASE_H;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
/// Prefix for relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "BRANCHDECAY_OUTPUT_ROOT";
/// Levels above this need more memory than a workstation typically has.
pub const MAX_LEVEL: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative eigenvalue deviation allowed by `table1`.
    pub table1: f64,
    /// `table1` only gates runs at or above this level.
    pub table1_gate_level: u32,
    /// Multiplicative slack on the exponential bounds.
    pub bound: f64,
    /// Relative difference marking where consecutive levels diverge.
    pub frontier: f64,
    /// Multiplicative slack in the second-difference inequality.
    pub maslov: f64,
    /// Least `r^2` of an exponential fit for a profile to count as decaying.
    pub decay_r2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { table1: 0.015, table1_gate_level: 5, bound: 0.02, frontier: 0.05, maslov: 0.2, decay_r2: 0.99 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaslovConfig {
    pub c: f64,
    pub stride: usize,
}

impl Default for MaslovConfig {
    fn default() -> Self {
        MaslovConfig { c: 4.0, stride: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub shape: ShapeId,
    pub params: CatalogParams,
    /// Domain description file; replaces `shape` and `params`.
    pub domain_file: Option<PathBuf>,
    /// Re-parameterize the branch along this direction.
    pub rotate_to: Option<Point>,
    /// Shapes for `table1`; empty means every tabulated shape.
    pub shapes: Vec<ShapeId>,
    pub level: u32,
    /// Levels compared by `convergence`.
    pub levels: Vec<u32>,
    pub base_h: f64,
    /// Number of eigenpairs to compute.
    pub modes: usize,
    /// Modes to analyse; absent means `1..=modes`.
    pub mode_list: Option<Vec<usize>>,
    pub bc: BcKind,
    /// Per-marker overrides of `bc`, keyed by marker number.
    pub bc_markers: BTreeMap<String, BcKind>,
    /// Number of intervals of the profile grid.
    pub grid_points: usize,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub tolerances: Tolerances,
    pub fit: FitWindow,
    pub maslov: MaslovConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            shape: ShapeId::A,
            params: CatalogParams::default(),
            domain_file: None,
            rotate_to: None,
            shapes: Vec::new(),
            level: 5,
            levels: vec![3, 4, 5],
            base_h: DEFAULT_BASE_H,
            modes: 20,
            mode_list: None,
            bc: BcKind::Dirichlet,
            bc_markers: BTreeMap::new(),
            grid_points: 400,
            output_dir: PathBuf::from("results"),
            workers: 0,
            tolerances: Tolerances::default(),
            fit: FitWindow::default(),
            maslov: MaslovConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "config schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.level > MAX_LEVEL || self.levels.iter().any(|l| *l > MAX_LEVEL) {
            return bad(format!("refinement levels above {MAX_LEVEL} are not supported"));
        }
        if self.modes == 0 {
            return bad("mode count must be at least 1".into());
        }
        match &self.mode_list {
            Some(l) if l.is_empty() => return bad("mode list is empty".into()),
            Some(l) if l.contains(&0) => return bad("mode numbers start at 1".into()),
            _ => {}
        }
        if !(self.base_h > 0.0 && self.base_h.is_finite()) {
            return bad(format!("base_h must be positive, got {}", self.base_h));
        }
        if self.grid_points < 4 {
            return bad("grid_points must be at least 4".into());
        }
        let t = &self.tolerances;
        if [t.table1, t.bound, t.frontier, t.maslov].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("tolerances must be non-negative".into());
        }
        if !(self.fit.floor > 0.0 && self.fit.floor < self.fit.cap) {
            return bad("fit window needs 0 < floor < cap".into());
        }
        if self.maslov.stride == 0 || !(self.maslov.c > 0.0) {
            return bad("maslov needs c > 0 and stride >= 1".into());
        }
        self.boundary_condition()?;
        Ok(())
    }

    /// Modes to analyse, ascending and distinct.
    pub fn selected_modes(&self) -> Vec<usize> {
        let mut m = self.mode_list.clone().unwrap_or_else(|| (1..=self.modes).collect());
        m.sort_unstable();
        m.dedup();
        m
    }

    /// Eigenpairs needed to cover the selected modes.
    pub fn nev(&self) -> usize {
        self.selected_modes().last().copied().unwrap_or(1)
    }

    pub fn boundary_condition(&self) -> Result<BoundaryCondition, CliError> {
        let mut bc = match self.bc {
            BcKind::Dirichlet => BoundaryCondition::dirichlet(),
            BcKind::Neumann => BoundaryCondition::neumann(),
        };
        for (k, kind) in &self.bc_markers {
            let m: u16 = k.parse().map_err(|_| CliError::Validation(format!("bc marker `{k}` is not a number")))?;
            bc = bc.with(Marker(m), *kind);
        }
        Ok(bc)
    }

    pub fn domain(&self) -> Result<DomainSpec, CliError> {
        let spec = match &self.domain_file {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                DomainConfig::from_toml(&text)?.build()?
            }
            None => build_catalog_domain(self.shape, &self.params)?,
        };
        Ok(match self.rotate_to {
            Some(d) => rotate_to_axis(&spec, d)?,
            None => spec,
        })
    }

    /// Output directory, created if needed, under the root from the environment when relative.
    pub fn output_path(&self) -> Result<PathBuf, CliError> {
        let dir = match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        };
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }
}
