//! Decay profiles of eigenfunctions along the branch and the checks built on them.

mod bounds;
mod checks;
mod convergence;
mod output;
mod profile;
mod symmetry;

pub use bounds::{bound_report, fit_decay_rate, maslov_check, BoundReport, FitModel, FitWindow, MaslovPoint, MaslovReport, RateFit, Violation};
pub use checks::{bifurcation_criterion, bifurcation_fem, rayleigh_check, BifurcationReport, RayleighReport};
pub use convergence::{divergence_frontier, FrontierReport, LevelPair};
pub use output::{summary_json, write_profiles_csv, BoundSummary};
pub use profile::{profile_i, profile_j, profile_j_with, uniform_grid, Quadrature};
pub use symmetry::{mirror_map, symmetry_classify, symmetry_classify_span, SymmetryClass, SymmetryReport};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("eigenpair does not belong to this mesh: {0}")]
    MeshMismatch(String),
    #[error("bad grid: {0}")]
    Grid(String),
    #[error("fit window holds {0} points, at least 4 are needed")]
    EmptyWindow(usize),
    #[error("mode is not below the threshold (lambda {lambda}, mu {mu})")]
    NotApplicable { lambda: f64, mu: f64 },
    #[error("line is not a symmetry of the mesh: {0}")]
    NotSymmetric(String),
    #[error(transparent)]
    Eigen(#[from] crate::eigen::EigenError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Fem(#[from] crate::fem::FemError),
    #[error("output: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `J(x0)`, mass beyond the section.
    Subregion,
    /// `I(x0)`, mass on the section.
    CrossSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateKind {
    Cartesian,
    ArcLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub mode: usize,
    pub lambda: f64,
    pub x0: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: ProfileKind,
    pub coordinate: CoordinateKind,
}

impl DecayProfile {
    /// Values of several profiles on the same grid added up, e.g. over a degenerate cluster.
    pub fn summed(profiles: &[DecayProfile]) -> Option<DecayProfile> {
        let first = profiles.first()?;
        let mut out = first.clone();
        for p in &profiles[1..] {
            if p.x0 != first.x0 || p.kind != first.kind {
                return None;
            }
            for (o, v) in out.values.iter_mut().zip(&p.values) {
                *o += v;
            }
        }
        Some(out)
    }
}
