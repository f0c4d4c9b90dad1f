//! Per-mode analysis shared by `decay`, `check` and `neumann`, and the file writers.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::svg::{Plot, Style};
use branchdecay::analysis::{
    bound_report, fit_decay_rate, maslov_check, profile_i, profile_j, symmetry_classify_span, uniform_grid, write_profiles_csv,
    BoundSummary, DecayProfile, SymmetryClass,
};
use branchdecay::eigen::EigenPair;
use branchdecay::geometry::{BranchAxis, DomainSpec, ThresholdReport};
use branchdecay::mesh::Mesh;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    #[serde(flatten)]
    pub bound: BoundSummary,
    pub cluster: Option<usize>,
    pub symmetry: Option<SymmetryClass>,
    /// `2 sqrt(4 mu - lambda)` for modes odd about the branch's center line.
    pub improved_rate: Option<f64>,
    pub maslov_pass_fraction: Option<f64>,
    /// Exponential fit with `r^2` at or above the configured threshold.
    pub decays: bool,
}

pub struct ModeOutput {
    pub report: ModeReport,
    pub j: DecayProfile,
    pub i: DecayProfile,
    pub bound_curve: Option<Vec<f64>>,
}

/// Whether the domain's mirror line runs along a straight branch axis.
fn mirror_is_center_line(spec: &DomainSpec) -> bool {
    match (&spec.mirror, &spec.axis) {
        (Some(m), BranchAxis::Cartesian { origin, direction, .. }) => {
            m.distance(*origin) < 1e-9 && m.direction.cross(*direction).abs() < 1e-9 * m.direction.norm() * direction.norm()
        }
        _ => false,
    }
}

/// Profiles, bounds, fits and symmetry for each selected mode. `with_bounds` is false when the
/// theory does not apply (Neumann walls).
pub fn analyse_modes(
    spec: &DomainSpec,
    mesh: &Mesh,
    pairs: &[EigenPair],
    modes: &[usize],
    threshold: &ThresholdReport,
    cfg: &ExperimentConfig,
    with_bounds: bool,
) -> Result<Vec<ModeOutput>, CliError> {
    if let Some(&m) = modes.iter().find(|&&m| m > pairs.len()) {
        return Err(CliError::Validation(format!("mode {m} requested but only {} computed", pairs.len())));
    }
    let grid = uniform_grid(spec, cfg.grid_points);
    let center_line = mirror_is_center_line(spec);
    modes
        .par_iter()
        .map(|&m| {
            let pair = &pairs[m - 1];
            let j = profile_j(mesh, pair, spec, &grid)?;
            let i = profile_i(mesh, pair, spec, &grid)?;
            let symmetry = match &spec.mirror {
                Some(line) => {
                    let span: Vec<&EigenPair> = match pair.cluster {
                        Some(c) => pairs.iter().filter(|p| p.cluster == Some(c)).collect(),
                        None => vec![pair],
                    };
                    Some(symmetry_classify_span(mesh, &span, line)?.class)
                }
                None => None,
            };
            let r = bound_report(&j, threshold, cfg.tolerances.bound, &cfg.fit);
            let mut bound = BoundSummary::from(&r);
            let bound_curve = if with_bounds { r.bound.clone() } else { None };
            if !with_bounds {
                (bound.applicable, bound.gamma, bound.sharp_rate) = (false, None, None);
                (bound.hard_violations, bound.sharp_violations) = (0, 0);
            }
            let exp_fit = fit_decay_rate(&j, &branchdecay::analysis::FitWindow { model: Default::default(), ..cfg.fit }).ok();
            let decays = exp_fit.as_ref().is_some_and(|f| f.r2 >= cfg.tolerances.decay_r2);
            let improved_rate = (with_bounds && center_line && symmetry == Some(SymmetryClass::Antisymmetric))
                .then(|| 4.0 * threshold.mu - pair.lambda)
                .filter(|g2| *g2 > 0.0)
                .map(|g2| 2.0 * g2.sqrt());
            let maslov_pass_fraction = (with_bounds && bound.applicable)
                .then(|| maslov_check(&i, threshold.mu, cfg.maslov.c, cfg.maslov.stride, cfg.tolerances.maslov).ok())
                .flatten()
                .map(|r| r.pass_fraction);
            Ok(ModeOutput {
                report: ModeReport { bound, cluster: pair.cluster, symmetry, improved_rate, maslov_pass_fraction, decays },
                j,
                i,
                bound_curve,
            })
        })
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_text(path, &(serde_json::to_string_pretty(value).expect("report serializes") + "\n"))
}

/// `mode_NN.csv` per mode and one log plot of the normalized profiles with their bounds.
pub fn write_mode_outputs(dir: &Path, outputs: &[ModeOutput], title: &str, x_label: &str) -> Result<(), CliError> {
    let mut plot = Plot::new(title, x_label, "J(x0) / J(0)", true);
    for o in outputs {
        let path = dir.join(format!("mode_{:02}.csv", o.report.bound.mode));
        let file = std::fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        write_profiles_csv(file, &o.j, o.bound_curve.as_deref(), Some(&o.i))?;
        let v0 = o.j.values[0];
        if v0 > 0.0 {
            let n = o.report.bound.mode;
            plot.add(format!("n = {n}"), o.j.x0.iter().zip(&o.j.values).map(|(x, v)| (*x, v / v0)).collect(), Style::Markers);
            if let Some(b) = &o.bound_curve {
                plot.add(format!("bound n = {n}"), o.j.x0.iter().zip(b).map(|(x, v)| (*x, v / v0)).collect(), Style::Dashed);
            }
        }
    }
    write_text(&dir.join("decay.svg"), &plot.render())
}
