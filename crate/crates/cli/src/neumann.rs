use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{analyse_modes, write_json, write_mode_outputs, ModeReport};
use branchdecay::eigen::solve_on_mesh;
use branchdecay::fem::BoundaryCondition;
use branchdecay::geometry::threshold;
use branchdecay::mesh::mesh_at_level;
use serde::Serialize;

#[derive(Debug, Serialize)]
struct NeumannSummary {
    domain: String,
    level: u32,
    triangles: usize,
    decay_r2: f64,
    modes: Vec<ModeReport>,
}

/// Free-membrane modes: symmetry classes and fitted rates, no bound claims.
pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let spec = cfg.domain()?;
    if spec.mirror.is_none() {
        return Err(CliError::Validation(format!("domain `{}` has no mirror symmetry to classify modes by", spec.name)));
    }
    let dir = cfg.output_path()?;
    let mesh = mesh_at_level(&spec, cfg.base_h, cfg.level)?;
    let sol = solve_on_mesh(&mesh, &BoundaryCondition::neumann(), cfg.nev())?;
    let th = threshold(&spec, crate::decay::THRESHOLD_SAMPLES)?;
    let outputs = analyse_modes(&spec, &mesh, &sol.pairs, &cfg.selected_modes(), &th, cfg, false)?;
    println!("{:>4} {:>12} {:>14} {:>10} {:>9} {:>7}", "n", "lambda", "symmetry", "fit", "r2", "decays");
    for o in &outputs {
        let b = &o.report.bound;
        println!(
            "{:>4} {:>12.4e} {:>14} {:>10} {:>9} {:>7}",
            b.mode,
            b.lambda,
            o.report.symmetry.map_or("-".to_string(), |s| format!("{s:?}").to_lowercase()),
            b.fitted_rate.map_or("-".to_string(), |v| format!("{v:.3}")),
            b.fit_r2.map_or("-".to_string(), |v| format!("{v:.5}")),
            if o.report.decays { "yes" } else { "no" },
        );
    }
    write_mode_outputs(&dir, &outputs, &format!("{}: Neumann, level {}", spec.name, cfg.level), "x0")?;
    write_json(
        &dir.join("neumann.json"),
        &NeumannSummary {
            domain: spec.name.clone(),
            level: cfg.level,
            triangles: mesh.num_triangles(),
            decay_r2: cfg.tolerances.decay_r2,
            modes: outputs.into_iter().map(|o| o.report).collect(),
        },
    )
}
