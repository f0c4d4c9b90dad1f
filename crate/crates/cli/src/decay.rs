use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{analyse_modes, write_json, write_mode_outputs, ModeOutput, ModeReport};
use branchdecay::eigen::{solve_on_mesh, EigenBundle, EigenPair};
use branchdecay::geometry::{threshold, DomainSpec};
use branchdecay::mesh::{mesh_at_level, Mesh};
use serde::Serialize;
use std::path::Path;

/// Samples used to locate the threshold along the branch.
pub const THRESHOLD_SAMPLES: usize = 201;

#[derive(Debug, Serialize)]
pub struct DecaySummary {
    pub domain: String,
    pub level: u32,
    pub triangles: usize,
    pub bc: String,
    pub mu: f64,
    pub non_increasing: bool,
    /// Eigenvalues below the threshold among those computed.
    pub eligible: usize,
    pub tolerance: f64,
    pub modes: Vec<ModeReport>,
}

fn print_table(outputs: &[ModeOutput]) {
    println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>8} {:>6} {:>14}", "n", "lambda", "2*gamma", "fit", "r2", "hard", "sharp", "symmetry");
    for o in outputs {
        let r = &o.report;
        let b = &r.bound;
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:>4} {:>10.3} {:>10} {:>10} {:>10} {:>8} {:>6} {:>14}",
            b.mode,
            b.lambda,
            opt(b.sharp_rate),
            opt(b.fitted_rate),
            b.fit_r2.map_or("-".to_string(), |v| format!("{v:.5}")),
            if b.applicable { b.hard_violations.to_string() } else { "-".into() },
            if b.applicable { b.sharp_violations.to_string() } else { "-".into() },
            r.symmetry.map_or("-".to_string(), |s| format!("{s:?}").to_lowercase()),
        );
    }
}

fn analyse_and_write(
    cfg: &ExperimentConfig,
    spec: &DomainSpec,
    mesh: &Mesh,
    pairs: &[EigenPair],
    bc: String,
    dir: &Path,
    summary_name: &str,
) -> Result<(), CliError> {
    let th = threshold(spec, THRESHOLD_SAMPLES)?;
    let modes = cfg.selected_modes();
    let outputs = analyse_modes(spec, mesh, pairs, &modes, &th, cfg, true)?;
    print_table(&outputs);
    let x_label = if spec.axis.is_curvilinear() { "arc length x0" } else { "x0" };
    write_mode_outputs(dir, &outputs, &format!("{}: level {}", spec.name, mesh.level), x_label)?;
    let summary = DecaySummary {
        domain: spec.name.clone(),
        level: mesh.level,
        triangles: mesh.num_triangles(),
        bc,
        mu: th.mu,
        non_increasing: th.non_increasing,
        eligible: pairs.iter().filter(|p| p.lambda < th.mu).count(),
        tolerance: cfg.tolerances.bound,
        modes: outputs.iter().map(|o| o.report.clone()).collect(),
    };
    println!("mu = {:.4}, {} computed eigenvalues below it", summary.mu, summary.eligible);
    write_json(&dir.join(summary_name), &summary)?;
    let violating: Vec<String> =
        outputs.iter().filter(|o| o.report.bound.hard_violations > 0).map(|o| o.report.bound.mode.to_string()).collect();
    if !violating.is_empty() {
        return Err(CliError::Tolerance(format!("hard bound violated by modes {}", violating.join(", "))));
    }
    Ok(())
}

pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let spec = cfg.domain()?;
    let dir = cfg.output_path()?;
    let mesh = mesh_at_level(&spec, cfg.base_h, cfg.level)?;
    let bc = cfg.boundary_condition()?;
    let sol = solve_on_mesh(&mesh, &bc, cfg.nev())?;
    analyse_and_write(cfg, &spec, &mesh, &sol.pairs, bc.to_string(), &dir, "summary.json")
}

/// Bounds on stored eigenpairs; the mesh is regenerated from the configuration and must match.
pub fn check(cfg: &ExperimentConfig, bundle_path: &Path) -> Result<(), CliError> {
    let bundle = EigenBundle::read(bundle_path)?;
    let spec = cfg.domain()?;
    let mesh = mesh_at_level(&spec, cfg.base_h, bundle.level)?;
    bundle.check_mesh(&mesh)?;
    let dir = cfg.output_path()?;
    let cfg = ExperimentConfig {
        mode_list: Some(cfg.selected_modes().into_iter().filter(|m| *m <= bundle.pairs.len()).collect()),
        ..cfg.clone()
    };
    cfg.validate()?;
    analyse_and_write(&cfg, &spec, &mesh, &bundle.pairs, bundle.bc.clone(), &dir, "check.json")
}
