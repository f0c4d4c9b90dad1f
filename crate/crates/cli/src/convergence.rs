use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{write_json, write_text};
use crate::svg::{Plot, Style};
use branchdecay::analysis::{divergence_frontier, profile_j, uniform_grid, DecayProfile, FrontierReport};
use branchdecay::eigen::solve_on_mesh;
use branchdecay::mesh::mesh_at_level;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Serialize)]
struct LevelInfo {
    level: u32,
    triangles: usize,
    eigenvalues: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ModeFrontier {
    mode: usize,
    #[serde(flatten)]
    report: FrontierReport,
}

#[derive(Debug, Serialize)]
struct ConvergenceSummary {
    domain: String,
    levels: Vec<LevelInfo>,
    modes: Vec<ModeFrontier>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let spec = cfg.domain()?;
    let dir = cfg.output_path()?;
    let mut levels = cfg.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    if levels.is_empty() {
        return Err(CliError::Validation("no levels given".into()));
    }
    let modes = cfg.selected_modes();
    let bc = cfg.boundary_condition()?;
    let grid = uniform_grid(&spec, cfg.grid_points);
    let per_level: Vec<Result<(LevelInfo, Vec<DecayProfile>), CliError>> = levels
        .par_iter()
        .map(|&k| {
            let mesh = mesh_at_level(&spec, cfg.base_h, k)?;
            let sol = solve_on_mesh(&mesh, &bc, cfg.nev())?;
            let profiles = modes.iter().map(|&m| profile_j(&mesh, &sol.pairs[m - 1], &spec, &grid)).collect::<Result<Vec<_>, _>>()?;
            let info = LevelInfo { level: k, triangles: mesh.num_triangles(), eigenvalues: sol.pairs.iter().map(|p| p.lambda).collect() };
            Ok((info, profiles))
        })
        .collect();
    let per_level: Vec<(LevelInfo, Vec<DecayProfile>)> = per_level.into_iter().collect::<Result<_, _>>()?;

    let mut frontiers = Vec::new();
    for (mi, &m) in modes.iter().enumerate() {
        let curves: Vec<(u32, DecayProfile)> = per_level.iter().map(|(info, p)| (info.level, p[mi].clone())).collect();
        let report = divergence_frontier(&curves, cfg.tolerances.frontier)?;
        if let Some(w) = &report.warning {
            eprintln!("mode {m}: {w}");
        }
        for p in &report.pairs {
            println!(
                "mode {m}: levels {} -> {}: {}",
                p.coarse,
                p.fine,
                p.frontier.map_or(format!("within {:.0}% everywhere (max {:.2e})", 100.0 * cfg.tolerances.frontier, p.max_rel_diff), |x| {
                    format!("diverge beyond x0 = {x:.4}")
                })
            );
        }

        let mut csv = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["x0".to_string()];
        header.extend(curves.iter().map(|(k, _)| format!("J_level{k}")));
        csv.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
        for (g, x) in grid.iter().enumerate() {
            let mut rec = vec![x.to_string()];
            rec.extend(curves.iter().map(|(_, p)| format!("{:e}", p.values[g])));
            csv.write_record(&rec).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = csv.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        write_text(&dir.join(format!("convergence_mode_{m:02}.csv")), &String::from_utf8(bytes).expect("csv is utf-8"))?;

        let mut plot = Plot::new(format!("{}: mode {m} across levels", spec.name), "x0", "J(x0)", true);
        plot.y_floor = 1e-30;
        for (i, (k, p)) in curves.iter().enumerate() {
            let style = if i + 1 == curves.len() { Style::Line } else { Style::Markers };
            plot.add(format!("level {k}"), p.x0.iter().copied().zip(p.values.iter().copied()).collect(), style);
        }
        write_text(&dir.join(format!("convergence_mode_{m:02}.svg")), &plot.render())?;
        frontiers.push(ModeFrontier { mode: m, report });
    }
    let summary = ConvergenceSummary {
        domain: spec.name.clone(),
        levels: per_level.into_iter().map(|(i, _)| i).collect(),
        modes: frontiers,
    };
    write_json(&dir.join("convergence.json"), &summary)
}
