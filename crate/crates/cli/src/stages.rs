//! Single pipeline stages: mesh export and eigenpair computation.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::write_text;
use branchdecay::eigen::{solve_on_mesh, EigenBundle};
use branchdecay::mesh::mesh_at_level;
use std::path::PathBuf;

pub fn mesh_file_name(level: u32) -> String {
    format!("mesh_level{level}.txt")
}

pub fn bundle_file_name(level: u32) -> String {
    format!("eigen_level{level}.txt")
}

pub fn mesh(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let spec = cfg.domain()?;
    let dir = cfg.output_path()?;
    let mesh = mesh_at_level(&spec, cfg.base_h, cfg.level)?;
    let path = dir.join(mesh_file_name(cfg.level));
    mesh.write(&path)?;
    println!(
        "{}: level {}, {} nodes, {} triangles, area {:.12}, fingerprint {}",
        spec.name,
        mesh.level,
        mesh.num_nodes(),
        mesh.num_triangles(),
        mesh.total_area(),
        mesh.fingerprint()
    );
    println!("wrote {}", path.display());
    Ok(path)
}

pub fn solve(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let spec = cfg.domain()?;
    let dir = cfg.output_path()?;
    let mesh = mesh_at_level(&spec, cfg.base_h, cfg.level)?;
    let sol = solve_on_mesh(&mesh, &cfg.boundary_condition()?, cfg.nev())?;
    let path = dir.join(bundle_file_name(cfg.level));
    EigenBundle::from(&sol).write(&path)?;
    let mut csv = String::from("n,lambda,residual,cluster\n");
    for p in &sol.pairs {
        println!("{:>4} {:>14.6} residual {:.1e}{}", p.index, p.lambda, p.residual_norm, p.cluster.map_or(String::new(), |c| format!(" cluster {c}")));
        csv.push_str(&format!("{},{},{:e},{}\n", p.index, p.lambda, p.residual_norm, p.cluster.map_or(String::new(), |c| c.to_string())));
    }
    write_text(&dir.join("eigenvalues.csv"), &csv)?;
    println!("wrote {}", path.display());
    Ok(path)
}
