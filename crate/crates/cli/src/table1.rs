use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{write_json, write_text};
use branchdecay::eigen::solve_on_mesh;
use branchdecay::geometry::{build_catalog_domain, ShapeId};
use branchdecay::mesh::mesh_at_level;
use branchdecay::oracle::reference_eigenvalues;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write;

pub const TABLE_MODES: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct ShapeRow {
    pub shape: ShapeId,
    pub level: u32,
    pub triangles: usize,
    pub eigenvalues: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub rel_delta: Option<Vec<f64>>,
    pub max_rel_delta: Option<f64>,
    pub error: Option<String>,
}

fn solve_shape(shape: ShapeId, cfg: &ExperimentConfig) -> ShapeRow {
    let reference = reference_eigenvalues(shape).map(|r| r.to_vec());
    let mut row = ShapeRow {
        shape,
        level: cfg.level,
        triangles: 0,
        eigenvalues: Vec::new(),
        reference: reference.clone(),
        rel_delta: None,
        max_rel_delta: None,
        error: None,
    };
    let run = || -> Result<(usize, Vec<f64>), String> {
        let spec = build_catalog_domain(shape, &cfg.params).map_err(|e| e.to_string())?;
        let mesh = mesh_at_level(&spec, cfg.base_h, cfg.level).map_err(|e| e.to_string())?;
        let sol = solve_on_mesh(&mesh, &cfg.boundary_condition().map_err(|e| e.to_string())?, TABLE_MODES).map_err(|e| e.to_string())?;
        Ok((mesh.num_triangles(), sol.pairs.iter().map(|p| p.lambda).collect()))
    };
    match run() {
        Ok((tri, ev)) => {
            row.triangles = tri;
            if let Some(r) = &reference {
                let d: Vec<f64> = ev.iter().zip(r).map(|(l, r)| (l - r) / r).collect();
                row.max_rel_delta = d.iter().map(|v| v.abs()).reduce(f64::max);
                row.rel_delta = Some(d);
            }
            row.eigenvalues = ev;
        }
        Err(e) => row.error = Some(e),
    }
    row
}

fn render(rows: &[ShapeRow]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:>3}", "n");
    for r in rows {
        let _ = write!(s, " {:>16}", format!("{} (delta %)", r.shape));
    }
    s.push('\n');
    for n in 0..TABLE_MODES {
        let _ = write!(s, "{:>3}", n + 1);
        for r in rows {
            let cell = match (r.eigenvalues.get(n), r.rel_delta.as_ref().map(|d| d[n])) {
                (Some(l), Some(d)) => format!("{l:8.2} ({:+.2})", 100.0 * d),
                (Some(l), None) => format!("{l:8.2}"),
                _ => "-".into(),
            };
            let _ = write!(s, " {cell:>16}");
        }
        s.push('\n');
    }
    s
}

pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let shapes: Vec<ShapeId> = if cfg.shapes.is_empty() { ShapeId::TABLE.to_vec() } else { cfg.shapes.clone() };
    let dir = cfg.output_path()?;
    let rows: Vec<ShapeRow> = shapes.par_iter().map(|s| solve_shape(*s, cfg)).collect();
    print!("{}", render(&rows));

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["n", "shape", "lambda", "reference", "rel_delta"]).map_err(|e| CliError::Io(e.to_string()))?;
    for r in &rows {
        for (n, l) in r.eigenvalues.iter().enumerate() {
            let rf = r.reference.as_ref().map_or(String::new(), |v| v[n].to_string());
            let d = r.rel_delta.as_ref().map_or(String::new(), |v| format!("{:e}", v[n]));
            csv.write_record([(n + 1).to_string(), r.shape.to_string(), l.to_string(), rf, d]).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    let bytes = csv.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_text(&dir.join("table1.csv"), &String::from_utf8(bytes).expect("csv is utf-8"))?;
    write_json(&dir.join("table1.json"), &rows)?;

    let failed: Vec<String> = rows.iter().filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.shape))).collect();
    if !failed.is_empty() {
        return Err(CliError::Solver(failed.join("; ")));
    }
    if cfg.level >= cfg.tolerances.table1_gate_level {
        let over: Vec<String> = rows
            .iter()
            .filter(|r| r.max_rel_delta.is_some_and(|d| d > cfg.tolerances.table1))
            .map(|r| format!("{} ({:.2}%)", r.shape, 100.0 * r.max_rel_delta.unwrap()))
            .collect();
        if !over.is_empty() {
            return Err(CliError::Tolerance(format!(
                "relative deviation above {:.2}% for {}",
                100.0 * cfg.tolerances.table1,
                over.join(", ")
            )));
        }
    } else {
        eprintln!("level {} is below the gate level {}; deviations are informational", cfg.level, cfg.tolerances.table1_gate_level);
    }
    Ok(())
}
