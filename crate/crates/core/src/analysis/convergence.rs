use super::{AnalysisError, DecayProfile};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPair {
    pub coarse: u32,
    pub fine: u32,
    /// First grid point where the two levels differ by more than the threshold.
    pub frontier: Option<f64>,
    /// Largest relative difference before the frontier (over the whole grid without one).
    pub max_rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierReport {
    pub threshold: f64,
    pub pairs: Vec<LevelPair>,
    pub warning: Option<String>,
}

/// Compares profiles of consecutive refinement levels on a shared grid.
pub fn divergence_frontier(levels: &[(u32, DecayProfile)], threshold: f64) -> Result<FrontierReport, AnalysisError> {
    let mut sorted: Vec<&(u32, DecayProfile)> = levels.iter().collect();
    sorted.sort_by_key(|(k, _)| *k);
    if let Some((_, first)) = sorted.first() {
        if sorted.iter().any(|(_, p)| p.x0 != first.x0) {
            return Err(AnalysisError::Grid("levels must share one grid".into()));
        }
    }
    let pairs: Vec<LevelPair> = sorted
        .windows(2)
        .map(|w| {
            let (c, f) = (&w[0].1, &w[1].1);
            let mut max_rel_diff: f64 = 0.0;
            let mut frontier = None;
            for ((x, vc), vf) in c.x0.iter().zip(&c.values).zip(&f.values) {
                let scale = vc.abs().max(vf.abs());
                let rel = if scale > 0.0 { (vc - vf).abs() / scale } else { 0.0 };
                if rel > threshold {
                    frontier = Some(*x);
                    break;
                }
                max_rel_diff = max_rel_diff.max(rel);
            }
            LevelPair { coarse: w[0].0, fine: w[1].0, frontier, max_rel_diff }
        })
        .collect();
    let warning = (sorted.len() < 2).then(|| "fewer than two levels: no frontier to report".to_string());
    Ok(FrontierReport { threshold, pairs, warning })
}
