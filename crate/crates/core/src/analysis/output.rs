//! CSV per mode (`x0,J,bound,I`) and a JSON summary of bound reports.

use super::{AnalysisError, BoundReport, DecayProfile};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Columns `x0, J, bound, I`; `bound` and `I` are left empty when absent.
pub fn write_profiles_csv<W: Write>(
    out: W,
    j: &DecayProfile,
    bound: Option<&[f64]>,
    i: Option<&DecayProfile>,
) -> Result<(), AnalysisError> {
    let err = |e: csv::Error| AnalysisError::Output(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x0", "J", "bound", "I"]).map_err(err)?;
    for (k, x) in j.x0.iter().enumerate() {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
        w.write_record([
            format!("{x}"),
            format!("{:e}", j.values[k]),
            opt(bound.map(|b| b[k])),
            opt(i.map(|p| p.values[k])),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| AnalysisError::Output(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub mode: usize,
    pub lambda: f64,
    pub mu: f64,
    pub applicable: bool,
    pub gamma: Option<f64>,
    pub sharp_rate: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub fit_r2: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub hard_violations: usize,
    pub sharp_violations: usize,
}

impl From<&BoundReport> for BoundSummary {
    fn from(r: &BoundReport) -> Self {
        BoundSummary {
            mode: r.mode,
            lambda: r.lambda,
            mu: r.mu,
            applicable: r.applicable,
            gamma: r.gamma,
            sharp_rate: r.sharp_rate,
            fitted_rate: r.fit.as_ref().map(|f| f.rate),
            fit_r2: r.fit.as_ref().map(|f| f.r2),
            fit_window: r.fit.as_ref().map(|f| f.window),
            hard_violations: r.hard_violations.len(),
            sharp_violations: r.sharp_violations.len(),
        }
    }
}

pub fn summary_json(reports: &[BoundReport]) -> String {
    let rows: Vec<BoundSummary> = reports.iter().map(BoundSummary::from).collect();
    serde_json::to_string_pretty(&rows).expect("summary rows serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{bound_report, CoordinateKind, FitWindow, ProfileKind};
    use crate::geometry::ThresholdReport;

    #[test]
    fn csv_and_json_layout() {
        let x0: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let j = DecayProfile {
            mode: 2,
            lambda: 10.0,
            values: x0.iter().map(|x| (-12.0 * x).exp()).collect(),
            x0,
            kind: ProfileKind::Subregion,
            coordinate: CoordinateKind::Cartesian,
        };
        let th = ThresholdReport { mu: 46.0, argmin_x: 0.0, grid: vec![], non_increasing: true, eligible_count: 0 };
        let r = bound_report(&j, &th, 0.02, &FitWindow::default());
        let mut buf = Vec::new();
        write_profiles_csv(&mut buf, &j, r.bound.as_deref(), None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x0,J,bound,I\n0,1e0,1e0,\n"));
        assert_eq!(text.lines().count(), 22);
        let v: serde_json::Value = serde_json::from_str(&summary_json(&[r])).unwrap();
        assert_eq!(v[0]["mode"], 2);
        assert_eq!(v[0]["gamma"], 6.0);
        assert_eq!(v[0]["hard_violations"], 0);
    }
}
