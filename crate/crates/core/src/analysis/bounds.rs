use super::{AnalysisError, DecayProfile};
use crate::geometry::ThresholdReport;
use serde::{Deserialize, Serialize};

/// Shape of the curve fitted to a subregion profile.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `ln J` linear in `x0`.
    #[default]
    Exponential,
    /// One transverse mode of a branch with a Dirichlet end at the last grid point:
    /// `J ~ sinh(2 g L)/(4 g) - L/2`, `L` the distance to the end. Reduces to
    /// `exp(-2 g x0)` far from the end, and removes the end steepening otherwise.
    DirichletEnd,
}

/// Points used for rate fits: relative values in `[floor, cap]`, optionally clipped to a
/// coordinate range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitWindow {
    pub floor: f64,
    pub cap: f64,
    pub x_range: Option<(f64, f64)>,
    pub model: FitModel,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow { floor: 1e-9, cap: 1e-1, x_range: None, model: FitModel::Exponential }
    }
}

impl FitWindow {
    fn in_range(&self, x: f64) -> bool {
        self.x_range.map_or(true, |(lo, hi)| x >= lo && x <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Exponential model: minus the least-squares slope of `ln value` against `x0`.
    /// Dirichlet-end model: `2 g` of the best fit.
    pub rate: f64,
    pub window: (f64, f64),
    pub r2: f64,
    pub points: usize,
    pub model: FitModel,
}

/// `ln(sinh t - t)`, accurate for small and large `t`.
fn ln_sinh_minus_id(t: f64) -> f64 {
    if t < 0.5 {
        let t2 = t * t;
        (t2 * t / 6.0 * (1.0 + t2 / 20.0 * (1.0 + t2 / 42.0 * (1.0 + t2 / 72.0 * (1.0 + t2 / 110.0))))).ln()
    } else {
        t - std::f64::consts::LN_2 + (-(-2.0 * t).exp() - 2.0 * t * (-t).exp()).ln_1p()
    }
}

/// Sum of squared log residuals with the amplitude eliminated in closed form.
struct EndModelCost<'a> {
    pts: &'a [(f64, f64)],
    end: f64,
}

impl EndModelCost<'_> {
    fn residuals(&self, g: f64) -> Vec<f64> {
        let shape: Vec<f64> = self.pts.iter().map(|(x, _)| ln_sinh_minus_id(2.0 * g * (self.end - x)) - (4.0 * g).ln()).collect();
        let c = self.pts.iter().zip(&shape).map(|((_, y), s)| y - s).sum::<f64>() / self.pts.len() as f64;
        self.pts.iter().zip(&shape).map(|((_, y), s)| y - s - c).collect()
    }
}

impl argmin::core::CostFunction for EndModelCost<'_> {
    type Param = f64;
    type Output = f64;
    fn cost(&self, g: &f64) -> Result<f64, argmin::core::Error> {
        Ok(self.residuals(*g).iter().map(|r| r * r).sum())
    }
}

pub fn fit_decay_rate(profile: &DecayProfile, window: &FitWindow) -> Result<RateFit, AnalysisError> {
    let v0 = profile.values.first().copied().unwrap_or(0.0);
    let end = profile.x0.last().copied().unwrap_or(0.0);
    let pts: Vec<(f64, f64)> = profile
        .x0
        .iter()
        .zip(&profile.values)
        .filter(|(x, v)| {
            v0 > 0.0 && **v > 0.0 && **x < end && window.in_range(**x) && {
                let r = **v / v0;
                r >= window.floor && r <= window.cap
            }
        })
        .map(|(x, v)| (*x, v.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(AnalysisError::EmptyWindow(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(AnalysisError::EmptyWindow(1));
    }
    let slope_rate = -sxy / sxx;
    let window_span = (pts[0].0, pts[pts.len() - 1].0);
    let (rate, sse) = match window.model {
        FitModel::Exponential => (slope_rate, syy - sxy * sxy / sxx),
        FitModel::DirichletEnd => {
            // The end only steepens the profile, so the exponential slope bounds 2g from above.
            let cost = EndModelCost { pts: &pts, end };
            let hi = 0.5 * slope_rate.max(1e-3) * 1.05 + 1e-3;
            let solver = argmin::solver::brent::BrentOpt::new(1e-9, hi).set_tolerance(1e-12, 1e-12);
            let res = argmin::core::Executor::new(EndModelCost { pts: &pts, end }, solver)
                .configure(|s| s.max_iters(200))
                .run()
                .map_err(|e| AnalysisError::Output(format!("rate fit: {e}")))?;
            let g = res.state.best_param.unwrap_or(hi);
            (2.0 * g, cost.residuals(g).iter().map(|r| r * r).sum())
        }
    };
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RateFit { rate, window: window_span, r2, points: pts.len(), model: window.model })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x0: f64,
    /// Profile value over bound value.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mode: usize,
    pub lambda: f64,
    pub mu: f64,
    pub applicable: bool,
    pub non_increasing: bool,
    /// `sqrt(mu - lambda)` when the mode lies below the threshold.
    pub gamma: Option<f64>,
    /// `2 gamma`, the rate for non-increasing branches.
    pub sharp_rate: Option<f64>,
    /// `sqrt(2) gamma`, guaranteed for any branch.
    pub hard_rate: Option<f64>,
    /// `value(0) exp(-2 gamma x0)` on the profile grid.
    pub bound: Option<Vec<f64>>,
    pub tolerance: f64,
    pub hard_violations: Vec<Violation>,
    pub sharp_violations: Vec<Violation>,
    pub fit: Option<RateFit>,
    pub fit_window: FitWindow,
}

/// Checks the profile against both exponential bounds. Grid points whose relative value is
/// below the window floor are left out: there the discretization error dominates.
pub fn bound_report(profile: &DecayProfile, threshold: &ThresholdReport, tolerance: f64, window: &FitWindow) -> BoundReport {
    let (mu, non_increasing) = (threshold.mu, threshold.non_increasing);
    let lambda = profile.lambda;
    let applicable = lambda < mu;
    let gamma = applicable.then(|| (mu - lambda).sqrt());
    let v0 = profile.values.first().copied().unwrap_or(0.0);
    let check = |rate: f64| -> Vec<Violation> {
        profile
            .x0
            .iter()
            .zip(&profile.values)
            .filter(|(x, v)| window.in_range(**x) && v0 > 0.0 && **v / v0 >= window.floor)
            .filter_map(|(x, v)| {
                let b = v0 * (-rate * x).exp();
                (*v > b * (1.0 + tolerance)).then_some(Violation { x0: *x, ratio: v / b })
            })
            .collect()
    };
    let (hard_violations, sharp_violations, bound) = match gamma {
        Some(g) => (
            check(std::f64::consts::SQRT_2 * g),
            check(2.0 * g),
            Some(profile.x0.iter().map(|x| v0 * (-2.0 * g * x).exp()).collect()),
        ),
        None => (Vec::new(), Vec::new(), None),
    };
    BoundReport {
        mode: profile.mode,
        lambda,
        mu,
        applicable,
        non_increasing,
        gamma,
        sharp_rate: gamma.map(|g| 2.0 * g),
        hard_rate: gamma.map(|g| std::f64::consts::SQRT_2 * g),
        bound,
        tolerance,
        hard_violations,
        sharp_violations,
        fit: fit_decay_rate(profile, window).ok(),
        fit_window: *window,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaslovPoint {
    pub x0: f64,
    /// Second difference of `I`.
    pub lhs: f64,
    /// `c gamma^2 I`.
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaslovReport {
    pub c: f64,
    pub gamma: f64,
    pub stride: usize,
    pub tolerance: f64,
    pub points: Vec<MaslovPoint>,
    pub pass_fraction: f64,
}

/// `I'' >= c gamma^2 I` on every `stride`-th grid point, two points trimmed at each end of the
/// coarse grid. A point passes when `lhs >= (1 - tolerance) rhs`.
pub fn maslov_check(profile_i: &DecayProfile, mu: f64, c: f64, stride: usize, tolerance: f64) -> Result<MaslovReport, AnalysisError> {
    if profile_i.lambda >= mu {
        return Err(AnalysisError::NotApplicable { lambda: profile_i.lambda, mu });
    }
    let stride = stride.max(1);
    let xs: Vec<f64> = profile_i.x0.iter().step_by(stride).copied().collect();
    let vs: Vec<f64> = profile_i.values.iter().step_by(stride).copied().collect();
    if xs.len() < 5 {
        return Err(AnalysisError::Grid(format!("{} coarse points, at least 5 are needed", xs.len())));
    }
    let h = xs[1] - xs[0];
    if xs.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(AnalysisError::Grid("Maslov check needs a uniform grid".into()));
    }
    let gamma = (mu - profile_i.lambda).sqrt();
    let points: Vec<MaslovPoint> = (2..xs.len() - 2)
        .map(|k| {
            let lhs = (vs[k + 1] - 2.0 * vs[k] + vs[k - 1]) / (h * h);
            let rhs = c * gamma * gamma * vs[k];
            MaslovPoint { x0: xs[k], lhs, rhs, pass: lhs >= (1.0 - tolerance) * rhs }
        })
        .collect();
    let pass_fraction = points.iter().filter(|p| p.pass).count() as f64 / points.len().max(1) as f64;
    Ok(MaslovReport { c, gamma, stride, tolerance, points, pass_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{CoordinateKind, ProfileKind};

    fn th(mu: f64) -> ThresholdReport {
        ThresholdReport { mu, argmin_x: 0.0, grid: Vec::new(), non_increasing: true, eligible_count: 0 }
    }

    fn synthetic(f: impl Fn(f64) -> f64, lambda: f64, kind: ProfileKind) -> DecayProfile {
        let x0: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        DecayProfile {
            mode: 1,
            lambda,
            values: x0.iter().map(|&x| f(x)).collect(),
            x0,
            kind,
            coordinate: CoordinateKind::Cartesian,
        }
    }

    #[test]
    fn exact_exponential_fit() {
        let p = synthetic(|x| (-10.0 * x).exp(), 0.0, ProfileKind::Subregion);
        let f = fit_decay_rate(&p, &FitWindow::default()).unwrap();
        assert!((f.rate - 10.0).abs() < 1e-9);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(f.window.0 > 0.22 && f.window.0 < 0.24);
    }

    #[test]
    fn dirichlet_end_fit_recovers_the_transverse_rate() {
        let g: f64 = 2.4;
        let p = synthetic(|x| { let l = 1.0 - x; (2.0 * g * l).sinh() / (4.0 * g) - l / 2.0 }, 0.0, ProfileKind::Subregion);
        let exp = fit_decay_rate(&p, &FitWindow::default()).unwrap();
        assert!(exp.rate > 2.0 * 2.0 * g);
        let w = FitWindow { model: FitModel::DirichletEnd, ..Default::default() };
        let f = fit_decay_rate(&p, &w).unwrap();
        assert!((f.rate - 2.0 * g).abs() < 1e-6, "{}", f.rate);
        assert!(f.r2 > 1.0 - 1e-12);
        // Far from the end both models agree.
        let q = synthetic(|x| (-40.0 * x).exp(), 0.0, ProfileKind::Subregion);
        let f = fit_decay_rate(&q, &FitWindow { x_range: Some((0.0, 0.5)), ..w }).unwrap();
        assert!((f.rate - 40.0).abs() < 0.05, "{}", f.rate);
    }

    #[test]
    fn series_branch_of_ln_sinh_matches_direct() {
        for t in [0.3_f64, 0.45, 0.5, 0.55, 1.0] {
            let direct = (t.sinh() - t).ln();
            assert!((ln_sinh_minus_id(t) - direct).abs() < 1e-10, "{t}");
        }
    }

    #[test]
    fn flat_profile_has_no_window() {
        let p = synthetic(|_| 1.0, 0.0, ProfileKind::Subregion);
        assert!(matches!(fit_decay_rate(&p, &FitWindow::default()), Err(AnalysisError::EmptyWindow(0))));
    }

    #[test]
    fn bounds_flag_slow_profiles_only() {
        let mu = 100.0;
        let fast = synthetic(|x| (-25.0 * x).exp(), 0.0, ProfileKind::Subregion);
        let r = bound_report(&fast, &th(mu), 0.02, &FitWindow::default());
        assert!(r.applicable && r.hard_violations.is_empty() && r.sharp_violations.is_empty());
        // Rate 15 lies between sqrt(2) * 10 and 2 * 10.
        let mid = synthetic(|x| (-15.0 * x).exp(), 0.0, ProfileKind::Subregion);
        let r = bound_report(&mid, &th(mu), 0.02, &FitWindow::default());
        assert!(r.hard_violations.is_empty() && !r.sharp_violations.is_empty());
        let above = synthetic(|_| 1.0, 120.0, ProfileKind::Subregion);
        let r = bound_report(&above, &th(mu), 0.02, &FitWindow::default());
        assert!(!r.applicable && r.bound.is_none() && r.gamma.is_none());
    }

    #[test]
    fn vanishing_gap_gives_a_flat_bound() {
        let p = synthetic(|x| 1.0 - 0.5 * x, 100.0 - 1e-10, ProfileKind::Subregion);
        let r = bound_report(&p, &th(100.0), 0.02, &FitWindow::default());
        assert!(r.applicable && r.hard_violations.is_empty());
    }

    #[test]
    fn maslov_equality_and_failure() {
        let (mu, lambda) = (100.0, 36.0);
        let g = 8.0;
        let cosh = synthetic(|x| 1e-3 * (2.0 * g * (1.0 - x)).cosh(), lambda, ProfileKind::CrossSection);
        let r = maslov_check(&cosh, mu, 4.0, 1, 0.01).unwrap();
        assert_eq!(r.pass_fraction, 1.0);
        let flat = synthetic(|_| 1.0, lambda, ProfileKind::CrossSection);
        assert_eq!(maslov_check(&flat, mu, 4.0, 4, 0.2).unwrap().pass_fraction, 0.0);
        assert!(maslov_check(&flat, 30.0, 4.0, 4, 0.2).is_err());
        let short = DecayProfile { x0: flat.x0[..8].to_vec(), values: flat.values[..8].to_vec(), ..flat };
        assert!(maslov_check(&short, mu, 4.0, 4, 0.2).is_err());
    }
}
