use super::AnalysisError;
use crate::eigen::{solve_lowest, EigenError};
use crate::fem::{assemble, BcKind, BoundaryCondition, SparseSymmetric};
use crate::geometry::{threshold, DomainSpec, Marker};
use crate::mesh::Mesh;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighReport {
    /// First eigenvalue of the basic domain alone.
    pub kappa1: f64,
    /// First eigenvalue of the whole domain.
    pub lambda1: f64,
    pub pass: bool,
    pub mu: f64,
    pub basic_below_mu: usize,
    pub domain_below_mu: usize,
    /// Whole domain has at least as many eigenvalues below `mu` as the basic domain.
    pub counts_consistent: bool,
}

/// Number of eigenvalues below `mu`, plus the lowest one.
fn count_below(k: &SparseSymmetric, m: &SparseSymmetric, mu: f64) -> Result<(usize, f64), EigenError> {
    let n = k.dim();
    let mut nev = 12.min(n);
    loop {
        let pairs = solve_lowest(k, m, nev, 0.0)?;
        let below = pairs.iter().filter(|p| p.lambda < mu).count();
        if below < nev || nev == n {
            return Ok((below, pairs[0].lambda));
        }
        nev = (2 * nev).min(n);
    }
}

/// Dirichlet eigenvalues of the basic domain (the mesh's non-branch triangles, closed off at
/// the junction) against those of the whole domain.
pub fn rayleigh_check(spec: &DomainSpec, mesh: &Mesh) -> Result<RayleighReport, AnalysisError> {
    let mu = threshold(spec, 201)?.mu;
    let bc = BoundaryCondition::dirichlet();
    let whole = assemble(mesh, &bc)?;
    let (domain_below_mu, lambda1) = count_below(&whole.stiffness, &whole.mass, mu)?;
    let basic_mesh = mesh.submesh(|t| !mesh.in_branch[t], Marker::BASIC);
    let basic = assemble(&basic_mesh, &bc)?;
    let (basic_below_mu, kappa1) = count_below(&basic.stiffness, &basic.mass, mu)?;
    Ok(RayleighReport {
        kappa1,
        lambda1,
        pass: lambda1 < kappa1,
        mu,
        basic_below_mu,
        domain_below_mu,
        counts_consistent: domain_below_mu >= basic_below_mu,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub b: f64,
    pub h: f64,
    pub w: f64,
    /// Lowest eigenvalue of the `h x w` end rectangle, Neumann on the side facing the channel.
    pub nu1: f64,
    pub mu: f64,
    /// `(b/h)^2 + (b/(2w))^2`; the criterion holds when it exceeds 1.
    pub ratio_sum: f64,
    pub pass: bool,
}

pub fn bifurcation_criterion(b: f64, h: f64, w: f64) -> Result<BifurcationReport, AnalysisError> {
    if !(b > 0.0 && h > 0.0 && w > 0.0) || ![b, h, w].iter().all(|v| v.is_finite()) {
        return Err(AnalysisError::Grid("dimensions must be positive and finite".into()));
    }
    let nu1 = PI * PI / (h * h) + PI * PI / (4.0 * w * w);
    let mu = PI * PI / (b * b);
    Ok(BifurcationReport {
        b,
        h,
        w,
        nu1,
        mu,
        ratio_sum: (b / h).powi(2) + (b / (2.0 * w)).powi(2),
        pass: nu1 > mu,
    })
}

/// FEM value of `nu1` on a structured mesh of the `w` (across) by `h` (along) rectangle:
/// Dirichlet on bottom, right and top, Neumann on the left. `level` halves the cells.
pub fn bifurcation_fem(h: f64, w: f64, level: u32) -> Result<f64, AnalysisError> {
    let base = 4usize << level;
    let (nx, ny) = if w <= h {
        (base, ((base as f64) * h / w).round().max(1.0) as usize)
    } else {
        (((base as f64) * w / h).round().max(1.0) as usize, base)
    };
    let mesh = Mesh::rectangle((0.0, 0.0), (w, h), nx, ny, [Marker(1), Marker(2), Marker(3), Marker(4)]);
    let bc = BoundaryCondition::dirichlet().with(Marker(4), BcKind::Neumann);
    let asm = assemble(&mesh, &bc)?;
    Ok(solve_lowest(&asm.stiffness, &asm.mass, 1, 0.0)?[0].lambda)
}
