//! Lowest eigenpairs of `K u = lambda M u`.
//!
//! Large problems use a thick-restarted block Krylov iteration on the shift-inverted
//! operator `(K - sigma M)^-1 M`, orthogonalized in the `M` inner product. The operator is
//! self-adjoint there, so the projected matrix is symmetric and restarts simply keep the
//! best Ritz vectors. Small problems are solved densely.

mod bundle;

pub use bundle::{EigenBundle, BUNDLE_FORMAT_VERSION};

use crate::fem::{assemble, BoundaryCondition, FemError, FreeMap, SparseSymmetric};
use crate::mesh::Mesh;
use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EigenError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("could not factor K - sigma M below the spectrum (last shift {shift})")]
    Factorization { shift: f64 },
    #[error("only {converged} of {requested} eigenpairs converged after {restarts} restarts")]
    NotConverged { converged: usize, requested: usize, restarts: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("bundle: {0}")]
    Bundle(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenOptions {
    /// Bound on `|(K - s M) u - (lambda - s) M u| / |(K - s M) u|`.
    pub tol: f64,
    /// Vectors added per Krylov step; resolves eigenvalues of multiplicity up to this.
    pub block: usize,
    /// Basis size before a restart (default picked from the number of pairs).
    pub basis: Option<usize>,
    pub max_restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-8, block: 4, basis: None, max_restarts: 300 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// 1-based position in ascending order.
    pub index: usize,
    pub lambda: f64,
    /// `M`-normalized; on a mesh, one value per node with zeros on Dirichlet nodes.
    pub vector: Vec<f64>,
    pub residual_norm: f64,
    /// Index of the first member of a (near-)degenerate group this pair belongs to.
    pub cluster: Option<usize>,
}

/// Relative gap below which neighbouring eigenvalues are treated as one cluster.
pub const CLUSTER_GAP: f64 = 1e-6;

pub fn solve_lowest(
    k: &SparseSymmetric,
    m: &SparseSymmetric,
    nev: usize,
    shift: f64,
) -> Result<Vec<EigenPair>, EigenError> {
    solve_lowest_with(k, m, nev, shift, &EigenOptions::default())
}

pub fn solve_lowest_with(
    k: &SparseSymmetric,
    m: &SparseSymmetric,
    nev: usize,
    shift: f64,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>, EigenError> {
    let n = k.dim();
    if nev == 0 {
        return Err(EigenError::Invalid("at least one eigenpair must be requested".into()));
    }
    if m.dim() != n {
        return Err(EigenError::Invalid("K and M differ in size".into()));
    }
    if nev > n {
        return Err(EigenError::Invalid(format!("{nev} eigenpairs requested from a system of size {n}")));
    }
    if !shift.is_finite() || opts.block == 0 {
        return Err(EigenError::Invalid("shift must be finite and block positive".into()));
    }
    faer::set_global_parallelism(Par::Seq);
    let basis = opts.basis.unwrap_or((2 * nev + 2 * opts.block).max(nev + 24));
    let mut pairs = if n <= basis + opts.block || n <= 64 {
        dense_lowest(k, m, nev, shift)?
    } else {
        let (factor, sigma) = factor_below(k, m, shift)?;
        krylov_lowest(k, m, &factor, sigma, nev, basis, opts)?
    };
    finalize(&mut pairs);
    Ok(pairs)
}

/// Sign convention, indices and cluster flags.
fn finalize(pairs: &mut [EigenPair]) {
    pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    for (i, p) in pairs.iter_mut().enumerate() {
        p.index = i + 1;
        let mut big = 0;
        for (j, v) in p.vector.iter().enumerate() {
            if v.abs() > p.vector[big].abs() {
                big = j;
            }
        }
        if p.vector[big] < 0.0 {
            p.vector.iter_mut().for_each(|v| *v = -*v);
        }
        p.cluster = None;
    }
    let mut start = 0;
    for i in 1..=pairs.len() {
        let joined = i < pairs.len()
            && (pairs[i].lambda - pairs[i - 1].lambda).abs()
                < CLUSTER_GAP * pairs[i - 1].lambda.abs().max(f64::MIN_POSITIVE);
        if !joined {
            if i - start > 1 {
                for p in &mut pairs[start..i] {
                    p.cluster = Some(start + 1);
                }
            }
            start = i;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `|(K - s M) u - (lambda - s) M u| / |(K - s M) u|`; equals `|K u - lambda M u| / |K u|`
/// for `s = 0`.
fn residual(k: &SparseSymmetric, m: &SparseSymmetric, u: &[f64], lambda: f64, s: f64) -> f64 {
    let ku = k.matvec(u);
    let mu = m.matvec(u);
    let shifted: Vec<f64> = ku.iter().zip(&mu).map(|(a, b)| a - s * b).collect();
    let r: Vec<f64> = shifted.iter().zip(&mu).map(|(a, b)| a - (lambda - s) * b).collect();
    let d = norm(&shifted);
    if d == 0.0 {
        norm(&r)
    } else {
        norm(&r) / d
    }
}

/// Shift used in residuals: the given one if it is safely below `lambda`, otherwise one unit
/// below, so that the denominator never vanishes for a null eigenvalue.
fn residual_shift(shift: f64, lambda: f64) -> f64 {
    if shift < lambda - 1e-12 * lambda.abs().max(1.0) {
        shift
    } else {
        lambda - 1.0
    }
}

fn dense(a: &SparseSymmetric) -> Mat<f64> {
    let mut d = Mat::<f64>::zeros(a.dim(), a.dim());
    for i in 0..a.dim() {
        for (j, v) in a.row(i) {
            d[(i, j)] = v;
        }
    }
    d
}

fn dense_lowest(k: &SparseSymmetric, m: &SparseSymmetric, nev: usize, shift: f64) -> Result<Vec<EigenPair>, EigenError> {
    let n = k.dim();
    let md = dense(m);
    let llt = md
        .llt(Side::Lower)
        .map_err(|_| EigenError::Invalid("mass matrix is not positive definite".into()))?;
    let l = llt.L();
    // C = L^-1 K L^-T
    let mut x = dense(k);
    solve_lower_triangular_in_place(l, x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let c = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| EigenError::NotConverged { converged: 0, requested: nev, restarts: 0 })?;
    let mut w = evd.U().to_owned();
    solve_upper_triangular_in_place(l.transpose(), w.as_mut(), Par::Seq);
    let mut pairs = Vec::with_capacity(nev);
    for j in 0..nev {
        let mut u: Vec<f64> = (0..n).map(|i| w[(i, j)]).collect();
        let nm = m.inner(&u, &u).sqrt();
        u.iter_mut().for_each(|v| *v /= nm);
        let lambda = k.inner(&u, &u);
        let residual_norm = residual(k, m, &u, lambda, residual_shift(shift, lambda));
        pairs.push(EigenPair { index: j + 1, lambda, vector: u, residual_norm, cluster: None });
    }
    Ok(pairs)
}

type Factor = faer::sparse::linalg::solvers::Llt<usize, f64>;

/// Cholesky factor of `K - s M`, lowering `s` until the matrix is positive definite.
fn factor_below(k: &SparseSymmetric, m: &SparseSymmetric, shift: f64) -> Result<(Factor, f64), EigenError> {
    let n = k.dim();
    let mut s = shift;
    for attempt in 0..12 {
        let a = if s == 0.0 { k.clone() } else { k.add_scaled(-s, m) };
        let trips: Vec<Triplet<usize, usize, f64>> =
            a.lower_triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| EigenError::Invalid(format!("{e:?}")))?;
        if let Ok(f) = mat.sp_cholesky(Side::Lower) {
            return Ok((f, s));
        }
        s -= s.abs().max(1.0) * 0.5 * 2f64.powi(attempt);
    }
    Err(EigenError::Factorization { shift: s })
}

/// Deterministic, non-degenerate start vector number `j`.
fn start_vector(n: usize, j: usize) -> Vec<f64> {
    let f = 0.7548776662466927 * (j as f64 + 1.0);
    (0..n)
        .map(|i| {
            let t = i as f64;
            1.0 + 0.5 * (f * t + 0.3 * j as f64).sin() + 0.25 * (0.5698402909980532 * t * t / (n as f64)).cos()
        })
        .collect()
}

struct Krylov<'a> {
    m: &'a SparseSymmetric,
    v: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
    /// `h[i][j] = <v_i, A v_j>_M` for processed columns `j`.
    h: Vec<Vec<f64>>,
    fresh: usize,
}

impl<'a> Krylov<'a> {
    /// M-orthogonalizes `z` against the basis twice; returns the coefficients and the norm left.
    fn orthogonalize(&self, z: &mut [f64], mz: &mut Vec<f64>) -> (Vec<f64>, f64) {
        let p = self.v.len();
        let mut coef = vec![0.0; p];
        for _ in 0..2 {
            for i in 0..p {
                let c = dot(&self.mv[i], z);
                coef[i] += c;
                for (zk, vk) in z.iter_mut().zip(&self.v[i]) {
                    *zk -= c * vk;
                }
            }
        }
        *mz = self.m.matvec(z);
        let nrm = dot(z, mz).max(0.0).sqrt();
        (coef, nrm)
    }

    fn push(&mut self, mut z: Vec<f64>, mut mz: Vec<f64>, nrm: f64) {
        z.iter_mut().for_each(|x| *x /= nrm);
        mz.iter_mut().for_each(|x| *x /= nrm);
        self.v.push(z);
        self.mv.push(mz);
    }

    /// Adds a fresh deterministic direction when the Krylov space closes up.
    fn push_fresh(&mut self, n: usize) {
        loop {
            let mut z = start_vector(n, 1000 + self.fresh);
            self.fresh += 1;
            let mut mz = Vec::new();
            let before = self.m.inner(&z, &z).sqrt();
            let (_, nrm) = self.orthogonalize(&mut z, &mut mz);
            if nrm > 1e-8 * before {
                self.push(z, mz, nrm);
                return;
            }
            if self.fresh > 1000 + n {
                panic!("cannot extend a Krylov basis of size {} in dimension {n}", self.v.len());
            }
        }
    }
}

fn krylov_lowest(
    k: &SparseSymmetric,
    m: &SparseSymmetric,
    factor: &Factor,
    sigma: f64,
    nev: usize,
    basis: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>, EigenError> {
    let n = k.dim();
    let b = opts.block;
    let keep = (nev + (basis - nev) / 2).max(nev + 1).min(basis - 1);
    let apply = |x: &[f64]| -> Vec<f64> {
        let mx = m.matvec(x);
        let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| mx[i]);
        factor.solve_in_place(rhs.as_mut());
        (0..n).map(|i| rhs[(i, 0)]).collect()
    };

    let width = basis + b;
    let mut kr = Krylov { m, v: Vec::with_capacity(width), mv: Vec::with_capacity(width), h: vec![vec![0.0; width]; width], fresh: 0 };
    for j in 0..b {
        let mut z = start_vector(n, j);
        let mut mz = Vec::new();
        let (_, nrm) = kr.orthogonalize(&mut z, &mut mz);
        if nrm > 1e-8 {
            kr.push(z, mz, nrm);
        } else {
            kr.push_fresh(n);
        }
    }
    let mut q = 0;
    let mut ritz_tol = (opts.tol * 1e-2).max(1e-14);
    for restart in 0..=opts.max_restarts {
        while q < basis {
            let mut z = apply(&kr.v[q]);
            let before = m.inner(&z, &z).sqrt();
            let mut mz = Vec::new();
            let (coef, nrm) = kr.orthogonalize(&mut z, &mut mz);
            let p = kr.v.len();
            for (i, c) in coef.iter().enumerate() {
                kr.h[i][q] = *c;
            }
            if nrm > 1e-10 * before {
                kr.h[p][q] = nrm;
                kr.push(z, mz, nrm);
            } else {
                kr.h[p][q] = 0.0;
                kr.push_fresh(n);
            }
            q += 1;
        }
        let p = kr.v.len();
        // Rayleigh-Ritz on the processed block.
        let t = Mat::<f64>::from_fn(q, q, |i, j| 0.5 * (kr.h[i][j] + kr.h[j][i]));
        let evd = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| EigenError::NotConverged { converged: 0, requested: nev, restarts: restart })?;
        let theta: Vec<f64> = (0..q).rev().map(|i| evd.S()[i]).collect();
        let s: Vec<Vec<f64>> = (0..q).rev().map(|c| (0..q).map(|r| evd.U()[(r, c)]).collect()).collect();
        // Residual of each Ritz pair lives in the unprocessed directions.
        let tail: Vec<Vec<f64>> = s
            .iter()
            .map(|si| (q..p).map(|r| (0..q).map(|c| kr.h[r][c] * si[c]).sum()).collect())
            .collect();
        let converged = (0..nev)
            .take_while(|&i| theta[i] > 0.0 && norm(&tail[i]) <= ritz_tol * theta[i].abs())
            .count();

        let combine = |vecs: &[Vec<f64>], coeffs: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (c, v) in coeffs.iter().zip(vecs) {
                if *c != 0.0 {
                    for (o, x) in out.iter_mut().zip(v) {
                        *o += c * x;
                    }
                }
            }
            out
        };

        if converged == nev {
            let mut pairs = Vec::with_capacity(nev);
            let mut worst: f64 = 0.0;
            for i in 0..nev {
                let mut u = combine(&kr.v[..q], &s[i]);
                let nm = m.inner(&u, &u).sqrt();
                u.iter_mut().for_each(|x| *x /= nm);
                let lambda = k.inner(&u, &u);
                let res = residual(k, m, &u, lambda, residual_shift(sigma, lambda));
                worst = worst.max(res);
                pairs.push(EigenPair { index: i + 1, lambda, vector: u, residual_norm: res, cluster: None });
            }
            if worst <= opts.tol {
                return Ok(pairs);
            }
            if ritz_tol <= 1e-15 {
                return Err(EigenError::NotConverged {
                    converged: pairs.iter().filter(|p| p.residual_norm <= opts.tol).count(),
                    requested: nev,
                    restarts: restart,
                });
            }
            ritz_tol = (ritz_tol * 1e-2).max(1e-15);
        }
        if restart == opts.max_restarts {
            return Err(EigenError::NotConverged { converged, requested: nev, restarts: restart });
        }

        // Thick restart: best Ritz vectors followed by the unprocessed block.
        let v_proc: Vec<Vec<f64>> = kr.v[..q].to_vec();
        let mv_proc: Vec<Vec<f64>> = kr.mv[..q].to_vec();
        let mut v_new = Vec::with_capacity(width);
        let mut mv_new = Vec::with_capacity(width);
        for si in s.iter().take(keep) {
            v_new.push(combine(&v_proc, si));
            mv_new.push(combine(&mv_proc, si));
        }
        v_new.extend(kr.v.drain(q..));
        mv_new.extend(kr.mv.drain(q..));
        let mut h = vec![vec![0.0; width]; width];
        for i in 0..keep {
            h[i][i] = theta[i];
            for r in 0..(p - q) {
                h[keep + r][i] = tail[i][r];
            }
        }
        kr.v = v_new;
        kr.mv = mv_new;
        kr.h = h;
        q = keep;
    }
    unreachable!()
}

/// Eigenpairs of the Laplacian on a mesh, with vectors extended to every node.
#[derive(Debug, Clone)]
pub struct MeshEigen {
    pub pairs: Vec<EigenPair>,
    pub mesh_hash: String,
    pub level: u32,
    pub bc: String,
    pub free: FreeMap,
    pub shift: f64,
}

pub fn solve_on_mesh(mesh: &Mesh, bc: &BoundaryCondition, nev: usize) -> Result<MeshEigen, EigenError> {
    solve_on_mesh_with(mesh, bc, nev, None, &EigenOptions::default())
}

/// `shift` defaults to 0 with Dirichlet nodes present and to -1 otherwise.
pub fn solve_on_mesh_with(
    mesh: &Mesh,
    bc: &BoundaryCondition,
    nev: usize,
    shift: Option<f64>,
    opts: &EigenOptions,
) -> Result<MeshEigen, EigenError> {
    let asm = assemble(mesh, bc)?;
    let shift = shift.unwrap_or(if bc.has_dirichlet(mesh) { 0.0 } else { -1.0 });
    let mut pairs = solve_lowest_with(&asm.stiffness, &asm.mass, nev, shift, opts)?;
    for p in &mut pairs {
        p.vector = asm.free.extend(&p.vector);
    }
    Ok(MeshEigen {
        pairs,
        mesh_hash: mesh.fingerprint(),
        level: mesh.level,
        bc: bc.to_string(),
        free: asm.free,
        shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Marker;
    use crate::mesh::refine;
    use std::f64::consts::PI;

    fn square(nx: usize) -> Mesh {
        Mesh::rectangle((0.0, 0.0), (1.0, 1.0), nx, nx, [Marker::BASIC; 4])
    }

    #[test]
    fn scalar_problem() {
        let k = SparseSymmetric::from_triplets(1, vec![(0, 0, 2.0)]);
        let m = SparseSymmetric::from_triplets(1, vec![(0, 0, 1.0)]);
        let p = solve_lowest(&k, &m, 1, 0.0).unwrap();
        assert!((p[0].lambda - 2.0).abs() < 1e-14);
        assert_eq!(p[0].vector, vec![1.0]);
    }

    #[test]
    fn rejects_bad_requests() {
        let k = SparseSymmetric::from_triplets(1, vec![(0, 0, 2.0)]);
        let m = SparseSymmetric::from_triplets(1, vec![(0, 0, 1.0)]);
        assert!(matches!(solve_lowest(&k, &m, 0, 0.0), Err(EigenError::Invalid(_))));
        assert!(matches!(solve_lowest(&k, &m, 2, 0.0), Err(EigenError::Invalid(_))));
    }

    #[test]
    fn unit_square_degenerate_pair() {
        let mesh = refine(&refine(&square(8)));
        let sol = solve_on_mesh(&mesh, &BoundaryCondition::dirichlet(), 3).unwrap();
        let l: Vec<f64> = sol.pairs.iter().map(|p| p.lambda).collect();
        assert!((l[0] / (2.0 * PI * PI) - 1.0).abs() < 5e-3);
        assert!((l[1] / (5.0 * PI * PI) - 1.0).abs() < 2e-2);
        assert!(l.iter().zip([2.0, 5.0, 5.0]).all(|(x, e)| *x >= e * PI * PI));
        // The uniform diagonal mesh splits the pair only slightly.
        let asm = assemble(&mesh, &BoundaryCondition::dirichlet()).unwrap();
        let u1 = asm.free.restrict(&sol.pairs[1].vector);
        let u2 = asm.free.restrict(&sol.pairs[2].vector);
        assert!(asm.mass.inner(&u1, &u2).abs() < 1e-8);
        for p in &sol.pairs {
            assert!(p.residual_norm <= 1e-8);
            let u = asm.free.restrict(&p.vector);
            assert!((asm.mass.inner(&u, &u) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn shift_independence() {
        let mesh = refine(&square(12));
        let asm = assemble(&mesh, &BoundaryCondition::dirichlet()).unwrap();
        let a = solve_lowest(&asm.stiffness, &asm.mass, 6, 0.0).unwrap();
        let b = solve_lowest(&asm.stiffness, &asm.mass, 6, 10.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.lambda - y.lambda).abs() <= 1e-8 * x.lambda);
        }
    }

    #[test]
    fn shift_above_spectrum_is_lowered() {
        let mesh = refine(&square(12));
        let asm = assemble(&mesh, &BoundaryCondition::dirichlet()).unwrap();
        let a = solve_lowest(&asm.stiffness, &asm.mass, 2, 30.0).unwrap();
        assert!((a[0].lambda / (2.0 * PI * PI) - 1.0).abs() < 2e-2);
    }

    #[test]
    fn neumann_constant_mode() {
        let mesh = refine(&square(10));
        let sol = solve_on_mesh(&mesh, &BoundaryCondition::neumann(), 4).unwrap();
        assert!(sol.pairs[0].lambda.abs() < 1e-8);
        assert!((sol.pairs[1].lambda / (PI * PI) - 1.0).abs() < 1e-2);
        let u = &sol.pairs[0].vector;
        assert!(u.iter().all(|v| (v - u[0]).abs() < 1e-8));
    }

    #[test]
    fn clusters_are_flagged() {
        let mut pairs: Vec<EigenPair> = [1.0, 2.0, 2.0 + 1e-9, 3.0]
            .iter()
            .map(|&l| EigenPair { index: 0, lambda: l, vector: vec![-1.0, 0.5], residual_norm: 0.0, cluster: None })
            .collect();
        finalize(&mut pairs);
        assert_eq!(pairs.iter().map(|p| p.cluster).collect::<Vec<_>>(), vec![None, Some(2), Some(2), None]);
        assert_eq!(pairs[0].vector, vec![1.0, -0.5]);
    }
}
