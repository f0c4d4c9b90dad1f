//! Text file holding eigenpairs together with the fingerprint of their mesh.
//!
//! ```text
//! branchdecay-eigen 1
//! mesh <sha256>
//! level <k>
//! bc <description>
//! k <number of pairs>
//! nodes <n>
//! mode <index> <lambda> <residual> <cluster or -1>
//! <one value per node>
//! ```

use super::{EigenError, EigenPair, MeshEigen};
use crate::mesh::Mesh;
use std::fmt::Write as _;
use std::path::Path;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "branchdecay-eigen";

#[derive(Debug, Clone, PartialEq)]
pub struct EigenBundle {
    pub mesh_hash: String,
    pub level: u32,
    pub bc: String,
    pub num_nodes: usize,
    pub pairs: Vec<EigenPair>,
}

impl From<&MeshEigen> for EigenBundle {
    fn from(e: &MeshEigen) -> Self {
        EigenBundle {
            mesh_hash: e.mesh_hash.clone(),
            level: e.level,
            bc: e.bc.clone(),
            num_nodes: e.free.to_reduced.len(),
            pairs: e.pairs.clone(),
        }
    }
}

impl EigenBundle {
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.pairs.len() * (self.num_nodes * 22 + 64) + 256);
        let _ = writeln!(s, "{MAGIC} {BUNDLE_FORMAT_VERSION}");
        let _ = writeln!(s, "mesh {}", self.mesh_hash);
        let _ = writeln!(s, "level {}", self.level);
        let _ = writeln!(s, "bc {}", self.bc);
        let _ = writeln!(s, "k {}", self.pairs.len());
        let _ = writeln!(s, "nodes {}", self.num_nodes);
        for p in &self.pairs {
            let c = p.cluster.map_or(-1, |c| c as i64);
            let _ = writeln!(s, "mode {} {:?} {:?} {}", p.index, p.lambda, p.residual_norm, c);
            for v in &p.vector {
                let _ = writeln!(s, "{v:?}");
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<EigenBundle, EigenError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| -> Result<(usize, Vec<String>), EigenError> {
            let (i, l) = lines
                .next()
                .ok_or_else(|| EigenError::Bundle(format!("unexpected end of file, expected {what}")))?;
            Ok((i + 1, l.split_whitespace().map(str::to_string).collect()))
        };
        fn bad(line: usize, msg: &str) -> EigenError {
            EigenError::Bundle(format!("line {line}: {msg}"))
        }
        fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, EigenError> {
            s.parse().map_err(|_| bad(line, &format!("cannot parse `{s}`")))
        }
        let (l, f) = next("header")?;
        if f.len() != 2 || f[0] != MAGIC {
            return Err(bad(l, "not an eigenpair bundle"));
        }
        if num::<u32>(l, &f[1])? != BUNDLE_FORMAT_VERSION {
            return Err(bad(l, "unsupported bundle version"));
        }
        let mut field = |name: &str| -> Result<(usize, String), EigenError> {
            let (l, f) = next(name)?;
            if f.len() < 2 || f[0] != name {
                return Err(bad(l, &format!("expected `{name}`")));
            }
            Ok((l, f[1..].join(" ")))
        };
        let (_, mesh_hash) = field("mesh")?;
        let (l, level) = field("level")?;
        let level = num(l, &level)?;
        let (_, bc) = field("bc")?;
        let (l, k) = field("k")?;
        let k: usize = num(l, &k)?;
        let (l, n) = field("nodes")?;
        let num_nodes: usize = num(l, &n)?;
        let mut pairs = Vec::with_capacity(k);
        for _ in 0..k {
            let (l, f) = next("mode")?;
            if f.len() != 5 || f[0] != "mode" {
                return Err(bad(l, "expected `mode <index> <lambda> <residual> <cluster>`"));
            }
            let cluster: i64 = num(l, &f[4])?;
            let mut vector = Vec::with_capacity(num_nodes);
            for _ in 0..num_nodes {
                let (l, f) = next("vector entry")?;
                if f.len() != 1 {
                    return Err(bad(l, "expected one value"));
                }
                vector.push(num(l, &f[0])?);
            }
            pairs.push(EigenPair {
                index: num(l, &f[1])?,
                lambda: num(l, &f[2])?,
                residual_norm: num(l, &f[3])?,
                cluster: (cluster >= 0).then_some(cluster as usize),
                vector,
            });
        }
        Ok(EigenBundle { mesh_hash, level, bc, num_nodes, pairs })
    }

    /// Refuses vectors computed on a different mesh.
    pub fn check_mesh(&self, mesh: &Mesh) -> Result<(), EigenError> {
        let h = mesh.fingerprint();
        if h != self.mesh_hash || mesh.num_nodes() != self.num_nodes {
            return Err(EigenError::Bundle(format!(
                "eigenvectors belong to mesh {} but the mesh given is {h}",
                self.mesh_hash
            )));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), EigenError> {
        std::fs::write(path, self.to_text()).map_err(|e| EigenError::Bundle(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<EigenBundle, EigenError> {
        let text = std::fs::read_to_string(path).map_err(|e| EigenError::Bundle(e.to_string()))?;
        EigenBundle::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::solve_on_mesh;
    use crate::fem::BoundaryCondition;
    use crate::geometry::Marker;

    #[test]
    fn round_trip_and_mesh_check() {
        let mesh = Mesh::rectangle((0.0, 0.0), (1.0, 1.0), 6, 6, [Marker::BASIC; 4]);
        let sol = solve_on_mesh(&mesh, &BoundaryCondition::dirichlet(), 3).unwrap();
        let b = EigenBundle::from(&sol);
        let back = EigenBundle::from_text(&b.to_text()).unwrap();
        assert_eq!(back, b);
        back.check_mesh(&mesh).unwrap();
        let other = Mesh::rectangle((0.0, 0.0), (1.0, 1.0), 5, 5, [Marker::BASIC; 4]);
        assert!(back.check_mesh(&other).is_err());
        assert!(EigenBundle::from_text("branchdecay-eigen 2\n").is_err());
    }
}
