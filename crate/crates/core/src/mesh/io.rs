//! Plain-text mesh format. Floats are written in Rust's shortest round-trip form, so
//! reading a written mesh gives back identical bits.
//!
//! ```text
//! branchdecay-mesh 1
//! level <k>
//! nodes <n>
//! <x> <y>
//! triangles <t>
//! <i> <j> <k> <0 basic | 1 branch>
//! boundary_edges <e>
//! <i> <j> <marker> <arc index or -1>
//! arcs <m>
//! <cx> <cy> <r>
//! ```

use super::{BoundaryEdge, Mesh, MeshError};
use crate::geometry::{ArcGeom, Marker, Point};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

pub const MESH_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "branchdecay-mesh";

impl Mesh {
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.nodes.len() * 40 + self.triangles.len() * 24);
        let _ = writeln!(s, "{MAGIC} {MESH_FORMAT_VERSION}");
        let _ = writeln!(s, "level {}", self.level);
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{:?} {:?}", p.x, p.y);
        }
        let _ = writeln!(s, "triangles {}", self.triangles.len());
        for (t, b) in self.triangles.iter().zip(&self.in_branch) {
            let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], *b as u8);
        }
        let _ = writeln!(s, "boundary_edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let arc = e.arc.map_or(-1, |a| a as i64);
            let _ = writeln!(s, "{} {} {} {}", e.nodes[0], e.nodes[1], e.marker.0, arc);
        }
        let _ = writeln!(s, "arcs {}", self.arcs.len());
        for a in &self.arcs {
            let _ = writeln!(s, "{:?} {:?} {:?}", a.center.x, a.center.y, a.radius);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mesh, MeshError> {
        let mut r = Reader { lines: text.lines().enumerate(), line: 0 };
        let head = r.fields()?;
        if head.len() != 2 || head[0] != MAGIC {
            return Err(r.err("not a mesh file"));
        }
        if r.parse::<u32>(head[1])? != MESH_FORMAT_VERSION {
            return Err(r.err("unsupported mesh format version"));
        }
        let level = r.header("level")?;
        let n = r.header("nodes")?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let f = r.exact(2)?;
            nodes.push(Point::new(r.parse(f[0])?, r.parse(f[1])?));
        }
        let t = r.header("triangles")?;
        let mut triangles = Vec::with_capacity(t);
        let mut in_branch = Vec::with_capacity(t);
        for _ in 0..t {
            let f = r.exact(4)?;
            triangles.push([r.parse(f[0])?, r.parse(f[1])?, r.parse(f[2])?]);
            in_branch.push(match f[3] {
                "0" => false,
                "1" => true,
                _ => return Err(r.err("region flag must be 0 or 1")),
            });
        }
        let e = r.header("boundary_edges")?;
        let mut boundary_edges = Vec::with_capacity(e);
        for _ in 0..e {
            let f = r.exact(4)?;
            let arc: i64 = r.parse(f[3])?;
            boundary_edges.push(BoundaryEdge {
                nodes: [r.parse(f[0])?, r.parse(f[1])?],
                marker: Marker(r.parse(f[2])?),
                arc: if arc < 0 { None } else { Some(arc as usize) },
            });
        }
        let a = r.header("arcs")?;
        let mut arcs = Vec::with_capacity(a);
        for _ in 0..a {
            let f = r.exact(3)?;
            arcs.push(ArcGeom {
                center: Point::new(r.parse(f[0])?, r.parse(f[1])?),
                radius: r.parse(f[2])?,
            });
        }
        let mesh = Mesh {
            nodes,
            triangles,
            in_branch,
            boundary_edges,
            arcs,
            level: level as u32,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn write(&self, path: &Path) -> Result<(), MeshError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Mesh, MeshError> {
        Mesh::from_text(&std::fs::read_to_string(path)?)
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: &str) -> MeshError {
        MeshError::Parse { line: self.line, msg: msg.to_string() }
    }

    fn fields(&mut self) -> Result<Vec<&'a str>, MeshError> {
        for (i, l) in self.lines.by_ref() {
            self.line = i + 1;
            let f: Vec<&str> = l.split_whitespace().collect();
            if !f.is_empty() {
                return Ok(f);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn exact(&mut self, n: usize) -> Result<Vec<&'a str>, MeshError> {
        let f = self.fields()?;
        if f.len() != n {
            return Err(self.err(&format!("expected {n} fields")));
        }
        Ok(f)
    }

    fn header(&mut self, name: &str) -> Result<usize, MeshError> {
        let f = self.exact(2)?;
        if f[0] != name {
            return Err(self.err(&format!("expected `{name}`")));
        }
        self.parse(f[1])
    }

    fn parse<T: FromStr>(&self, s: &str) -> Result<T, MeshError> {
        s.parse().map_err(|_| self.err(&format!("cannot parse `{s}`")))
    }
}
