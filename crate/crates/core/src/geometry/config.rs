//! TOML description of a domain: either a catalog shape with parameters or raw regions.
//!
//! ```toml
//! schema_version = 1
//! shape = "c"
//! [params]
//! shift = 0.1
//! ```
//!
//! or
//!
//! ```toml
//! schema_version = 1
//! name = "custom"
//! [basic]
//! vertices = [{x = 0.0, y = 0.0}, ...]
//! [branch]
//! vertices = [...]
//! [axis]
//! kind = "cartesian"
//! origin = {x = 1.0, y = 0.5}
//! direction = {x = 1.0, y = 0.0}
//! length = 1.0
//! ```
//!
//! Raw regions accept `curves` and `markers` per edge; both default to straight
//! edges with the basic/branch marker.

use super::primitives::{Curve, Marker, Point, Region, Segment};
use super::{build_catalog_domain, rotate_to_axis, BranchAxis, CatalogParams, DomainSpec, GeometryError, ShapeId};
use serde::{Deserialize, Serialize};

pub const DOMAIN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub vertices: Vec<Point>,
    #[serde(default)]
    pub curves: Option<Vec<Curve>>,
    #[serde(default)]
    pub markers: Option<Vec<u16>>,
}

impl RegionConfig {
    fn into_region(self, default_marker: Marker) -> Region {
        let n = self.vertices.len();
        Region {
            curves: self.curves.unwrap_or_else(|| vec![Curve::Straight; n]),
            markers: self
                .markers
                .map(|m| m.into_iter().map(Marker).collect())
                .unwrap_or_else(|| vec![default_marker; n]),
            vertices: self.vertices,
        }
    }

    fn from_region(r: &Region) -> Self {
        RegionConfig {
            vertices: r.vertices.clone(),
            curves: Some(r.curves.clone()),
            markers: Some(r.markers.iter().map(|m| m.0).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeId>,
    #[serde(default)]
    pub params: CatalogParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basic: Option<RegionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<RegionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<BranchAxis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slits: Vec<Segment>,
    /// Re-parameterize the branch along this direction after building.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotate_to: Option<Point>,
}

impl DomainConfig {
    pub fn catalog(shape: ShapeId, params: CatalogParams) -> Self {
        DomainConfig {
            schema_version: DOMAIN_SCHEMA_VERSION,
            shape: Some(shape),
            params,
            name: None,
            basic: None,
            branch: None,
            axis: None,
            slits: Vec::new(),
            rotate_to: None,
        }
    }

    pub fn raw(spec: &DomainSpec) -> Self {
        DomainConfig {
            schema_version: DOMAIN_SCHEMA_VERSION,
            shape: None,
            params: CatalogParams::default(),
            name: Some(spec.name.clone()),
            basic: Some(RegionConfig::from_region(&spec.basic)),
            branch: Some(RegionConfig::from_region(&spec.branch)),
            axis: Some(spec.axis.clone()),
            slits: spec.slits.clone(),
            rotate_to: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, GeometryError> {
        let cfg: DomainConfig = toml::from_str(text).map_err(|e| GeometryError::Config(e.to_string()))?;
        if cfg.schema_version != DOMAIN_SCHEMA_VERSION {
            return Err(GeometryError::Config(format!(
                "unsupported schema_version {} (expected {DOMAIN_SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("domain config serializes")
    }

    pub fn build(&self) -> Result<DomainSpec, GeometryError> {
        let spec = match (&self.shape, &self.basic, &self.branch, &self.axis) {
            (Some(shape), None, None, None) => build_catalog_domain(*shape, &self.params)?,
            (None, Some(basic), Some(branch), Some(axis)) => DomainSpec::new(
                self.name.clone().unwrap_or_else(|| "custom".into()),
                basic.clone().into_region(Marker::BASIC),
                branch.clone().into_region(Marker::BRANCH),
                axis.clone(),
                self.slits.clone(),
            )?,
            _ => {
                return Err(GeometryError::Config(
                    "give either `shape` or all of `basic`, `branch` and `axis`".into(),
                ))
            }
        };
        match self.rotate_to {
            Some(d) => rotate_to_axis(&spec, d),
            None => Ok(spec),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_round_trip() {
        let cfg = DomainConfig::from_toml("schema_version = 1\nshape = \"c\"\n[params]\nshift = 0.1\n").unwrap();
        let spec = cfg.build().unwrap();
        assert_eq!(spec.name, "shape-c");
        let again = DomainConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn raw_round_trip_reproduces_spec() {
        for s in ShapeId::ALL {
            let spec = build_catalog_domain(s, &CatalogParams::default()).unwrap();
            let text = DomainConfig::raw(&spec).to_toml();
            let back = DomainConfig::from_toml(&text).unwrap().build().unwrap();
            assert_eq!(back.basic, spec.basic, "{s}");
            assert_eq!(back.branch, spec.branch, "{s}");
            assert_eq!(back.junction, spec.junction, "{s}");
        }
    }

    #[test]
    fn wrong_version_and_mixed_forms_rejected() {
        assert!(DomainConfig::from_toml("schema_version = 2\nshape = \"a\"\n").is_err());
        let mut cfg = DomainConfig::raw(&build_catalog_domain(ShapeId::A, &CatalogParams::default()).unwrap());
        cfg.shape = Some(ShapeId::A);
        assert!(matches!(cfg.build(), Err(GeometryError::Config(_))));
    }
}
