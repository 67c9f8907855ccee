//! Table configuration files: a small TOML schema describing the
//! obstacle curves of a billiard table, with fail-fast validation.
//!
//! ```toml
//! schema = 1
//! # optional: required clearance for the no-eclipse condition
//! margin = 1e-6
//!
//! [[obstacle]]
//! kind = "circle"
//! center = [0.0, 0.0]
//! radius = 1.0
//!
//! [[obstacle]]
//! kind = "ellipse"
//! center = [6.0, 0.0]
//! semi_major = 1.2
//! semi_minor = 0.8
//! rotation = 0.3
//!
//! [[obstacle]]
//! kind = "fourier-circle"
//! center = [3.0, 5.0]
//! base_radius = 1.0
//! harmonics = [[3, 0.02, 0.0]]   # (k, amplitude, phase)
//! ```

use crate::error::{Error, Result};
use crate::geometry::{BilliardTable, CurveSpec, ObstacleCurve, DEFAULT_NON_ECLIPSE_MARGIN};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const TABLE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableConfig {
    pub schema: u32,
    #[serde(default)]
    pub margin: Option<f64>,
    #[serde(rename = "obstacle")]
    pub obstacles: Vec<CurveSpec>,
}

impl TableConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: TableConfig = toml::from_str(text)
            .map_err(|e| Error::Validation(format!("table config parse error: {e}")))?;
        if cfg.schema != TABLE_SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported table schema version {} (expected {TABLE_SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        if let Some(m) = cfg.margin {
            if !(m > 0.0) {
                return Err(Error::Validation("margin must be positive".into()));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Validation(format!("cannot read table config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Instantiate the table at the given working precision. All geometric
    /// invariants (convexity, disjointness, no-eclipse) are enforced here.
    pub fn build(&self, prec: u32) -> Result<BilliardTable> {
        let obstacles: Vec<ObstacleCurve> = self
            .obstacles
            .iter()
            .map(|s| ObstacleCurve::new(s.clone(), prec))
            .collect::<Result<_>>()?;
        BilliardTable::with_margin(obstacles, self.margin.unwrap_or(DEFAULT_NON_ECLIPSE_MARGIN))
    }
}

pub fn load_table(path: &Path, prec: u32) -> Result<BilliardTable> {
    TableConfig::load(path)?.build(prec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = r#"
schema = 1

[[obstacle]]
kind = "circle"
center = [0.0, 0.0]
radius = 1.0

[[obstacle]]
kind = "circle"
center = [6.0, 0.0]
radius = 1.0

[[obstacle]]
kind = "circle"
center = [3.0, 5.196152422706632]
radius = 1.0
"#;

    #[test]
    fn parse_and_build_three_disks() {
        let cfg = TableConfig::parse(THREE).unwrap();
        assert_eq!(cfg.obstacles.len(), 3);
        let table = cfg.build(192).unwrap();
        assert_eq!(table.m(), 3);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(TableConfig::parse("schema = 99\n").is_err());
        assert!(TableConfig::parse("not toml at all [").is_err());
        // valid TOML but eclipsing geometry fails at build time: the third
        // disk sits inside the hull of the other two
        let tight = THREE
            .replace("[6.0, 0.0]", "[4.0, 0.0]")
            .replace("[3.0, 5.196152422706632]", "[2.0, 1.5]");
        let cfg = TableConfig::parse(&tight).unwrap();
        assert!(cfg.build(192).is_err());
    }

    #[test]
    fn bundled_tables_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tables");
        let mut count = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().and_then(|e| e.to_str()) == Some("toml") {
                let table = load_table(&path, 128).unwrap();
                assert!(table.m() >= 3, "{} too small", path.display());
                count += 1;
            }
        }
        assert!(count >= 3, "expected at least 3 bundled tables, found {count}");
    }
}
