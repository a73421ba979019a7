//! Model definition files.
//!
//! A model is a TOML document describing a pair potential with optional
//! one-body terms:
//!
//! ```toml
//! dimension = 1
//! spins = ["0", "1"]
//! vacuum = "0"
//! range = 1
//!
//! [[coupling]]
//! offset = [1]
//! spins = ["1", "1"]
//! value = 0.2
//!
//! [[one_body]]
//! spin = "1"
//! value = 0.1
//! ```
//!
//! Couplings are mirrored (`Φ_{t,t-o}(b,a) = Φ_{t,t+o}(a,b)`) unless
//! `symmetric = false`. Site-specific one-body terms (`site = [..]`) make the
//! model inhomogeneous; such models set `homogeneous = false` and give a
//! `scan_window`.

use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::parse_window;
use crate::lattice::{Coord, Site, SpinSpace};
use crate::tef::{PairField, PairPotential};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    dimension: usize,
    spins: Vec<String>,
    vacuum: String,
    range: Option<u32>,
    #[serde(default = "yes")]
    homogeneous: bool,
    #[serde(default = "yes")]
    symmetric: bool,
    scan_window: Option<String>,
    #[serde(default)]
    coupling: Vec<RawCoupling>,
    #[serde(default)]
    one_body: Vec<RawOneBody>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    offset: Vec<Coord>,
    spins: [String; 2],
    value: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOneBody {
    spin: String,
    value: f64,
    site: Option<Vec<Coord>>,
}

/// A parsed model together with the digest of its source.
#[derive(Clone, Debug)]
pub struct Model {
    pub field: PairField,
    /// Hex SHA-256 of the source bytes.
    pub digest: String,
}

impl Model {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
            line: 1,
            column: 1,
            message: format!("not UTF-8: {e}"),
        })?;
        Model::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let raw: RawModel = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_column(text, s)).unwrap_or((1, 1));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let field = build(raw)?;
        Ok(Model {
            field,
            digest: digest(text.as_bytes()),
        })
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn line_column(text: &str, span: Range<usize>) -> (usize, usize) {
    let before = &text[..span.start.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn build(raw: RawModel) -> Result<PairField> {
    let vacuum = raw
        .spins
        .iter()
        .position(|s| *s == raw.vacuum)
        .ok_or_else(|| Error::model(format!("vacuum {:?} is not one of the spins", raw.vacuum)))?;
    let spins = SpinSpace::new(raw.spins.clone(), vacuum)?;
    let spin = |label: &str| {
        spins
            .spin(label)
            .ok_or_else(|| Error::model(format!("unknown spin {label:?}")))
    };
    let mut pot = PairPotential::zero(spins.clone(), raw.dimension)?;
    for c in &raw.coupling {
        let offset = site(&c.offset, raw.dimension)?;
        let (a, b) = (spin(&c.spins[0])?, spin(&c.spins[1])?);
        if raw.symmetric {
            pot.set(&offset, a, b, c.value)?;
        } else {
            pot.set_raw(&offset, a, b, c.value)?;
        }
    }
    if let Some(r) = raw.range {
        if pot.range() > r {
            return Err(Error::model(format!(
                "a coupling reaches distance {} beyond the declared range {r}",
                pot.range()
            )));
        }
    }
    let mut field = PairField::new(pot);
    for h in &raw.one_body {
        if !h.value.is_finite() {
            return Err(Error::model("one-body energy is not finite"));
        }
        let x = spin(&h.spin)?;
        match &h.site {
            None => field.set_one_body(x, h.value),
            Some(coords) => field.set_site_one_body(site(coords, raw.dimension)?, x, h.value),
        }
    }
    if let Some(w) = &raw.scan_window {
        let w = parse_window(w)?;
        if w.dim() != raw.dimension {
            return Err(Error::model("scan window has the wrong dimension"));
        }
        field.set_scan_window(w);
    }
    if raw.homogeneous && !field.is_homogeneous() {
        return Err(Error::model(
            "site-specific one-body terms need homogeneous = false",
        ));
    }
    if !raw.homogeneous && raw.scan_window.is_none() {
        return Err(Error::model("inhomogeneous models need a scan_window"));
    }
    field.check_scan_window()?;
    Ok(field)
}

fn site(coords: &[Coord], dim: usize) -> Result<Site> {
    if coords.len() != dim {
        return Err(Error::model(format!(
            "{coords:?} has {} coordinates, expected {dim}",
            coords.len()
        )));
    }
    Site::new(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Spin;
    use crate::tef::OnePointField;

    const CHAIN: &str = r#"
dimension = 1
spins = ["0", "1"]
vacuum = "0"
range = 1

[[coupling]]
offset = [1]
spins = ["1", "1"]
value = 0.2
"#;

    #[test]
    fn parses_a_chain() {
        let m = Model::from_str(CHAIN).unwrap();
        let o = Site::new(&[-1]).unwrap();
        assert_eq!(m.field.potential().get(&o, Spin(1), Spin(1)), 0.2);
        assert_eq!(m.field.range(), Some(1));
        assert_eq!(m.digest.len(), 64);
        assert_ne!(
            m.digest,
            Model::from_str(&CHAIN.replace("0.2", "0.3"))
                .unwrap()
                .digest
        );
    }

    #[test]
    fn labels_and_one_body_terms() {
        let text = r#"
dimension = 2
spins = ["up", "empty", "down"]
vacuum = "empty"
homogeneous = false
scan_window = "-1,-1:1,1"

[[coupling]]
offset = [1, 1]
spins = ["up", "down"]
value = -0.1

[[one_body]]
spin = "up"
value = 0.5
site = [0, 0]
"#;
        let m = Model::from_str(text).unwrap();
        let up = m.field.spins().spin("up").unwrap();
        assert_eq!(up, Spin(1));
        assert!(!m.field.is_homogeneous());
        // the scan window plus one bulk site
        assert_eq!(m.field.scan_sites().len(), 10);
    }

    #[test]
    fn reports_positions() {
        let bad = "dimension = 1\nspins = [\"0\", \"1\"]\nvacuum = \"0\"\ncolour = 3\n";
        match Model::from_str(bad) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (4, 1)),
            other => panic!("{other:?}"),
        }
        let bad_value = "dimension = \"one\"\n";
        assert!(matches!(
            Model::from_str(bad_value),
            Err(Error::Parse {
                line: 1,
                column: 13,
                ..
            })
        ));
    }

    #[test]
    fn semantic_errors() {
        assert!(matches!(
            Model::from_str(&CHAIN.replace("vacuum = \"0\"", "vacuum = \"2\"")),
            Err(Error::ModelDefinition(_))
        ));
        assert!(matches!(
            Model::from_str(&CHAIN.replace("range = 1", "range = 0")),
            Err(Error::ModelDefinition(_))
        ));
        assert!(matches!(
            Model::from_str(&CHAIN.replace("[1]", "[1, 0]")),
            Err(Error::ModelDefinition(_))
        ));
        let site_term = format!("{CHAIN}\n[[one_body]]\nspin = \"1\"\nvalue = 1.0\nsite = [3]\n");
        assert!(matches!(
            Model::from_str(&site_term),
            Err(Error::ModelDefinition(_))
        ));
    }
}
