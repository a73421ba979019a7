//! Text formats: window specs, probe lists and tab-separated reports.
//!
//! Every report starts with `# key = value` header lines (tool version, model
//! digest, seed, tolerances) followed by a column header row. Floats are
//! written in shortest round-trip exponent form.

use std::io::Write;

use crate::correq::{ConvergenceProfile, SolveReport};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Coord, Site, SpinSpace, Window};
use crate::tef::checks::CheckReport;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn parse_coords(text: &str) -> Result<Site> {
    let inner = text.trim().trim_start_matches('(').trim_end_matches(')');
    let coords = inner
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<Coord>()
                .map_err(|e| Error::domain(format!("bad coordinate {c:?}: {e}")))
        })
        .collect::<Result<Vec<Coord>>>()?;
    Site::new(&coords)
}

/// Parses `lo:hi`, the corners of a box, each a comma-separated coordinate
/// list: `-3:3`, `0,0:2,2`.
pub fn parse_window(spec: &str) -> Result<Window> {
    let (lo, hi) = spec
        .split_once(':')
        .ok_or_else(|| Error::domain(format!("window {spec:?} is not of the form lo:hi")))?;
    Window::box_between(&parse_coords(lo)?, &parse_coords(hi)?)
}

pub fn format_window(w: &Window) -> String {
    let dim = w.dim();
    let mut lo = vec![Coord::MAX; dim];
    let mut hi = vec![Coord::MIN; dim];
    for s in w.sites() {
        for (k, c) in s.coords().iter().enumerate() {
            lo[k] = lo[k].min(*c);
            hi[k] = hi[k].max(*c);
        }
    }
    let join = |v: &[Coord]| {
        v.iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    format!("{}:{}", join(&lo), join(&hi))
}

/// Parses a configuration written as whitespace-separated `site=spin`
/// entries, sites as in `(0,1)` or `0,1`. `∅` is the empty configuration.
pub fn parse_configuration(text: &str, spins: &SpinSpace) -> Result<Configuration> {
    let text = text.trim();
    if text == "∅" {
        return Ok(Configuration::empty());
    }
    let mut entries = Vec::new();
    for token in text.split_whitespace() {
        let (site, label) = token.rsplit_once('=').ok_or_else(|| {
            Error::domain(format!("entry {token:?} is not of the form site=spin"))
        })?;
        let spin = spins
            .spin(label)
            .ok_or_else(|| Error::domain(format!("unknown spin {label:?}")))?;
        entries.push((parse_coords(site)?, spin));
    }
    Configuration::from_entries(entries)
}

/// One configuration per line; blank lines and `#` comments are skipped.
pub fn parse_probes(text: &str, spins: &SpinSpace) -> Result<Vec<Configuration>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let x = parse_configuration(line, spins).map_err(|e| Error::Parse {
            line: i + 1,
            column: 1,
            message: e.to_string(),
        })?;
        if x.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                column: 1,
                message: "probes must be nonempty".into(),
            });
        }
        out.push(x);
    }
    Ok(out)
}

/// `# key = value` lines opening every report.
#[derive(Clone, Debug, Default)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(digest: &str) -> Self {
        Header::default()
            .with("version", format!("tefcorr {VERSION}"))
            .with("model_digest", digest)
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with_float(self, key: &str, value: f64) -> Self {
        self.with(key, fmt_f64(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write(&self, out: &mut dyn Write) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k} = {v}")?;
        }
        Ok(())
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// Columns `configuration`, `size`, `value`.
pub fn write_correlations<'a>(
    out: &mut dyn Write,
    header: &Header,
    spins: &SpinSpace,
    values: impl IntoIterator<Item = (&'a Configuration, f64)>,
) -> Result<()> {
    header.write(out)?;
    writeln!(out, "configuration\tsize\tvalue")?;
    for (x, v) in values {
        writeln!(out, "{}\t{}\t{}", x.describe(spins), x.len(), fmt_f64(v))?;
    }
    Ok(())
}

/// Reads a file written by [`write_correlations`].
pub fn read_correlations(
    text: &str,
    spins: &SpinSpace,
) -> Result<(Header, Vec<(Configuration, f64)>)> {
    let mut header = Header::default();
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| Error::Parse {
            line: i + 1,
            column: 1,
            message,
        };
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest
                .split_once(" = ")
                .ok_or_else(|| err("malformed header".into()))?;
            header = header.with(k, v);
            continue;
        }
        if !seen_columns {
            if line != "configuration\tsize\tvalue" {
                return Err(err("missing column header".into()));
            }
            seen_columns = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, got {}", fields.len())));
        }
        let x = parse_configuration(fields[0], spins).map_err(|e| err(e.to_string()))?;
        let v = fields[2].parse::<f64>().map_err(|e| err(e.to_string()))?;
        rows.push((x, v));
    }
    Ok((header, rows))
}

/// Columns `d`, `max_abs_deviation`, `epsilon_bound`, `iterations`,
/// `residual`, `window_len`; `NA` marks a missing bound.
pub fn write_profile(
    out: &mut dyn Write,
    header: &Header,
    profile: &ConvergenceProfile,
) -> Result<()> {
    header.write(out)?;
    writeln!(out, "# reference = {}", profile.reference_note)?;
    writeln!(
        out,
        "# epsilon_bound = {}",
        crate::correq::convergence::BOUND_LABEL
    )?;
    writeln!(
        out,
        "d\tmax_abs_deviation\tepsilon_bound\titerations\tresidual\twindow_len"
    )?;
    for r in &profile.rows {
        let eps = r.epsilon_bound.map_or("NA".to_string(), fmt_f64);
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.d,
            fmt_f64(r.max_abs_deviation),
            eps,
            r.iterations,
            fmt_f64(r.residual),
            r.window_len
        )?;
    }
    Ok(())
}

/// Key/value lines, then the update norm of every iteration.
pub fn write_solve_report(
    out: &mut dyn Write,
    header: &Header,
    report: &SolveReport,
) -> Result<()> {
    header.write(out)?;
    writeln!(out, "key\tvalue")?;
    let rows: [(&str, String); 10] = [
        ("iterations", report.iterations.to_string()),
        ("max_iters", report.max_iters.to_string()),
        ("final_update_norm", fmt_f64(report.final_update_norm)),
        ("residual_norm", fmt_f64(report.residual_norm)),
        ("operator_norm_bound", fmt_f64(report.operator_norm_bound)),
        ("gate_passed", report.gate_passed.to_string()),
        (
            "empirical_contraction_rate",
            fmt_f64(report.empirical_contraction_rate),
        ),
        ("truncation_tail", fmt_f64(report.truncation_tail)),
        ("unknowns", report.unknowns.to_string()),
        (
            "trusted_depth",
            report
                .trusted_depth
                .map_or("NA".to_string(), |d| d.to_string()),
        ),
    ];
    for (k, v) in rows {
        writeln!(out, "{k}\t{v}")?;
    }
    if let Some(c) = &report.caveat {
        writeln!(out, "caveat\t{c}")?;
    }
    for (i, u) in report.update_norms.iter().enumerate() {
        writeln!(out, "update_norm[{}]\t{}", i + 1, fmt_f64(*u))?;
    }
    Ok(())
}

/// Columns `identity`, `max_residual`, `checked`, `pass`, `witness`.
pub fn write_check_report(
    out: &mut dyn Write,
    header: &Header,
    report: &CheckReport,
) -> Result<()> {
    header.write(out)?;
    writeln!(out, "identity\tmax_residual\tchecked\tpass\twitness")?;
    for r in &report.identities {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.name,
            fmt_f64(r.max_residual),
            r.checked,
            r.max_residual <= report.tolerance,
            r.witness.as_deref().unwrap_or("-")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Spin;
    use proptest::prelude::*;

    #[test]
    fn windows() {
        let w = parse_window("-2:2").unwrap();
        assert_eq!(w.len(), 5);
        let b = parse_window("0,0:2,1").unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(format_window(&b), "0,0:2,1");
        assert!(parse_window("0,0").is_err());
        assert!(parse_window("0,0:1").is_err());
    }

    #[test]
    fn probes() {
        let spins = SpinSpace::new(vec!["o".into(), "a".into(), "b".into()], 0).unwrap();
        let text = "# centre\n(0)=a\n\n-1=b 1=a # pair\n";
        let p = parse_probes(text, &spins).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].len(), 2);
        assert_eq!(p[0].get(&Site::new(&[0]).unwrap()), Spin(1));
        match parse_probes("0=a\n0=c\n", &spins) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn correlation_files_round_trip(
            raw in proptest::collection::btree_map((-5i32..5, -5i32..5), 1u8..3, 0..5),
            value in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO,
            seed in any::<u64>(),
        ) {
            let spins = SpinSpace::numeric(3).unwrap();
            let x = Configuration::from_entries(
                raw.iter().map(|((a, b), v)| (Site::new(&[*a, *b]).unwrap(), Spin(*v))),
            ).unwrap();
            let header = Header::new("abc").with("seed", seed);
            let mut buf = Vec::new();
            write_correlations(&mut buf, &header, &spins, [(&x, value)]).unwrap();
            let (h, rows) = read_correlations(std::str::from_utf8(&buf).unwrap(), &spins).unwrap();
            let seed_text = seed.to_string();
            prop_assert_eq!(h.get("seed"), Some(seed_text.as_str()));
            prop_assert_eq!(rows.len(), 1);
            prop_assert_eq!(&rows[0].0, &x);
            prop_assert_eq!(rows[0].1.to_bits(), value.to_bits());
        }
    }
}
