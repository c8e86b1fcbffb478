//! CSV output and the matching parsers.
//!
//! Floating-point values are written as `{:.16e}` (17 significant digits),
//! which round-trips every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bgk_core::diagnostics::DiagRecord;

use crate::error::{ExperimentError, Result};

pub const DIAGNOSTICS_HEADER: &str = "t,rank,h_norm_sq,kappa_plus,kappa_minus,mass";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

pub fn format_record(r: &DiagRecord) -> String {
    format!(
        "{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.t, r.rank, r.h_norm_sq, r.kappa_plus, r.kappa_minus, r.mass
    )
}

/// Streams diagnostics rows to `diagnostics.csv`.
pub struct DiagnosticsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl DiagnosticsWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        let path = dir.join(DIAGNOSTICS_FILE);
        let file = File::create(&path).map_err(|e| ExperimentError::io(&path, e))?;
        let mut w = Self { path, out: BufWriter::new(file) };
        w.line(DIAGNOSTICS_HEADER)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| ExperimentError::io(&self.path, e))
    }

    pub fn push(&mut self, r: &DiagRecord) -> Result<()> {
        self.line(&format_record(r))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| ExperimentError::io(&self.path, e))
    }
}

pub fn diagnostics_to_string(records: &[DiagRecord]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format_record(r));
        s.push('\n');
    }
    s
}

pub fn write_diagnostics(path: &Path, records: &[DiagRecord]) -> Result<()> {
    write_text(path, &diagnostics_to_string(records))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| ExperimentError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))
}

fn float(line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| ExperimentError::parse(line, format!("`{field}` is not a number")))
}

fn floats(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|f| float(line, f)).collect()
}

pub fn parse_diagnostics(text: &str) -> Result<Vec<DiagRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == DIAGNOSTICS_HEADER => {}
        _ => return Err(ExperimentError::parse(1, format!("expected header `{DIAGNOSTICS_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(ExperimentError::parse(i + 1, format!("expected 6 fields, got {}", fields.len())));
        }
        let rank = fields[1]
            .trim()
            .parse::<usize>()
            .map_err(|_| ExperimentError::parse(i + 1, format!("rank `{}` is not a count", fields[1])))?;
        out.push(DiagRecord {
            t: float(i + 1, fields[0])?,
            rank,
            h_norm_sq: float(i + 1, fields[2])?,
            kappa_plus: float(i + 1, fields[3])?,
            kappa_minus: float(i + 1, fields[4])?,
            mass: float(i + 1, fields[5])?,
        });
    }
    Ok(out)
}

/// Rectangle `[a1, b1] x [a2, b2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain2d {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

/// Contents of one snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    /// Density on a 1D grid: header `x,rho`, then one `x,rho` row per cell.
    Density1d { x: Vec<f64>, rho: Vec<f64> },
    /// Density on a 2D grid: header `# n_x1=.. n_x2=.. domain=[a1,b1]x[a2,b2]`,
    /// then `n_x1` rows of `n_x2` values; row `i` is `x1 = x1_i`.
    Density2d { n_x1: usize, n_x2: usize, domain: Domain2d, rho: Vec<f64> },
    /// Distribution function on a 1D grid: header `x\v,v_1,..,v_n`, then one
    /// row `x_j,f_j1,..,f_jn` per cell.
    Distribution1d { v: Vec<f64>, x: Vec<f64>, f: Vec<f64> },
}

fn e(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_bound(x: f64) -> String {
    // shortest round-trip representation
    format!("{x:?}")
}

impl Snapshot {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match self {
            Snapshot::Density1d { x, rho } => {
                s.push_str("x,rho\n");
                for (xi, ri) in x.iter().zip(rho) {
                    s.push_str(&format!("{},{}\n", e(*xi), e(*ri)));
                }
            }
            Snapshot::Density2d { n_x1, n_x2, domain, rho } => {
                s.push_str(&format!(
                    "# n_x1={n_x1} n_x2={n_x2} domain=[{},{}]x[{},{}]\n",
                    fmt_bound(domain.a1),
                    fmt_bound(domain.b1),
                    fmt_bound(domain.a2),
                    fmt_bound(domain.b2)
                ));
                for row in rho.chunks(*n_x2.max(&1)) {
                    s.push_str(&row.iter().map(|v| e(*v)).collect::<Vec<_>>().join(","));
                    s.push('\n');
                }
            }
            Snapshot::Distribution1d { v, x, f } => {
                s.push_str("x\\v");
                for vk in v {
                    s.push(',');
                    s.push_str(&e(*vk));
                }
                s.push('\n');
                for (j, xj) in x.iter().enumerate() {
                    s.push_str(&e(*xj));
                    for val in &f[j * v.len()..(j + 1) * v.len()] {
                        s.push(',');
                        s.push_str(&e(*val));
                    }
                    s.push('\n');
                }
            }
        }
        s
    }
}

fn header_value<'a>(line: usize, header: &'a str, key: &str) -> Result<&'a str> {
    header
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| ExperimentError::parse(line, format!("header lacks `{key}=`")))
}

fn parse_interval(line: usize, s: &str) -> Result<(f64, f64)> {
    let inner = s
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| ExperimentError::parse(line, format!("bad interval `{s}`")))?;
    let (a, b) = inner.split_once(',').ok_or_else(|| ExperimentError::parse(line, format!("bad interval `{s}`")))?;
    Ok((float(line, a)?, float(line, b)?))
}

fn parse_domain(line: usize, s: &str) -> Result<Domain2d> {
    let (first, second) = s.split_once("]x[").ok_or_else(|| ExperimentError::parse(line, format!("bad domain `{s}`")))?;
    let (a1, b1) = parse_interval(line, &format!("{first}]"))?;
    let (a2, b2) = parse_interval(line, &format!("[{second}"))?;
    Ok(Domain2d { a1, b1, a2, b2 })
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().skip(1).map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

/// Parses any of the three snapshot layouts, told apart by the header.
pub fn parse_snapshot(text: &str) -> Result<Snapshot> {
    let header = text.lines().next().map(str::trim).unwrap_or("");
    if header == "x,rho" {
        let (mut x, mut rho) = (Vec::new(), Vec::new());
        for (i, line) in data_lines(text) {
            let row = floats(i, line)?;
            if row.len() != 2 {
                return Err(ExperimentError::parse(i, format!("expected 2 fields, got {}", row.len())));
            }
            x.push(row[0]);
            rho.push(row[1]);
        }
        Ok(Snapshot::Density1d { x, rho })
    } else if let Some(h) = header.strip_prefix('#') {
        let count = |key| -> Result<usize> {
            header_value(1, h, key)?
                .parse()
                .map_err(|_| ExperimentError::parse(1, format!("`{key}` is not a count")))
        };
        let (n_x1, n_x2) = (count("n_x1")?, count("n_x2")?);
        let domain = parse_domain(1, header_value(1, h, "domain")?)?;
        let mut rho = Vec::new();
        let mut rows = 0;
        for (i, line) in data_lines(text) {
            let row = floats(i, line)?;
            if row.len() != n_x2 {
                return Err(ExperimentError::parse(i, format!("expected {n_x2} values, got {}", row.len())));
            }
            rho.extend(row);
            rows += 1;
        }
        if rows != n_x1 {
            return Err(ExperimentError::parse(1, format!("expected {n_x1} rows, got {rows}")));
        }
        Ok(Snapshot::Density2d { n_x1, n_x2, domain, rho })
    } else if let Some(nodes) = header.strip_prefix("x\\v") {
        let v = match nodes.strip_prefix(',') {
            Some(list) => floats(1, list)?,
            None if nodes.is_empty() => Vec::new(),
            None => return Err(ExperimentError::parse(1, "expected `,` after `x\\v`")),
        };
        let (mut x, mut f) = (Vec::new(), Vec::new());
        for (i, line) in data_lines(text) {
            let row = floats(i, line)?;
            if row.len() != v.len() + 1 {
                return Err(ExperimentError::parse(i, format!("expected {} fields, got {}", v.len() + 1, row.len())));
            }
            x.push(row[0]);
            f.extend_from_slice(&row[1..]);
        }
        Ok(Snapshot::Distribution1d { v, x, f })
    } else {
        Err(ExperimentError::parse(1, format!("unrecognized snapshot header `{header}`")))
    }
}

/// File name stem for time `t`, e.g. `rho_t2` or `f_t0.5`.
pub fn snapshot_name(kind: &str, t: f64) -> String {
    format!("{kind}_t{t}.csv")
}
