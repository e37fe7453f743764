//! File formats: DIMACS with a JSON sidecar, versioned CSV tables, state dumps.
//!
//! Every CSV starts with a `#schema <name> v<version>` line followed by the
//! column header. Floats use Rust's shortest round-trip formatting, so output
//! is byte-stable across runs.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hamiltonian::{Distribution, QubitLayout, StateVector};
use crate::ksat::{Clause, Formula, Literal};
use crate::landscape::{OverlapHistogram, SolutionSet};

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Parse(msg.into()))
}

/// Metadata stored next to a DIMACS file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaSidecar {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub alpha: Option<f64>,
}

impl FormulaSidecar {
    pub fn of(f: &Formula) -> Self {
        FormulaSidecar {
            n: f.n(),
            m: f.m(),
            k: f.k(),
            seed: f.seed(),
            alpha: f.alpha(),
        }
    }
}

pub fn dimacs_string(f: &Formula) -> String {
    let mut s = format!("p cnf {} {}\n", f.n(), f.m());
    for c in f.clauses() {
        for l in c.literals() {
            let v = l.var as i64 + 1;
            let _ = write!(s, "{} ", if l.negated { -v } else { v });
        }
        s.push_str("0\n");
    }
    s
}

/// Parse DIMACS text; the sidecar supplies `K`, seed and density when present.
pub fn parse_dimacs(text: &str, sidecar: Option<&FormulaSidecar>) -> Result<Formula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "cnf" {
                return parse_err(format!("line {}: malformed header", lineno + 1));
            }
            let n = parts[1]
                .parse()
                .map_err(|_| LabError::Parse(format!("line {}: bad n", lineno + 1)))?;
            let m = parts[2]
                .parse()
                .map_err(|_| LabError::Parse(format!("line {}: bad m", lineno + 1)))?;
            header = Some((n, m));
            continue;
        }
        if header.is_none() {
            return parse_err("clause before the 'p cnf' header");
        }
        for tok in line.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| LabError::Parse(format!("line {}: bad literal {tok:?}", lineno + 1)))?;
            if v == 0 {
                clauses.push(Clause::new(std::mem::take(&mut current))?);
            } else {
                current.push(Literal {
                    var: (v.unsigned_abs() - 1) as u32,
                    negated: v < 0,
                });
            }
        }
    }
    let Some((n, m)) = header else {
        return parse_err("missing 'p cnf' header");
    };
    if !current.is_empty() {
        return parse_err("last clause is not 0-terminated");
    }
    if clauses.len() != m {
        return parse_err(format!("header promises {m} clauses, found {}", clauses.len()));
    }
    let k = match sidecar {
        Some(sc) => {
            if sc.n != n || sc.m != m {
                return parse_err("sidecar disagrees with the DIMACS header");
            }
            sc.k
        }
        None => clauses.first().map(|c| c.width()).unwrap_or(1),
    };
    let seed = sidecar.map(|s| s.seed).unwrap_or(0);
    Ok(Formula::new(n, k, clauses, seed)?.with_alpha(sidecar.and_then(|s| s.alpha)))
}

/// Write `<stem>.cnf` and `<stem>.json`; returns both paths.
pub fn write_formula(f: &Formula, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let cnf = stem.with_extension("cnf");
    let side = stem.with_extension("json");
    fs::write(&cnf, dimacs_string(f))?;
    fs::write(&side, to_json_pretty(&FormulaSidecar::of(f))?)?;
    Ok((cnf, side))
}

pub fn read_formula(cnf: &Path) -> Result<Formula> {
    let text = fs::read_to_string(cnf)?;
    let side = cnf.with_extension("json");
    let sidecar = if side.exists() {
        Some(serde_json::from_str::<FormulaSidecar>(&fs::read_to_string(side)?)?)
    } else {
        None
    };
    parse_dimacs(&text, sidecar.as_ref())
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// In-memory CSV table with a versioned schema line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    schema: String,
    version: u32,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(schema: &str, version: u32, header: &[&str]) -> Self {
        CsvTable {
            schema: schema.to_string(),
            version,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn render(&self) -> String {
        let mut s = format!("#schema {} v{}\n{}\n", self.schema, self.version, self.header.join(","));
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.render())?)
    }

    /// Parse a table written by [`CsvTable::render`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let schema_line = lines.next().ok_or_else(|| LabError::Parse("empty CSV".into()))?;
        let rest = schema_line
            .strip_prefix("#schema ")
            .ok_or_else(|| LabError::Parse("missing #schema line".into()))?;
        let (name, ver) = rest
            .rsplit_once(" v")
            .ok_or_else(|| LabError::Parse("malformed #schema line".into()))?;
        let version = ver
            .parse()
            .map_err(|_| LabError::Parse("bad schema version".into()))?;
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| LabError::Parse("missing CSV header".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for line in lines {
            let row: Vec<String> = line.split(',').map(str::to_string).collect();
            if row.len() != header.len() {
                return parse_err(format!("row {line:?} does not match the header"));
            }
            rows.push(row);
        }
        Ok(CsvTable {
            schema: name.to_string(),
            version,
            header,
            rows,
        })
    }
}

/// `x_1 x_2 ... x_n` as a 0/1 string.
pub fn bit_string(x: u64, n: usize) -> String {
    (0..n).map(|i| if (x >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn solution_set_table(a: &SolutionSet) -> CsvTable {
    let mut t = CsvTable::new("solution_set", 1, &["index", "word", "assignment"]);
    for (i, &x) in a.members.iter().enumerate() {
        t.push(vec![i.to_string(), x.to_string(), bit_string(x, a.n)]);
    }
    t
}

pub fn histogram_table(h: &OverlapHistogram) -> CsvTable {
    let mut t = CsvTable::new("distance_histogram", 1, &["distance", "overlap", "pairs"]);
    for (d, &c) in h.counts.iter().enumerate() {
        t.push(vec![d.to_string(), (h.n - d).to_string(), c.to_string()]);
    }
    t
}

pub fn distribution_table(d: &Distribution) -> CsvTable {
    let mut t = CsvTable::new("measurement", 1, &["z", "bits", "probability"]);
    for (z, p) in d.support() {
        t.push(vec![z.to_string(), bit_string(z, d.qubits), p.to_string()]);
    }
    t
}

/// JSON header describing a binary state dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateHeader {
    pub qubits: usize,
    pub layout_hash: String,
    pub gamma: f64,
    /// Always `"complex128-le"`: interleaved little-endian `(re, im)` doubles.
    pub encoding: String,
    pub amplitudes: usize,
}

pub const STATE_ENCODING: &str = "complex128-le";

/// Write `<stem>.bin` and `<stem>.json`.
pub fn write_state(psi: &StateVector, layout: &QubitLayout, gamma: f64, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    if psi.qubits() != layout.qubits() {
        return Err(LabError::Parameter("state does not match the layout".into()));
    }
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let mut bytes = Vec::with_capacity(psi.amplitudes().len() * 16);
    for a in psi.amplitudes() {
        bytes.extend_from_slice(&a.re.to_le_bytes());
        bytes.extend_from_slice(&a.im.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    let header = StateHeader {
        qubits: psi.qubits(),
        layout_hash: layout.layout_hash(),
        gamma,
        encoding: STATE_ENCODING.into(),
        amplitudes: psi.amplitudes().len(),
    };
    fs::write(&json, to_json_pretty(&header)?)?;
    Ok((bin, json))
}

/// Read a dump; rejects it when `layout` is given and its hash differs.
pub fn read_state(stem: &Path, layout: Option<&QubitLayout>) -> Result<(StateHeader, StateVector)> {
    let header: StateHeader = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
    if header.encoding != STATE_ENCODING {
        return parse_err(format!("unknown state encoding {:?}", header.encoding));
    }
    if let Some(l) = layout {
        if l.layout_hash() != header.layout_hash {
            return parse_err("state dump was written for a different layout");
        }
    }
    let mut bytes = Vec::new();
    fs::File::open(stem.with_extension("bin"))?.read_to_end(&mut bytes)?;
    if bytes.len() != header.amplitudes * 16 || header.amplitudes != 1usize << header.qubits {
        return parse_err("state dump length does not match its header");
    }
    let amps = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    let psi = StateVector::from_amplitudes(header.qubits, amps)?;
    Ok((header, psi))
}

/// Read a file line by line; used for config echoes in manifests.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    BufReader::new(fs::File::open(path)?)
        .lines()
        .map(|l| l.map_err(LabError::from))
        .collect()
}

/// Write bytes, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}
