//! File formats: point clouds and tables as CSV, diagram tuples as JSON.
//!
//! Every real number is written with 17 significant digits so that reading a
//! file back reproduces the in-memory values bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::experiments::SweepResult;
use crate::geometry::PointCloud;
use crate::mechanism::MechanismTrace;
use crate::persistence::{Diagram, DiagramTuple, PersistencePair};

/// Shortest fixed-width rendering that round-trips: 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_infinite() && x > 0.0 {
        "inf".to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "Infinity" => Some(f64::INFINITY),
        t => t.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        kind => Error::Data {
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads one point per row, comma separated, with an optional header row.
pub fn read_points<R: Read>(reader: R) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut coords = Vec::new();
    let mut dim = None;
    let mut seen_header = false;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Option<Vec<f64>> = record.iter().map(parse_real).collect();
        let row = match parsed {
            Some(r) if r.iter().all(|v| v.is_finite()) => r,
            // a non-numeric first row is a header
            None if !seen_header && dim.is_none() && record.iter().any(|f| f.parse::<f64>().is_err()) => {
                seen_header = true;
                continue;
            }
            _ => {
                return Err(Error::Data {
                    line,
                    message: format!("expected finite numbers, got {:?}", record.iter().collect::<Vec<_>>()),
                })
            }
        };
        match dim {
            Some(d) if d != row.len() => {
                return Err(Error::Data {
                    line,
                    message: format!("expected {d} columns, got {}", row.len()),
                })
            }
            _ => dim = Some(row.len()),
        }
        coords.extend(row);
    }
    match dim {
        Some(d) if !coords.is_empty() => PointCloud::new(d, coords),
        _ => Err(Error::NoPoints),
    }
}

pub fn read_points_file(path: &Path) -> Result<PointCloud> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_points(std::io::BufReader::new(file))
}

pub fn write_points<W: Write>(cloud: &PointCloud, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in cloud.points() {
        w.write_record(p.iter().map(|&v| format_real(v))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// A diagram tuple plus the cap used for essential classes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramFile {
    pub cap: f64,
    pub diagrams: DiagramTuple,
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    birth: Box<RawValue>,
    death: Box<RawValue>,
}

#[derive(Serialize, Deserialize)]
struct DiagramJson {
    dim: usize,
    pairs: Vec<PairJson>,
}

#[derive(Serialize, Deserialize)]
struct FileJson {
    ell: usize,
    cap: Box<RawValue>,
    diagrams: Vec<DiagramJson>,
}

/// JSON literal for a real, with `"inf"` for positive infinity.
pub fn raw_real(x: f64) -> Box<RawValue> {
    let text = match format_real(x).as_str() {
        "inf" => "\"inf\"".to_string(),
        s => s.to_string(),
    };
    RawValue::from_string(text).expect("formatted reals are valid JSON")
}

fn real_from_raw(raw: &RawValue, what: &str) -> Result<f64> {
    let text = raw.get().trim_matches('"');
    parse_real(text).ok_or_else(|| Error::Data {
        line: 0,
        message: format!("{what}: cannot read {:?} as a number or \"inf\"", raw.get()),
    })
}

impl DiagramFile {
    pub fn to_json(&self) -> String {
        let doc = FileJson {
            ell: self.diagrams.ell(),
            cap: raw_real(self.cap),
            diagrams: self
                .diagrams
                .diagrams()
                .iter()
                .map(|d| DiagramJson {
                    dim: d.dim(),
                    pairs: d
                        .pairs()
                        .iter()
                        .map(|p| PairJson {
                            birth: raw_real(p.birth),
                            death: raw_real(p.death),
                        })
                        .collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("diagram JSON serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FileJson = serde_json::from_str(text).map_err(|e| Error::Data {
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut diagrams = Vec::with_capacity(doc.diagrams.len());
        for d in &doc.diagrams {
            let pairs = d
                .pairs
                .iter()
                .map(|p| {
                    Ok(PersistencePair::new(
                        real_from_raw(&p.birth, "birth")?,
                        real_from_raw(&p.death, "death")?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            diagrams.push(Diagram::new(d.dim, pairs).map_err(as_data)?);
        }
        let diagrams = DiagramTuple::new(diagrams).map_err(as_data)?;
        if diagrams.ell() != doc.ell {
            return Err(Error::Data {
                line: 0,
                message: format!("ell = {} but {} diagrams listed", doc.ell, diagrams.diagrams().len()),
            });
        }
        Ok(Self {
            cap: real_from_raw(&doc.cap, "cap")?,
            diagrams,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

fn as_data(e: Error) -> Error {
    match e {
        Error::Data { .. } => e,
        other => Error::Data {
            line: 0,
            message: other.to_string(),
        },
    }
}

/// Columns `iter, utility, accepted, db_dim0, db_dim1, ...`.
pub fn write_trace<W: Write>(trace: &MechanismTrace, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dims = trace.records.first().map_or(0, |r| r.distances.len());
    let mut header = vec!["iter".to_string(), "utility".into(), "accepted".into()];
    header.extend((0..dims).map(|q| format!("db_dim{q}")));
    w.write_record(&header).map_err(csv_error)?;
    for r in &trace.records {
        let mut row = vec![
            r.iteration.to_string(),
            format_real(r.utility),
            u8::from(r.accepted).to_string(),
        ];
        row.extend(r.distances.iter().map(|&d| format_real(d)));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `axis, value, rep, db0, db1, ..., total`.
pub fn write_sweep<W: Write>(result: &SweepResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dims = result.rows.first().map_or(0, |r| r.db.len());
    let mut header = vec!["axis".to_string(), "value".into(), "rep".into()];
    header.extend((0..dims).map(|q| format!("db{q}")));
    header.push("total".into());
    w.write_record(&header).map_err(csv_error)?;
    for r in &result.rows {
        let mut row = vec![result.axis.name().to_string(), format_real(r.value), r.rep.to_string()];
        row.extend(r.db.iter().map(|&d| format_real(d)));
        row.push(format_real(r.total));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `axis, value, lower, median, upper` (2.5%, 50%, 97.5%).
pub fn write_summary<W: Write>(result: &SweepResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["axis", "value", "lower", "median", "upper"])
        .map_err(csv_error)?;
    for s in &result.summary {
        w.write_record([
            result.axis.name().to_string(),
            format_real(s.value),
            format_real(s.lower),
            format_real(s.median),
            format_real(s.upper),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
