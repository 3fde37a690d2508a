//! CSV ingestion and emission of right-censored datasets.
//!
//! The input is comma-separated UTF-8 with a header row naming the columns
//! `w`, `delta`, optionally `eta`, and any number of covariate columns (in
//! header order, conventionally `z_1 … z_k`). Lines starting with `#` are
//! comments. Numbers are written with Rust's shortest round-trip formatting,
//! so a written dataset reads back bit-identically.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::data::Observation;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("required column `{0}` is missing")]
    MissingColumn(String),
    #[error("line {line}: column `{column}` must be 0 or 1, found `{value}`")]
    NonBinaryIndicator {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: observed time {value} is negative or not finite")]
    NegativeTime { line: u64, value: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedCovariates {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: column `{column}` is not a finite number: `{value}`")]
    BadNumber {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: eta = 1 where delta = 0")]
    EtaExceedsDelta { line: u64 },
    #[error("{count} rows rejected; first: {first}")]
    Rejected { count: usize, first: String },
    #[error("no data rows")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// The `eta` column must be present.
    pub require_eta: bool,
    /// Drop invalid rows (listed in the report) instead of failing.
    pub skip_bad: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub covariate_names: Vec<String>,
    pub has_eta: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub dataset: Dataset,
    pub rows_read: usize,
    pub rejected: Vec<Rejection>,
}

struct Columns {
    w: usize,
    delta: usize,
    eta: Option<usize>,
    covariates: Vec<usize>,
    width: usize,
}

fn locate(
    header: &csv::StringRecord,
    options: IngestOptions,
) -> Result<(Columns, Vec<String>), DatasetError> {
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let w = find("w").ok_or_else(|| DatasetError::MissingColumn("w".into()))?;
    let delta = find("delta").ok_or_else(|| DatasetError::MissingColumn("delta".into()))?;
    let eta = find("eta");
    if options.require_eta && eta.is_none() {
        return Err(DatasetError::MissingColumn("eta".into()));
    }
    let covariates: Vec<usize> = (0..header.len())
        .filter(|&i| i != w && i != delta && Some(i) != eta)
        .collect();
    let names = covariates
        .iter()
        .map(|&i| header[i].trim().to_string())
        .collect();
    Ok((
        Columns {
            w,
            delta,
            eta,
            covariates,
            width: header.len(),
        },
        names,
    ))
}

fn indicator(line: u64, column: &str, raw: &str) -> Result<bool, DatasetError> {
    match raw.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(DatasetError::NonBinaryIndicator {
            line,
            column: column.into(),
            value: other.into(),
        }),
    }
}

fn number(line: u64, column: &str, raw: &str) -> Result<f64, DatasetError> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DatasetError::BadNumber {
            line,
            column: column.into(),
            value: raw.into(),
        }),
    }
}

fn parse_row(
    line: u64,
    rec: &csv::StringRecord,
    cols: &Columns,
    names: &[String],
) -> Result<Observation, DatasetError> {
    if rec.len() != cols.width {
        return Err(DatasetError::RaggedCovariates {
            line,
            expected: cols.width,
            found: rec.len(),
        });
    }
    let w = match rec[cols.w].trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => v,
        _ => {
            return Err(DatasetError::NegativeTime {
                line,
                value: rec[cols.w].to_string(),
            })
        }
    };
    let delta = indicator(line, "delta", &rec[cols.delta])?;
    let z = cols
        .covariates
        .iter()
        .zip(names)
        .map(|(&i, name)| number(line, name, &rec[i]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut obs = Observation::new(w, delta, z);
    if let Some(i) = cols.eta {
        let eta = indicator(line, "eta", &rec[i])?;
        if eta && !delta {
            return Err(DatasetError::EtaExceedsDelta { line });
        }
        obs = obs.with_eta(eta);
    }
    Ok(obs)
}

/// Reads and validates a dataset from any reader.
pub fn ingest_reader<R: Read>(
    reader: R,
    options: IngestOptions,
) -> Result<IngestReport, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let (cols, names) = locate(&header, options)?;
    let mut observations = Vec::new();
    let mut rejected = Vec::new();
    let mut first_error = None;
    let mut rows_read = 0;
    for rec in rdr.records() {
        let rec = rec?;
        rows_read += 1;
        let line = rec.position().map_or(0, |p| p.line());
        match parse_row(line, &rec, &cols, &names) {
            Ok(o) => observations.push(o),
            Err(e) => {
                rejected.push(Rejection {
                    line,
                    reason: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        if !options.skip_bad {
            return Err(if rejected.len() == 1 {
                e
            } else {
                DatasetError::Rejected {
                    count: rejected.len(),
                    first: e.to_string(),
                }
            });
        }
    }
    if observations.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(IngestReport {
        dataset: Dataset {
            observations,
            covariate_names: names,
            has_eta: cols.eta.is_some(),
            note: String::new(),
        },
        rows_read,
        rejected,
    })
}

pub fn ingest_csv(path: &Path, options: IngestOptions) -> Result<IngestReport, DatasetError> {
    let mut report = ingest_reader(File::open(path)?, options)?;
    report.dataset.note = format!("read from {}", path.display());
    Ok(report)
}

/// Writes `# comment` lines, the header and one row per observation.
/// `eta` is written when every observation carries one.
pub fn write_csv<W: Write>(
    dataset: &Dataset,
    comments: &[String],
    mut out: W,
) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let with_eta =
        dataset.observations.iter().all(|o| o.eta.is_some()) && !dataset.observations.is_empty();
    let mut header = vec!["w".to_string(), "delta".to_string()];
    if with_eta {
        header.push("eta".into());
    }
    header.extend(dataset.covariate_names.iter().cloned());
    writeln!(out, "{}", header.join(","))?;
    for o in &dataset.observations {
        let mut row = vec![o.w.to_string(), u8::from(o.delta).to_string()];
        if with_eta {
            row.push(u8::from(o.eta == Some(true)).to_string());
        }
        row.extend(o.z.iter().map(|v| v.to_string()));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Default covariate names `z_1 … z_k`.
pub fn default_covariate_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("z_{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, options: IngestOptions) -> Result<IngestReport, DatasetError> {
        ingest_reader(text.as_bytes(), options)
    }

    #[test]
    fn well_formed_file() {
        let r = read(
            "# note\nw,delta,z_1\n1.5,1,3\n2,0,4\n0,1,5\n",
            IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(r.dataset.observations.len(), 3);
        assert_eq!(r.dataset.covariate_names, vec!["z_1"]);
        assert!(!r.dataset.has_eta);
        assert_eq!(
            r.dataset.observations[0],
            Observation::new(1.5, true, vec![3.0])
        );
    }

    #[test]
    fn rejects_bad_rows() {
        let e = read("w,delta,z_1\n1,2,0\n", IngestOptions::default()).unwrap_err();
        assert!(
            matches!(e, DatasetError::NonBinaryIndicator { line: 2, .. }),
            "{e}"
        );
        let e = read("w,delta,z_1\n-1,1,0\n", IngestOptions::default()).unwrap_err();
        assert!(matches!(e, DatasetError::NegativeTime { .. }));
        let e = read("w,delta,z_1\n1,1\n", IngestOptions::default()).unwrap_err();
        assert!(matches!(e, DatasetError::RaggedCovariates { .. }));
        let e = read("w,delta,eta\n1,0,1\n", IngestOptions::default()).unwrap_err();
        assert!(matches!(e, DatasetError::EtaExceedsDelta { .. }));
        let e = read(
            "w,delta,z_1\n1,1,0\n",
            IngestOptions {
                require_eta: true,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(e, DatasetError::MissingColumn(ref c) if c == "eta"));
        assert!(matches!(
            read("delta,z_1\n1,0\n", IngestOptions::default()),
            Err(DatasetError::MissingColumn(_))
        ));
    }

    #[test]
    fn skip_bad_keeps_the_rest() {
        let text = "w,delta,z_1\n1,1,0\n1,7,0\nx,1,0\n3,0,1\n";
        assert!(matches!(
            read(text, IngestOptions::default()),
            Err(DatasetError::Rejected { count: 2, .. })
        ));
        let r = read(
            text,
            IngestOptions {
                skip_bad: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.dataset.observations.len(), 2);
        assert_eq!(r.rows_read, 4);
        assert_eq!(
            r.rejected.iter().map(|x| x.line).collect::<Vec<_>>(),
            vec![3, 4]
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let obs = vec![
            Observation::new(0.1 + 0.2, true, vec![1.0 / 3.0, 1e-300]).with_eta(false),
            Observation::new(12.345678901234567, false, vec![-2.5, 7.0]).with_eta(false),
        ];
        let ds = Dataset {
            observations: obs,
            covariate_names: default_covariate_names(2),
            has_eta: true,
            note: String::new(),
        };
        let mut buf = Vec::new();
        write_csv(&ds, &["seed=1".into()], &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice(), IngestOptions::default()).unwrap();
        assert_eq!(back.dataset.observations, ds.observations);
        assert_eq!(back.dataset.covariate_names, ds.covariate_names);
    }
}
