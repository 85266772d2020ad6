use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use gtstokes::linalg::json::MatrixJson;
use gtstokes::linalg::{CMatrix, HermitianMatrix};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{source_name}:{line}:{column}: {message}")]
    Syntax {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{source_name}: field {field}: {message}")]
    Field {
        source_name: String,
        field: String,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Compute(#[from] gtstokes::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            CliError::Syntax {
                source_name,
                line,
                column,
                message,
            } => json!({"error": "parse", "source": source_name, "line": line, "column": column, "message": message}),
            CliError::Field {
                source_name,
                field,
                message,
            } => json!({"error": "parse", "source": source_name, "field": field, "message": message}),
            CliError::Usage(m) => json!({"error": "usage", "message": m}),
            CliError::Io { path, source } => json!({"error": "io", "source": path, "message": source.to_string()}),
            CliError::Compute(e) => json!({"error": "compute", "message": e.to_string()}),
            CliError::Csv(e) => json!({"error": "io", "message": e.to_string()}),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_text(path: Option<&Path>) -> CliResult<(String, String)> {
    match path {
        Some(p) if p != Path::new("-") => {
            let name = p.display().to_string();
            let text = fs::read_to_string(p).map_err(|source| CliError::Io {
                path: name.clone(),
                source,
            })?;
            Ok((name, text))
        }
        _ => {
            let mut text = String::new();
            io::stdin().read_to_string(&mut text).map_err(|source| CliError::Io {
                path: "<stdin>".into(),
                source,
            })?;
            Ok(("<stdin>".into(), text))
        }
    }
}

pub fn parse_matrix(name: &str, text: &str) -> CliResult<CMatrix> {
    let raw: MatrixJson = serde_json::from_str(text).map_err(|e| CliError::Syntax {
        source_name: name.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    raw.to_matrix().map_err(|e| {
        let msg = match e {
            gtstokes::Error::Parse(m) => m,
            other => other.to_string(),
        };
        let (field, message) = msg.split_once(": ").unwrap_or(("entries", msg.as_str()));
        CliError::Field {
            source_name: name.into(),
            field: field.into(),
            message: message.into(),
        }
    })
}

pub fn read_hermitian(path: Option<&Path>) -> CliResult<HermitianMatrix> {
    let (name, text) = read_text(path)?;
    let m = parse_matrix(&name, &text)?;
    HermitianMatrix::new(m).map_err(|e| CliError::Field {
        source_name: name,
        field: "entries".into(),
        message: e.to_string(),
    })
}

/// Comma-separated reals, as in `--u 0,1,3`.
pub fn parse_list(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .enumerate()
        .map(|(i, t)| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Field {
                    source_name: format!("--{flag}"),
                    field: format!("[{i}]"),
                    message: format!("not a finite number: {t:?}"),
                })
        })
        .collect()
}

pub fn matrix_json(m: &CMatrix) -> MatrixJson {
    MatrixJson::from_matrix(m)
}

pub fn write_json<T: Serialize>(value: &T, output: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
    text.push('\n');
    match output {
        Some(p) if p != Path::new("-") => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        _ => io::stdout().write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

/// `report.json` -> `report.csv`, `report.decay.csv`, ...
pub fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
