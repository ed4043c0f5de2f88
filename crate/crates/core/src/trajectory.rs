//! Input/output time series and their CSV form (`t,u,y`, 1-based `t`).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A SISO trajectory `w = col(u, y)`. Both series have the same length and
/// only finite samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    u: Vec<f64>,
    y: Vec<f64>,
}

impl Trajectory {
    pub fn new(u: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::Dimension(format!("input has {} samples, output has {}", u.len(), y.len())));
        }
        if let Some(i) = u.iter().chain(&y).position(|v| !v.is_finite()) {
            let (series, t) = if i < u.len() { ("u", i) } else { ("y", i - u.len()) };
            return Err(Error::NonFinite(format!("{series}({}) is not finite", t + 1)));
        }
        Ok(Trajectory { u, y })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Drops the first `n` samples.
    pub fn skip(&self, n: usize) -> Trajectory {
        Trajectory { u: self.u[n..].to_vec(), y: self.y[n..].to_vec() }
    }

    /// Samples `start..end` (0-based, half-open).
    pub fn slice(&self, start: usize, end: usize) -> Trajectory {
        Trajectory { u: self.u[start..end].to_vec(), y: self.y[start..end].to_vec() }
    }

    pub fn with_output(&self, y: Vec<f64>) -> Result<Trajectory> {
        Trajectory::new(self.u.clone(), y)
    }

    pub fn read_csv<R: Read>(reader: R) -> std::result::Result<Self, CsvError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "u", "y"] {
            return Err(CsvError::Format(format!(
                "expected header t,u,y, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut u = Vec::new();
        let mut y = Vec::new();
        for (i, rec) in rdr.deserialize::<Sample>().enumerate() {
            let rec = rec?;
            if rec.t != i + 1 {
                return Err(CsvError::Format(format!("row {} has t = {}, expected {}", i + 1, rec.t, i + 1)));
            }
            u.push(rec.u);
            y.push(rec.y);
        }
        Trajectory::new(u, y).map_err(|e| CsvError::Format(e.to_string()))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), CsvError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "u", "y"])?;
        for (i, (u, y)) in self.u.iter().zip(&self.y).enumerate() {
            w.write_record([(i + 1).to_string(), u.to_string(), y.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::read_csv(file).map_err(|e| e.at(path))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| e.at(path))
    }
}

#[derive(Debug, Deserialize)]
struct Sample {
    t: usize,
    u: f64,
    y: f64,
}

/// CSV failure before a path is attached.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
}

impl CsvError {
    fn at(self, path: &Path) -> Error {
        match self {
            CsvError::Csv(source) => Error::Csv { path: path.into(), source },
            CsvError::Format(msg) => Error::Config(format!("{}: {msg}", path.display())),
        }
    }
}
