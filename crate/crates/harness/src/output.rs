//! In-memory outputs of a run, CSV table building and the worker pool.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HarnessError, HarnessResult};

/// A named output file held in memory until the run is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Everything an experiment produces, before it touches the filesystem.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
    pub summary: serde_json::Value,
    /// Verdict of the experiment's own check, for experiments that have one.
    pub passed: Option<bool>,
    pub path_seeds: Vec<u64>,
    pub censored: Vec<usize>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }
}

/// Formats a float with the shortest representation that reads back exactly.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

/// RFC 4180 table with a header row.
pub struct Table {
    name: String,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, S>(name: &str, header: I) -> HarnessResult<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self {
            name: name.to_string(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> HarnessResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(self) -> HarnessResult<OutputFile> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        Ok(OutputFile { name: self.name, bytes })
    }
}

pub fn json_file<S: Serialize>(name: &str, value: &S) -> HarnessResult<OutputFile> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(OutputFile {
        name: name.to_string(),
        bytes,
    })
}

/// Evaluates `f(0..n)` on `workers` threads and returns the results in index
/// order, so any reduction over them is independent of scheduling.
pub fn map_ordered<R, F>(workers: usize, n: usize, f: F) -> HarnessResult<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Runtime(format!("worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_map_ignores_worker_count() {
        let one = map_ordered(1, 1000, |i| i * i).unwrap();
        let eight = map_ordered(8, 1000, |i| i * i).unwrap();
        assert_eq!(one, eight);
        assert_eq!(one[999], 999 * 999);
    }

    #[test]
    fn table_quotes_per_rfc4180() {
        let mut t = Table::new("t.csv", ["a", "b"]).unwrap();
        t.row(["1,5", "x\"y"]).unwrap();
        let f = t.finish().unwrap();
        assert_eq!(String::from_utf8(f.bytes).unwrap(), "a,b\n\"1,5\",\"x\"\"y\"\n");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1e-300, 2.0 / 3.0, -5.5e12] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(opt(None), "");
    }
}
