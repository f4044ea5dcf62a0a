use std::fs::{File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::metrics::{MuRegime, XiRegime};

/// Results CSV header, in column order.
pub const COLUMNS: [&str; 20] = [
    "instance_id", "algo", "seed", "n", "k", "p", "q", "pcc", "rho", "mu", "xi", "xi_tilde",
    "regime_mu_xitilde", "regime_xi", "alpha", "acd", "complete", "acd_exact", "generations", "wall_ms",
];

/// One algorithm × instance result. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub algo: String,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub pcc: Option<usize>,
    pub rho: f64,
    pub mu: Option<f64>,
    pub xi: Option<f64>,
    pub xi_tilde: Option<f64>,
    pub regime_mu_xitilde: Option<MuRegime>,
    pub regime_xi: Option<XiRegime>,
    pub alpha: f64,
    pub acd: Option<f64>,
    pub complete: bool,
    pub acd_exact: bool,
    pub generations: u64,
    pub wall_ms: u64,
}

impl RunRecord {
    pub fn key(&self) -> (String, String) {
        (self.instance_id.clone(), self.algo.clone())
    }
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_records_from(BufReader::new(file))
}

pub fn read_records_from<R: std::io::Read>(reader: R) -> Result<Vec<RunRecord>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Append-only results CSV. Rows are flushed one at a time so an
/// interrupted campaign keeps every completed pair.
pub struct ResultsStore {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl ResultsStore {
    /// Open `path` for appending, returning the store and the records it
    /// already holds.
    pub fn open(path: &Path) -> Result<(Self, Vec<RunRecord>), HarnessError> {
        let existing = if path.exists() && std::fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false) {
            read_records(path)?
        } else {
            Vec::new()
        };
        let fresh = existing.is_empty()
            && std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if fresh {
            writer.write_record(COLUMNS)?;
            writer.flush()?;
        }
        Ok((ResultsStore { path: path.to_path_buf(), writer }, existing))
    }

    pub fn append(&mut self, record: &RunRecord) -> Result<(), HarnessError> {
        self.writer.serialize(record)?;
        self.writer.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}

/// Results CSV bytes with data rows sorted by `(instance_id, algo)`.
pub fn canonical_csv(records: &[RunRecord]) -> Result<Vec<u8>, HarnessError> {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(RunRecord::key);
    let mut buf = Vec::new();
    write_records(&mut buf, &sorted)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample(id: &str, algo: &str) -> RunRecord {
        RunRecord {
            instance_id: id.into(),
            algo: algo.into(),
            seed: 42,
            n: 10,
            k: 2,
            p: Some(0.5),
            q: Some(0.1),
            pcc: Some(1),
            rho: 0.25,
            mu: Some(1.0 / 6.0),
            xi: Some(0.7),
            xi_tilde: Some(5.0 / 6.0),
            regime_mu_xitilde: Some(MuRegime::MuToXiTilde),
            regime_xi: Some(XiRegime::BelowXi),
            alpha: 0.9,
            acd: Some(0.8),
            complete: false,
            acd_exact: false,
            generations: 12,
            wall_ms: 3,
        }
    }

    #[test]
    fn header_matches_columns() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[sample("a", "GA(Rnd)")]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, COLUMNS.join(","));
        assert!(text.lines().nth(1).unwrap().contains("mu-to-xitilde,below-xi"));
    }

    #[test]
    fn missing_fields_are_empty_and_round_trip() {
        let mut r = sample("x", "GA(LMC)");
        r.p = None;
        r.q = None;
        r.mu = None;
        r.xi = None;
        r.xi_tilde = None;
        r.regime_mu_xitilde = None;
        r.regime_xi = None;
        r.acd = None;
        let mut buf = Vec::new();
        write_records(&mut buf, &[r.clone(), sample("y", "MA(Rnd)")]).unwrap();
        assert_eq!(read_records_from(&buf[..]).unwrap(), vec![r, sample("y", "MA(Rnd)")]);
    }

    #[test]
    fn store_appends_and_reopens() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        {
            let (mut store, existing) = ResultsStore::open(&path).unwrap();
            assert!(existing.is_empty());
            store.append(&sample("a", "A")).unwrap();
        }
        let (mut store, existing) = ResultsStore::open(&path).unwrap();
        assert_eq!(existing.len(), 1);
        store.append(&sample("b", "A")).unwrap();
        drop(store);
        let all = read_records(&path).unwrap();
        assert_eq!(all.len(), 2);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.matches("instance_id").count(), 1);
    }
}
