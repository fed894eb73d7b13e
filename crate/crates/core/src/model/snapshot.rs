//! Serialized model state and run reports.
//!
//! A snapshot file is the magic bytes `HEIH`, a version byte, and then one
//! record per matrix until the end of the file:
//!
//! ```text
//! u32 name length | name (UTF-8) | u64 rows | u64 cols | rows·cols f64, row-major
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use crate::model::EpochRecord;
use crate::{Error, Matrix, Result};

const MAGIC: &[u8; 4] = b"HEIH";
const VERSION: u8 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Snapshot {
    pub matrices: Vec<(String, Matrix)>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, k: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.at < k {
            return Err(Error::Snapshot(format!(
                "truncated while reading {what} at byte {}",
                self.at
            )));
        }
        self.at += k;
        Ok(&self.bytes[self.at - k..self.at])
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

impl Snapshot {
    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.matrices.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        for (name, m) in &self.matrices {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
            for v in m.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 5 || &bytes[..4] != MAGIC {
            return Err(Error::Snapshot("missing HEIH magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {}", bytes[4])));
        }
        let mut r = Reader { bytes, at: 5 };
        let mut matrices = Vec::new();
        while r.at < bytes.len() {
            let len = u32::from_le_bytes(r.take(4, "name length")?.try_into().expect("4 bytes")) as usize;
            let name = std::str::from_utf8(r.take(len, "name")?)
                .map_err(|_| Error::Snapshot("matrix name is not UTF-8".into()))?
                .to_string();
            let rows = r.u64("rows")? as usize;
            let cols = r.u64("cols")? as usize;
            let count = rows
                .checked_mul(cols)
                .filter(|c| c.checked_mul(8).is_some_and(|b| b <= bytes.len()))
                .ok_or_else(|| Error::Snapshot(format!("{name}: implausible shape {rows}x{cols}")))?;
            let raw = r.take(count * 8, &name)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            matrices.push((name, Matrix::from_vec(rows, cols, data)?));
        }
        Ok(Self { matrices })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_bytes())?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Reads the `epoch,loss,train_acc,test_acc` history format.
pub fn parse_history_csv(text: &str) -> Result<Vec<EpochRecord>> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: "history".into(),
        line,
        msg,
    };
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("epoch")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(i + 1, format!("expected 4 fields, found {}", fields.len())));
        }
        let num = |k: usize| -> Result<f64> {
            fields[k]
                .trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("cannot read `{}`", fields[k])))
        };
        records.push(EpochRecord {
            epoch: fields[0]
                .trim()
                .parse()
                .map_err(|_| parse_err(i + 1, format!("cannot read epoch `{}`", fields[0])))?,
            loss: num(1)?,
            train_acc: num(2)?,
            test_acc: num(3)?,
        });
    }
    Ok(records)
}

/// `key=value` lines.
pub fn format_report(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        Snapshot {
            matrices: vec![
                ("a".into(), Matrix::from_rows(&[[1.0, -2.5], [f64::MIN_POSITIVE, 3.0]])),
                ("layer0.theta1".into(), Matrix::zeros(1, 3)),
            ],
        }
    }

    #[test]
    fn byte_layout() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..5], b"HEIH\x01");
        assert_eq!(&bytes[5..9], &1u32.to_le_bytes());
        assert_eq!(bytes[9], b'a');
        assert_eq!(&bytes[10..18], &2u64.to_le_bytes());
        assert_eq!(&bytes[26..34], &1.0f64.to_le_bytes());
        assert_eq!(Snapshot::from_bytes(&bytes).unwrap(), sample());
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let bytes = sample().to_bytes();
        assert!(Snapshot::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Snapshot::from_bytes(b"HEIX\x01").is_err());
        assert!(Snapshot::from_bytes(b"HEIH\x07").is_err());
        assert_eq!(Snapshot::from_bytes(b"HEIH\x01").unwrap(), Snapshot::default());
    }

    #[test]
    fn history_round_trip() {
        let text = "epoch,loss,train_acc,test_acc\n1,0.5,0.25,0.75\n2,0.1,1.0,0.5\n";
        let records = parse_history_csv(text).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1].loss, 0.1);
        assert!(parse_history_csv("1,2,3\n").is_err());
    }

    #[test]
    fn report_lines() {
        assert_eq!(format_report(&[("a", "1".into()), ("b", "x".into())]), "a=1\nb=x\n");
    }
}
