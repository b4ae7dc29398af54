//! Output files: CSV with a one-line header, JSON with `format_version`,
//! floats with 17 significant digits, and all-or-nothing writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::ser::Formatter;

pub const FORMAT_VERSION: u32 = 1;

/// `{:.16e}`: 17 significant digits, exact round trip for `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct SigDigits;

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Compact JSON (one trailing newline); non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// CSV text with the given header; rows are already formatted fields.
pub fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

/// Files to be written together.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn paths(&self) -> Vec<&Path> {
        self.files.iter().map(|(p, _)| p.as_path()).collect()
    }

    /// Writes every file to a temporary sibling first and renames only once
    /// all of them are on disk, so a failure leaves no output behind.
    pub fn commit(self) -> Result<()> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, bytes) in &self.files {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut tmp = tempfile::NamedTempFile::new_in(&dir).with_context(|| format!("creating a file in {}", dir.display()))?;
            tmp.write_all(bytes)?;
            tmp.as_file().sync_all()?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        let v = 2.0f64 / 3.0;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        let json = to_json(&serde_json::json!({"a": 0.1, "b": f64::NAN, "c": 3})).unwrap();
        assert_eq!(String::from_utf8(json).unwrap(), "{\"a\":1.0000000000000001e-1,\"b\":null,\"c\":3}\n");
    }

    #[test]
    fn csv_has_one_header_line() {
        let out = to_csv(&["t", "v"], vec![vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t,v\n1,2\n");
    }

    #[test]
    fn commit_writes_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = Outputs::default();
        o.add(dir.path().join("a.txt"), b"x".to_vec());
        o.add(dir.path().join("sub/b.txt"), b"y".to_vec());
        o.commit().unwrap();
        assert_eq!(std::fs::read(dir.path().join("sub/b.txt")).unwrap(), b"y");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    }
}
