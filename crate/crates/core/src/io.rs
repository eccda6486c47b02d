//! Small file-format helpers shared by the data readers and writers:
//! atomic writes and the `# key=value` metadata header convention used by
//! the CSV formats.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

/// Write `contents` to `path` atomically: write to a sibling temporary file
/// and rename it into place so readers never observe a partial file.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Split a text file into its leading `# key=value` header lines and the
/// remaining body lines. Blank lines in the header region are skipped.
pub fn split_header(text: &str) -> (BTreeMap<String, String>, Vec<&str>) {
    let mut meta = BTreeMap::new();
    let mut body = Vec::new();
    let mut in_header = true;
    for line in text.lines() {
        let trimmed = line.trim();
        if in_header {
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            in_header = false;
        }
        if !trimmed.is_empty() {
            body.push(line);
        }
    }
    (meta, body)
}

/// Look up a required float in a parsed header.
pub fn header_f64(meta: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    let raw = meta
        .get(key)
        .ok_or_else(|| Error::Format(format!("missing header key `{key}`")))?;
    raw.parse()
        .map_err(|_| Error::Format(format!("header key `{key}` is not a number: {raw}")))
}

/// Render a metadata map as `# key=value` lines.
pub fn format_header(meta: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out
}

/// Read a whole file as UTF-8 text.
pub fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let mut meta = BTreeMap::new();
        meta.insert("T".to_string(), "0.01".to_string());
        meta.insert("f".to_string(), "4.1e9".to_string());
        let text = format!("{}1,2\n3,4\n", format_header(&meta));
        let (parsed, body) = split_header(&text);
        assert_eq!(parsed, meta);
        assert_eq!(body, vec!["1,2", "3,4"]);
        assert_eq!(header_f64(&parsed, "f").unwrap(), 4.1e9);
        assert!(header_f64(&parsed, "missing").is_err());
    }

    #[test]
    fn header_stops_at_first_data_row() {
        let (meta, body) = split_header("# a=1\n0,0\n# not=meta\n");
        assert_eq!(meta.len(), 1);
        assert_eq!(body.len(), 2, "post-data comment lines belong to the body");
    }

    #[test]
    fn atomic_write_creates_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        atomic_write(&path, b"x,y\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "x,y\n");
        // overwrite in place
        atomic_write(&path, b"z\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "z\n");
    }
}
