//! JSON persistence helpers.
//!
//! Model files are written with every float at 17 significant digits so a
//! read-back is value-exact. Readers are plain serde_json.

use std::fs;
use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// serde_json formatter that prints floats with 17 significant digits,
/// enough to reconstruct any finite f64 exactly.
struct F64Formatter;

impl serde_json::ser::Formatter for F64Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // Mirrors serde_json's default behaviour for non-finite values.
            writer.write_all(b"null")
        }
    }
}

/// Serialize `value` to a JSON string with value-exact float formatting.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, F64Formatter);
    value.serialize(&mut ser).map_err(|source| Error::Json {
        path: "<memory>".into(),
        source,
    })?;
    // The formatter only ever emits UTF-8.
    Ok(String::from_utf8(buf).expect("json output is utf-8"))
}

/// Write `value` as JSON to `path`, creating parent directories as needed.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    let body = to_json_string(value)?;
    fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read and deserialize JSON from `path`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&body).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let xs = vec![0.1, -3.0e-300, 1.0 / 3.0, f64::MIN_POSITIVE, 123456.789];
        let s = to_json_string(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        for (a, b) in xs.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = to_json_string(&0.1f64).unwrap();
        assert_eq!(s, "1.0000000000000001e-1");
    }
}
