//! Locale-independent number formatting and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::fv::{charge_density, FVField};

/// Twelve significant digits in scientific notation, e.g. `1.01515344513e1`.
/// Negative zero prints as zero.
pub fn num(x: f64) -> String {
    format!("{:.11e}", x + 0.0)
}

/// A flat record of `"key": value` pairs, rendered as a JSON object with
/// keys in insertion order.
#[derive(Debug, Default, Clone)]
pub struct Record {
    entries: Vec<(String, String)>,
}

impl Record {
    pub fn new() -> Self {
        Record::default()
    }

    pub fn number(&mut self, key: &str, value: f64) -> &mut Self {
        let rendered = if value.is_finite() { num(value) } else { "null".to_string() };
        self.entries.push((key.to_string(), rendered));
        self
    }

    pub fn text(&mut self, key: &str, value: &str) -> &mut Self {
        self.entries
            .push((key.to_string(), serde_json::Value::String(value.to_string()).to_string()));
        self
    }

    pub fn boolean(&mut self, key: &str, value: bool) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::from("{\n");
        for (i, (k, v)) in self.entries.iter().enumerate() {
            let sep = if i + 1 == self.entries.len() { "" } else { "," };
            out.push_str(&format!("  \"{k}\": {v}{sep}\n"));
        }
        out.push_str("}\n");
        out
    }
}

/// Rows of `x,re_phi,im_phi,re_chi,im_chi,rho`.
pub fn snapshot_table(field: &FVField) -> String {
    let rho = charge_density(field);
    let mut out = String::from("x,re_phi,im_phi,re_chi,im_chi,rho\n");
    for (k, x) in field.grid().points().enumerate() {
        let (p, c) = (field.phi()[k], field.chi()[k]);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            num(x),
            num(p.re),
            num(p.im),
            num(c.re),
            num(c.im),
            num(rho[k])
        ));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A file written by a command, with the digest of its contents.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Writes `contents` next to its final location and renames it into place.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<OutputFile> {
    fs::create_dir_all(dir)?;
    let target: PathBuf = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(OutputFile {
        file: name.to_string(),
        sha256: sha256_hex(contents.as_bytes()),
    })
}
