//! Checkpoint container: a UTF-8 key-value header followed by flat
//! little-endian f32 arrays in declared order.
//!
//! ```text
//! COLFCKPT 1
//! key=value
//! ...
//! arrays=leader,follower,critic
//! array.leader.len=12345
//! ...
//! <blank line>
//! <raw f32 little-endian data, concatenated in array order>
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "COLFCKPT 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Ordered key-value header entries.
    pub header: Vec<(String, String)>,
    /// Named flat arrays in declared index order.
    pub arrays: Vec<(String, Vec<f64>)>,
}

impl Checkpoint {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Checkpoint(format!("missing header key '{key}'")))
    }

    pub fn array(&self, name: &str) -> Result<&[f64]> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Checkpoint(format!("missing array '{name}'")))
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CHECKPOINT_MAGIC}")?;
    for (k, v) in &ckpt.header {
        debug_assert!(!k.contains('=') && !k.contains('\n') && !v.contains('\n'));
        writeln!(w, "{k}={v}")?;
    }
    let names: Vec<&str> = ckpt.arrays.iter().map(|(n, _)| n.as_str()).collect();
    writeln!(w, "arrays={}", names.join(","))?;
    for (n, data) in &ckpt.arrays {
        writeln!(w, "array.{n}.len={}", data.len())?;
    }
    writeln!(w)?;
    for (_, data) in &ckpt.arrays {
        for &v in data {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;

    // Header runs until the first blank line.
    let header_end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| Error::Checkpoint("no header terminator".into()))?;
    let header_str = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::Checkpoint("header is not UTF-8".into()))?;
    let mut lines = header_str.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(Error::Checkpoint("bad magic".into()));
    }

    let mut header = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut lens: Vec<(String, usize)> = Vec::new();
    for line in lines {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Checkpoint(format!("malformed header line '{line}'")))?;
        if k == "arrays" {
            names = if v.is_empty() { vec![] } else { v.split(',').map(String::from).collect() };
        } else if let Some(name) = k.strip_prefix("array.").and_then(|s| s.strip_suffix(".len")) {
            let n: usize = v
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad array length '{v}'")))?;
            lens.push((name.to_string(), n));
        } else {
            header.push((k.to_string(), v.to_string()));
        }
    }

    let mut data = &bytes[header_end + 2..];
    let mut arrays = Vec::new();
    for name in names {
        let len = lens
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, l)| *l)
            .ok_or_else(|| Error::Checkpoint(format!("no length for array '{name}'")))?;
        if data.len() < len * 4 {
            return Err(Error::Checkpoint("truncated array data".into()));
        }
        let vals = data[..len * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        data = &data[len * 4..];
        arrays.push((name, vals));
    }
    Ok(Checkpoint { header, arrays })
}
