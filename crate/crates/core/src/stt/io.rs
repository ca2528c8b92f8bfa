//! Binary surrogate files.
//!
//! Layout: the magic bytes `STT1`, one line of JSON describing the surrogate,
//! then for every core three little-endian `u64` (its shape) followed by the
//! core entries as little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BuildInfo, Surrogate, SurrogateMode};
use crate::error::{Result, SttError};
use crate::quadrature::BasisSpec;
use crate::tt::Core;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"STT1";
/// Refuse headers beyond this size instead of reading a corrupt file forever.
const MAX_HEADER: usize = 64 << 20;

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    d: usize,
    mode: SurrogateMode,
    shapes: Vec<[usize; 3]>,
    ranks: Vec<usize>,
    order: Vec<usize>,
    basis: Vec<BasisSpec>,
    info: BuildInfo,
}

fn format_err(msg: impl Into<String>) -> SttError {
    SttError::Format(msg.into())
}

fn map_eof(e: std::io::Error) -> SttError {
    if e.kind() == ErrorKind::UnexpectedEof {
        format_err("truncated surrogate file")
    } else {
        SttError::Io(e)
    }
}

pub fn write_surrogate<W: Write>(s: &Surrogate, mut sink: W) -> Result<()> {
    s.validate()?;
    let header = Header {
        version: FORMAT_VERSION,
        d: s.ndim(),
        mode: s.mode,
        shapes: s.cores.iter().map(|c| [c.rl, c.n, c.rr]).collect(),
        ranks: s.ranks(),
        order: s.order.clone(),
        basis: s.basis.clone(),
        info: s.info.clone(),
    };
    sink.write_all(MAGIC)?;
    serde_json::to_writer(&mut sink, &header).map_err(|e| format_err(e.to_string()))?;
    sink.write_all(b"\n")?;
    for c in &s.cores {
        for dim in [c.rl, c.n, c.rr] {
            sink.write_all(&(dim as u64).to_le_bytes())?;
        }
        for x in &c.data {
            sink.write_all(&x.to_le_bytes())?;
        }
    }
    sink.flush()?;
    Ok(())
}

pub fn read_surrogate<R: Read>(mut source: R) -> Result<Surrogate> {
    let mut magic = [0u8; 4];
    source.read_exact(&mut magic).map_err(map_eof)?;
    if &magic != MAGIC {
        return Err(format_err("not a surrogate file (bad magic)"));
    }
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        source.read_exact(&mut byte).map_err(map_eof)?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > MAX_HEADER {
            return Err(format_err("header too long"));
        }
    }
    let raw: serde_json::Value = serde_json::from_slice(&line).map_err(|e| format_err(format!("bad header: {e}")))?;
    match raw.get("version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(format_err(format!(
                "unsupported surrogate format version {v}; this reader understands version {FORMAT_VERSION}"
            )))
        }
        None => return Err(format_err("header has no version")),
    }
    let header: Header = serde_json::from_value(raw).map_err(|e| format_err(format!("bad header: {e}")))?;
    if header.shapes.len() != header.d {
        return Err(format_err("header lists the wrong number of cores"));
    }

    let mut cores = Vec::with_capacity(header.d);
    let mut word = [0u8; 8];
    for (k, expect) in header.shapes.iter().enumerate() {
        let mut shape = [0usize; 3];
        for s in shape.iter_mut() {
            source.read_exact(&mut word).map_err(map_eof)?;
            *s = usize::try_from(u64::from_le_bytes(word)).map_err(|_| format_err("core dimension overflow"))?;
        }
        if &shape != expect {
            return Err(format_err(format!("core {k} shape {shape:?} disagrees with header {expect:?}")));
        }
        let len = shape
            .iter()
            .try_fold(1usize, |a, &b| a.checked_mul(b))
            .ok_or_else(|| format_err("core size overflow"))?;
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            source.read_exact(&mut word).map_err(map_eof)?;
            data.push(f64::from_le_bytes(word));
        }
        cores.push(Core::new(shape[0], shape[1], shape[2], data).map_err(|e| format_err(e.to_string()))?);
    }
    if source.read(&mut byte)? != 0 {
        return Err(format_err("trailing bytes after last core"));
    }
    let s = Surrogate { mode: header.mode, cores, basis: header.basis, order: header.order, info: header.info };
    s.validate().map_err(|e| format_err(e.to_string()))?;
    if s.ranks() != header.ranks {
        return Err(format_err("header ranks disagree with cores"));
    }
    Ok(s)
}

pub fn save_surrogate(s: &Surrogate, path: &Path) -> Result<()> {
    write_surrogate(s, BufWriter::new(File::create(path)?))
}

pub fn load_surrogate(path: &Path) -> Result<Surrogate> {
    read_surrogate(BufReader::new(File::open(path)?))
}
