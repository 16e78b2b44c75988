//! Cube file format.
//!
//! Layout (little-endian throughout):
//!
//! ```text
//! bytes 0..4    magic "HSC1"
//! bytes 4..8    n1 (u32)
//! bytes 8..12   n2 (u32)
//! bytes 12..16  n3 (u32)
//! bytes 16..    n1*n2*n3 IEEE-754 f64 payload values, in flat cube order
//! ```
//!
//! Round trips are bit-exact. Writes go to a temporary file in the target
//! directory and are renamed into place, so a failed write never leaves a
//! partial cube behind.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::cube::HsiCube;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"HSC1";
pub const HEADER_LEN: u64 = 16;

/// Reads and validates a cube file.
pub fn read_cube(path: &Path) -> Result<HsiCube> {
    let mut file = fs::File::open(path)?;
    let mut header = [0u8; HEADER_LEN as usize];
    let got = read_fully(&mut file, &mut header)?;
    if got < header.len() {
        return Err(Error::Format {
            offset: got as u64,
            msg: format!("truncated header: expected {HEADER_LEN} bytes, got {got}"),
        });
    }
    if header[0..4] != MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: format!(
                "bad magic {:?}, expected {:?}",
                &header[0..4],
                std::str::from_utf8(&MAGIC).unwrap()
            ),
        });
    }
    let n1 = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let n2 = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n3 = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    if n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(Error::Format {
            offset: 4,
            msg: format!("dimensions must be positive, got {n1}x{n2}x{n3}"),
        });
    }
    let total = (n1 as u64)
        .checked_mul(n2 as u64)
        .and_then(|v| v.checked_mul(n3 as u64))
        .and_then(|v| v.checked_mul(8))
        .ok_or(Error::Format {
            offset: 4,
            msg: format!("dimensions {n1}x{n2}x{n3} overflow the payload size"),
        })?;
    if total > usize::MAX as u64 {
        return Err(Error::Format {
            offset: 4,
            msg: format!("payload of {total} bytes exceeds the address space"),
        });
    }

    let mut payload = vec![0u8; total as usize];
    let got = read_fully(&mut file, &mut payload)?;
    if (got as u64) < total {
        return Err(Error::Format {
            offset: HEADER_LEN + got as u64,
            msg: format!(
                "truncated payload: expected {total} bytes, got {got}"
            ),
        });
    }
    let mut trailing = [0u8; 1];
    if file.read(&mut trailing)? != 0 {
        return Err(Error::Format {
            offset: HEADER_LEN + total,
            msg: "trailing bytes after payload".into(),
        });
    }

    let mut data = Vec::with_capacity(n1 * n2 * n3);
    for (idx, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Format {
                offset: HEADER_LEN + 8 * idx as u64,
                msg: format!("non-finite payload value {v} at entry {idx}"),
            });
        }
        data.push(v);
    }
    HsiCube::new(n1, n2, n3, data)
}

/// Writes a cube file atomically (temp file + rename).
pub fn write_cube(cube: &HsiCube, path: &Path) -> Result<()> {
    let dims = cube.dims();
    if dims.n1 > u32::MAX as usize || dims.n2 > u32::MAX as usize || dims.n3 > u32::MAX as usize {
        return Err(Error::InvalidArgument(format!(
            "dimensions {}x{}x{} exceed the u32 header fields",
            dims.n1, dims.n2, dims.n3
        )));
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    {
        let out = tmp.as_file_mut();
        out.write_all(&MAGIC)?;
        out.write_all(&(dims.n1 as u32).to_le_bytes())?;
        out.write_all(&(dims.n2 as u32).to_le_bytes())?;
        out.write_all(&(dims.n3 as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(cube.data().len() * 8);
        for v in cube.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
        out.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn read_fully(file: &mut fs::File, buf: &mut [u8]) -> Result<usize> {
    let mut at = 0;
    while at < buf.len() {
        let n = file.read(&mut buf[at..])?;
        if n == 0 {
            break;
        }
        at += n;
    }
    Ok(at)
}
