//! Raw record files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! 0   magic      b"AHSP"
//! 4   version    u16 (= 1)
//! 6   flags      u16, bit 0: timestamp block present
//! 8   count      u64
//! 16  payload    ceil(count / 4) bytes; record k lives in byte k / 4,
//!                det_a at bit 2*(k % 4), det_b at bit 2*(k % 4) + 1,
//!                the last byte is zero padded
//! ..  timestamps count * u64 nanoseconds (only if flag bit 0)
//! ```

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::record::{Clicks, RecordSet};

pub const MAGIC: [u8; 4] = *b"AHSP";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;
const FLAG_TIMESTAMPS: u16 = 1;

/// Total encoded size of `count` records.
pub fn encoded_len(count: u64, timestamps: bool) -> u64 {
    HEADER_LEN as u64 + count.div_ceil(4) + if timestamps { 8 * count } else { 0 }
}

pub fn encode(records: &RecordSet) -> Vec<u8> {
    let n = records.len();
    let stamps = records.timestamps_ns();
    let mut out = Vec::with_capacity(encoded_len(n as u64, stamps.is_some()) as usize);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let flags = if stamps.is_some() { FLAG_TIMESTAMPS } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());

    for chunk in records.clicks().chunks(4) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (slot, c)| acc | c.bits() << (2 * slot));
        out.push(byte);
    }
    if let Some(stamps) = stamps {
        for t in stamps {
            out.extend_from_slice(&t.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<RecordSet> {
    if bytes.len() < HEADER_LEN {
        // a file too short to hold the magic is still reported as bad magic
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            let mut found = [0u8; 4];
            found[..bytes.len().min(4)].copy_from_slice(&bytes[..bytes.len().min(4)]);
            return Err(Error::BadMagic { found });
        }
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != MAGIC {
        return Err(Error::BadMagic { found });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let flags = u16::from_le_bytes([bytes[6], bytes[7]]);
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let has_stamps = flags & FLAG_TIMESTAMPS != 0;

    let expected = count
        .checked_mul(if has_stamps { 8 } else { 0 })
        .and_then(|t| t.checked_add(count.div_ceil(4)))
        .and_then(|p| p.checked_add(HEADER_LEN as u64))
        .unwrap_or(u64::MAX);
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(Error::invalid(
            "raw file",
            format!("{} trailing bytes after {expected}", actual - expected),
        ));
    }

    let n = count as usize;
    let payload = &bytes[HEADER_LEN..HEADER_LEN + n.div_ceil(4)];
    let clicks: Vec<Clicks> = (0..n)
        .map(|k| Clicks::from_bits(payload[k / 4] >> (2 * (k % 4))))
        .collect();
    if has_stamps {
        let block = &bytes[HEADER_LEN + n.div_ceil(4)..];
        let stamps = block
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(RecordSet::with_timestamps(clicks, stamps))
    } else {
        Ok(RecordSet::new(clicks))
    }
}

pub fn write_raw(records: &RecordSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode(records))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<RecordSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
