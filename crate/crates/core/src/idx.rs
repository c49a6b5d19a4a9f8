//! Reader for the IDX containers used by the MNIST distribution: a
//! big-endian 32-bit magic (2051 for images, 2049 for labels), big-endian
//! 32-bit dimensions, then unsigned bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;
pub const SIDE: usize = 28;
pub const PIXELS: usize = SIDE * SIDE;

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl Cursor<'_> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.offset + 4;
        let chunk = self.bytes.get(self.offset..end).ok_or_else(|| Error::Format {
            offset: self.offset as u64,
            message: format!("file ends before the {what} field"),
        })?;
        self.offset = end;
        Ok(u32::from_be_bytes(chunk.try_into().unwrap()))
    }

    fn expect_magic(&mut self, magic: u32) -> Result<()> {
        let at = self.offset as u64;
        let got = self.u32("magic")?;
        if got != magic {
            let hint = if got.swap_bytes() == magic { " (byte-swapped)" } else { "" };
            return Err(Error::Format {
                offset: at,
                message: format!("magic {got} does not match {magic}{hint}"),
            });
        }
        Ok(())
    }

    fn payload(&mut self, len: usize) -> Result<&[u8]> {
        let end = self.offset + len;
        if end > self.bytes.len() {
            return Err(Error::Format {
                offset: self.bytes.len() as u64,
                message: format!(
                    "payload truncated: expected {len} bytes from offset {}, file has {}",
                    self.offset,
                    self.bytes.len() - self.offset
                ),
            });
        }
        if end < self.bytes.len() {
            return Err(Error::Format {
                offset: end as u64,
                message: format!("{} unexpected trailing bytes", self.bytes.len() - end),
            });
        }
        let out = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(out)
    }
}

/// Parses an image file into `count` row-major 28×28 byte images.
pub fn parse_images(bytes: &[u8]) -> Result<Vec<Vec<u8>>> {
    let mut cur = Cursor { bytes, offset: 0 };
    cur.expect_magic(IMAGE_MAGIC)?;
    let count = cur.u32("image count")? as usize;
    for what in ["row count", "column count"] {
        let at = cur.offset as u64;
        let n = cur.u32(what)? as usize;
        if n != SIDE {
            return Err(Error::Format {
                offset: at,
                message: format!("{what} is {n}, expected {SIDE}"),
            });
        }
    }
    let payload = cur.payload(count * PIXELS)?;
    Ok(payload.chunks(PIXELS).map(<[u8]>::to_vec).collect())
}

/// Parses a label file.
pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor { bytes, offset: 0 };
    cur.expect_magic(LABEL_MAGIC)?;
    let count = cur.u32("label count")? as usize;
    Ok(cur.payload(count)?.to_vec())
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Serializes images in the IDX layout (for fixtures and round trips).
pub fn encode_images<'a, I>(images: I) -> Vec<u8>
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let payload: Vec<u8> = images.into_iter().flatten().copied().collect();
    let mut out = Vec::with_capacity(16 + payload.len());
    for v in [IMAGE_MAGIC, (payload.len() / PIXELS) as u32, SIDE as u32, SIDE as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend(payload);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
