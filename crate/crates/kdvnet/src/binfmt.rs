//! Little-endian framing shared by the dataset and checkpoint formats:
//! 4 magic bytes, `u16` major and minor version, a body, and a trailing
//! CRC-32 over everything before it.

use crate::error::{Error, Result};

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4], version: (u16, u16)) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(magic);
        w.u16(version.0);
        w.u16(version.1);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) {
        self.buf.reserve(v.len() * 8);
        for &x in v {
            self.f64(x);
        }
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    pub fn patch_u64(&mut self, offset: usize, v: u64) {
        self.buf[offset..offset + 8].copy_from_slice(&v.to_le_bytes());
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.u32(crc);
        self.buf
    }
}

/// Checks magic and version; returns `(major, minor)`.
pub(crate) fn check_header(
    bytes: &[u8],
    magic: &[u8; 4],
    format: &'static str,
    supported_major: u16,
) -> Result<(u16, u16)> {
    if bytes.len() < 8 {
        if bytes.len() < 4 || &bytes[..4] != magic {
            return Err(Error::BadMagic {
                format,
                found: bytes[..bytes.len().min(4)].to_vec(),
            });
        }
        return Err(Error::Truncated {
            format,
            expected: 8,
            found: bytes.len() as u64,
        });
    }
    if &bytes[..4] != magic {
        return Err(Error::BadMagic {
            format,
            found: bytes[..4].to_vec(),
        });
    }
    let major = u16::from_le_bytes([bytes[4], bytes[5]]);
    let minor = u16::from_le_bytes([bytes[6], bytes[7]]);
    if major != supported_major {
        return Err(Error::Version {
            format,
            major,
            minor,
            supported: supported_major,
        });
    }
    Ok((major, minor))
}

/// Verifies the trailing CRC of a file whose total length is already known
/// to be right.
pub(crate) fn check_crc(bytes: &[u8], format: &'static str) -> Result<()> {
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4-byte tail"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum {
            format,
            stored,
            computed,
        });
    }
    Ok(())
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    format: &'static str,
}

impl<'a> Reader<'a> {
    /// Reads `data` starting after the 8-byte header.
    pub fn new(data: &'a [u8], format: &'static str) -> Self {
        Self { data, pos: 8, format }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let Some(end) = end else {
            return Err(Error::Truncated {
                format: self.format,
                expected: (self.pos + n) as u64,
                found: self.data.len() as u64,
            });
        };
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| self.malformed("array length overflows"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    pub fn malformed(&self, detail: impl Into<String>) -> Error {
        Error::Malformed {
            format: self.format,
            detail: detail.into(),
        }
    }
}
