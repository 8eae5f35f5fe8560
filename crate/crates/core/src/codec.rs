//! Little-endian framing helpers for the binary file formats.

use crate::bits::{byte_len, Bits};

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8]) -> Self {
        Self {
            buf: magic.to_vec(),
        }
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

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8], magic: &[u8]) -> Result<Self, String> {
        if !data.starts_with(magic) {
            return Err(format!(
                "bad magic, expected `{}`",
                String::from_utf8_lossy(magic)
            ));
        }
        Ok(Self {
            data,
            pos: magic.len(),
        })
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.data.len())
            .ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, String> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u32s(&mut self, n: usize) -> Result<Vec<u32>, String> {
        (0..n).map(|_| self.u32()).collect()
    }

    /// `len` bits stored in `ceil(len / 8)` bytes; stray high bits are rejected.
    pub fn bits(&mut self, len: usize) -> Result<Bits, String> {
        let raw = self.take(byte_len(len))?.to_vec();
        let bits = Bits::from_bytes(raw.clone(), len);
        if bits.as_bytes() != raw.as_slice() {
            return Err(format!("non-zero padding bits before byte {}", self.pos));
        }
        Ok(bits)
    }

    pub fn end(&self) -> Result<(), String> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(format!("{} trailing bytes", self.data.len() - self.pos))
        }
    }
}
