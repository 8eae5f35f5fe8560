//! Fixed-width bit strings.
//!
//! Bit `k` lives in byte `k / 8` at position `k % 8`, so the least significant
//! bit of the string is bit 0 of the first byte. Bits beyond the width are kept
//! zero, which makes byte-wise equality and ordering agree with bit-wise ones.

use std::fmt;

use rand::RngCore;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bits {
    bytes: Vec<u8>,
    len: usize,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Self {
            bytes: vec![0; byte_len(len)],
            len,
        }
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bytes = vec![0; byte_len(len)];
        rng.fill_bytes(&mut bytes);
        Self::from_bytes(bytes, len)
    }

    /// Takes the first `len` bits of `bytes`; panics if `bytes` is too short.
    pub fn from_bytes(mut bytes: Vec<u8>, len: usize) -> Self {
        let n = byte_len(len);
        assert!(bytes.len() >= n, "need {n} bytes for {len} bits");
        bytes.truncate(n);
        let mut out = Self { bytes, len };
        out.clear_tail();
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit(&self, k: usize) -> bool {
        assert!(k < self.len);
        (self.bytes[k / 8] >> (k % 8)) & 1 == 1
    }

    pub fn set_bit(&mut self, k: usize, value: bool) {
        assert!(k < self.len);
        let mask = 1u8 << (k % 8);
        if value {
            self.bytes[k / 8] |= mask;
        } else {
            self.bytes[k / 8] &= !mask;
        }
    }

    pub fn lsb(&self) -> bool {
        self.bit(0)
    }

    /// Everything but the least significant bit, shifted down by one.
    pub fn rest(&self) -> Bits {
        let len = self.len.saturating_sub(1);
        let mut bytes = vec![0u8; byte_len(len)];
        for (idx, out) in bytes.iter_mut().enumerate() {
            let lo = self.bytes[idx] >> 1;
            let hi = self.bytes.get(idx + 1).map_or(0, |b| b << 7);
            *out = lo | hi;
        }
        Bits::from_bytes(bytes, len)
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        assert_eq!(self.len, other.len, "xor of bit strings with different widths");
        let bytes = self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| a ^ b)
            .collect();
        Bits {
            bytes,
            len: self.len,
        }
    }

    /// Zero-extends (or truncates) to `len` bits.
    pub fn resized(&self, len: usize) -> Bits {
        let mut bytes = self.bytes.clone();
        bytes.resize(byte_len(len), 0);
        Bits::from_bytes(bytes, len)
    }

    /// Bits `[start, start + len)` as a new string.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len);
        let mut out = Bits::zeros(len);
        for k in 0..len {
            out.set_bit(k, self.bit(start + k));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.bytes.iter().all(|&b| b == 0)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= (1u8 << rem) - 1;
            }
        }
    }
}

pub fn byte_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits<{}>(", self.len)?;
        for b in &self.bytes {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}
