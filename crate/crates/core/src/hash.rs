//! Domain-separated truncated SHA-256 and the hash-pad pair cipher.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::{byte_len, Bits};

pub const MAX_HASH_BITS: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HashError {
    #[error("requested {0} output bits, at most {MAX_HASH_BITS} available")]
    WidthTooLarge(usize),
}

/// Domain tags keep the different random-oracle uses independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// Garbled gate rows.
    Gate,
    /// Skip-gate trigger values and the chain-value hashes built on them.
    Trig,
    /// Chain context updates.
    Ctx,
    /// Commutative mixer inside context updates.
    Mix,
    /// Skip-gate ciphertext pads.
    Enc,
    /// Output label commitments used for decoding.
    Dec,
}

impl Domain {
    fn tag(self) -> &'static [u8] {
        match self {
            Domain::Gate => b"gate",
            Domain::Trig => b"trig",
            Domain::Ctx => b"ctx",
            Domain::Mix => b"T-mix",
            Domain::Enc => b"enc",
            Domain::Dec => b"dec",
        }
    }
}

/// SHA-256 over `"skipgc" ‖ tag ‖ width ‖ (len ‖ part)*`, truncated to `width` bits.
///
/// The width is hashed in, so outputs of different widths are unrelated
/// rather than prefixes of each other.
pub fn hash_trunc(domain: Domain, width: usize, parts: &[&[u8]]) -> Result<Bits, HashError> {
    if width > MAX_HASH_BITS {
        return Err(HashError::WidthTooLarge(width));
    }
    let mut h = Sha256::new();
    h.update(b"skipgc");
    let tag = domain.tag();
    h.update([tag.len() as u8]);
    h.update(tag);
    h.update((width as u16).to_le_bytes());
    for part in parts {
        h.update((part.len() as u32).to_le_bytes());
        h.update(part);
    }
    let digest = h.finalize();
    Ok(Bits::from_bytes(digest[..byte_len(width)].to_vec(), width))
}

/// Infallible variant for widths the caller has already validated.
pub(crate) fn h(domain: Domain, width: usize, parts: &[&[u8]]) -> Bits {
    hash_trunc(domain, width, parts).expect("hash width validated by caller")
}

/// `H(tweak ‖ a ‖ b) ⊕ plaintext`, a one-time pad keyed by a label pair.
pub fn pair_encrypt(key: (&Bits, &Bits), tweak: &[u8], plaintext: &Bits) -> Bits {
    let pad = h(
        Domain::Enc,
        plaintext.len(),
        &[tweak, key.0.as_bytes(), key.1.as_bytes()],
    );
    pad.xor(plaintext)
}

pub fn pair_decrypt(key: (&Bits, &Bits), tweak: &[u8], ciphertext: &Bits) -> Bits {
    pair_encrypt(key, tweak, ciphertext)
}
