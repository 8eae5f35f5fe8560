//! `GHSS1` binary encoding of skip sets.
//!
//! ```text
//! "GHSS1" mode:u8 alpha:u16 lambda:u16 count:u32
//! per gate: i:u32 j:u32 salt:[8] t0_rest t1_rest G0 G1 [t_c G_c k:u32]
//! ```
//!
//! Mode byte 1 is plain, 2 chained; bit `0x80` marks validated payloads.
//! Trigger rests take `ceil((alpha-1)/8)` bytes, ciphertexts `lambda/8`
//! bytes (plus 4 when validated), `t_c` `alpha/8` and `G_c` `lambda/8` bytes.

use super::{CssGate, PssGate, Salt, SkipError, SkipGates, SkipMode, SkipParams, SkipSet};
use crate::bits::byte_len;
use crate::circuit::WireId;
use crate::codec::{Reader, Writer};

const MAGIC: &[u8; 5] = b"GHSS1";
const VALIDATED_FLAG: u8 = 0x80;

/// Bytes before the first gate.
pub const HEADER_BYTES: usize = 5 + 1 + 2 + 2 + 4;
/// Per-gate bytes that are not trigger values, ciphertexts or chain values:
/// the wire ids and the salt, plus the position for chained gates.
pub const PSS_FRAMING_BYTES: usize = 16;
pub const CSS_FRAMING_BYTES: usize = 20;

fn mode_byte(mode: SkipMode, validated: bool) -> u8 {
    let base = match mode {
        SkipMode::Pss => 1,
        SkipMode::Css => 2,
    };
    base | if validated { VALIDATED_FLAG } else { 0 }
}

fn write_pss(w: &mut Writer, g: &PssGate) {
    w.u32(g.i);
    w.u32(g.j);
    w.bytes(&g.salt.0);
    w.bytes(g.t0_rest.as_bytes());
    w.bytes(g.t1_rest.as_bytes());
    w.bytes(g.g[0].as_bytes());
    w.bytes(g.g[1].as_bytes());
}

fn read_pss(r: &mut Reader, p: &SkipParams) -> Result<PssGate, String> {
    let i = r.u32()?;
    let j = r.u32()?;
    let salt = Salt(r.take(8)?.try_into().unwrap());
    let t0_rest = r.bits(p.alpha - 1)?;
    let t1_rest = r.bits(p.alpha - 1)?;
    let g0 = r.bits(p.payload_bits())?;
    let g1 = r.bits(p.payload_bits())?;
    if i == 0 || j == 0 || i == j {
        return Err(format!("invalid wire pair ({i}, {j})"));
    }
    Ok(PssGate {
        i,
        j,
        salt,
        t0_rest,
        t1_rest,
        g: [g0, g1],
    })
}

impl SkipSet {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut w = Writer::new(MAGIC);
        w.u8(mode_byte(self.mode(), p.validated));
        w.u16(p.alpha as u16);
        w.u16(p.lambda as u16);
        w.u32(self.len() as u32);
        match &self.gates {
            SkipGates::Pss(gates) => gates.iter().for_each(|g| write_pss(&mut w, g)),
            SkipGates::Css(gates) => {
                for g in gates {
                    write_pss(&mut w, &g.gate);
                    w.bytes(g.t_c.as_bytes());
                    w.bytes(g.g_c.as_bytes());
                    w.u32(g.k);
                }
            }
        }
        w.finish()
    }

    /// Parses a skip set whose gates release labels of wire `target`.
    pub fn from_bytes(data: &[u8], target: WireId) -> Result<Self, SkipError> {
        Self::parse(data, target).map_err(SkipError::Format)
    }

    fn parse(data: &[u8], target: WireId) -> Result<Self, String> {
        let mut r = Reader::new(data, MAGIC)?;
        let mode = r.u8()?;
        let alpha = r.u16()? as usize;
        let lambda = r.u16()? as usize;
        let validated = mode & VALIDATED_FLAG != 0;
        let params = SkipParams::new(alpha, lambda, validated).map_err(|e| e.to_string())?;
        let count = r.u32()? as usize;
        let gates = match mode & !VALIDATED_FLAG {
            1 => SkipGates::Pss(
                (0..count)
                    .map(|_| read_pss(&mut r, &params))
                    .collect::<Result<_, _>>()?,
            ),
            2 => {
                let mut gates = Vec::new();
                for idx in 0..count {
                    let gate = read_pss(&mut r, &params)?;
                    let t_c = r.bits(alpha)?;
                    let g_c = r.bits(lambda)?;
                    let k = r.u32()?;
                    if k as usize != idx + 1 {
                        return Err(format!("chain position {k} at index {idx}"));
                    }
                    gates.push(CssGate { gate, t_c, g_c, k });
                }
                SkipGates::Css(gates)
            }
            other => return Err(format!("unknown mode byte {other:#04x}")),
        };
        r.end()?;
        Ok(Self {
            params,
            target,
            gates,
        })
    }

    /// Checks that every gate reads wires among the first `n` inputs.
    pub fn check_inputs(&self, n: usize) -> Result<(), SkipError> {
        for g in self.pss_view() {
            if g.i as usize > n || g.j as usize > n {
                return Err(SkipError::Format(format!(
                    "gate reads wires ({}, {}) but the circuit has {n} inputs",
                    g.i, g.j
                )));
            }
        }
        Ok(())
    }
}

/// Payload bits per gate excluding framing, as stored.
pub fn stored_payload_bits(params: &SkipParams, mode: SkipMode) -> usize {
    let rest = byte_len(params.alpha - 1) * 8;
    let ct = byte_len(params.payload_bits()) * 8;
    let base = 2 * rest + 2 * ct;
    match mode {
        SkipMode::Pss => base,
        SkipMode::Css => base + params.alpha + params.lambda,
    }
}
