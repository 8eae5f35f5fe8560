//! Gate-hiding point-and-permute garbling with full four-row tables.
//!
//! Every gate carries exactly four λ-bit rows whatever its function, so the
//! garbled circuit reveals only the topology.

use rand::{CryptoRng, RngCore};
use rayon::prelude::*;
use thiserror::Error;

use crate::bits::Bits;
use crate::circuit::{Circuit, CircuitError, CircuitTopology, WireId};
use crate::hash::{h, Domain};
use crate::codec::{Reader, Writer};

pub const SUPPORTED_LAMBDAS: [usize; 2] = [80, 128];
pub const DEFAULT_LAMBDA: usize = 128;
/// Width of the output-label commitments kept in [`DecodingInfo`].
pub const DECODE_COMMIT_BITS: usize = 64;

const GC_MAGIC: &[u8; 5] = b"GHGC1";
const ENC_MAGIC: &[u8; 5] = b"GHEN1";
const DEC_MAGIC: &[u8; 5] = b"GHDE1";

/// Tables are built in parallel once a circuit has this many gates.
const PAR_GATES: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GarbleError {
    #[error("unsupported parameters: {0}")]
    UnsupportedParams(String),
    #[error("expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("output wire {0}: label matches neither committed label")]
    UnknownLabel(WireId),
    #[error("malformed encoding: {0}")]
    Format(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub fn check_lambda(lambda: usize) -> Result<(), GarbleError> {
    if SUPPORTED_LAMBDAS.contains(&lambda) {
        Ok(())
    } else {
        Err(GarbleError::UnsupportedParams(format!(
            "lambda must be one of {SUPPORTED_LAMBDAS:?}, got {lambda}"
        )))
    }
}

/// A λ-bit wire label; its least significant bit is the color bit.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct WireLabel(Bits);

impl WireLabel {
    pub fn from_bits(bits: Bits) -> Self {
        WireLabel(bits)
    }

    pub fn bits(&self) -> &Bits {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn color(&self) -> bool {
        self.0.lsb()
    }
}

/// Both labels of every wire. Garbler-private.
#[derive(Clone, Debug)]
pub struct LabelStore {
    lambda: usize,
    labels: Vec<[WireLabel; 2]>,
}

impl LabelStore {
    fn sample<R: RngCore + CryptoRng>(lambda: usize, wires: usize, rng: &mut R) -> Self {
        let labels = (0..wires)
            .map(|_| {
                let zero = Bits::random(lambda, rng);
                let mut one = Bits::random(lambda, rng);
                one.set_bit(0, !zero.lsb());
                [WireLabel(zero), WireLabel(one)]
            })
            .collect();
        Self { lambda, labels }
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn label(&self, wire: WireId, value: bool) -> &WireLabel {
        &self.labels[wire as usize - 1][value as usize]
    }

    pub fn pair(&self, wire: WireId) -> &[WireLabel; 2] {
        &self.labels[wire as usize - 1]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodingInfo {
    lambda: usize,
    inputs: Vec<[WireLabel; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodingInfo {
    outputs: Vec<(WireId, [Bits; 2])>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GarbledInput(pub Vec<WireLabel>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GarbledOutput(pub Vec<WireLabel>);

/// Topology plus four ciphertext rows per gate, ordered by input color bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GarbledCircuit {
    lambda: usize,
    topology: CircuitTopology,
    tables: Vec<u8>,
}

/// Everything the garbler holds after garbling.
#[derive(Clone, Debug)]
pub struct Garbling {
    pub circuit: GarbledCircuit,
    pub encoding: EncodingInfo,
    pub decoding: DecodingInfo,
    pub labels: LabelStore,
}

fn gate_pad(gate: usize, a: &WireLabel, b: &WireLabel, lambda: usize) -> Bits {
    h(
        Domain::Gate,
        lambda,
        &[&(gate as u32).to_le_bytes(), a.as_bytes(), b.as_bytes()],
    )
}

fn commit(wire: WireId, label: &WireLabel) -> Bits {
    h(
        Domain::Dec,
        DECODE_COMMIT_BITS,
        &[&wire.to_le_bytes(), label.as_bytes()],
    )
}

pub fn garble<R: RngCore + CryptoRng>(
    lambda: usize,
    c: &Circuit,
    rng: &mut R,
) -> Result<(GarbledCircuit, EncodingInfo, DecodingInfo), GarbleError> {
    let g = garble_with_labels(lambda, c, rng)?;
    Ok((g.circuit, g.encoding, g.decoding))
}

/// Like [`garble`], also returning the full label store needed to build skip gates.
pub fn garble_with_labels<R: RngCore + CryptoRng>(
    lambda: usize,
    c: &Circuit,
    rng: &mut R,
) -> Result<Garbling, GarbleError> {
    check_lambda(lambda)?;
    let topo = c.topology();
    let labels = LabelStore::sample(lambda, topo.wire_count(), rng);
    let row_bytes = lambda / 8;

    let garble_gate = |g: usize| -> Vec<u8> {
        let wire = (topo.n + g + 1) as WireId;
        let (wa, wb, f) = c.gate(wire);
        let mut rows = vec![Bits::zeros(0); 4];
        for a in [false, true] {
            for b in [false, true] {
                let la = labels.label(wa, a);
                let lb = labels.label(wb, b);
                let out = labels.label(wire, f.eval(a, b));
                let row = (la.color() as usize) << 1 | lb.color() as usize;
                rows[row] = gate_pad(g, la, lb, lambda).xor(out.bits());
            }
        }
        rows.iter().flat_map(|r| r.as_bytes().to_vec()).collect()
    };
    let per_gate: Vec<Vec<u8>> = if topo.l >= PAR_GATES {
        (0..topo.l).into_par_iter().map(garble_gate).collect()
    } else {
        (0..topo.l).map(garble_gate).collect()
    };
    let mut tables = Vec::with_capacity(topo.l * 4 * row_bytes);
    for rows in per_gate {
        tables.extend_from_slice(&rows);
    }

    let encoding = EncodingInfo {
        lambda,
        inputs: (1..=topo.n as WireId)
            .map(|w| labels.pair(w).clone())
            .collect(),
    };
    let decoding = DecodingInfo {
        outputs: c
            .output_wires()
            .map(|w| {
                let [l0, l1] = labels.pair(w);
                (w, [commit(w, l0), commit(w, l1)])
            })
            .collect(),
    };
    Ok(Garbling {
        circuit: GarbledCircuit {
            lambda,
            topology: topo.clone(),
            tables,
        },
        encoding,
        decoding,
        labels,
    })
}

pub fn encode(e: &EncodingInfo, x: &[bool]) -> Result<GarbledInput, GarbleError> {
    if x.len() != e.inputs.len() {
        return Err(GarbleError::Arity {
            expected: e.inputs.len(),
            got: x.len(),
        });
    }
    Ok(GarbledInput(
        e.inputs
            .iter()
            .zip(x)
            .map(|(pair, &bit)| pair[bit as usize].clone())
            .collect(),
    ))
}

/// Evaluates every gate; labels that do not belong to the garbling yield garbage.
pub fn eval(gc: &GarbledCircuit, x: &GarbledInput) -> GarbledOutput {
    let topo = &gc.topology;
    assert_eq!(x.0.len(), topo.n, "garbled input has the wrong arity");
    let mut wires: Vec<WireLabel> = Vec::with_capacity(topo.wire_count());
    wires.extend(x.0.iter().cloned());
    for g in 0..topo.l {
        let la = &wires[topo.first_input[g] as usize - 1];
        let lb = &wires[topo.second_input[g] as usize - 1];
        let row = (la.color() as usize) << 1 | lb.color() as usize;
        let out = gate_pad(g, la, lb, gc.lambda).xor(&gc.row(g, row));
        wires.push(WireLabel(out));
    }
    GarbledOutput(
        topo.output_wires()
            .map(|w| wires[w as usize - 1].clone())
            .collect(),
    )
}

pub fn decode(d: &DecodingInfo, y: &GarbledOutput) -> Result<Vec<bool>, GarbleError> {
    if y.0.len() != d.outputs.len() {
        return Err(GarbleError::Arity {
            expected: d.outputs.len(),
            got: y.0.len(),
        });
    }
    d.outputs
        .iter()
        .zip(&y.0)
        .map(|((wire, commits), label)| {
            let c = commit(*wire, label);
            if c == commits[0] {
                Ok(false)
            } else if c == commits[1] {
                Ok(true)
            } else {
                Err(GarbleError::UnknownLabel(*wire))
            }
        })
        .collect()
}

impl GarbledCircuit {
    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn topology(&self) -> &CircuitTopology {
        &self.topology
    }

    pub fn row(&self, gate: usize, row: usize) -> Bits {
        let w = self.lambda / 8;
        let start = (gate * 4 + row) * w;
        Bits::from_bytes(self.tables[start..start + w].to_vec(), self.lambda)
    }

    /// `GHGC1 ‖ λ:u16 ‖ n,m,l:u32 ‖ A[l] ‖ B[l] ‖ tables`, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let t = &self.topology;
        let mut w = Writer::new(GC_MAGIC);
        w.u16(self.lambda as u16);
        w.u32(t.n as u32);
        w.u32(t.m as u32);
        w.u32(t.l as u32);
        t.first_input.iter().for_each(|&a| w.u32(a));
        t.second_input.iter().for_each(|&b| w.u32(b));
        w.bytes(&self.tables);
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, GarbleError> {
        let mut r = Reader::new(data, GC_MAGIC).map_err(GarbleError::Format)?;
        let fmt = GarbleError::Format;
        let lambda = r.u16().map_err(fmt)? as usize;
        check_lambda(lambda)?;
        let n = r.u32().map_err(fmt)? as usize;
        let m = r.u32().map_err(fmt)? as usize;
        let l = r.u32().map_err(fmt)? as usize;
        let first_input = r.u32s(l).map_err(fmt)?;
        let second_input = r.u32s(l).map_err(fmt)?;
        let tables = r.take(l * 4 * lambda / 8).map_err(fmt)?.to_vec();
        r.end().map_err(fmt)?;
        let topology = CircuitTopology {
            n,
            m,
            l,
            first_input,
            second_input,
        };
        topology.validate()?;
        Ok(Self {
            lambda,
            topology,
            tables,
        })
    }
}

impl EncodingInfo {
    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(ENC_MAGIC);
        w.u16(self.lambda as u16);
        w.u32(self.inputs.len() as u32);
        for [l0, l1] in &self.inputs {
            w.bytes(l0.as_bytes());
            w.bytes(l1.as_bytes());
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, GarbleError> {
        let fmt = GarbleError::Format;
        let mut r = Reader::new(data, ENC_MAGIC).map_err(fmt)?;
        let lambda = r.u16().map_err(fmt)? as usize;
        check_lambda(lambda)?;
        let n = r.u32().map_err(fmt)? as usize;
        let mut inputs = Vec::with_capacity(n);
        for _ in 0..n {
            let l0 = r.bits(lambda).map_err(fmt)?;
            let l1 = r.bits(lambda).map_err(fmt)?;
            inputs.push([WireLabel(l0), WireLabel(l1)]);
        }
        r.end().map_err(fmt)?;
        Ok(Self { lambda, inputs })
    }
}

impl DecodingInfo {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(DEC_MAGIC);
        w.u32(self.outputs.len() as u32);
        for (wire, [c0, c1]) in &self.outputs {
            w.u32(*wire);
            w.bytes(c0.as_bytes());
            w.bytes(c1.as_bytes());
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, GarbleError> {
        let fmt = GarbleError::Format;
        let mut r = Reader::new(data, DEC_MAGIC).map_err(fmt)?;
        let m = r.u32().map_err(fmt)? as usize;
        let mut outputs = Vec::with_capacity(m);
        for _ in 0..m {
            let wire = r.u32().map_err(fmt)?;
            let c0 = r.bits(DECODE_COMMIT_BITS).map_err(fmt)?;
            let c1 = r.bits(DECODE_COMMIT_BITS).map_err(fmt)?;
            outputs.push((wire, [c0, c1]));
        }
        r.end().map_err(fmt)?;
        Ok(Self { outputs })
    }
}
