//! Skip gates: short trigger tests that release a subcircuit's output label
//! early when a forcing assignment shows up on a wire pair.
//!
//! Two variants share the same gate layout. Plain skip gates ([`pss`]) are
//! independent of each other. Chained skip gates ([`css`]) bind every gate to
//! the miss history of the gates before it through a pair of running context
//! values, so a gate can only fire after all earlier gates were passed on one
//! of their link assignments.

pub mod css;
mod format;
pub mod pipeline;
pub mod pss;

use std::collections::HashSet;

use rand::{CryptoRng, RngCore};
use serde::Serialize;
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::bits::Bits;
use crate::circuit::WireId;
use crate::garble::{check_lambda, GarbleError, GarbledOutput, LabelStore, WireLabel};
use crate::hash::{h, pair_encrypt, Domain};

pub use css::{compute_chain_values, eval_css, gen_css, gen_css_with_stats, update_context, ContextValues};
pub use format::{stored_payload_bits, CSS_FRAMING_BYTES, HEADER_BYTES, PSS_FRAMING_BYTES};
pub use pipeline::{evaluate_phase, garble_phase, run_pipeline, GarblePhase, Mode, PipelineConfig};
pub use pss::{eval_pss, eval_pss_par, gen_pss, gen_pss_with_stats};

pub const DEFAULT_ALPHA: usize = 32;
pub const MIN_ALPHA: usize = 8;
pub const MAX_ALPHA: usize = 64;
/// Salt draws allowed per gate before giving up.
pub const MAX_SALT_ATTEMPTS: u32 = 1 << 16;
/// Zero padding appended to the result label in validated mode.
pub const VALIDATION_BITS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SkipError {
    #[error("unsupported parameters: {0}")]
    UnsupportedParams(String),
    #[error("no valid salt for skip gate {gate} after {MAX_SALT_ATTEMPTS} attempts; alpha is too small")]
    SaltExhaustion { gate: usize },
    #[error("malformed skip set: {0}")]
    Format(String),
    #[error(transparent)]
    Garble(#[from] GarbleError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Trigger width `alpha`, label width `lambda` and the optional padding check.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct SkipParams {
    pub alpha: usize,
    pub lambda: usize,
    pub validated: bool,
}

impl SkipParams {
    pub fn new(alpha: usize, lambda: usize, validated: bool) -> Result<Self, SkipError> {
        if !(MIN_ALPHA..=MAX_ALPHA).contains(&alpha) || alpha % 8 != 0 {
            return Err(SkipError::UnsupportedParams(format!(
                "alpha must be a multiple of 8 in [{MIN_ALPHA}, {MAX_ALPHA}], got {alpha}"
            )));
        }
        check_lambda(lambda)?;
        Ok(Self {
            alpha,
            lambda,
            validated,
        })
    }

    /// Plaintext width of the skip ciphertexts.
    pub fn payload_bits(&self) -> usize {
        self.lambda + if self.validated { VALIDATION_BITS } else { 0 }
    }
}

/// Public per-gate salt.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Salt(pub [u8; 8]);

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PssGate {
    pub i: WireId,
    pub j: WireId,
    pub salt: Salt,
    /// Trigger values without their permute bits.
    pub t0_rest: Bits,
    pub t1_rest: Bits,
    /// Ciphertexts addressed by permute bit.
    pub g: [Bits; 2],
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CssGate {
    pub gate: PssGate,
    pub t_c: Bits,
    pub g_c: Bits,
    pub k: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SkipMode {
    Pss,
    Css,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SkipGates {
    Pss(Vec<PssGate>),
    Css(Vec<CssGate>),
}

/// The skip gates for one subcircuit output.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SkipSet {
    params: SkipParams,
    target: WireId,
    gates: SkipGates,
}

impl SkipSet {
    pub fn empty(params: SkipParams, mode: SkipMode, target: WireId) -> Self {
        let gates = match mode {
            SkipMode::Pss => SkipGates::Pss(Vec::new()),
            SkipMode::Css => SkipGates::Css(Vec::new()),
        };
        Self {
            params,
            target,
            gates,
        }
    }

    pub fn params(&self) -> SkipParams {
        self.params
    }

    pub fn target(&self) -> WireId {
        self.target
    }

    pub fn gates(&self) -> &SkipGates {
        &self.gates
    }

    pub fn mode(&self) -> SkipMode {
        match self.gates {
            SkipGates::Pss(_) => SkipMode::Pss,
            SkipGates::Css(_) => SkipMode::Css,
        }
    }

    pub fn len(&self) -> usize {
        match &self.gates {
            SkipGates::Pss(g) => g.len(),
            SkipGates::Css(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The plain part of every gate, in order.
    pub fn pss_view(&self) -> Vec<&PssGate> {
        match &self.gates {
            SkipGates::Pss(g) => g.iter().collect(),
            SkipGates::Css(g) => g.iter().map(|c| &c.gate).collect(),
        }
    }
}

/// Exact operation counts of one evaluation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize)]
pub struct OpCounts {
    /// Hash calls outside ciphertext decryption.
    pub hashes: u64,
    /// Skip-ciphertext decryptions.
    pub decrypts: u64,
    /// Skip gates whose trigger test ran.
    pub gates_tested: u64,
    pub context_updates: u64,
    /// Garbled gates evaluated by the full evaluation.
    pub gate_evals: u64,
    /// Matches dropped by the padding check.
    pub rejected: u64,
}

impl OpCounts {
    /// Cost with every hash and every decryption charged individually.
    pub fn cost(&self, t_h: f64, t_d: f64) -> f64 {
        t_h * self.hashes as f64 + t_d * (self.decrypts + self.gate_evals) as f64
    }

    /// Cost charging `5 t_h` per tested skip gate and `t_d` per decryption,
    /// the accounting used by the closed-form average.
    pub fn accounted_cost(&self, t_h: f64, t_d: f64) -> f64 {
        5.0 * t_h * self.gates_tested as f64 + t_d * (self.decrypts + self.gate_evals) as f64
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TriggerReport {
    pub triggered: bool,
    /// 1-based position of the gate that fired.
    pub index: Option<usize>,
    pub result: Option<GarbledOutput>,
    pub ops: OpCounts,
}

impl TriggerReport {
    fn miss(ops: OpCounts) -> Self {
        Self {
            triggered: false,
            index: None,
            result: None,
            ops,
        }
    }

    fn hit(index: usize, label: WireLabel, ops: OpCounts) -> Self {
        Self {
            triggered: true,
            index: Some(index),
            result: Some(GarbledOutput(vec![label])),
            ops,
        }
    }
}

/// Generation side data: salt draws per gate and, for chains, the context
/// values `c^0..c^n` the garbler precomputed.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct GenStats {
    pub salt_attempts: Vec<u32>,
    pub contexts: Vec<ContextValues>,
}

/// Hash input standing for one assignment of a gate's wire pair.
///
/// Sentinels are reserved keys no evaluator input can produce; their parts
/// differ in length from any label, so they never collide with real keys.
#[derive(Clone, Debug)]
pub(crate) enum Key {
    Labels(WireLabel, WireLabel),
    Sentinel(u32),
}

impl Key {
    pub fn real(labels: &LabelStore, i: WireId, j: WireId, bits: (bool, bool)) -> Self {
        Key::Labels(labels.label(i, bits.0).clone(), labels.label(j, bits.1).clone())
    }

    pub fn parts(&self) -> [Vec<u8>; 2] {
        match self {
            Key::Labels(a, b) => [a.as_bytes().to_vec(), b.as_bytes().to_vec()],
            Key::Sentinel(id) => [b"SENTINEL".to_vec(), id.to_le_bytes().to_vec()],
        }
    }
}

/// `H(Trig, s ‖ [c] ‖ a ‖ b)` at the requested width.
pub(crate) fn key_hash(width: usize, salt: &Salt, ctx: Option<&Bits>, key: &[&[u8]; 2]) -> Bits {
    match ctx {
        Some(c) => h(Domain::Trig, width, &[&salt.0, c.as_bytes(), key[0], key[1]]),
        None => h(Domain::Trig, width, &[&salt.0, key[0], key[1]]),
    }
}

pub(crate) fn label_parts<'a>(a: &'a WireLabel, b: &'a WireLabel) -> [&'a [u8]; 2] {
    [a.as_bytes(), b.as_bytes()]
}

/// A generated gate body before chain data is attached.
pub(crate) struct GateBody {
    pub gate: PssGate,
    pub attempts: u32,
}

/// Rejection-samples a salt and builds trigger data and ciphertexts.
///
/// `trigger[x]` is the key that should release `result[x]`; `others` are
/// the remaining keys of the pair that must stay distinguishable. `mask` is
/// XORed into both ciphertexts.
#[allow(clippy::too_many_arguments)]
pub(crate) fn build_gate<R: RngCore + CryptoRng>(
    params: &SkipParams,
    i: WireId,
    j: WireId,
    trigger: [&Key; 2],
    result: [Option<&WireLabel>; 2],
    others: &[Key],
    ctx: Option<&Bits>,
    mask: Option<&Bits>,
    used: &mut HashSet<Salt>,
    gate_index: usize,
    rng: &mut R,
) -> Result<GateBody, SkipError> {
    let trig_parts = trigger.map(Key::parts);
    let other_parts: Vec<[Vec<u8>; 2]> = others.iter().map(Key::parts).collect();
    for attempt in 1..=MAX_SALT_ATTEMPTS {
        let mut raw = [0u8; 8];
        rng.fill_bytes(&mut raw);
        let salt = Salt(raw);
        if used.contains(&salt) {
            continue;
        }
        let hash = |p: &[Vec<u8>; 2]| key_hash(params.alpha, &salt, ctx, &[&p[0], &p[1]]);
        let t = [hash(&trig_parts[0]), hash(&trig_parts[1])];
        if t[0].lsb() == t[1].lsb() {
            continue;
        }
        let mut rests: Vec<Bits> = t.iter().map(Bits::rest).collect();
        rests.extend(other_parts.iter().map(|p| hash(p).rest()));
        let distinct: HashSet<&Bits> = rests.iter().collect();
        if distinct.len() != rests.len() {
            continue;
        }
        used.insert(salt);

        let width = params.payload_bits();
        let mut g = [Bits::zeros(width), Bits::zeros(width)];
        for x in 0..2 {
            let ct = match (&trigger[x], result[x]) {
                (Key::Labels(a, b), Some(r)) => {
                    let pt = r.bits().resized(width);
                    pair_encrypt((a.bits(), b.bits()), &salt.0, &pt)
                }
                _ => Bits::random(width, rng),
            };
            let ct = match mask {
                Some(m) => ct.xor(&m.resized(width)),
                None => ct,
            };
            g[t[x].lsb() as usize] = ct;
        }
        let [t0, t1] = t;
        return Ok(GateBody {
            gate: PssGate {
                i,
                j,
                salt,
                t0_rest: t0.rest(),
                t1_rest: t1.rest(),
                g,
            },
            attempts: attempt,
        });
    }
    Err(SkipError::SaltExhaustion { gate: gate_index })
}

/// Recovers the result label from a decrypted payload, checking the padding
/// in validated mode.
pub(crate) fn open_payload(params: &SkipParams, plaintext: &Bits) -> Option<WireLabel> {
    if params.validated && !plaintext.slice(params.lambda, VALIDATION_BITS).is_zero() {
        return None;
    }
    Some(WireLabel::from_bits(plaintext.resized(params.lambda)))
}

fn check_labels(params: &SkipParams, labels: &LabelStore) -> Result<(), SkipError> {
    if labels.lambda() != params.lambda {
        return Err(SkipError::UnsupportedParams(format!(
            "label width {} differs from lambda {}",
            labels.lambda(),
            params.lambda
        )));
    }
    Ok(())
}
