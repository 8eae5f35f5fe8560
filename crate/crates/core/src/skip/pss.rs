//! Plain skip gates.

use std::collections::HashSet;

use rand::{CryptoRng, RngCore};
use rayon::prelude::*;

use super::{
    build_gate, check_labels, key_hash, label_parts, open_payload, GenStats, Key, OpCounts,
    PssGate, SkipError, SkipGates, SkipParams, SkipSet, TriggerReport,
};
use crate::analysis::{SkippablePair, PAIR_ASSIGNMENTS};
use crate::bits::Bits;
use crate::circuit::WireId;
use crate::garble::{GarbledInput, LabelStore};
use crate::hash::pair_decrypt;

pub fn gen_pss<R: RngCore + CryptoRng>(
    params: SkipParams,
    labels: &LabelStore,
    target: WireId,
    pairs: &[SkippablePair],
    rng: &mut R,
) -> Result<SkipSet, SkipError> {
    gen_pss_with_stats(params, labels, target, pairs, rng).map(|(s, _)| s)
}

pub fn gen_pss_with_stats<R: RngCore + CryptoRng>(
    params: SkipParams,
    labels: &LabelStore,
    target: WireId,
    pairs: &[SkippablePair],
    rng: &mut R,
) -> Result<(SkipSet, GenStats), SkipError> {
    check_labels(&params, labels)?;
    let mut used = HashSet::new();
    let mut gates = Vec::with_capacity(pairs.len());
    let mut stats = GenStats::default();
    for (idx, p) in pairs.iter().enumerate() {
        let t0 = Key::real(labels, p.i, p.j, p.v0.assignment);
        let t1 = match p.v1 {
            Some(v1) => Key::real(labels, p.i, p.j, v1.assignment),
            None => Key::Sentinel(1),
        };
        let others: Vec<Key> = PAIR_ASSIGNMENTS
            .iter()
            .filter(|&&a| p.forcings().all(|f| f.assignment != a))
            .map(|&a| Key::real(labels, p.i, p.j, a))
            .collect();
        let r0 = labels.label(target, p.v0.result);
        let r1 = p.v1.map(|v| labels.label(target, v.result));
        let body = build_gate(
            &params,
            p.i,
            p.j,
            [&t0, &t1],
            [Some(r0), r1],
            &others,
            None,
            None,
            &mut used,
            idx,
            rng,
        )?;
        stats.salt_attempts.push(body.attempts);
        gates.push(body.gate);
    }
    Ok((
        SkipSet {
            params,
            target,
            gates: SkipGates::Pss(gates),
        },
        stats,
    ))
}

fn trigger_value(params: &SkipParams, gate: &PssGate, x: &GarbledInput) -> Bits {
    let a = &x.0[gate.i as usize - 1];
    let b = &x.0[gate.j as usize - 1];
    key_hash(params.alpha, &gate.salt, None, &label_parts(a, b))
}

fn matches(gate: &PssGate, t: &Bits) -> bool {
    let rest = t.rest();
    rest == gate.t0_rest || rest == gate.t1_rest
}

/// Runs the trigger test of `gate` for an already computed trigger value;
/// `None` when the padding check rejects the match.
fn try_open(
    params: &SkipParams,
    gate: &PssGate,
    t: &Bits,
    x: &GarbledInput,
    ops: &mut OpCounts,
) -> Option<crate::garble::WireLabel> {
    let a = &x.0[gate.i as usize - 1];
    let b = &x.0[gate.j as usize - 1];
    let ct = &gate.g[t.lsb() as usize];
    ops.decrypts += 1;
    let pt = pair_decrypt((a.bits(), b.bits()), &gate.salt.0, ct);
    let label = open_payload(params, &pt);
    if label.is_none() {
        ops.rejected += 1;
    }
    label
}

fn pss_gates(skips: &SkipSet) -> &[PssGate] {
    match &skips.gates {
        SkipGates::Pss(g) => g,
        SkipGates::Css(_) => panic!("eval_pss called on a chained skip set"),
    }
}

/// Tests the gates in order and stops at the first one that fires.
pub fn eval_pss(skips: &SkipSet, x: &GarbledInput) -> TriggerReport {
    let params = skips.params;
    let mut ops = OpCounts::default();
    for (idx, gate) in pss_gates(skips).iter().enumerate() {
        let t = trigger_value(&params, gate, x);
        ops.hashes += 1;
        ops.gates_tested += 1;
        if matches(gate, &t) {
            if let Some(label) = try_open(&params, gate, &t, x, &mut ops) {
                return TriggerReport::hit(idx + 1, label, ops);
            }
        }
    }
    TriggerReport::miss(ops)
}

/// Computes every trigger test concurrently, then opens the first match.
///
/// Yields the same result as [`eval_pss`] but always tests every gate.
pub fn eval_pss_par(skips: &SkipSet, x: &GarbledInput) -> TriggerReport {
    let params = skips.params;
    let gates = pss_gates(skips);
    let tests: Vec<Bits> = gates
        .par_iter()
        .map(|g| trigger_value(&params, g, x))
        .collect();
    let mut ops = OpCounts {
        hashes: gates.len() as u64,
        gates_tested: gates.len() as u64,
        ..OpCounts::default()
    };
    for (idx, (gate, t)) in gates.iter().zip(&tests).enumerate() {
        if matches(gate, t) {
            if let Some(label) = try_open(&params, gate, t, x, &mut ops) {
                return TriggerReport::hit(idx + 1, label, ops);
            }
        }
    }
    TriggerReport::miss(ops)
}
