//! Chained skip gates.
//!
//! Gate `k` hashes its trigger test together with the context `c^{k-1}` and
//! masks its ciphertexts with `c_λ^{k-1}`. On a miss through one of the two
//! link assignments the evaluator learns one link hash, recovers the other
//! from the stored chain values and derives `c^k`:
//!
//! ```text
//! t_c = H_α(s, c_α, v3) ⊕ H_α(s, c_α, v4)
//! G_c = H_λ(s, c_λ, v3) ⊕ H_λ(s, c_λ, v4)
//! c_x' = H_x(s, c_x, T_x(h3, h4)),   T_x(a, b) = H_x(min(a, b), max(a, b))
//! ```
//!
//! A miss on any other assignment leaves the evaluator with a wrong context,
//! so no later gate can fire.

use std::collections::HashSet;

use rand::{CryptoRng, RngCore};

use super::{
    build_gate, check_labels, key_hash, label_parts, open_payload, CssGate, GenStats, Key,
    OpCounts, SkipError, SkipGates, SkipParams, SkipSet, TriggerReport,
};
use crate::analysis::{PlanMode, SkipChainPlan, PAIR_ASSIGNMENTS};
use crate::bits::Bits;
use crate::circuit::WireId;
use crate::garble::{GarbledInput, LabelStore, WireLabel};
use crate::hash::{h, pair_decrypt, Domain};
use super::Salt;

/// Running chain state `(c_α, c_λ)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ContextValues {
    pub c_alpha: Bits,
    pub c_lambda: Bits,
}

impl ContextValues {
    /// The public all-zero start value.
    pub fn initial(alpha: usize, lambda: usize) -> Self {
        Self {
            c_alpha: Bits::zeros(alpha),
            c_lambda: Bits::zeros(lambda),
        }
    }
}

/// Commutative mixer over two equal-width hash values.
pub fn mix(a: &Bits, b: &Bits) -> Bits {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    h(Domain::Mix, a.len(), &[lo.as_bytes(), hi.as_bytes()])
}

fn next_line(salt: &Salt, c: &Bits, t: &Bits) -> Bits {
    h(Domain::Ctx, c.len(), &[&salt.0, c.as_bytes(), t.as_bytes()])
}

fn link_hashes(salt: &Salt, ctx: &ContextValues, parts: &[&[u8]; 2]) -> (Bits, Bits) {
    (
        key_hash(ctx.c_alpha.len(), salt, Some(&ctx.c_alpha), parts),
        key_hash(ctx.c_lambda.len(), salt, Some(&ctx.c_lambda), parts),
    )
}

fn chain_values_of(salt: &Salt, ctx: &ContextValues, v3: &[&[u8]; 2], v4: &[&[u8]; 2]) -> (Bits, Bits) {
    let (a3, l3) = link_hashes(salt, ctx, v3);
    let (a4, l4) = link_hashes(salt, ctx, v4);
    (a3.xor(&a4), l3.xor(&l4))
}

/// Context after a miss, given the observed link hashes on both lines.
fn advance(salt: &Salt, ctx: &ContextValues, h_a: &Bits, h_l: &Bits, t_c: &Bits, g_c: &Bits) -> ContextValues {
    let t_a = mix(h_a, &t_c.xor(h_a));
    let t_l = mix(h_l, &g_c.xor(h_l));
    ContextValues {
        c_alpha: next_line(salt, &ctx.c_alpha, &t_a),
        c_lambda: next_line(salt, &ctx.c_lambda, &t_l),
    }
}

/// Chain values `(t_c, G_c)` for the link assignments `v3`, `v4`.
pub fn compute_chain_values(
    salt: &Salt,
    ctx: &ContextValues,
    v3: (&WireLabel, &WireLabel),
    v4: (&WireLabel, &WireLabel),
) -> (Bits, Bits) {
    chain_values_of(salt, ctx, &label_parts(v3.0, v3.1), &label_parts(v4.0, v4.1))
}

/// Evaluator-side context update after observing `observed` at a gate that
/// did not fire.
pub fn update_context(
    salt: &Salt,
    ctx: &ContextValues,
    observed: (&WireLabel, &WireLabel),
    t_c: &Bits,
    g_c: &Bits,
) -> ContextValues {
    let (h_a, h_l) = link_hashes(salt, ctx, &label_parts(observed.0, observed.1));
    advance(salt, ctx, &h_a, &h_l, t_c, g_c)
}

pub fn gen_css<R: RngCore + CryptoRng>(
    params: SkipParams,
    labels: &LabelStore,
    target: WireId,
    plan: &SkipChainPlan,
    rng: &mut R,
) -> Result<SkipSet, SkipError> {
    gen_css_with_stats(params, labels, target, plan, rng).map(|(s, _)| s)
}

pub fn gen_css_with_stats<R: RngCore + CryptoRng>(
    params: SkipParams,
    labels: &LabelStore,
    target: WireId,
    plan: &SkipChainPlan,
    rng: &mut R,
) -> Result<(SkipSet, GenStats), SkipError> {
    check_labels(&params, labels)?;
    if plan.mode != PlanMode::CssSerial {
        return Err(SkipError::UnsupportedParams(
            "chained skip gates need a serial plan".into(),
        ));
    }
    let mut ctx = ContextValues::initial(params.alpha, params.lambda);
    let mut stats = GenStats {
        salt_attempts: Vec::new(),
        contexts: vec![ctx.clone()],
    };
    let mut used = HashSet::new();
    let mut gates = Vec::with_capacity(plan.entries.len());
    for (idx, e) in plan.entries.iter().enumerate() {
        let real = |bits| Key::real(labels, e.i, e.j, bits);
        let trigger: Vec<Key> = (0..2)
            .map(|x| e.trigger[x].map_or(Key::Sentinel(x as u32), |f| real(f.assignment)))
            .collect();
        let link: Vec<Key> = (0..2)
            .map(|y| e.link[y].map_or(Key::Sentinel(2 + y as u32), real))
            .collect();
        let mut others = link.clone();
        others.extend(
            PAIR_ASSIGNMENTS
                .iter()
                .filter(|&&a| {
                    e.trigger.iter().flatten().all(|f| f.assignment != a)
                        && e.link.iter().flatten().all(|&l| l != a)
                })
                .map(|&a| real(a)),
        );
        let results = e.trigger.map(|f| f.map(|f| labels.label(target, f.result)));
        let body = build_gate(
            &params,
            e.i,
            e.j,
            [&trigger[0], &trigger[1]],
            results,
            &others,
            Some(&ctx.c_alpha),
            Some(&ctx.c_lambda),
            &mut used,
            idx,
            rng,
        )?;
        let salt = body.gate.salt;
        let [p3, p4] = [link[0].parts(), link[1].parts()];
        let (v3, v4) = (&[&p3[0][..], &p3[1][..]], &[&p4[0][..], &p4[1][..]]);
        let (t_c, g_c) = chain_values_of(&salt, &ctx, v3, v4);
        let (h_a, h_l) = link_hashes(&salt, &ctx, v3);
        ctx = advance(&salt, &ctx, &h_a, &h_l, &t_c, &g_c);
        stats.salt_attempts.push(body.attempts);
        stats.contexts.push(ctx.clone());
        gates.push(CssGate {
            gate: body.gate,
            t_c,
            g_c,
            k: e.k,
        });
    }
    Ok((
        SkipSet {
            params,
            target,
            gates: SkipGates::Css(gates),
        },
        stats,
    ))
}

/// Walks the chain in order, updating the context after every miss.
pub fn eval_css(skips: &SkipSet, x: &GarbledInput) -> TriggerReport {
    let gates = match &skips.gates {
        SkipGates::Css(g) => g,
        SkipGates::Pss(_) => panic!("eval_css called on a plain skip set"),
    };
    let params = skips.params;
    let mut ops = OpCounts::default();
    let mut ctx = ContextValues::initial(params.alpha, params.lambda);
    for (idx, cg) in gates.iter().enumerate() {
        let g = &cg.gate;
        let (a, b) = (&x.0[g.i as usize - 1], &x.0[g.j as usize - 1]);
        let parts = label_parts(a, b);
        let t = key_hash(params.alpha, &g.salt, Some(&ctx.c_alpha), &parts);
        ops.hashes += 1;
        ops.gates_tested += 1;
        let rest = t.rest();
        if rest == g.t0_rest || rest == g.t1_rest {
            let ct = &g.g[t.lsb() as usize];
            let unmasked = ct.xor(&ctx.c_lambda.resized(ct.len()));
            ops.decrypts += 1;
            let pt = pair_decrypt((a.bits(), b.bits()), &g.salt.0, &unmasked);
            match open_payload(&params, &pt) {
                Some(label) => return TriggerReport::hit(idx + 1, label, ops),
                None => ops.rejected += 1,
            }
        }
        let h_l = key_hash(params.lambda, &g.salt, Some(&ctx.c_lambda), &parts);
        ctx = advance(&g.salt, &ctx, &t, &h_l, &cg.t_c, &cg.g_c);
        // h_λ, two mixes and two line hashes.
        ops.hashes += 5;
        ops.context_updates += 1;
    }
    TriggerReport::miss(ops)
}
