//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so the summary is always printed.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use skipgc::analysis::{
    find_skippable_pairs, plan_css_chain, prime_implicants, Cube, NImplicativeGroup,
    SkipChainPlan, SkippablePair,
};
use skipgc::circuit::{parse_circuit, Circuit, GateFn, TruthTable, WireId};
use skipgc::cost::{
    acc, acc_half, eac, eac_upper_bound, monte_carlo_validate, CostParams, MissAccounting,
    SubcircuitDag,
};
use skipgc::garble::{decode, encode, eval, garble, garble_with_labels};
use skipgc::skip::{
    evaluate_phase, garble_phase, gen_css, gen_pss, Mode, PipelineConfig, SkipGates, SkipParams,
    CSS_FRAMING_BYTES, HEADER_BYTES, PSS_FRAMING_BYTES,
};

// Pinned thresholds.
const C1_CIRCUITS: usize = 500;
const C1_TIME_LIMIT: Duration = Duration::from_secs(60);
const C2_TRIALS_PER_MODE: usize = 10_000;
const C2_INPUTS_PER_CIRCUIT: usize = 10;
const C2_ALPHA: usize = 32;
const C4_TRIALS: u64 = 100_000;
const C4_THETA: f64 = 0.5;
const C4_CHAIN: u32 = 8;
const SIGMA_BOUND: f64 = 3.0;
const C5_IDENTITY_TOL: f64 = 1e-9;
const C5_MC_TOL: f64 = 0.01;
const C5_MC_TRIALS: u64 = 2_000_000;
const C5_TIME_LIMIT: Duration = Duration::from_secs(30);
const C7_RANDOM_SIX: usize = 200;
const C7_TIME_LIMIT: Duration = Duration::from_secs(300);
const C8_DAGS: usize = 100;
const C8_MAX_NODES: usize = 20;
const C8_EQ_TOL: f64 = 1e-12;
const C9_GATES: usize = 100_000;
const C9_SIGNIFICANCE: f64 = 0.01;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bits_of(k: usize, n: usize) -> Vec<bool> {
    (0..n).map(|v| k >> v & 1 == 1).collect()
}

/// Random circuit with arbitrary gate functions; outputs only feed nothing.
fn random_circuit<R: Rng>(rng: &mut R, n: usize, l: usize, m: usize) -> Circuit {
    let internal = n + l - m;
    let (mut a, mut b, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for idx in 0..l {
        let wire = n + idx + 1;
        let limit = (wire - 1).min(internal);
        a.push(rng.gen_range(1..=limit) as WireId);
        b.push(rng.gen_range(1..=limit) as WireId);
        g.push(GateFn::from_bits(rng.gen_range(0..16)));
    }
    Circuit::new(n, m, a, b, g).expect("generator respects the wiring rules")
}

/// Single-output circuit biased towards monotone gates, which leaves more
/// skippable pairs than uniformly random tables.
fn skippable_circuit<R: Rng>(rng: &mut R) -> Circuit {
    const FNS: [GateFn; 4] = [GateFn::AND, GateFn::OR, GateFn::NAND, GateFn::NOR];
    let n = rng.gen_range(2..=10);
    let l = rng.gen_range(1..=24);
    let internal = n + l - 1;
    let (mut a, mut b, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for idx in 0..l {
        let wire = n + idx + 1;
        let limit = (wire - 1).min(internal);
        a.push(rng.gen_range(1..=limit) as WireId);
        b.push(rng.gen_range(1..=limit) as WireId);
        g.push(if rng.gen_bool(0.8) {
            FNS[rng.gen_range(0..4)]
        } else {
            GateFn::from_bits(rng.gen_range(0..16))
        });
    }
    Circuit::new(n, 1, a, b, g).unwrap()
}

fn c1_end_to_end() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let mut evaluations = 0usize;
    for idx in 0..C1_CIRCUITS {
        let n = rng.gen_range(1..=10);
        let l = rng.gen_range(1..=64);
        let m = rng.gen_range(1..=l.min(4));
        let c = random_circuit(&mut rng, n, l, m);
        let lambda = if idx % 2 == 0 { 128 } else { 80 };
        let (gc, e, d) = garble(lambda, &c, &mut rng).map_err(|e| e.to_string())?;
        for k in 0..1usize << n {
            let x = bits_of(k, n);
            let y = decode(&d, &eval(&gc, &encode(&e, &x).unwrap())).map_err(|e| e.to_string())?;
            ensure(y == c.eval_plain(&x).unwrap(), || format!("circuit {idx} input {x:?}"))?;
            evaluations += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < C1_TIME_LIMIT, || format!("took {elapsed:.1?}"))?;
    Ok(format!(
        "{C1_CIRCUITS} circuits, {evaluations} evaluations, 0 failures"
    ))
}

fn c2_skip_correctness() -> Outcome {
    let mut summary = Vec::new();
    for mode in [Mode::Pss, Mode::Css] {
        let cfg = PipelineConfig::new(128, C2_ALPHA, mode, false).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(202);
        let (mut trials, mut triggered) = (0, 0);
        while trials < C2_TRIALS_PER_MODE {
            let c = skippable_circuit(&mut rng);
            let phase = garble_phase(&cfg, &c, &mut rng).map_err(|e| e.to_string())?;
            let g = &phase.garbling;
            for _ in 0..C2_INPUTS_PER_CIRCUIT {
                let x: Vec<bool> = (0..c.n()).map(|_| rng.gen()).collect();
                let input = encode(&g.encoding, &x).unwrap();
                let (out, report) = evaluate_phase(&g.circuit, phase.skips.as_ref(), &input);
                if report.triggered {
                    triggered += 1;
                    ensure(out == eval(&g.circuit, &input), || {
                        format!("{mode}: triggered label differs from full evaluation")
                    })?;
                }
                let y = decode(&g.decoding, &out).map_err(|e| e.to_string())?;
                ensure(y == c.eval_plain(&x).unwrap(), || format!("{mode}: wrong output"))?;
                trials += 1;
            }
        }
        ensure(triggered > trials / 10, || format!("{mode}: only {triggered} triggers"))?;
        summary.push(format!("{mode} {triggered}/{trials} triggered"));
    }
    Ok(format!("0 mismatches; {}", summary.join(", ")))
}

/// Expected first firing position when walking `plan` on input `x`; `None`
/// once an assignment is neither a trigger nor a link.
fn expected_index(plan: &SkipChainPlan, x: &[bool]) -> Option<usize> {
    for (k, e) in plan.entries.iter().enumerate() {
        let seen = (x[e.i as usize - 1], x[e.j as usize - 1]);
        if e.trigger.iter().flatten().any(|f| f.assignment == seen) {
            return Some(k + 1);
        }
        if !e.link.iter().flatten().any(|&l| l == seen) {
            return None;
        }
    }
    None
}

fn c3_no_early_trigger() -> Outcome {
    let and6 = "6 1 5\n7 1 2 0001\n8 7 3 0001\n9 8 4 0001\n10 9 5 0001\n11 10 6 0001\n";
    let and_or = "4 1 3\n5 2 3 0111\n6 5 4 0111\n7 1 6 0001\n";
    let and3 = "3 1 2\n4 1 2 0001\n5 4 3 0001\n";
    let params = SkipParams::new(32, 128, false).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(303);
    let mut cases: Vec<(Circuit, SkipChainPlan)> = Vec::new();

    let c = parse_circuit(and6).unwrap();
    let pairs: Vec<SkippablePair> = find_skippable_pairs(&c, &[1, 2, 3, 4, 5, 6], 11)
        .unwrap()
        .into_iter()
        .filter(|p| [(1, 2), (3, 4), (5, 6)].contains(&(p.i, p.j)))
        .collect();
    cases.push((c, plan_css_chain(&pairs, None).unwrap()));

    let c = parse_circuit(and_or).unwrap();
    let pairs = find_skippable_pairs(&c, &[1, 2, 3, 4], 7).unwrap();
    cases.push((c, plan_css_chain(&pairs[..3], None).unwrap()));

    let c = parse_circuit(and3).unwrap();
    let group = NImplicativeGroup::derive(&c, 5, &[(1, true), (2, true), (3, true)]).unwrap();
    let mut plan = plan_css_chain(&[], Some(&group)).unwrap();
    let pairs = find_skippable_pairs(&c, &[1, 2, 3], 5).unwrap();
    // One pair ahead of the two group gates gives three gates in total.
    let head = plan_css_chain(&pairs[..1], None).unwrap();
    let mut entries = head.entries;
    for mut e in plan.entries.drain(..) {
        e.k = entries.len() as u32 + 1;
        entries.push(e);
    }
    plan.entries = entries;
    cases.push((c, plan));

    let mut sweeps = 0;
    for (c, plan) in &cases {
        ensure(plan.entries.len() == 3, || "chain is not three gates long".into())?;
        let target = *c.output_wires().end();
        for _ in 0..20 {
            let g = garble_with_labels(128, c, &mut rng).unwrap();
            let skips = gen_css(params, &g.labels, target, plan, &mut rng).map_err(|e| e.to_string())?;
            for k in 0..1usize << c.n() {
                let x = bits_of(k, c.n());
                let input = encode(&g.encoding, &x).unwrap();
                let (out, report) = evaluate_phase(&g.circuit, Some(&skips), &input);
                ensure(report.index == expected_index(plan, &x), || {
                    format!("x={x:?}: fired at {:?}, expected {:?}", report.index, expected_index(plan, &x))
                })?;
                ensure(out == eval(&g.circuit, &input), || format!("x={x:?}: wrong label"))?;
                sweeps += 1;
            }
        }
    }
    Ok(format!("{} chains, {sweeps} evaluations, no gate fired on a link assignment", cases.len()))
}

fn c4_trigger_statistics() -> Outcome {
    let n = 2 * C4_CHAIN as usize;
    let mut text = format!("{n} 1 {}\n{} 1 2 0001\n", n - 1, n + 1);
    for v in 3..=n {
        text.push_str(&format!("{} {} {v} 0001\n", n + v - 1, n + v - 2));
    }
    let c = parse_circuit(&text).unwrap();
    let target = *c.output_wires().end();
    let inputs: Vec<WireId> = (1..=n as WireId).collect();
    let pairs: Vec<SkippablePair> = find_skippable_pairs(&c, &inputs, target)
        .unwrap()
        .into_iter()
        .filter(|p| p.j == p.i + 1 && p.i % 2 == 1)
        .collect();
    ensure(pairs.len() == C4_CHAIN as usize, || format!("{} disjoint pairs", pairs.len()))?;
    let plan = plan_css_chain(&pairs, None).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(404);
    let g = garble_with_labels(128, &c, &mut rng).unwrap();
    let params = SkipParams::new(32, 128, false).unwrap();
    let skips = gen_css(params, &g.labels, target, &plan, &mut rng).unwrap();

    let mut first = vec![0u64; C4_CHAIN as usize + 1];
    for _ in 0..C4_TRIALS {
        let x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let (_, report) = evaluate_phase(&g.circuit, Some(&skips), &encode(&g.encoding, &x).unwrap());
        first[report.index.unwrap_or(0)] += 1;
    }
    let t = C4_TRIALS as f64;
    let check = |count: u64, p: f64, what: &str| {
        let sigma = (t * p * (1.0 - p)).sqrt();
        let dev = (count as f64 - t * p).abs() / sigma;
        ensure(dev <= SIGMA_BOUND, || format!("{what}: {count} is {dev:.2} sigma from {:.1}", t * p))
            .map(|_| dev)
    };
    let mut worst: f64 = 0.0;
    for k in 1..=C4_CHAIN as usize {
        let p = C4_THETA * (1.0 - C4_THETA).powi(k as i32 - 1);
        worst = worst.max(check(first[k], p, &format!("gate {k}"))?);
    }
    let overall = C4_TRIALS - first[0];
    worst = worst.max(check(overall, 1.0 - (1.0 - C4_THETA).powi(C4_CHAIN as i32), "overall")?);
    Ok(format!("{C4_TRIALS} trials, largest deviation {worst:.2} sigma"))
}

fn c5_cost_identity() -> Outcome {
    let start = Instant::now();
    let mut worst_identity: f64 = 0.0;
    for n_c in 1..=30 {
        for n in [1, 10, 1024] {
            let p = CostParams {
                theta: 0.5,
                t_h: 1.0,
                t_d: 3.0,
                n_gates: n,
                n_c,
            };
            let rel = ((acc(&p) - acc_half(&p)) / acc_half(&p)).abs();
            worst_identity = worst_identity.max(rel);
            ensure(rel <= C5_IDENTITY_TOL, || format!("n_c={n_c} N={n}: relative gap {rel:e}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_mc: f64 = 0.0;
    for n_c in [1, 2, 4, 8, 16] {
        for n in [1, 10, 1024] {
            let p = CostParams {
                theta: 0.5,
                t_h: 1.0,
                t_d: 3.0,
                n_gates: n,
                n_c,
            };
            let r = monte_carlo_validate(&p, C5_MC_TRIALS, MissAccounting::Closed, &mut rng)
                .map_err(|e| e.to_string())?;
            worst_mc = worst_mc.max(r.rel_error);
            ensure(r.rel_error < C5_MC_TOL, || format!("n_c={n_c} N={n}: {r:?}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < C5_TIME_LIMIT, || format!("took {elapsed:.1?}"))?;
    Ok(format!(
        "identity gap {worst_identity:.1e}, Monte Carlo error {:.3}%",
        100.0 * worst_mc
    ))
}

fn c6_space() -> Outcome {
    let c = parse_circuit("3 1 2\n4 2 3 0111\n5 1 4 0001\n").unwrap();
    let pairs = find_skippable_pairs(&c, &[1, 2, 3], 5).unwrap();
    let plan = plan_css_chain(&pairs, None).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(606);
    let mut lines = Vec::new();
    for (lambda, alpha) in [(128, 32), (80, 16)] {
        let g = garble_with_labels(lambda, &c, &mut rng).unwrap();
        let params = SkipParams::new(alpha, lambda, false).unwrap();
        let pss = gen_pss(params, &g.labels, 5, &pairs, &mut rng).unwrap();
        let css = gen_css(params, &g.labels, 5, &plan, &mut rng).unwrap();
        let count = pairs.len();
        let pss_bits = (pss.to_bytes().len() - HEADER_BYTES - count * PSS_FRAMING_BYTES) * 8 / count;
        let css_bits = (css.to_bytes().len() - HEADER_BYTES - count * CSS_FRAMING_BYTES) * 8 / count;
        ensure(pss_bits == 2 * alpha + 2 * lambda, || format!("PSS gate {pss_bits} bits"))?;
        ensure(css_bits == 3 * alpha + 3 * lambda, || format!("CSS gate {css_bits} bits"))?;
        lines.push(format!("({lambda},{alpha}): PSS {pss_bits}, CSS {css_bits} bits"));
    }
    Ok(lines.join("; "))
}

/// Maximal cubes among all `3^n` cubes that lie in the on-set.
fn oracle_primes(tt: &TruthTable) -> Vec<Cube> {
    let n = tt.var_count();
    let in_on_set = |care: u32, value: u32| {
        (0..1u32 << n)
            .filter(|k| k & care == value)
            .all(|k| tt.get(k as usize))
    };
    let mut implicants = Vec::new();
    for code in 0..3u32.pow(n as u32) {
        let (mut care, mut value, mut rest) = (0u32, 0u32, code);
        for v in 0..n {
            if rest % 3 != 0 {
                care |= 1 << v;
            }
            if rest % 3 == 2 {
                value |= 1 << v;
            }
            rest /= 3;
        }
        if in_on_set(care, value) {
            implicants.push((care, value));
        }
    }
    let mut primes: Vec<Cube> = implicants
        .iter()
        .filter(|&&(c, v)| {
            !implicants
                .iter()
                .any(|&(c2, v2)| c2 != c && c2 & c == c2 && (v ^ v2) & c2 == 0)
        })
        .map(|&(care, value)| Cube { care, value })
        .collect();
    primes.sort();
    primes
}

fn qmc_cubes(tt: &TruthTable) -> Vec<Cube> {
    let mut cubes: Vec<Cube> = prime_implicants(tt).unwrap().iter().map(|p| p.cube).collect();
    cubes.sort();
    cubes
}

fn c7_implicants() -> Outcome {
    let start = Instant::now();
    for f in 0..1usize << 16 {
        let tt = TruthTable::from_fn(4, |k| f >> k & 1 == 1).unwrap();
        ensure(qmc_cubes(&tt) == oracle_primes(&tt), || format!("4-variable function {f:#06x}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for idx in 0..C7_RANDOM_SIX {
        let tt = TruthTable::from_fn(6, |_| rng.gen()).unwrap();
        ensure(qmc_cubes(&tt) == oracle_primes(&tt), || format!("random 6-variable function {idx}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < C7_TIME_LIMIT, || format!("took {elapsed:.1?}"))?;
    Ok(format!("65536 four-variable and {C7_RANDOM_SIX} six-variable functions agree"))
}

fn c8_eac_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut strict = 0;
    for idx in 0..C8_DAGS {
        let n = rng.gen_range(1..=C8_MAX_NODES);
        let accs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
        let mut edges = Vec::new();
        for v in 0..n.saturating_sub(1) {
            edges.push((v, rng.gen_range(v + 1..n)));
            for w in v + 1..n {
                if rng.gen_bool(0.15) {
                    edges.push((v, w));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let theta = rng.gen_range(0.0..1.0);
        let dag = SubcircuitDag::new(accs.clone(), &edges).map_err(|e| e.to_string())?;
        let e = eac(&dag, theta)[dag.sink()];
        let bound = eac_upper_bound(&dag, theta);
        ensure(e <= bound * (1.0 + C8_EQ_TOL), || format!("dag {idx}: {e} > {bound}"))?;
        strict += (e < bound * (1.0 - C8_EQ_TOL)) as usize;

        let chain: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
        let dag = SubcircuitDag::new(accs, &chain).unwrap();
        let (e, bound) = (eac(&dag, theta)[dag.sink()], eac_upper_bound(&dag, theta));
        ensure((e - bound).abs() <= C8_EQ_TOL * bound.max(1.0), || {
            format!("chain {idx}: {e} != {bound}")
        })?;
    }
    Ok(format!("{C8_DAGS} dags within the bound ({strict} strictly), chains tight"))
}

fn chi_square_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(stat)
}

fn c9_uniformity() -> Outcome {
    let c = parse_circuit("3 1 2\n4 2 3 0111\n5 1 4 0001\n").unwrap();
    let pairs = find_skippable_pairs(&c, &[1, 2, 3], 5).unwrap();
    let params = SkipParams::new(32, 128, false).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(909);
    let mut rest_full = vec![0u64; 256];
    let mut rest_top = vec![0u64; 128];
    let mut cipher = vec![0u64; 256];
    let mut gates = 0;
    let mut salts = HashSet::new();
    while gates < C9_GATES {
        let g = garble_with_labels(128, &c, &mut rng).unwrap();
        let skips = gen_pss(params, &g.labels, 5, &pairs, &mut rng).unwrap();
        let SkipGates::Pss(list) = skips.gates() else { unreachable!() };
        for gate in list {
            for rest in [&gate.t0_rest, &gate.t1_rest] {
                let b = rest.as_bytes();
                b[..3].iter().for_each(|&x| rest_full[x as usize] += 1);
                rest_top[b[3] as usize] += 1;
            }
            for ct in &gate.g {
                ct.as_bytes().iter().for_each(|&x| cipher[x as usize] += 1);
            }
            salts.insert(gate.salt);
            gates += 1;
        }
    }
    let ps = [
        ("t_rest bytes", chi_square_p(&rest_full)),
        ("t_rest top bits", chi_square_p(&rest_top)),
        ("ciphertext bytes", chi_square_p(&cipher)),
    ];
    for (what, p) in ps {
        ensure(p >= C9_SIGNIFICANCE, || format!("{what}: p = {p:.4}"))?;
    }
    Ok(format!(
        "{gates} gates, {} distinct salts; p-values {}",
        salts.len(),
        ps.iter().map(|(w, p)| format!("{w} {p:.3}")).collect::<Vec<_>>().join(", ")
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 end-to-end correctness", c1_end_to_end),
        ("2 skip correctness", c2_skip_correctness),
        ("3 chained no-early-trigger", c3_no_early_trigger),
        ("4 trigger statistics", c4_trigger_statistics),
        ("5 cost formula identity", c5_cost_identity),
        ("6 space accounting", c6_space),
        ("7 implicant oracle equivalence", c7_implicants),
        ("8 accumulative cost bound", c8_eac_bound),
        ("9 uniformity", c9_uniformity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({elapsed:.1?})"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({elapsed:.1?})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
