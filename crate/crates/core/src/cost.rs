//! Expected evaluation cost of skip chains.
//!
//! Costs are in abstract units: `t_h` per hash, `t_d` per decryption. A chain
//! of `n_c` skip gates in front of an `N`-gate subcircuit fires at gate `k`
//! with probability `θ(1−θ)^{k−1}`, costing `5k·t_h + t_d`; when every gate
//! misses the whole subcircuit is evaluated for `N·t_d`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hash units charged per tested chained skip gate.
pub const CSS_TEST_HASHES: f64 = 5.0;
/// Fewest trials accepted by [`monte_carlo_validate`].
pub const MIN_TRIALS: u64 = 10_000;
const TRIALS_PER_CHUNK: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("invalid cost parameters: {0}")]
    InvalidParams(String),
    #[error("{0} trials requested, at least {MIN_TRIALS} needed")]
    TooFewTrials(u64),
    #[error("subcircuit graph has a cycle")]
    Cycle,
    #[error("invalid subcircuit graph: {0}")]
    InvalidDag(String),
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct CostParams {
    pub theta: f64,
    pub t_h: f64,
    pub t_d: f64,
    /// Gates in the (sub)circuit.
    pub n_gates: u64,
    /// Skip gates in the chain.
    pub n_c: u32,
}

impl CostParams {
    pub fn validate(&self) -> Result<(), CostError> {
        let bad = |msg: &str| Err(CostError::InvalidParams(msg.into()));
        if !(0.0..=1.0).contains(&self.theta) {
            return bad("theta must lie in [0, 1]");
        }
        if !(self.t_h >= 0.0 && self.t_d >= 0.0) || !self.t_h.is_finite() || !self.t_d.is_finite() {
            return bad("t_h and t_d must be finite and non-negative");
        }
        if self.n_gates == 0 {
            return bad("the circuit needs at least one gate");
        }
        Ok(())
    }

    fn miss_all(&self) -> f64 {
        (1.0 - self.theta).powi(self.n_c as i32)
    }
}

/// Per-gate first-trigger probabilities `θ(1−θ)^{k−1}` and their sum.
pub fn trigger_probabilities(theta: f64, n_c: u32) -> (Vec<f64>, f64) {
    let per_gate: Vec<f64> = (0..n_c as i32)
        .map(|k| theta * (1.0 - theta).powi(k))
        .collect();
    (per_gate, 1.0 - (1.0 - theta).powi(n_c as i32))
}

/// Expected cost with test cost `per_test` per gate, closed form.
fn closed_form(p: &CostParams, per_test: f64) -> f64 {
    let q = p.miss_all();
    let n = p.n_gates as f64;
    if p.theta == 0.0 {
        return n * p.t_d;
    }
    p.t_d + per_test / p.theta + q * n * p.t_d
        - q * (p.t_d + per_test * (p.n_c as f64 + 1.0 / p.theta))
}

/// Average cost of a chained-skip subcircuit, charging nothing for the
/// trigger tests when every gate misses.
///
/// `acc(θ → 0) = N·t_d` and `acc(θ = 1) = t_d + 5t_h`.
pub fn acc(p: &CostParams) -> f64 {
    closed_form(p, CSS_TEST_HASHES * p.t_h)
}

/// Like [`acc`], also charging the `5t_h·n_c` spent on trigger tests and
/// context updates when every gate misses, as instrumented evaluation does.
pub fn acc_instrumented(p: &CostParams) -> f64 {
    acc(p) + p.miss_all() * CSS_TEST_HASHES * p.t_h * p.n_c as f64
}

/// Average cost with plain skip gates tested in order at `t_h` each.
pub fn acc_pss(p: &CostParams) -> f64 {
    closed_form(p, p.t_h)
}

/// `N·t_d·2^{−n_c} + t_d + 10t_h − 2^{−n_c}·(t_d + 5t_h(n_c + 2))`, the
/// average at `θ = 1/2`.
pub fn acc_half(p: &CostParams) -> f64 {
    let q = 0.5f64.powi(p.n_c as i32);
    let n = p.n_gates as f64;
    n * p.t_d * q + p.t_d + 10.0 * p.t_h - q * (p.t_d + 5.0 * p.t_h * (p.n_c as f64 + 2.0))
}

/// Whether the all-miss outcome is charged for its trigger tests.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissAccounting {
    /// `N·t_d`, matching [`acc`].
    Closed,
    /// `N·t_d + 5t_h·n_c`, matching [`acc_instrumented`].
    Instrumented,
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub mean: f64,
    pub std_error: f64,
    pub analytic: f64,
    pub rel_error: f64,
    pub accounting: MissAccounting,
}

/// Simulates the sequential trigger process and compares the sample mean
/// with the matching closed form.
///
/// Trials run in fixed-size chunks, each with its own generator seeded from
/// one draw of `rng`, so results do not depend on the thread count.
pub fn monte_carlo_validate<R: RngCore + ?Sized>(
    p: &CostParams,
    trials: u64,
    accounting: MissAccounting,
    rng: &mut R,
) -> Result<MonteCarloReport, CostError> {
    simulate(p, CSS_TEST_HASHES * p.t_h, trials, accounting, rng)
}

fn simulate<R: RngCore + ?Sized>(
    p: &CostParams,
    per_test: f64,
    trials: u64,
    accounting: MissAccounting,
    rng: &mut R,
) -> Result<MonteCarloReport, CostError> {
    p.validate()?;
    if trials < MIN_TRIALS {
        return Err(CostError::TooFewTrials(trials));
    }
    let base = rng.next_u64();
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let miss_cost = p.n_gates as f64 * p.t_d
        + match accounting {
            MissAccounting::Closed => 0.0,
            MissAccounting::Instrumented => per_test * p.n_c as f64,
        };
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut r = ChaCha8Rng::seed_from_u64(base ^ chunk.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let count = TRIALS_PER_CHUNK.min(trials - chunk * TRIALS_PER_CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let hit = (1..=p.n_c).find(|_| r.gen_bool(p.theta));
                let cost = match hit {
                    Some(k) => per_test * k as f64 + p.t_d,
                    None => miss_cost,
                };
                s += cost;
                s2 += cost * cost;
            }
            (s, s2)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = trials as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    let analytic = closed_form(p, per_test)
        + match accounting {
            MissAccounting::Closed => 0.0,
            MissAccounting::Instrumented => p.miss_all() * per_test * p.n_c as f64,
        };
    Ok(MonteCarloReport {
        trials,
        mean,
        std_error: (var / n).sqrt(),
        analytic,
        rel_error: relative_error(mean, analytic),
        accounting,
    })
}

fn relative_error(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        ((value - reference) / reference).abs()
    }
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct CostRow {
    pub mode: String,
    pub gate_space_bits: usize,
    /// Best and worst evaluation time of one gate.
    pub gate_time: [f64; 2],
    pub circuit_worst: f64,
    pub circuit_avg: f64,
    pub simulated_avg: Option<f64>,
    pub rel_error: Option<f64>,
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct CostReport {
    pub lambda: usize,
    pub alpha: usize,
    pub params: CostParams,
    pub rows: Vec<CostRow>,
}

/// Space and time of the baseline, plain and chained schemes.
pub fn table1_report(lambda: usize, alpha: usize, p: &CostParams) -> Result<CostReport, CostError> {
    p.validate()?;
    let n = p.n_gates as f64;
    let (t_h, t_d) = (p.t_h, p.t_d);
    let row = |mode: &str, space, time: [f64; 2], worst, avg| CostRow {
        mode: mode.into(),
        gate_space_bits: space,
        gate_time: time,
        circuit_worst: worst,
        circuit_avg: avg,
        simulated_avg: None,
        rel_error: None,
    };
    Ok(CostReport {
        lambda,
        alpha,
        params: *p,
        rows: vec![
            row("baseline", 2 * lambda, [t_d, t_d], n * t_d, n * t_d),
            row("pss", 4 * lambda + 2 * alpha, [t_d + t_h, t_d + t_h], n * (t_d + t_h), acc_pss(p)),
            row(
                "css",
                5 * lambda + 3 * alpha,
                [t_d + t_h, t_d + 5.0 * t_h],
                n * (t_d + 5.0 * t_h),
                acc(p),
            ),
        ],
    })
}

impl CostReport {
    /// Fills the simulated column of the skip rows.
    pub fn simulate<R: RngCore + ?Sized>(&mut self, trials: u64, rng: &mut R) -> Result<(), CostError> {
        let p = self.params;
        for row in &mut self.rows {
            let per_test = match row.mode.as_str() {
                "pss" => p.t_h,
                "css" => CSS_TEST_HASHES * p.t_h,
                _ => continue,
            };
            let mc = simulate(&p, per_test, trials, MissAccounting::Closed, rng)?;
            row.simulated_avg = Some(mc.mean);
            row.rel_error = Some(relative_error(mc.mean, row.circuit_avg));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(
            f,
            "lambda={} alpha={} theta={} t_h={} t_d={} N={} n_c={}",
            self.lambda, self.alpha, p.theta, p.t_h, p.t_d, p.n_gates, p.n_c
        )?;
        writeln!(
            f,
            "{:<9} {:>10} {:>10} {:>10} {:>14} {:>14} {:>14} {:>10}",
            "mode", "space", "gate_best", "gate_worst", "circuit_worst", "circuit_avg", "simulated", "rel_err"
        )?;
        let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
        for r in &self.rows {
            writeln!(
                f,
                "{:<9} {:>10} {:>10.3} {:>10.3} {:>14.3} {:>14.3} {:>14} {:>10}",
                r.mode,
                r.gate_space_bits,
                r.gate_time[0],
                r.gate_time[1],
                r.circuit_worst,
                r.circuit_avg,
                opt(r.simulated_avg, 3),
                opt(r.rel_error, 5)
            )?;
        }
        Ok(())
    }
}

/// Subcircuits with their average costs and the edges between them.
#[derive(Clone, PartialEq, Debug)]
pub struct SubcircuitDag {
    ids: Vec<String>,
    acc: Vec<f64>,
    preds: Vec<Vec<usize>>,
    order: Vec<usize>,
    depth: Vec<u32>,
    sink: usize,
}

/// Node cost given directly or through chain parameters.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeCost {
    Acc { acc: f64 },
    Params(CostParams),
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct DagNodeSpec {
    pub id: String,
    #[serde(flatten)]
    pub cost: NodeCost,
}

/// JSON description of a subcircuit graph; an edge `[a, b]` feeds `a` into `b`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct DagSpec {
    pub nodes: Vec<DagNodeSpec>,
    pub edges: Vec<(String, String)>,
}

impl SubcircuitDag {
    /// Builds the graph; it must be acyclic with exactly one sink.
    pub fn new(acc: Vec<f64>, edges: &[(usize, usize)]) -> Result<Self, CostError> {
        let n = acc.len();
        Self::build((0..n).map(|i| i.to_string()).collect(), acc, edges)
    }

    pub fn from_spec(spec: &DagSpec) -> Result<Self, CostError> {
        let mut index = HashMap::new();
        let mut accs = Vec::new();
        for (i, node) in spec.nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(CostError::InvalidDag(format!("duplicate node `{}`", node.id)));
            }
            accs.push(match &node.cost {
                NodeCost::Acc { acc } => *acc,
                NodeCost::Params(p) => {
                    p.validate()?;
                    acc(p)
                }
            });
        }
        let lookup = |id: &String| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| CostError::InvalidDag(format!("unknown node `{id}`")))
        };
        let edges = spec
            .edges
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>, CostError>>()?;
        Self::build(spec.nodes.iter().map(|n| n.id.clone()).collect(), accs, &edges)
    }

    fn build(ids: Vec<String>, acc: Vec<f64>, edges: &[(usize, usize)]) -> Result<Self, CostError> {
        let n = acc.len();
        if n == 0 {
            return Err(CostError::InvalidDag("no nodes".into()));
        }
        if acc.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(CostError::InvalidDag("node costs must be finite and non-negative".into()));
        }
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(CostError::InvalidDag(format!("edge ({a}, {b}) out of range")));
            }
            preds[b].push(a);
            succs[a].push(b);
        }
        // Kahn's algorithm.
        let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &s in &succs[v] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    queue.push_back(s);
                }
            }
        }
        if order.len() != n {
            return Err(CostError::Cycle);
        }
        let sinks: Vec<usize> = (0..n).filter(|&v| succs[v].is_empty()).collect();
        let [sink] = sinks[..] else {
            return Err(CostError::InvalidDag(format!("{} sinks, expected one", sinks.len())));
        };
        // Reverse depth: fewest edges from a node down to the sink.
        let mut depth = vec![u32::MAX; n];
        depth[sink] = 0;
        let mut queue = VecDeque::from([sink]);
        while let Some(v) = queue.pop_front() {
            for &p in &preds[v] {
                if depth[p] == u32::MAX {
                    depth[p] = depth[v] + 1;
                    queue.push_back(p);
                }
            }
        }
        Ok(Self {
            ids,
            acc,
            preds,
            order,
            depth,
            sink,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn acc(&self) -> &[f64] {
        &self.acc
    }

    pub fn depths(&self) -> &[u32] {
        &self.depth
    }

    pub fn sink(&self) -> usize {
        self.sink
    }
}

/// Expected accumulative cost of every node:
/// `EAC(v) = ACC(v) + (1−θ)·max over predecessors p of EAC(p)`.
pub fn eac(dag: &SubcircuitDag, theta: f64) -> Vec<f64> {
    let mut out = vec![0.0; dag.acc.len()];
    for &v in &dag.order {
        let carried = dag.preds[v]
            .iter()
            .map(|&p| out[p])
            .fold(0.0, f64::max);
        out[v] = dag.acc[v] + (1.0 - theta) * carried;
    }
    out
}

/// `Σ_v (1−θ)^{D(v)}·ACC(v)` with `D` the reverse depth; bounds `EAC` of the sink.
pub fn eac_upper_bound(dag: &SubcircuitDag, theta: f64) -> f64 {
    dag.acc
        .iter()
        .zip(&dag.depth)
        .map(|(a, &d)| (1.0 - theta).powi(d as i32) * a)
        .sum()
}
