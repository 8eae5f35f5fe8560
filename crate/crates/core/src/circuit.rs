//! Boolean circuits with fan-in two gates and explicit 4-entry truth tables.
//!
//! Wires are numbered from 1. Wires `1..=n` are circuit inputs, wires
//! `n+1..=n+l` are gate outputs in topological order, and the last `m` wires
//! are the circuit outputs. Output wires never feed another gate.
//!
//! Text format, one item per line, `#` starts a comment:
//!
//! ```text
//! n m l
//! <gate_wire> <A> <B> <tt>
//! ```
//!
//! where `<tt>` lists the gate output for inputs (0,0), (0,1), (1,0), (1,1).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub type WireId = u32;

/// Hard cap on enumerated inputs for truth-table extraction.
pub const MAX_TABLE_INPUTS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("wire {wire}: {msg}")]
    Validation { wire: WireId, msg: String },
    #[error("expected {expected} input bits, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("{0} inputs exceed the enumeration cap of {MAX_TABLE_INPUTS}")]
    TooManyInputs(usize),
    #[error("output depends on wire {0}, which is not among the listed inputs")]
    NotDetermined(WireId),
}

/// A two-input gate function stored as its truth table.
///
/// Bit `2a + b` holds the output for inputs `(a, b)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct GateFn(u8);

impl GateFn {
    pub const AND: GateFn = GateFn(0b1000);
    pub const OR: GateFn = GateFn(0b1110);
    pub const XOR: GateFn = GateFn(0b0110);
    pub const NAND: GateFn = GateFn(0b0111);
    pub const NOR: GateFn = GateFn(0b0001);

    pub fn from_bits(bits: u8) -> Self {
        GateFn(bits & 0x0f)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn eval(self, a: bool, b: bool) -> bool {
        let idx = (a as u8) << 1 | b as u8;
        (self.0 >> idx) & 1 == 1
    }
}

impl fmt::Display for GateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for idx in 0..4 {
            write!(f, "{}", (self.0 >> idx) & 1)?;
        }
        Ok(())
    }
}

impl FromStr for GateFn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 4 {
            return Err(format!("truth table `{s}` must have exactly 4 bits"));
        }
        let mut bits = 0u8;
        for (idx, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << idx,
                _ => return Err(format!("truth table `{s}` contains `{ch}`")),
            }
        }
        Ok(GateFn(bits))
    }
}

/// The `(n, m, l, A, B)` skeleton of a circuit: what a gate-hiding evaluator sees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CircuitTopology {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub first_input: Vec<WireId>,
    pub second_input: Vec<WireId>,
}

impl CircuitTopology {
    pub fn wire_count(&self) -> usize {
        self.n + self.l
    }

    pub fn output_wires(&self) -> std::ops::RangeInclusive<WireId> {
        let total = self.wire_count() as WireId;
        (total - self.m as WireId + 1)..=total
    }

    /// Index into the gate arrays for gate wire `w`.
    pub fn gate_index(&self, w: WireId) -> usize {
        w as usize - self.n - 1
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let invalid = |wire: WireId, msg: String| CircuitError::Validation { wire, msg };
        if self.n == 0 {
            return Err(invalid(0, "circuit needs at least one input wire".into()));
        }
        if self.m == 0 || self.m > self.l {
            return Err(invalid(
                0,
                format!("output count {} must be in 1..={}", self.m, self.l),
            ));
        }
        if self.first_input.len() != self.l || self.second_input.len() != self.l {
            return Err(invalid(0, "gate arrays do not match the gate count".into()));
        }
        let last_internal = (self.wire_count() - self.m) as WireId;
        for g in 0..self.l {
            let wire = (self.n + g + 1) as WireId;
            for src in [self.first_input[g], self.second_input[g]] {
                if src == 0 || src >= wire {
                    return Err(invalid(
                        wire,
                        format!("input wire {src} must lie in 1..{wire}"),
                    ));
                }
                if src > last_internal {
                    return Err(invalid(
                        wire,
                        format!("output wire {src} cannot feed another gate"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Circuit {
    topology: CircuitTopology,
    gates: Vec<GateFn>,
}

impl Circuit {
    pub fn new(
        n: usize,
        m: usize,
        first_input: Vec<WireId>,
        second_input: Vec<WireId>,
        gates: Vec<GateFn>,
    ) -> Result<Self, CircuitError> {
        let topology = CircuitTopology {
            n,
            m,
            l: gates.len(),
            first_input,
            second_input,
        };
        topology.validate()?;
        Ok(Self { topology, gates })
    }

    pub fn n(&self) -> usize {
        self.topology.n
    }

    pub fn m(&self) -> usize {
        self.topology.m
    }

    pub fn l(&self) -> usize {
        self.topology.l
    }

    pub fn topology(&self) -> &CircuitTopology {
        &self.topology
    }

    pub fn gate_fns(&self) -> &[GateFn] {
        &self.gates
    }

    /// `(A, B, g)` of gate wire `w`.
    pub fn gate(&self, w: WireId) -> (WireId, WireId, GateFn) {
        let idx = self.topology.gate_index(w);
        (
            self.topology.first_input[idx],
            self.topology.second_input[idx],
            self.gates[idx],
        )
    }

    pub fn is_input(&self, w: WireId) -> bool {
        w >= 1 && (w as usize) <= self.n()
    }

    pub fn output_wires(&self) -> std::ops::RangeInclusive<WireId> {
        self.topology.output_wires()
    }

    /// Values of every wire, indexed by wire id (index 0 unused).
    pub fn eval_wires(&self, x: &[bool]) -> Result<Vec<bool>, CircuitError> {
        if x.len() != self.n() {
            return Err(CircuitError::Arity {
                expected: self.n(),
                got: x.len(),
            });
        }
        let mut values = Vec::with_capacity(self.topology.wire_count() + 1);
        values.push(false);
        values.extend_from_slice(x);
        for g in 0..self.l() {
            let a = values[self.topology.first_input[g] as usize];
            let b = values[self.topology.second_input[g] as usize];
            values.push(self.gates[g].eval(a, b));
        }
        Ok(values)
    }

    pub fn eval_plain(&self, x: &[bool]) -> Result<Vec<bool>, CircuitError> {
        let values = self.eval_wires(x)?;
        Ok(self.output_wires().map(|w| values[w as usize]).collect())
    }

    /// Circuit inputs in the transitive fan-in of `output`, ascending.
    pub fn input_cone(&self, output: WireId) -> Vec<WireId> {
        let mut seen = HashSet::new();
        let mut stack = vec![output];
        let mut inputs = Vec::new();
        while let Some(w) = stack.pop() {
            if !seen.insert(w) {
                continue;
            }
            if self.is_input(w) {
                inputs.push(w);
            } else {
                let (a, b, _) = self.gate(w);
                stack.push(a);
                stack.push(b);
            }
        }
        inputs.sort_unstable();
        inputs
    }

    fn check_wire(&self, w: WireId) -> Result<(), CircuitError> {
        if w == 0 || w as usize > self.topology.wire_count() {
            return Err(CircuitError::Validation {
                wire: w,
                msg: "no such wire".into(),
            });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n(), self.m(), self.l());
        for g in 0..self.l() {
            out.push_str(&format!(
                "{} {} {} {}\n",
                self.n() + g + 1,
                self.topology.first_input[g],
                self.topology.second_input[g],
                self.gates[g]
            ));
        }
        out
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, raw)| (idx + 1, raw.split('#').next().unwrap_or("").trim()))
        .filter(|(_, line)| !line.is_empty());

    let parse_err = |line: usize, msg: String| CircuitError::Parse { line, msg };

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing `n m l` header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(header_line, "header must be `n m l`".into()));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(header_line, format!("`{s}` is not a count")))
    };
    let (n, m, l) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);

    let mut first = vec![None; l];
    let mut second = vec![0; l];
    let mut gates = vec![GateFn::from_bits(0); l];
    for (line, body) in lines {
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(line, "gate line must be `<wire> <A> <B> <tt>`".into()));
        }
        let wire_id = |s: &str| {
            s.parse::<WireId>()
                .map_err(|_| parse_err(line, format!("`{s}` is not a wire id")))
        };
        let wire = wire_id(fields[0])?;
        let (a, b) = (wire_id(fields[1])?, wire_id(fields[2])?);
        let g: GateFn = fields[3].parse().map_err(|msg| parse_err(line, msg))?;
        if (wire as usize) <= n || (wire as usize) > n + l {
            return Err(CircuitError::Validation {
                wire,
                msg: format!("line {line}: gate wires must lie in {}..={}", n + 1, n + l),
            });
        }
        let idx = wire as usize - n - 1;
        if first[idx].is_some() {
            return Err(CircuitError::Validation {
                wire,
                msg: format!("line {line}: gate defined twice"),
            });
        }
        first[idx] = Some(a);
        second[idx] = b;
        gates[idx] = g;
    }
    let first = first
        .into_iter()
        .enumerate()
        .map(|(idx, a)| {
            a.ok_or(CircuitError::Validation {
                wire: (n + idx + 1) as WireId,
                msg: "gate never defined".into(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Circuit::new(n, m, first, second, gates)
}

/// Output bits of a function over `var_count` ordered variables.
///
/// Entry `k` is the output when variable `v` takes bit `v` of `k`
/// (little-endian over the variable order).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TruthTable {
    var_count: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    pub fn new(var_count: usize, bits: Vec<bool>) -> Result<Self, CircuitError> {
        if var_count > MAX_TABLE_INPUTS {
            return Err(CircuitError::TooManyInputs(var_count));
        }
        if bits.len() != 1 << var_count {
            return Err(CircuitError::Arity {
                expected: 1 << var_count,
                got: bits.len(),
            });
        }
        Ok(Self { var_count, bits })
    }

    pub fn from_fn(var_count: usize, f: impl FnMut(usize) -> bool) -> Result<Self, CircuitError> {
        if var_count > MAX_TABLE_INPUTS {
            return Err(CircuitError::TooManyInputs(var_count));
        }
        Self::new(var_count, (0..1usize << var_count).map(f).collect())
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn complement(&self) -> TruthTable {
        TruthTable {
            var_count: self.var_count,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn is_constant(&self) -> Option<bool> {
        let first = self.bits[0];
        self.bits.iter().all(|&b| b == first).then_some(first)
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Enumerates the function computed at `output` in terms of `inputs`.
///
/// `inputs` may name internal wires; they cut the fan-in cone of `output`.
pub fn subcircuit_truth_table(
    c: &Circuit,
    inputs: &[WireId],
    output: WireId,
) -> Result<TruthTable, CircuitError> {
    if inputs.len() > MAX_TABLE_INPUTS {
        return Err(CircuitError::TooManyInputs(inputs.len()));
    }
    c.check_wire(output)?;
    let mut position = std::collections::HashMap::new();
    for (pos, &w) in inputs.iter().enumerate() {
        c.check_wire(w)?;
        if position.insert(w, pos).is_some() {
            return Err(CircuitError::Validation {
                wire: w,
                msg: "input listed twice".into(),
            });
        }
    }

    // Gates strictly inside the cut, in ascending (topological) order.
    let mut cone = Vec::new();
    let mut seen = HashSet::new();
    let mut stack = vec![output];
    while let Some(w) = stack.pop() {
        if position.contains_key(&w) || !seen.insert(w) {
            continue;
        }
        if c.is_input(w) {
            return Err(CircuitError::NotDetermined(w));
        }
        cone.push(w);
        let (a, b, _) = c.gate(w);
        stack.push(a);
        stack.push(b);
    }
    cone.sort_unstable();

    let total = c.topology().wire_count();
    let mut values = vec![false; total + 1];
    TruthTable::from_fn(inputs.len(), |assignment| {
        for (pos, &w) in inputs.iter().enumerate() {
            values[w as usize] = (assignment >> pos) & 1 == 1;
        }
        for &w in &cone {
            let (a, b, g) = c.gate(w);
            values[w as usize] = g.eval(values[a as usize], values[b as usize]);
        }
        values[output as usize]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const AND2: &str = "2 1 1\n3 1 2 0001\n";
    const MAJ3: &str = "3 1 5\n4 1 2 0001\n5 1 3 0001\n6 2 3 0001\n7 4 5 0111\n8 7 6 0111\n";
    const AND_OR: &str = "3 1 2\n4 2 3 0111\n5 1 4 0001\n";

    fn bits(x: usize, n: usize) -> Vec<bool> {
        (0..n).map(|k| (x >> k) & 1 == 1).collect()
    }

    #[test]
    fn parses_smallest_circuit() {
        let c = parse_circuit(AND2).unwrap();
        assert_eq!((c.n(), c.m(), c.l()), (2, 1, 1));
        assert_eq!(c.gate(3), (1, 2, GateFn::AND));
    }

    #[test]
    fn gate_fn_text_order() {
        assert_eq!("0001".parse::<GateFn>().unwrap(), GateFn::AND);
        assert_eq!("0111".parse::<GateFn>().unwrap(), GateFn::OR);
        assert_eq!(GateFn::XOR.to_string(), "0110");
        assert_eq!(GateFn::NAND.to_string(), "1110");
    }

    #[test]
    fn rejects_forward_reference() {
        let err = parse_circuit("2 1 1\n3 3 1 0001\n").unwrap_err();
        assert!(matches!(err, CircuitError::Validation { wire: 3, .. }), "{err}");
        let err = parse_circuit("2 1 2\n3 1 4 0001\n4 1 2 0001\n").unwrap_err();
        assert!(matches!(err, CircuitError::Validation { wire: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_malformed_lines() {
        let err = parse_circuit("2 1 1\n3 1 2 0021\n").unwrap_err();
        assert_eq!(
            err,
            CircuitError::Parse {
                line: 2,
                msg: "truth table `0021` contains `2`".into()
            }
        );
        assert!(matches!(
            parse_circuit("2 1\n").unwrap_err(),
            CircuitError::Parse { line: 1, .. }
        ));
        assert!(matches!(
            parse_circuit("2 1 2\n3 1 2 0001\n").unwrap_err(),
            CircuitError::Validation { wire: 4, .. }
        ));
        assert!(matches!(
            parse_circuit("2 1 1\n3 1 2 0001\n3 1 2 0001\n").unwrap_err(),
            CircuitError::Validation { wire: 3, .. }
        ));
    }

    #[test]
    fn output_wire_cannot_feed_gates() {
        let err = parse_circuit("2 2 2\n3 1 2 0001\n4 3 1 0001\n").unwrap_err();
        assert!(matches!(err, CircuitError::Validation { wire: 4, .. }));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse_circuit("# and gate\n\n2 1 1 # header\n3 1 2 0001 # g\n").unwrap();
        assert_eq!(c, parse_circuit(AND2).unwrap());
    }

    #[test]
    fn majority_round_trips_and_evaluates() {
        let c = parse_circuit(MAJ3).unwrap();
        assert_eq!((c.n(), c.m(), c.l()), (3, 1, 5));
        assert_eq!(parse_circuit(&c.to_text()).unwrap(), c);
        assert_eq!(c.eval_plain(&[true, false, true]).unwrap(), vec![true]);
        for x in 0..8 {
            let v = bits(x, 3);
            let expect = v.iter().filter(|&&b| b).count() >= 2;
            assert_eq!(c.eval_plain(&v).unwrap(), vec![expect]);
        }
    }

    #[test]
    fn and_evaluation_and_arity() {
        let c = parse_circuit(AND2).unwrap();
        assert_eq!(c.eval_plain(&[true, true]).unwrap(), vec![true]);
        assert_eq!(c.eval_plain(&[false, true]).unwrap(), vec![false]);
        assert_eq!(
            c.eval_plain(&[true]).unwrap_err(),
            CircuitError::Arity {
                expected: 2,
                got: 1
            }
        );
    }

    #[test]
    fn single_gate_matches_lookup() {
        for tt in 0..16u8 {
            let g = GateFn::from_bits(tt);
            let c = Circuit::new(2, 1, vec![1], vec![2], vec![g]).unwrap();
            for x in 0..4usize {
                let (a, b) = (x & 1 == 1, x & 2 == 2);
                let idx = (a as u8) * 2 + b as u8;
                assert_eq!(c.eval_plain(&[a, b]).unwrap(), vec![(tt >> idx) & 1 == 1]);
            }
        }
    }

    #[test]
    fn truth_table_of_and() {
        let c = parse_circuit(AND2).unwrap();
        let tt = subcircuit_truth_table(&c, &[1, 2], 3).unwrap();
        assert_eq!(tt.to_string(), "0001");
    }

    #[test]
    fn truth_table_little_endian_order() {
        // x1 & (x2 | x3), index = x1 + 2*x2 + 4*x3; brute force below.
        let c = parse_circuit(AND_OR).unwrap();
        let tt = subcircuit_truth_table(&c, &[1, 2, 3], 5).unwrap();
        let expect: String = (0..8)
            .map(|k| {
                let (x1, x2, x3) = (k & 1 == 1, k & 2 == 2, k & 4 == 4);
                if x1 && (x2 || x3) { '1' } else { '0' }
            })
            .collect();
        assert_eq!(expect, "00010101");
        assert_eq!(tt.to_string(), expect);
    }

    #[test]
    fn truth_table_over_internal_cut() {
        let c = parse_circuit(AND_OR).unwrap();
        let tt = subcircuit_truth_table(&c, &[1, 4], 5).unwrap();
        assert_eq!(tt.to_string(), "0001");
    }

    #[test]
    fn truth_table_errors() {
        let c = parse_circuit(AND2).unwrap();
        assert_eq!(
            subcircuit_truth_table(&c, &[1], 3).unwrap_err(),
            CircuitError::NotDetermined(2)
        );
        let inputs: Vec<WireId> = (1..=21).collect();
        assert_eq!(
            subcircuit_truth_table(&c, &inputs, 3).unwrap_err(),
            CircuitError::TooManyInputs(21)
        );
    }
}
