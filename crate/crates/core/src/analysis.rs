//! Prime implicants, skippable wire pairs and skip-chain planning.
//!
//! Candidate pairs come from the prime implicants of the target function `F`
//! and of `¬F`:
//!
//! * a one-literal implicant `x = b` makes every pair containing `x` skippable;
//! * a two-literal implicant makes exactly its own pair skippable;
//! * when `F` (or `¬F`) is a single cube, every pair inside that cube is.
//!
//! Pairs from one-literal implicants are listed first since they trigger on
//! half of all inputs. For every candidate the forcing assignments are then
//! read off the truth table, keeping at least one input free.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{subcircuit_truth_table, Circuit, CircuitError, TruthTable, WireId, MAX_TABLE_INPUTS};

/// Largest variable count handled by exact prime-implicant generation.
pub const MAX_EXACT_VARS: usize = 16;
/// Expansion rounds used when falling back to the heuristic search.
pub const HEURISTIC_BUDGET: usize = 512;
const HEURISTIC_SEED: u64 = 0x5eed_0f_c0be;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("{0} variables exceed the exact prime-implicant bound of {MAX_EXACT_VARS}")]
    TooManyVariables(usize),
    #[error("no skippable wire pairs: skipping gains nothing here")]
    NoSkippablePairs,
    #[error("{0} free inputs exceed the enumeration cap of {MAX_TABLE_INPUTS}")]
    TooManyFreeInputs(usize),
    #[error("nothing to plan")]
    EmptyPlan,
    #[error("wire {0} is not a circuit input")]
    NotAnInput(WireId),
    #[error("assignment does not force the output to a constant")]
    NotImplicative,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// A product term over variable indices: bit `v` of `care` marks a literal on
/// variable `v`, whose required value is bit `v` of `value`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Cube {
    pub care: u32,
    pub value: u32,
}

impl Cube {
    pub fn minterm(var_count: usize, index: usize) -> Self {
        Cube {
            care: full_mask(var_count),
            value: index as u32,
        }
    }

    pub fn size(&self) -> usize {
        self.care.count_ones() as usize
    }

    /// `(variable, value)` literals in ascending variable order.
    pub fn literals(&self) -> Vec<(usize, bool)> {
        (0..32)
            .filter(|v| self.care >> v & 1 == 1)
            .map(|v| (v, self.value >> v & 1 == 1))
            .collect()
    }

    pub fn without(&self, var: usize) -> Cube {
        let bit = 1u32 << var;
        Cube {
            care: self.care & !bit,
            value: self.value & !bit,
        }
    }

    /// Whether every point of the cube lies in the on-set of `tt`.
    pub fn implies(&self, tt: &TruthTable) -> bool {
        let free = full_mask(tt.var_count()) & !self.care;
        let mut sub = free;
        loop {
            if !tt.get((self.value | sub) as usize) {
                return false;
            }
            if sub == 0 {
                return true;
            }
            sub = (sub - 1) & free;
        }
    }

    /// Whether `self` contains `other` (every literal of `self` appears in `other`).
    pub fn contains(&self, other: &Cube) -> bool {
        self.care & other.care == self.care && (self.value ^ other.value) & self.care == 0
    }
}

fn full_mask(var_count: usize) -> u32 {
    if var_count >= 32 {
        u32::MAX
    } else {
        (1u32 << var_count) - 1
    }
}

/// Which function an implicant implies.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Implies `F = 1`.
    Positive,
    /// Implies `F = 0`.
    Negative,
}

impl Polarity {
    pub fn forced_value(self) -> bool {
        matches!(self, Polarity::Positive)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Implicant {
    pub cube: Cube,
    pub polarity: Polarity,
}

fn sort_key(c: &Cube) -> (usize, Vec<(usize, bool)>) {
    (c.size(), c.literals())
}

fn to_implicants(cubes: impl IntoIterator<Item = Cube>, polarity: Polarity) -> Vec<Implicant> {
    let mut cubes: Vec<Cube> = cubes.into_iter().collect();
    cubes.sort_by_cached_key(sort_key);
    cubes.dedup();
    cubes
        .into_iter()
        .map(|cube| Implicant { cube, polarity })
        .collect()
}

/// All prime implicants of `tt`.
///
/// Splits on the highest variable `x`: the primes of `f` are those of
/// `f0 & f1`, plus `!x & p` for primes `p` of `f0` that do not imply `f1`,
/// plus `x & p` symmetrically. Subtables are memoized, so structured
/// functions such as wide ANDs stay cheap even though their complement has
/// millions of non-prime implicants.
///
/// The constant-one function has the empty cube as its only prime implicant;
/// the constant-zero function has none.
pub fn prime_implicants(tt: &TruthTable) -> Result<Vec<Implicant>, AnalysisError> {
    if tt.var_count() > MAX_EXACT_VARS {
        return Err(AnalysisError::TooManyVariables(tt.var_count()));
    }
    let mut memo = HashMap::new();
    let primes = shannon_primes(tt.bits(), &mut memo);
    Ok(to_implicants(primes.iter().copied(), Polarity::Positive))
}

fn shannon_primes(f: &[bool], memo: &mut HashMap<Vec<bool>, Rc<Vec<Cube>>>) -> Rc<Vec<Cube>> {
    if let Some(hit) = memo.get(f) {
        return hit.clone();
    }
    let result = if f.iter().all(|&b| b) {
        vec![Cube { care: 0, value: 0 }]
    } else if !f.iter().any(|&b| b) {
        Vec::new()
    } else {
        let half = f.len() / 2;
        let top = half.trailing_zeros();
        let (f0, f1) = f.split_at(half);
        let both: Vec<bool> = f0.iter().zip(f1).map(|(a, b)| a & b).collect();
        let mut out: Vec<Cube> = shannon_primes(&both, memo).to_vec();
        for (side, other, bit) in [(f0, f1, 0u32), (f1, f0, 1u32)] {
            for p in shannon_primes(side, memo).iter() {
                if !cube_covered(p, other) {
                    out.push(Cube {
                        care: p.care | 1 << top,
                        value: p.value | bit << top,
                    });
                }
            }
        }
        out
    };
    let result = Rc::new(result);
    memo.insert(f.to_vec(), result.clone());
    result
}

/// `Cube::implies` over a raw table whose length fixes the variable count.
fn cube_covered(c: &Cube, f: &[bool]) -> bool {
    let free = (f.len() as u32 - 1) & !c.care;
    let mut sub = free;
    loop {
        if !f[(c.value | sub) as usize] {
            return false;
        }
        if sub == 0 {
            return true;
        }
        sub = (sub - 1) & free;
    }
}

/// Greedy cube expansion from sampled on-set minterms.
///
/// Every returned cube is a prime implicant, but some may be missed.
pub fn prime_implicants_heuristic<R: Rng + ?Sized>(
    tt: &TruthTable,
    budget: usize,
    rng: &mut R,
) -> Vec<Implicant> {
    let n = tt.var_count();
    let on: Vec<usize> = (0..1usize << n).filter(|&k| tt.get(k)).collect();
    if on.is_empty() {
        return Vec::new();
    }
    let mut found = BTreeSet::new();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..budget {
        let mut cube = Cube::minterm(n, on[rng.gen_range(0..on.len())]);
        order.shuffle(rng);
        for &v in &order {
            let wider = cube.without(v);
            if wider.implies(tt) {
                cube = wider;
            }
        }
        found.insert(cube);
    }
    to_implicants(found, Polarity::Positive)
}

fn primes_with_polarity(tt: &TruthTable, polarity: Polarity) -> Vec<Implicant> {
    let table = match polarity {
        Polarity::Positive => tt.clone(),
        Polarity::Negative => tt.complement(),
    };
    let primes = if table.var_count() <= MAX_EXACT_VARS {
        prime_implicants(&table).expect("within exact bound")
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(HEURISTIC_SEED);
        prime_implicants_heuristic(&table, HEURISTIC_BUDGET, &mut rng)
    };
    primes
        .into_iter()
        .map(|p| Implicant { polarity, ..p })
        .collect()
}

/// Assignment to an ordered wire pair `(i, j)` and the constant it forces.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct Forcing {
    pub assignment: (bool, bool),
    pub result: bool,
}

/// Which implicant size produced a pair; smaller sizes trigger more often.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairClass {
    SingleLiteral,
    TwoLiteral,
}

/// Two input wires `i < j` and the assignments that make the target constant.
///
/// `v1` is absent when only one assignment of the pair forces the output,
/// which happens for pairs that come from a two-literal implicant alone.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct SkippablePair {
    pub i: WireId,
    pub j: WireId,
    pub v0: Forcing,
    pub v1: Option<Forcing>,
    pub class: PairClass,
}

impl SkippablePair {
    pub fn forcings(&self) -> impl Iterator<Item = Forcing> {
        std::iter::once(self.v0).chain(self.v1)
    }
}

pub const PAIR_ASSIGNMENTS: [(bool, bool); 4] =
    [(false, false), (false, true), (true, false), (true, true)];

/// Constant forced by fixing variables `a` and `b` of `tt`, if any, leaving at
/// least one variable free.
fn forced_by(tt: &TruthTable, a: usize, b: usize, bits: (bool, bool)) -> Option<bool> {
    let n = tt.var_count();
    let lit = |v: usize, bit: bool| Cube {
        care: 1 << v,
        value: (bit as u32) << v,
    };
    let candidates: Vec<Cube> = if n > 2 {
        let (la, lb) = (lit(a, bits.0), lit(b, bits.1));
        vec![Cube {
            care: la.care | lb.care,
            value: la.value | lb.value,
        }]
    } else {
        vec![lit(a, bits.0), lit(b, bits.1)]
    };
    candidates.iter().find_map(|cube| {
        if cube.implies(tt) {
            Some(true)
        } else if cube.implies(&tt.complement()) {
            Some(false)
        } else {
            None
        }
    })
}

/// Skippable pairs of the function computed at `output` over `inputs`.
pub fn find_skippable_pairs(
    c: &Circuit,
    inputs: &[WireId],
    output: WireId,
) -> Result<Vec<SkippablePair>, AnalysisError> {
    let tt = subcircuit_truth_table(c, inputs, output)?;
    let positive = primes_with_polarity(&tt, Polarity::Positive);
    let negative = primes_with_polarity(&tt, Polarity::Negative);
    skippable_pairs_from(&tt, inputs, &[positive, negative])
}

fn skippable_pairs_from(
    tt: &TruthTable,
    inputs: &[WireId],
    primes: &[Vec<Implicant>],
) -> Result<Vec<SkippablePair>, AnalysisError> {
    let n = tt.var_count();
    let mut candidates: BTreeMap<(usize, usize), PairClass> = BTreeMap::new();
    let mut add = |a: usize, b: usize, class: PairClass| {
        if a == b {
            return;
        }
        let key = (a.min(b), a.max(b));
        let slot = candidates.entry(key).or_insert(class);
        *slot = (*slot).min(class);
    };
    for set in primes {
        if let [only] = set.as_slice() {
            let vars: Vec<usize> = only.cube.literals().iter().map(|l| l.0).collect();
            for (x, &a) in vars.iter().enumerate() {
                for &b in &vars[x + 1..] {
                    add(a, b, PairClass::SingleLiteral);
                }
            }
        }
        for p in set {
            match p.cube.literals().as_slice() {
                [(a, _)] => (0..n).for_each(|b| add(*a, b, PairClass::SingleLiteral)),
                [(a, _), (b, _)] if n > 2 => add(*a, *b, PairClass::TwoLiteral),
                _ => {}
            }
        }
    }

    let mut pairs = Vec::new();
    for ((a, b), class) in candidates {
        // Orient by wire id so that i < j.
        let (va, vb) = if inputs[a] < inputs[b] { (a, b) } else { (b, a) };
        let forcings: Vec<Forcing> = PAIR_ASSIGNMENTS
            .iter()
            .filter_map(|&bits| {
                forced_by(tt, va, vb, bits).map(|result| Forcing {
                    assignment: bits,
                    result,
                })
            })
            .collect();
        if let Some(&v0) = forcings.first() {
            pairs.push(SkippablePair {
                i: inputs[va],
                j: inputs[vb],
                v0,
                v1: forcings.get(1).copied(),
                class,
            });
        }
    }
    if pairs.is_empty() {
        return Err(AnalysisError::NoSkippablePairs);
    }
    pairs.sort_by_key(|p| (p.class, p.i, p.j, p.v0.assignment));
    Ok(pairs)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Implication {
    Constant(bool),
    NotConstant,
}

/// Brute-force test of whether `assignment` fixes the value of `output`.
///
/// Inputs outside the fan-in cone of `output` are ignored.
pub fn check_k_implicative(
    c: &Circuit,
    output: WireId,
    assignment: &[(WireId, bool)],
) -> Result<Implication, AnalysisError> {
    for &(w, _) in assignment {
        if !c.is_input(w) {
            return Err(AnalysisError::NotAnInput(w));
        }
    }
    let fixed: BTreeMap<WireId, bool> = assignment.iter().copied().collect();
    let free: Vec<WireId> = c
        .input_cone(output)
        .into_iter()
        .filter(|w| !fixed.contains_key(w))
        .collect();
    if free.len() > MAX_TABLE_INPUTS {
        return Err(AnalysisError::TooManyFreeInputs(free.len()));
    }
    let mut x = vec![false; c.n()];
    for (&w, &bit) in &fixed {
        x[w as usize - 1] = bit;
    }
    let mut seen = None;
    for k in 0..1usize << free.len() {
        for (pos, &w) in free.iter().enumerate() {
            x[w as usize - 1] = (k >> pos) & 1 == 1;
        }
        let value = c.eval_wires(&x)?[output as usize];
        match seen {
            None => seen = Some(value),
            Some(v) if v != value => return Ok(Implication::NotConstant),
            _ => {}
        }
    }
    Ok(Implication::Constant(seen.expect("at least one assignment")))
}

/// A set of input literals that together force the target output.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct NImplicativeGroup {
    pub literals: Vec<(WireId, bool)>,
    pub result: bool,
}

impl NImplicativeGroup {
    /// Checks by enumeration that `literals` force `output`.
    pub fn derive(
        c: &Circuit,
        output: WireId,
        literals: &[(WireId, bool)],
    ) -> Result<Self, AnalysisError> {
        let mut literals = literals.to_vec();
        literals.sort_unstable();
        literals.dedup();
        if literals.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(AnalysisError::NotImplicative);
        }
        match check_k_implicative(c, output, &literals)? {
            Implication::Constant(result) => Ok(Self { literals, result }),
            Implication::NotConstant => Err(AnalysisError::NotImplicative),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanMode {
    PssParallel,
    CssSerial,
}

/// One skip gate to generate.
///
/// `trigger` holds the assignments that fire the gate; `link` the two
/// assignments whose hashes are carried forward by the chain values. `None`
/// stands for a reserved sentinel that no real input can produce.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct ChainEntry {
    pub i: WireId,
    pub j: WireId,
    pub k: u32,
    pub trigger: [Option<Forcing>; 2],
    pub link: [Option<(bool, bool)>; 2],
}

impl ChainEntry {
    fn from_pair(p: &SkippablePair, k: u32) -> Self {
        let trigger = [Some(p.v0), p.v1];
        let mut rest = PAIR_ASSIGNMENTS
            .iter()
            .copied()
            .filter(|&a| p.forcings().all(|f| f.assignment != a));
        ChainEntry {
            i: p.i,
            j: p.j,
            k,
            trigger,
            link: [rest.next(), rest.next()],
        }
    }

    pub fn can_trigger(&self) -> bool {
        self.trigger.iter().any(Option::is_some)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct SkipChainPlan {
    pub mode: PlanMode,
    pub entries: Vec<ChainEntry>,
}

fn priority_order(pairs: &[SkippablePair]) -> Vec<SkippablePair> {
    let mut sorted = pairs.to_vec();
    sorted.sort_by_key(|p| (p.class, p.i, p.j, p.v0.assignment));
    sorted
}

pub fn plan_pss(pairs: &[SkippablePair]) -> Result<SkipChainPlan, AnalysisError> {
    if pairs.is_empty() {
        return Err(AnalysisError::EmptyPlan);
    }
    let entries = priority_order(pairs)
        .iter()
        .enumerate()
        .map(|(k, p)| ChainEntry::from_pair(p, k as u32 + 1))
        .collect();
    Ok(SkipChainPlan {
        mode: PlanMode::PssParallel,
        entries,
    })
}

/// Orders skip gates into a chain.
///
/// Pairs come first in priority order. A group of `n` forcing literals is
/// then split into overlapping wire pairs; every entry of the group but the
/// last only links the chain, and the last one fires when the whole group
/// matched.
pub fn plan_css_chain(
    pairs: &[SkippablePair],
    group: Option<&NImplicativeGroup>,
) -> Result<SkipChainPlan, AnalysisError> {
    let mut entries: Vec<ChainEntry> = priority_order(pairs)
        .iter()
        .enumerate()
        .map(|(k, p)| ChainEntry::from_pair(p, k as u32 + 1))
        .collect();

    if let Some(group) = group {
        let lits = &group.literals;
        if lits.len() < 2 {
            return Err(AnalysisError::EmptyPlan);
        }
        let mut chunks: Vec<[(WireId, bool); 2]> =
            lits.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        if lits.len() % 2 == 1 {
            chunks.push([lits[lits.len() - 2], lits[lits.len() - 1]]);
        }
        let last = chunks.len() - 1;
        for (idx, [a, b]) in chunks.into_iter().enumerate() {
            let (lo, hi) = if a.0 < b.0 { (a, b) } else { (b, a) };
            let bits = (lo.1, hi.1);
            let k = entries.len() as u32 + 1;
            let entry = if idx < last {
                ChainEntry {
                    i: lo.0,
                    j: hi.0,
                    k,
                    trigger: [None, None],
                    link: [Some(bits), None],
                }
            } else {
                let mut rest = PAIR_ASSIGNMENTS.iter().copied().filter(|&x| x != bits);
                ChainEntry {
                    i: lo.0,
                    j: hi.0,
                    k,
                    trigger: [
                        Some(Forcing {
                            assignment: bits,
                            result: group.result,
                        }),
                        None,
                    ],
                    link: [rest.next(), rest.next()],
                }
            };
            entries.push(entry);
        }
    }
    if entries.is_empty() {
        return Err(AnalysisError::EmptyPlan);
    }
    Ok(SkipChainPlan {
        mode: PlanMode::CssSerial,
        entries,
    })
}

/// Literal list of an implicant in terms of wire ids.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ImplicantReport {
    pub literals: Vec<(WireId, bool)>,
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct AnalyzerReport {
    pub output: WireId,
    pub inputs: Vec<WireId>,
    pub truth_table: String,
    pub positive_implicants: Vec<ImplicantReport>,
    pub negative_implicants: Vec<ImplicantReport>,
    pub pairs: Vec<SkippablePair>,
    pub plan: Option<SkipChainPlan>,
}

/// Runs the whole analysis for one output over its input cone.
///
/// Absence of skippable pairs is reported as an empty pair list.
pub fn analyze_output(
    c: &Circuit,
    output: WireId,
    mode: PlanMode,
) -> Result<AnalyzerReport, AnalysisError> {
    let inputs = c.input_cone(output);
    let tt = subcircuit_truth_table(c, &inputs, output)?;
    let positive = primes_with_polarity(&tt, Polarity::Positive);
    let negative = primes_with_polarity(&tt, Polarity::Negative);
    let pairs = match skippable_pairs_from(&tt, &inputs, &[positive.clone(), negative.clone()]) {
        Ok(p) => p,
        Err(AnalysisError::NoSkippablePairs) => Vec::new(),
        Err(e) => return Err(e),
    };
    let plan = match (pairs.is_empty(), mode) {
        (true, _) => None,
        (false, PlanMode::PssParallel) => Some(plan_pss(&pairs)?),
        (false, PlanMode::CssSerial) => Some(plan_css_chain(&pairs, None)?),
    };
    let report = |set: &[Implicant]| {
        set.iter()
            .map(|p| ImplicantReport {
                literals: p
                    .cube
                    .literals()
                    .into_iter()
                    .map(|(v, b)| (inputs[v], b))
                    .collect(),
            })
            .collect()
    };
    Ok(AnalyzerReport {
        output,
        inputs: inputs.clone(),
        truth_table: tt.to_string(),
        positive_implicants: report(&positive),
        negative_implicants: report(&negative),
        pairs,
        plan,
    })
}

fn fmt_literals(lits: &[(WireId, bool)]) -> String {
    if lits.is_empty() {
        return "(true)".into();
    }
    lits.iter()
        .map(|(w, b)| format!("x{w}={}", *b as u8))
        .collect::<Vec<_>>()
        .join(" & ")
}

fn fmt_bits(bits: (bool, bool)) -> String {
    format!("({},{})", bits.0 as u8, bits.1 as u8)
}

impl fmt::Display for AnalyzerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "output wire {} over inputs {:?}", self.output, self.inputs)?;
        writeln!(f, "truth table {}", self.truth_table)?;
        writeln!(f, "prime implicants of F:")?;
        for p in &self.positive_implicants {
            writeln!(f, "  {}", fmt_literals(&p.literals))?;
        }
        writeln!(f, "prime implicants of !F:")?;
        for p in &self.negative_implicants {
            writeln!(f, "  {}", fmt_literals(&p.literals))?;
        }
        writeln!(f, "skippable pairs:")?;
        if self.pairs.is_empty() {
            writeln!(f, "  none")?;
        }
        for p in &self.pairs {
            write!(
                f,
                "  (x{}, x{}) {} -> {}",
                p.i,
                p.j,
                fmt_bits(p.v0.assignment),
                p.v0.result as u8
            )?;
            if let Some(v1) = p.v1 {
                write!(f, ", {} -> {}", fmt_bits(v1.assignment), v1.result as u8)?;
            }
            writeln!(f, "  [{:?}]", p.class)?;
        }
        if let Some(plan) = &self.plan {
            writeln!(f, "plan ({:?}):", plan.mode)?;
            for e in &plan.entries {
                writeln!(f, "  k={} (x{}, x{})", e.k, e.i, e.j)?;
            }
        }
        Ok(())
    }
}
