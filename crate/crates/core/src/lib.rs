//! Gate-hiding garbled circuits with skip gates.
//!
//! A circuit is garbled with four-row point-and-permute tables that hide
//! every gate function. Skip gates let the evaluator obtain the output label
//! directly when a pair of input wires already forces the output, so the
//! garbled tables need not be evaluated at all.
//!
//! * [`circuit`]: circuit format, plaintext evaluation, truth tables
//! * [`garble`]: baseline garbling, encoding, evaluation and decoding
//! * [`analysis`]: prime implicants, skippable wire pairs, chain plans
//! * [`skip`]: plain and chained skip gates and the full pipeline
//! * [`cost`]: expected-cost formulas and their Monte Carlo check

pub mod analysis;
pub mod bits;
pub mod circuit;
mod codec;
pub mod cost;
pub mod garble;
pub mod hash;
pub mod skip;

pub use analysis::{AnalysisError, AnalyzerReport, SkippablePair};
pub use bits::Bits;
pub use circuit::{parse_circuit, Circuit, CircuitError, GateFn, TruthTable, WireId};
pub use cost::{CostError, CostParams, CostReport};
pub use garble::{GarbleError, GarbledCircuit, GarbledInput, GarbledOutput};
pub use skip::{Mode, PipelineConfig, SkipError, SkipSet, TriggerReport};
