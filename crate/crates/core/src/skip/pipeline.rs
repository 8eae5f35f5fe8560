//! Garbling with skip gates end to end: garble, generate skip gates, encode,
//! try the skip gates, fall back to full evaluation, decode.

use std::fmt;
use std::str::FromStr;

use rand::{CryptoRng, RngCore};
use serde::Serialize;

use super::{
    eval_css, eval_pss, gen_css, gen_pss, OpCounts, SkipError, SkipMode, SkipParams, SkipSet,
    TriggerReport,
};
use crate::analysis::{analyze_output, AnalysisError, AnalyzerReport, PlanMode};
use crate::circuit::{Circuit, CircuitError};
use crate::garble::{
    decode, encode, eval, garble_with_labels, GarbledCircuit, GarbledInput, GarbledOutput,
    Garbling,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Off,
    Pss,
    Css,
}

impl Mode {
    pub fn skip_mode(self) -> Option<SkipMode> {
        match self {
            Mode::Off => None,
            Mode::Pss => Some(SkipMode::Pss),
            Mode::Css => Some(SkipMode::Css),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Off => "off",
            Mode::Pss => "pss",
            Mode::Css => "css",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(Mode::Off),
            "pss" => Ok(Mode::Pss),
            "css" => Ok(Mode::Css),
            other => Err(format!("unknown mode `{other}`, expected off, pss or css")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PipelineConfig {
    pub params: SkipParams,
    pub mode: Mode,
}

impl PipelineConfig {
    pub fn new(lambda: usize, alpha: usize, mode: Mode, validated: bool) -> Result<Self, SkipError> {
        Ok(Self {
            params: SkipParams::new(alpha, lambda, validated)?,
            mode,
        })
    }
}

/// Everything the garbler produces.
#[derive(Clone, Debug)]
pub struct GarblePhase {
    pub garbling: Garbling,
    /// Absent when skipping is off.
    pub skips: Option<SkipSet>,
    /// Absent when skipping is off or no analysis was possible.
    pub analysis: Option<AnalyzerReport>,
}

/// Garbles `c` and builds skip gates for its output.
///
/// Skip gates are only generated for single-output circuits whose output
/// depends on at most 20 inputs; otherwise the skip set is empty.
pub fn garble_phase<R: RngCore + CryptoRng>(
    cfg: &PipelineConfig,
    c: &Circuit,
    rng: &mut R,
) -> Result<GarblePhase, SkipError> {
    let garbling = garble_with_labels(cfg.params.lambda, c, rng)?;
    let Some(mode) = cfg.mode.skip_mode() else {
        return Ok(GarblePhase {
            garbling,
            skips: None,
            analysis: None,
        });
    };
    let target = *c.output_wires().end();
    let empty = SkipSet::empty(cfg.params, mode, target);
    if c.m() != 1 {
        return Ok(GarblePhase {
            garbling,
            skips: Some(empty),
            analysis: None,
        });
    }
    let plan_mode = match mode {
        SkipMode::Pss => PlanMode::PssParallel,
        SkipMode::Css => PlanMode::CssSerial,
    };
    let report = match analyze_output(c, target, plan_mode) {
        Ok(r) => r,
        Err(AnalysisError::Circuit(CircuitError::TooManyInputs(_))) => {
            return Ok(GarblePhase {
                garbling,
                skips: Some(empty),
                analysis: None,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let skips = match (&report.plan, mode) {
        (None, _) => empty,
        (Some(_), SkipMode::Pss) => {
            gen_pss(cfg.params, &garbling.labels, target, &report.pairs, rng)?
        }
        (Some(plan), SkipMode::Css) => gen_css(cfg.params, &garbling.labels, target, plan, rng)?,
    };
    Ok(GarblePhase {
        garbling,
        skips: Some(skips),
        analysis: Some(report),
    })
}

/// Tries the skip gates and runs the full evaluation only when none fires.
pub fn evaluate_phase(
    gc: &GarbledCircuit,
    skips: Option<&SkipSet>,
    x: &GarbledInput,
) -> (GarbledOutput, TriggerReport) {
    let mut report = match skips {
        Some(s) if s.mode() == SkipMode::Pss => eval_pss(s, x),
        Some(s) => eval_css(s, x),
        None => TriggerReport::miss(OpCounts::default()),
    };
    if let Some(result) = &report.result {
        return (result.clone(), report);
    }
    report.ops.gate_evals = gc.topology().l as u64;
    (eval(gc, x), report)
}

pub fn run_pipeline<R: RngCore + CryptoRng>(
    cfg: &PipelineConfig,
    c: &Circuit,
    x: &[bool],
    rng: &mut R,
) -> Result<(Vec<bool>, TriggerReport), SkipError> {
    let phase = garble_phase(cfg, c, rng)?;
    let g = &phase.garbling;
    let input = encode(&g.encoding, x)?;
    let (out, report) = evaluate_phase(&g.circuit, phase.skips.as_ref(), &input);
    let y = decode(&g.decoding, &out)?;
    Ok((y, report))
}
