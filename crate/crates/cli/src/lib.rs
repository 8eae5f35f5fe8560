//! Command-line front end: analyze, garble, evaluate and bench.
//!
//! Every command writes its human-readable output to the supplied writer so
//! the binary and the tests share one code path.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use serde::Serialize;

use skipgc::analysis::{analyze_output, AnalyzerReport, PlanMode};
use skipgc::cost::{
    acc_instrumented, eac, eac_upper_bound, monte_carlo_validate, table1_report,
    trigger_probabilities, CostParams, CostReport, DagSpec, MissAccounting, MonteCarloReport,
    SubcircuitDag,
};
use skipgc::garble::{decode, encode, DecodingInfo, EncodingInfo, GarbledCircuit};
use skipgc::skip::{evaluate_phase, garble_phase, OpCounts, SkipSet, DEFAULT_ALPHA};
use skipgc::{parse_circuit, Circuit, Mode, PipelineConfig};

pub const CIRCUIT_FILE: &str = "circuit.gc";
pub const SKIPS_FILE: &str = "skips.ss";
pub const ENCODING_FILE: &str = "encoding.bin";
pub const DECODING_FILE: &str = "decoding.bin";
pub const BENCH_TEXT_FILE: &str = "bench.txt";
pub const BENCH_JSON_FILE: &str = "bench.json";

pub const MIN_CLI_ALPHA: usize = 16;
pub const MAX_CLI_ALPHA: usize = 64;

/// Exit status for successful runs.
pub const EXIT_OK: u8 = 0;
/// Exit status for any failure.
pub const EXIT_ERROR: u8 = 1;
/// Exit status of `analyze` when no output has a skippable pair.
pub const EXIT_NO_PAIRS: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "skipgc", version, about = "Garbled circuits with skip gates")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by all commands.
#[derive(Args, Clone, Debug)]
pub struct RunConfig {
    /// Wire label length in bits (80 or 128).
    #[arg(long, global = true, default_value_t = 128)]
    pub lambda: usize,
    /// Trigger value length in bits, a multiple of 8 in [16, 64].
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHA)]
    pub alpha: usize,
    /// Skipping scheme: off, pss or css.
    #[arg(long, global = true, default_value = "css")]
    pub mode: Mode,
    /// Seed of every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Append a 32-bit zero check to every skip ciphertext.
    #[arg(long, global = true)]
    pub validated: bool,
    /// Directory holding the garbled files and reports.
    #[arg(long, global = true, default_value = "skipgc-out")]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn pipeline(&self) -> Result<PipelineConfig> {
        if !(MIN_CLI_ALPHA..=MAX_CLI_ALPHA).contains(&self.alpha) {
            bail!("--alpha must lie in [{MIN_CLI_ALPHA}, {MAX_CLI_ALPHA}], got {}", self.alpha);
        }
        Ok(PipelineConfig::new(self.lambda, self.alpha, self.mode, self.validated)?)
    }

    fn plan_mode(&self) -> PlanMode {
        match self.mode {
            Mode::Css => PlanMode::CssSerial,
            Mode::Off | Mode::Pss => PlanMode::PssParallel,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List implicants, skippable pairs and the skip plan of every output.
    Analyze {
        circuit: PathBuf,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Garble a circuit into the output directory.
    Garble { circuit: PathBuf },
    /// Evaluate the garbled files on input bits `x1 x2 ...`, e.g. `0110`.
    Eval { input: String },
    /// Cost model report with Monte Carlo validation.
    Bench(BenchArgs),
}

#[derive(Args, Clone, Debug)]
pub struct BenchArgs {
    /// Per-gate trigger probability.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Monte Carlo trials per skip scheme.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Garbled gates in the circuit.
    #[arg(long, default_value_t = 1024)]
    pub gates: u64,
    /// Skip gates in the chain.
    #[arg(long, default_value_t = 8)]
    pub chain: u32,
    /// Cost of one hash call.
    #[arg(long, default_value_t = 1.0)]
    pub t_h: f64,
    /// Cost of one decryption.
    #[arg(long, default_value_t = 1.0)]
    pub t_d: f64,
    /// JSON subcircuit graph for the accumulative cost.
    #[arg(long)]
    pub dag: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

/// Dispatches a parsed command line and returns the process exit status.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    match &cli.command {
        Command::Analyze { circuit, json } => {
            let reports = cmd_analyze(&cli.config, circuit)?;
            if *json {
                writeln!(out, "{}", serde_json::to_string_pretty(&reports)?)?;
            } else {
                for r in &reports {
                    writeln!(out, "{r}")?;
                }
            }
            let any_pairs = reports.iter().any(|r| !r.pairs.is_empty());
            Ok(if any_pairs { EXIT_OK } else { EXIT_NO_PAIRS })
        }
        Command::Garble { circuit } => {
            let summary = cmd_garble(&cli.config, circuit)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
            Ok(EXIT_OK)
        }
        Command::Eval { input } => {
            let result = cmd_eval(&cli.config, &parse_bits(input)?)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&result)?)?;
            Ok(EXIT_OK)
        }
        Command::Bench(args) => {
            let report = cmd_bench(&cli.config, args)?;
            if args.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                write!(out, "{report}")?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn read_circuit(path: &Path) -> Result<Circuit> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_circuit(&text).with_context(|| format!("cannot parse {}", path.display()))
}

/// Bits given as `0`/`1` characters, first character for the first input.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => bail!("input bits must be 0 or 1, found `{other}`"),
        })
        .collect()
}

fn format_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Analyzer reports for every output wire.
pub fn cmd_analyze(cfg: &RunConfig, circuit: &Path) -> Result<Vec<AnalyzerReport>> {
    let c = read_circuit(circuit)?;
    let reports = c
        .output_wires()
        .map(|w| analyze_output(&c, w, cfg.plan_mode()))
        .collect::<Result<Vec<_>, _>>()?;
    for r in &reports {
        info!("output {}: {} skippable pairs", r.output, r.pairs.len());
    }
    Ok(reports)
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct GarbleSummary {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub mode: Mode,
    pub skip_gates: usize,
    pub files: Vec<WrittenFile>,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct WrittenFile {
    pub name: String,
    pub bytes: usize,
}

/// Garbles `circuit` and writes the garbled circuit, the skip set (unless
/// skipping is off) and the garbler's encoding and decoding data.
pub fn cmd_garble(cfg: &RunConfig, circuit: &Path) -> Result<GarbleSummary> {
    let pipeline = cfg.pipeline()?;
    let c = read_circuit(circuit)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let phase = garble_phase(&pipeline, &c, &mut rng)?;
    let g = &phase.garbling;

    let mut files = vec![
        (CIRCUIT_FILE, g.circuit.to_bytes()),
        (ENCODING_FILE, g.encoding.to_bytes()),
        (DECODING_FILE, g.decoding.to_bytes()),
    ];
    let skip_gates = phase.skips.as_ref().map_or(0, SkipSet::len);
    if let Some(skips) = &phase.skips {
        if skips.is_empty() {
            warn!("no skip gates generated; evaluation will always run in full");
        }
        files.push((SKIPS_FILE, skips.to_bytes()));
    }

    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    let stale = cfg.out_dir.join(SKIPS_FILE);
    if phase.skips.is_none() && stale.exists() {
        fs::remove_file(&stale).with_context(|| format!("cannot remove {}", stale.display()))?;
    }
    for (name, bytes) in &files {
        let path = cfg.out_dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        info!("wrote {} ({} bytes)", path.display(), bytes.len());
    }
    Ok(GarbleSummary {
        n: c.n(),
        m: c.m(),
        l: c.l(),
        mode: cfg.mode,
        skip_gates,
        files: files
            .into_iter()
            .map(|(name, bytes)| WrittenFile {
                name: name.to_string(),
                bytes: bytes.len(),
            })
            .collect(),
    })
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct EvalResult {
    /// Output bits, first output first.
    pub y: String,
    pub triggered: bool,
    pub index: Option<usize>,
    pub ops: OpCounts,
}

fn read_file(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    fs::read(&path).with_context(|| format!("cannot read {}", path.display()))
}

/// Evaluates the garbled files in the output directory on `x`.
///
/// The encoding file stands in for the input labels the garbler would hand
/// over; only the labels selected by `x` are used.
pub fn cmd_eval(cfg: &RunConfig, x: &[bool]) -> Result<EvalResult> {
    let dir = &cfg.out_dir;
    let gc = GarbledCircuit::from_bytes(&read_file(dir, CIRCUIT_FILE)?)
        .with_context(|| format!("invalid {CIRCUIT_FILE}"))?;
    let e = EncodingInfo::from_bytes(&read_file(dir, ENCODING_FILE)?)
        .with_context(|| format!("invalid {ENCODING_FILE}"))?;
    let d = DecodingInfo::from_bytes(&read_file(dir, DECODING_FILE)?)
        .with_context(|| format!("invalid {DECODING_FILE}"))?;
    let skips = match dir.join(SKIPS_FILE).exists() {
        true => {
            let target = *gc.topology().output_wires().end();
            let set = SkipSet::from_bytes(&read_file(dir, SKIPS_FILE)?, target)
                .with_context(|| format!("invalid {SKIPS_FILE}"))?;
            set.check_inputs(gc.topology().n)?;
            Some(set)
        }
        false => None,
    };
    if x.len() != gc.topology().n {
        bail!("expected {} input bits, got {}", gc.topology().n, x.len());
    }
    let input = encode(&e, x)?;
    let (out, report) = evaluate_phase(&gc, skips.as_ref(), &input);
    let y = decode(&d, &out)?;
    info!("triggered={} index={:?}", report.triggered, report.index);
    Ok(EvalResult {
        y: format_bits(&y),
        triggered: report.triggered,
        index: report.index,
        ops: report.ops,
    })
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct TriggerProbabilities {
    /// Probability that gate `k` is the first to fire, for `k = 1..=n_c`.
    pub per_gate: Vec<f64>,
    pub total: f64,
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct DagReport {
    pub ids: Vec<String>,
    pub depths: Vec<u32>,
    pub eac: Vec<f64>,
    pub sink_eac: f64,
    pub upper_bound: f64,
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct BenchReport {
    pub table: CostReport,
    pub trigger_probabilities: TriggerProbabilities,
    /// Chained average that also charges the trigger tests of a full miss.
    pub acc_instrumented: f64,
    pub monte_carlo: Vec<MonteCarloReport>,
    pub dag: Option<DagReport>,
}

impl std::fmt::Display for BenchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.table)?;
        let tp = &self.trigger_probabilities;
        writeln!(f, "\nfirst-trigger probability per chain position (total {:.6}):", tp.total)?;
        for (k, p) in tp.per_gate.iter().enumerate() {
            writeln!(f, "  k={:<3} {p:.6}", k + 1)?;
        }
        writeln!(f, "\nchained average with miss tests charged: {:.3}", self.acc_instrumented)?;
        for mc in &self.monte_carlo {
            writeln!(
                f,
                "monte carlo ({:?}): mean {:.3} +- {:.3} vs {:.3}, rel error {:.5} over {} trials",
                mc.accounting, mc.mean, mc.std_error, mc.analytic, mc.rel_error, mc.trials
            )?;
        }
        if let Some(d) = &self.dag {
            writeln!(f, "\nsubcircuit graph:")?;
            for ((id, depth), e) in d.ids.iter().zip(&d.depths).zip(&d.eac) {
                writeln!(f, "  {id:<12} depth {depth:<3} eac {e:.3}")?;
            }
            writeln!(f, "  sink eac {:.3} <= bound {:.3}", d.sink_eac, d.upper_bound)?;
        }
        Ok(())
    }
}

/// Cost report, trigger distribution, Monte Carlo check and, given a graph
/// file, accumulative costs. Also written to the output directory.
pub fn cmd_bench(cfg: &RunConfig, args: &BenchArgs) -> Result<BenchReport> {
    let p = CostParams {
        theta: args.theta,
        t_h: args.t_h,
        t_d: args.t_d,
        n_gates: args.gates,
        n_c: args.chain,
    };
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = table1_report(cfg.lambda, cfg.alpha, &p)?;
    table.simulate(args.trials, &mut rng)?;
    let (per_gate, total) = trigger_probabilities(p.theta, p.n_c);
    let monte_carlo = [MissAccounting::Closed, MissAccounting::Instrumented]
        .into_iter()
        .map(|a| monte_carlo_validate(&p, args.trials, a, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let dag = match &args.dag {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let spec: DagSpec = serde_json::from_str(&text)
                .with_context(|| format!("cannot parse {}", path.display()))?;
            let dag = SubcircuitDag::from_spec(&spec)?;
            let values = eac(&dag, p.theta);
            Some(DagReport {
                ids: dag.ids().to_vec(),
                depths: dag.depths().to_vec(),
                sink_eac: values[dag.sink()],
                eac: values,
                upper_bound: eac_upper_bound(&dag, p.theta),
            })
        }
        None => None,
    };
    let report = BenchReport {
        table,
        trigger_probabilities: TriggerProbabilities { per_gate, total },
        acc_instrumented: acc_instrumented(&p),
        monte_carlo,
        dag,
    };
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    fs::write(cfg.out_dir.join(BENCH_TEXT_FILE), report.to_string())?;
    fs::write(cfg.out_dir.join(BENCH_JSON_FILE), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(alpha: usize) -> RunConfig {
        RunConfig {
            lambda: 128,
            alpha,
            mode: Mode::Css,
            seed: 0,
            validated: false,
            out_dir: PathBuf::from("unused"),
        }
    }

    #[test]
    fn input_bits() {
        assert_eq!(parse_bits("01 1_0").unwrap(), [false, true, true, false]);
        assert!(parse_bits("012").is_err());
        assert_eq!(format_bits(&parse_bits("1001").unwrap()), "1001");
    }

    #[test]
    fn alpha_range() {
        assert!(config(8).pipeline().is_err());
        assert!(config(16).pipeline().is_ok());
        assert!(config(64).pipeline().is_ok());
        assert!(config(24).pipeline().is_ok());
        assert!(config(20).pipeline().is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["skipgc", "eval", "0101", "--mode", "pss", "--seed", "4"]).unwrap();
        assert_eq!(cli.config.mode, Mode::Pss);
        assert_eq!(cli.config.seed, 4);
        assert!(matches!(cli.command, Command::Eval { ref input } if input == "0101"));
        assert!(Cli::try_parse_from(["skipgc", "bench", "--theta", "x"]).is_err());
    }
}
