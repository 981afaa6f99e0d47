//! Command-line front end.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage or malformed input,
//! 3 entropy exhausted, 4 provider failure.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;

use crate::codec::{Alignment, CodecError, Decoder, Encoder};
use crate::keystream::{KeyError, Keystream, SecretKey};
use crate::lab::{self, LabError, RobustnessConfig};
use crate::provider::{ProviderConfig, ProviderError};
use crate::sampler::{SamplerError, SamplingFunction, BUILTIN_NAMES, DEFAULT_SAMPLER};
use crate::vocab::{format_bits, parse_bits, Alphabet, TokenId, VocabError};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EXHAUSTED: i32 = 3;
pub const EXIT_PROVIDER: i32 = 4;

/// Environment variable holding the hex key when `--key-file` is absent.
pub const KEY_ENV: &str = "PERMUSTEG_KEY";

#[derive(Debug, Parser)]
#[command(
    name = "permusteg",
    version,
    about = "Permutation-coded steganography with a model-free decoder"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a fresh 32-byte key as 64 hex characters.
    Keygen(KeygenArgs),
    /// Hide a message in model-generated tokens.
    Encode(EncodeArgs),
    /// Extract hidden bits from tokens or raw token bits. Needs no model.
    Decode(DecodeArgs),
    /// Pass a bit file through a binary symmetric channel.
    Bsc(BscArgs),
    /// Capacity, encode/decode speed and entropy on a provider.
    Bench(BenchArgs),
    /// Correct/wrong/lost ratios under random bit flips.
    Robustness(RobustnessArgs),
    /// Distribution-preservation checks.
    SecurityTest(SecurityArgs),
    /// Check a sampling function's admissibility condition.
    ValidateSampler(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Frame {
    None,
    /// 16-bit big-endian payload length before the payload.
    Length16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Align {
    /// Token boundaries when the vocabulary size is known, otherwise every bit.
    Auto,
    Token,
    EveryBit,
}

#[derive(Debug, Args)]
pub struct KeyArgs {
    /// Key file (64 hex characters). Falls back to $PERMUSTEG_KEY.
    #[arg(long)]
    pub key_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// fixed:<balancedN|skewed4|ramp4|file=PATH>, markov:<corpus>[:order],
    /// bridge:tcp:<host>:<port> or bridge:exec:<command>
    #[arg(long)]
    pub provider: String,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Derive the key deterministically from a seed (testing only).
    #[arg(long)]
    pub test_seed: Option<u64>,
    /// Overwrite an existing key file.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub key: KeyArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = DEFAULT_SAMPLER)]
    pub sampler: String,
    #[arg(long, default_value_t = 0.01)]
    pub pe: f64,
    /// Secret bits as '0'/'1' characters, or hex with --hex.
    #[arg(long)]
    pub msg: String,
    #[arg(long)]
    pub hex: bool,
    #[arg(long, value_enum, default_value_t = Frame::None)]
    pub frame: Frame,
    /// Comma-separated token IDs preceding the stegotext.
    #[arg(long, value_delimiter = ',')]
    pub history: Vec<TokenId>,
    #[arg(long, default_value_t = 100_000)]
    pub max_tokens: usize,
    /// Token file, one ID per line. Standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON trace, also written on entropy exhaustion.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "bits"]))]
pub struct DecodeArgs {
    #[command(flatten)]
    pub key: KeyArgs,
    #[arg(long, default_value = DEFAULT_SAMPLER)]
    pub sampler: String,
    #[arg(long, default_value_t = 0.01)]
    pub pe: f64,
    /// Token file, one decimal ID per line ('-' for standard input). Needs --vocab-size.
    #[arg(long, requires = "vocab_size")]
    pub input: Option<PathBuf>,
    /// Raw token-bit file of '0'/'1' characters ('-' for standard input).
    #[arg(long)]
    pub bits: Option<PathBuf>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = Align::Auto)]
    pub align: Align,
    #[arg(long, value_enum, default_value_t = Frame::None)]
    pub frame: Frame,
    /// Drop this many bits from the end of the extracted stream.
    #[arg(long, default_value_t = 0)]
    pub truncate_tail: usize,
    /// Print the extracted bits as hex.
    #[arg(long)]
    pub hex: bool,
    /// Write the full decode outcome as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BscArgs {
    /// '0'/'1' bit file ('-' for standard input).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub e: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = DEFAULT_SAMPLER)]
    pub sampler: String,
    #[arg(long, default_value_t = 0.01)]
    pub pe: f64,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Secret bits per trial.
    #[arg(long, default_value_t = 16)]
    pub bits: usize,
    #[arg(long, default_value_t = 100_000)]
    pub max_tokens: usize,
    /// Trial keys and messages are derived from this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long, default_value = "fixed:balanced4")]
    pub provider: String,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value = DEFAULT_SAMPLER)]
    pub sampler: String,
    #[arg(long, default_value_t = 0.1)]
    pub decoder_pe: f64,
    /// Defaults to the square of --decoder-pe.
    #[arg(long)]
    pub encoder_pe: Option<f64>,
    /// start:stop:step or a comma-separated list.
    #[arg(long, default_value = "0:0.10:0.01")]
    pub e_grid: String,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub bits_per_trial: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_tokens: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit JSON instead of a text table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SecurityArgs {
    /// A history-independent model; its first distribution is the reference.
    #[arg(long, default_value = "fixed:ramp4")]
    pub provider: String,
    #[arg(long, default_value = DEFAULT_SAMPLER)]
    pub sampler: String,
    #[arg(long, default_value_t = 0.01)]
    pub pe: f64,
    #[arg(long, default_value_t = 100_000)]
    pub tokens: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub grid: usize,
    /// Random distributions for the path-product check.
    #[arg(long, default_value_t = 1000)]
    pub distributions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Builtin name, or "all".
    #[arg(long, default_value = "all")]
    pub sampler: String,
    #[arg(long, default_value_t = 10_000)]
    pub grid: usize,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn other(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_OTHER,
            message: message.into(),
        }
    }
}

impl From<ProviderError> for CliError {
    fn from(e: ProviderError) -> Self {
        let code = match e {
            ProviderError::Config(_) | ProviderError::Vocab(_) => EXIT_USAGE,
            _ => EXIT_PROVIDER,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Provider(p) => p.into(),
            CodecError::Key(k) => k.into(),
            CodecError::EntropyExhausted { .. } => Self {
                code: EXIT_EXHAUSTED,
                message: e.to_string(),
            },
            _ => Self::usage(e.to_string()),
        }
    }
}

impl From<KeyError> for CliError {
    fn from(e: KeyError) -> Self {
        match e {
            KeyError::BadHex(_) | KeyError::BadLength(_) => Self::usage(e.to_string()),
            _ => Self::other(e.to_string()),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Codec(c) => c.into(),
            LabError::Provider(p) => p.into(),
            LabError::DegenerateModel(_) => Self::other(e.to_string()),
            _ => Self::usage(e.to_string()),
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<VocabError> for CliError {
    fn from(e: VocabError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::other(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Keygen(a) => cmd_keygen(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Bsc(a) => cmd_bsc(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Robustness(a) => cmd_robustness(a),
        Command::SecurityTest(a) => cmd_security(a),
        Command::ValidateSampler(a) => cmd_validate(a),
    }
}

/// Parses arguments, runs, reports errors and returns the exit code.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn load_key(args: &KeyArgs) -> Result<SecretKey, CliError> {
    match &args.key_file {
        Some(path) => Ok(SecretKey::read_file(path)?),
        None => match std::env::var(KEY_ENV) {
            Ok(hex) => Ok(SecretKey::from_hex(&hex)?),
            Err(_) => Err(CliError::usage(format!(
                "no key: pass --key-file or set {KEY_ENV}"
            ))),
        },
    }
}

fn read_source(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))
    }
}

fn write_sink(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Secret bits from `'0'/'1'` text or hex (MSB first).
pub fn parse_message(msg: &str, hex: bool) -> Result<Vec<u8>, CliError> {
    let bits = if hex {
        let bytes = hex::decode(msg.trim())
            .map_err(|e| CliError::usage(format!("bad hex message: {e}")))?;
        bytes
            .iter()
            .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1))
            .collect()
    } else {
        parse_bits(msg)?
    };
    if bits.is_empty() {
        return Err(CliError::usage("message is empty"));
    }
    Ok(bits)
}

pub fn frame_message(bits: Vec<u8>, frame: Frame) -> Result<Vec<u8>, CliError> {
    match frame {
        Frame::None => Ok(bits),
        Frame::Length16 => {
            let len = u16::try_from(bits.len()).map_err(|_| {
                CliError::usage(format!(
                    "{} bits exceed the 16-bit length header",
                    bits.len()
                ))
            })?;
            let mut out: Vec<u8> = (0..16).rev().map(|i| ((len >> i) & 1) as u8).collect();
            out.extend(bits);
            Ok(out)
        }
    }
}

/// Strips a length16 header; returns the payload and whether it was complete.
pub fn unframe(bits: &[u8], frame: Frame) -> (Vec<u8>, bool) {
    match frame {
        Frame::None => (bits.to_vec(), true),
        Frame::Length16 => {
            if bits.len() < 16 {
                return (Vec::new(), false);
            }
            let len = bits[..16]
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | b as usize);
            let body = &bits[16..];
            (body[..len.min(body.len())].to_vec(), body.len() >= len)
        }
    }
}

fn bits_to_hex(bits: &[u8]) -> String {
    bits.chunks(8)
        .map(|c| {
            let byte = c
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)));
            format!("{byte:02x}")
        })
        .collect()
}

fn cmd_keygen(a: KeygenArgs) -> CliResult {
    let key = match a.test_seed {
        Some(seed) => SecretKey::from_test_seed(seed),
        None => SecretKey::generate()?,
    };
    match &a.out {
        Some(path) => {
            if path.exists() && !a.force {
                return Err(CliError::other(format!(
                    "{} exists; pass --force to overwrite",
                    path.display()
                )));
            }
            key.write_file(path)?;
        }
        None => write_sink(None, &key.to_key_file())?,
    }
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> CliResult {
    let bits = frame_message(parse_message(&a.msg, a.hex)?, a.frame)?;
    let key = load_key(&a.key)?;
    let sf = SamplingFunction::builtin(&a.sampler)?;
    let encoder = Encoder::new(&sf, a.pe, a.max_tokens)?;
    let provider = ProviderConfig::parse(&a.model.provider, a.model.temperature)?.build()?;
    match encoder.encode(
        provider.as_ref(),
        &mut Keystream::new(key),
        &bits,
        &a.history,
    ) {
        Ok(trace) => {
            let mut tokens = String::new();
            for t in &trace.tokens {
                writeln!(tokens, "{t}").expect("string write");
            }
            write_sink(a.out.as_deref(), &tokens)?;
            if let Some(p) = &a.trace {
                std::fs::write(p, to_json(&trace))?;
            }
            eprintln!(
                "embedded {} bits in {} tokens ({} token bits), vocabulary {}",
                bits.len(),
                trace.tokens.len(),
                trace.r_values.len(),
                trace.vocab_size
            );
            Ok(())
        }
        Err(CodecError::EntropyExhausted {
            confirmed,
            total,
            tokens,
            trace,
        }) => {
            if let Some(p) = &a.trace {
                std::fs::write(p, to_json(&trace))?;
            }
            Err(CodecError::EntropyExhausted {
                confirmed,
                total,
                tokens,
                trace,
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Parses a newline-delimited decimal token file.
pub fn parse_token_file(text: &str, alphabet: &Alphabet) -> Result<Vec<TokenId>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let id: TokenId = l.trim().parse().map_err(|_| {
                CliError::usage(format!(
                    "malformed token file: line {} is `{}`",
                    i + 1,
                    l.trim()
                ))
            })?;
            alphabet.check(id).map_err(|e| {
                CliError::usage(format!("malformed token file: line {}: {e}", i + 1))
            })?;
            Ok(id)
        })
        .collect()
}

fn cmd_decode(a: DecodeArgs) -> CliResult {
    let key = load_key(&a.key)?;
    let sf = SamplingFunction::builtin(&a.sampler)?;
    let alphabet = a.vocab_size.map(Alphabet::new).transpose()?;
    let token_bits = match (&a.input, &a.bits) {
        (Some(path), _) => {
            let alphabet = alphabet.as_ref().expect("clap requires --vocab-size");
            alphabet.tokens_to_bits(&parse_token_file(&read_source(path)?, alphabet)?)?
        }
        (None, Some(path)) => parse_bits(&read_source(path)?)
            .map_err(|e| CliError::usage(format!("malformed bit file: {e}")))?,
        (None, None) => unreachable!("clap enforces one source"),
    };
    let alignment = match (a.align, &alphabet) {
        (Align::EveryBit, _) | (Align::Auto, None) => Alignment::EveryBit,
        (Align::Token | Align::Auto, Some(al)) => Alignment::TokenBoundary(al.bit_len()),
        (Align::Token, None) => return Err(CliError::usage("--align token needs --vocab-size")),
    };
    let mut out =
        Decoder::new(&sf, a.pe, alignment)?.decode(&mut Keystream::new(key), &token_bits)?;
    out.truncate_tail(a.truncate_tail);
    if let Some(p) = &a.report {
        std::fs::write(p, to_json(&out))?;
    }
    let (payload, complete) = unframe(&out.bits, a.frame);
    eprintln!(
        "verdict: {} ({} bits, {} residual token bits)",
        out.verdict(),
        out.bits.len(),
        out.residual
    );
    if !complete {
        eprintln!("warning: framed message is incomplete");
    }
    let text = if a.hex {
        if payload.len() % 8 != 0 {
            eprintln!(
                "warning: {} bits do not fill whole bytes; zero-padded",
                payload.len()
            );
        }
        bits_to_hex(&payload)
    } else {
        format_bits(&payload)
    };
    write_sink(None, &format!("{text}\n"))
}

fn cmd_bsc(a: BscArgs) -> CliResult {
    let bits = parse_bits(&read_source(&a.input)?)?;
    let out = lab::transmit_bsc(
        &bits,
        lab::BscConfig {
            e: a.e,
            seed: a.seed,
        },
    )?;
    let flips = bits.iter().zip(&out).filter(|(x, y)| x != y).count();
    eprintln!("flipped {flips} of {} bits", bits.len());
    write_sink(a.out.as_deref(), &format!("{}\n", format_bits(&out)))
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let sf = SamplingFunction::builtin(&a.sampler)?;
    let provider = ProviderConfig::parse(&a.model.provider, a.model.temperature)?.build()?;
    let report = lab::run_bench(
        provider.as_ref(),
        &sf,
        a.pe,
        a.trials,
        a.bits,
        a.max_tokens,
        a.seed,
    )?;
    write_sink(None, &to_json(&report))
}

#[derive(Serialize)]
struct RobustnessOutput {
    provider: String,
    sampler: String,
    k: Option<f64>,
    bound: Option<f64>,
    quoted_bound_for_quoted_k: f64,
    formula_bound_for_quoted_k: f64,
    config: RobustnessConfig,
    rows: Vec<lab::RobustnessRow>,
}

fn cmd_robustness(a: RobustnessArgs) -> CliResult {
    let sf = SamplingFunction::builtin(&a.sampler)?;
    let provider = ProviderConfig::parse(&a.provider, a.temperature)?.build()?;
    let cfg = RobustnessConfig {
        encoder_pe: a.encoder_pe.unwrap_or(a.decoder_pe * a.decoder_pe),
        decoder_pe: a.decoder_pe,
        e_grid: lab::parse_grid(&a.e_grid)?,
        trials: a.trials,
        bits_per_trial: a.bits_per_trial,
        max_tokens: a.max_tokens,
        seed: a.seed,
    };
    let k = lab::estimate_k(provider.as_ref(), &sf, 20_000, a.seed).ok();
    let rows = lab::run_robustness_experiment(provider.as_ref(), &sf, &cfg)?;
    let out = RobustnessOutput {
        provider: provider.describe(),
        sampler: sf.name().to_string(),
        k,
        bound: k.map(|k| lab::robustness_bound(k, &sf, f64::INFINITY)),
        quoted_bound_for_quoted_k: lab::QUOTED_ROBUSTNESS,
        formula_bound_for_quoted_k: lab::robustness_bound(lab::QUOTED_K, &sf, f64::INFINITY),
        config: cfg,
        rows,
    };
    if a.json {
        return write_sink(None, &to_json(&out));
    }
    let mut t = String::new();
    let fmt_opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    writeln!(t, "provider  {}", out.provider).expect("string write");
    writeln!(
        t,
        "pe        encoder {}  decoder {}",
        out.config.encoder_pe, out.config.decoder_pe
    )
    .expect("string write");
    writeln!(
        t,
        "K         {}   bound {}",
        fmt_opt(out.k),
        fmt_opt(out.bound)
    )
    .expect("string write");
    writeln!(
        t,
        "{:>6}  {:>9}  {:>9}  {:>9}",
        "e", "correct", "wrong", "lost"
    )
    .expect("string write");
    for r in &out.rows {
        writeln!(
            t,
            "{:>6.3}  {:>9.4}  {:>9.4}  {:>9.4}",
            r.e, r.correct_ratio, r.wrong_ratio, r.lost_ratio
        )
        .expect("string write");
    }
    write_sink(None, &t)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    threshold: f64,
    pass: bool,
}

fn cmd_security(a: SecurityArgs) -> CliResult {
    let sf = SamplingFunction::builtin(&a.sampler)?;
    let provider = ProviderConfig::parse(&a.provider, 1.0)?.build()?;
    let mut checks = Vec::new();

    let splits = [
        (0.75, 0.25),
        (0.3, 0.45),
        (0.5, 0.5),
        (0.9, 0.1),
        (1.0, 0.0),
        (0.0, 0.2),
    ];
    let grid_err = splits
        .iter()
        .flat_map(|&(p0, p1)| {
            let s = crate::vocab::GroupSplit { p0, p1 };
            [0u8, 1].map(|b| (lab::grid_emission_frequency(s, b, a.grid) - p0 / (p0 + p1)).abs())
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "step_law_grid",
        value: grid_err,
        threshold: 2e-6,
        pass: grid_err <= 2e-6,
    });

    let mut rng = lab::trial_rng(a.seed, u64::MAX);
    let mut path_err: f64 = 0.0;
    for _ in 0..a.distributions {
        let size = rng.gen_range(2..=1024);
        let d = lab::random_distribution(&mut rng, size);
        path_err = path_err.max(lab::path_product_max_error(&Alphabet::new(size)?, &d)?);
    }
    checks.push(Check {
        name: "path_product",
        value: path_err,
        threshold: 1e-12,
        pass: path_err <= 1e-12,
    });

    let tv = lab::encoded_token_tv(provider.as_ref(), &sf, a.pe, a.tokens, a.seed)?;
    checks.push(Check {
        name: "encoded_token_tv",
        value: tv.tv,
        threshold: 0.01,
        pass: tv.tv < 0.01,
    });

    let failed = checks.iter().filter(|c| !c.pass).count();
    write_sink(None, &to_json(&checks))?;
    if failed > 0 {
        return Err(CliError::other(format!("{failed} security checks failed")));
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> CliResult {
    let names: Vec<&str> = if a.sampler == "all" {
        BUILTIN_NAMES.to_vec()
    } else {
        vec![a.sampler.as_str()]
    };
    let mut reports = Vec::new();
    for name in names {
        reports.push(SamplingFunction::builtin(name)?.validate(a.grid)?);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    write_sink(None, &to_json(&reports))?;
    if failed > 0 {
        return Err(CliError::other(format!(
            "{failed} sampling functions failed validation"
        )));
    }
    Ok(())
}
