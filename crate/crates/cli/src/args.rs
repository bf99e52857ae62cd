//! Command-line arguments. The argument structs double as the serialized
//! run description stored in manifests.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "fsd", version, about = "Anti-LM penalty decoding over pluggable language-model backends")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate continuations and write them as JSONL.
    Generate(GenerateArgs),
    /// Compute REP-n and diversity over a JSONL file of generations.
    Eval(EvalArgs),
    /// Measure latency and diversity across generation lengths.
    Bench(BenchArgs),
    /// Serve a built-in Markov backend over the wire protocol.
    Serve(ServeArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BackendArgs {
    /// builtin:testbed, builtin:<corpus file>, bridge-cmd:<command line> or
    /// bridge-tcp:<host:port>.
    #[arg(long, default_value = "builtin:testbed")]
    pub backend: String,
    /// Markov order of a built-in backend trained on a corpus file.
    #[arg(long, default_value_t = 2)]
    pub markov_order: usize,
    /// Laplace constant of a built-in backend trained on a corpus file.
    #[arg(long, default_value_t = 0.0)]
    pub add_k: f64,
    /// Pseudo hidden states of built-in backends: onehot or proj[:dim[:seed]].
    #[arg(long, default_value = "proj:64:0")]
    pub hidden: String,
    /// Minimum entries requested from a bridge per step.
    #[arg(long)]
    pub bridge_top: Option<usize>,
    /// Seconds to wait for a bridge reply.
    #[arg(long, default_value_t = 120)]
    pub timeout: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnOff {
    On,
    Off,
}

/// Decoder settings. Unset fields fall back to the config file, then to
/// the variant defaults.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeArgs {
    /// greedy, top-k, top-p, fsd or fsd-vec.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// n-gram order (fsd) or window length (fsd-vec).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<OnOff>,
    /// Stopword file, `builtin` for the shipped English list, or `none`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<String>,
    /// Punctuation file, `builtin` for the shipped set, or `none`.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub punct: Option<String>,
    /// Tokens to generate per prompt.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub len: Option<usize>,
    /// Base seed; prompt i uses seed + i. FSD_SEED overrides it.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PromptArgs {
    /// JSONL with one {"text": ...} or {"ids": [...]} per line. Without it,
    /// prompts are windows of the built-in backend's corpus.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Prompt length in tokens (file prompts are cut to it when given).
    #[arg(long)]
    pub prompt_len: Option<usize>,
    /// Number of prompts (corpus windows default to 100).
    #[arg(long)]
    pub num_prompts: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[command(flatten)]
    pub prompts: PromptArgs,
    /// JSON file with decoder settings (same names as the flags).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output JSONL; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to <out>.manifest.json.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Parallel sessions.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Include per-step wall times in the output records.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    /// Token ids (falls back to whitespace words when a line has no ids).
    Token,
    /// Whitespace-separated words of the continuation text.
    Word,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// JSONL of generations ({"ids": [...]} or {"continuation": "..."}).
    pub input: PathBuf,
    /// Also report mean REP-n for n = 1..=max-n.
    #[arg(long)]
    pub per_n: bool,
    #[arg(long, default_value_t = 4)]
    pub max_n: usize,
    #[arg(long, value_enum, default_value_t = Unit::Token)]
    pub unit: Unit,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Shared overrides applied on top of each variant's defaults.
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[command(flatten)]
    pub prompts: PromptArgs,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "256,512,768")]
    pub lengths: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "greedy,fsd,fsd-vec")]
    pub variants: Vec<String>,
    /// Summary CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-step latency CSV.
    #[arg(long)]
    pub per_step: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ServeMode {
    Stdio,
    Tcp,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long, value_enum, default_value_t = ServeMode::Stdio)]
    pub mode: ServeMode,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// 0 picks a free port; the bound address is printed on stderr.
    #[arg(long, default_value_t = 0)]
    pub port: u16,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Write to this path instead of the recorded output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
