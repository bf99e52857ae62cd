//! `fsd generate`.

use std::io::Write;
use std::time::Instant;

use anyhow::Result;
use fsd_core::result::StepRecord;
use fsd_core::{Decoder, DecoderConfig, GenerationResult, LogitProvider, Token};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::GenerateArgs;
use crate::backend::{Backends, Session};
use crate::manifest::{Run, RunManifest};
use crate::output::{sink, write_jsonl};
use crate::{exit, prompts, settings};

pub const GENERATION_SCHEMA: &str = "fsd.generation/1";

#[derive(Debug, Serialize)]
struct Record<'a> {
    schema: &'static str,
    index: usize,
    variant: &'static str,
    seed: u64,
    prompt: String,
    continuation: String,
    prompt_ids: Vec<u32>,
    ids: Vec<u32>,
    steps: &'a [StepRecord<f64>],
    rng: &'static str,
    failure: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_us: Option<Vec<f64>>,
}

fn ids(tokens: &[Token]) -> Vec<u32> {
    tokens.iter().map(|t| t.id()).collect()
}

/// Runs every prompt, one backend session per worker, keeping input order.
pub fn run_all(backends: &Backends, cfg: &DecoderConfig, prompts: &[Vec<Token>], jobs: usize) -> Result<Vec<Result<GenerationResult, String>>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    Ok(pool.install(|| {
        prompts
            .par_iter()
            .enumerate()
            .map_init(
                || backends.open().map_err(|e| format!("{e:#}")),
                |session, (i, prompt)| {
                    let session = session.as_mut().map_err(|e| e.clone())?;
                    let mut cfg = cfg.clone();
                    cfg.seed = cfg.seed.wrapping_add(i as u64);
                    let decoder = Decoder::new(cfg).map_err(|e| e.to_string())?;
                    Ok(decoder.generate(session, prompt))
                },
            )
            .collect()
    }))
}

pub fn cmd(mut args: GenerateArgs) -> Result<u8> {
    let started = Instant::now();
    args.decode = settings::merge(&args.decode, args.config.as_deref())?;
    args.config = None;
    let backends = Backends::new(&args.backend)?;
    let mut session: Session = backends.open()?;
    let (cfg, unresolved) = settings::decoder_config(&args.decode, None, &mut session)?;
    args.decode.seed = Some(cfg.seed);
    let prompts = prompts::load(&args.prompts, &backends, &mut session)?;
    let results = run_all(&backends, &cfg, &prompts, args.jobs)?;

    let mut out = sink(args.out.as_deref())?;
    let (mut failures, mut steps, mut step_secs) = (0usize, 0usize, 0f64);
    for (i, (prompt, result)) in prompts.iter().zip(&results).enumerate() {
        let (continuation, record_steps, failure, times) = match result {
            Ok(r) => (&r.continuation[..], &r.steps[..], r.failure.as_deref(), r.wall_time_per_step.iter().map(|d| d.as_secs_f64() * 1e6).collect()),
            Err(e) => (&[][..], &[][..], Some(e.as_str()), Vec::new()),
        };
        if failure.is_some() {
            failures += 1;
        }
        steps += times.len();
        step_secs += times.iter().sum::<f64>() / 1e6;
        let record = Record {
            schema: GENERATION_SCHEMA,
            index: i,
            variant: cfg.variant.name(),
            seed: cfg.seed.wrapping_add(i as u64),
            prompt: session.decode(prompt)?,
            continuation: session.decode(continuation)?,
            prompt_ids: ids(prompt),
            ids: ids(continuation),
            steps: record_steps,
            rng: fsd_core::result::RNG_ALGORITHM,
            failure,
            step_us: args.timings.then_some(times),
        };
        write_jsonl(&mut *out, &record)?;
    }
    out.flush()?;
    drop(out);

    let details = json!({
        "config": cfg,
        "backend": backends.info(&session),
        "unresolved": unresolved,
        "prompts": prompts.len(),
        "failures": failures,
        "timings": {
            "total_ms": started.elapsed().as_secs_f64() * 1e3,
            "steps": steps,
            "mean_step_us": if steps == 0 { 0.0 } else { step_secs * 1e6 / steps as f64 },
        },
    });
    let manifest_path = args.manifest.clone();
    let out_path = args.out.clone();
    RunManifest::new(Run::Generate(args), details).write(manifest_path.as_deref(), out_path.as_deref())?;
    if failures > 0 {
        eprintln!("fsd: {failures} of {} generations failed; see the `failure` field", prompts.len());
        return Ok(exit::BACKEND);
    }
    Ok(0)
}
