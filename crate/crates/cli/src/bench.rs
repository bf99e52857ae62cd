//! `fsd bench`: latency and diversity across generation lengths.
//!
//! Each variant runs once per prompt at the longest requested length; the
//! row for a shorter length uses the leading steps of those runs. Runs are
//! sequential so step timings are not skewed by parallel work.

use anyhow::Result;
use fsd_core::metrics::RepReport;
use fsd_core::GenerationResult;
use serde::Serialize;
use serde_json::json;

use crate::args::BenchArgs;
use crate::backend::{Backends, Session};
use crate::exit::Failure;
use crate::manifest::{Run, RunManifest};
use crate::output::sink;
use crate::{generate, prompts, settings};

pub const BENCH_SCHEMA: &str = "fsd.bench/1";
pub const STEP_SCHEMA: &str = "fsd.bench.steps/1";
pub const DEFAULT_BENCH_PROMPTS: usize = 20;

#[derive(Debug, Serialize)]
struct Row<'a> {
    schema: &'static str,
    variant: &'a str,
    length: usize,
    prompts: usize,
    mean_step_us: f64,
    mean_instance_ms: f64,
    diversity: f64,
    rep_2: f64,
    rep_3: f64,
    rep_4: f64,
}

#[derive(Debug, Serialize)]
struct StepRow<'a> {
    schema: &'static str,
    variant: &'a str,
    prompt: usize,
    step: usize,
    us: f64,
}

fn row<'a>(variant: &'a str, length: usize, results: &[GenerationResult]) -> Row<'a> {
    let n = results.len().max(1) as f64;
    let (mut step_secs, mut steps, mut instance_secs) = (0.0, 0usize, 0.0);
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        let times = &r.wall_time_per_step[..length.min(r.wall_time_per_step.len())];
        let total: f64 = times.iter().map(|d| d.as_secs_f64()).sum();
        step_secs += total;
        instance_secs += total;
        steps += times.len();
        reports.push(RepReport::<f64>::of(&r.continuation[..length.min(r.continuation.len())]));
    }
    let mean = |f: fn(&RepReport<f64>) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Row {
        schema: BENCH_SCHEMA,
        variant,
        length,
        prompts: results.len(),
        mean_step_us: if steps == 0 { 0.0 } else { step_secs * 1e6 / steps as f64 },
        mean_instance_ms: instance_secs * 1e3 / n,
        diversity: mean(|r| r.diversity),
        rep_2: mean(|r| r.rep_2),
        rep_3: mean(|r| r.rep_3),
        rep_4: mean(|r| r.rep_4),
    }
}

pub fn cmd(mut args: BenchArgs) -> Result<u8> {
    if args.lengths.is_empty() || args.variants.is_empty() {
        return Err(Failure::Usage("--lengths and --variants must not be empty".into()).into());
    }
    args.decode = settings::merge(&args.decode, args.config.as_deref())?;
    args.config = None;
    if args.prompts.prompts.is_none() && args.prompts.num_prompts.is_none() {
        args.prompts.num_prompts = Some(DEFAULT_BENCH_PROMPTS);
    }
    let backends = Backends::new(&args.backend)?;
    let mut session: Session = backends.open()?;
    let prompts = prompts::load(&args.prompts, &backends, &mut session)?;
    let longest = *args.lengths.iter().max().expect("non-empty");

    let mut table = csv::Writer::from_writer(sink(args.out.as_deref())?);
    let mut steps_csv = match &args.per_step {
        Some(path) => Some(csv::Writer::from_writer(sink(Some(path))?)),
        None => None,
    };
    let mut configs = Vec::new();
    for variant in &args.variants {
        let mut decode = args.decode.clone();
        decode.len = Some(longest);
        let (cfg, _) = settings::decoder_config(&decode, Some(variant), &mut session)?;
        let mut results = Vec::with_capacity(prompts.len());
        for outcome in generate::run_all(&backends, &cfg, &prompts, 1)? {
            let r = outcome.map_err(Failure::Backend)?;
            if let Some(msg) = &r.failure {
                return Err(Failure::Backend(format!("{variant}: {msg}")).into());
            }
            results.push(r);
        }
        let name = cfg.variant.name();
        for &length in &args.lengths {
            table.serialize(row(name, length, &results))?;
        }
        if let Some(w) = steps_csv.as_mut() {
            for (prompt, r) in results.iter().enumerate() {
                for (step, d) in r.wall_time_per_step.iter().enumerate() {
                    w.serialize(StepRow { schema: STEP_SCHEMA, variant: name, prompt, step, us: d.as_secs_f64() * 1e6 })?;
                }
            }
        }
        configs.push(cfg);
    }
    table.flush()?;
    if let Some(w) = steps_csv.as_mut() {
        w.flush()?;
    }
    drop((table, steps_csv));
    let details = json!({ "configs": configs, "backend": backends.info(&session), "prompts": prompts.len() });
    let (manifest, out) = (args.manifest.clone(), args.out.clone());
    RunManifest::new(Run::Bench(args), details).write(manifest.as_deref(), out.as_deref())?;
    Ok(0)
}
