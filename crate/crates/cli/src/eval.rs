//! `fsd eval`.

use std::io::Write;

use anyhow::Result;
use fsd_core::metrics::{rep_n, CorpusSummary, RepReport};
use serde::Deserialize;
use serde_json::json;

use crate::args::{EvalArgs, Unit};
use crate::exit::Failure;
use crate::manifest::{Run, RunManifest};
use crate::output::{sink, write_jsonl};

pub const EVAL_SCHEMA: &str = "fsd.eval/1";

#[derive(Debug, Deserialize)]
struct Line {
    ids: Option<Vec<u32>>,
    continuation: Option<String>,
}

/// Sequences to score, as token ids or as words.
enum Seq {
    Ids(Vec<u32>),
    Words(Vec<String>),
}

impl Seq {
    fn report(&self) -> RepReport<f64> {
        match self {
            Seq::Ids(s) => RepReport::of(s),
            Seq::Words(s) => RepReport::of(s),
        }
    }

    fn rep(&self, n: usize) -> f64 {
        match self {
            Seq::Ids(s) => rep_n(s, n),
            Seq::Words(s) => rep_n(s, n),
        }
        .expect("n >= 1")
    }
}

fn read(args: &EvalArgs) -> Result<Vec<(usize, Seq)>> {
    let path = &args.input;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut seqs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Failure::Data(format!("{}:{}: {msg}", path.display(), i + 1));
        let line: Line = serde_json::from_str(raw).map_err(|e| bad(e.to_string()))?;
        let words = |text: String| Seq::Words(text.split_whitespace().map(str::to_owned).collect());
        let seq = match (args.unit, line.ids, line.continuation) {
            (Unit::Token, Some(ids), _) => Seq::Ids(ids),
            (_, _, Some(text)) => words(text),
            (Unit::Word, _, None) => return Err(bad("word unit needs a \"continuation\" field".into()).into()),
            (Unit::Token, None, None) => return Err(bad("expected an \"ids\" or \"continuation\" field".into()).into()),
        };
        seqs.push((i + 1, seq));
    }
    Ok(seqs)
}

pub fn cmd(args: EvalArgs) -> Result<u8> {
    if args.per_n && args.max_n == 0 {
        return Err(Failure::Usage("--max-n must be >= 1".into()).into());
    }
    let seqs = read(&args)?;
    let mut out = sink(args.out.as_deref())?;
    let mut reports = Vec::with_capacity(seqs.len());
    for (line, seq) in &seqs {
        let report = seq.report();
        write_jsonl(&mut *out, &json!({ "schema": EVAL_SCHEMA, "kind": "line", "line": line, "report": report }))?;
        reports.push(report);
    }
    let summary = CorpusSummary::of(&reports);
    write_jsonl(&mut *out, &json!({ "schema": EVAL_SCHEMA, "kind": "summary", "summary": summary }))?;
    if args.per_n {
        for n in 1..=args.max_n {
            let mean = if seqs.is_empty() { 0.0 } else { seqs.iter().map(|(_, s)| s.rep(n)).sum::<f64>() / seqs.len() as f64 };
            write_jsonl(&mut *out, &json!({ "schema": EVAL_SCHEMA, "kind": "per_n", "n": n, "rep": mean }))?;
        }
    }
    out.flush()?;
    drop(out);
    let details = json!({ "lines": seqs.len(), "summary": summary });
    RunManifest::new(Run::Eval(args.clone()), details).write(args.manifest.as_deref(), args.out.as_deref())?;
    Ok(0)
}
