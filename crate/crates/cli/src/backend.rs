//! Backend selection: parses `--backend` and opens one session per job.

use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use fsd_core::backends::{HiddenMode, LogitProvider, MarkovModel, TokenizerMode, WireBackend};
use fsd_core::{testbed, MarkovBackend};
use serde::Serialize;

use crate::args::BackendArgs;
use crate::exit::Failure;

pub type Session = Box<dyn LogitProvider<f64> + Send>;

enum Kind {
    Builtin { model: Arc<MarkovModel>, corpus: Arc<str> },
    BridgeCmd(Vec<String>),
    BridgeTcp(String),
}

pub struct Backends {
    kind: Kind,
    timeout: Duration,
    bridge_top: Option<usize>,
    descriptor: String,
}

/// What the manifest records about the backend.
#[derive(Debug, Clone, Serialize)]
pub struct BackendInfo {
    pub descriptor: String,
    pub vocab_size: usize,
    pub supports_hidden: bool,
    pub hidden_dim: Option<usize>,
    pub eos: Option<u32>,
}

pub fn parse_hidden(spec: &str) -> Result<HiddenMode> {
    let usage = || Failure::Usage(format!("bad --hidden `{spec}`: expected onehot or proj[:dim[:seed]]"));
    let mut parts = spec.split(':');
    match parts.next() {
        Some("onehot") if parts.next().is_none() => Ok(HiddenMode::OneHot),
        Some("proj") => {
            let HiddenMode::RandomProjection { mut dim, mut seed } = HiddenMode::default() else { unreachable!() };
            if let Some(d) = parts.next() {
                dim = d.parse().map_err(|_| usage())?;
            }
            if let Some(s) = parts.next() {
                seed = s.parse().map_err(|_| usage())?;
            }
            if dim == 0 || parts.next().is_some() {
                return Err(usage().into());
            }
            Ok(HiddenMode::RandomProjection { dim, seed })
        }
        _ => Err(usage().into()),
    }
}

impl Backends {
    pub fn new(args: &BackendArgs) -> Result<Self> {
        let spec = args.backend.as_str();
        let kind = if let Some(source) = spec.strip_prefix("builtin:") {
            let hidden = parse_hidden(&args.hidden)?;
            let (model, corpus): (MarkovModel, Arc<str>) = if source == "testbed" {
                (testbed::model()?, testbed::CORPUS.into())
            } else {
                let text = std::fs::read_to_string(source).map_err(|e| Failure::Data(format!("cannot read corpus {source}: {e}")))?;
                (MarkovModel::train(&text, args.markov_order, args.add_k, TokenizerMode::Whitespace)?, text.into())
            };
            Kind::Builtin { model: Arc::new(model.with_hidden(hidden)), corpus }
        } else if let Some(cmd) = spec.strip_prefix("bridge-cmd:") {
            let argv = shell_words::split(cmd).map_err(|e| Failure::Usage(format!("bad bridge command `{cmd}`: {e}")))?;
            if argv.is_empty() {
                return Err(Failure::Usage("empty bridge command".into()).into());
            }
            Kind::BridgeCmd(argv)
        } else if let Some(addr) = spec.strip_prefix("bridge-tcp:") {
            Kind::BridgeTcp(addr.to_owned())
        } else {
            return Err(Failure::Usage(format!("unknown backend `{spec}`: expected builtin:, bridge-cmd: or bridge-tcp:")).into());
        };
        Ok(Self { kind, timeout: Duration::from_secs(args.timeout), bridge_top: args.bridge_top, descriptor: spec.to_owned() })
    }

    pub fn open(&self) -> Result<Session> {
        let wire = |w: WireBackend| -> Session {
            match self.bridge_top {
                Some(top) => Box::new(w.with_min_top(top)),
                None => Box::new(w),
            }
        };
        Ok(match &self.kind {
            Kind::Builtin { model, .. } => Box::new(MarkovBackend::new(model.clone())),
            Kind::BridgeCmd(argv) => wire(WireBackend::spawn(argv, self.timeout).context("starting bridge")?),
            Kind::BridgeTcp(addr) => wire(WireBackend::connect(addr, self.timeout).context("connecting to bridge")?),
        })
    }

    /// A built-in backend's model, for serving.
    pub fn builtin(&self) -> Option<&Arc<MarkovModel>> {
        match &self.kind {
            Kind::Builtin { model, .. } => Some(model),
            _ => None,
        }
    }

    /// Training text of a built-in backend.
    pub fn corpus(&self) -> Option<&str> {
        match &self.kind {
            Kind::Builtin { corpus, .. } => Some(corpus),
            _ => None,
        }
    }

    pub fn info(&self, session: &Session) -> BackendInfo {
        BackendInfo {
            descriptor: self.descriptor.clone(),
            vocab_size: session.vocab_size(),
            supports_hidden: session.supports_hidden(),
            hidden_dim: session.hidden_dim(),
            eos: session.eos().map(|t| t.id()),
        }
    }
}
