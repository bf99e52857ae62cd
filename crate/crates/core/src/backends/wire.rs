//! Newline-delimited JSON protocol for out-of-process backends.
//!
//! One request per line, one response per line:
//!
//! ```text
//! {"t":"hello","proto":1}            -> {"t":"hello","vocab_size":V,"supports_hidden":b,"eos":id|null}
//! {"t":"encode","text":"..."}        -> {"t":"tokens","ids":[...]}
//! {"t":"next","ids":[...],"top":M,"want_hidden":b,"want_prompt_hidden":b}
//!                                    -> {"t":"dist","top":[[id,p],...],"full":b,"hidden":[...]|null,"prompt_hidden":[[...],...]|null}
//! {"t":"decode","ids":[...]}         -> {"t":"text","text":"..."}
//! any failure                        -> {"t":"err","code":"...","msg":"..."}
//! ```
//!
//! The client treats any unparseable or schema-violating line as fatal for
//! the session.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{LogitProvider, NextRequest};
use crate::dist::NextTokenDist;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::token::Token;

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum Request {
    Hello {
        proto: u32,
    },
    Encode {
        text: String,
    },
    Next {
        ids: Vec<u32>,
        top: usize,
        #[serde(default)]
        want_hidden: bool,
        #[serde(default)]
        want_prompt_hidden: bool,
    },
    Decode {
        ids: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum Response {
    Hello {
        vocab_size: usize,
        supports_hidden: bool,
        eos: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hidden_dim: Option<usize>,
    },
    Tokens {
        ids: Vec<u32>,
    },
    Dist {
        top: Vec<(u32, f64)>,
        full: bool,
        hidden: Option<Vec<f64>>,
        prompt_hidden: Option<Vec<Vec<f64>>>,
    },
    Text {
        text: String,
    },
    Err {
        code: String,
        msg: String,
    },
}

impl Response {
    fn kind(&self) -> &'static str {
        match self {
            Response::Hello { .. } => "hello",
            Response::Tokens { .. } => "tokens",
            Response::Dist { .. } => "dist",
            Response::Text { .. } => "text",
            Response::Err { .. } => "err",
        }
    }

    fn error(code: &str, msg: impl ToString) -> Self {
        Response::Err { code: code.to_owned(), msg: msg.to_string() }
    }
}

/// What the server advertised in its hello.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServerInfo {
    pub vocab_size: usize,
    pub supports_hidden: bool,
    pub eos: Option<Token>,
    pub hidden_dim: Option<usize>,
}

/// Client side of the protocol, over a child's stdio or a TCP socket.
pub struct WireBackend {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    child: Option<Child>,
    timeout: Duration,
    info: ServerInfo,
    min_top: usize,
    hidden_dim: Option<usize>,
    broken: Option<String>,
}

impl std::fmt::Debug for WireBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WireBackend").field("info", &self.info).field("broken", &self.broken).finish()
    }
}

impl WireBackend {
    /// Spawns `argv` and speaks the protocol over its stdin/stdout.
    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self> {
        let (program, args) = argv.split_first().ok_or_else(|| Error::Argument("empty bridge command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::backend("spawn", format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut backend = Self::handshake(Box::new(stdin), stdout, timeout);
        if let Ok(b) = &mut backend {
            b.child = Some(child);
        } else {
            let _ = child.kill();
            let _ = child.wait();
        }
        backend
    }

    /// Connects to a server listening on `addr`.
    pub fn connect(addr: &str, timeout: Duration) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(|e| Error::backend("connect", format!("{addr}: {e}")))?;
        let _ = stream.set_nodelay(true);
        let reader = stream.try_clone()?;
        Self::handshake(Box::new(stream), reader, timeout)
    }

    /// Runs the hello exchange over arbitrary streams.
    pub fn from_streams(reader: impl Read + Send + 'static, writer: impl Write + Send + 'static, timeout: Duration) -> Result<Self> {
        Self::handshake(Box::new(writer), reader, timeout)
    }

    fn handshake(writer: Box<dyn Write + Send>, reader: impl Read + Send + 'static, timeout: Duration) -> Result<Self> {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut backend = WireBackend {
            writer,
            lines: rx,
            child: None,
            timeout,
            info: ServerInfo { vocab_size: 0, supports_hidden: false, eos: None, hidden_dim: None },
            min_top: 0,
            hidden_dim: None,
            broken: None,
        };
        match backend.call(&Request::Hello { proto: PROTOCOL_VERSION })? {
            Response::Hello { vocab_size, supports_hidden, eos, hidden_dim } => {
                if vocab_size == 0 {
                    return Err(backend.fail("hello advertised an empty vocabulary"));
                }
                backend.info = ServerInfo { vocab_size, supports_hidden, eos: eos.map(Token), hidden_dim };
                backend.hidden_dim = hidden_dim;
                Ok(backend)
            }
            other => Err(backend.unexpected("hello", &other)),
        }
    }

    /// Always request at least `top` entries (needed for nucleus sampling
    /// over a truncated distribution).
    pub fn with_min_top(mut self, top: usize) -> Self {
        self.min_top = top;
        self
    }

    pub fn info(&self) -> ServerInfo {
        self.info
    }

    fn fail(&mut self, msg: impl Into<String>) -> Error {
        let msg = msg.into();
        self.broken = Some(msg.clone());
        Error::Protocol(msg)
    }

    fn unexpected(&mut self, wanted: &str, got: &Response) -> Error {
        if let Response::Err { code, msg } = got {
            return Error::backend(code.clone(), msg.clone());
        }
        self.fail(format!("expected `{wanted}` response, got `{}`", got.kind()))
    }

    /// Sends one request and reads one response line.
    pub fn call(&mut self, request: &Request) -> Result<Response> {
        if let Some(reason) = &self.broken {
            return Err(Error::Protocol(format!("session aborted earlier: {reason}")));
        }
        let mut line = serde_json::to_string(request).expect("requests always serialize");
        line.push('\n');
        if let Err(e) = self.writer.write_all(line.as_bytes()).and_then(|_| self.writer.flush()) {
            self.broken = Some(e.to_string());
            return Err(Error::backend("io", format!("write failed: {e}")));
        }
        let reply = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => {
                self.broken = Some(e.to_string());
                return Err(Error::backend("io", format!("read failed: {e}")));
            }
            Err(RecvTimeoutError::Timeout) => {
                self.broken = Some("timeout".into());
                return Err(Error::backend("timeout", format!("no response within {:?}", self.timeout)));
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.broken = Some("connection closed".into());
                return Err(Error::backend("eof", "backend closed the connection"));
            }
        };
        serde_json::from_str(&reply).map_err(|e| self.fail(format!("malformed line `{}`: {e}", truncate(&reply, 200))))
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

impl Drop for WireBackend {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn ids_of(tokens: &[Token]) -> Vec<u32> {
    tokens.iter().map(|t| t.id()).collect()
}

impl<T: Real> LogitProvider<T> for WireBackend {
    fn vocab_size(&self) -> usize {
        self.info.vocab_size
    }

    fn supports_hidden(&self) -> bool {
        self.info.supports_hidden
    }

    fn hidden_dim(&self) -> Option<usize> {
        self.hidden_dim
    }

    fn eos(&self) -> Option<Token> {
        self.info.eos
    }

    fn next(&mut self, prefix: &[Token], request: &NextRequest) -> Result<NextTokenDist<T>> {
        let top = request.top.max(self.min_top).max(1);
        let reply = self.call(&Request::Next { ids: ids_of(prefix), top, want_hidden: request.want_hidden, want_prompt_hidden: request.want_prefix_hidden })?;
        let (entries, full, hidden, prompt_hidden) = match reply {
            Response::Dist { top, full, hidden, prompt_hidden } => (top, full, hidden, prompt_hidden),
            other => return Err(self.unexpected("dist", &other)),
        };
        let wanted = top.min(self.info.vocab_size);
        if !full && entries.len() < wanted {
            return Err(self.fail(format!("dist has {} entries, {wanted} requested", entries.len())));
        }
        let entries: Vec<(Token, T)> = entries.into_iter().map(|(id, p)| (Token(id), T::from_real(p))).collect();
        let mut dist = NextTokenDist::from_shared(entries.into(), full);
        if let Err(e) = dist.validate(Some(self.info.vocab_size)) {
            return Err(self.fail(e.to_string()));
        }
        if request.want_hidden {
            let h = match hidden {
                Some(h) => h,
                None => return Err(self.fail("hidden state requested but not sent")),
            };
            self.check_dim(h.len())?;
            dist.hidden_state = Some(h.into_iter().map(T::from_real).collect());
        }
        if request.want_prefix_hidden {
            let states = match prompt_hidden {
                Some(s) => s,
                None => return Err(self.fail("prompt hidden states requested but not sent")),
            };
            if states.len() != prefix.len() {
                return Err(self.fail(format!("{} prompt hidden states for {} ids", states.len(), prefix.len())));
            }
            for s in &states {
                self.check_dim(s.len())?;
            }
            dist.prefix_hidden = Some(states.into_iter().map(|s| s.into_iter().map(T::from_real).collect()).collect());
        }
        Ok(dist)
    }

    fn encode(&mut self, text: &str) -> Result<Vec<Token>> {
        match self.call(&Request::Encode { text: text.to_owned() })? {
            Response::Tokens { ids } => {
                if let Some(bad) = ids.iter().find(|&&id| id as usize >= self.info.vocab_size) {
                    return Err(self.fail(format!("encode returned id {bad} outside vocabulary")));
                }
                Ok(ids.into_iter().map(Token).collect())
            }
            other => Err(self.unexpected("tokens", &other)),
        }
    }

    fn decode(&mut self, ids: &[Token]) -> Result<String> {
        match self.call(&Request::Decode { ids: ids_of(ids) })? {
            Response::Text { text } => Ok(text),
            other => Err(self.unexpected("text", &other)),
        }
    }
}

impl WireBackend {
    fn check_dim(&mut self, dim: usize) -> Result<()> {
        match self.hidden_dim {
            Some(d) if d != dim => Err(self.fail(format!("hidden state of dim {dim}, session uses {d}"))),
            Some(_) => Ok(()),
            None => {
                self.hidden_dim = Some(dim);
                Ok(())
            }
        }
    }
}

/// Serves `provider` over the protocol until `reader` reaches EOF. Bad
/// requests get an `err` reply and the session continues.
pub fn serve<P, R, W>(provider: &mut P, reader: R, mut writer: W) -> Result<()>
where
    P: LogitProvider<f64> + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Request>(&line) {
            Ok(request) => answer(provider, request),
            Err(e) => Response::error("bad_request", e),
        };
        serde_json::to_writer(&mut writer, &response).map_err(io::Error::from)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}

fn answer<P: LogitProvider<f64> + ?Sized>(provider: &mut P, request: Request) -> Response {
    match request {
        Request::Hello { proto } if proto != PROTOCOL_VERSION => {
            Response::error("unsupported_proto", format!("protocol {proto} not supported, expected {PROTOCOL_VERSION}"))
        }
        Request::Hello { .. } => Response::Hello {
            vocab_size: provider.vocab_size(),
            supports_hidden: provider.supports_hidden(),
            eos: provider.eos().map(Token::id),
            hidden_dim: if provider.supports_hidden() { provider.hidden_dim() } else { None },
        },
        Request::Encode { text } => match provider.encode(&text) {
            Ok(ids) => Response::Tokens { ids: ids_of(&ids) },
            Err(e) => Response::error("encode", e),
        },
        Request::Decode { ids } => {
            let tokens: Vec<Token> = ids.into_iter().map(Token).collect();
            match provider.decode(&tokens) {
                Ok(text) => Response::Text { text },
                Err(e) => Response::error("decode", e),
            }
        }
        Request::Next { ids, top, want_hidden, want_prompt_hidden } => {
            if (want_hidden || want_prompt_hidden) && !provider.supports_hidden() {
                return Response::error("no_hidden", "backend has no hidden states");
            }
            let prefix: Vec<Token> = ids.into_iter().map(Token).collect();
            let request = NextRequest { top, want_hidden, want_prefix_hidden: want_prompt_hidden };
            match provider.next(&prefix, &request) {
                Ok(dist) => {
                    let truncated = top < dist.len();
                    Response::Dist {
                        top: dist.entries().iter().take(top).map(|&(t, p)| (t.id(), p)).collect(),
                        full: dist.full && !truncated,
                        hidden: if want_hidden { dist.hidden_state } else { None },
                        prompt_hidden: if want_prompt_hidden { dist.prefix_hidden } else { None },
                    }
                }
                Err(e) => Response::error("next", e),
            }
        }
    }
}
