//! `fsd serve`: exposes a built-in backend over the wire protocol.

use std::io::{self, BufReader};
use std::net::TcpListener;
use std::thread;

use anyhow::Result;
use fsd_core::backends::serve;
use fsd_core::MarkovBackend;

use crate::args::{ServeArgs, ServeMode};
use crate::backend::Backends;
use crate::exit::Failure;

pub fn cmd(args: ServeArgs) -> Result<u8> {
    let backends = Backends::new(&args.backend)?;
    let model = backends.builtin().ok_or_else(|| Failure::Usage("serve needs a builtin: backend".into()))?.clone();
    match args.mode {
        ServeMode::Stdio => {
            serve(&mut MarkovBackend::new(model), io::stdin().lock(), io::stdout().lock())?;
        }
        ServeMode::Tcp => {
            let listener = TcpListener::bind((args.host.as_str(), args.port))?;
            eprintln!("listening on {}", listener.local_addr()?);
            for stream in listener.incoming() {
                let stream = stream?;
                let mut backend = MarkovBackend::new(model.clone());
                thread::spawn(move || {
                    let _ = stream.set_nodelay(true);
                    let outcome = stream.try_clone().map_err(fsd_core::Error::from).and_then(|r| serve(&mut backend, BufReader::new(r), stream));
                    if let Err(e) = outcome {
                        eprintln!("fsd serve: connection closed: {e}");
                    }
                });
            }
        }
    }
    Ok(0)
}
