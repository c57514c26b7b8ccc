//! Objective served by a child process over line-delimited JSON.
//!
//! For every evaluation the parent writes `{"x": [..]}` (original units) on
//! the child's stdin and expects one `{"y": <number>}` line on its stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bo::{Bounds, Objective};
use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

#[derive(Serialize)]
struct Request<'a> {
    x: &'a [f64],
}

#[derive(Deserialize)]
struct Reply {
    y: f64,
}

pub struct ExternalObjective {
    command: String,
    bounds: Bounds,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    f_star: Option<f64>,
}

impl ExternalObjective {
    /// Starts `command` through `sh -c`. The child lives as long as this value.
    pub fn spawn(command: &str, bounds: Bounds, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Protocol(format!("cannot spawn {command:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            command: command.to_string(),
            bounds,
            child,
            stdin,
            lines: rx,
            timeout,
            f_star: None,
        })
    }

    /// Declares the known optimum so regret can be reported.
    pub fn with_optimum(mut self, f_star: Option<f64>) -> Self {
        self.f_star = f_star;
        self
    }

    fn exit_note(&mut self) -> String {
        match self.child.try_wait() {
            Ok(Some(status)) => format!("child {:?} exited ({status})", self.command),
            _ => format!("child {:?} closed its output", self.command),
        }
    }

    /// One protocol round trip at `x`, given in original units.
    pub fn evaluate_original(&mut self, x: &[f64]) -> Result<f64> {
        let request = serde_json::to_string(&Request { x })?;
        let sent = match self.stdin.as_mut() {
            Some(stdin) => writeln!(stdin, "{request}").and_then(|_| stdin.flush()),
            None => Err(std::io::ErrorKind::BrokenPipe.into()),
        };
        if let Err(e) = sent {
            let note = self.exit_note();
            return Err(Error::Protocol(format!("{note}; write failed: {e}")));
        }
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(Error::Protocol(format!("reading from {:?}: {e}", self.command))),
            Err(RecvTimeoutError::Timeout) => return Err(Error::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                // give the child a moment to be reaped so the status is informative
                thread::sleep(Duration::from_millis(20));
                return Err(Error::Protocol(self.exit_note()));
            }
        };
        let reply: Reply = serde_json::from_str(line.trim())
            .map_err(|e| Error::Protocol(format!("malformed reply line {line:?}: {e}")))?;
        if !reply.y.is_finite() {
            return Err(Error::Protocol(format!("non-finite y in reply line {line:?}")));
        }
        Ok(reply.y)
    }
}

impl Objective for ExternalObjective {
    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn evaluate(&mut self, unit_x: &[f64]) -> Result<f64> {
        let x = self.bounds.to_original(unit_x);
        self.evaluate_original(&x)
    }

    fn known_optimum(&self) -> Option<f64> {
        self.f_star
    }
}

impl Drop for ExternalObjective {
    fn drop(&mut self) {
        // Closing stdin lets well-behaved children exit on their own.
        self.stdin.take();
        if let Ok(None) = self.child.try_wait() {
            thread::sleep(Duration::from_millis(5));
            if let Ok(None) = self.child.try_wait() {
                let _ = self.child.kill();
            }
        }
        let _ = self.child.wait();
    }
}
