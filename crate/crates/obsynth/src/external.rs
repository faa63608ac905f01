//! External SAT solvers driven through DIMACS files.

use std::io::{BufWriter, Read};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use obsynth_core::synth::{BackendError, SatBackend};
use obsynth_core::{Budget, Cnf, SolveResult};

use crate::dimacs::{check_external_result, write_dimacs};

/// Environment variable holding the default solver command template.
pub const SOLVER_ENV: &str = "OBSYNTH_SOLVER";

/// A solver invoked as `sh -c <template>`, with `{input}` replaced by the
/// path of a DIMACS file. The result is read from standard output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalSolver {
    pub template: String,
}

impl ExternalSolver {
    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
        }
    }

    /// The template named by [`SOLVER_ENV`], if set and nonempty.
    pub fn from_env() -> Option<Self> {
        std::env::var(SOLVER_ENV)
            .ok()
            .filter(|t| !t.trim().is_empty())
            .map(Self::new)
    }

    fn command_line(&self, input: &str) -> String {
        let quoted = format!("'{}'", input.replace('\'', r"'\''"));
        if self.template.contains("{input}") {
            self.template.replace("{input}", &quoted)
        } else {
            format!("{} {quoted}", self.template)
        }
    }
}

impl SatBackend for ExternalSolver {
    fn solve(&mut self, f: &Cnf, budget: Budget<'_>) -> Result<(SolveResult, u64), BackendError> {
        let io = |e: std::io::Error| BackendError::Failed(e.to_string());
        let file = tempfile::Builder::new()
            .prefix("obsynth-")
            .suffix(".cnf")
            .tempfile()
            .map_err(io)?;
        write_dimacs(f, BufWriter::new(file.as_file())).map_err(io)?;
        let path = file.path().to_string_lossy().into_owned();
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(self.command_line(&path))
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(io)?;
        let mut stdout = child.stdout.take().expect("piped");
        let mut stderr = child.stderr.take().expect("piped");
        let reader = thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let err_reader = thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });
        let status = loop {
            if let Some(st) = child.try_wait().map_err(io)? {
                break st;
            }
            if budget.interrupt.is_some_and(|stop| stop()) {
                let _ = child.kill();
                let _ = child.wait();
                return Err(BackendError::Exhausted { conflicts: 0 });
            }
            thread::sleep(Duration::from_millis(5));
        };
        let out = reader
            .join()
            .map_err(|_| BackendError::Failed("reader thread panicked".into()))?
            .map_err(io)?;
        let err = err_reader.join().unwrap_or_default();
        match check_external_result(&out, f) {
            Ok(r) => Ok((r, 0)),
            Err(e) => Err(BackendError::Failed(format!(
                "{e} (exit status {status}){}",
                err.lines().next().map(|l| format!(": {l}")).unwrap_or_default()
            ))),
        }
    }
}
