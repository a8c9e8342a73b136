//! An external command used as a black-box operator: one field per line on
//! its stdin, one image per line on its stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use lipiso_core::io::{format_field_line, parse_field_line};

use crate::Failure;

pub struct ProcessOracle {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    outputs: usize,
}

impl ProcessOracle {
    pub fn spawn(cmd: &str, outputs: usize) -> Result<Self, Failure> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Failure::Input(format!("cannot start oracle {cmd:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(ProcessOracle { child, stdin, stdout, outputs })
    }

    pub fn call(&mut self, f: &[f64]) -> Result<Vec<f64>, String> {
        let stdin = self.stdin.as_mut().ok_or("oracle input is closed")?;
        writeln!(stdin, "{}", format_field_line(f)).map_err(|e| format!("writing to oracle: {e}"))?;
        stdin.flush().map_err(|e| format!("writing to oracle: {e}"))?;
        let mut line = String::new();
        let read = self.stdout.read_line(&mut line).map_err(|e| format!("reading from oracle: {e}"))?;
        if read == 0 {
            return Err("oracle closed its output".into());
        }
        parse_field_line(line.trim_end(), self.outputs).map_err(|e| e.to_string())
    }
}

impl Drop for ProcessOracle {
    fn drop(&mut self) {
        self.stdin.take();
        if self.child.wait().is_err() {
            let _ = self.child.kill();
        }
    }
}
