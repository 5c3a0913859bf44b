//! Objectives evaluated by an external command.

use std::io::Read;
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use bomi::{Domain, Objective, ObjectiveError};

/// Runs a command per evaluation and parses one number from its stdout.
///
/// The template is split on whitespace. A `{x}` token is replaced by the
/// coordinates as separate arguments; without one, the coordinates are
/// appended.
#[derive(Debug, Clone)]
pub struct ExternalObjective {
    template: Vec<String>,
    domain: Domain,
    timeout: Duration,
}

impl ExternalObjective {
    pub fn new(command: &str, domain: Domain, timeout: Duration) -> Self {
        Self {
            template: command.split_whitespace().map(str::to_string).collect(),
            domain,
            timeout,
        }
    }

    fn argv(&self, x: &[f64]) -> Vec<String> {
        let coords = x.iter().map(|v| v.to_string());
        if self.template.iter().any(|t| t == "{x}") {
            let mut out = Vec::new();
            for t in &self.template {
                if t == "{x}" {
                    out.extend(coords.clone());
                } else {
                    out.push(t.clone());
                }
            }
            out
        } else {
            self.template.iter().cloned().chain(coords).collect()
        }
    }
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = String::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_string(&mut buf);
        }
        buf
    })
}

fn wait_with_timeout(child: &mut Child, timeout: Duration) -> Result<std::process::ExitStatus, ObjectiveError> {
    let start = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(status)) => return Ok(status),
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ObjectiveError(format!("timed out after {:.1}s", timeout.as_secs_f64())));
            }
            Ok(None) => thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(ObjectiveError(format!("wait failed: {e}"))),
        }
    }
}

impl Objective for ExternalObjective {
    fn name(&self) -> &str {
        &self.template[0]
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        let argv = self.argv(x);
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| ObjectiveError(format!("cannot start {:?}: {e}", argv[0])))?;
        let out = drain(child.stdout.take());
        let err = drain(child.stderr.take());
        let status = wait_with_timeout(&mut child, self.timeout)?;
        let stdout = out.join().unwrap_or_default();
        let stderr = err.join().unwrap_or_default();
        if !status.success() {
            return Err(ObjectiveError(format!(
                "{:?} exited with {status}; stdout: {:?}; stderr: {:?}",
                argv[0],
                stdout.trim(),
                stderr.trim()
            )));
        }
        stdout
            .trim()
            .parse::<f64>()
            .map_err(|_| ObjectiveError(format!("cannot parse {:?} as a number", stdout.trim())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(cmd: &str) -> ExternalObjective {
        ExternalObjective::new(cmd, Domain::unit(2), Duration::from_secs(5))
    }

    #[test]
    fn constant_command() {
        assert_eq!(obj("echo 1.0 {x}").argv(&[0.5, 0.25]), ["echo", "1.0", "0.5", "0.25"]);
        assert_eq!(obj("sh -c {x}").argv(&[1.0]), ["sh", "-c", "1"]);
        assert_eq!(obj("printf 0.5\\n").evaluate(&[0.1, 0.2]).unwrap(), 0.5);
        assert_eq!(obj("sh -c \"echo\"").name(), "sh");
    }

    #[test]
    fn trailing_newline_and_failures() {
        let echo = ExternalObjective::new("sh -c {x}", Domain::unit(1), Duration::from_secs(5));
        // the single coordinate becomes the script; "1" exits 127 (command not found)
        assert!(echo.evaluate(&[1.0]).is_err());
        let o = obj("false");
        let e = o.evaluate(&[0.0, 0.0]).unwrap_err();
        assert!(e.0.contains("exited"), "{e}");
        assert!(obj("echo hello").evaluate(&[0.0, 0.0]).is_err());
        assert!(obj("no-such-binary-xyz").evaluate(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn timeout_kills_the_child() {
        let o = ExternalObjective::new("sleep 5", Domain::unit(1), Duration::from_millis(100));
        let start = Instant::now();
        let e = o.evaluate(&[0.0]).unwrap_err();
        assert!(e.0.contains("timed out"));
        assert!(start.elapsed() < Duration::from_secs(3));
    }
}
