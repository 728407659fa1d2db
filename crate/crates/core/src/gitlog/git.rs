use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::{LogFormat, RepoRef};

#[derive(Debug, Error)]
pub enum GitError {
    #[error("git executable not found on PATH")]
    ToolMissing,
    #[error("repository {repo} is unavailable: {reason}")]
    Unavailable { repo: String, reason: String },
    #[error("git timed out after {0:?}")]
    Timeout(Duration),
    #[error("{0} is not a git repository")]
    NotARepository(PathBuf),
    #[error("git {command} failed: {stderr}")]
    Failed { command: String, stderr: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

struct Output {
    success: bool,
    stdout: Vec<u8>,
    stderr: String,
}

fn git() -> Command {
    let mut cmd = Command::new("git");
    cmd.env("GIT_TERMINAL_PROMPT", "0")
        .env("GIT_ASKPASS", "")
        .env("GCM_INTERACTIVE", "never")
        .stdin(Stdio::null());
    cmd
}

fn spawn(cmd: &mut Command) -> Result<Child, GitError> {
    cmd.stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => GitError::ToolMissing,
            _ => GitError::Io(e),
        })
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        buf
    })
}

/// Runs git, killing it once `timeout` elapses.
fn run(cmd: &mut Command, timeout: Option<Duration>) -> Result<Output, GitError> {
    let mut child = spawn(cmd)?;
    let stdout = drain(child.stdout.take());
    let stderr = drain(child.stderr.take());
    let started = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if let Some(limit) = timeout {
            if started.elapsed() >= limit {
                let _ = child.kill();
                let _ = child.wait();
                return Err(GitError::Timeout(limit));
            }
        }
        thread::sleep(Duration::from_millis(10));
    };
    Ok(Output {
        success: status.success(),
        stdout: stdout.join().unwrap_or_default(),
        stderr: String::from_utf8_lossy(&stderr.join().unwrap_or_default())
            .trim()
            .to_owned(),
    })
}

/// Clones only the history metadata of `repo` into `workdir/<id>.git`.
///
/// The clone is bare, single-branch, tagless and blob-less where the remote
/// supports partial clone; an existing directory at the destination is
/// replaced.
pub fn clone_repository(
    repo: &RepoRef,
    workdir: &Path,
    timeout: Duration,
) -> Result<PathBuf, GitError> {
    std::fs::create_dir_all(workdir)?;
    let dest = workdir.join(format!("{}.git", repo.id));
    if dest.exists() {
        std::fs::remove_dir_all(&dest)?;
    }
    let mut cmd = git();
    cmd.args(["clone", "--bare", "--single-branch", "--no-tags", "--quiet"]);
    if !Path::new(&repo.source).exists() {
        cmd.arg("--filter=blob:none");
    }
    cmd.arg("--").arg(&repo.source).arg(&dest);
    let out = match run(&mut cmd, Some(timeout)) {
        Ok(out) => out,
        Err(e) => {
            let _ = std::fs::remove_dir_all(&dest);
            return Err(e);
        }
    };
    if !out.success {
        let _ = std::fs::remove_dir_all(&dest);
        return Err(GitError::Unavailable {
            repo: repo.id.clone(),
            reason: first_line(&out.stderr),
        });
    }
    Ok(dest)
}

fn first_line(s: &str) -> String {
    s.lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("clone failed")
        .trim()
        .to_owned()
}

/// Exports the comma-separated log of everything reachable from HEAD.
pub fn generate_log(local_repo: &Path) -> Result<String, GitError> {
    generate_log_with(local_repo, LogFormat::Comma)
}

pub fn generate_log_with(local_repo: &Path, format: LogFormat) -> Result<String, GitError> {
    let probe = run(
        git().arg("-C").arg(local_repo).args(["rev-parse", "--git-dir"]),
        None,
    )?;
    if !probe.success || !local_repo.exists() {
        return Err(GitError::NotARepository(local_repo.to_path_buf()));
    }
    let head = run(
        git()
            .arg("-C")
            .arg(local_repo)
            .args(["rev-parse", "--verify", "--quiet", "HEAD^{commit}"]),
        None,
    )?;
    if !head.success {
        // Unborn branch: no commits yet.
        return Ok(String::new());
    }
    let pretty = format!("--pretty={}", format.pretty_format());
    let out = run(
        git()
            .arg("-C")
            .arg(local_repo)
            .args(["-c", "log.showSignature=false", "log", "--no-color", "--encoding=UTF-8"])
            .arg(pretty)
            .arg("HEAD"),
        None,
    )?;
    if !out.success {
        return Err(GitError::Failed {
            command: "log".into(),
            stderr: out.stderr,
        });
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}
