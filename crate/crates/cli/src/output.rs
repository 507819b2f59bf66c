use std::io::Write;
use std::path::Path;

use anyhow::Context;
use qkdlc_core::Error;

/// Why a command stopped, mapped onto the exit-code taxonomy.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Degenerate(anyhow::Error),
    /// Output was produced but a statistical check failed.
    Statistical,
    Io(anyhow::Error),
    /// Already printed (clap); exit with this code.
    Reported(u8),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Degenerate(_) => 3,
            Failure::Statistical => 4,
            Failure::Io(_) => 1,
            Failure::Reported(c) => *c,
        }
    }

    pub fn message(&self) -> Option<&anyhow::Error> {
        match self {
            Failure::Usage(e) | Failure::Degenerate(e) | Failure::Io(e) => Some(e),
            Failure::Statistical | Failure::Reported(_) => None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Degenerate(_) => Failure::Degenerate(e.into()),
            Error::Domain { .. } | Error::InvalidInput(_) => Failure::Usage(e.into()),
        }
    }
}

pub fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow::anyhow!("{msg}"))
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let attempt = || -> anyhow::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)
            .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    };
    attempt().map_err(Failure::Io)
}

/// Writes to `path`, or to stdout when none is given.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Io(e.into()))
        }
    }
}

pub fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Usage)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.into()))?;
    s.push('\n');
    Ok(s)
}
