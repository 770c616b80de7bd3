use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

#[derive(Debug)]
pub enum CliError {
    /// Rejected input or flags; exit 2.
    Usage(String),
    /// Failure while running; exit 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

/// Global flags shared by every subcommand.
#[derive(Debug)]
pub struct Ctx {
    pub seed: u64,
    pub verbose: bool,
    pub out: Option<PathBuf>,
}

impl Ctx {
    pub fn log(&self, msg: impl std::fmt::Display) {
        if self.verbose {
            eprintln!("{msg}");
        }
    }

    /// Writes `bytes` to `--out` or standard output.
    pub fn emit(&self, bytes: &[u8]) -> CliResult {
        match &self.out {
            Some(p) => write_file(p, bytes),
            None => {
                let mut w = io::stdout().lock();
                w.write_all(bytes)?;
                w.flush()?;
                Ok(())
            }
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(f);
    w.write_all(bytes).and_then(|_| w.flush()).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Reads a file, or standard input for `-`.
pub fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    if path == Path::new("-") {
        io::stdin().lock().read_to_end(&mut buf)?;
    } else {
        File::open(path).and_then(|mut f| f.read_to_end(&mut buf)).with_context(|| format!("cannot read {}", path.display()))?;
    }
    Ok(buf)
}
