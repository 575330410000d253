use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::plot::Plot;
use crate::error::Result;

/// One acceptance check of a reproduction run.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// CSV files, plots, summary lines and checks produced by a command.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub plots: Vec<(String, Plot)>,
    pub summary: Vec<String>,
    pub checks: Vec<Check>,
}

impl Artifacts {
    pub fn csv(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn plot(&mut self, name: impl Into<String>, plot: Plot) {
        self.plots.push((name.into(), plot));
    }

    pub fn line(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Artifacts) {
        self.files.extend(other.files);
        self.plots.extend(other.plots);
        self.summary.extend(other.summary);
        self.checks.extend(other.checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    /// Writes every CSV (and SVG when `plots` is set) under `dir`, echoing each
    /// path to `out`, then the summary lines and checks. A plot that cannot be
    /// rendered or written is reported on stderr and skipped.
    pub fn write(&self, dir: &Path, plots: bool, out: &mut dyn Write) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents)?;
            writeln!(out, "wrote {}", path.display())?;
            written.push(path);
        }
        if plots {
            for (name, plot) in &self.plots {
                let path = dir.join(name);
                match plot.to_svg() {
                    Some(svg) => match std::fs::write(&path, svg) {
                        Ok(()) => {
                            writeln!(out, "wrote {}", path.display())?;
                            written.push(path);
                        }
                        Err(e) => eprintln!("warning: could not write {}: {e}", path.display()),
                    },
                    None => eprintln!("warning: plot {name} has no drawable points, skipped"),
                }
            }
        }
        for line in &self.summary {
            writeln!(out, "{line}")?;
        }
        for c in &self.checks {
            writeln!(out, "{c}")?;
        }
        Ok(written)
    }
}
