use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

/// One row of a check table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub suite: String,
    pub check: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Verdict {
    pub fn new(suite: &str, check: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Verdict {
            suite: suite.into(),
            check: check.into(),
            status,
            value: None,
            tolerance: None,
            detail: detail.into(),
        }
    }

    /// Passes when `value <= tolerance`.
    pub fn bound(suite: &str, check: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let ok = value <= tolerance;
        Verdict {
            suite: suite.into(),
            check: check.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            value: Some(value),
            tolerance: Some(tolerance),
            detail: format!("{value:.3e} {} {tolerance:.1e}", if ok { "<=" } else { ">" }),
        }
    }

    pub fn skip(suite: &str, check: impl Into<String>, why: impl Into<String>) -> Self {
        Verdict::new(suite, check, Status::Skip, why)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
    pub verdicts: Vec<Verdict>,
    #[serde(default)]
    pub cached: bool,
}

impl RunManifest {
    pub fn file_name(subcommand: &str) -> String {
        format!("{subcommand}.manifest.json")
    }

    pub fn path(&self, dir: &Path) -> PathBuf {
        dir.join(Self::file_name(&self.subcommand))
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let p = self.path(dir);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&p, text)?;
        Ok(p)
    }

    pub fn read(path: &Path) -> Option<RunManifest> {
        let text = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == Status::Fail)
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let w = self.verdicts.iter().map(|v| v.suite.len() + v.check.len() + 1).max().unwrap_or(10);
        let mut out = String::new();
        for v in &self.verdicts {
            let name = format!("{}/{}", v.suite, v.check);
            out.push_str(&format!("{:<4}  {name:<w$}  {}\n", v.status, v.detail));
        }
        let count = |s| self.verdicts.iter().filter(|v| v.status == s).count();
        out.push_str(&format!(
            "{} passed, {} failed, {} skipped\n",
            count(Status::Pass),
            count(Status::Fail),
            count(Status::Skip)
        ));
        out
    }
}

/// Collects output files for one run; each name may be written once.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    names: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            names: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        assert!(!self.names.iter().any(|n| n == name), "output {name} written twice");
        std::fs::write(self.dir.join(name), contents)?;
        self.names.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn into_names(self) -> Vec<String> {
        self.names
    }
}
