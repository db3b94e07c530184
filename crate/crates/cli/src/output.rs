use std::fs;
use std::path::{Path, PathBuf};

use parabolic::rational_map::MapFile;
use parabolic::report::{Artifact, LinePlot, Provenance, VERSION};
use parabolic::Error;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Parse,
    Numeric,
    Precondition,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
    pub details: Option<Value>,
}

impl Failure {
    pub fn parse(message: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Parse,
            message: message.into(),
            details: None,
        }
    }

    pub fn precondition(message: impl Into<String>, details: Option<Value>) -> Self {
        Self {
            kind: FailureKind::Precondition,
            message: message.into(),
            details,
        }
    }

    pub fn from_core(e: Error) -> Self {
        let kind = match e {
            Error::NotParabolic { .. } => FailureKind::Precondition,
            Error::Parse(_) | Error::Json(_) | Error::InvalidMap(_) | Error::InvalidArgument(_) => {
                FailureKind::Parse
            }
            _ => FailureKind::Numeric,
        };
        Self {
            kind,
            message: e.to_string(),
            details: None,
        }
    }

    /// 2 for unmet hypotheses, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self.kind {
            FailureKind::Precondition => 2,
            FailureKind::Parse | FailureKind::Numeric => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let body = json!({
            "status": "error",
            "kind": self.kind,
            "exit_code": self.exit_code(),
            "message": self.message,
            "details": self.details,
            "tool": "parabolic",
            "version": VERSION,
        });
        serde_json::to_string_pretty(&body).expect("error body serializes")
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from_core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            kind: FailureKind::Numeric,
            message: format!("i/o error: {e}"),
            details: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MapSource {
    pub example: Option<String>,
    pub file: Option<String>,
    pub coefficients: MapFile,
}

/// The fully resolved configuration of a run; output paths are left out so
/// that artifacts do not depend on where they are written.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub map: Option<MapSource>,
    pub potential: Option<String>,
    pub params: Value,
}

pub struct Emitter {
    out: Option<PathBuf>,
    provenance: Provenance<RunConfig>,
    written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(command: &str, seed: Option<u64>, config: RunConfig, out: Option<&Path>) -> Result<Self, Failure> {
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
        }
        Ok(Self {
            out: out.map(Path::to_path_buf),
            provenance: Provenance::new(command, seed, config),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        if let Some(dir) = &self.out {
            let path = dir.join(name);
            fs::write(&path, contents)?;
            self.written.push(path);
        }
        Ok(())
    }

    /// Prints the JSON report and, with an output directory, writes it too.
    pub fn report<R: Serialize>(&mut self, stem: &str, result: &R) -> Result<(), Failure> {
        let json = Artifact::new(&self.provenance, result).to_json();
        print!("{json}");
        self.write(&format!("{stem}.json"), &json)
    }

    /// CSV with a leading `# {provenance}` comment line.
    pub fn csv(&mut self, stem: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Failure {
            kind: FailureKind::Numeric,
            message: format!("csv: {e}"),
            details: None,
        };
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| Failure::parse(e.to_string()))?)
            .expect("csv output is utf-8");
        let text = format!("# {}\n{body}", self.provenance.to_line());
        self.write(&format!("{stem}.csv"), &text)
    }

    pub fn svg(&mut self, stem: &str, mut plot: LinePlot) -> Result<(), Failure> {
        plot.description = Some(self.provenance.to_line());
        self.write(&format!("{stem}.svg"), &plot.to_svg())
    }

    pub fn finish(self) {
        for p in &self.written {
            eprintln!("wrote {}", p.display());
        }
    }
}

/// Shortest round-trip form; empty for missing values.
pub fn fmt_num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_nan() => String::new(),
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}
