//! Run manifest and artifact writers.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use paultrap_core::trapcore::{TimeGrid, TrapConfig};
use serde::{Serialize, Serializer};

pub const FORMAT_VERSION: u32 = 1;

/// Float that serializes non-finite values as strings, since JSON has no
/// literal for them. Negative zero is written as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_finite() {
            s.serialize_f64(x + 0.0)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrapSection {
    pub mass: Num,
    pub charge: Num,
    pub gap_r: Num,
    #[serde(rename = "U_bar")]
    pub u_bar: Num,
    #[serde(rename = "V_bar")]
    pub v_bar: Num,
    pub omega: Num,
    pub hbar: Num,
    pub axis: String,
    #[serde(rename = "U")]
    pub u: Num,
    #[serde(rename = "V")]
    pub v: Num,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSection {
    pub t_start: Num,
    pub t_end: Num,
    pub steps: usize,
    pub dt: Num,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySection {
    pub u_range: [Num; 2],
    pub v_range: [Num; 2],
    pub resolution: [usize; 2],
    pub steps_per_period: usize,
}

/// Everything that determines a run's output, resolved before any computation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub trap: TrapSection,
    pub grid: GridSection,
    pub x0: Num,
    pub v0: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_b: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub delta_a: Vec<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_t: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_start: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_end: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySection>,
    pub out: String,
}

impl RunManifest {
    pub fn new(
        command: &'static str,
        config: &TrapConfig<f64>,
        grid: &TimeGrid<f64>,
        (x0, v0): (f64, f64),
        out: &Path,
    ) -> Self {
        let raw = config.raw();
        Self {
            command,
            trap: TrapSection {
                mass: Num(raw.mass),
                charge: Num(raw.charge),
                gap_r: Num(raw.gap_r),
                u_bar: Num(raw.u_bar),
                v_bar: Num(raw.v_bar),
                omega: Num(raw.omega),
                hbar: Num(raw.hbar),
                axis: raw.axis.to_string(),
                u: Num(config.u()),
                v: Num(config.v()),
            },
            grid: GridSection {
                t_start: Num(grid.start()),
                t_end: Num(grid.end()),
                steps: grid.steps(),
                dt: Num(grid.dt()),
            },
            x0: Num(x0),
            v0: Num(v0),
            record: None,
            record_b: None,
            delta_a: Vec::new(),
            duration_t: None,
            source: None,
            oracle: None,
            q_start: None,
            q_end: None,
            stability: None,
            out: out.display().to_string(),
        }
    }

    fn json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}

/// JSON artifact: `{format_version, manifest, ...body}`.
#[derive(Serialize)]
struct Envelope<'a, B: Serialize> {
    format_version: u32,
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: B,
}

pub struct ArtifactDir {
    root: PathBuf,
}

impl ArtifactDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// CSV with the manifest as leading `#` lines.
    pub fn write_csv(
        &self,
        name: &str,
        manifest: &RunManifest,
        body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
    ) -> io::Result<PathBuf> {
        let path = self.path(name);
        let mut out = BufWriter::new(fs::File::create(&path)?);
        writeln!(out, "# format_version={FORMAT_VERSION}")?;
        writeln!(out, "# manifest={}", manifest.json())?;
        body(&mut out)?;
        out.flush()?;
        Ok(path)
    }

    pub fn write_json<B: Serialize>(
        &self,
        name: &str,
        manifest: &RunManifest,
        body: B,
    ) -> io::Result<PathBuf> {
        let path = self.path(name);
        let envelope = Envelope {
            format_version: FORMAT_VERSION,
            manifest,
            body,
        };
        let mut text = serde_json::to_string_pretty(&envelope).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
