//! Run manifests: everything needed to reproduce a command's outputs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qqr_core::datasets::{self, GridSpec, Neighborhood};
use qqr_core::{parse_classification, BoundsMode, ClassificationMatrix, DataFormat, QqrResult, Restriction, SolverSettings};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Table1,
    Table2,
    Imaging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl From<Format> for DataFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => DataFormat::Csv,
            Format::Json => DataFormat::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Dataset {
        name: Dataset,
        #[serde(skip_serializing_if = "Option::is_none")]
        grid: Option<GridSpec>,
    },
    File { path: PathBuf, format: Format },
}

impl InputSource {
    pub fn load(&self) -> Result<ClassificationMatrix> {
        match self {
            InputSource::Dataset { name, grid } => Ok(match name {
                Dataset::Table1 => datasets::table1(),
                Dataset::Table2 => datasets::table2(),
                Dataset::Imaging => datasets::imaging(&grid.unwrap_or_default())?,
            }),
            InputSource::File { path, format } => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                parse_classification(&text, (*format).into())
                    .with_context(|| format!("parsing {}", path.display()))
            }
        }
    }
}

/// Format implied by a file extension, CSV unless it ends in `.json`.
pub fn format_for(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Csv,
    })
}

pub fn grid_spec(elevations: usize, azimuths: usize, no_wrap: bool, eight: bool) -> GridSpec {
    GridSpec {
        elevations,
        azimuths,
        wrap_azimuth: !no_wrap,
        neighborhood: if eight { Neighborhood::Eight } else { Neighborhood::Four },
    }
}

/// Solver fields that were set on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SettingsOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

impl SettingsOverrides {
    pub fn apply(&self, verbose: bool) -> SolverSettings {
        let mut s = SolverSettings::default();
        if let Some(v) = self.eps_abs {
            s.eps_abs = v;
        }
        if let Some(v) = self.eps_rel {
            s.eps_rel = v;
        }
        if let Some(v) = self.max_iter {
            s.max_iter = v;
        }
        s.verbose = verbose;
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub input: InputSource,
    pub bounds: BoundsMode,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<(f64, f64)>,
    pub allow_degenerate: bool,
    pub settings: SettingsOverrides,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Written as `result.json`: the result fields plus the manifest that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    #[serde(flatten)]
    pub result: QqrResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

pub fn read_result(path: &Path) -> Result<QqrResult> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ResultFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if file.result.n() == 0 {
        bail!("{} holds an empty result", path.display());
    }
    if file.result.w.n() != file.result.n() {
        bail!(
            "{}: W is {}x{} but there are {} labels",
            path.display(),
            file.result.w.n(),
            file.result.w.n(),
            file.result.n()
        );
    }
    Ok(file.result)
}

pub fn parse_restriction(s: &str) -> Result<Restriction, String> {
    match s {
        "sum" => Ok(Restriction::SumEqualsR),
        "none" => Ok(Restriction::NoRestriction),
        _ => Err(format!("expected `sum` or `none`, got `{s}`")),
    }
}

pub fn parse_bracket(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower end `{lo}`: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper end `{hi}`: {e}"))?;
    Ok((lo, hi))
}
