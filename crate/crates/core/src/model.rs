//! Classification input: objects, the class of every unordered pair, and the
//! quantification configuration.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SolverSettings;

/// Class of an unordered pair of distinct objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairClass {
    /// Interaction below the lower threshold `a`.
    Below,
    /// Interaction between the thresholds.
    Within,
    /// Interaction above the upper threshold `b`.
    Above,
    /// Unrestricted; only the range box applies.
    Free,
}

impl PairClass {
    pub const ALL: [PairClass; 4] = [
        PairClass::Below,
        PairClass::Within,
        PairClass::Above,
        PairClass::Free,
    ];

    /// On-disk code: `-1`, `0`, `1` or `f`.
    pub fn code(self) -> &'static str {
        match self {
            PairClass::Below => "-1",
            PairClass::Within => "0",
            PairClass::Above => "1",
            PairClass::Free => "f",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s.trim() {
            "-1" => Some(PairClass::Below),
            "0" => Some(PairClass::Within),
            "1" | "+1" => Some(PairClass::Above),
            "f" | "F" => Some(PairClass::Free),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PairClass::Below => "below",
            PairClass::Within => "within",
            PairClass::Above => "above",
            PairClass::Free => "free",
        }
    }

    /// Accepts a class name (any case) or an on-disk code.
    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "below" => Some(PairClass::Below),
            "within" => Some(PairClass::Within),
            "above" => Some(PairClass::Above),
            "free" => Some(PairClass::Free),
            other => Self::from_code(other),
        }
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Objective sign of a pair: −1 for Below, +1 for Above, 0 otherwise.
pub fn delta_of(c: PairClass) -> i8 {
    match c {
        PairClass::Below => -1,
        PairClass::Above => 1,
        PairClass::Within | PairClass::Free => 0,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub below: usize,
    pub within: usize,
    pub above: usize,
    pub free: usize,
}

/// `n` labelled objects and the class of each unordered pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationMatrix {
    labels: Vec<String>,
    /// Upper triangle (i < j), row by row.
    classes: Vec<PairClass>,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl ClassificationMatrix {
    /// Builds a matrix by asking `class(i, j)` for every pair with `i < j`.
    pub fn from_fn(labels: Vec<String>, mut class: impl FnMut(usize, usize) -> PairClass) -> Self {
        let n = labels.len();
        let mut classes = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                classes.push(class(i, j));
            }
        }
        Self { labels, classes }
    }

    /// Builds a matrix from lower-triangle integer codes (`rows[i][j]`, `j < i`).
    pub fn from_lower_codes(labels: &[&str], rows: &[&[i8]]) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: rows.len(),
            });
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != i {
                return Err(Error::Parse {
                    row: i + 1,
                    col: r.len(),
                    msg: format!("expected {i} lower-triangle codes"),
                });
            }
            for (j, &c) in r.iter().enumerate() {
                if !(-1..=1).contains(&c) {
                    return Err(Error::UnknownCode {
                        row: i + 1,
                        col: j + 1,
                        code: c.to_string(),
                    });
                }
            }
        }
        let labels = labels.iter().map(|s| s.to_string()).collect();
        Ok(Self::from_fn(labels, |i, j| match rows[j][i] {
            -1 => PairClass::Below,
            0 => PairClass::Within,
            _ => PairClass::Above,
        }))
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Class of the pair, `None` on the diagonal.
    pub fn class_of(&self, i: usize, j: usize) -> Option<PairClass> {
        if i == j {
            None
        } else {
            Some(self.classes[pair_index(self.n(), i, j)])
        }
    }

    pub fn set_class(&mut self, i: usize, j: usize, c: PairClass) {
        assert_ne!(i, j, "diagonal pairs have no class");
        let n = self.n();
        self.classes[pair_index(n, i, j)] = c;
    }

    /// All pairs `(i, j, class)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, PairClass)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, self.classes[pair_index(n, i, j)])))
    }

    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for &k in &self.classes {
            match k {
                PairClass::Below => c.below += 1,
                PairClass::Within => c.within += 1,
                PairClass::Above => c.above += 1,
                PairClass::Free => c.free += 1,
            }
        }
        c
    }

    /// CSV: a header of labels (after an empty corner cell), then one row per
    /// object holding its label and the codes left of the diagonal.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&csv_row(std::iter::once("").chain(self.labels.iter().map(|s| s.as_str()))));
        for i in 0..self.n() {
            let codes: Vec<&str> = (0..i).map(|j| self.class_of(i, j).unwrap().code()).collect();
            out.push_str(&csv_row(
                std::iter::once(self.labels[i].as_str()).chain(codes.iter().copied()),
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = JsonDoc {
            labels: self.labels.clone(),
            pairs: self
                .pairs()
                .map(|(i, j, c)| JsonPair {
                    i: self.labels[i].clone(),
                    j: self.labels[j].clone(),
                    class: c.name().to_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }
}

fn csv_row<'a>(cells: impl Iterator<Item = &'a str>) -> String {
    let mut line = cells
        .map(|c| {
            if c.contains([',', '"', '\n']) {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",");
    line.push('\n');
    line
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationError {
    TooFewObjects { n: usize },
    EmptyRequiredClass(PairClass),
    DuplicateLabel(String),
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::TooFewObjects { n } => write!(f, "need at least 3 objects, got {n}"),
            ValidationError::EmptyRequiredClass(c) => write!(f, "class {c} has no pairs"),
            ValidationError::DuplicateLabel(l) => write!(f, "duplicate label {l:?}"),
        }
    }
}

/// Checks every structural requirement and reports all violations at once.
pub fn validate(m: &ClassificationMatrix) -> std::result::Result<(), Vec<ValidationError>> {
    let mut errs = Vec::new();
    if m.n() < 3 {
        errs.push(ValidationError::TooFewObjects { n: m.n() });
    }
    let counts = m.counts();
    if counts.below == 0 {
        errs.push(ValidationError::EmptyRequiredClass(PairClass::Below));
    }
    if counts.above == 0 {
        errs.push(ValidationError::EmptyRequiredClass(PairClass::Above));
    }
    let mut seen = HashMap::new();
    for l in m.labels() {
        let count = seen.entry(l.as_str()).or_insert(0);
        *count += 1;
        if *count == 2 {
            errs.push(ValidationError::DuplicateLabel(l.clone()));
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Json,
}

pub fn parse_classification(text: &str, format: DataFormat) -> Result<ClassificationMatrix> {
    match format {
        DataFormat::Csv => parse_csv(text),
        DataFormat::Json => parse_json(text),
    }
}

fn parse_csv(text: &str) -> Result<ClassificationMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let Some(header) = records.first() else {
        return Err(Error::Parse {
            row: 1,
            col: 1,
            msg: "empty input".into(),
        });
    };
    // A blank corner cell means every data row starts with its label.
    let row_labels = header.first().is_some_and(|c| c.is_empty());
    let labels: Vec<String> = if row_labels {
        header[1..].to_vec()
    } else {
        header.clone()
    };
    let n = labels.len();
    let data = &records[1..];
    if data.len() != n {
        return Err(Error::Parse {
            row: data.len() + 2,
            col: 1,
            msg: format!("expected {n} data rows, found {}", data.len()),
        });
    }
    let offset = usize::from(row_labels);
    let mut lower: Vec<Vec<Option<PairClass>>> = vec![vec![None; n]; n];
    let mut upper: Vec<(usize, usize, PairClass)> = Vec::new();
    for (i, rec) in data.iter().enumerate() {
        let line = i + 2;
        if row_labels && rec.first().map(String::as_str) != Some(labels[i].as_str()) {
            return Err(Error::Parse {
                row: line,
                col: 1,
                msg: format!("expected row label {:?}", labels[i]),
            });
        }
        let cells = &rec[offset.min(rec.len())..];
        if cells.len() > n {
            return Err(Error::Parse {
                row: line,
                col: offset + n + 1,
                msg: format!("row has {} cells, expected at most {n}", cells.len()),
            });
        }
        for j in 0..n {
            let cell = cells.get(j).map(String::as_str).unwrap_or("");
            let col = offset + j + 1;
            if j == i {
                continue;
            }
            if cell.is_empty() {
                if j < i {
                    return Err(Error::Parse {
                        row: line,
                        col,
                        msg: "missing lower-triangle code".into(),
                    });
                }
                continue;
            }
            let class = PairClass::from_code(cell).ok_or_else(|| Error::UnknownCode {
                row: line,
                col,
                code: cell.to_string(),
            })?;
            if j < i {
                lower[i][j] = Some(class);
            } else {
                upper.push((i, j, class));
            }
        }
    }
    for (i, j, c) in upper {
        let low = lower[j][i].expect("lower triangle complete");
        if low != c {
            return Err(Error::Asymmetry {
                row: i + 2,
                col: offset + j + 1,
                lower: low.code().to_string(),
                upper: c.code().to_string(),
            });
        }
    }
    Ok(ClassificationMatrix::from_fn(labels, |i, j| lower[j][i].unwrap()))
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonPair {
    i: String,
    j: String,
    class: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonDoc {
    labels: Vec<String>,
    pairs: Vec<JsonPair>,
}

fn parse_json(text: &str) -> Result<ClassificationMatrix> {
    let doc: JsonDoc = serde_json::from_str(text)?;
    let n = doc.labels.len();
    let index: HashMap<&str, usize> = doc
        .labels
        .iter()
        .enumerate()
        .map(|(k, l)| (l.as_str(), k))
        .collect();
    let mut classes: Vec<Option<PairClass>> = vec![None; n * n.saturating_sub(1) / 2];
    for (k, p) in doc.pairs.iter().enumerate() {
        let row = k + 1;
        let lookup = |label: &str, col: usize| {
            index.get(label).copied().ok_or_else(|| Error::Parse {
                row,
                col,
                msg: format!("unknown label {label:?}"),
            })
        };
        let i = lookup(&p.i, 1)?;
        let j = lookup(&p.j, 2)?;
        if i == j {
            return Err(Error::Parse {
                row,
                col: 2,
                msg: "diagonal pairs have no class".into(),
            });
        }
        let class = PairClass::from_name(&p.class).ok_or_else(|| Error::UnknownCode {
            row,
            col: 3,
            code: p.class.clone(),
        })?;
        let slot = &mut classes[pair_index(n, i, j)];
        match *slot {
            Some(prev) if prev != class => {
                return Err(Error::Asymmetry {
                    row: i + 1,
                    col: j + 1,
                    lower: prev.code().to_string(),
                    upper: class.code().to_string(),
                })
            }
            _ => *slot = Some(class),
        }
    }
    if let Some(k) = classes.iter().position(Option::is_none) {
        let (i, j) = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .nth(k)
            .unwrap();
        return Err(Error::Parse {
            row: 0,
            col: 0,
            msg: format!("no class given for pair ({}, {})", doc.labels[i], doc.labels[j]),
        });
    }
    let mut it = classes.into_iter().map(Option::unwrap);
    Ok(ClassificationMatrix::from_fn(doc.labels, |_, _| it.next().unwrap()))
}

/// Extra restriction on the thresholds when they are optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    /// `a + b = R`.
    SumEqualsR,
    /// None; the optimum collapses to `a = 0`.
    NoRestriction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BoundsMode {
    Known { a: f64, b: f64 },
    Unknown { restriction: Restriction },
}

/// Range used for unknown bounds when none is given.
pub const DEFAULT_UNKNOWN_R: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct QqrConfig {
    pub bounds: BoundsMode,
    /// Quantification range: entry box `[0, R]`, trace at most `nR`.
    pub r: f64,
    /// Required to run `Unknown { NoRestriction }`.
    pub allow_degenerate: bool,
    pub settings: SolverSettings,
}

impl QqrConfig {
    pub fn known(a: f64, b: f64, r: f64) -> Self {
        Self {
            bounds: BoundsMode::Known { a, b },
            r,
            allow_degenerate: false,
            settings: SolverSettings::default(),
        }
    }

    pub fn unknown(restriction: Restriction, r: f64) -> Self {
        Self {
            bounds: BoundsMode::Unknown { restriction },
            r,
            allow_degenerate: restriction == Restriction::NoRestriction,
            settings: SolverSettings::default(),
        }
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }

    /// Checks the configuration, except for `R >= b` which
    /// [`QqrConfig::validate`] adds on top.
    pub fn validate_shape(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::Config(format!("R must be positive, got {}", self.r)));
        }
        match self.bounds {
            BoundsMode::Known { a, b } => {
                if !(a > 0.0 && a <= b && b.is_finite()) {
                    return Err(Error::Config(format!("need 0 < a <= b, got a={a}, b={b}")));
                }
            }
            BoundsMode::Unknown { restriction } => {
                if restriction == Restriction::NoRestriction && !self.allow_degenerate {
                    return Err(Error::Config(
                        "unknown bounds without a restriction degenerate to a = 0; \
                         set allow_degenerate to run it anyway"
                            .into(),
                    ));
                }
            }
        }
        self.settings.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if let BoundsMode::Known { b, .. } = self.bounds {
            if self.r < b {
                return Err(Error::Config(format!(
                    "R = {} is below b = {b}; Above pairs cannot fit in [0, R]",
                    self.r
                )));
            }
        }
        Ok(())
    }
}
