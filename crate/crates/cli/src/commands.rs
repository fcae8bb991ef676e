use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use qqr_core::datasets::{self, GridSpec};
use qqr_core::qqr::scan_min_r;
use qqr_core::spectral::{self, PseudoDfTable};
use qqr_core::{BoundsMode, Error, QqrConfig, QqrResult, Status};
use serde::Serialize;

use crate::manifest::{read_result, Dataset, Format, ResultFile, RunManifest};
use crate::svg::Chart;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_ITERATION_LIMIT: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Scatter,
    Map,
    Components,
}

impl PlotKind {
    fn name(self) -> &'static str {
        match self {
            PlotKind::Scatter => "scatter",
            PlotKind::Map => "map",
            PlotKind::Components => "components",
        }
    }
}

/// Infeasibility and bad brackets exit with 2, an exhausted feasibility
/// solve with 3, everything else with 1.
pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Infeasible { .. } | Error::Bracket { .. }) => EXIT_INFEASIBLE,
        Some(Error::IterationLimit { .. }) => EXIT_ITERATION_LIMIT,
        _ => EXIT_ERROR,
    }
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Optimal => EXIT_OK,
        Status::Infeasible => EXIT_INFEASIBLE,
        Status::IterationLimit => EXIT_ITERATION_LIMIT,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn matrix_csv(result: &QqrResult) -> String {
    let mut out = String::new();
    for l in &result.labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (i, l) in result.labels.iter().enumerate() {
        out.push_str(l);
        for v in result.w.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn bounds_line(m: &RunManifest) -> String {
    match m.bounds {
        BoundsMode::Known { a, b } => format!("bounds: known a={a} b={b}"),
        BoundsMode::Unknown { restriction } => format!("bounds: unknown, restriction {restriction:?}"),
    }
}

pub fn quantify(m: &RunManifest, verbose: bool) -> Result<u8> {
    let out = m.out.as_deref().context("quantify needs an output directory")?;
    let data = m.input.load()?;
    let r = m.r.context("quantify needs R")?;
    let mut config = match m.bounds {
        BoundsMode::Known { a, b } => QqrConfig::known(a, b, r),
        BoundsMode::Unknown { restriction } => QqrConfig::unknown(restriction, r),
    }
    .with_settings(m.settings.apply(verbose));
    config.allow_degenerate = m.allow_degenerate;
    create_dir(out)?;

    let mut log = format!("command: quantify\nobjects: {}\n{}\nR: {r}\n", data.n(), bounds_line(m));
    let c = data.counts();
    let _ = writeln!(
        log,
        "pairs: below {} within {} above {} free {}",
        c.below, c.within, c.above, c.free
    );
    let result = match qqr_core::quantify(&data, &config) {
        Ok(res) => res,
        Err(Error::Infeasible { margin }) => {
            let _ = writeln!(log, "status: infeasible\nfeasibility margin: {margin:e}");
            write(&out.join("run.log"), &log)?;
            eprintln!("infeasible at R = {r}: feasibility margin {margin:e}");
            return Ok(EXIT_INFEASIBLE);
        }
        Err(e) => return Err(e.into()),
    };

    let res = &result.residuals;
    let _ = writeln!(
        log,
        "status: {}\nobjective: {}\na*: {}\nb*: {}\nprimal residual: {:e}\ndual residual: {:e}\niterations: {}\nfeasibility margin: {:e}\npairs at a* (tol {:e}): {}\npairs at b*: {}",
        result.status,
        result.objective,
        result.a_star,
        result.b_star,
        res.primal,
        res.dual,
        res.iterations,
        res.margin,
        result.boundary_report.tol,
        result.boundary_report.at_a,
        result.boundary_report.at_b,
    );
    let file = ResultFile {
        result,
        manifest: Some(m.clone()),
    };
    write(&out.join("result.json"), &to_json(&file)?)?;
    write(&out.join("matrix.csv"), &matrix_csv(&file.result))?;
    write(&out.join("run.log"), &log)?;
    println!(
        "{}: objective {:.6}, a* {:.6}, b* {:.6}",
        file.result.status, file.result.objective, file.result.a_star, file.result.b_star
    );
    Ok(status_code(file.result.status))
}

#[derive(Serialize)]
struct ScanFile<'a> {
    #[serde(flatten)]
    scan: qqr_core::qqr::RScan,
    tol: f64,
    manifest: &'a RunManifest,
}

pub fn scan_r(m: &RunManifest, tol: f64, verbose: bool) -> Result<u8> {
    let data = m.input.load()?;
    let BoundsMode::Known { a, b } = m.bounds else {
        bail!("scan-r needs known bounds");
    };
    let bracket = m.scan.context("scan-r needs a bracket")?;
    let scan = scan_min_r(&data, a, b, bracket, tol, &m.settings.apply(verbose))?;
    println!("border R = {:.6}", scan.border);
    println!("recommended R = {:.6}", scan.recommended);
    if let Some(out) = &m.out {
        create_dir(out)?;
        let file = ScanFile {
            scan,
            tol,
            manifest: m,
        };
        write(&out.join("scan.json"), &to_json(&file)?)?;
    }
    Ok(EXIT_OK)
}

pub struct AnovaOptions {
    pub result: PathBuf,
    pub k: Option<usize>,
    pub df_values: Option<Vec<f64>>,
    pub replicates: usize,
    pub cache: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

fn warn_if_not_optimal(result: &QqrResult) {
    if result.status != Status::Optimal {
        warn!("result status is {}; treat the analysis as approximate", result.status);
    }
}

fn load_or_simulate(o: &AnovaOptions, n: usize, k: usize) -> Result<PseudoDfTable> {
    if let Some(values) = &o.df_values {
        return Ok(PseudoDfTable::fixed(n, values.clone()));
    }
    if let Some(path) = &o.cache {
        if path.exists() {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cached: PseudoDfTable =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            if cached.n == n && cached.replicates == o.replicates && cached.seed == o.seed && cached.terms.len() >= k {
                info!("pseudo-DF from {}", path.display());
                return Ok(cached);
            }
            info!("{} does not match this run; simulating", path.display());
        }
    }
    let table = spectral::mc_pseudo_df(n, k, o.replicates, o.seed)?;
    if let Some(path) = &o.cache {
        write(path, &to_json(&table)?)?;
    }
    Ok(table)
}

#[derive(Serialize)]
struct AnovaFile<'a> {
    eigenvalues: &'a [f64],
    pseudo_df: &'a PseudoDfTable,
    table: &'a spectral::AnovaTable,
}

pub fn anova(o: &AnovaOptions) -> Result<u8> {
    let result = read_result(&o.result)?;
    warn_if_not_optimal(&result);
    let spec = spectral::spectrum(&result.w)?;
    let n = spec.n();
    let k = o.k.unwrap_or_else(|| spec.default_k());
    if k == 0 || k > n {
        bail!("k must lie in 1..={n}, got {k}");
    }
    let df = load_or_simulate(o, n, k)?;
    let table = spectral::anova(&result.w, k, &df)?;

    let mut text = spec.to_text();
    text.push('\n');
    text.push_str(&table.to_text());
    if df.replicates > 0 {
        let _ = writeln!(
            text,
            "pseudo-DF: {} Monte-Carlo replicates, seed {}",
            df.replicates, df.seed
        );
    } else {
        text.push_str("pseudo-DF: fixed values\n");
    }
    create_dir(&o.out)?;
    write(&o.out.join("anova.txt"), &text)?;
    let file = AnovaFile {
        eigenvalues: &spec.values,
        pseudo_df: &df,
        table: &table,
    };
    write(&o.out.join("anova.json"), &to_json(&file)?)?;
    print!("{}", table.to_text());
    Ok(EXIT_OK)
}

/// Reference values keyed by label pair, from a CSV with `i`, `j` and `reference` columns.
fn read_reference(path: &Path, result: &QqrResult) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no `{name}` column", path.display()))
    };
    let (ci, cj, cr) = (col("i")?, col("j")?, col("reference")?);
    let index = |label: &str| {
        result
            .labels
            .iter()
            .position(|l| l == label)
            .with_context(|| format!("unknown label `{label}` in {}", path.display()))
    };
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let i = index(field(ci))?;
        let j = index(field(cj))?;
        let reference: f64 = field(cr)
            .parse()
            .with_context(|| format!("{} row {}: bad reference value", path.display(), line + 2))?;
        points.push((reference, result.w[(i, j)]));
    }
    if points.is_empty() {
        bail!("{} has no reference rows", path.display());
    }
    Ok(points)
}

pub fn plot(result_path: &Path, kind: PlotKind, reference: Option<&Path>, m: usize, out: &Path) -> Result<u8> {
    let result = read_result(result_path)?;
    warn_if_not_optimal(&result);
    let chart = match kind {
        PlotKind::Scatter => {
            let path = reference.context("scatter needs --reference")?;
            let mut c = Chart::new("Quantified vs. reference", "reference", "quantified w");
            c.points(read_reference(path, &result)?);
            c.diagonal();
            c
        }
        PlotKind::Map => {
            let spec = spectral::spectrum(&result.w)?;
            let coords = spectral::pca_coords(&spec, 2);
            let mut c = Chart::new("Components 1 and 2", "component 1", "component 2").equal_aspect();
            for (label, p) in result.labels.iter().zip(&coords) {
                c.arrow((p[0], p.get(1).copied().unwrap_or(0.0)), label);
            }
            c
        }
        PlotKind::Components => {
            if m == 0 {
                bail!("--m must be positive");
            }
            let spec = spectral::spectrum(&result.w)?;
            let mut c = Chart::new("Eigenvectors", "object", "loading");
            for j in 0..m.min(spec.n()) {
                let v = spec.vector(j);
                let pts = v.iter().enumerate().map(|(i, &y)| ((i + 1) as f64, y)).collect();
                c.line(pts, &format!("u{}", j + 1));
            }
            c
        }
    };
    create_dir(out)?;
    let path = out.join(format!("{}.svg", kind.name()));
    write(&path, &chart.render())?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}

pub fn export(dataset: Dataset, grid: GridSpec, format: Format, out: Option<&Path>) -> Result<u8> {
    let (data, name) = match dataset {
        Dataset::Table1 => (datasets::table1(), "table1"),
        Dataset::Table2 => (datasets::table2(), "table2"),
        Dataset::Imaging => (datasets::imaging(&grid)?, "imaging"),
    };
    let (text, ext) = match format {
        Format::Csv => (data.to_csv(), "csv"),
        Format::Json => (data.to_json(), "json"),
    };
    match out {
        Some(dir) => {
            create_dir(dir)?;
            let path = dir.join(format!("{name}.{ext}"));
            write(&path, &text)?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

