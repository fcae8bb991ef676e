//! `qqr`: quantify pairwise interactions from ternary class codes.

mod commands;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qqr_core::{BoundsMode, Restriction};

use commands::PlotKind;
use manifest::{Dataset, Format, InputSource, RunManifest, SettingsOverrides};

#[derive(Debug, Parser)]
#[command(name = "qqr", version, about = "Quantify pairwise interactions from ternary class codes")]
struct Cli {
    /// Debug logging and per-iteration solver traces on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for W and write result.json, matrix.csv and run.log.
    Quantify(QuantifyArgs),
    /// Bisect on R for the feasibility border of known bounds.
    ScanR(ScanArgs),
    /// Spectral ANOVA of a solved W.
    Anova(AnovaArgs),
    /// Render a solved W as an SVG chart.
    Plot(PlotArgs),
    /// Write a built-in dataset in the CSV or JSON input format.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false, args = ["dataset", "input"])]
struct InputArgs {
    /// Built-in dataset.
    #[arg(long, value_enum)]
    dataset: Option<Dataset>,
    /// Classification file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Input file format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Imaging grid rows.
    #[arg(long, default_value_t = 5)]
    elevations: usize,
    /// Imaging grid columns.
    #[arg(long, default_value_t = 18)]
    azimuths: usize,
    /// Do not treat the first and last azimuth as neighbours.
    #[arg(long)]
    no_wrap: bool,
    /// Count diagonal grid neighbours as similar too.
    #[arg(long)]
    eight_neighbors: bool,
}

impl InputArgs {
    fn source(&self) -> InputSource {
        match (&self.dataset, &self.input) {
            (Some(name), _) => InputSource::Dataset {
                name: *name,
                grid: (*name == Dataset::Imaging).then(|| {
                    manifest::grid_spec(
                        self.grid.elevations,
                        self.grid.azimuths,
                        self.grid.no_wrap,
                        self.grid.eight_neighbors,
                    )
                }),
            },
            (None, Some(path)) => InputSource::File {
                path: path.clone(),
                format: manifest::format_for(path, self.format),
            },
            (None, None) => unreachable!("clap requires one input source"),
        }
    }
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long)]
    eps_abs: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverArgs {
    fn overrides(&self) -> SettingsOverrides {
        SettingsOverrides {
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Args)]
struct QuantifyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Lower threshold for known bounds.
    #[arg(long, required_unless_present = "unknown_bounds", conflicts_with = "unknown_bounds")]
    a: Option<f64>,
    /// Upper threshold for known bounds.
    #[arg(long, required_unless_present = "unknown_bounds", conflicts_with = "unknown_bounds")]
    b: Option<f64>,
    /// Quantification range; defaults to 2 with unknown bounds.
    #[arg(long = "R", required_unless_present = "unknown_bounds")]
    r: Option<f64>,
    /// Optimize the thresholds along with W.
    #[arg(long)]
    unknown_bounds: bool,
    /// Threshold restriction with unknown bounds.
    #[arg(long, value_parser = manifest::parse_restriction, default_value = "sum", requires = "unknown_bounds")]
    restriction: Restriction,
    /// Run unknown bounds without a restriction.
    #[arg(long)]
    allow_degenerate: bool,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    /// Bracket LO..HI with LO infeasible and HI feasible.
    #[arg(long, value_parser = manifest::parse_bracket)]
    scan: (f64, f64),
    /// Width of the final bracket.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output directory for scan.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnovaArgs {
    /// A result.json written by `quantify`.
    #[arg(long)]
    result: PathBuf,
    /// Number of terms; by default the fewest reaching 90% of Σλ².
    #[arg(long)]
    k: Option<usize>,
    /// Fixed pseudo degrees of freedom, comma separated, instead of simulation.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["df_cache", "df_replicates"])]
    df_values: Option<Vec<f64>>,
    /// Monte-Carlo replicates for the pseudo degrees of freedom.
    #[arg(long, default_value_t = 1000)]
    df_replicates: usize,
    /// Reuse or store the simulated table here.
    #[arg(long)]
    df_cache: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for anova.txt and anova.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// CSV with columns `i`, `j` (labels) and `reference`, for scatter plots.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Eigenvectors drawn by the components plot.
    #[arg(long, default_value_t = 6)]
    m: usize,
    /// Output directory; the chart is written as KIND.svg.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long, value_enum)]
    dataset: Dataset,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    grid: GridArgs,
    /// Output directory; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Usage errors exit with 1 so that 2 keeps meaning "infeasible".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_ERROR } else { commands::EXIT_OK });
        }
    };
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code_for(&e))
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Quantify(a) => {
            let bounds = if a.unknown_bounds {
                BoundsMode::Unknown {
                    restriction: a.restriction,
                }
            } else {
                BoundsMode::Known {
                    a: a.a.expect("required by clap"),
                    b: a.b.expect("required by clap"),
                }
            };
            let manifest = RunManifest {
                command: "quantify".into(),
                input: a.input.source(),
                bounds,
                r: Some(a.r.unwrap_or(qqr_core::model::DEFAULT_UNKNOWN_R)),
                scan: None,
                allow_degenerate: a.allow_degenerate,
                settings: a.solver.overrides(),
                out: Some(a.out),
                seed: None,
            };
            commands::quantify(&manifest, verbose)
        }
        Command::ScanR(a) => {
            let manifest = RunManifest {
                command: "scan-r".into(),
                input: a.input.source(),
                bounds: BoundsMode::Known { a: a.a, b: a.b },
                r: None,
                scan: Some(a.scan),
                allow_degenerate: false,
                settings: a.solver.overrides(),
                out: a.out,
                seed: None,
            };
            commands::scan_r(&manifest, a.tol, verbose)
        }
        Command::Anova(a) => commands::anova(&commands::AnovaOptions {
            result: a.result,
            k: a.k,
            df_values: a.df_values,
            replicates: a.df_replicates,
            cache: a.df_cache,
            seed: a.seed,
            out: a.out,
        }),
        Command::Plot(a) => commands::plot(&a.result, a.kind, a.reference.as_deref(), a.m, &a.out),
        Command::Export(a) => {
            let grid = manifest::grid_spec(
                a.grid.elevations,
                a.grid.azimuths,
                a.grid.no_wrap,
                a.grid.eight_neighbors,
            );
            commands::export(a.dataset, grid, a.format, a.out.as_deref())
        }
    }
}
