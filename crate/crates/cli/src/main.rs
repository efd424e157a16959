//! Command-line front end: dataset generation, embedding, evaluation.
//!
//! Exit codes: 0 success, 2 usage error, 3 algorithmic failure
//! (disconnection, insufficient clusters, ...), 4 I/O failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mmiso::dcisomap::{dc_isomap, DcIsomapOptions};
use mmiso::error::{Error, Warning};
use mmiso::graph::DistanceMatrix;
use mmiso::isomap::{isomap, kcc_isomap, Neighborhood};
use mmiso::linalg::{pca_embed, Matrix};
use mmiso::mds::classical_mds;
use mmiso::metrics::{geodesic_preservation, procrustes_residual, residual_variance};
use mmiso::misomap::{m_isomap, MIsomapOptions, StageTiming};
use mmiso::synth::{gen_strip_and_disc, gen_three_strips, gen_two_strips, load_csv, save_csv};

const EXIT_USAGE: i32 = 2;
const EXIT_ALGORITHM: i32 = 3;
const EXIT_IO: i32 = 4;

#[derive(Parser)]
#[command(
    name = "mmiso",
    version,
    about = "Multi-manifold isometric embedding toolbox"
)]
struct Cli {
    /// Cap the number of worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    /// Two rectangular strips on a spiral, separated in height.
    TwoStrips,
    /// A strip and a disc-like band at different spiral angles.
    StripDisc,
    /// Three rectangular regions on the Swiss roll.
    ThreeStrips,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Method {
    Pca,
    Mds,
    Isomap,
    Kcc,
    MIsomap,
    Dc,
    DcRevised,
}

impl Method {
    fn name(&self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Mds => "mds",
            Method::Isomap => "isomap",
            Method::Kcc => "kcc",
            Method::MIsomap => "m-isomap",
            Method::Dc => "dc",
            Method::DcRevised => "dc-revised",
        }
    }

    fn multi_manifold(&self) -> bool {
        matches!(
            self,
            Method::Kcc | Method::MIsomap | Method::Dc | Method::DcRevised
        )
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMode {
    /// Relative geodesic-preservation errors of an embedding against a
    /// reference distance matrix.
    Preservation,
    /// Procrustes residual between two point files.
    Procrustes,
    /// 1 − r² between a reference distance matrix and embedding distances.
    ResidualVariance,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-manifold dataset as CSV.
    Generate {
        #[arg(value_enum)]
        dataset: Dataset,
        /// Number of points.
        #[arg(long)]
        n: usize,
        /// PRNG seed; identical seeds give byte-identical files.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed a points CSV with the chosen method.
    Embed {
        #[arg(value_enum)]
        method: Method,
        /// Input points CSV.
        #[arg(long = "in")]
        input: PathBuf,
        /// Neighborhood size for graph-based methods.
        #[arg(long)]
        k: Option<usize>,
        /// Neighborhood radius (classical Isomap only, alternative to --k).
        #[arg(long)]
        eps: Option<f64>,
        /// Target dimension.
        #[arg(long)]
        d: usize,
        /// Per-manifold neighborhood sizes, comma separated (m-isomap, dc).
        #[arg(long, value_delimiter = ',')]
        per_manifold_k: Option<Vec<usize>>,
        /// Regularizer for the rigid-transform fit (m-isomap).
        #[arg(long)]
        lambda: Option<f64>,
        /// Distance-ratio bound for fictitious clusters (dc-revised).
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        /// Output embedding CSV.
        #[arg(long)]
        out: PathBuf,
        /// JSON run report path.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Prefix for per-manifold 2D scatter CSVs.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Evaluate an embedding against a reference.
    Evaluate {
        /// Embedding CSV (points per row).
        #[arg(long)]
        embedding: PathBuf,
        /// Reference: a points CSV (procrustes) or an n×n distance CSV
        /// (preservation, residual-variance).
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, value_enum)]
        mode: EvalMode,
        /// Optional JSON output path (metrics always print to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Csv { .. } => EXIT_IO,
            Error::InvalidParam(_)
            | Error::ShapeMismatch(_)
            | Error::EigenCountOutOfRange { .. } => EXIT_USAGE,
            _ => EXIT_ALGORITHM,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct WarningEntry {
    code: &'static str,
    detail: String,
}

#[derive(Serialize)]
struct TimingEntry {
    stage: String,
    seconds: f64,
}

#[derive(Serialize)]
struct EmbedReport {
    schema: u32,
    method: &'static str,
    n: usize,
    input_dim: usize,
    d: usize,
    m: usize,
    per_manifold_sizes: Vec<usize>,
    k_used: Option<usize>,
    eps_used: Option<f64>,
    warnings: Vec<WarningEntry>,
    timings: Vec<TimingEntry>,
}

fn warning_entries(warnings: &[Warning]) -> Vec<WarningEntry> {
    warnings
        .iter()
        .map(|w| WarningEntry {
            code: w.code(),
            detail: w.to_string(),
        })
        .collect()
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            std::process::exit(EXIT_USAGE);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .ok();
    }
    if let Err(f) = run(cli.command) {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate {
            dataset,
            n,
            seed,
            out,
        } => generate(dataset, n, seed, &out),
        Command::Embed {
            method,
            input,
            k,
            eps,
            d,
            per_manifold_k,
            lambda,
            beta,
            out,
            report,
            plot_data,
        } => embed(
            method,
            &input,
            k,
            eps,
            d,
            per_manifold_k,
            lambda,
            beta,
            &out,
            report.as_deref(),
            plot_data.as_deref(),
        ),
        Command::Evaluate {
            embedding,
            reference,
            mode,
            out,
        } => evaluate(&embedding, &reference, mode, out.as_deref()),
    }
}

fn generate(dataset: Dataset, n: usize, seed: u64, out: &Path) -> Result<(), Failure> {
    let points = match dataset {
        Dataset::TwoStrips => gen_two_strips(n, seed),
        Dataset::StripDisc => gen_strip_and_disc(n, seed),
        Dataset::ThreeStrips => gen_three_strips(n, seed),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    save_csv(out, points.coords(), points.labels())?;
    let m = points
        .labels()
        .map_or(0, |l| l.iter().copied().max().unwrap_or(0));
    println!(
        "generated n={} dim={} M={} -> {}",
        points.len(),
        points.dim(),
        m,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn embed(
    method: Method,
    input: &Path,
    k: Option<usize>,
    eps: Option<f64>,
    d: usize,
    per_manifold_k: Option<Vec<usize>>,
    lambda: Option<f64>,
    beta: f64,
    out: &Path,
    report_path: Option<&Path>,
    plot_prefix: Option<&Path>,
) -> Result<(), Failure> {
    let t_load = Instant::now();
    let x = load_csv(input)?;
    let load_seconds = t_load.elapsed().as_secs_f64();

    let need_k = || -> Result<usize, Failure> {
        k.ok_or_else(|| Failure::usage(format!("--k is required for {}", method.name())))
    };

    let t_embed = Instant::now();
    let mut labels: Option<Vec<usize>> = None;
    let mut per_manifold_sizes: Vec<usize> = vec![x.len()];
    let mut warnings: Vec<Warning> = Vec::new();
    let mut inner_timings: Vec<StageTiming> = Vec::new();

    let embedding: Matrix = match method {
        Method::Pca => pca_embed(x.coords(), d)?,
        Method::Mds => {
            let dm = DistanceMatrix::euclidean(x.coords());
            let outp = classical_mds(&dm, d)?;
            warnings.extend(outp.warnings());
            outp.embedding
        }
        Method::Isomap => {
            let nbr = match (k, eps) {
                (Some(k), None) => Neighborhood::K(k),
                (None, Some(e)) => Neighborhood::Eps(e),
                (None, None) => return Err(Failure::usage("isomap needs --k or --eps")),
                (Some(_), Some(_)) => {
                    return Err(Failure::usage("--k and --eps are mutually exclusive"))
                }
            };
            let outp = isomap(&x, nbr, d)?;
            warnings.extend(outp.warnings);
            outp.embedding
        }
        Method::Kcc => {
            let (outp, comp) = kcc_isomap(&x, need_k()?, d)?;
            warnings.extend(outp.warnings);
            per_manifold_sizes = comp.members.iter().map(|m| m.len()).collect();
            labels = Some(comp.labels);
            outp.embedding
        }
        Method::MIsomap => {
            let opts = MIsomapOptions {
                k: need_k()?,
                per_manifold_k,
                dim: d,
                lambda,
            };
            let result = m_isomap(&x, &opts)?;
            warnings.extend(result.warnings);
            inner_timings.extend(result.timings);
            per_manifold_sizes = result.labels.members.iter().map(|m| m.len()).collect();
            labels = Some(result.labels.labels);
            result.embedding
        }
        Method::Dc | Method::DcRevised => {
            let opts = DcIsomapOptions {
                k: need_k()?,
                per_cluster_k: per_manifold_k,
                dim: d,
                revised: method == Method::DcRevised,
                beta,
                gamma_schedule: None,
            };
            let result = dc_isomap(&x, &opts)?;
            warnings.extend(result.warnings);
            inner_timings.extend(result.timings);
            per_manifold_sizes = result.labels.members.iter().map(|m| m.len()).collect();
            labels = Some(result.labels.labels);
            result.embedding
        }
    };
    let embed_seconds = t_embed.elapsed().as_secs_f64();

    let t_write = Instant::now();
    save_csv(out, &embedding, labels.as_deref())?;
    if let Some(prefix) = plot_prefix {
        write_plot_data(prefix, &embedding, labels.as_deref())?;
    }
    let write_seconds = t_write.elapsed().as_secs_f64();

    let m = per_manifold_sizes.len();
    println!(
        "embedded n={} d={} M={} method={} -> {}",
        x.len(),
        d,
        m,
        method.name(),
        out.display()
    );
    for w in &warnings {
        println!("warning: {w}");
    }

    if let Some(path) = report_path {
        let mut timings = vec![TimingEntry {
            stage: "load".into(),
            seconds: load_seconds,
        }];
        timings.extend(inner_timings.iter().map(|t| TimingEntry {
            stage: t.stage.into(),
            seconds: t.seconds,
        }));
        timings.push(TimingEntry {
            stage: "embed_total".into(),
            seconds: embed_seconds,
        });
        timings.push(TimingEntry {
            stage: "write".into(),
            seconds: write_seconds,
        });
        let report = EmbedReport {
            schema: 1,
            method: method.name(),
            n: x.len(),
            input_dim: x.dim(),
            d,
            m,
            per_manifold_sizes,
            k_used: if method.multi_manifold() || matches!(method, Method::Isomap) {
                k
            } else {
                None
            },
            eps_used: eps,
            warnings: warning_entries(&warnings),
            timings,
        };
        let json = serde_json::to_string_pretty(&report).expect("report serialization");
        std::fs::write(path, json).map_err(Error::from)?;
    }
    Ok(())
}

/// Per-manifold scatter files with the first two embedding coordinates.
fn write_plot_data(
    prefix: &Path,
    embedding: &Matrix,
    labels: Option<&[usize]>,
) -> Result<(), Failure> {
    let cols = embedding.cols().min(2);
    let groups: Vec<(usize, Vec<usize>)> = match labels {
        Some(l) => {
            let m = l.iter().copied().max().unwrap_or(1);
            (1..=m)
                .map(|id| {
                    (
                        id,
                        l.iter()
                            .enumerate()
                            .filter(|(_, &v)| v == id)
                            .map(|(i, _)| i)
                            .collect(),
                    )
                })
                .collect()
        }
        None => vec![(1, (0..embedding.rows()).collect())],
    };
    for (id, rows) in groups {
        if rows.is_empty() {
            continue;
        }
        let mut sub = Matrix::zeros(rows.len(), cols);
        for (r, &i) in rows.iter().enumerate() {
            for c in 0..cols {
                sub.set(r, c, embedding.get(i, c));
            }
        }
        let path = prefix.with_file_name(format!(
            "{}-manifold-{id}.csv",
            prefix
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "plot".into())
        ));
        save_csv(&path, &sub, None)?;
    }
    Ok(())
}

/// Reads a CSV as a symmetric distance matrix.
fn load_distance_matrix(path: &Path) -> Result<DistanceMatrix, Failure> {
    let raw = load_csv(path)?;
    let n = raw.len();
    if raw.dim() != n {
        return Err(Failure::usage(format!(
            "distance matrix must be square, got {}x{}",
            n,
            raw.dim()
        )));
    }
    let coords = raw.coords();
    let mut dm = DistanceMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = coords.get(i, j);
            let b = coords.get(j, i);
            if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                return Err(Failure::usage(format!(
                    "distance matrix is not symmetric at ({i},{j})"
                )));
            }
            dm.set_sym(i, j, a);
        }
    }
    Ok(dm)
}

fn evaluate(
    embedding_path: &Path,
    reference_path: &Path,
    mode: EvalMode,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let embedding = load_csv(embedding_path)?;
    let json = match mode {
        EvalMode::Procrustes => {
            let reference = load_csv(reference_path)?;
            if reference.len() != embedding.len() {
                return Err(Failure::usage(format!(
                    "row counts differ: embedding {} vs reference {}",
                    embedding.len(),
                    reference.len()
                )));
            }
            let value = procrustes_residual(reference.coords(), embedding.coords()).map_err(
                |e| match e {
                    Error::ShapeMismatch(m) => Failure::usage(m),
                    other => other.into(),
                },
            )?;
            serde_json::json!({ "schema": 1, "mode": "procrustes", "residual": value })
        }
        EvalMode::Preservation => {
            let d_geo = load_distance_matrix(reference_path)?;
            if d_geo.n() != embedding.len() {
                return Err(Failure::usage(format!(
                    "row counts differ: embedding {} vs reference {}",
                    embedding.len(),
                    d_geo.n()
                )));
            }
            let (max, mean) = geodesic_preservation(embedding.coords(), &d_geo, None)?;
            serde_json::json!({
                "schema": 1,
                "mode": "preservation",
                "max_relative_error": max,
                "mean_relative_error": mean,
            })
        }
        EvalMode::ResidualVariance => {
            let d_geo = load_distance_matrix(reference_path)?;
            if d_geo.n() != embedding.len() {
                return Err(Failure::usage(format!(
                    "row counts differ: embedding {} vs reference {}",
                    embedding.len(),
                    d_geo.n()
                )));
            }
            let d_y = DistanceMatrix::euclidean(embedding.coords());
            let value = residual_variance(&d_geo, &d_y)?;
            serde_json::json!({ "schema": 1, "mode": "residual-variance", "value": value })
        }
    };
    let pretty = serde_json::to_string_pretty(&json).expect("metric serialization");
    println!("{pretty}");
    if let Some(path) = out {
        std::fs::write(path, pretty).map_err(Error::from)?;
    }
    Ok(())
}
