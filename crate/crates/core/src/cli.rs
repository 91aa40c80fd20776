//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::complex::ScaleConvention;
use crate::dtm::{DtmParams, GridSpec};
use crate::error::{Error, Result};
use crate::experiments::{
    corridor_walk, run_sweep, run_walker, sweep_svg, Dataset, DeltaRule, ExperimentConfig, SweepAxis, WalkerConfig,
    SWEEP_KERNEL,
};
use crate::geometry::{diameter, PointCloud};
use crate::io::{raw_real, read_points_file, write_summary, write_sweep, write_trace, DiagramFile};
use crate::mechanism::{privatize, PrivacyParams, ProposalKernel, SamplerConfig};
use crate::metric::{tuple_bottleneck_per_dim, BottleneckConfig};
use crate::pipeline::{dtm_diagrams, rips_diagrams_with, Pipeline};
use crate::sensitivity::{
    death_gap, empirical_base_sensitivity, make_group_pair, make_last_merge_perturbation, make_minority_pair,
    make_two_mass_pair, minority_pair_distance, segment_grid, AdjacentPair,
};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DP_TDA_THREADS";
/// Environment variable naming a CSV of walker positions.
pub const WALKER_CSV_ENV: &str = "DP_TDA_WALKER_CSV";

#[derive(Debug, Parser)]
#[command(name = "dptda", version, about = "Differentially private persistence diagrams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PipelineKind {
    Rips,
    Dtm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Radius,
    Diameter,
}

impl From<ConventionArg> for ScaleConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Radius => ScaleConvention::Radius,
            ConventionArg::Diameter => ScaleConvention::Diameter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    /// Gaussian step on every point, one accept/reject per iteration.
    Joint,
    /// One accept/reject per point per iteration, multi-scale steps and redraws.
    Sweep,
}

impl KernelArg {
    fn kernel(self) -> ProposalKernel {
        match self {
            KernelArg::Joint => ProposalKernel::Joint,
            KernelArg::Sweep => SWEEP_KERNEL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Construction {
    /// Two masses at distance diam; one point moves to the midpoint (Rips).
    #[value(name = "thm2")]
    TwoMassRips,
    /// Two-mass pair with a minority mass, DTM pipeline.
    #[value(name = "prop5")]
    MinorityMass,
    /// Midpoint of the last Rips merge replaces a repeated point.
    #[value(name = "lemma1")]
    LastMerge,
    /// `--k` points of the minority mass move to the midpoint, DTM pipeline.
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Epsilon,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeltaArg {
    /// `(ell + 1) diam / (m n)`.
    Sensitivity,
    /// `2 sqrt 2 / (m n)`.
    Fixed,
}

#[derive(Debug, clap::Args)]
pub struct DtmArgs {
    /// DTM mass fraction in (0, 1).
    #[arg(long, default_value_t = 0.2)]
    pub m: f64,
    /// Exponent of the empirical DTM.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Lattice points per axis (default depends on the dimension).
    #[arg(long)]
    pub grid: Option<usize>,
}

impl DtmArgs {
    fn grid_for(&self, cloud: &PointCloud) -> Result<GridSpec> {
        match self.grid {
            Some(g) => GridSpec::padded_for(cloud, g),
            None => GridSpec::default_for(cloud),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the persistence diagrams of a point cloud.
    Diagram {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = PipelineKind::Dtm)]
        pipeline: PipelineKind,
        #[command(flatten)]
        dtm: DtmArgs,
        /// Rips truncation scale (default: the cloud diameter).
        #[arg(long)]
        max_scale: Option<f64>,
        #[arg(long, value_enum, default_value_t = ConventionArg::Radius)]
        scale_convention: ConventionArg,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bottleneck distance between two diagram files.
    Bottleneck {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Keep every essential class, capped at the larger file cap.
        #[arg(long)]
        keep_essential: bool,
    },
    /// Release private diagrams of a point cloud.
    Privatize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[command(flatten)]
        dtm: DtmArgs,
        /// Maximum points per released diagram.
        #[arg(long, default_value_t = 5)]
        big_m: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
        /// Proposal scale (default: diam / 50).
        #[arg(long)]
        sigma: Option<f64>,
        /// A public bound on the diameter of the data domain. Without it the
        /// observed diameter is used, which itself depends on the private data.
        #[arg(long)]
        diam: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict the output space to a triangular lattice of at most N points.
        #[arg(long)]
        snap_grid: Option<usize>,
        /// Use this sensitivity instead of `(ell + 1) diam / (m n)`.
        #[arg(long)]
        delta_override: Option<f64>,
        #[arg(long, value_enum, default_value_t = KernelArg::Joint)]
        kernel: KernelArg,
        #[arg(long)]
        keep_essential: bool,
        /// Per-iteration trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an adjacent pair and compare its diagrams with the predicted distance.
    SensitivityCheck {
        #[arg(long, value_enum)]
        construction: Construction,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        m: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        diam: f64,
        /// Number of moved points for the group construction.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Base cloud for the last-merge construction (default: the two-mass cloud).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also replace one random point of the base cloud this many times
        /// and report the largest distance seen.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replicated privatisation sweep over epsilon or n.
    Simulate {
        #[arg(long, value_enum, default_value_t = SweepArg::Epsilon)]
        sweep: SweepArg,
        /// Comma-separated sweep values (default: 0.1,1,10 or 250,1000,8000).
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        /// Dataset CSV; two-circle data is generated when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 4000)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        m: f64,
        #[arg(long, default_value_t = 5)]
        big_m: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = DeltaArg::Fixed)]
        delta: DeltaArg,
        #[arg(long, value_enum, default_value_t = KernelArg::Sweep)]
        kernel: KernelArg,
        #[arg(long)]
        diam: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-replicate results CSV.
        #[arg(long)]
        out: PathBuf,
        /// Quantile summary CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Quantile band plot.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Privatise a walker trajectory (or the synthetic corridor stand-in).
    Walker {
        /// Three-column CSV; falls back to the walker environment variable,
        /// then to synthetic data.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Size of the synthetic stand-in.
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        m: f64,
        #[arg(long, default_value_t = 5)]
        big_m: usize,
        #[arg(long, default_value_t = 50_000)]
        iters: usize,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = KernelArg::Joint)]
        kernel: KernelArg,
        #[arg(long)]
        diam: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::param(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a second initialisation in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn write_text(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(f))
}

fn reals(xs: &[f64]) -> Vec<Box<RawValue>> {
    xs.iter().map(|&x| raw_real(x)).collect()
}

fn print_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serialises");
    writeln!(out, "{text}")?;
    Ok(())
}

#[derive(Serialize)]
struct DistanceReport {
    per_dim: Vec<Box<RawValue>>,
    total: Box<RawValue>,
}

#[derive(Serialize)]
struct PrivatizeReport {
    n: usize,
    delta: Box<RawValue>,
    beta: Box<RawValue>,
    cap: Box<RawValue>,
    acceptance_rate: Box<RawValue>,
}

#[derive(Serialize)]
struct SensitivityOutput {
    construction: &'static str,
    n: usize,
    hamming: usize,
    per_dim: Vec<Box<RawValue>>,
    predicted: Box<RawValue>,
    /// `eq` when the construction pins the distance, `ge` for a lower bound.
    relation: &'static str,
    holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe_max: Option<Box<RawValue>>,
}

#[derive(Serialize)]
struct SweepReport {
    axis: &'static str,
    slope: Box<RawValue>,
    values: Vec<Box<RawValue>>,
    lower: Vec<Box<RawValue>>,
    median: Vec<Box<RawValue>>,
    upper: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct WalkerReport {
    source: String,
    n: usize,
    per_dim: Vec<Box<RawValue>>,
    acceptance_rate: Box<RawValue>,
}

/// Runs a parsed command, writing reports to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Diagram {
            input,
            pipeline,
            dtm,
            max_scale,
            scale_convention,
            ell,
            out: path,
        } => {
            let cloud = read_points_file(&input)?;
            let file = match pipeline {
                PipelineKind::Rips => {
                    let scale = match max_scale {
                        Some(s) => s,
                        None => diameter(&cloud)?,
                    };
                    DiagramFile {
                        cap: scale,
                        diagrams: rips_diagrams_with(&cloud, scale, ell, scale_convention.into())?,
                    }
                }
                PipelineKind::Dtm => {
                    let params = DtmParams::new(dtm.m, dtm.p)?;
                    let (diagrams, field) = dtm_diagrams(&cloud, &dtm.grid_for(&cloud)?, &params, ell)?;
                    DiagramFile {
                        cap: field.max(),
                        diagrams,
                    }
                }
            };
            write_text(path.as_deref(), &file.to_json(), out)
        }
        Command::Bottleneck { a, b, keep_essential } => {
            let (a, b) = (DiagramFile::read(&a)?, DiagramFile::read(&b)?);
            let cfg = BottleneckConfig {
                cap: a.cap.max(b.cap),
                keep_essential,
            };
            let per_dim = tuple_bottleneck_per_dim(&a.diagrams, &b.diagrams, &cfg)?;
            print_json(
                &DistanceReport {
                    total: raw_real(per_dim.iter().sum()),
                    per_dim: reals(&per_dim),
                },
                out,
            )
        }
        Command::Privatize {
            input,
            epsilon,
            dtm,
            big_m,
            ell,
            iters,
            sigma,
            diam,
            seed,
            snap_grid,
            delta_override,
            kernel,
            keep_essential,
            trace,
            out: path,
        } => {
            let cloud = read_points_file(&input)?;
            let diam_e = match diam {
                Some(d) => d,
                None => diameter(&cloud)?,
            };
            let privacy = PrivacyParams {
                epsilon,
                m: dtm.m,
                big_m,
                ell,
                diam_e,
                delta_override,
            };
            privacy.validate()?;
            let params = DtmParams::new(dtm.m, dtm.p)?;
            let (target, field) = dtm_diagrams(&cloud, &dtm.grid_for(&cloud)?, &params, ell)?;
            let cap = field.max();
            let sampler = SamplerConfig {
                iterations: iters,
                sigma: sigma.unwrap_or(diam_e / 50.0),
                cap,
                snap_grid,
                bottleneck: BottleneckConfig {
                    keep_essential,
                    ..BottleneckConfig::default()
                },
                kernel: kernel.kernel(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (private, chain) = privatize(&target, &privacy, cloud.len(), &sampler, &mut rng)?;
            if let Some(t) = trace {
                write_trace(&chain, create(&t)?)?;
            }
            let file = DiagramFile { cap, diagrams: private };
            match path {
                Some(p) => {
                    file.write(&p)?;
                    print_json(
                        &PrivatizeReport {
                            n: cloud.len(),
                            delta: raw_real(privacy.delta(cloud.len())),
                            beta: raw_real(privacy.beta(cloud.len())),
                            cap: raw_real(cap),
                            acceptance_rate: raw_real(chain.acceptance_rate()),
                        },
                        out,
                    )
                }
                None => write_text(None, &file.to_json(), out),
            }
        }
        Command::SensitivityCheck {
            construction,
            n,
            m,
            p,
            diam,
            k,
            input,
            trials,
            seed,
        } => {
            let check = SensitivityArgs {
                construction,
                n,
                m,
                p,
                diam,
                k,
                input,
                trials,
                seed,
            };
            print_json(&sensitivity_check(&check)?, out)
        }
        Command::Simulate {
            sweep,
            values,
            reps,
            input,
            epsilon,
            n,
            m,
            big_m,
            ell,
            iters,
            sigma,
            grid,
            delta,
            kernel,
            diam,
            seed,
            out: path,
            summary,
            svg,
        } => {
            let axis = match sweep {
                SweepArg::Epsilon => SweepAxis::Epsilon,
                SweepArg::N => SweepAxis::N,
            };
            let values = if values.is_empty() {
                match axis {
                    SweepAxis::Epsilon => vec![0.1, 1.0, 10.0],
                    SweepAxis::N => vec![250.0, 1000.0, 8000.0],
                }
            } else {
                values
            };
            let dataset = match input {
                Some(p) => Dataset::Cloud(read_points_file(&p)?),
                None => Dataset::TwoCircles,
            };
            let config = ExperimentConfig {
                dataset,
                axis,
                values,
                reps,
                epsilon,
                n,
                m,
                big_m,
                ell,
                iterations: iters,
                sigma,
                grid_resolution: grid,
                delta: match delta {
                    DeltaArg::Sensitivity => DeltaRule::Sensitivity,
                    DeltaArg::Fixed => DeltaRule::FixedScale,
                },
                diam_e: diam,
                kernel: kernel.kernel(),
                seed,
            };
            let result = run_sweep(&config)?;
            write_sweep(&result, create(&path)?)?;
            if let Some(s) = summary {
                write_summary(&result, create(&s)?)?;
            }
            if let Some(s) = svg {
                write_text(Some(&s), &sweep_svg(&result), out)?;
            }
            let col = |f: fn(&crate::experiments::SweepSummary) -> f64| -> Vec<f64> {
                result.summary.iter().map(f).collect()
            };
            print_json(
                &SweepReport {
                    axis: result.axis.name(),
                    slope: raw_real(result.slope),
                    values: reals(&col(|s| s.value)),
                    lower: reals(&col(|s| s.lower)),
                    median: reals(&col(|s| s.median)),
                    upper: reals(&col(|s| s.upper)),
                },
                out,
            )
        }
        Command::Walker {
            input,
            n,
            epsilon,
            m,
            big_m,
            iters,
            sigma,
            grid,
            kernel,
            diam,
            seed,
            trace,
            out: path,
        } => {
            let env_path = std::env::var_os(WALKER_CSV_ENV).map(PathBuf::from);
            let (cloud, source) = match input.or(env_path) {
                Some(p) => {
                    let c = read_points_file(&p)?;
                    if c.dim() != 3 {
                        return Err(Error::Data {
                            line: 1,
                            message: format!("walker data needs 3 columns, got {}", c.dim()),
                        });
                    }
                    (c, p.display().to_string())
                }
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (corridor_walk(n, &mut rng), "synthetic corridor walk".to_string())
                }
            };
            let config = WalkerConfig {
                epsilon,
                m,
                big_m,
                ell: 1,
                iterations: iters,
                sigma,
                grid_resolution: grid,
                delta: DeltaRule::Sensitivity,
                diam_e: diam,
                kernel: kernel.kernel(),
                seed,
            };
            let result = run_walker(&cloud, &config)?;
            if let Some(t) = trace {
                write_trace(&result.trace, create(&t)?)?;
            }
            if let Some(p) = path {
                DiagramFile {
                    cap: result.cap,
                    diagrams: result.private.clone(),
                }
                .write(&p)?;
            }
            print_json(
                &WalkerReport {
                    source,
                    n: cloud.len(),
                    per_dim: reals(&result.distances),
                    acceptance_rate: raw_real(result.trace.acceptance_rate()),
                },
                out,
            )
        }
    }
}

struct SensitivityArgs {
    construction: Construction,
    n: usize,
    m: f64,
    p: f64,
    diam: f64,
    k: usize,
    input: Option<PathBuf>,
    trials: usize,
    seed: u64,
}

fn sensitivity_check(args: &SensitivityArgs) -> Result<SensitivityOutput> {
    let SensitivityArgs {
        construction,
        n,
        m,
        p,
        diam,
        k,
        trials,
        seed,
        ..
    } = *args;
    let rips_pipe = |scale: f64| Pipeline::Rips {
        max_scale: scale,
        convention: ScaleConvention::Radius,
    };
    let dtm_pipe = || -> Result<Pipeline> {
        Ok(Pipeline::Dtm {
            params: DtmParams::new(m, p)?,
            grid: Some(segment_grid(diam)?),
        })
    };
    let rips = |pair: &AdjacentPair, scale: f64| -> Result<f64> {
        let pipe = rips_pipe(scale);
        let a = pipe.run(&pair.d, 0)?;
        let b = pipe.run(&pair.d_prime, 0)?;
        Ok(tuple_bottleneck_per_dim(&a.diagrams, &b.diagrams, &BottleneckConfig::default())?[0])
    };
    let dtm = |pair: &AdjacentPair| -> Result<f64> {
        let pipe = dtm_pipe()?;
        let a = pipe.run(&pair.d, 0)?;
        let b = pipe.run(&pair.d_prime, 0)?;
        Ok(tuple_bottleneck_per_dim(&a.diagrams, &b.diagrams, &BottleneckConfig::default())?[0])
    };
    let (name, pair, observed, predicted, relation, pipe) = match construction {
        Construction::TwoMassRips => {
            let pair = make_two_mass_pair(n, diam)?;
            let d = rips(&pair, 2.0 * diam)?;
            ("thm2", pair, d, diam / 4.0, "ge", rips_pipe(2.0 * diam))
        }
        Construction::MinorityMass => {
            if p != 1.0 {
                return Err(Error::Precondition(format!(
                    "the predicted distance holds for the L1 DTM; got p = {p}"
                )));
            }
            let pair = make_minority_pair(n, m, diam)?;
            let d = dtm(&pair)?;
            ("prop5", pair, d, minority_pair_distance(n, m, diam), "eq", dtm_pipe()?)
        }
        Construction::Group => {
            if p != 1.0 {
                return Err(Error::Precondition(format!(
                    "the predicted distance holds for the L1 DTM; got p = {p}"
                )));
            }
            let pair = make_group_pair(n, k, m, diam)?;
            let d = dtm(&pair)?;
            let kk = crate::dtm::ceil_product(m, n);
            ("group", pair, d, k as f64 / kk as f64 * diam / 2.0, "eq", dtm_pipe()?)
        }
        Construction::LastMerge => {
            let base = match &args.input {
                Some(path) => read_points_file(path)?,
                None => make_two_mass_pair(n, diam)?.d,
            };
            let (gap, d_m) = death_gap(&base)
                .ok_or_else(|| Error::NotApplicable("the Rips H0 diagram has no finite death".into()))?;
            let pair = make_last_merge_perturbation(&base)?;
            let scale = 2.0 * diameter(&base)?;
            let d = rips(&pair, scale)?;
            ("lemma1", pair, d, gap.min(d_m / 2.0), "ge", rips_pipe(scale))
        }
    };
    let holds = match relation {
        "eq" => (observed - predicted).abs() <= 1e-9 * predicted.max(1.0),
        _ => observed >= predicted - 1e-12,
    };
    let probe_max = if trials > 0 {
        let region = pair.d.bounding_box(0.0)?;
        let report = empirical_base_sensitivity(&pair.d, trials, &pipe, &region, 0, seed)?;
        Some(raw_real(report.max_db))
    } else {
        None
    };
    Ok(SensitivityOutput {
        construction: name,
        n: pair.d.len(),
        hamming: pair.hamming,
        per_dim: reals(&[observed]),
        predicted: raw_real(predicted),
        relation,
        holds,
        probe_max,
    })
}
