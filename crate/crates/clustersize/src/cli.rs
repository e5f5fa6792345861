//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use clustersize_core::asymptotics::{gamma_for_model, sigma_db, sigma_sb, theta_asymp_var, CovMatrix};
use clustersize_core::cpmodel::{armax_model, iid_model, DEFAULT_SUPPORT_CAP};
use clustersize_core::estimators::{pbar_hat, pi_from_pbar, theta_hat};
use clustersize_core::quadrature::QuadratureSpec;
use clustersize_core::simulate::{gen, ModelKind, ModelSpec, DEFAULT_BURNIN};
use clustersize_core::{BlockMode, EstimatorSpec, Sample, Scale};

use crate::config::{EstimatorId, ExperimentConfig};
use crate::error::{AppError, Result};
use crate::experiments::{self, Metric, SummaryTable};
use crate::output::{fmt_sig, render_svg, write_csv};
use crate::series::{format_series, read_series, write_series};

#[derive(Debug, Parser)]
#[command(name = "clustersize", version, about = "Estimate extremal cluster size distributions from block maxima")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a benchmark time series
    Simulate(SimulateArgs),
    /// Estimate the cluster size distribution of a series file
    Estimate(EstimateArgs),
    /// Print asymptotic covariance matrices of the blocks estimators
    Variance(VarianceArgs),
    /// Run a Monte Carlo study from a config file
    Experiment(ExperimentArgs),
    /// Minimal MSE over block sizes for the three benchmark models
    Table1(Table1Args),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelName {
    Armax,
    Sqarch,
    Ar,
    Iid,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelName,
    /// ARMAX coefficient
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Squared ARCH coefficient
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// AR denominator
    #[arg(long, default_value_t = 4)]
    pub r: u32,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BURNIN)]
    pub burnin: usize,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeName {
    Disjoint,
    Sliding,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleName {
    Z,
    Y,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Series file, one value per line
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "sliding")]
    pub mode: ModeName,
    #[arg(long, value_enum, default_value = "z")]
    pub scale: ScaleName,
    /// Block size
    #[arg(long)]
    pub b: usize,
    #[arg(long, default_value_t = 5)]
    pub m_max: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LimitModel {
    Iid,
    Armax,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CovName {
    Db,
    Sb,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[arg(long, value_enum)]
    pub model: LimitModel,
    /// ARMAX coefficient
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, value_enum)]
    pub kind: CovName,
    /// Matrix dimension
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Gauss-Legendre nodes per dimension
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    /// Skip the node-doubling accuracy check
    #[arg(long)]
    pub no_refine: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// Replications per model
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a, out),
        Command::Estimate(a) => estimate(a, out),
        Command::Variance(a) => variance(a, out),
        Command::Experiment(a) => experiment(a, out),
        Command::Table1(a) => table1(a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| AppError::io("<stdout>", e))
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let kind = match a.model {
        ModelName::Armax => ModelKind::Armax { alpha: a.alpha },
        ModelName::Sqarch => ModelKind::SqArch { lambda: a.lambda },
        ModelName::Ar => ModelKind::ArUniform { r: a.r },
        ModelName::Iid => ModelKind::IidFrechet,
    };
    let spec = ModelSpec {
        kind,
        n: a.n,
        burnin: a.burnin,
        seed: a.seed,
    };
    let x = gen(&spec)?;
    let header = format!("{kind} n={} seed={} burnin={}", a.n, a.seed, a.burnin);
    match a.out {
        Some(path) => write_series(&path, x.values(), Some(&header)),
        None => emit(out, &format_series(x.values(), Some(&header))),
    }
}

fn estimate(a: EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let mode = match a.mode {
        ModeName::Disjoint => BlockMode::Disjoint,
        ModeName::Sliding => BlockMode::Sliding,
    };
    let scale = match a.scale {
        ScaleName::Z => Scale::Z,
        ScaleName::Y => Scale::Y,
    };
    let x = Sample::new(read_series(&a.input)?)?;
    let spec = EstimatorSpec::new(mode, scale, a.b, a.m_max)?;
    let pbar = pbar_hat(&x, &spec)?;
    let pi = pi_from_pbar(&pbar);
    let mut text = String::from("m,pbar_hat,pi_hat,theta_hat\n");
    let mut degenerate = None;
    for m in 1..=a.m_max {
        let theta = match theta_hat(&pi.values, m) {
            Ok(t) => fmt_sig(t),
            Err(e) => {
                degenerate.get_or_insert(e);
                "degenerate".to_string()
            }
        };
        text.push_str(&format!("{m},{},{},{theta}\n", fmt_sig(pbar.get(m)), fmt_sig(pi.get(m))));
    }
    emit(out, &text)?;
    match degenerate {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn matrix_text(c: &CovMatrix) -> String {
    let mut s = format!("# {} m={}\n", c.kind.as_str(), c.m);
    for r in 0..c.m {
        let row: Vec<String> = (0..c.m).map(|k| format!("{:.10}", c.get(r, k))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn variance(a: VarianceArgs, out: &mut dyn Write) -> Result<()> {
    let model = match a.model {
        LimitModel::Iid => iid_model(),
        LimitModel::Armax => armax_model(a.alpha, DEFAULT_SUPPORT_CAP)?,
    };
    let quad = QuadratureSpec {
        nodes_1d: a.nodes,
        refinement: !a.no_refine,
        ..QuadratureSpec::default()
    };
    let sigma = match a.kind {
        CovName::Db => sigma_db(&model, a.m, &quad)?,
        CovName::Sb => sigma_sb(&model, a.m, &quad)?,
    };
    let gamma = gamma_for_model(&model, &sigma)?;
    let mut text = matrix_text(&sigma);
    text.push_str(&matrix_text(&gamma));
    text.push_str("# theta_asymp_var\nm,value\n");
    for m in 1..=a.m {
        text.push_str(&format!("{m},{:.10}\n", theta_asymp_var(&gamma, model.pi(), m)?));
    }
    emit(out, &text)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn write_study(table: &SummaryTable, dir: &Path, prefix: &str) -> Result<()> {
    write_csv(table, &dir.join(format!("{prefix}summary.csv")))?;
    for metric in [Metric::Mse, Metric::Bias, Metric::Variance] {
        render_svg(table, metric, &dir.join(format!("{prefix}{}.svg", metric.as_str())))?;
    }
    Ok(())
}

fn minima_text(table: &SummaryTable) -> String {
    let mut s = String::from("estimator,m,b,mse_1e3,n_missing\n");
    for &est in &table.estimators {
        for m in 1..=table.m_max {
            if let Some(r) = table.min_over_b(est, m) {
                s.push_str(&format!("{est},{m},{},{:.3},{}\n", r.b, r.mse_1e3(), r.n_missing));
            }
        }
    }
    s
}

fn experiment(a: ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(&a.config).map_err(|e| AppError::io(&a.config, e))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let table = experiments::run(&cfg, a.workers)?;
    create_dir(&a.out)?;
    write_study(&table, &a.out, "")?;
    emit(out, &minima_text(&table))
}

/// The three benchmark models in reporting order.
pub fn table1_models() -> [(&'static str, ModelKind); 3] {
    [
        ("ar", ModelKind::ArUniform { r: 4 }),
        ("armax", ModelKind::Armax { alpha: 0.5 }),
        ("sqarch", ModelKind::SqArch { lambda: 0.5 }),
    ]
}

fn table1(a: Table1Args, out: &mut dyn Write) -> Result<()> {
    create_dir(&a.out)?;
    let estimators = EstimatorId::ALL;
    let mut text = String::from("model,m,pi");
    for e in &estimators {
        text.push(',');
        text.push_str(e.label());
    }
    text.push('\n');
    for (name, kind) in table1_models() {
        let mut cfg = ExperimentConfig::standard(kind)?;
        cfg.n = a.n;
        cfg.reps = a.reps;
        cfg.master_seed = a.seed;
        let table = experiments::run(&cfg, a.workers)?;
        write_study(&table, &a.out, &format!("{name}_"))?;
        for m in 1..=cfg.m_max {
            text.push_str(&format!("{name},{m},{:.3}", cfg.truth.pi[m - 1]));
            for &e in &estimators {
                match table.min_over_b(e, m) {
                    Some(r) => text.push_str(&format!(",{:.3}", r.mse_1e3())),
                    None => text.push_str(",NaN"),
                }
            }
            text.push('\n');
        }
    }
    let path = a.out.join("table1.csv");
    fs::write(&path, &text).map_err(|e| AppError::io(&path, e))?;
    emit(out, &text)
}
