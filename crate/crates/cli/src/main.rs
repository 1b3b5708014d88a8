use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use prp_core::classic::{cochran_q, egger_test};
use prp_core::dc::{gamma_levels, DEFAULT_TARGETS};
use prp_core::grid::{default_lambda, reference_model_from, LambdaSet, ScenarioInput};
use prp_core::io::{
    parse_exchangeable_table, parse_two_group_table, write_replicates_csv, write_summary_csv,
    ClassicDocument, Histogram, Method, PlotData, ResultDocument,
};
use prp_core::posterior::{posterior_prp, PosteriorPrpConfig, Quantity, DEFAULT_DRAWS};
use prp_core::prior::{predictive_interval, prior_prp, prior_prp_pub_bias};
use prp_core::sim::{
    sensitivity_sweep, BatchParameter, BatchSimConfig, Design, PubBiasSimConfig, Scenario,
    SweepOutput,
};
use prp_core::{Error, ErrorKind, ReferenceModel, Sidedness};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(
    name = "prp",
    version,
    about = "Replication p-values for reproducibility assessment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prior-predictive p-value for one original and one replication.
    TwoGroup(TwoGroupArgs),
    /// Posterior-predictive p-value for two or more exchangeable experiments.
    Exchangeable(ExchangeableArgs),
    /// Simulation sweeps writing replicate and summary CSV tables.
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Args)]
struct ModelArgs {
    /// Sign-consistency targets defining the heterogeneity levels.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TARGETS.to_vec())]
    gamma_targets: Vec<f64>,
    /// Replace the data-adaptive total variances with these values.
    #[arg(long, value_delimiter = ',')]
    lambda_override: Option<Vec<f64>>,
}

impl ModelArgs {
    fn build(&self, input: ScenarioInput<'_>) -> Result<ReferenceModel, Error> {
        let levels = gamma_levels(&self.gamma_targets)?;
        let lambda = match &self.lambda_override {
            Some(values) => LambdaSet::new(values.clone())?,
            None => default_lambda(input)?,
        };
        reference_model_from(&lambda, &levels)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Sided {
    Two,
    High,
    Low,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Statistic {
    Default,
    PubBias,
}

#[derive(Args)]
struct TwoGroupArgs {
    /// CSV with header `study_id,role,beta_hat,se`.
    input: PathBuf,
    #[arg(long, value_enum)]
    sided: Option<Sided>,
    #[arg(long, value_enum, default_value = "default")]
    statistic: Statistic,
    /// Predictive interval covers `1 − alpha`.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    model: ModelArgs,
    /// Recorded in the output document.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Q,
    Egger,
}

#[derive(Args)]
struct ExchangeableArgs {
    /// CSV with header `study_id,beta_hat,se`.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "q")]
    quantity: QuantityArg,
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    draws: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Add Cochran's Q and Egger's test results.
    #[arg(long)]
    classic: bool,
    /// Report `(l+1)/(L+1)` instead of `l/L`.
    #[arg(long)]
    smoothed: bool,
    /// Add forest and funnel plot data at this interval level.
    #[arg(long)]
    plot_level: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DesignArg {
    TwoGroup,
    Exchangeable,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VaryArg {
    Eta,
    RepSd,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Flagging threshold for the summary table.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Posterior draws per dataset in exchangeable designs.
    #[arg(long, default_value_t = 2000)]
    draws: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Case-control experiments contaminated by batch effects.
    Batch(BatchArgs),
    /// Logistic-regression experiments subject to selective publication.
    Pubbias(PubBiasArgs),
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long, value_enum, default_value = "two-group")]
    design: DesignArg,
    /// Batch-effect standard deviations.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.3, 0.6, 1.0])]
    eta: Vec<f64>,
    /// Which parameter the sweep varies (two-group design only).
    #[arg(long, value_enum, default_value = "eta")]
    vary: VaryArg,
    /// Residual sd of the replication (two-group design).
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
    rep_residual_sd: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    n_per_group: usize,
    #[arg(long, default_value_t = 0.5)]
    true_effect: f64,
    #[arg(long, default_value_t = 1.0)]
    residual_sd: f64,
    #[arg(long, default_value_t = 0.7)]
    label_corr: f64,
    #[command(flatten)]
    sweep: SweepArgs,
}

#[derive(Args)]
struct PubBiasArgs {
    #[arg(long, value_enum, default_value = "two-group")]
    design: DesignArg,
    /// Hard-censoring thresholds on the original's p-value (two-group design).
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 0.05, 0.01])]
    p_threshold: Vec<f64>,
    /// Soft-censoring strengths (exchangeable design).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 10.0, 100.0])]
    c: Vec<f64>,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    odds_ratio: f64,
    #[command(flatten)]
    sweep: SweepArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(e) = configure_threads() {
        return report(&e);
    }
    let outcome = match &cli.command {
        Command::TwoGroup(args) => run_two_group(args),
        Command::Exchangeable(args) => run_exchangeable(args),
        Command::Simulate(cmd) => run_simulate(cmd),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(match e.kind() {
        ErrorKind::Input => EXIT_INPUT,
        ErrorKind::Numeric => EXIT_NUMERIC,
        ErrorKind::Config => EXIT_CONFIG,
    })
}

/// Caps the worker pool at `PRP_THREADS`; results do not depend on it.
fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("PRP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Config(format!(
            "PRP_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn read_input(path: &Path) -> Result<fs::File, Error> {
    fs::File::open(path).map_err(|e| Error::Parse {
        line: 0,
        reason: format!("cannot open {}: {e}", path.display()),
    })
}

fn emit(doc: &ResultDocument, out: Option<&Path>) -> Result<(), Error> {
    let json = doc.to_json()?;
    match out {
        Some(path) => fs::write(path, json)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(json.as_bytes())
            .map_err(|e| Error::Config(format!("cannot write to stdout: {e}"))),
    }
}

fn run_two_group(args: &TwoGroupArgs) -> Result<(), Error> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Config(format!(
            "--alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }
    let pair = parse_two_group_table(read_input(&args.input)?)?;
    let model = args.model.build(ScenarioInput::TwoGroup(&pair))?;
    let (method, mut result) = match (args.statistic, args.sided) {
        (Statistic::PubBias, Some(_)) => {
            return Err(Error::Config(
                "--sided does not apply to --statistic pub-bias".into(),
            ))
        }
        (Statistic::PubBias, None) => (Method::PriorPrpPubBias, prior_prp_pub_bias(&pair, &model)?),
        (Statistic::Default, sided) => {
            let sidedness = match sided.unwrap_or(Sided::Two) {
                Sided::Two => Sidedness::TwoSided,
                Sided::High => Sidedness::OneSidedHigh,
                Sided::Low => Sidedness::OneSidedLow,
            };
            (Method::PriorPrp, prior_prp(&pair, &model, sidedness)?)
        }
    };
    result.predictive_interval = Some(predictive_interval(
        &pair.original,
        pair.replication.se,
        &model,
        args.alpha,
    )?);
    let doc = ResultDocument::new(method, Design::TwoGroup, &result, &model, args.seed, None);
    emit(&doc, args.out.as_deref())
}

fn run_exchangeable(args: &ExchangeableArgs) -> Result<(), Error> {
    let studies = parse_exchangeable_table(read_input(&args.input)?)?;
    if studies.len() < 2 {
        return Err(Error::TooFewStudies {
            required: 2,
            got: studies.len(),
        });
    }
    if args.draws == 0 {
        return Err(Error::Config("--draws must be positive".into()));
    }
    if let Some(level) = args.plot_level {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Config(format!(
                "--plot-level must lie in (0, 1), got {level}"
            )));
        }
    }
    let model = args.model.build(ScenarioInput::Exchangeable(&studies))?;
    let quantity = match args.quantity {
        QuantityArg::Q => Quantity::Q,
        QuantityArg::Egger => Quantity::Egger,
    };
    let config = PosteriorPrpConfig {
        draws: args.draws,
        seed: args.seed,
        smoothed: args.smoothed,
    };
    let result = posterior_prp(&studies, &model, &quantity, &config)?;
    let mut doc = ResultDocument::new(
        Method::PosteriorPrp,
        Design::Exchangeable,
        &result,
        &model,
        args.seed,
        Some(args.draws),
    );
    if args.classic {
        doc.classic = Some(ClassicDocument {
            cochran_q: Some(cochran_q(&studies)?),
            // Egger's regression needs three studies and distinct standard errors
            egger: egger_test(&studies).ok(),
        });
    }
    doc.plot_data = args
        .plot_level
        .map(|level| PlotData::from_studies(&studies, level));
    emit(&doc, args.out.as_deref())
}

fn single(values: &[f64], flag: &str) -> Result<f64, Error> {
    match values {
        [v] => Ok(*v),
        _ => Err(Error::Config(format!("{flag} takes a single value here"))),
    }
}

fn run_simulate(cmd: &SimulateCommand) -> Result<(), Error> {
    let (scenario, magnitudes, sweep) = match cmd {
        SimulateCommand::Batch(a) => {
            let mut config = match a.design {
                DesignArg::TwoGroup => BatchSimConfig::two_group(),
                DesignArg::Exchangeable => BatchSimConfig::exchangeable(),
            };
            config.n_per_group = a.n_per_group;
            config.true_effect = a.true_effect;
            config.residual_sd = a.residual_sd;
            config.batch_label_corr = a.label_corr;
            match (a.design, a.vary) {
                (DesignArg::TwoGroup, VaryArg::Eta) => {
                    config.replication_residual_sd =
                        single(&a.rep_residual_sd, "--rep-residual-sd")?;
                    let s = Scenario::BatchTwoGroup {
                        config,
                        vary: BatchParameter::Eta,
                    };
                    (s, a.eta.clone(), &a.sweep)
                }
                (DesignArg::TwoGroup, VaryArg::RepSd) => {
                    config.eta = single(&a.eta, "--eta")?;
                    let s = Scenario::BatchTwoGroup {
                        config,
                        vary: BatchParameter::ReplicationResidualSd,
                    };
                    (s, a.rep_residual_sd.clone(), &a.sweep)
                }
                (DesignArg::Exchangeable, VaryArg::Eta) => {
                    let s = Scenario::BatchExchangeable {
                        config,
                        draws: a.sweep.draws,
                    };
                    (s, a.eta.clone(), &a.sweep)
                }
                (DesignArg::Exchangeable, VaryArg::RepSd) => {
                    return Err(Error::Config(
                        "--vary rep-sd applies to the two-group design only".into(),
                    ))
                }
            }
        }
        SimulateCommand::Pubbias(a) => {
            let mut config = match a.design {
                DesignArg::TwoGroup => PubBiasSimConfig::two_group(),
                DesignArg::Exchangeable => PubBiasSimConfig::exchangeable(),
            };
            config.odds_ratio = a.odds_ratio;
            match a.design {
                DesignArg::TwoGroup => (
                    Scenario::PubBiasTwoGroup { config },
                    a.p_threshold.clone(),
                    &a.sweep,
                ),
                DesignArg::Exchangeable => (
                    Scenario::PubBiasExchangeable {
                        config,
                        draws: a.sweep.draws,
                    },
                    a.c.clone(),
                    &a.sweep,
                ),
            }
        }
    };
    let output = sensitivity_sweep(&scenario, &magnitudes, sweep.reps, sweep.alpha, sweep.seed)?;
    write_sweep(&output, &sweep.out_dir)
}

fn write_sweep(output: &SweepOutput, dir: &Path) -> Result<(), Error> {
    let io_err = |path: &Path, e: &dyn std::fmt::Display| {
        Error::Config(format!("cannot write {}: {e}", path.display()))
    };
    fs::create_dir_all(dir).map_err(|e| io_err(dir, &e))?;
    let create = |name: &str| {
        let path = dir.join(name);
        fs::File::create(&path).map_err(|e| io_err(&path, &e))
    };
    write_replicates_csv(&output.records, create("replicates.csv")?)?;
    write_summary_csv(&output.summary, create("summary.csv")?)?;

    // p-value histograms per (magnitude, method) for plotting
    let mut hist = String::from("magnitude,method,bin_lower,bin_upper,count\n");
    for row in &output.summary {
        let ps: Vec<f64> = output
            .records
            .iter()
            .filter(|r| r.magnitude == row.magnitude && r.method == row.method)
            .map(|r| r.p_value)
            .collect();
        let h = Histogram::new(&ps, 0.0, 1.0, 20);
        for (i, count) in h.counts.iter().enumerate() {
            hist.push_str(&format!(
                "{},{},{},{},{}\n",
                row.magnitude,
                row.method,
                h.edges[i],
                h.edges[i + 1],
                count
            ));
        }
    }
    let path = dir.join("histograms.csv");
    fs::write(&path, hist).map_err(|e| io_err(&path, &e))
}
