//! Command-line harness for the exploration pipeline: single runs, strategy
//! sweeps, exploration curves, dataset conversion, synthetic data and
//! gradient checking.
//!
//! Machine-readable results go to stdout (or `--out`); human-readable
//! progress notes go to stderr never mixing the two.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use metacode_core::dataset::{synth_planted, write_canonical, PlantedConfig};
use metacode_core::embed::{gradient_check, GradCheckConfig};
use metacode_core::pipeline::{
    self, Budget, DatasetFormat, InitStrategy, QueryStrategy, RunConfig, SweepSpec,
};
use metacode_core::MetricScope;

#[derive(Parser)]
#[command(
    name = "metacode",
    version,
    about = "Overlapping community detection on topologically unknown networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one exploration pipeline; emits one JSONL record per query.
    Run(RunArgs),
    /// Cross query strategies with budgets, averaged over seeds; emits JSON.
    Sweep(SweepArgs),
    /// Like `sweep`, but emits the exploration curve as CSV.
    Curve(SweepArgs),
    /// Read a dataset and write it in the canonical directory layout.
    Convert(ConvertArgs),
    /// Generate a synthetic planted-community dataset.
    Synth(SynthArgs),
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    /// SNAP-style ego bundle; the path names the files' shared stem.
    Ego,
    /// Directory with meta.json, edges.tsv, features.tsv, communities.tsv.
    Canonical,
}

impl From<FormatArg> for DatasetFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ego => DatasetFormat::Ego,
            FormatArg::Canonical => DatasetFormat::Canonical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    /// Affiliation-guided selection with a novelty bonus.
    Metacode,
    /// Seeded uniform random selection.
    Rs,
    /// Depth-first search over revealed edges.
    Dfs,
}

impl From<StrategyArg> for QueryStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Metacode => QueryStrategy::Metacode,
            StrategyArg::Rs => QueryStrategy::Rs,
            StrategyArg::Dfs => QueryStrategy::Dfs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    /// Boolean metadata clustering plus affiliation-model edge sampling.
    MacAgm,
    /// k-nearest-neighbour graph on feature cosine similarity.
    Knn,
}

impl From<InitArg> for InitStrategy {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::MacAgm => InitStrategy::MacAgm,
            InitArg::Knn => InitStrategy::Knn,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    /// Score over every node of the graph.
    AllNodes,
    /// Restrict both covers to the nodes the ground truth covers.
    CoveredOnly,
}

impl From<ScopeArg> for MetricScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::AllNodes => MetricScope::AllNodes,
            ScopeArg::CoveredOnly => MetricScope::CoveredOnly,
        }
    }
}

/// Model and training knobs shared by `run`, `sweep` and `curve`.
#[derive(Args)]
struct HyperArgs {
    /// Weight of the attribute-reconstruction loss term.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Weight of the novelty term in the query score.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Width of the hidden layer.
    #[arg(long, default_value_t = 128)]
    hidden_dim: usize,
    /// Epochs for the initial training phase.
    #[arg(long, default_value_t = 500)]
    epochs_init: usize,
    /// Epochs for each incremental retrain.
    #[arg(long, default_value_t = 100)]
    epochs_step: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    /// Number of communities to detect (default: the ground-truth count).
    #[arg(long)]
    communities: Option<usize>,
    /// How the initial observation is inferred.
    #[arg(long, value_enum, default_value_t = InitArg::MacAgm)]
    init: InitArg,
    /// Neighbour count for the knn initializer.
    #[arg(long, default_value_t = 10)]
    knn_k: usize,
    /// Queries issued between retrains.
    #[arg(long, default_value_t = 1)]
    queries_per_round: usize,
    /// Fixed membership threshold (default: derived from edge density).
    #[arg(long)]
    delta: Option<f64>,
    /// Re-initialize and retrain fully after every round.
    #[arg(long)]
    retrain_from_scratch: bool,
    /// Node scope for the metrics.
    #[arg(long, value_enum, default_value_t = ScopeArg::AllNodes)]
    scope: ScopeArg,
}

impl HyperArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.eta = self.eta;
        cfg.lambda = self.lambda;
        cfg.hidden_dim = self.hidden_dim;
        cfg.epochs_init = self.epochs_init;
        cfg.epochs_step = self.epochs_step;
        cfg.lr = self.lr;
        cfg.communities = self.communities;
        cfg.init_strategy = self.init.into();
        cfg.knn_k = self.knn_k;
        cfg.queries_per_round = self.queries_per_round;
        cfg.delta = self.delta;
        cfg.retrain_from_scratch = self.retrain_from_scratch;
        cfg.scope = self.scope.into();
    }
}

#[derive(Args)]
#[command(group(
    ArgGroup::new("budget-spec").required(true).args(["budget", "budget_pct"])
))]
struct RunArgs {
    /// Dataset path; an ego stem like data/facebook/0 or a canonical
    /// directory.
    #[arg(long)]
    dataset: PathBuf,
    /// Layout of the dataset path.
    #[arg(long, value_enum, default_value_t = FormatArg::Canonical)]
    format: FormatArg,
    /// Query budget as an absolute node count.
    #[arg(long)]
    budget: Option<usize>,
    /// Query budget as a percentage of the node count.
    #[arg(long)]
    budget_pct: Option<f64>,
    /// Node-selection rule during exploration.
    #[arg(long, value_enum, default_value_t = StrategyArg::Metacode)]
    strategy: StrategyArg,
    /// Master seed for all randomness in the run.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Write the JSONL records here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn to_config(&self) -> RunConfig {
        let mut cfg = RunConfig {
            dataset: self.dataset.clone(),
            format: self.format.into(),
            budget: match (self.budget, self.budget_pct) {
                (Some(b), _) => Budget::Absolute(b),
                (None, Some(p)) => Budget::Percent(p),
                (None, None) => unreachable!("clap enforces the budget group"),
            },
            query_strategy: self.strategy.into(),
            seed: self.seed,
            out: None,
            ..RunConfig::default()
        };
        self.hyper.apply(&mut cfg);
        cfg
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Dataset path; an ego stem like data/facebook/0 or a canonical
    /// directory.
    #[arg(long)]
    dataset: PathBuf,
    /// Layout of the dataset path.
    #[arg(long, value_enum, default_value_t = FormatArg::Canonical)]
    format: FormatArg,
    /// Query strategies to compare.
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [StrategyArg::Metacode, StrategyArg::Rs, StrategyArg::Dfs])]
    strategies: Vec<StrategyArg>,
    /// Budgets as percentages of the node count.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 20.0, 30.0, 40.0])]
    budgets: Vec<f64>,
    /// Seeds averaged within each (strategy, budget) cell.
    #[arg(long, value_delimiter = ',', default_values_t = [0u64])]
    seeds: Vec<u64>,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn to_spec(&self) -> SweepSpec {
        let mut base = RunConfig {
            dataset: self.dataset.clone(),
            format: self.format.into(),
            ..RunConfig::default()
        };
        self.hyper.apply(&mut base);
        SweepSpec {
            base,
            strategies: self.strategies.iter().map(|&s| s.into()).collect(),
            budget_pcts: self.budgets.clone(),
            seeds: self.seeds.clone(),
        }
    }
}

#[derive(Args)]
struct ConvertArgs {
    /// Dataset path; an ego stem like data/facebook/0 or a canonical
    /// directory.
    #[arg(long)]
    dataset: PathBuf,
    /// Layout of the dataset path.
    #[arg(long, value_enum, default_value_t = FormatArg::Ego)]
    format: FormatArg,
    /// Directory to write the canonical layout into.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 50)]
    nodes: usize,
    /// Number of planted communities.
    #[arg(long, default_value_t = 4)]
    communities: usize,
    /// Probability that a node joins a second community.
    #[arg(long, default_value_t = 0.3)]
    overlap: f64,
    /// Probability of flipping each feature bit after planting.
    #[arg(long, default_value_t = 0.0)]
    feature_noise: f64,
    /// Affiliation weight for each membership.
    #[arg(long, default_value_t = 1.0)]
    membership_weight: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory to write the canonical layout into.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Number of random instances.
    #[arg(long, default_value_t = 50)]
    instances: usize,
    /// Instance-generation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    fd_step: f64,
    /// Maximum acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

/// Write `text` to `--out` if given, else to stdout.
fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let mut f = BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            f.write_all(text.as_bytes())?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            stdout.lock().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = args.to_config();
    let output = pipeline::run(&cfg)?;
    if !output.summary.init_converged {
        eprintln!(
            "warning: metadata clustering did not converge; \
             proceeding with the best factorization found"
        );
    }
    let mut buf = Vec::new();
    pipeline::write_jsonl(&output, &mut buf)?;
    emit(&args.out, std::str::from_utf8(&buf).expect("JSON is UTF-8"))?;
    let s = &output.summary;
    eprintln!(
        "queries={} explored={}/{} detected={} nmi={:.4} f1={:.4} loss={:.4}",
        s.n_queries, s.n_explored, s.n_nodes, s.n_detected, s.nmi, s.f1, s.final_loss
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, as_curve: bool) -> anyhow::Result<()> {
    let spec = args.to_spec();
    let data = pipeline::load_dataset(&spec.base)?;
    let cells = pipeline::sweep(&data, &spec);
    let failed: usize = cells.iter().map(|c| c.errors.len()).sum();
    if failed > 0 {
        eprintln!("warning: {failed} run(s) failed; see the errors field of their cells");
    }
    let text = if as_curve {
        let mut buf = Vec::new();
        pipeline::emit_exploration_curve(&cells, &mut buf)?;
        String::from_utf8(buf).expect("CSV is UTF-8")
    } else {
        let mut text = serde_json::to_string_pretty(&cells)?;
        text.push('\n');
        text
    };
    emit(&args.out, &text)?;
    eprintln!(
        "{} cells ({} strategies x {} budgets, {} seeds each)",
        cells.len(),
        spec.strategies.len(),
        spec.budget_pcts.len(),
        spec.seeds.len()
    );
    Ok(())
}

fn cmd_convert(args: &ConvertArgs) -> anyhow::Result<()> {
    pipeline::convert(&args.dataset, args.format.into(), &args.out)?;
    eprintln!("wrote canonical dataset to {}", args.out.display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let cfg = PlantedConfig {
        n_nodes: args.nodes,
        n_communities: args.communities,
        overlap: args.overlap,
        feature_noise: args.feature_noise,
        membership_weight: args.membership_weight,
        seed: args.seed,
    };
    let data = synth_planted(&cfg)?;
    write_canonical(&args.out, &data)?;
    eprintln!(
        "wrote {} nodes, {} edges, {} communities to {}",
        data.hidden.n_nodes(),
        data.hidden.n_edges(),
        data.truth().n_communities(),
        args.out.display()
    );
    Ok(())
}

fn cmd_gradcheck(args: &GradcheckArgs) -> anyhow::Result<ExitCode> {
    let cfg = GradCheckConfig {
        instances: args.instances,
        seed: args.seed,
        fd_step: args.fd_step,
        tolerance: args.tolerance,
    };
    let report = gradient_check(&cfg)?;
    let line = serde_json::json!({
        "instances": report.checks.len(),
        "max_rel_error": report.max_rel_error,
        "tolerance": report.tolerance,
        "passed": report.passed(),
    });
    println!("{line}");
    if report.passed() {
        eprintln!(
            "gradcheck passed: max relative error {:.3e} over {} instances",
            report.max_rel_error,
            report.checks.len()
        );
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "gradcheck FAILED: max relative error {:.3e} exceeds tolerance {:.3e}",
            report.max_rel_error, report.tolerance
        );
        Ok(ExitCode::FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|()| ExitCode::SUCCESS),
        Command::Sweep(args) => cmd_sweep(args, false).map(|()| ExitCode::SUCCESS),
        Command::Curve(args) => cmd_sweep(args, true).map(|()| ExitCode::SUCCESS),
        Command::Convert(args) => cmd_convert(args).map(|()| ExitCode::SUCCESS),
        Command::Synth(args) => cmd_synth(args).map(|()| ExitCode::SUCCESS),
        Command::Gradcheck(args) => cmd_gradcheck(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
