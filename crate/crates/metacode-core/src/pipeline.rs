//! End-to-end runs: initialize an observation from metadata, train the
//! embedder, explore under a query budget, and score each step against the
//! ground truth. Everything here is a pure function of the configuration,
//! so two identical runs produce byte-identical records.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{self, Dataset};
use crate::embed::{train, ModelParams, TrainOptions, TrainReport};
use crate::error::{Error, Result};
use crate::explore::QueryState;
use crate::graph::{NodeId, ObservedNetwork, QueryOracle};
use crate::init::{f_init, knn_init, MacOptions};
use crate::metrics::{evaluate, MetricScope};

/// How the next node to query is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryStrategy {
    /// Affiliation-guided: strong memberships plus novelty relative to the
    /// nodes already queried.
    Metacode,
    /// Uniform over the unqueried nodes (seeded).
    Rs,
    /// Depth-first over revealed edges, restarting at the lowest unqueried
    /// node.
    Dfs,
}

impl QueryStrategy {
    /// Stable lowercase name, as used in serialized records and CSV.
    pub fn name(self) -> &'static str {
        match self {
            QueryStrategy::Metacode => "metacode",
            QueryStrategy::Rs => "rs",
            QueryStrategy::Dfs => "dfs",
        }
    }
}

/// How the initial observation is built from node metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Boolean metadata clustering followed by affiliation-model edge
    /// sampling.
    MacAgm,
    /// k-nearest-neighbour graph on feature cosine similarity.
    Knn,
}

/// On-disk layout of the input dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// An ego-network bundle: `<id>.edges`, `<id>.feat`, `<id>.egofeat`,
    /// `<id>.circles` next to each other; the path names the `.edges` file.
    Ego,
    /// A directory with `meta.json`, `edges.tsv`, `features.tsv`,
    /// `communities.tsv`.
    Canonical,
}

/// Query budget, absolute or as a percentage of the node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    /// At most this many queries.
    Absolute(usize),
    /// At most `floor(pct * n / 100)` queries.
    Percent(f64),
}

impl Budget {
    /// Number of queries this budget allows on an `n`-node network, capped
    /// at `n` (every node can be queried at most once).
    pub fn resolve(self, n_nodes: usize) -> Result<usize> {
        let raw = match self {
            Budget::Absolute(b) => b,
            Budget::Percent(p) => {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "budget percentage must be finite and non-negative, got {p}"
                    )));
                }
                (p * n_nodes as f64 / 100.0).floor() as usize
            }
        };
        Ok(raw.min(n_nodes))
    }
}

/// Everything a run needs. Serialized into the run summary so an output
/// file records the exact configuration that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Dataset path (see [`DatasetFormat`] for what it must point at).
    pub dataset: PathBuf,
    /// Layout of `dataset`.
    pub format: DatasetFormat,
    /// Number of communities to detect; `None` takes the ground-truth
    /// count.
    pub communities: Option<usize>,
    /// Query budget.
    pub budget: Budget,
    /// Weight of the attribute-reconstruction loss term.
    pub eta: f64,
    /// Weight of the novelty term in the affiliation-guided query score.
    pub lambda: f64,
    /// Width of the hidden layer.
    pub hidden_dim: usize,
    /// Epochs for the initial training phase (and for every retrain when
    /// `retrain_from_scratch` is set).
    pub epochs_init: usize,
    /// Epochs for each incremental retrain after a query round.
    pub epochs_step: usize,
    /// Adam learning rate.
    pub lr: f64,
    /// Master seed; all randomness in the run derives from it.
    pub seed: u64,
    /// Node-selection rule during exploration.
    pub query_strategy: QueryStrategy,
    /// How the initial observation is inferred.
    pub init_strategy: InitStrategy,
    /// Neighbour count for [`InitStrategy::Knn`].
    pub knn_k: usize,
    /// Queries issued between retrains.
    pub queries_per_round: usize,
    /// Fixed membership threshold; `None` derives it from the observed
    /// edge density at each evaluation.
    pub delta: Option<f64>,
    /// Re-initialize the model and retrain fully after every round instead
    /// of warm-starting from the previous parameters.
    pub retrain_from_scratch: bool,
    /// Node scope for the metrics.
    pub scope: MetricScope,
    /// Where to write the JSONL records; `None` leaves that to the caller.
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::new(),
            format: DatasetFormat::Canonical,
            communities: None,
            budget: Budget::Percent(20.0),
            eta: 1.0,
            lambda: 1.0,
            hidden_dim: 128,
            epochs_init: 500,
            epochs_step: 100,
            lr: 1e-3,
            seed: 0,
            query_strategy: QueryStrategy::Metacode,
            init_strategy: InitStrategy::MacAgm,
            knn_k: 10,
            queries_per_round: 1,
            delta: None,
            retrain_from_scratch: false,
            scope: MetricScope::AllNodes,
            out: None,
        }
    }
}

/// One line of run output: the state after a query (or, for `t = 0`, after
/// initialization). Queries in the same round share that round's
/// post-retrain metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    /// Record-format version.
    pub schema: u32,
    /// Always `"step"`.
    pub record: String,
    /// Query counter; `0` is the state before any query.
    pub t: usize,
    /// The node queried at this step (`None` at `t = 0`).
    pub queried_node: Option<NodeId>,
    /// Nodes touched by exploration so far.
    pub n_explored: usize,
    /// Communities in the detected cover.
    pub n_detected: usize,
    /// Training loss after the round's retrain.
    pub loss: f64,
    /// Overlapping NMI against the ground truth.
    pub nmi: f64,
    /// Best-match F1 against the ground truth.
    pub f1: f64,
}

/// Final line of run output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    /// Record-format version.
    pub schema: u32,
    /// Always `"summary"`.
    pub record: String,
    /// Nodes in the network.
    pub n_nodes: usize,
    /// Queries actually issued.
    pub n_queries: usize,
    /// Nodes touched by exploration.
    pub n_explored: usize,
    /// Communities in the final detected cover.
    pub n_detected: usize,
    /// Final overlapping NMI.
    pub nmi: f64,
    /// Final best-match F1.
    pub f1: f64,
    /// Training loss after the last retrain.
    pub final_loss: f64,
    /// Whether the metadata clustering converged (always `true` for the
    /// k-NN initializer).
    pub init_converged: bool,
    /// The configuration that produced this run.
    pub config: RunConfig,
}

/// Complete output of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    /// Per-query records, `t = 0` first.
    pub steps: Vec<StepRecord>,
    /// The closing summary.
    pub summary: RunSummary,
}

/// Record-format version stamped into every serialized line.
pub const RECORD_SCHEMA: u32 = 1;

fn select_node(
    strategy: QueryStrategy,
    state: &mut QueryState,
    affiliations: &crate::embed::AffiliationMatrix,
    g: &ObservedNetwork,
) -> Result<NodeId> {
    match strategy {
        QueryStrategy::Metacode => state.select_metacode(affiliations),
        QueryStrategy::Rs => state.select_random(g.n_nodes()),
        QueryStrategy::Dfs => state.select_dfs(g),
    }
}

/// Run the full pipeline on an already-loaded dataset.
///
/// Phases: infer an initial observation from the metadata, train the
/// embedder on it, then alternate query rounds (`queries_per_round` each)
/// with retraining and evaluation until the budget is spent.
pub fn run_on(data: &Dataset, cfg: &RunConfig) -> Result<RunOutput> {
    let n = data.hidden.n_nodes();
    let truth = data.truth();
    let c = match cfg.communities {
        Some(0) => {
            return Err(Error::InvalidParameter(
                "need at least one community".into(),
            ))
        }
        Some(c) => c,
        None if truth.is_empty() => {
            return Err(Error::DegenerateInput(
                "dataset has no ground-truth communities; pass an explicit community count".into(),
            ))
        }
        None => truth.n_communities(),
    };
    if cfg.queries_per_round == 0 {
        return Err(Error::InvalidParameter(
            "queries_per_round must be positive".into(),
        ));
    }
    let budget = cfg.budget.resolve(n)?;

    let (mut g, init_converged) = match cfg.init_strategy {
        InitStrategy::MacAgm => {
            let (g, mac) = f_init(&data.features, c, cfg.seed, &MacOptions::default())?;
            (g, mac.converged)
        }
        InitStrategy::Knn => (knn_init(&data.features, cfg.knn_k)?, true),
    };

    let mut params = ModelParams::init(data.features.dim(), cfg.hidden_dim, c, cfg.seed)?;
    let init_opts = TrainOptions { eta: cfg.eta, epochs: cfg.epochs_init, lr: cfg.lr };
    let step_opts = TrainOptions { eta: cfg.eta, epochs: cfg.epochs_step, lr: cfg.lr };
    let mut report: TrainReport = train(&g, &data.features, &mut params, &init_opts)?;

    let mut steps = Vec::with_capacity(budget + 1);
    let mut eval = evaluate(&report.affiliations, &g, truth, cfg.delta, cfg.scope)?;
    steps.push(StepRecord {
        schema: RECORD_SCHEMA,
        record: "step".into(),
        t: 0,
        queried_node: None,
        n_explored: eval.n_explored,
        n_detected: eval.n_detected,
        loss: report.final_loss,
        nmi: eval.nmi,
        f1: eval.f1,
    });

    let mut oracle = QueryOracle::new(&data.hidden, budget);
    let mut state = QueryState::new(cfg.seed, cfg.lambda)?;
    let mut t = 0;
    while oracle.remaining() > 0 {
        let mut round: Vec<NodeId> = Vec::with_capacity(cfg.queries_per_round);
        for _ in 0..cfg.queries_per_round.min(oracle.remaining()) {
            let u = select_node(cfg.query_strategy, &mut state, &report.affiliations, &g)?;
            let neighbors = oracle.query(u)?;
            g.integrate_query(u, &neighbors)?;
            state.note_query(u, &neighbors);
            round.push(u);
        }

        if cfg.retrain_from_scratch {
            params = ModelParams::init(data.features.dim(), cfg.hidden_dim, c, cfg.seed)?;
            report = train(&g, &data.features, &mut params, &init_opts)?;
        } else {
            report = train(&g, &data.features, &mut params, &step_opts)?;
        }
        eval = evaluate(&report.affiliations, &g, truth, cfg.delta, cfg.scope)?;
        for u in round {
            t += 1;
            steps.push(StepRecord {
                schema: RECORD_SCHEMA,
                record: "step".into(),
                t,
                queried_node: Some(u),
                n_explored: eval.n_explored,
                n_detected: eval.n_detected,
                loss: report.final_loss,
                nmi: eval.nmi,
                f1: eval.f1,
            });
        }
    }

    let summary = RunSummary {
        schema: RECORD_SCHEMA,
        record: "summary".into(),
        n_nodes: n,
        n_queries: t,
        n_explored: eval.n_explored,
        n_detected: eval.n_detected,
        nmi: eval.nmi,
        f1: eval.f1,
        final_loss: report.final_loss,
        init_converged,
        config: cfg.clone(),
    };
    Ok(RunOutput { steps, summary })
}

/// Load the dataset named by the configuration.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    match cfg.format {
        DatasetFormat::Ego => {
            let (dir, ego_id) = dataset::split_ego_path(&cfg.dataset)?;
            dataset::load_ego_network(&dir, &ego_id)
        }
        DatasetFormat::Canonical => dataset::load_canonical(&cfg.dataset),
    }
}

/// Serialize a run as JSON Lines: one step per line, summary last.
pub fn write_jsonl(out: &RunOutput, w: &mut impl Write) -> Result<()> {
    for step in &out.steps {
        serde_json::to_writer(&mut *w, step)?;
        writeln!(w)?;
    }
    serde_json::to_writer(&mut *w, &out.summary)?;
    writeln!(w)?;
    Ok(())
}

/// Load the dataset, run the pipeline, and (if configured) write the JSONL
/// records to `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let data = load_dataset(cfg)?;
    let output = run_on(&data, cfg)?;
    if let Some(path) = &cfg.out {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_jsonl(&output, &mut file)?;
        file.flush()?;
    }
    Ok(output)
}

/// Grid of runs: every query strategy crossed with every budget, averaged
/// over seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Template configuration; strategy, budget and seed are overridden
    /// per cell.
    pub base: RunConfig,
    /// Strategies to compare.
    pub strategies: Vec<QueryStrategy>,
    /// Budgets as percentages of the node count.
    pub budget_pcts: Vec<f64>,
    /// Seeds averaged within each cell.
    pub seeds: Vec<u64>,
}

/// Aggregated results for one (strategy, budget) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    /// Query strategy of this cell.
    pub strategy: QueryStrategy,
    /// Budget as a percentage of the node count.
    pub budget_pct: f64,
    /// Runs that completed.
    pub n_runs: usize,
    /// Mean final NMI over the completed runs.
    pub nmi_mean: f64,
    /// Sample standard deviation of the final NMI.
    pub nmi_std: f64,
    /// Mean final F1.
    pub f1_mean: f64,
    /// Sample standard deviation of the final F1.
    pub f1_std: f64,
    /// Mean explored-node count.
    pub n_explored_mean: f64,
    /// Sample standard deviation of the explored-node count.
    pub n_explored_std: f64,
    /// Error strings from runs that failed (excluded from the statistics).
    pub errors: Vec<String>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Run the whole grid on one dataset. Cells run in parallel; within a cell
/// the seeds run in order, and the output order is the deterministic
/// strategy-major, budget-minor grid order.
pub fn sweep(data: &Dataset, spec: &SweepSpec) -> Vec<SweepCell> {
    use rayon::prelude::*;

    let cells: Vec<(QueryStrategy, f64)> = spec
        .strategies
        .iter()
        .flat_map(|&s| spec.budget_pcts.iter().map(move |&p| (s, p)))
        .collect();
    cells
        .into_par_iter()
        .map(|(strategy, pct)| {
            let mut nmis = Vec::new();
            let mut f1s = Vec::new();
            let mut explored = Vec::new();
            let mut errors = Vec::new();
            for &seed in &spec.seeds {
                let cfg = RunConfig {
                    query_strategy: strategy,
                    budget: Budget::Percent(pct),
                    seed,
                    out: None,
                    ..spec.base.clone()
                };
                match run_on(data, &cfg) {
                    Ok(out) => {
                        nmis.push(out.summary.nmi);
                        f1s.push(out.summary.f1);
                        explored.push(out.summary.n_explored as f64);
                    }
                    Err(e) => errors.push(format!("seed {seed}: {e}")),
                }
            }
            let (nmi_mean, nmi_std) = mean_std(&nmis);
            let (f1_mean, f1_std) = mean_std(&f1s);
            let (n_explored_mean, n_explored_std) = mean_std(&explored);
            SweepCell {
                strategy,
                budget_pct: pct,
                n_runs: nmis.len(),
                nmi_mean,
                nmi_std,
                f1_mean,
                f1_std,
                n_explored_mean,
                n_explored_std,
                errors,
            }
        })
        .collect()
}

/// Write the exploration curve of a sweep as CSV, ordered by budget then
/// strategy name.
pub fn emit_exploration_curve(cells: &[SweepCell], w: &mut impl Write) -> Result<()> {
    writeln!(w, "budget_pct,strategy,n_explored_mean,n_explored_std")?;
    let mut rows: Vec<&SweepCell> = cells.iter().collect();
    rows.sort_by(|a, b| {
        a.budget_pct
            .partial_cmp(&b.budget_pct)
            .expect("budgets are finite")
            .then_with(|| a.strategy.name().cmp(b.strategy.name()))
    });
    for cell in rows {
        writeln!(
            w,
            "{},{},{},{}",
            cell.budget_pct,
            cell.strategy.name(),
            cell.n_explored_mean,
            cell.n_explored_std
        )?;
    }
    Ok(())
}

/// Convert a dataset in place: load it as `format` and write the canonical
/// layout to `out_dir`.
pub fn convert(dataset: &Path, format: DatasetFormat, out_dir: &Path) -> Result<()> {
    let cfg = RunConfig {
        dataset: dataset.to_path_buf(),
        format,
        ..RunConfig::default()
    };
    let data = load_dataset(&cfg)?;
    dataset::write_canonical(out_dir, &data)
}
