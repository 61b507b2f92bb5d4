//! End-to-end orchestration: feature extraction for one network, training on
//! generated networks, and CSV input and output.

pub mod config;
pub mod io;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use thiserror::Error;

pub use config::{PipelineConfig, TrainConfig};

use crate::basic::basic_features;
use crate::combine::{feature_names, feature_sum, rank_curve, select_features, train_forest, FeatureMatrix, RegressionForest};
use crate::community::{community_features, detect_communities};
use crate::generators::bounds::{training_grid, Regime};
use crate::generators::{generate_weighted_er, plant_anomalies, GeneratorError, PlantConfig};
use crate::graph::{GroundTruth, WeightedDigraph};
use crate::metrics::average_precision;
use crate::netemd::netemd_features;
use crate::pathfinder::path_features;
use crate::seed::{self, stream};
use crate::spectral::localisation::localisation_features;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String, partial: Option<Box<FeatureMatrix>> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Errors caused by the caller's input rather than by a failing computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Self::Config(_) | Self::Input(_))
    }
}

fn run_stage<T>(
    stage: &'static str,
    partial: &FeatureMatrix,
    timings: &mut Vec<(String, f64)>,
    f: impl FnOnce() -> T,
) -> Result<T, PipelineError> {
    let start = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(f)).map_err(|e| {
        let message = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        PipelineError::Stage { stage, message, partial: Some(Box::new(partial.clone())) }
    })?;
    timings.push((stage.to_string(), start.elapsed().as_secs_f64()));
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectDiagnostics {
    pub communities: usize,
    pub small_communities: usize,
    pub augmented_edges: usize,
    pub augmentation_threshold: f64,
    pub localisation_large_number_vectors: usize,
    pub localisation_replica_failures: usize,
    pub netemd_significant_tests: usize,
    pub netemd_replica_failures: usize,
    /// Significant paths per size from 3 upwards.
    pub significant_paths: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub features: FeatureMatrix,
    pub diagnostics: DetectDiagnostics,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(String, f64)>,
}

impl Detection {
    pub fn feature_sum(&self) -> Vec<f64> {
        feature_sum(&self.features)
    }
}

fn col(names: &[String], name: &str) -> usize {
    names.iter().position(|n| n == name).expect("schema column")
}

/// Runs every feature stage on `g` and fills the 140-column matrix.
pub fn run_detect(g: &WeightedDigraph, cfg: &PipelineConfig) -> Result<Detection, PipelineError> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(PipelineError::Input("graph has no nodes".into()));
    }
    let names = feature_names();
    let mut m = FeatureMatrix::zeros(g.labels().to_vec());
    let mut timings = Vec::new();
    let mut diag = DetectDiagnostics::default();
    let master = cfg.seed;

    let basic = run_stage("basic", &m, &mut timings, || {
        basic_features(g, &cfg.basic, seed::derive(master, &[stream::BASIC]))
    })?;
    m.set_column(col(&names, "std_degree"), &basic.std_degree);
    m.set_column(col(&names, "gaw"), &basic.gaw);
    m.set_column(col(&names, "gaw_top10"), &basic.gaw_top10);
    m.set_column(col(&names, "gaw_top20"), &basic.gaw_top20);

    let (aug, part) = run_stage("community detection", &m, &mut timings, || {
        detect_communities(g, cfg.community.resolution, seed::derive(master, &[stream::COMMUNITY]))
    })?;
    diag.communities = part.len();
    diag.small_communities = part.communities.iter().filter(|c| c.len() < crate::community::SMALL_COMMUNITY).count();
    diag.augmented_edges = aug.added.len();
    diag.augmentation_threshold = aug.threshold;

    let comm = run_stage("community tests", &m, &mut timings, || {
        community_features(g, &part, &cfg.community, seed::derive(master, &[stream::COMMUNITY_NULL]))
    })?;
    for (name, values) in [
        ("comm_density_full", &comm.density_full),
        ("comm_density_avg", &comm.density_avg),
        ("comm_gaw_full", &comm.gaw_full),
        ("comm_gaw_avg", &comm.gaw_avg),
        ("comm_density_config", &comm.density_config),
        ("small_comm_flag", &comm.small_flag),
    ] {
        m.set_column(col(&names, name), values);
    }

    let (paths, pdiag) = run_stage("pathfinder", &m, &mut timings, || {
        path_features(g, &cfg.path, seed::derive(master, &[stream::PATHS]))
    })?;
    m.set_block(col(&names, "path_3"), &paths);
    diag.significant_paths = pdiag.significant;

    let (emd, ediag) = run_stage("netemd", &m, &mut timings, || {
        netemd_features(g, &aug.graph, &part.communities, &cfg.netemd, seed::derive(master, &[stream::NETEMD]))
    })?;
    m.set_block(col(&names, "motif_1_score1"), &emd);
    diag.netemd_significant_tests = ediag.significant_tests;
    diag.netemd_replica_failures = ediag.replica_failures;

    let (loc, ldiag) = run_stage("localisation", &m, &mut timings, || {
        localisation_features(
            &aug.graph,
            &part.communities,
            &cfg.localisation,
            seed::derive(master, &[stream::LOCALISATION]),
        )
    })?;
    m.set_block(col(&names, "adj_upper_ipr_norm1"), &loc);
    diag.localisation_large_number_vectors = ldiag.large_number_vectors;
    diag.localisation_replica_failures = ldiag.replica_failures;

    Ok(Detection { features: m, diagnostics: diag, timings })
}

/// Weighted ER graph with planted structures.
pub fn synthetic_er(
    n: usize,
    regime: Regime,
    plant: &PlantConfig,
    network_seed: u64,
    plant_seed: u64,
) -> Result<(WeightedDigraph, GroundTruth), GeneratorError> {
    let g = generate_weighted_er(n, regime.p, network_seed)?;
    plant_anomalies(&g, regime.w, plant, plant_seed)
}

/// Features and labels of one generated network.
#[derive(Debug, Clone)]
pub struct LabelledNetwork {
    pub regime: usize,
    pub index: usize,
    pub features: FeatureMatrix,
    pub truth: Vec<bool>,
}

/// Average precision of the feature sum and the forest on a held-out network;
/// `None` when the network has no anomalies.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOut {
    pub regime: usize,
    pub index: usize,
    pub anomalies: usize,
    pub feature_sum_ap: Option<f64>,
    pub forest_ap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Training {
    pub regimes: Vec<Regime>,
    /// Importance vector of each regime's forest over all 140 features.
    pub importances: Vec<Vec<f64>>,
    pub selected: Vec<String>,
    /// `(position, feature, average rank)`.
    pub rank_curve: Vec<(usize, String, f64)>,
    pub forest: RegressionForest,
    pub held_out: Vec<HeldOut>,
}

fn pooled(nets: &[&LabelledNetwork]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for n in nets {
        x.extend(n.features.rows().iter().cloned());
        y.extend(n.truth.iter().map(|&t| if t { 1.0 } else { 0.0 }));
    }
    (x, y)
}

fn training_error(e: crate::combine::CombineError) -> PipelineError {
    PipelineError::Stage { stage: "training", message: e.to_string(), partial: None }
}

/// Per-regime forests, averaged importance ranks, selection of `cfg.cutoff`
/// features and a final forest on the pooled training networks.
/// `train[r]` and `test[r]` hold regime `r`'s networks.
pub fn train_on(
    regimes: &[Regime],
    train: &[Vec<LabelledNetwork>],
    test: &[Vec<LabelledNetwork>],
    cfg: &PipelineConfig,
) -> Result<Training, PipelineError> {
    if regimes.is_empty() || train.iter().all(Vec::is_empty) {
        return Err(PipelineError::Config("empty training grid".into()));
    }
    let names = feature_names();
    let mut importances = Vec::new();
    for (r, nets) in train.iter().enumerate() {
        let refs: Vec<&LabelledNetwork> = nets.iter().collect();
        let (x, y) = pooled(&refs);
        let f = train_forest(&x, &y, &names, &cfg.forest, seed::derive(cfg.seed, &[stream::FOREST, 0, r as u64]))
            .map_err(training_error)?;
        importances.push(f.importance);
    }
    let selected_idx = select_features(&importances, cfg.cutoff);
    let selected: Vec<String> = selected_idx.iter().map(|&i| names[i].clone()).collect();
    let curve = rank_curve(&importances).into_iter().map(|(k, i, r)| (k, names[i].clone(), r)).collect();
    let all: Vec<&LabelledNetwork> = train.iter().flatten().collect();
    let (x, y) = pooled(&all);
    let x: Vec<Vec<f64>> = x.iter().map(|row| selected_idx.iter().map(|&i| row[i]).collect()).collect();
    let forest = train_forest(&x, &y, &selected, &cfg.forest, seed::derive(cfg.seed, &[stream::FOREST, 1]))
        .map_err(training_error)?;
    let mut held_out = Vec::new();
    for net in test.iter().flatten() {
        let anomalies = net.truth.iter().filter(|&&t| t).count();
        let fs = average_precision(&feature_sum(&net.features), &net.truth).ok();
        let pred = forest.predict(&net.features).map_err(training_error)?;
        let fa = average_precision(&pred, &net.truth).ok();
        held_out.push(HeldOut { regime: net.regime, index: net.index, anomalies, feature_sum_ap: fs, forest_ap: fa });
    }
    Ok(Training { regimes: regimes.to_vec(), importances, selected, rank_curve: curve, forest, held_out })
}

/// The regimes used for training under `cfg`.
pub fn training_regimes(cfg: &TrainConfig) -> Vec<Regime> {
    let mut grid = training_grid(cfg.grid_n);
    if cfg.regimes > 0 {
        grid.truncate(cfg.regimes);
    }
    grid
}

/// Networks per regime used for training; at least one.
pub fn training_count(cfg: &TrainConfig) -> usize {
    ((cfg.networks as f64 * cfg.train_fraction).floor() as usize).clamp(1, cfg.networks)
}

/// Generates every network of the grid, extracts features, splits each regime
/// into its first `train_fraction` share for training and the rest for
/// testing, then trains.
pub fn run_train(cfg: &PipelineConfig) -> Result<Training, PipelineError> {
    cfg.validate()?;
    let regimes = training_regimes(&cfg.train);
    if regimes.is_empty() {
        return Err(PipelineError::Config("empty training grid".into()));
    }
    let split = training_count(&cfg.train);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (r, &regime) in regimes.iter().enumerate() {
        let (mut tr, mut te) = (Vec::new(), Vec::new());
        for i in 0..cfg.train.networks {
            let id = [r as u64, i as u64];
            let (g, truth) = synthetic_er(
                cfg.train.n,
                regime,
                &cfg.train.plant,
                seed::derive(cfg.seed, &[stream::NETWORK, id[0], id[1]]),
                seed::derive(cfg.seed, &[stream::ANOMALIES, id[0], id[1]]),
            )
            .map_err(|e| PipelineError::Config(e.to_string()))?;
            let net_cfg = PipelineConfig { seed: seed::derive(cfg.seed, &id), ..cfg.clone() };
            let det = run_detect(&g, &net_cfg)?;
            let net = LabelledNetwork { regime: r, index: i, features: det.features, truth: truth.anomalous };
            if i < split {
                tr.push(net);
            } else {
                te.push(net);
            }
        }
        train.push(tr);
        test.push(te);
    }
    train_on(&regimes, &train, &test, cfg)
}
