//! `netanom` command-line driver.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netanom::combine::{feature_names, rank_curve, FeatureMatrix, RegressionForest};
use netanom::generators::accenture::{generate_accenture, AccentureConfig};
use netanom::generators::bounds::{detectability_bound, training_grid, Regime, Shape};
use netanom::generators::PlantConfig;
use netanom::graph::{load_edge_list, write_edge_list, GroundTruth, LoadOptions, WeightedDigraph};
use netanom::oddball::{oddball_scores, RELATIONSHIPS};
use netanom::pipeline::io::{
    evaluate, manifest, read_importances, read_labels, read_scores, write_importances, write_rank_curve,
    write_report, write_scores,
};
use netanom::pipeline::{run_detect, run_train, synthetic_er, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(name = "netanom", version, about = "Anomalous node detection in weighted directed networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network with planted anomalies.
    #[command(subcommand)]
    Generate(Generate),
    /// Detectability bounds, or the training grid with --grid.
    Bounds {
        #[arg(long, default_value_t = 55_000)]
        n: usize,
        /// Structure sizes to report.
        #[arg(long, value_delimiter = ',', default_values_t = [5usize, 8, 10, 12, 20])]
        sizes: Vec<usize>,
        #[arg(long)]
        grid: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the 140 features of a network and rank its nodes.
    Detect {
        #[arg(long)]
        graph: PathBuf,
        /// Forest whose predictions are written as a second ranking.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate training networks, select features and fit the forest.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a feature matrix with a saved forest.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Oddball scores per relationship and summed.
    Oddball {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precision, recall and average precision of a ranking.
    Evaluate {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average-rank curve from per-regime importances.
    RankCurve {
        #[arg(long)]
        importances: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Generate {
    /// Weighted ER graph with planted paths, rings, stars, cliques and trees.
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        w: f64,
        #[arg(long, default_value_t = 5)]
        count_min: usize,
        #[arg(long, default_value_t = 20)]
        count_max: usize,
        #[arg(long, default_value_t = 5)]
        size_min: usize,
        #[arg(long, default_value_t = 20)]
        size_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Configuration-model network with planted cliques, rings and paths,
    /// degree parameters scaled to --n.
    Accenture {
        #[arg(long, default_value_t = 55_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// File of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides as `key=value`, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn out_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Writes through `f` into `path`, or to stdout when `path` is `None`.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Outcome {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w).and_then(|()| w.flush()).map_err(runtime)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(runtime)
        }
    }
}

fn write_manifest(dir: &Path, value: &serde_json::Value) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    fs::write(dir.join("manifest.json"), text + "\n").map_err(runtime)
}

fn load_config(args: &ConfigArgs) -> Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::default();
    if let Some(p) = &args.config {
        let text = fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
        cfg.apply_text(&text)?;
    }
    for o in &args.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| invalid(format!("override {o:?} is not key=value")))?;
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_graph(path: &Path) -> Result<WeightedDigraph, Failure> {
    load_edge_list(open(path)?, LoadOptions::default()).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write_network(dir: &Path, g: &WeightedDigraph, truth: &GroundTruth) -> Outcome {
    out_dir(dir)?;
    emit(Some(&dir.join("edges.csv")), |w| write_edge_list(g, w))?;
    emit(Some(&dir.join("truth.csv")), |w| truth.write(g, w))
}

fn generate(cmd: Generate) -> Outcome {
    match cmd {
        Generate::Er { n, p, w, count_min, count_max, size_min, size_max, seed, out } => {
            let plant = PlantConfig { count: (count_min, count_max), size: (size_min, size_max) };
            let (g, truth) = synthetic_er(
                n,
                Regime { p, w },
                &plant,
                netanom::seed::derive(seed, &[netanom::seed::stream::NETWORK]),
                netanom::seed::derive(seed, &[netanom::seed::stream::ANOMALIES]),
            )
            .map_err(invalid)?;
            write_network(&out, &g, &truth)?;
            let details = serde_json::json!({
                "generator": "er", "n": n, "p": p, "w": w, "seed": seed,
                "plant_count": [count_min, count_max], "plant_size": [size_min, size_max],
                "edges": g.edge_count(), "anomalous_nodes": truth.anomalous_count(),
            });
            write_manifest(&out, &manifest("generate er", &PipelineConfig::default(), &[], details))
        }
        Generate::Accenture { n, seed, out } => {
            let cfg = AccentureConfig::scaled(n);
            let (g, truth) = generate_accenture(&cfg, seed).map_err(invalid)?;
            write_network(&out, &g, &truth)?;
            let details = serde_json::json!({
                "generator": "accenture", "n": n, "seed": seed,
                "edges": g.edge_count(), "anomalous_nodes": truth.anomalous_count(),
                "heavy_floor": cfg.heavy_floor(),
            });
            write_manifest(&out, &manifest("generate accenture", &PipelineConfig::default(), &[], details))
        }
    }
}

fn bounds(n: usize, sizes: &[usize], grid: bool, out: Option<&Path>) -> Outcome {
    if n < 2 {
        return Err(invalid("n must be at least 2"));
    }
    if grid {
        let g = training_grid(n);
        return emit(out, |w| {
            writeln!(w, "p,w")?;
            g.iter().try_for_each(|r| writeln!(w, "{},{}", r.p, r.w))
        });
    }
    if let Some(k) = sizes.iter().find(|&&k| k < 3 || k > n) {
        return Err(invalid(format!("size {k} must lie in 3..={n}")));
    }
    emit(out, |w| {
        writeln!(w, "shape,size,bound")?;
        for &k in sizes {
            writeln!(w, "clique,{k},{}", detectability_bound(n, Shape::Clique(k)))?;
            writeln!(w, "ring,{k},{}", detectability_bound(n, Shape::Ring(k)))?;
            writeln!(w, "path,{k},{}", detectability_bound(n, Shape::Path(k)))?;
        }
        if n >= 9 {
            writeln!(w, "tree,9,{}", detectability_bound(n, Shape::Tree))?;
        }
        Ok(())
    })
}

fn load_forest(path: &Path) -> Result<RegressionForest, Failure> {
    RegressionForest::load(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn detect(graph: &Path, model: Option<&Path>, args: &ConfigArgs, out: &Path) -> Outcome {
    let cfg = load_config(args)?;
    let g = load_graph(graph)?;
    let forest = model.map(load_forest).transpose()?;
    out_dir(out)?;
    let det = match run_detect(&g, &cfg) {
        Ok(d) => d,
        Err(e) => {
            if let PipelineError::Stage { partial: Some(m), .. } = &e {
                let _ = emit(Some(&out.join("features.partial.csv")), |w| m.write_csv(w));
            }
            return Err(e.into());
        }
    };
    emit(Some(&out.join("features.csv")), |w| det.features.write_csv(w))?;
    emit(Some(&out.join("ranking_feature_sum.csv")), |w| write_scores(w, g.labels(), &det.feature_sum()))?;
    if let Some(f) = &forest {
        let pred = f.predict(&det.features).map_err(invalid)?;
        emit(Some(&out.join("ranking_forest.csv")), |w| write_scores(w, g.labels(), &pred))?;
    }
    let d = &det.diagnostics;
    let details = serde_json::json!({
        "graph": graph.display().to_string(),
        "model": model.map(|m| m.display().to_string()),
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "communities": d.communities,
        "small_communities": d.small_communities,
        "augmented_edges": d.augmented_edges,
        "augmentation_threshold": d.augmentation_threshold,
        "localisation_large_number_vectors": d.localisation_large_number_vectors,
        "localisation_replica_failures": d.localisation_replica_failures,
        "netemd_significant_tests": d.netemd_significant_tests,
        "netemd_replica_failures": d.netemd_replica_failures,
        "significant_paths_by_size": d.significant_paths,
    });
    write_manifest(out, &manifest("detect", &cfg, &det.timings, details))
}

fn train(args: &ConfigArgs, out: &Path) -> Outcome {
    let cfg = load_config(args)?;
    let start = std::time::Instant::now();
    let t = run_train(&cfg)?;
    out_dir(out)?;
    t.forest.save(&out.join("forest.json")).map_err(runtime)?;
    emit(Some(&out.join("selected_features.csv")), |w| {
        writeln!(w, "feature")?;
        t.selected.iter().try_for_each(|f| writeln!(w, "{f}"))
    })?;
    let regimes: Vec<(f64, f64)> = t.regimes.iter().map(|r| (r.p, r.w)).collect();
    emit(Some(&out.join("importances.csv")), |w| write_importances(w, &feature_names(), &regimes, &t.importances))?;
    emit(Some(&out.join("rank_curve.csv")), |w| write_rank_curve(w, &t.rank_curve))?;
    let fmt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    emit(Some(&out.join("held_out.csv")), |w| {
        writeln!(w, "p,w,network,anomalies,feature_sum_ap,forest_ap")?;
        t.held_out.iter().try_for_each(|h| {
            let r = t.regimes[h.regime];
            writeln!(w, "{},{},{},{},{},{}", r.p, r.w, h.index, h.anomalies, fmt(h.feature_sum_ap), fmt(h.forest_ap))
        })
    })?;
    let timings = vec![("train".to_string(), start.elapsed().as_secs_f64())];
    let details = serde_json::json!({ "regimes": regimes.len(), "selected": t.selected.len() });
    write_manifest(out, &manifest("train", &cfg, &timings, details))
}

fn predict(model: &Path, features: &Path, out: &Path) -> Outcome {
    let f = load_forest(model)?;
    let m = FeatureMatrix::read_csv(open(features)?).map_err(|e| invalid(format!("{}: {e}", features.display())))?;
    let pred = f.predict(&m).map_err(invalid)?;
    emit(Some(out), |w| write_scores(w, m.labels(), &pred))
}

fn oddball(graph: &Path, out: &Path) -> Outcome {
    let g = load_graph(graph)?;
    let s = oddball_scores(&g);
    out_dir(out)?;
    emit(Some(&out.join("oddball_relationships.csv")), |w| {
        writeln!(w, "node,{}", RELATIONSHIPS.join(","))?;
        for v in 0..g.node_count() {
            let vals: Vec<String> = s.per_relationship.iter().map(|r| r[v].to_string()).collect();
            writeln!(w, "{},{}", g.label(v), vals.join(","))?;
        }
        Ok(())
    })?;
    emit(Some(&out.join("oddball_sum.csv")), |w| write_scores(w, g.labels(), &s.total))?;
    let fits: Vec<serde_json::Value> = s
        .fits
        .iter()
        .zip(RELATIONSHIPS)
        .zip(&s.skipped)
        .map(|((f, name), skipped)| {
            serde_json::json!({
                "relationship": name,
                "log_intercept": f.map(|x| x.0),
                "exponent": f.map(|x| x.1),
                "skipped_nodes": skipped,
            })
        })
        .collect();
    let details = serde_json::json!({ "graph": graph.display().to_string(), "fits": fits });
    write_manifest(out, &manifest("oddball", &PipelineConfig::default(), &[], details))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Generate(g) => generate(g),
        Command::Bounds { n, sizes, grid, out } => bounds(n, &sizes, grid, out.as_deref()),
        Command::Detect { graph, model, config, out } => detect(&graph, model.as_deref(), &config, &out),
        Command::Train { config, out } => train(&config, &out),
        Command::Predict { model, features, out } => predict(&model, &features, &out),
        Command::Oddball { graph, out } => oddball(&graph, &out),
        Command::Evaluate { scores, truth, out } => {
            let s = read_scores(open(&scores)?)?;
            let t = read_labels(open(&truth)?)?;
            let r = evaluate(&s, &t)?;
            emit(out.as_deref(), |w| write_report(w, &r))
        }
        Command::RankCurve { importances, out } => {
            let (names, rows) = read_importances(open(&importances)?)?;
            let curve: Vec<(usize, String, f64)> =
                rank_curve(&rows).into_iter().map(|(k, i, r)| (k, names[i].clone(), r)).collect();
            emit(out.as_deref(), |w| write_rank_curve(w, &curve))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
