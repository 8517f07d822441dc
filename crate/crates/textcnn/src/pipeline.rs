//! The commands behind the CLI. Each writes into an output directory and is
//! byte-for-byte reproducible for a fixed config and seed.

use std::collections::HashSet;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use textcnn_core::analysis::{
    activation_graph, bridge_count_table, build_activation_matrix, correlation_matrix, count_correlated_pairs,
    find_bridges, kernel_class_table, label_kernels, top_ngrams_report, ActivationMatrix, Bridge, BridgeTable,
    ClassTable, CorrelationMatrix, GroupKey, KernelId, ProbeSets,
};
use textcnn_core::data::synthetic::{dataset_embeddings, marker_corpus, question_corpus};
use textcnn_core::data::{write_trec, Dataset, EmbeddingTable, Split};
use textcnn_core::model::{evaluate, train, EpochRecord, Model, ModelConfig};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{DatasetConfig, EmbeddingsConfig, GraphConfig, RunConfig};
use crate::formats::activations::{read_activations, write_activations};
use crate::formats::correlation::write_correlation;
use crate::formats::tables::{self, KernelTopList, PairTable};
use crate::io::{load_corpus, load_embeddings, save_embeddings, EmbeddingFormat};
use crate::svg::render_activation_graph;
use crate::{Error, Result};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ACTIVATIONS_FILE: &str = "activations.tsv";
pub const SUMMARY_FILE: &str = "summary.json";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    f(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// The corpus and embeddings a config names. File embeddings keep only the
/// corpus vocabulary.
pub fn load_inputs(cfg: &RunConfig) -> Result<(Dataset, EmbeddingTable)> {
    cfg.check_inputs()?;
    let dataset = match &cfg.dataset {
        DatasetConfig::Trec { .. } | DatasetConfig::Sst { .. } => {
            let (format, train, test) = cfg.dataset.corpus_files().expect("file-backed dataset");
            load_corpus(format, train, test)?
        }
        DatasetConfig::SyntheticQuestions {
            train,
            test,
            label_noise,
            seed,
        } => question_corpus(*train, *test, *label_noise, seed.unwrap_or(cfg.seed))?,
        DatasetConfig::SyntheticMarker {
            sentences,
            test_fraction,
            seed,
        } => marker_corpus(*sentences, *test_fraction, seed.unwrap_or(cfg.seed))?,
    };
    let table = match &cfg.embeddings {
        EmbeddingsConfig::Random { dim, seed } => dataset_embeddings(&dataset, *dim, seed.unwrap_or(cfg.seed))?,
        other => {
            let (format, path) = other.file().expect("file-backed embeddings");
            let vocab: HashSet<String> = dataset.sentences.iter().flat_map(|s| s.tokens.iter().cloned()).collect();
            load_embeddings(path, format, Some(&vocab))?
        }
    };
    if table.is_empty() {
        return Err(Error::Config("no corpus word has an embedding".into()));
    }
    Ok((dataset, table))
}

pub fn model_config(cfg: &RunConfig, dataset: &Dataset, table: &EmbeddingTable) -> Result<ModelConfig> {
    cfg.model.apply(table.dim(), dataset.num_classes(), cfg.seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub classes: Vec<String>,
    pub train: usize,
    pub test: usize,
    pub train_class_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSummary {
    pub source: String,
    pub dim: usize,
    pub vectors: usize,
    /// Fraction of corpus tokens without a vector.
    pub oov_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    pub seed: u64,
    pub dataset: DatasetSummary,
    pub embeddings: EmbeddingSummary,
    pub model: ModelConfig,
    pub epochs: usize,
    pub final_train_loss: f64,
    /// Test-split accuracy of the saved model; `null` without a test split.
    pub test_accuracy: Option<f64>,
    pub checkpoint: String,
    pub checkpoint_crc32: String,
}

fn embedding_summary(cfg: &RunConfig, dataset: &Dataset, table: &EmbeddingTable) -> EmbeddingSummary {
    let source = match &cfg.embeddings {
        EmbeddingsConfig::Random { .. } => "random".to_string(),
        other => {
            let (_, p) = other.file().expect("file-backed");
            p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
        }
    };
    let (mut total, mut oov) = (0usize, 0usize);
    for t in dataset.sentences.iter().flat_map(|s| &s.tokens) {
        total += 1;
        oov += usize::from(!table.contains(t));
    }
    EmbeddingSummary {
        source,
        dim: table.dim(),
        vectors: table.len(),
        oov_rate: if total == 0 { 0.0 } else { oov as f64 / total as f64 },
    }
}

pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochRecord>,
    pub manifest: TrainManifest,
}

pub fn metrics_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,test_accuracy\n");
    for r in history {
        let acc = r.test_accuracy.map_or(String::new(), |a| a.to_string());
        s.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, acc));
    }
    s
}

/// Trains on the config's data and writes the checkpoint, per-epoch
/// metrics and a manifest into `cfg.out_dir`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let (dataset, table) = load_inputs(cfg)?;
    let mc = model_config(cfg, &dataset, &table)?;
    create_dir(&cfg.out_dir)?;
    let mut model = Model::new(mc)?;
    log::info!(
        "training {} epochs on {} sentences",
        model.config.epochs,
        dataset.count(Split::Train)
    );
    let history = train(&mut model, &dataset, &table, |r| {
        log::info!(
            "epoch {}: loss {:.5}, test accuracy {}",
            r.epoch,
            r.train_loss,
            r.test_accuracy.map_or("n/a".into(), |a| format!("{a:.4}"))
        );
    })?;
    let test_accuracy = if dataset.count(Split::Test) > 0 {
        Some(evaluate(&model, &dataset, &table, Split::Test)?)
    } else {
        None
    };
    let ckpt = cfg.out_dir.join(CHECKPOINT_FILE);
    save_checkpoint(&model, &ckpt)?;
    let crc = crc32fast::hash(&fs::read(&ckpt).map_err(|e| Error::io(&ckpt, e))?);
    write_file(&cfg.out_dir.join(METRICS_FILE), metrics_csv(&history))?;
    let manifest = TrainManifest {
        seed: cfg.seed,
        dataset: DatasetSummary {
            name: dataset.name.clone(),
            classes: dataset.class_names.clone(),
            train: dataset.count(Split::Train),
            test: dataset.count(Split::Test),
            train_class_counts: dataset.class_counts(Split::Train),
        },
        embeddings: embedding_summary(cfg, &dataset, &table),
        model: model.config.clone(),
        epochs: history.len(),
        final_train_loss: history.last().map_or(f64::NAN, |r| r.train_loss),
        test_accuracy,
        checkpoint: CHECKPOINT_FILE.into(),
        checkpoint_crc32: format!("{crc:08x}"),
    };
    write_file(&cfg.out_dir.join(MANIFEST_FILE), to_json(&manifest))?;
    Ok(TrainOutcome {
        model,
        history,
        manifest,
    })
}

fn checkpoint_path(cfg: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit.map_or_else(|| cfg.out_dir.join(CHECKPOINT_FILE), Path::to_path_buf)
}

/// Probes every kernel of a checkpoint with the config's probe set.
pub fn probe_matrix(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<ActivationMatrix> {
    let ckpt = checkpoint_path(cfg, checkpoint);
    if !ckpt.is_file() {
        return Err(Error::Usage(format!("checkpoint {} not found; run `train` first", ckpt.display())));
    }
    let (dataset, table) = load_inputs(cfg)?;
    let model = load_checkpoint(&ckpt)?;
    if model.config.embed_dim != table.dim() || model.config.num_classes != dataset.num_classes() {
        return Err(Error::Config(format!(
            "checkpoint expects {}-d embeddings and {} classes, config gives {} and {}",
            model.config.embed_dim,
            model.config.num_classes,
            table.dim(),
            dataset.num_classes()
        )));
    }
    let probes = ProbeSets::extract(&dataset, &table, &model.config.windows, cfg.probe.split)?;
    log::info!("probing {} kernels", 2 * model.config.windows.len() * model.config.feature_maps);
    Ok(build_activation_matrix(&model, &probes, &table, &dataset.class_names)?)
}

pub fn save_activations(m: &ActivationMatrix, path: &Path) -> Result<()> {
    write_with(path, |out| write_activations(m, out))
}

pub fn load_activations(path: &Path) -> Result<ActivationMatrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_activations(BufReader::new(file), path)
}

/// Writes the activation export for a checkpoint; returns its path.
pub fn cmd_probe_export(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<PathBuf> {
    let m = probe_matrix(cfg, checkpoint)?;
    create_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join(ACTIVATIONS_FILE);
    save_activations(&m, &path)?;
    Ok(path)
}

/// Everything computed from one activation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub class_names: Vec<String>,
    pub correlations: Vec<CorrelationMatrix>,
    pub class_table: ClassTable,
    pub top_lists: Vec<KernelTopList>,
    pub pairs: PairTable,
    pub bridges: Vec<(GroupKey, Vec<Bridge>)>,
    pub bridge_counts: BridgeTable,
    pub summary: AnalysisSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub kernels: usize,
    pub probes: usize,
    pub degenerate: usize,
    /// One count per pair threshold.
    pub pairs: Vec<usize>,
    pub bridges: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer: u8,
    pub pairs: Vec<usize>,
    pub bridges: usize,
    /// Kernels per class, `Other` last.
    pub classes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub probe_split: String,
    pub pair_thresholds: Vec<f64>,
    pub bridge_low: f64,
    pub bridge_high: f64,
    pub classes: Vec<String>,
    pub groups: Vec<GroupSummary>,
    pub layers: Vec<LayerSummary>,
}

impl AnalysisSummary {
    pub fn layer(&self, layer: u8) -> Option<&LayerSummary> {
        self.layers.iter().find(|l| l.layer == layer)
    }
}

pub fn analyze(m: &ActivationMatrix, cfg: &crate::config::AnalysisConfig) -> Result<Analysis> {
    let mut correlations = Vec::with_capacity(m.groups.len());
    let mut reports = Vec::new();
    let mut top_lists = Vec::new();
    let mut pair_counts = Vec::new();
    let mut bridges = Vec::new();
    for g in &m.groups {
        let cm = correlation_matrix(g)?;
        pair_counts.push(count_correlated_pairs(&cm, &cfg.pair_thresholds)?);
        bridges.push((g.key, find_bridges(&cm, cfg.bridge_low, cfg.bridge_high)?));
        let labels = label_kernels(g)?;
        let k = cfg.top_k.min(g.records.len());
        for r in &labels {
            top_lists.push(KernelTopList {
                kernel: r.kernel,
                assigned: r.assigned,
                top: top_ngrams_report(g, r.kernel, k)?,
            });
        }
        reports.extend(labels);
        correlations.push(cm);
    }
    let class_table = kernel_class_table(&reports, &m.class_names)?;
    let pairs = PairTable {
        thresholds: cfg.pair_thresholds.clone(),
        groups: m.groups.iter().map(|g| g.key).collect(),
        counts: pair_counts,
    };
    let bridge_counts = bridge_count_table(&bridges);

    let mut layers: Vec<u8> = m.groups.iter().map(|g| g.key.layer).collect();
    layers.sort();
    layers.dedup();
    let summary = AnalysisSummary {
        probe_split: m.probe_split.clone(),
        pair_thresholds: cfg.pair_thresholds.clone(),
        bridge_low: cfg.bridge_low,
        bridge_high: cfg.bridge_high,
        classes: class_table.rows.clone(),
        groups: m
            .groups
            .iter()
            .zip(&correlations)
            .zip(&pairs.counts)
            .zip(&bridges)
            .map(|(((g, cm), p), (_, b))| GroupSummary {
                group: g.key.to_string(),
                kernels: g.kernels.len(),
                probes: g.records.len(),
                degenerate: cm.degenerate.iter().filter(|&&d| d).count(),
                pairs: p.clone(),
                bridges: b.len(),
            })
            .collect(),
        layers: layers
            .iter()
            .map(|&l| LayerSummary {
                layer: l,
                pairs: (0..cfg.pair_thresholds.len()).map(|i| pairs.layer_sum(l, i)).collect(),
                bridges: bridge_counts.layer_sum(l),
                classes: (0..class_table.rows.len()).map(|r| class_table.layer_sum(r, l)).collect(),
            })
            .collect(),
    };
    Ok(Analysis {
        class_names: m.class_names.clone(),
        correlations,
        class_table,
        top_lists,
        pairs,
        bridges,
        bridge_counts,
        summary,
    })
}

/// Files of the report bundle, relative to the output directory.
pub const REPORT_FILES: [&str; 12] = [
    "class_table.txt",
    "class_table.csv",
    "top_ngrams.txt",
    "top_ngrams.csv",
    "pairs.txt",
    "pairs.csv",
    "bridge_counts.txt",
    "bridge_counts.csv",
    "bridges.csv",
    "correlations.tsv",
    SUMMARY_FILE,
    ACTIVATIONS_FILE,
];

pub fn write_report(a: &Analysis, m: &ActivationMatrix, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let names = &a.class_names;
    write_file(&dir.join("class_table.txt"), tables::class_table_text(&a.class_table))?;
    write_file(&dir.join("class_table.csv"), tables::class_table_csv(&a.class_table))?;
    write_file(&dir.join("top_ngrams.txt"), tables::top_ngrams_text(&a.top_lists, names))?;
    write_file(&dir.join("top_ngrams.csv"), tables::top_ngrams_csv(&a.top_lists, names))?;
    write_file(&dir.join("pairs.txt"), tables::pair_table_text(&a.pairs))?;
    write_file(&dir.join("pairs.csv"), tables::pair_table_csv(&a.pairs))?;
    write_file(&dir.join("bridge_counts.txt"), tables::bridge_counts_text(&a.bridge_counts))?;
    write_file(&dir.join("bridge_counts.csv"), tables::bridge_counts_csv(&a.bridge_counts))?;
    write_file(&dir.join("bridges.csv"), tables::bridge_list_csv(&a.bridges))?;
    write_with(&dir.join("correlations.tsv"), |out| {
        a.correlations.iter().try_for_each(|cm| write_correlation(cm, &mut *out))
    })?;
    write_file(&dir.join(SUMMARY_FILE), to_json(&a.summary))?;
    let act = dir.join(ACTIVATIONS_FILE);
    save_activations(m, &act)
}

/// Re-reads the CSV tables in `dir` and checks their invariants: class
/// columns sum to the group's kernel count, pair counts shrink as the
/// threshold rises, and every bridge satisfies the thresholds.
pub fn verify_report(dir: &Path, low: f64, high: f64) -> Result<()> {
    let read = |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| Error::io(dir.join(name), e));
    let summary: AnalysisSummary =
        serde_json::from_str(&read(SUMMARY_FILE)?).map_err(|e| Error::Table(format!("summary: {e}")))?;
    let classes = tables::parse_class_table_csv(&read("class_table.csv")?)?;
    for (gi, g) in classes.groups.iter().enumerate() {
        let expected = summary
            .groups
            .iter()
            .find(|s| s.group == g.to_string())
            .ok_or_else(|| Error::Table(format!("group {g} missing from the summary")))?
            .kernels;
        if classes.column_total(gi) != expected {
            return Err(Error::Table(format!(
                "class table column {g} sums to {}, not {expected}",
                classes.column_total(gi)
            )));
        }
    }
    let pairs = tables::parse_pair_table_csv(&read("pairs.csv")?)?;
    if !pairs.is_monotone() {
        return Err(Error::Table("pair counts grow with the threshold".into()));
    }
    let bridges = tables::parse_bridge_list_csv(&read("bridges.csv")?)?;
    if let Some((g, b)) = bridges.iter().find(|(_, b)| !b.satisfies(low, high)) {
        return Err(Error::Table(format!("bridge {g} ({}, {}, {}) breaks the thresholds", b.i, b.j, b.k)));
    }
    let counts = tables::parse_bridge_counts_csv(&read("bridge_counts.csv")?)?;
    if counts.total() != bridges.len() {
        return Err(Error::Table("bridge counts disagree with the bridge list".into()));
    }
    Ok(())
}

/// Where `analyze` takes its activations from.
#[derive(Clone, Debug)]
pub enum AnalysisSource {
    Checkpoint(Option<PathBuf>),
    Activations(PathBuf),
}

/// Runs the full analysis and writes the report bundle to `out_dir`.
pub fn cmd_analyze(cfg: &RunConfig, source: &AnalysisSource) -> Result<Analysis> {
    let m = match source {
        AnalysisSource::Checkpoint(p) => probe_matrix(cfg, p.as_deref())?,
        AnalysisSource::Activations(p) => load_activations(p)?,
    };
    let a = analyze(&m, &cfg.analysis)?;
    write_report(&a, &m, &cfg.out_dir)?;
    verify_report(&cfg.out_dir, cfg.analysis.bridge_low, cfg.analysis.bridge_high)?;
    Ok(a)
}

/// File name for the plot of a kernel pair, e.g. `graph_1-3-4_1-3-9.svg`.
pub fn plot_file_name(a: KernelId, b: KernelId) -> String {
    let f = |k: KernelId| format!("{}-{}-{}", k.layer, k.window, k.index);
    format!("graph_{}_{}.svg", f(a), f(b))
}

/// Renders the activation graph of two kernels from an activation export.
pub fn cmd_plot(activations: &Path, a: KernelId, b: KernelId, graph: &GraphConfig, out: &Path) -> Result<PathBuf> {
    if a.group() != b.group() {
        return Err(Error::Usage(format!(
            "{a} and {b} are in different groups; kernels are only comparable within one (layer, window) group \
             because each group is probed with its own n-gram length"
        )));
    }
    let m = load_activations(activations)?;
    let row = |k: KernelId| {
        m.kernel_row(k)
            .map(|(_, r)| r)
            .ok_or_else(|| Error::Usage(format!("kernel {k} is not in {}", activations.display())))
    };
    let g = activation_graph(row(a)?, row(b)?, graph.limit, graph.slices)?;
    create_dir(out)?;
    let path = out.join(plot_file_name(a, b));
    write_file(&path, render_activation_graph(&g, a, b))?;
    Ok(path)
}

/// Writes a synthetic question corpus in TREC format plus random
/// word2vec text embeddings, for trying the pipeline without real data.
pub fn gen_synthetic(out: &Path, train: usize, test: usize, label_noise: f64, dim: usize, seed: u64) -> Result<Vec<PathBuf>> {
    let data = question_corpus(train, test, label_noise, seed)?;
    let table = dataset_embeddings(&data, dim, seed)?;
    create_dir(out)?;
    let split = |s: Split| Dataset {
        sentences: data.sentences.iter().filter(|x| x.split == s).cloned().collect(),
        ..data.clone()
    };
    let paths = [out.join("train.label"), out.join("test.label"), out.join("embeddings.txt")];
    write_file(&paths[0], write_trec(&split(Split::Train)))?;
    write_file(&paths[1], write_trec(&split(Split::Test)))?;
    save_embeddings(&table, &paths[2], EmbeddingFormat::Word2vecText)?;
    Ok(paths.to_vec())
}
