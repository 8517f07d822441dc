//! Run configuration, read from a TOML document.
//!
//! Relative paths resolve against the directory holding the config file.
//! Every default is spelled out in `configs/*.toml`.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use textcnn_core::adam::AdamConfig;
use textcnn_core::analysis::{
    DEFAULT_BRIDGE_HIGH, DEFAULT_BRIDGE_LOW, DEFAULT_GRAPH_LIMIT, DEFAULT_GRAPH_SLICES, DEFAULT_PAIR_THRESHOLDS,
};
use textcnn_core::data::ProbeSplit;
use textcnn_core::model::ModelConfig;

use crate::io::{CorpusFormat, EmbeddingFormat};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub embeddings: EmbeddingsConfig,
    #[serde(default)]
    pub model: ModelOverrides,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub graph: GraphConfig,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetConfig {
    Trec {
        train: PathBuf,
        test: Option<PathBuf>,
    },
    Sst {
        train: PathBuf,
        test: Option<PathBuf>,
    },
    /// Generated TREC-like questions; `seed` falls back to the run seed.
    SyntheticQuestions {
        train: usize,
        test: usize,
        #[serde(default)]
        label_noise: f64,
        seed: Option<u64>,
    },
    /// Two classes separated by one marker token.
    SyntheticMarker {
        sentences: usize,
        test_fraction: f64,
        seed: Option<u64>,
    },
}

impl DatasetConfig {
    pub fn corpus_files(&self) -> Option<(CorpusFormat, &Path, Option<&Path>)> {
        match self {
            DatasetConfig::Trec { train, test } => Some((CorpusFormat::Trec, train, test.as_deref())),
            DatasetConfig::Sst { train, test } => Some((CorpusFormat::Sst, train, test.as_deref())),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EmbeddingsConfig {
    Word2vecText { path: PathBuf },
    Word2vecBinary { path: PathBuf },
    /// Uniform random vectors for the dataset vocabulary.
    Random { dim: usize, seed: Option<u64> },
}

impl EmbeddingsConfig {
    pub fn file(&self) -> Option<(EmbeddingFormat, &Path)> {
        match self {
            EmbeddingsConfig::Word2vecText { path } => Some((EmbeddingFormat::Word2vecText, path)),
            EmbeddingsConfig::Word2vecBinary { path } => Some((EmbeddingFormat::Word2vecBinary, path)),
            EmbeddingsConfig::Random { .. } => None,
        }
    }
}

/// Model hyperparameters; unset fields keep the built-in defaults.
/// Embedding width and class count come from the data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    pub windows: Option<Vec<usize>>,
    pub feature_maps: Option<usize>,
    pub conv_layers_per_tower: Option<usize>,
    pub dropout_keep: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub adam: Option<AdamConfig>,
    pub bn_momentum: Option<f64>,
    pub bn_epsilon: Option<f64>,
}

impl ModelOverrides {
    pub fn apply(&self, embed_dim: usize, num_classes: usize, seed: u64) -> Result<ModelConfig> {
        let mut c = ModelConfig::new(embed_dim, num_classes);
        c.seed = seed;
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = &self.$f { c.$f = v.clone(); })*};
        }
        set!(windows, feature_maps, conv_layers_per_tower, dropout_keep, batch_size, epochs, adam, bn_momentum, bn_epsilon);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub split: ProbeSplit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub pair_thresholds: Vec<f64>,
    pub bridge_low: f64,
    pub bridge_high: f64,
    /// N-grams listed per kernel in the top-k report.
    pub top_k: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            pair_thresholds: DEFAULT_PAIR_THRESHOLDS.to_vec(),
            bridge_low: DEFAULT_BRIDGE_LOW,
            bridge_high: DEFAULT_BRIDGE_HIGH,
            top_k: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub limit: usize,
    pub slices: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            limit: DEFAULT_GRAPH_LIMIT,
            slices: DEFAULT_GRAPH_SLICES,
        }
    }
}

impl RunConfig {
    /// A config with every optional section at its default.
    pub fn new(dataset: DatasetConfig, embeddings: EmbeddingsConfig) -> Self {
        RunConfig {
            seed: 0,
            out_dir: default_out_dir(),
            dataset,
            embeddings,
            model: ModelOverrides::default(),
            probe: ProbeConfig::default(),
            analysis: AnalysisConfig::default(),
            graph: GraphConfig::default(),
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }

    /// Reads, resolves relative paths and validates the thresholds.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new("")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetConfig::Trec { train, test } | DatasetConfig::Sst { train, test } => {
                fix(train);
                if let Some(t) = test {
                    fix(t);
                }
            }
            _ => {}
        }
        match &mut self.embeddings {
            EmbeddingsConfig::Word2vecText { path } | EmbeddingsConfig::Word2vecBinary { path } => fix(path),
            EmbeddingsConfig::Random { .. } => {}
        }
        fix(&mut self.out_dir);
    }

    /// Checks values that do not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let a = &self.analysis;
        if a.pair_thresholds.is_empty() {
            return bad("analysis.pair_thresholds is empty".into());
        }
        for &t in a.pair_thresholds.iter().chain([&a.bridge_low, &a.bridge_high]) {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("threshold {t} is outside (0, 1)"));
            }
        }
        if a.pair_thresholds.windows(2).any(|w| w[0] <= w[1]) {
            return bad("analysis.pair_thresholds must be strictly descending".into());
        }
        if a.bridge_low >= a.bridge_high {
            return bad("analysis.bridge_low must be below analysis.bridge_high".into());
        }
        if a.top_k == 0 {
            return bad("analysis.top_k must be at least 1".into());
        }
        if self.graph.limit == 0 || self.graph.slices == 0 {
            return bad("graph.limit and graph.slices must be positive".into());
        }
        match self.dataset {
            DatasetConfig::SyntheticQuestions { train, label_noise, .. } => {
                if train == 0 || !(0.0..=1.0).contains(&label_noise) {
                    return bad("synthetic questions need train > 0 and label_noise in [0, 1]".into());
                }
            }
            DatasetConfig::SyntheticMarker {
                sentences, test_fraction, ..
            } => {
                if sentences < 2 || !(0.0..1.0).contains(&test_fraction) {
                    return bad("synthetic marker corpus needs sentences ≥ 2 and test_fraction in [0, 1)".into());
                }
            }
            _ => {}
        }
        if let EmbeddingsConfig::Random { dim: 0, .. } = self.embeddings {
            return bad("embeddings.dim must be positive".into());
        }
        self.model.apply(1, 2, self.seed)?;
        Ok(())
    }

    /// Confirms every input file opens, before any long computation.
    pub fn check_inputs(&self) -> Result<()> {
        let mut paths: Vec<&Path> = Vec::new();
        if let Some((_, train, test)) = self.dataset.corpus_files() {
            paths.push(train);
            paths.extend(test);
        }
        if let Some((_, p)) = self.embeddings.file() {
            paths.push(p);
        }
        for p in paths {
            File::open(p).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 7
out_dir = "runs/a"

[dataset]
kind = "trec"
train = "data/train.label"
test = "data/test.label"

[embeddings]
format = "word2vec-binary"
path = "vectors.bin"

[model]
feature_maps = 32
adam = { lr = 0.002, beta1 = 0.9, beta2 = 0.999, eps = 1e-8 }

[probe]
split = "train"

[analysis]
pair_thresholds = [0.8, 0.6]
bridge_low = 0.1
bridge_high = 0.4
top_k = 5

[graph]
limit = 1200
slices = 3
"#;

    #[test]
    fn parses_and_resolves() {
        let mut c = RunConfig::parse(FULL, Path::new("c.toml")).unwrap();
        c.resolve_paths(Path::new("/base"));
        assert_eq!(c.seed, 7);
        assert_eq!(c.out_dir, PathBuf::from("/base/runs/a"));
        assert_eq!(c.probe.split, ProbeSplit::Train);
        let m = c.model.apply(300, 6, c.seed).unwrap();
        assert_eq!((m.feature_maps, m.adam.lr, m.seed, m.epochs), (32, 0.002, 7, 10));
        c.validate().unwrap();
        let again = RunConfig::parse(&c.to_toml(), Path::new("x")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_thresholds() {
        let typo = FULL.replace("feature_maps", "feature_map");
        let err = RunConfig::parse(&typo, Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("feature_map"), "{err}");
        let mut c = RunConfig::parse(FULL, Path::new("c.toml")).unwrap();
        c.analysis.bridge_high = 1.0;
        assert!(c.validate().is_err());
        c.analysis.bridge_high = 0.05;
        assert!(c.validate().is_err());
        c.analysis = AnalysisConfig::default();
        c.analysis.pair_thresholds = vec![0.6, 0.8];
        assert!(c.validate().is_err());
        c.analysis = AnalysisConfig::default();
        c.model.windows = Some(vec![4, 3]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_input_is_reported_before_work() {
        let mut c = RunConfig::parse(FULL, Path::new("c.toml")).unwrap();
        c.resolve_paths(Path::new("/nonexistent"));
        let err = c.check_inputs().unwrap_err();
        assert!(err.to_string().contains("/nonexistent/data/train.label"), "{err}");
    }
}
