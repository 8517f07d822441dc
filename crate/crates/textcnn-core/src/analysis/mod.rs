//! Kernel interpretability: probing, labeling, correlation, activation
//! graphs and bridges.

mod bridges;
mod correlation;
mod graph;
mod kernel;
mod labels;
mod probe;

pub use bridges::{bridge_count_table, find_bridges, Bridge, BridgeTable, DEFAULT_BRIDGE_HIGH, DEFAULT_BRIDGE_LOW};
pub use correlation::{correlation_matrix, count_correlated_pairs, pearson, CorrelationMatrix, Pearson};
pub use graph::{activation_graph, slice_sizes, ActivationGraph, DEFAULT_GRAPH_LIMIT, DEFAULT_GRAPH_SLICES};
pub use kernel::{GroupKey, KernelId};
pub use labels::{
    kernel_class_table, label_kernels, top_k_columns, top_ngrams_report, ClassTable, KernelClass, KernelLabelReport,
    TopNgram,
};
pub use probe::{build_activation_matrix, probe_group, probe_kernel, ActivationMatrix, ProbeGroup, ProbeSets};

/// Default correlated-pair thresholds, descending.
pub const DEFAULT_PAIR_THRESHOLDS: [f64; 2] = [0.8, 0.6];
