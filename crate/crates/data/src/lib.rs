//! Datasets (IDX files and a synthetic generator) and non-IID client
//! partitioning with text manifests and per-partition statistics.

mod dataset;
mod error;
mod idx;
mod manifest;
mod partition;
mod stats;

pub use dataset::{synthetic, Dataset, SyntheticSpec};
pub use error::{DataError, Result};
pub use idx::{encode_idx, images_to_dataset, load_mnist_dir, parse_idx, read_idx_file, IdxArray};
pub use partition::{
    apportion, clustered_labels, cn_quantity_factors, group_layout, label_clusters,
    non_equal_shard_counts, pareto_labels, partition, partition_clustered, partition_pareto,
    partition_shards, PartitionManifest, PartitionMethod, PartitionSpec,
};
pub use stats::{mean_std, partition_stats, StatsReport};
