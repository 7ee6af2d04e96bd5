//! Feature sequences, manifests, statistic pooling and feature scaling.

pub mod archive;
pub mod fseq;
pub mod manifest;
pub mod pooling;
pub mod scaler;

pub use archive::{pool_records, sidecar_path, PooledSet};
pub use fseq::{read_fseq, write_fseq, FeatureSequence};
pub use manifest::{read_manifest, write_manifest, Domain, Label, SampleRecord, Split};
pub use pooling::{stat_pool, stat_pool_matrix, PooledVector};
pub use scaler::{FeatureScaler, DEFAULT_MARGIN};
