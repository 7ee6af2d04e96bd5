//! PCA of pooled features, scatter emission and real-vs-synthetic probing.

mod pca;
mod probe;
mod scatter;

pub use pca::{canonical_sign, PcaModel, MAX_POWER_ITERATIONS, POWER_TOL};
pub use probe::{separability_probe, ProbeConfig, ProbeResult, ProbeSpace, MIN_PROBE_POINTS};
pub use scatter::{render_svg, render_table, write_scatter, ScatterPoint};
