//! Community detection from information cascades.
//!
//! The library covers the full pipeline: epidemic cascade simulators over a
//! hidden graph, surrogate-graph builders that turn observed infection times
//! into weighted graphs, Louvain clustering (modularity and pluggable
//! objectives), a likelihood-based clustering refinement with closed-form
//! rate estimation, partition comparison metrics aware of partially observed
//! node sets, an LFR-style benchmark graph generator, and an experiment
//! harness with resumable CSV reports.

pub mod cascade;
pub mod clustopt;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod lfr;
pub mod louvain;
pub mod metrics;
pub mod rng;
pub mod simulate;
pub mod surrogate;
mod svg;

pub use cascade::{estimate_tmax, filter_singletons, ingest_retweet_log, Cascade, CascadeSet};
pub use error::{Error, Result};
pub use graph::{
    load_communities, load_dataset, load_edge_list, restrict_partition, write_communities,
    write_edge_list, write_sub_communities, DatasetBundle, Graph, Partition, SubPartition,
};
pub use simulate::{calibrate, CalibrationTarget, EpidemicParams, Model, ModelKind};
