//! Synthesis of spiking neural network workloads onto crossbar-based
//! neuromorphic hardware.
//!
//! The flow decomposes high fan-in neurons into fanin-of-two units, packs
//! the units into crossbar-sized clusters, models the clustered network as a
//! synchronous dataflow graph, and maps that graph onto a tile mesh. Period
//! and throughput come from max-plus analysis and are checked against a
//! self-timed simulation.

pub mod cluster;
pub mod decompose;
pub mod error;
pub mod fixtures;
pub mod hardware;
pub mod io;
pub mod mapping;
pub mod maxplus;
pub mod pipeline;
pub mod schedule;
pub mod sdfg;
pub mod workload;

pub use cluster::{cluster_greedy, cluster_mincut, utilization_report, ClusteredGraph};
pub use decompose::{decompose, decomposition_cost, DecomposedGraph};
pub use error::{Error, ErrorClass, Result};
pub use hardware::{dynapse_preset, load_hardware, ExecTimeModel, HardwareGraph};
pub use mapping::{constrain, evaluate, explore, EvaluatedMapping, ExploreOptions, Mapping, Objective, ParetoFront};
pub use maxplus::{firing_time_matrix, max_cycle_mean, mp_matvec, throughput_bound, MaxPlus, MaxPlusMatrix};
pub use pipeline::{synthesize, SynthesisOptions, SynthesisReport};
pub use schedule::{derive_from_single_tile, self_timed_simulate, static_order, SelfTimedTrace, StaticOrder};
pub use sdfg::{break_cycles, build_sdfg, repetition_vector, strongly_connected_subgraphs, Sdfg};
pub use workload::{load_workload, SnnWorkload};
