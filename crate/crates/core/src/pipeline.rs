//! End-to-end synthesis: decompose, cluster, build the SDFG, break cycles,
//! explore mappings, schedule, and validate by simulation.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{cluster_greedy, cluster_mincut, utilization_report, ClusteredGraph};
use crate::decompose::{decompose, DecomposedGraph};
use crate::error::Error;
use crate::hardware::{ExecTimeModel, HardwareGraph};
use crate::io;
use crate::mapping::{constrain, explore, EvaluatedMapping, ExploreOptions, ParetoFront};
use crate::maxplus::throughput_bound;
use crate::schedule::{default_budget, self_timed_simulate, SelfTimedTrace};
use crate::sdfg::{break_cycles, build_sdfg, BrokenCycles, ChannelKind, Sdfg};
use crate::workload::SnnWorkload;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clusterer {
    #[default]
    Greedy,
    Mincut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    /// Crossbar size used for clustering; defaults to the smallest tile.
    pub crossbar: Option<usize>,
    pub clusterer: Clusterer,
    pub exec: ExecTimeModel,
    pub frame_scale: u64,
    pub explore: ExploreOptions,
    /// Nanoseconds per tick, for frames-per-second figures.
    pub tick_ns: f64,
    /// Simulation iteration budget; defaults to [`default_budget`].
    pub sim_budget: Option<usize>,
    /// Where to write per-stage artifacts.
    pub artifacts: Option<PathBuf>,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            crossbar: None,
            clusterer: Clusterer::Greedy,
            exec: ExecTimeModel::default(),
            frame_scale: 1,
            explore: ExploreOptions::default(),
            tick_ns: 1.0,
            sim_budget: None,
            artifacts: None,
        }
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

fn at<T>(stage: &'static str, r: crate::Result<T>) -> Result<T, StageError> {
    r.map_err(|source| StageError { stage, source })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileUtilization {
    pub tile: usize,
    pub actors: Vec<usize>,
    /// Mean neuron utilization of the clusters time-sharing the tile.
    pub neuron_pct: f64,
    /// Mean synapse utilization of the clusters time-sharing the tile.
    pub synapse_pct: f64,
    /// Largest single-firing production relative to channel buffer capacity.
    pub buffer_pct: f64,
    /// Share of other tiles this tile exchanges spikes with.
    pub connection_pct: f64,
    /// Busiest adjacent link's traffic relative to its bandwidth, capped at 100.
    pub bandwidth_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub neurons: usize,
    pub fit_units: usize,
    pub clusters: usize,
    pub cluster_connections: usize,
    /// Undirected mean degree of the SDFG as a percentage of its actor count.
    pub cluster_connection_pct: f64,
    pub mean_synapse_utilization_pct: f64,
    pub mean_neuron_utilization_pct: f64,
    /// Spikes per frame crossing cluster boundaries.
    pub spikes_communicated: f64,
    /// Ticks per iteration (one frame).
    pub period_ticks: Rational64,
    pub throughput_per_tick: Rational64,
    pub throughput_fps: f64,
    /// Throughput with no resource sharing and unbounded buffers.
    pub throughput_bound_per_tick: Rational64,
    pub simulated_throughput_per_tick: Rational64,
    pub transient_iterations: u64,
    pub energy_pj_per_frame: f64,
    pub spike_energy_pj: f64,
    pub route_energy_pj: f64,
    pub tiles: Vec<TileUtilization>,
    pub pareto_points: usize,
    pub mapping_evaluations: usize,
    pub synthesis_seconds: f64,
    pub warnings: Vec<String>,
}

impl SynthesisReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("neurons                 {}\n", self.neurons));
        s.push_str(&format!("FIT units               {}\n", self.fit_units));
        s.push_str(&format!("clusters                {}\n", self.clusters));
        s.push_str(&format!(
            "cluster connections     {} ({:.1}% mean degree)\n",
            self.cluster_connections, self.cluster_connection_pct
        ));
        s.push_str(&format!(
            "crossbar utilization    {:.1}% synapse, {:.1}% neuron\n",
            self.mean_synapse_utilization_pct, self.mean_neuron_utilization_pct
        ));
        s.push_str(&format!("spikes communicated     {:.1} per frame\n", self.spikes_communicated));
        s.push_str(&format!("period                  {} ticks\n", self.period_ticks));
        s.push_str(&format!("throughput              {:.3} frames/s\n", self.throughput_fps));
        s.push_str(&format!("throughput bound        {} per tick\n", self.throughput_bound_per_tick));
        s.push_str(&format!("energy                  {:.1} pJ/frame\n", self.energy_pj_per_frame));
        s.push_str(&format!("synthesis time          {:.3} s\n", self.synthesis_seconds));
        for t in &self.tiles {
            s.push_str(&format!(
                "tile {:>3}: actors {:?} neuron {:.1}% synapse {:.1}% buffer {:.1}% conn {:.1}% bw {:.1}%\n",
                t.tile, t.actors, t.neuron_pct, t.synapse_pct, t.buffer_pct, t.connection_pct, t.bandwidth_pct
            ));
        }
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tile,actors,neuron_pct,synapse_pct,buffer_pct,connection_pct,bandwidth_pct\n");
        for t in &self.tiles {
            let actors: Vec<String> = t.actors.iter().map(usize::to_string).collect();
            s.push_str(&format!(
                "{},{},{:.3},{:.3},{:.3},{:.3},{:.3}\n",
                t.tile,
                actors.join(" "),
                t.neuron_pct,
                t.synapse_pct,
                t.buffer_pct,
                t.connection_pct,
                t.bandwidth_pct
            ));
        }
        s
    }
}

/// Every intermediate result of a synthesis run.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub decomposed: DecomposedGraph,
    pub clustered: ClusteredGraph,
    pub sdfg: Sdfg,
    pub broken: BrokenCycles,
    pub front: ParetoFront,
    pub chosen: EvaluatedMapping,
    pub trace: SelfTimedTrace,
    pub report: SynthesisReport,
}

/// Runs the whole flow. Returns `Ok(None)` for a workload without neurons.
pub fn synthesize(w: &SnnWorkload, hw: &HardwareGraph, opts: &SynthesisOptions) -> Result<Option<Synthesis>, StageError> {
    if w.neurons().is_empty() {
        return Ok(None);
    }
    let started = Instant::now();
    let crossbar = opts.crossbar.unwrap_or_else(|| hw.min_crossbar());

    let decomposed = decompose(w);
    let clustered = at(
        "cluster",
        match opts.clusterer {
            Clusterer::Greedy => cluster_greedy(&decomposed, crossbar),
            Clusterer::Mincut => cluster_mincut(&decomposed, crossbar, opts.explore.seed),
        },
    )?;
    let sdfg = at("sdfg", build_sdfg(&clustered, &opts.exec, opts.frame_scale))?;
    let broken = at("break-cycles", break_cycles(&sdfg))?;
    let bound = at("analyze", throughput_bound(&sdfg))?.unwrap_or_default();
    let front = at("map", explore(&sdfg, hw, &opts.explore))?;
    let chosen = front.best.clone();
    let constrained = at("schedule", constrain(&sdfg, hw, &chosen.mapping))?;
    let budget = opts.sim_budget.unwrap_or_else(|| default_budget(&constrained));
    let trace = at("simulate", self_timed_simulate(&constrained, &chosen.order, budget))?;
    let elapsed = started.elapsed().as_secs_f64();

    let report = build_report(w, hw, opts, &decomposed, &clustered, &sdfg, &front, &chosen, &trace, bound, elapsed);
    let out = Synthesis {
        decomposed,
        clustered,
        sdfg,
        broken,
        front,
        chosen,
        trace,
        report,
    };
    if let Some(dir) = &opts.artifacts {
        at("artifacts", write_artifacts(dir, &out))?;
    }
    Ok(Some(out))
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    w: &SnnWorkload,
    hw: &HardwareGraph,
    opts: &SynthesisOptions,
    decomposed: &DecomposedGraph,
    clustered: &ClusteredGraph,
    sdfg: &Sdfg,
    front: &ParetoFront,
    chosen: &EvaluatedMapping,
    trace: &SelfTimedTrace,
    bound: Rational64,
    elapsed: f64,
) -> SynthesisReport {
    let to_f = |r: Rational64| r.to_f64().unwrap_or(f64::NAN);
    let fps = to_f(chosen.throughput) * 1e9 / opts.tick_ns;
    let util = utilization_report(clustered, clustered.crossbar_n);
    let n_actors = sdfg.num_actors();
    let undirected: BTreeSet<(usize, usize)> = sdfg
        .channels()
        .iter()
        .filter(|c| c.src != c.dst)
        .map(|c| (c.src.min(c.dst), c.src.max(c.dst)))
        .collect();
    let connection_pct = if n_actors == 0 {
        0.0
    } else {
        let mean_degree = 2.0 * undirected.len() as f64 / n_actors as f64;
        100.0 * mean_degree / n_actors as f64
    };

    let m = &chosen.mapping;
    let mut warnings = Vec::new();
    let mut link_traffic = vec![0.0f64; hw.links().len()];
    for c in sdfg.channels().iter().filter(|c| c.kind == ChannelKind::Data) {
        let (a, b) = (m.tile_of(c.src), m.tile_of(c.dst));
        if a == b {
            continue;
        }
        let events = to_f(c.spikes) * fps;
        for step in hw.xy_route(a, b).windows(2) {
            let (Some(p), Some(q)) = (hw.tile_at(step[0]), hw.tile_at(step[1])) else { continue };
            if let Some(i) = hw.links().iter().position(|l| (l.a, l.b) == (p, q) || (l.a, l.b) == (q, p)) {
                link_traffic[i] += events;
            }
        }
    }
    for (i, l) in hw.links().iter().enumerate() {
        if link_traffic[i] > l.bandwidth {
            warnings.push(format!(
                "link {}-{} carries {:.3e} events/s, above its {:.3e} bandwidth",
                l.a, l.b, link_traffic[i], l.bandwidth
            ));
        }
    }

    let tiles = (0..hw.num_tiles())
        .map(|t| {
            let actors = m.actors_on(t);
            let mean = |f: &dyn Fn(usize) -> f64| {
                if actors.is_empty() {
                    0.0
                } else {
                    actors.iter().map(|&a| f(a)).sum::<f64>() / actors.len() as f64
                }
            };
            let tile = &hw.tiles()[t];
            let n = tile.crossbar_n as f64;
            let fp = |a: usize| sdfg.actors()[a].footprint.unwrap_or(crate::sdfg::Footprint { rows: 0, cols: 0, synapses: 0 });
            let neuron_pct = mean(&|a| 100.0 * (fp(a).rows + fp(a).cols) as f64 / (2.0 * n));
            let synapse_pct = mean(&|a| 100.0 * fp(a).synapses as f64 / (n * n));
            let mut buffer_pct: f64 = 0.0;
            let mut peers = BTreeSet::new();
            for c in sdfg.channels().iter().filter(|c| c.kind == ChannelKind::Data) {
                let (a, b) = (m.tile_of(c.src), m.tile_of(c.dst));
                if a == t {
                    let mut cap = tile.out_buffer;
                    if b != t {
                        cap = cap.min(hw.tiles()[b].in_buffer);
                    }
                    buffer_pct = buffer_pct.max(100.0 * c.prod as f64 / cap as f64);
                }
                if a != b && (a == t || b == t) {
                    peers.insert(if a == t { b } else { a });
                }
            }
            let connection_pct = if hw.num_tiles() > 1 {
                100.0 * peers.len() as f64 / (hw.num_tiles() - 1) as f64
            } else {
                0.0
            };
            let bandwidth_pct = hw
                .links()
                .iter()
                .enumerate()
                .filter(|(_, l)| l.a == t || l.b == t)
                .map(|(i, l)| (100.0 * link_traffic[i] / l.bandwidth).min(100.0))
                .fold(0.0, f64::max);
            TileUtilization {
                tile: t,
                actors,
                neuron_pct,
                synapse_pct,
                buffer_pct,
                connection_pct,
                bandwidth_pct,
            }
        })
        .collect();

    SynthesisReport {
        neurons: w.neurons().len(),
        fit_units: decomposed.units.len(),
        clusters: clustered.clusters.len(),
        cluster_connections: clustered.connections.len(),
        cluster_connection_pct: connection_pct,
        mean_synapse_utilization_pct: util.mean_synapse_pct,
        mean_neuron_utilization_pct: util.mean_neuron_pct,
        spikes_communicated: to_f(clustered.cut_spikes()),
        period_ticks: chosen.period,
        throughput_per_tick: chosen.throughput,
        throughput_fps: fps,
        throughput_bound_per_tick: bound,
        simulated_throughput_per_tick: trace.throughput,
        transient_iterations: trace.transient_iterations,
        energy_pj_per_frame: chosen.energy.total_pj,
        spike_energy_pj: chosen.energy.spike_pj,
        route_energy_pj: chosen.energy.route_pj,
        tiles,
        pareto_points: front.front.len(),
        mapping_evaluations: front.evaluations,
        synthesis_seconds: elapsed,
        warnings,
    }
}

fn write_artifacts(dir: &Path, s: &Synthesis) -> crate::Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    io::write_json(&dir.join("dsnn.json"), &s.decomposed)?;
    io::write_text(&dir.join("dsnn.dot"), &s.decomposed.to_dot())?;
    io::write_json(&dir.join("csnn.json"), &s.clustered)?;
    io::write_text(&dir.join("csnn.dot"), &s.clustered.to_dot())?;
    io::write_json(&dir.join("sdfg.json"), &s.sdfg)?;
    io::write_text(&dir.join("sdfg.dot"), &s.sdfg.to_dot())?;
    io::write_json(&dir.join("sdfg_acyclic.json"), &s.broken.acyclic)?;
    io::write_json(&dir.join("front.json"), &s.front)?;
    io::write_json(&dir.join("mapping.json"), &s.chosen.mapping)?;
    io::write_json(&dir.join("order.json"), &s.chosen.order)?;
    io::write_text(&dir.join("trace.jsonl"), &s.trace.to_jsonl())?;
    io::write_json(&dir.join("report.json"), &s.report)?;
    Ok(())
}
