//! Random instance generators and brute-force oracles shared by the
//! integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use dfsynth_core::cluster::ClusteredGraph;
use dfsynth_core::decompose::DecomposedGraph;
use dfsynth_core::hardware::{dynapse_preset, HardwareGraph};
use dfsynth_core::mapping::{evaluate, Mapping};
use dfsynth_core::maxplus::{MaxPlusMatrix, TimingArc};
use dfsynth_core::sdfg::{Actor, Channel, ChannelKind, Sdfg};
use dfsynth_core::workload::{Neuron, ReluMlp, Role, SnnWorkload, Synapse};
use num_rational::Rational64;
use rand::Rng;

/// Matrix with entries in {-inf, 0..=20}; roughly `p_neg` of them -inf.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, p_neg: f64) -> MaxPlusMatrix {
    let rows: Vec<Vec<Option<i64>>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| (!rng.random_bool(p_neg)).then(|| rng.random_range(0..=20)))
                .collect()
        })
        .collect();
    MaxPlusMatrix::from_rows(&rows).unwrap()
}

/// Maximum mean over all simple cycles, by explicit enumeration. Each cycle
/// is generated once, from its smallest vertex.
pub fn brute_force_mcm(m: &MaxPlusMatrix) -> Option<Rational64> {
    let n = m.dim();
    let w = |i: usize, j: usize| m.get(i, j).0;
    let mut best: Option<Rational64> = None;
    #[allow(clippy::too_many_arguments)]
    fn walk(
        start: usize,
        v: usize,
        sum: i64,
        len: i64,
        on_path: &mut Vec<bool>,
        n: usize,
        w: &dyn Fn(usize, usize) -> Option<i64>,
        best: &mut Option<Rational64>,
    ) {
        for u in start..n {
            let Some(x) = w(v, u) else { continue };
            if u == start {
                let mean = Rational64::new(sum + x, len + 1);
                if best.is_none_or(|b| mean > b) {
                    *best = Some(mean);
                }
            } else if !on_path[u] {
                on_path[u] = true;
                walk(start, u, sum + x, len + 1, on_path, n, w, best);
                on_path[u] = false;
            }
        }
    }
    for s in 0..n {
        let mut on_path = vec![false; n];
        on_path[s] = true;
        walk(s, s, 0, 0, &mut on_path, n, &w, &mut best);
    }
    best
}

/// Maximum weight/delay ratio over all simple cycles of an arc list.
/// Parallel arcs are all tried. `None` if there is no cycle.
pub fn brute_force_ratio(n: usize, arcs: &[TimingArc]) -> Option<Rational64> {
    let mut out: Vec<Vec<&TimingArc>> = vec![Vec::new(); n];
    for a in arcs {
        out[a.src].push(a);
    }
    let mut best: Option<Rational64> = None;
    fn walk(
        start: usize,
        v: usize,
        w: i64,
        d: i64,
        on_path: &mut Vec<bool>,
        out: &[Vec<&TimingArc>],
        best: &mut Option<Rational64>,
    ) {
        for a in &out[v] {
            let u = a.dst;
            if u < start {
                continue;
            }
            let (w2, d2) = (w + a.weight, d + a.delay as i64);
            if u == start {
                assert!(d2 > 0, "zero-delay cycle");
                let r = Rational64::new(w2, d2);
                if best.is_none_or(|b| r > b) {
                    *best = Some(r);
                }
            } else if !on_path[u] {
                on_path[u] = true;
                walk(start, u, w2, d2, on_path, out, best);
                on_path[u] = false;
            }
        }
    }
    for s in 0..n {
        let mut on_path = vec![false; n];
        on_path[s] = true;
        walk(s, s, 0, 0, &mut on_path, &out, &mut best);
    }
    best
}

/// A mesh with `tiles` tiles: a row for up to 3, a 2x2 square for 4.
pub fn mesh(tiles: usize, crossbar_n: usize) -> HardwareGraph {
    match tiles {
        4 => dynapse_preset(2, 2, crossbar_n).unwrap(),
        t => dynapse_preset(t as u32, 1, crossbar_n).unwrap(),
    }
}

/// A random multirate SDFG on `n` actors: forward channels between random
/// pairs plus occasional backward channels carrying enough tokens for one
/// iteration of their source.
pub fn random_sdfg<R: Rng>(rng: &mut R, n: usize) -> Sdfg {
    let actors: Vec<Actor> = (0..n)
        .map(|id| Actor {
            id,
            exec_time: rng.random_range(1..=20),
            state_space: 0,
            footprint: None,
            spikes: Rational64::from_integer(rng.random_range(0..=50)),
        })
        .collect();
    let mut channels = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.35) {
                let rate = rng.random_range(1..=4);
                channels.push(Channel {
                    src: i,
                    dst: j,
                    prod: rate,
                    cons: rate,
                    tokens: 0,
                    kind: ChannelKind::Data,
                    spikes: Rational64::from_integer(rate as i64 * rng.random_range(1..=5)),
                });
                if rng.random_bool(0.1) {
                    let back = rng.random_range(1..=3);
                    channels.push(Channel {
                        src: j,
                        dst: i,
                        prod: back,
                        cons: back,
                        tokens: back * rng.random_range(1..=2),
                        kind: ChannelKind::Data,
                        spikes: Rational64::from_integer(back as i64),
                    });
                }
            }
        }
    }
    Sdfg::new(actors, channels).unwrap()
}

pub struct Instance {
    pub graph: Sdfg,
    pub hw: HardwareGraph,
    pub mapping: Mapping,
}

/// A random instance whose chosen mapping evaluates without deadlock.
/// Buffers range from barely sufficient to generous.
pub fn random_instance<R: Rng>(rng: &mut R, max_actors: usize, max_tiles: usize) -> Instance {
    loop {
        let n = rng.random_range(1..=max_actors);
        let graph = random_sdfg(rng, n);
        let tiles = rng.random_range(1..=max_tiles);
        let max_rate = graph.channels().iter().map(|c| c.prod).max().unwrap_or(1);
        let buffers = rng.random_range(max_rate..=3 * max_rate + 4);
        let hw = mesh(tiles, 16).with_buffers(buffers).unwrap();
        let mapping = Mapping::new((0..n).map(|_| rng.random_range(0..tiles)).collect(), tiles).unwrap();
        if evaluate(&graph, &hw, &mapping).is_ok() {
            return Instance { graph, hw, mapping };
        }
    }
}

/// Layered workload with sparse random connectivity. Every non-input neuron
/// draws `fanin` distinct presynaptic neurons from the previous layer; spike
/// counts are random so cluster traffic varies.
pub fn sparse_workload<R: Rng>(rng: &mut R, layers: &[usize], fanin: usize) -> SnnWorkload {
    let mut neurons = Vec::new();
    let mut offsets = vec![0u32];
    for (l, &size) in layers.iter().enumerate() {
        let role = match l {
            0 => Role::Input,
            _ if l == layers.len() - 1 => Role::Output,
            _ => Role::Hidden,
        };
        let base = *offsets.last().unwrap();
        neurons.extend((0..size as u32).map(|i| Neuron { id: base + i, role }));
        offsets.push(base + size as u32);
    }
    let mut synapses = Vec::new();
    for l in 1..layers.len() {
        let prev = offsets[l - 1]..offsets[l];
        for dst in offsets[l]..offsets[l + 1] {
            let k = fanin.min(prev.len());
            for src in rand::seq::index::sample(rng, prev.len(), k) {
                synapses.push(Synapse {
                    src: prev.start + src as u32,
                    dst,
                    weight: rng.random_range(0.1..1.0),
                });
            }
        }
    }
    let duration_us = 100_000;
    let spikes: BTreeMap<u32, Vec<u64>> = neurons
        .iter()
        .map(|n| {
            let count = rng.random_range(0..=20);
            (n.id, (0..count).map(|_| rng.random_range(0..duration_us)).collect())
        })
        .collect();
    SnnWorkload::new(neurons, synapses, spikes, duration_us, None).unwrap()
}

/// Small random ReLU network with positive-leaning weights so that most
/// outputs are active.
pub fn random_mlp<R: Rng>(rng: &mut R) -> (ReluMlp, Vec<f64>) {
    let depth = rng.random_range(2..=3);
    let mut layers = vec![rng.random_range(2..=5)];
    for _ in 1..depth {
        layers.push(rng.random_range(2..=4));
    }
    let weights = (0..depth - 1)
        .map(|l| {
            (0..layers[l + 1])
                .map(|_| (0..layers[l]).map(|_| rng.random_range(-0.2..0.6)).collect())
                .collect()
        })
        .collect();
    let biases = (0..depth - 1)
        .map(|l| (0..layers[l + 1]).map(|_| rng.random_range(-0.05..0.05)).collect())
        .collect();
    let input = (0..layers[0]).map(|_| rng.random_range(0.0..1.0)).collect();
    (ReluMlp::new(layers, weights, biases).unwrap(), input)
}

/// Recomputes every cluster's crossbar usage from its members and checks
/// the limits and that the clusters partition the units.
pub fn crossbar_ok(d: &DecomposedGraph, c: &ClusteredGraph, n: usize) -> bool {
    let mut covered = vec![0; d.units.len()];
    for k in &c.clusters {
        let mut rows = BTreeSet::new();
        let (mut cols, mut synapses) = (0, 0);
        for &u in &k.members {
            covered[u] += 1;
            let unit = &d.units[u];
            if unit.inputs.is_empty() {
                rows.insert(u);
            } else {
                cols += 1;
                synapses += unit.inputs.len();
                rows.extend(unit.inputs.iter().map(|i| i.source()));
            }
        }
        if rows.len() > n || cols > n || synapses > n * n {
            return false;
        }
    }
    c.validate().is_ok() && covered.iter().all(|&k| k == 1)
}
