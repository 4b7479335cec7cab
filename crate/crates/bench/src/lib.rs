//! Random instance generators shared by the benchmarks.

use std::collections::BTreeMap;

use dfsynth_core::cluster::cluster_greedy;
use dfsynth_core::decompose::decompose;
use dfsynth_core::hardware::ExecTimeModel;
use dfsynth_core::maxplus::MaxPlusMatrix;
use dfsynth_core::sdfg::{build_sdfg, Sdfg};
use dfsynth_core::workload::{Neuron, Role, SnnWorkload, Synapse};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense max-plus matrix; `density` of the entries are finite, in 0..=100.
pub fn random_matrix(seed: u64, n: usize, density: f64) -> MaxPlusMatrix {
    let mut r = rng(seed);
    let rows: Vec<Vec<Option<i64>>> = (0..n)
        .map(|_| (0..n).map(|_| r.random_bool(density).then(|| r.random_range(0..=100))).collect())
        .collect();
    MaxPlusMatrix::from_rows(&rows).expect("square")
}

/// Layered workload where every non-input neuron has `fanin` random
/// presynaptic neurons in the previous layer and up to 20 spikes.
pub fn layered_workload(seed: u64, layers: &[usize], fanin: usize) -> SnnWorkload {
    let mut r = rng(seed);
    let mut neurons = Vec::new();
    let mut starts = vec![0u32];
    for (l, &size) in layers.iter().enumerate() {
        let role = match l {
            0 => Role::Input,
            _ if l + 1 == layers.len() => Role::Output,
            _ => Role::Hidden,
        };
        let base = *starts.last().expect("non-empty");
        neurons.extend((0..size as u32).map(|i| Neuron { id: base + i, role }));
        starts.push(base + size as u32);
    }
    let mut synapses = Vec::new();
    for l in 1..layers.len() {
        let prev = starts[l - 1]..starts[l];
        for dst in starts[l]..starts[l + 1] {
            for src in rand::seq::index::sample(&mut r, prev.len(), fanin.min(prev.len())) {
                synapses.push(Synapse {
                    src: prev.start + src as u32,
                    dst,
                    weight: r.random_range(0.1..1.0),
                });
            }
        }
    }
    let duration_us = 100_000;
    let spikes: BTreeMap<u32, Vec<u64>> = neurons
        .iter()
        .map(|n| {
            let k = r.random_range(0..=20);
            (n.id, (0..k).map(|_| r.random_range(0..duration_us)).collect())
        })
        .collect();
    SnnWorkload::new(neurons, synapses, spikes, duration_us, None).expect("well-formed")
}

/// SDFG of a layered workload clustered onto `crossbar_n`-sized crossbars.
pub fn clustered_sdfg(seed: u64, layers: &[usize], fanin: usize, crossbar_n: usize) -> Sdfg {
    let d = decompose(&layered_workload(seed, layers, fanin));
    let c = cluster_greedy(&d, crossbar_n).expect("fan-in fits");
    build_sdfg(&c, &ExecTimeModel::default(), 1).expect("live")
}
