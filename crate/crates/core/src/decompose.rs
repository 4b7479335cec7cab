//! Spatial decomposition of high fan-in neurons into chains of fanin-of-two
//! (FIT) units.
//!
//! A neuron with inputs `n1..nm` (m >= 2) becomes `m - 1` units: the first
//! consumes `n1, n2`, unit `j` consumes `n(j+1)` and the output of unit
//! `j - 1`. The last unit of the chain emits the neuron's spikes.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::workload::{channel_spike_counts, NeuronId, SnnWorkload};

pub type UnitId = usize;

/// Weight used on chained links; the running partial sum is forwarded as is.
pub const CHAIN_WEIGHT: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputRef {
    /// An original synapse, by index in the workload's synapse list.
    Synapse { index: usize, source: UnitId, weight: f64 },
    /// The output of the preceding unit in the same chain.
    Chained { source: UnitId, weight: f64 },
}

impl InputRef {
    pub fn source(&self) -> UnitId {
        match *self {
            InputRef::Synapse { source, .. } | InputRef::Chained { source, .. } => source,
        }
    }

    pub fn weight(&self) -> f64 {
        match *self {
            InputRef::Synapse { weight, .. } | InputRef::Chained { weight, .. } => weight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitUnit {
    pub id: UnitId,
    pub parent: NeuronId,
    pub inputs: Vec<InputRef>,
    /// Spikes per frame on the unit's output.
    pub spikes: Rational64,
}

impl FitUnit {
    /// Units with no inputs only inject spikes (input-layer neurons).
    pub fn is_source(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub src: UnitId,
    pub dst: UnitId,
    pub spikes: Rational64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecomposedGraph {
    pub units: Vec<FitUnit>,
    pub links: Vec<Link>,
}

impl DecomposedGraph {
    /// Builds a graph directly from per-unit input lists; link spike counts
    /// are the producing unit's spike count. Used for hand-made fixtures.
    pub fn from_units(units: Vec<FitUnit>) -> Self {
        let spikes: Vec<Rational64> = units.iter().map(|u| u.spikes).collect();
        let links = units
            .iter()
            .flat_map(|u| {
                u.inputs.iter().map(|i| Link {
                    src: i.source(),
                    dst: u.id,
                    spikes: spikes[i.source()],
                })
            })
            .collect();
        DecomposedGraph { units, links }
    }

    pub fn total_link_spikes(&self) -> Rational64 {
        self.links.iter().map(|l| l.spikes).sum()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dsnn {\n");
        for u in &self.units {
            let _ = writeln!(out, "  u{} [label=\"u{} (n{})\"];", u.id, u.id, u.parent);
        }
        for l in &self.links {
            let _ = writeln!(out, "  u{} -> u{} [label=\"{}\"];", l.src, l.dst, l.spikes);
        }
        out.push_str("}\n");
        out
    }
}

/// Decomposes every neuron of the workload. Neurons are processed in id
/// order; each chain consumes its original inputs in synapse-list order.
pub fn decompose(w: &SnnWorkload) -> DecomposedGraph {
    let mut ids: Vec<NeuronId> = w.neurons().iter().map(|n| n.id).collect();
    ids.sort_unstable();
    let inputs = w.inputs_by_neuron();
    let counts = channel_spike_counts(w);

    // Allocate unit ids first so forward references to a source neuron's
    // output unit resolve regardless of order.
    let mut first_unit = HashMap::new();
    let mut output_unit = HashMap::new();
    let mut next = 0;
    for &id in &ids {
        let m = inputs.get(&id).map_or(0, Vec::len);
        let n_units = m.saturating_sub(1).max(1);
        first_unit.insert(id, next);
        output_unit.insert(id, next + n_units - 1);
        next += n_units;
    }

    let mut units = Vec::with_capacity(next);
    let mut links = Vec::new();
    for &id in &ids {
        let rate = w.spikes_per_frame(id);
        let syn = inputs.get(&id).map(Vec::as_slice).unwrap_or(&[]);
        let original = |k: usize| {
            let s = &w.synapses()[syn[k]];
            InputRef::Synapse {
                index: syn[k],
                source: output_unit[&s.src],
                weight: s.weight,
            }
        };
        let base = first_unit[&id];
        if syn.len() < 2 {
            units.push(FitUnit {
                id: base,
                parent: id,
                inputs: (0..syn.len()).map(original).collect(),
                spikes: rate,
            });
        } else {
            units.push(FitUnit {
                id: base,
                parent: id,
                inputs: vec![original(0), original(1)],
                spikes: rate,
            });
            for j in 1..syn.len() - 1 {
                units.push(FitUnit {
                    id: base + j,
                    parent: id,
                    inputs: vec![
                        original(j + 1),
                        InputRef::Chained {
                            source: base + j - 1,
                            weight: CHAIN_WEIGHT,
                        },
                    ],
                    spikes: rate,
                });
            }
        }
        for u in &units[base..] {
            for input in &u.inputs {
                let spikes = match *input {
                    InputRef::Synapse { index, .. } => {
                        let s = &w.synapses()[index];
                        counts[&(s.src, s.dst)]
                    }
                    InputRef::Chained { .. } => rate,
                };
                links.push(Link {
                    src: input.source(),
                    dst: u.id,
                    spikes,
                });
            }
        }
    }
    DecomposedGraph { units, links }
}

/// Number of FIT units created for neurons with at least two inputs.
pub fn decomposition_cost(w: &SnnWorkload) -> usize {
    w.inputs_by_neuron()
        .values()
        .map(|syn| syn.len().saturating_sub(1))
        .sum()
}
