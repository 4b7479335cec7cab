//! Small hand-made graphs shared by tests, benches, and the CLI demo.

use num_rational::Rational64;

use crate::decompose::{DecomposedGraph, FitUnit, InputRef};

/// Five units: `a`, `b`, `c` (ids 0..3) inject 10, 12 and 9 spikes per
/// frame; `d = f(a, b)` fires 8 times and `e = f(c, d)` 5 times. With 2x2
/// crossbars greedy packing yields `{a, b, d}` and `{c, e}`, cutting only
/// the 8-spike link `d -> e`.
pub fn five_units() -> DecomposedGraph {
    let syn = |index, source| InputRef::Synapse {
        index,
        source,
        weight: 1.0,
    };
    let unit = |id: usize, inputs, spikes| FitUnit {
        id,
        parent: id as u32,
        inputs,
        spikes: Rational64::from_integer(spikes),
    };
    DecomposedGraph::from_units(vec![
        unit(0, vec![], 10),
        unit(1, vec![], 12),
        unit(2, vec![], 9),
        unit(3, vec![syn(0, 0), syn(1, 1)], 8),
        unit(4, vec![syn(2, 2), InputRef::Chained { source: 3, weight: 1.0 }], 5),
    ])
}
