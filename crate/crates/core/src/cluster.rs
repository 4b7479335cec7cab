//! Packing FIT units into crossbar-sized clusters.
//!
//! A cluster occupies one `N x N` crossbar. Every unit with inputs takes a
//! column; every distinct presynaptic source of those units takes a row, as
//! does each input-only unit placed in the cluster; each unit input is one
//! synapse. Sources shared by several members share a row.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_rational::Rational64;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decompose::{DecomposedGraph, FitUnit, UnitId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub members: Vec<UnitId>,
    /// Crossbar rows in use (presynaptic inputs).
    pub inputs: usize,
    /// Crossbar columns in use (postsynaptic outputs).
    pub outputs: usize,
    /// Synapses programmed on the crossbar.
    pub synapses: usize,
    /// Spikes per frame emitted by the members.
    pub spikes: Rational64,
    /// Spikes per frame on links between members.
    pub internal_spikes: Rational64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub src: usize,
    pub dst: usize,
    pub spikes: Rational64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteredGraph {
    pub crossbar_n: usize,
    pub clusters: Vec<Cluster>,
    pub connections: Vec<Connection>,
}

impl ClusteredGraph {
    pub fn cut_spikes(&self) -> Rational64 {
        self.connections.iter().map(|c| c.spikes).sum()
    }

    pub fn cluster_of(&self) -> HashMap<UnitId, usize> {
        self.clusters
            .iter()
            .flat_map(|c| c.members.iter().map(move |&u| (u, c.id)))
            .collect()
    }

    /// Checks the crossbar limits, that member sets are disjoint, and that
    /// connections name existing clusters.
    pub fn validate(&self) -> Result<()> {
        let n = self.crossbar_n;
        let mut seen = BTreeSet::new();
        for (i, c) in self.clusters.iter().enumerate() {
            if c.id != i {
                return Err(Error::invalid("clustered graph", format!("cluster at position {i} has id {}", c.id)));
            }
            if c.inputs > n || c.outputs > n || c.synapses > n * n {
                return Err(Error::invalid("clustered graph", format!("cluster {i} exceeds the {n}x{n} crossbar")));
            }
            for &u in &c.members {
                if !seen.insert(u) {
                    return Err(Error::invalid("clustered graph", format!("unit {u} belongs to two clusters")));
                }
            }
        }
        for k in &self.connections {
            if k.src >= self.clusters.len() || k.dst >= self.clusters.len() || k.src == k.dst {
                return Err(Error::invalid("clustered graph", format!("connection {}->{} is invalid", k.src, k.dst)));
            }
        }
        Ok(())
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph csnn {\n");
        for c in &self.clusters {
            let _ = writeln!(
                out,
                "  c{} [label=\"c{}\\n{} units, {} syn\"];",
                c.id,
                c.id,
                c.members.len(),
                c.synapses
            );
        }
        for k in &self.connections {
            let _ = writeln!(out, "  c{} -> c{} [label=\"{}\"];", k.src, k.dst, k.spikes);
        }
        out.push_str("}\n");
        out
    }
}

/// Crossbar resources claimed by a set of units.
#[derive(Clone, Debug, Default)]
struct Occupancy {
    rows: HashMap<UnitId, u32>,
    cols: usize,
    synapses: usize,
}

impl Occupancy {
    fn row_claims(unit: &FitUnit) -> impl Iterator<Item = UnitId> + '_ {
        let own = unit.is_source().then_some(unit.id);
        own.into_iter().chain(unit.inputs.iter().map(|i| i.source()))
    }

    fn fits(&self, unit: &FitUnit, n: usize) -> bool {
        if self.cols + usize::from(!unit.is_source()) > n || self.synapses + unit.inputs.len() > n * n {
            return false;
        }
        // A unit claims at most a handful of rows, so a quadratic dedup is cheapest.
        let mut fresh = 0;
        for (i, r) in Self::row_claims(unit).enumerate() {
            if !self.rows.contains_key(&r) && !Self::row_claims(unit).take(i).any(|e| e == r) {
                fresh += 1;
            }
        }
        self.rows.len() + fresh <= n
    }

    fn add(&mut self, unit: &FitUnit) {
        for r in Self::row_claims(unit) {
            *self.rows.entry(r).or_insert(0) += 1;
        }
        self.cols += usize::from(!unit.is_source());
        self.synapses += unit.inputs.len();
    }

    fn remove(&mut self, unit: &FitUnit) {
        for r in Self::row_claims(unit) {
            let slot = self.rows.get_mut(&r).expect("claimed row");
            *slot -= 1;
            if *slot == 0 {
                self.rows.remove(&r);
            }
        }
        self.cols -= usize::from(!unit.is_source());
        self.synapses -= unit.inputs.len();
    }

    /// Ordering key: synapse utilization, then neuron utilization.
    fn key(&self) -> (usize, usize) {
        (self.synapses, self.rows.len() + self.cols)
    }
}

fn check_crossbar(g: &DecomposedGraph, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("crossbar", format!("crossbar dimension must be at least 2, got {n}")));
    }
    let empty = Occupancy::default();
    for u in &g.units {
        if !empty.fits(u, n) {
            return Err(Error::InfeasibleUnit { unit: u.id, crossbar: n });
        }
    }
    Ok(())
}

/// Utilization-aware greedy clustering. Each unit goes to the first
/// existing cluster that can take it, visiting clusters by descending
/// (synapse, neuron) utilization and ascending id; a new cluster is opened
/// only when none fits.
pub fn cluster_greedy(g: &DecomposedGraph, crossbar_n: usize) -> Result<ClusteredGraph> {
    check_crossbar(g, crossbar_n)?;
    let mut occ: Vec<Occupancy> = Vec::new();
    let mut order: BTreeSet<(Reverse<usize>, Reverse<usize>, usize)> = BTreeSet::new();
    let mut assign = vec![0; g.units.len()];
    for unit in &g.units {
        let target = order
            .iter()
            .map(|&(_, _, id)| id)
            .find(|&id| occ[id].fits(unit, crossbar_n));
        let id = match target {
            Some(id) => {
                let (s, n) = occ[id].key();
                order.remove(&(Reverse(s), Reverse(n), id));
                id
            }
            None => {
                occ.push(Occupancy::default());
                occ.len() - 1
            }
        };
        occ[id].add(unit);
        let (s, n) = occ[id].key();
        order.insert((Reverse(s), Reverse(n), id));
        assign[unit.id] = id;
    }
    Ok(build(g, crossbar_n, &assign))
}

/// Random restarts used by the min-cut baseline.
pub const MINCUT_RESTARTS: u64 = 4;
const MAX_REFINE_PASSES: usize = 64;

/// Communication-minimizing baseline: random feasible first-fit start, then
/// Kernighan–Lin style single moves and pairwise swaps that lower the cut
/// spike total while keeping every crossbar feasible. The best of a few
/// seeded restarts is kept.
pub fn cluster_mincut(g: &DecomposedGraph, crossbar_n: usize, seed: u64) -> Result<ClusteredGraph> {
    check_crossbar(g, crossbar_n)?;
    let adj = adjacency(g);
    let mut best: Option<(Rational64, usize, Vec<usize>)> = None;
    for r in 0..MINCUT_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ r.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut order: Vec<UnitId> = (0..g.units.len()).collect();
        order.shuffle(&mut rng);

        let mut occ: Vec<Occupancy> = Vec::new();
        let mut assign = vec![0; g.units.len()];
        for &u in &order {
            let unit = &g.units[u];
            let id = match occ.iter().position(|o| o.fits(unit, crossbar_n)) {
                Some(id) => id,
                None => {
                    occ.push(Occupancy::default());
                    occ.len() - 1
                }
            };
            occ[id].add(unit);
            assign[u] = id;
        }
        refine(g, crossbar_n, &adj, &order, &mut assign, &mut occ);

        let cut = cut_of(&adj, &assign);
        let used = occ.iter().filter(|o| o.cols > 0 || !o.rows.is_empty()).count();
        let better = match &best {
            None => true,
            Some((c, n, _)) => (cut, used) < (*c, *n),
        };
        if better {
            best = Some((cut, used, assign));
        }
    }
    let assign = best.map(|b| b.2).unwrap_or_default();
    Ok(build(g, crossbar_n, &assign))
}

type Adjacency = Vec<Vec<(UnitId, Rational64)>>;

fn adjacency(g: &DecomposedGraph) -> Adjacency {
    let mut adj = vec![Vec::new(); g.units.len()];
    for l in &g.links {
        if l.src != l.dst {
            adj[l.src].push((l.dst, l.spikes));
            adj[l.dst].push((l.src, l.spikes));
        }
    }
    adj
}

fn cut_of(adj: &Adjacency, assign: &[usize]) -> Rational64 {
    let mut cut = Rational64::zero();
    for (u, nbrs) in adj.iter().enumerate() {
        for &(v, s) in nbrs {
            if assign[u] != assign[v] {
                cut += s;
            }
        }
    }
    cut / 2
}

/// Link weight from `u` into each cluster.
fn affinity(adj: &Adjacency, assign: &[usize], u: UnitId) -> BTreeMap<usize, Rational64> {
    let mut m = BTreeMap::new();
    for &(v, s) in &adj[u] {
        *m.entry(assign[v]).or_insert_with(Rational64::zero) += s;
    }
    m
}

fn refine(
    g: &DecomposedGraph,
    n: usize,
    adj: &Adjacency,
    order: &[UnitId],
    assign: &mut [usize],
    occ: &mut [Occupancy],
) {
    let zero = Rational64::zero();
    for _ in 0..MAX_REFINE_PASSES {
        let mut improved = false;
        for &u in order {
            let home = assign[u];
            let aff = affinity(adj, assign, u);
            let internal = aff.get(&home).copied().unwrap_or(zero);
            let mut best: Option<(Rational64, usize)> = None;
            for (&c, &w) in &aff {
                let gain = w - internal;
                if c != home && gain > zero && best.is_none_or(|(bg, _)| gain > bg) && occ[c].fits(&g.units[u], n) {
                    best = Some((gain, c));
                }
            }
            if let Some((_, c)) = best {
                occ[home].remove(&g.units[u]);
                occ[c].add(&g.units[u]);
                assign[u] = c;
                improved = true;
            }
        }
        for &u in order {
            for &(v, w_uv) in &adj[u] {
                let (cu, cv) = (assign[u], assign[v]);
                if cu == cv {
                    continue;
                }
                let au = affinity(adj, assign, u);
                let av = affinity(adj, assign, v);
                let gain_u = au.get(&cv).copied().unwrap_or(zero) - au.get(&cu).copied().unwrap_or(zero);
                let gain_v = av.get(&cu).copied().unwrap_or(zero) - av.get(&cv).copied().unwrap_or(zero);
                let gain = gain_u + gain_v - w_uv * 2;
                if gain <= zero {
                    continue;
                }
                let (unit_u, unit_v) = (&g.units[u], &g.units[v]);
                occ[cu].remove(unit_u);
                occ[cv].remove(unit_v);
                if occ[cu].fits(unit_v, n) && occ[cv].fits(unit_u, n) {
                    occ[cu].add(unit_v);
                    occ[cv].add(unit_u);
                    assign[u] = cv;
                    assign[v] = cu;
                    improved = true;
                } else {
                    occ[cu].add(unit_u);
                    occ[cv].add(unit_v);
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Materializes a unit-to-cluster assignment. Clusters are renumbered by
/// their lowest member id and empty ones dropped.
fn build(g: &DecomposedGraph, n: usize, assign: &[usize]) -> ClusteredGraph {
    let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
    let mut by_first: Vec<usize> = Vec::new();
    for &c in assign {
        if let std::collections::btree_map::Entry::Vacant(e) = renumber.entry(c) {
            e.insert(by_first.len());
            by_first.push(c);
        }
    }
    let k = by_first.len();
    let mut occ = vec![Occupancy::default(); k];
    let mut members = vec![Vec::new(); k];
    let mut spikes = vec![Rational64::zero(); k];
    for u in &g.units {
        let c = renumber[&assign[u.id]];
        occ[c].add(u);
        members[c].push(u.id);
        spikes[c] += u.spikes;
    }
    let mut internal = vec![Rational64::zero(); k];
    let mut cut: BTreeMap<(usize, usize), Rational64> = BTreeMap::new();
    for l in &g.links {
        let (a, b) = (renumber[&assign[l.src]], renumber[&assign[l.dst]]);
        if a == b {
            internal[a] += l.spikes;
        } else {
            *cut.entry((a, b)).or_insert_with(Rational64::zero) += l.spikes;
        }
    }
    let clusters = (0..k)
        .map(|c| Cluster {
            id: c,
            members: std::mem::take(&mut members[c]),
            inputs: occ[c].rows.len(),
            outputs: occ[c].cols,
            synapses: occ[c].synapses,
            spikes: spikes[c],
            internal_spikes: internal[c],
        })
        .collect();
    let connections = cut
        .into_iter()
        .map(|((src, dst), spikes)| Connection { src, dst, spikes })
        .collect();
    ClusteredGraph {
        crossbar_n: n,
        clusters,
        connections,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterUtilization {
    pub cluster: usize,
    pub synapse_pct: f64,
    pub neuron_pct: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub clusters: Vec<ClusterUtilization>,
    pub mean_synapse_pct: f64,
    pub mean_neuron_pct: f64,
}

pub fn utilization_report(c: &ClusteredGraph, crossbar_n: usize) -> UtilizationReport {
    let n = crossbar_n as f64;
    let clusters: Vec<ClusterUtilization> = c
        .clusters
        .iter()
        .map(|k| ClusterUtilization {
            cluster: k.id,
            synapse_pct: 100.0 * k.synapses as f64 / (n * n),
            neuron_pct: 100.0 * (k.inputs + k.outputs) as f64 / (2.0 * n),
        })
        .collect();
    if clusters.is_empty() {
        return UtilizationReport::default();
    }
    let len = clusters.len() as f64;
    UtilizationReport {
        mean_synapse_pct: clusters.iter().map(|u| u.synapse_pct).sum::<f64>() / len,
        mean_neuron_pct: clusters.iter().map(|u| u.neuron_pct).sum::<f64>() / len,
        clusters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::InputRef;
    use crate::fixtures::five_units ;

    fn syn(index: usize, source: UnitId) -> InputRef {
        InputRef::Synapse {
            index,
            source,
            weight: 1.0,
        }
    }

    #[test]
    fn greedy_packs_five_units_into_two_crossbars() {
        let c = cluster_greedy(&five_units(), 2).unwrap();
        assert_eq!(c.clusters.len(), 2);
        assert_eq!(c.cut_spikes(), Rational64::from_integer(8));
        assert_eq!(c.clusters[0].members, vec![0, 1, 3]);
        assert_eq!(c.clusters[1].members, vec![2, 4]);
    }

    #[test]
    fn mincut_never_cuts_more_than_greedy() {
        let greedy = cluster_greedy(&five_units(), 2).unwrap();
        for seed in 0..8 {
            let mc = cluster_mincut(&five_units(), 2, seed).unwrap();
            assert!(mc.cut_spikes() <= greedy.cut_spikes());
        }
    }

    #[test]
    fn everything_fits_one_large_crossbar() {
        for c in [cluster_greedy(&five_units(), 8).unwrap(), cluster_mincut(&five_units(), 8, 1).unwrap()] {
            assert_eq!(c.clusters.len(), 1);
            assert!(c.connections.is_empty());
        }
    }

    #[test]
    fn crossbar_below_two_is_rejected() {
        assert!(cluster_greedy(&five_units(), 1).is_err());
    }

    #[test]
    fn full_crossbar_reports_full_utilization() {
        // A 2x2 crossbar holding two 2-input units sharing both sources.
        let r = Rational64::from_integer;
        let g = DecomposedGraph::from_units(vec![
            FitUnit { id: 0, parent: 0, inputs: vec![], spikes: r(1) },
            FitUnit { id: 1, parent: 1, inputs: vec![], spikes: r(1) },
            FitUnit { id: 2, parent: 2, inputs: vec![syn(0, 0), syn(1, 1)], spikes: r(1) },
            FitUnit { id: 3, parent: 3, inputs: vec![syn(2, 0), syn(3, 1)], spikes: r(1) },
        ]);
        let c = cluster_greedy(&g, 2).unwrap();
        assert_eq!(c.clusters.len(), 1);
        let rep = utilization_report(&c, 2);
        assert_eq!(rep.clusters[0].synapse_pct, 100.0);
        assert_eq!(rep.clusters[0].neuron_pct, 100.0);
    }

    #[test]
    fn empty_report() {
        let c = ClusteredGraph {
            crossbar_n: 4,
            clusters: vec![],
            connections: vec![],
        };
        assert!(utilization_report(&c, 4).clusters.is_empty());
    }

    #[test]
    fn greedy_is_at_least_as_dense_as_mincut() {
        let g = five_units();
        let greedy = utilization_report(&cluster_greedy(&g, 2).unwrap(), 2);
        let mc = utilization_report(&cluster_mincut(&g, 2, 5).unwrap(), 2);
        assert!(greedy.mean_synapse_pct >= mc.mean_synapse_pct);
    }
}
