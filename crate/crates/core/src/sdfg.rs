//! Synchronous dataflow graphs: the IR between clustering and mapping.
//!
//! Every channel owns one output port on its source and one input port on
//! its destination, so ports are implicit and the port/channel bijection
//! holds by construction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::cluster::ClusteredGraph;
use crate::error::{Error, Result};
use crate::hardware::ExecTimeModel;
use crate::io;

pub type ActorId = usize;
pub type ChannelId = usize;

/// Largest port rate accepted by [`build_sdfg`].
pub const DEFAULT_MAX_RATE: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Footprint {
    pub rows: usize,
    pub cols: usize,
    pub synapses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub id: ActorId,
    /// Execution time in ticks.
    pub exec_time: u64,
    /// Token capacity needed to hold one firing's inputs.
    #[serde(default)]
    pub state_space: u64,
    /// Crossbar resources, present for actors built from clusters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub footprint: Option<Footprint>,
    /// Spikes generated per firing (per frame), for energy accounting.
    #[serde(default)]
    pub spikes: Rational64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Spike traffic between clusters.
    #[default]
    Data,
    /// Buffer-space back-edge added by mapping.
    Buffer,
    /// Static-order sequencing between actors sharing a tile.
    Order,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub src: ActorId,
    pub dst: ActorId,
    pub prod: u64,
    pub cons: u64,
    #[serde(default)]
    pub tokens: u64,
    #[serde(default)]
    pub kind: ChannelKind,
    /// Spikes per frame carried, for energy accounting on data channels.
    #[serde(default)]
    pub spikes: Rational64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PortDir {
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Port {
    pub actor: ActorId,
    pub dir: PortDir,
    pub rate: u64,
    pub channel: ChannelId,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SdfgFile", into = "SdfgFile")]
pub struct Sdfg {
    actors: Vec<Actor>,
    channels: Vec<Channel>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdfgFile {
    pub actors: Vec<Actor>,
    #[serde(default)]
    pub channels: Vec<Channel>,
}

impl TryFrom<SdfgFile> for Sdfg {
    type Error = Error;

    fn try_from(f: SdfgFile) -> Result<Self> {
        Sdfg::new(f.actors, f.channels)
    }
}

impl From<Sdfg> for SdfgFile {
    fn from(g: Sdfg) -> Self {
        SdfgFile {
            actors: g.actors,
            channels: g.channels,
        }
    }
}

impl Sdfg {
    pub fn new(actors: Vec<Actor>, channels: Vec<Channel>) -> Result<Self> {
        for (i, a) in actors.iter().enumerate() {
            if a.id != i {
                return Err(Error::invalid("sdfg", format!("actor at position {i} has id {}", a.id)));
            }
            if a.exec_time == 0 {
                return Err(Error::invalid("sdfg", format!("actor {i} has zero execution time")));
            }
        }
        for (i, c) in channels.iter().enumerate() {
            if c.src >= actors.len() || c.dst >= actors.len() {
                return Err(Error::invalid("sdfg", format!("channel {i} ({}->{}) names a missing actor", c.src, c.dst)));
            }
            if c.prod == 0 || c.cons == 0 {
                return Err(Error::invalid("sdfg", format!("channel {i} has a zero rate")));
            }
        }
        Ok(Sdfg { actors, channels })
    }

    /// Actors with the given execution times and no channels.
    pub fn with_exec_times(times: &[u64]) -> Result<Self> {
        let actors = times
            .iter()
            .enumerate()
            .map(|(id, &exec_time)| Actor {
                id,
                exec_time,
                state_space: 0,
                footprint: None,
                spikes: Rational64::zero(),
            })
            .collect();
        Sdfg::new(actors, Vec::new())
    }

    pub fn actors(&self) -> &[Actor] {
        &self.actors
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn num_actors(&self) -> usize {
        self.actors.len()
    }

    pub fn exec_times(&self) -> Vec<u64> {
        self.actors.iter().map(|a| a.exec_time).collect()
    }

    pub fn add_channel(&mut self, c: Channel) -> Result<ChannelId> {
        if c.src >= self.actors.len() || c.dst >= self.actors.len() {
            return Err(Error::invalid("sdfg", format!("channel {}->{} names a missing actor", c.src, c.dst)));
        }
        if c.prod == 0 || c.cons == 0 {
            return Err(Error::invalid("sdfg", format!("channel {}->{} has a zero rate", c.src, c.dst)));
        }
        self.channels.push(c);
        Ok(self.channels.len() - 1)
    }

    /// Homogeneous channel with zero spikes; handy for fixtures.
    pub fn connect(&mut self, src: ActorId, dst: ActorId, rate: u64, tokens: u64) -> Result<ChannelId> {
        self.add_channel(Channel {
            src,
            dst,
            prod: rate,
            cons: rate,
            tokens,
            kind: ChannelKind::Data,
            spikes: Rational64::zero(),
        })
    }

    /// Copy keeping only channels accepted by `keep`.
    pub fn filter_channels(&self, mut keep: impl FnMut(&Channel) -> bool) -> Sdfg {
        Sdfg {
            actors: self.actors.clone(),
            channels: self.channels.iter().filter(|c| keep(c)).cloned().collect(),
        }
    }

    /// One input and one output port per channel, in channel order.
    pub fn ports(&self) -> Vec<Port> {
        self.channels
            .iter()
            .enumerate()
            .flat_map(|(i, c)| {
                [
                    Port {
                        actor: c.src,
                        dir: PortDir::Out,
                        rate: c.prod,
                        channel: i,
                    },
                    Port {
                        actor: c.dst,
                        dir: PortDir::In,
                        rate: c.cons,
                        channel: i,
                    },
                ]
            })
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph sdfg {\n");
        for a in &self.actors {
            let _ = writeln!(out, "  a{} [label=\"a{}\\ntau={}\"];", a.id, a.id, a.exec_time);
        }
        for c in &self.channels {
            let style = match c.kind {
                ChannelKind::Data => "solid",
                ChannelKind::Buffer => "dashed",
                ChannelKind::Order => "dotted",
            };
            let tokens = if c.tokens > 0 { format!(" [{}]", c.tokens) } else { String::new() };
            let _ = writeln!(
                out,
                "  a{} -> a{} [label=\"{}/{}{}\", style={style}];",
                c.src, c.dst, c.prod, c.cons, tokens
            );
        }
        out.push_str("}\n");
        out
    }

    /// True when the channels form no directed cycle.
    pub fn is_acyclic(&self) -> bool {
        topological_order(self.num_actors(), self.channels.iter().map(|c| (c.src, c.dst))).is_some()
    }
}

/// Kahn's algorithm; lowest ready id first. `None` when a cycle exists.
pub fn topological_order(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for (u, v) in edges {
        succ[u].push(v);
        indeg[v] += 1;
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = ready.pop_first() {
        order.push(u);
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.insert(v);
            }
        }
    }
    (order.len() == n).then_some(order)
}

pub fn load_sdfg(path: &Path) -> Result<Sdfg> {
    io::read_json(path)
}

pub fn save_sdfg(path: &Path, g: &Sdfg) -> Result<()> {
    io::write_json(path, g)
}

fn scaled_rate(spikes: Rational64, frame_scale: u64, max_rate: u64) -> Option<u64> {
    let scaled = spikes * Rational64::from_integer(i64::try_from(frame_scale).ok()?);
    let r = scaled.round().to_integer();
    let r = u64::try_from(r.max(1)).ok()?;
    (r <= max_rate).then_some(r)
}

/// One actor per cluster and one homogeneous channel per inter-cluster
/// connection. Rates are the rounded, scaled spikes per frame (at least 1).
///
/// Forward channels carry no tokens. If the cluster graph is cyclic, every
/// DFS back edge (from the lowest actor id, successors in ascending order)
/// gets one iteration's worth of tokens, so the cycle spans two frames.
pub fn build_sdfg(c: &ClusteredGraph, exec: &ExecTimeModel, frame_scale: u64) -> Result<Sdfg> {
    build_sdfg_capped(c, exec, frame_scale, DEFAULT_MAX_RATE)
}

pub fn build_sdfg_capped(c: &ClusteredGraph, exec: &ExecTimeModel, frame_scale: u64, max_rate: u64) -> Result<Sdfg> {
    if frame_scale == 0 {
        return Err(Error::invalid("sdfg", "frame scale must be positive"));
    }
    let n = c.clusters.len();
    let mut channels = Vec::with_capacity(c.connections.len());
    for k in &c.connections {
        let rate = scaled_rate(k.spikes, frame_scale, max_rate).ok_or(Error::RateOverflow {
            src: k.src,
            dst: k.dst,
            rate: (k.spikes * frame_scale as i64).round().to_integer().max(0) as u64,
            max: max_rate,
        })?;
        channels.push(Channel {
            src: k.src,
            dst: k.dst,
            prod: rate,
            cons: rate,
            tokens: 0,
            kind: ChannelKind::Data,
            spikes: k.spikes,
        });
    }
    for i in back_edges(n, &channels) {
        channels[i].tokens = channels[i].cons;
    }

    let mut state = vec![0u64; n];
    for ch in &channels {
        state[ch.dst] += ch.cons;
    }
    let mut actors = Vec::with_capacity(n);
    for (i, k) in c.clusters.iter().enumerate() {
        let internal = k.internal_spikes.ceil().to_integer().to_u64().unwrap_or(0);
        actors.push(Actor {
            id: i,
            exec_time: exec.exec_time(k.inputs, internal)?,
            state_space: state[i],
            footprint: Some(Footprint {
                rows: k.inputs,
                cols: k.outputs,
                synapses: k.synapses,
            }),
            spikes: k.spikes,
        });
    }
    Sdfg::new(actors, channels)
}

/// Channels closing a cycle in a DFS from the lowest unvisited id.
fn back_edges(n: usize, channels: &[Channel]) -> Vec<ChannelId> {
    let mut out_edges: Vec<Vec<ChannelId>> = vec![Vec::new(); n];
    for (i, c) in channels.iter().enumerate() {
        out_edges[c.src].push(i);
    }
    for list in &mut out_edges {
        list.sort_by_key(|&i| (channels[i].dst, i));
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; n];
    let mut back = Vec::new();
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        color[root] = 1;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if let Some(&e) = out_edges[u].get(*next) {
                *next += 1;
                let v = channels[e].dst;
                match color[v] {
                    0 => {
                        color[v] = 1;
                        stack.push((v, 0));
                    }
                    1 => back.push(e),
                    _ => {}
                }
            } else {
                color[u] = 2;
                stack.pop();
            }
        }
    }
    back.sort_unstable();
    back
}

/// Smallest positive integer solution of the balance equations. Each weakly
/// connected component is normalized on its own.
pub fn repetition_vector(g: &Sdfg) -> Result<Vec<u64>> {
    let n = g.num_actors();
    let mut adj: Vec<Vec<(ActorId, Rational64)>> = vec![Vec::new(); n];
    for c in g.channels() {
        // rv[dst] = rv[src] * prod / cons
        let ratio = Rational64::new(c.prod as i64, c.cons as i64);
        adj[c.src].push((c.dst, ratio));
        adj[c.dst].push((c.src, ratio.recip()));
    }
    let mut rv: Vec<Option<Rational64>> = vec![None; n];
    let mut component = vec![usize::MAX; n];
    let mut result = vec![0u64; n];
    for root in 0..n {
        if rv[root].is_some() {
            continue;
        }
        rv[root] = Some(Rational64::from_integer(1));
        component[root] = root;
        let mut members = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let ru = rv[u].expect("visited");
            for &(v, ratio) in &adj[u] {
                if rv[v].is_none() {
                    rv[v] = Some(ru * ratio);
                    component[v] = root;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        let lcm = members
            .iter()
            .fold(1i64, |acc, &v| acc.lcm(rv[v].expect("visited").denom()));
        let ints: Vec<i64> = members
            .iter()
            .map(|&v| (rv[v].expect("visited") * lcm).to_integer())
            .collect();
        let gcd = ints.iter().fold(0i64, |acc, &x| acc.gcd(&x));
        for (&v, &x) in members.iter().zip(&ints) {
            result[v] = (x / gcd) as u64;
        }
    }
    let bad: Vec<ChannelId> = g
        .channels()
        .iter()
        .enumerate()
        .filter(|(_, c)| result[c.src] as u128 * c.prod as u128 != result[c.dst] as u128 * c.cons as u128)
        .map(|(i, _)| i)
        .collect();
    if bad.is_empty() {
        Ok(result)
    } else {
        Err(Error::Inconsistent { channels: bad })
    }
}

fn digraph(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> DiGraph<(), ()> {
    let mut dg = DiGraph::with_capacity(n, 0);
    for _ in 0..n {
        dg.add_node(());
    }
    for (u, v) in edges {
        dg.add_edge(NodeIndex::new(u), NodeIndex::new(v), ());
    }
    dg
}

/// Maximal strongly connected components over `n` nodes, each sorted, listed
/// by their lowest member.
pub fn sccs(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&digraph(n, edges))
        .into_iter()
        .map(|c| {
            let mut ids: Vec<usize> = c.into_iter().map(|i| i.index()).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    comps.sort_unstable_by_key(|c| c[0]);
    comps
}

pub fn strongly_connected_subgraphs(g: &Sdfg) -> Vec<Vec<ActorId>> {
    sccs(g.num_actors(), g.channels().iter().map(|c| (c.src, c.dst)))
}

/// Result of cycle breaking: the acyclic remainder and the inter-iteration
/// channels taken out of it. The removed channels still constrain execution
/// across iterations and are kept for simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct BrokenCycles {
    pub acyclic: Sdfg,
    pub removed: Vec<ChannelId>,
}

impl BrokenCycles {
    pub fn removed_channels<'a>(&self, original: &'a Sdfg) -> Vec<&'a Channel> {
        self.removed.iter().map(|&i| &original.channels()[i]).collect()
    }
}

/// Recursively removes, inside each strongly connected subgraph, every
/// channel holding enough initial tokens for a full iteration of its sink,
/// until no cycle remains. A subgraph without such a channel deadlocks.
pub fn break_cycles(g: &Sdfg) -> Result<BrokenCycles> {
    let rv = repetition_vector(g)?;
    let n = g.num_actors();
    let mut alive = vec![true; g.channels().len()];
    let mut work: Vec<Vec<ActorId>> = strongly_connected_subgraphs(g);
    while let Some(scc) = work.pop() {
        let members: BTreeSet<ActorId> = scc.iter().copied().collect();
        let inside: Vec<ChannelId> = (0..g.channels().len())
            .filter(|&i| {
                let c = &g.channels()[i];
                alive[i] && members.contains(&c.src) && members.contains(&c.dst)
            })
            .collect();
        let cyclic = scc.len() > 1 || inside.iter().any(|&i| g.channels()[i].src == g.channels()[i].dst);
        if !cyclic {
            continue;
        }
        let removable: Vec<ChannelId> = inside
            .iter()
            .copied()
            .filter(|&i| {
                let c = &g.channels()[i];
                c.tokens as u128 >= c.cons as u128 * rv[c.dst] as u128
            })
            .collect();
        if removable.is_empty() {
            return Err(Error::Deadlock { actors: scc });
        }
        for &i in &removable {
            alive[i] = false;
        }
        let remaining = inside.iter().filter(|&&i| alive[i]).map(|&i| (g.channels()[i].src, g.channels()[i].dst));
        // Recurse on the sub-components of this SCC.
        let local: BTreeMap<ActorId, usize> = scc.iter().enumerate().map(|(k, &a)| (a, k)).collect();
        let sub = sccs(scc.len(), remaining.map(|(u, v)| (local[&u], local[&v])).collect::<Vec<_>>());
        for comp in sub {
            work.push(comp.into_iter().map(|k| scc[k]).collect());
        }
    }
    let removed: Vec<ChannelId> = (0..alive.len()).filter(|&i| !alive[i]).collect();
    let acyclic = Sdfg {
        actors: g.actors.clone(),
        channels: g
            .channels()
            .iter()
            .zip(&alive)
            .filter(|(_, &a)| a)
            .map(|(c, _)| c.clone())
            .collect(),
    };
    debug_assert!(acyclic.is_acyclic() || n == 0);
    Ok(BrokenCycles { acyclic, removed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::cluster_greedy;
    use crate::decompose::DecomposedGraph;
    use crate::fixtures::five_units;

    fn pair(t0: u64, t1: u64) -> Sdfg {
        Sdfg::with_exec_times(&[t0, t1]).unwrap()
    }

    #[test]
    fn five_unit_clustering_gives_two_actors_and_rate_eight() {
        let g = cluster_greedy(&five_units(), 2).unwrap();
        let s = build_sdfg(&g, &ExecTimeModel::default(), 1).unwrap();
        assert_eq!(s.num_actors(), 2);
        assert_eq!(s.channels().len(), 1);
        assert_eq!(s.channels()[0].prod, 8);
        assert_eq!(repetition_vector(&s).unwrap(), vec![1, 1]);
    }

    #[test]
    fn single_cluster_has_no_channels() {
        let g = cluster_greedy(&DecomposedGraph::default(), 4).unwrap();
        assert!(g.clusters.is_empty());
        let g = cluster_greedy(&five_units(), 8).unwrap();
        let s = build_sdfg(&g, &ExecTimeModel::default(), 1).unwrap();
        assert_eq!(s.num_actors(), 1);
        assert!(s.channels().is_empty());
    }

    #[test]
    fn rates_round_and_overflow() {
        let mut g = cluster_greedy(&five_units(), 2).unwrap();
        g.connections[0].spikes = Rational64::new(1, 3);
        let s = build_sdfg(&g, &ExecTimeModel::default(), 1).unwrap();
        assert_eq!(s.channels()[0].prod, 1);
        let s = build_sdfg(&g, &ExecTimeModel::default(), 30).unwrap();
        assert_eq!(s.channels()[0].prod, 10);
        assert!(matches!(
            build_sdfg_capped(&g, &ExecTimeModel::default(), 30, 5),
            Err(Error::RateOverflow { .. })
        ));
    }

    #[test]
    fn two_to_three_balance() {
        let mut g = pair(1, 1);
        g.add_channel(Channel {
            src: 0,
            dst: 1,
            prod: 2,
            cons: 3,
            tokens: 0,
            kind: ChannelKind::Data,
            spikes: Rational64::zero(),
        })
        .unwrap();
        assert_eq!(repetition_vector(&g).unwrap(), vec![3, 2]);
        g.connect(0, 1, 1, 0).unwrap();
        assert!(matches!(repetition_vector(&g), Err(Error::Inconsistent { .. })));
    }

    #[test]
    fn mutual_channels_form_one_scc() {
        let mut g = pair(1, 1);
        g.connect(0, 1, 1, 0).unwrap();
        g.connect(1, 0, 1, 0).unwrap();
        assert_eq!(strongly_connected_subgraphs(&g), vec![vec![0, 1]]);
        assert!(matches!(break_cycles(&g), Err(Error::Deadlock { actors }) if actors == vec![0, 1]));
    }

    #[test]
    fn chain_has_singleton_sccs() {
        let mut g = Sdfg::with_exec_times(&[1, 1, 1]).unwrap();
        g.connect(0, 1, 1, 0).unwrap();
        g.connect(1, 2, 1, 0).unwrap();
        assert_eq!(strongly_connected_subgraphs(&g), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn self_loop_with_tokens_is_removed() {
        let mut g = Sdfg::with_exec_times(&[3]).unwrap();
        g.connect(0, 0, 2, 2).unwrap();
        let b = break_cycles(&g).unwrap();
        assert_eq!(b.removed, vec![0]);
        assert!(b.acyclic.channels().is_empty());
    }

    #[test]
    fn back_channel_with_tokens_leaves_a_chain() {
        let mut g = pair(2, 3);
        g.connect(0, 1, 4, 0).unwrap();
        g.connect(1, 0, 4, 4).unwrap();
        let b = break_cycles(&g).unwrap();
        assert_eq!(b.removed, vec![1]);
        assert_eq!(b.acyclic.channels().len(), 1);
        assert!(b.acyclic.is_acyclic());
    }

    #[test]
    fn cyclic_cluster_graph_gets_tokens_on_back_edges() {
        let mut g = cluster_greedy(&five_units(), 2).unwrap();
        g.connections.push(crate::cluster::Connection {
            src: 1,
            dst: 0,
            spikes: Rational64::from_integer(3),
        });
        let s = build_sdfg(&g, &ExecTimeModel::default(), 1).unwrap();
        assert_eq!(s.channels()[0].tokens, 0);
        assert_eq!(s.channels()[1].tokens, 3);
        assert!(break_cycles(&s).is_ok());
    }

    #[test]
    fn ports_pair_with_channels() {
        let mut g = pair(1, 1);
        g.connect(0, 1, 2, 0).unwrap();
        let ports = g.ports();
        assert_eq!(ports.len(), 2);
        assert_eq!(ports[0].dir, PortDir::Out);
        assert_eq!(ports[1].actor, 1);
    }

    #[test]
    fn json_round_trip() {
        let mut g = pair(4, 5);
        g.connect(0, 1, 2, 1).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: Sdfg = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        let bad = text.replace("\"prod\":2", "\"prod\":0");
        assert!(serde_json::from_str::<Sdfg>(&bad).is_err());
    }
}
