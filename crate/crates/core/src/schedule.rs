//! Static-order schedules and self-timed execution.
//!
//! Actors sharing a tile fire in a fixed cyclic order. The order is encoded
//! in the SDFG as zero-token channels between consecutive actors and one
//! token on the channel closing the ring, which makes the max-plus period of
//! the ordered graph the period of the self-timed execution.

use std::collections::{BTreeSet, HashMap};

use num_rational::Rational64;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::TileId;
use crate::mapping::Mapping;
use crate::maxplus::period;
use crate::sdfg::{ActorId, Channel, ChannelKind, Sdfg};

/// Per-tile firing order for one iteration; tile `t`'s list is `tiles[t]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticOrder {
    pub tiles: Vec<Vec<ActorId>>,
}

impl StaticOrder {
    /// Checks that every actor appears exactly once, on its mapped tile.
    pub fn validate(&self, m: &Mapping) -> Result<()> {
        if self.tiles.len() != m.num_tiles() {
            return Err(Error::DimensionMismatch {
                expected: m.num_tiles(),
                got: self.tiles.len(),
            });
        }
        let mut seen = vec![false; m.num_actors()];
        for (t, list) in self.tiles.iter().enumerate() {
            for &a in list {
                if a >= seen.len() || seen[a] || m.tile_of(a) != t {
                    return Err(Error::invalid("static order", format!("actor {a} is misplaced on tile {t}")));
                }
                seen[a] = true;
            }
        }
        if let Some(a) = seen.iter().position(|s| !s) {
            return Err(Error::Coverage { actor: a });
        }
        Ok(())
    }

    fn tile_of(&self, n: usize) -> Vec<TileId> {
        let mut tile = vec![0; n];
        for (t, list) in self.tiles.iter().enumerate() {
            for &a in list {
                tile[a] = t;
            }
        }
        tile
    }
}

/// `g` plus the order channels of `order`.
pub fn ordered_graph(g: &Sdfg, order: &StaticOrder) -> Result<Sdfg> {
    let mut out = g.clone();
    for list in &order.tiles {
        if list.len() < 2 {
            continue;
        }
        for (i, &a) in list.iter().enumerate() {
            let next = list[(i + 1) % list.len()];
            out.add_channel(Channel {
                src: a,
                dst: next,
                prod: 1,
                cons: 1,
                tokens: u64::from(i + 1 == list.len()),
                kind: ChannelKind::Order,
                spikes: Rational64::default(),
            })?;
        }
    }
    Ok(out)
}

/// Period of `g` executed with `order`.
pub fn ordered_period(g: &Sdfg, order: &StaticOrder) -> Result<Rational64> {
    period(&ordered_graph(g, order)?)?.ok_or_else(|| Error::invalid("static order", "graph has no actors"))
}

/// Zero-delay data dependencies: the intra-iteration precedence relation
/// with unbounded buffers.
fn data_preds(g: &Sdfg) -> Vec<Vec<ActorId>> {
    let mut preds = vec![Vec::new(); g.num_actors()];
    for c in g.channels() {
        if c.kind == ChannelKind::Data && c.tokens < c.cons && c.src != c.dst {
            preds[c.dst].push(c.src);
        }
    }
    preds
}

/// Firing end times of the first iteration with unbounded buffers and no
/// resource sharing.
fn asap_end_times(g: &Sdfg) -> Result<Vec<u64>> {
    let preds = data_preds(g);
    let edges = preds.iter().enumerate().flat_map(|(v, ps)| ps.iter().map(move |&u| (u, v)));
    let topo = crate::sdfg::topological_order(g.num_actors(), edges.collect::<Vec<_>>())
        .ok_or_else(|| Error::Deadlock { actors: Vec::new() })?;
    let tau = g.exec_times();
    let mut end = vec![0u64; g.num_actors()];
    for &v in &topo {
        end[v] = preds[v].iter().map(|&u| end[u]).max().unwrap_or(0) + tau[v];
    }
    Ok(end)
}

/// Single-tile reference order: all actors by ascending first-iteration end
/// time, ties by id. On one tile every valid order has the same period
/// (the sum of execution times), so this is the lowest-index optimum.
pub fn single_tile_order(g: &Sdfg) -> Result<Vec<ActorId>> {
    let end = asap_end_times(g)?;
    let mut all: Vec<ActorId> = (0..g.num_actors()).collect();
    all.sort_by_key(|&a| (end[a], a));
    Ok(all)
}

/// Each tile's order is the single-tile order restricted to its actors.
pub fn derive_from_single_tile(single: &[ActorId], m: &Mapping) -> Result<StaticOrder> {
    let mut seen = vec![false; m.num_actors()];
    let mut tiles = vec![Vec::new(); m.num_tiles()];
    for &a in single {
        if a >= seen.len() || seen[a] {
            return Err(Error::invalid("single-tile order", format!("actor {a} is unknown or repeated")));
        }
        seen[a] = true;
        tiles[m.tile_of(a)].push(a);
    }
    if let Some(a) = seen.iter().position(|s| !s) {
        return Err(Error::Coverage { actor: a });
    }
    Ok(StaticOrder { tiles })
}

/// Contention-aware list schedule of one iteration: repeatedly start the
/// ready actor with the earliest feasible start on its tile, preferring
/// longer remaining paths, then lower ids.
fn list_schedule(g: &Sdfg, m: &Mapping) -> Result<StaticOrder> {
    let n = g.num_actors();
    let preds = data_preds(g);
    let tau = g.exec_times();
    let mut succs = vec![Vec::new(); n];
    for (v, ps) in preds.iter().enumerate() {
        for &u in ps {
            succs[u].push(v);
        }
    }
    let topo = crate::sdfg::topological_order(
        n,
        preds.iter().enumerate().flat_map(|(v, ps)| ps.iter().map(move |&u| (u, v))).collect::<Vec<_>>(),
    )
    .ok_or_else(|| Error::Deadlock { actors: Vec::new() })?;
    let mut level = vec![0u64; n];
    for &v in topo.iter().rev() {
        level[v] = tau[v] + succs[v].iter().map(|&s| level[s]).max().unwrap_or(0);
    }

    let mut missing: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut ready_at = vec![0u64; n];
    let mut ready: BTreeSet<ActorId> = (0..n).filter(|&v| missing[v] == 0).collect();
    let mut tile_free = vec![0u64; m.num_tiles()];
    let mut tiles = vec![Vec::new(); m.num_tiles()];
    while !ready.is_empty() {
        let &pick = ready
            .iter()
            .min_by_key(|&&v| (ready_at[v].max(tile_free[m.tile_of(v)]), std::cmp::Reverse(level[v]), v))
            .expect("non-empty");
        ready.remove(&pick);
        let t = m.tile_of(pick);
        let end = ready_at[pick].max(tile_free[t]) + tau[pick];
        tile_free[t] = end;
        tiles[t].push(pick);
        for &s in &succs[pick] {
            ready_at[s] = ready_at[s].max(end);
            missing[s] -= 1;
            if missing[s] == 0 {
                ready.insert(s);
            }
        }
    }
    Ok(StaticOrder { tiles })
}

/// Graphs up to this many actors get an adjacent-swap refinement.
pub const HILL_CLIMB_MAX_ACTORS: usize = 16;
const HILL_CLIMB_PASSES: usize = 8;

/// Improves `start` by adjacent swaps on the unbounded-buffer ordered graph.
fn hill_climb(data: &Sdfg, start: StaticOrder) -> StaticOrder {
    let Ok(mut best) = ordered_period(data, &start) else { return start };
    let mut cur = start;
    for _ in 0..HILL_CLIMB_PASSES {
        let mut improved = false;
        for t in 0..cur.tiles.len() {
            for i in 0..cur.tiles[t].len().saturating_sub(1) {
                cur.tiles[t].swap(i, i + 1);
                match ordered_period(data, &cur) {
                    Ok(p) if p < best => {
                        best = p;
                        improved = true;
                    }
                    _ => cur.tiles[t].swap(i, i + 1),
                }
            }
        }
        if !improved {
            break;
        }
    }
    cur
}

/// Candidate orders for `m`, none of which depends on buffer sizes.
pub fn candidate_orders(g: &Sdfg, m: &Mapping) -> Result<Vec<StaticOrder>> {
    let data = g.filter_channels(|c| c.kind == ChannelKind::Data);
    let projected = derive_from_single_tile(&single_tile_order(&data)?, m)?;
    if m.used_tiles() <= 1 {
        return Ok(vec![projected]);
    }
    let mut out = vec![projected];
    let listed = list_schedule(&data, m)?;
    if !out.contains(&listed) {
        out.push(listed);
    }
    if g.num_actors() <= HILL_CLIMB_MAX_ACTORS {
        let seed = out
            .iter()
            .min_by_key(|o| ordered_period(&data, o).ok())
            .cloned()
            .expect("non-empty");
        let climbed = hill_climb(&data, seed);
        if !out.contains(&climbed) {
            out.push(climbed);
        }
    }
    Ok(out)
}

/// Static-order schedule for a constrained graph: the candidate with the
/// smallest period on `g`, ties to the earliest candidate. The first
/// candidate is the projection of the single-tile order, and it is the only
/// candidate when a single tile is used.
pub fn static_order(g: &Sdfg, m: &Mapping) -> Result<StaticOrder> {
    Ok(best_order(g, m)?.0)
}

pub(crate) fn best_order(g: &Sdfg, m: &Mapping) -> Result<(StaticOrder, Rational64)> {
    let mut best: Option<(StaticOrder, Rational64)> = None;
    let mut last_err = None;
    for cand in candidate_orders(g, m)? {
        match ordered_period(g, &cand) {
            Ok(p) => {
                if best.as_ref().is_none_or(|(_, b)| p < *b) {
                    best = Some((cand, p));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Deadlock { actors: Vec::new() }))
}

/// A uniformly drawn topological order of the zero-delay data graph,
/// projected onto the tiles of `m`.
pub fn random_valid_order<R: Rng + ?Sized>(g: &Sdfg, m: &Mapping, rng: &mut R) -> Result<StaticOrder> {
    let preds = data_preds(g);
    let n = g.num_actors();
    let mut succs = vec![Vec::new(); n];
    for (v, ps) in preds.iter().enumerate() {
        for &u in ps {
            succs[u].push(v);
        }
    }
    let mut missing: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut ready: Vec<ActorId> = (0..n).filter(|&v| missing[v] == 0).collect();
    let mut seq = Vec::with_capacity(n);
    while !ready.is_empty() {
        let &pick = ready.choose(rng).expect("non-empty");
        ready.retain(|&v| v != pick);
        seq.push(pick);
        for &s in &succs[pick] {
            missing[s] -= 1;
            if missing[s] == 0 {
                ready.push(s);
            }
        }
    }
    if seq.len() != n {
        return Err(Error::Deadlock { actors: Vec::new() });
    }
    derive_from_single_tile(&seq, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Firing {
    pub actor: ActorId,
    pub tile: TileId,
    pub iteration: u64,
    pub start: u64,
    pub end: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfTimedTrace {
    pub firings: Vec<Firing>,
    /// True when `firings` was cut at [`TRACE_LIMIT`].
    pub truncated: bool,
    /// Iterations before the periodic phase starts.
    pub transient_iterations: u64,
    /// Iterations in one period of the periodic phase.
    pub period_iterations: u64,
    /// Ticks spanned by one period of the periodic phase.
    pub period_ticks: u64,
    /// Iterations per tick in the periodic phase.
    pub throughput: Rational64,
}

impl SelfTimedTrace {
    pub fn to_jsonl(&self) -> String {
        self.firings
            .iter()
            .map(|f| serde_json::to_string(f).expect("serializable") + "\n")
            .collect()
    }

    pub fn to_gantt_csv(&self) -> String {
        let mut out = String::from("tile,actor,iteration,start,end\n");
        for f in &self.firings {
            out.push_str(&format!("{},{},{},{},{}\n", f.tile, f.actor, f.iteration, f.start, f.end));
        }
        out
    }
}

/// Firings kept in a trace.
pub const TRACE_LIMIT: usize = 100_000;

/// Default iteration budget for period detection.
pub fn default_budget(g: &Sdfg) -> usize {
    let depth = g
        .channels()
        .iter()
        .map(|c| (c.tokens / c.cons.max(1)) as usize)
        .max()
        .unwrap_or(1)
        .max(1);
    (10 * g.num_actors().max(1)).saturating_mul(depth)
}

/// Self-timed execution of `g` under `order`. Every actor fires as soon as
/// it is next in its tile's order, the tile is idle, and all its input
/// channels hold enough tokens. Tokens are consumed at the start of a firing
/// and produced at its end. The periodic phase is found by exact recurrence
/// of the state (tokens, order positions, remaining busy time), sampled each
/// time the lowest actor of a connected component completes.
pub fn self_timed_simulate(g: &Sdfg, order: &StaticOrder, budget: usize) -> Result<SelfTimedTrace> {
    let n = g.num_actors();
    if n == 0 {
        return Err(Error::invalid("simulation", "graph has no actors"));
    }
    for (i, c) in g.channels().iter().enumerate() {
        if c.prod != c.cons {
            return Err(Error::NotHomogeneous {
                channel: i,
                prod: c.prod,
                cons: c.cons,
            });
        }
    }
    let tile = order.tile_of(n);
    let mut placed = vec![false; n];
    for list in &order.tiles {
        for &a in list {
            placed[a] = true;
        }
    }
    if let Some(a) = placed.iter().position(|p| !p) {
        return Err(Error::Coverage { actor: a });
    }

    // Weakly connected components over channels and shared tiles.
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        let mut y = x;
        while uf[y] != r {
            let next = uf[y];
            uf[y] = r;
            y = next;
        }
        r
    }
    let mut union = |a: usize, b: usize| {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra != rb {
            uf[ra.max(rb)] = ra.min(rb);
        }
    };
    for c in g.channels() {
        union(c.src, c.dst);
    }
    for list in &order.tiles {
        for w in list.windows(2) {
            union(w[0], w[1]);
        }
    }
    let roots: BTreeSet<usize> = (0..n).map(|a| find(&mut uf, a)).collect();

    let mut firings = Vec::new();
    let mut truncated = false;
    let mut bottleneck: Option<Component> = None;
    for root in roots {
        let members: BTreeSet<usize> = (0..n).filter(|&a| find(&mut uf, a) == root).collect();
        let comp = simulate_component(g, order, &tile, &members, budget, &mut firings, &mut truncated)?;
        if bottleneck.as_ref().is_none_or(|b| comp.throughput < b.throughput) {
            bottleneck = Some(comp);
        }
    }
    let b = bottleneck.expect("at least one component");
    firings.sort_by_key(|f| (f.start, f.actor, f.iteration));
    Ok(SelfTimedTrace {
        firings,
        truncated,
        transient_iterations: b.transient,
        period_iterations: b.iterations,
        period_ticks: b.ticks,
        throughput: b.throughput,
    })
}

struct Component {
    transient: u64,
    iterations: u64,
    ticks: u64,
    throughput: Rational64,
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct State {
    tokens: Vec<u64>,
    pos: Vec<usize>,
    busy: Vec<Option<(ActorId, u64)>>,
}

fn simulate_component(
    g: &Sdfg,
    order: &StaticOrder,
    tile_of: &[TileId],
    members: &BTreeSet<ActorId>,
    budget: usize,
    firings: &mut Vec<Firing>,
    truncated: &mut bool,
) -> Result<Component> {
    let chans: Vec<&Channel> = g.channels().iter().filter(|c| members.contains(&c.src)).collect();
    let mut inputs: HashMap<ActorId, Vec<usize>> = HashMap::new();
    let mut outputs: HashMap<ActorId, Vec<usize>> = HashMap::new();
    for (i, c) in chans.iter().enumerate() {
        inputs.entry(c.dst).or_default().push(i);
        outputs.entry(c.src).or_default().push(i);
    }
    let tiles: Vec<TileId> = (0..order.tiles.len())
        .filter(|&t| order.tiles[t].first().is_some_and(|a| members.contains(a)))
        .collect();
    let tau = g.exec_times();
    let reference = *members.first().expect("non-empty component");

    let mut tokens: Vec<u64> = chans.iter().map(|c| c.tokens).collect();
    let mut pos = vec![0usize; tiles.len()];
    // (actor, end time) per local tile
    let mut busy: Vec<Option<(ActorId, u64)>> = vec![None; tiles.len()];
    let mut count = vec![0u64; tau.len()];
    let mut now = 0u64;
    let mut completed = 0u64;
    let mut seen: HashMap<State, (u64, u64)> = HashMap::new();

    loop {
        for (k, &t) in tiles.iter().enumerate() {
            if busy[k].is_some() {
                continue;
            }
            let a = order.tiles[t][pos[k]];
            let ins = inputs.get(&a).map(Vec::as_slice).unwrap_or(&[]);
            if ins.iter().all(|&i| tokens[i] >= chans[i].cons) {
                for &i in ins {
                    tokens[i] -= chans[i].cons;
                }
                let end = now.checked_add(tau[a]).ok_or(Error::Overflow("simulation time"))?;
                busy[k] = Some((a, end));
                if firings.len() < TRACE_LIMIT {
                    firings.push(Firing {
                        actor: a,
                        tile: tile_of[a],
                        iteration: count[a],
                        start: now,
                        end,
                    });
                } else {
                    *truncated = true;
                }
                count[a] += 1;
            }
        }
        let Some(next) = busy.iter().flatten().map(|&(_, e)| e).min() else {
            return Err(Error::RuntimeDeadlock { time: now });
        };
        now = next;
        let mut sample = false;
        for k in 0..tiles.len() {
            if let Some((a, end)) = busy[k] {
                if end == now {
                    for &i in outputs.get(&a).map(Vec::as_slice).unwrap_or(&[]) {
                        tokens[i] = tokens[i].checked_add(chans[i].prod).ok_or(Error::Overflow("token count"))?;
                    }
                    busy[k] = None;
                    pos[k] = (pos[k] + 1) % order.tiles[tiles[k]].len();
                    if a == reference {
                        completed += 1;
                        sample = true;
                    }
                }
            }
        }
        if sample {
            let state = State {
                tokens: tokens.clone(),
                pos: pos.clone(),
                busy: busy.iter().map(|b| b.map(|(a, e)| (a, e - now))).collect(),
            };
            if let Some(&(k0, t0)) = seen.get(&state) {
                let iterations = completed - k0;
                let ticks = now - t0;
                return Ok(Component {
                    transient: k0,
                    iterations,
                    ticks,
                    throughput: Rational64::new(iterations as i64, ticks as i64),
                });
            }
            seen.insert(state, (completed, now));
            if completed as usize > budget {
                return Err(Error::NoPeriod { budget });
            }
        }
    }
}
