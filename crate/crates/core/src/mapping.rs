//! Actor-to-tile mapping: buffer constraints, throughput and energy
//! evaluation, and the restart-based local-search exploration.

use std::cmp::Ordering;

use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::{HardwareGraph, TileId};
use crate::maxplus::CriticalCycle;
use crate::schedule::{best_order, ordered_graph, ordered_period, random_valid_order, StaticOrder};
use crate::sdfg::{ActorId, Channel, ChannelKind, Sdfg};

/// Assignment of every actor to exactly one tile.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MappingFile", into = "MappingFile")]
pub struct Mapping {
    num_tiles: usize,
    tile_of: Vec<TileId>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingFile {
    pub num_tiles: usize,
    pub tile_of: Vec<TileId>,
}

impl TryFrom<MappingFile> for Mapping {
    type Error = Error;

    fn try_from(f: MappingFile) -> Result<Self> {
        Mapping::new(f.tile_of, f.num_tiles)
    }
}

impl From<Mapping> for MappingFile {
    fn from(m: Mapping) -> Self {
        MappingFile {
            num_tiles: m.num_tiles,
            tile_of: m.tile_of,
        }
    }
}

impl Mapping {
    pub fn new(tile_of: Vec<TileId>, num_tiles: usize) -> Result<Self> {
        if let Some((a, &t)) = tile_of.iter().enumerate().find(|(_, &t)| t >= num_tiles) {
            return Err(Error::invalid("mapping", format!("actor {a} is mapped to missing tile {t}")));
        }
        Ok(Mapping { num_tiles, tile_of })
    }

    /// Builds a mapping from a binary actor-by-tile matrix whose rows each
    /// hold exactly one 1.
    pub fn from_matrix(rows: &[Vec<u8>]) -> Result<Self> {
        let num_tiles = rows.first().map_or(0, Vec::len);
        let mut tile_of = Vec::with_capacity(rows.len());
        for (a, row) in rows.iter().enumerate() {
            if row.len() != num_tiles {
                return Err(Error::DimensionMismatch {
                    expected: num_tiles,
                    got: row.len(),
                });
            }
            let ones: Vec<usize> = row.iter().enumerate().filter(|(_, &v)| v != 0).map(|(t, _)| t).collect();
            if ones.len() != 1 || row[ones[0]] != 1 {
                return Err(Error::invalid("mapping", format!("row {a} must contain exactly one 1")));
            }
            tile_of.push(ones[0]);
        }
        Mapping::new(tile_of, num_tiles)
    }

    pub fn matrix(&self) -> Vec<Vec<u8>> {
        self.tile_of
            .iter()
            .map(|&t| (0..self.num_tiles).map(|j| u8::from(j == t)).collect())
            .collect()
    }

    pub fn tile_of(&self, a: ActorId) -> TileId {
        self.tile_of[a]
    }

    pub fn assignment(&self) -> &[TileId] {
        &self.tile_of
    }

    pub fn num_tiles(&self) -> usize {
        self.num_tiles
    }

    pub fn num_actors(&self) -> usize {
        self.tile_of.len()
    }

    pub fn actors_on(&self, t: TileId) -> Vec<ActorId> {
        (0..self.tile_of.len()).filter(|&a| self.tile_of[a] == t).collect()
    }

    pub fn used_tiles(&self) -> usize {
        let mut used = vec![false; self.num_tiles];
        for &t in &self.tile_of {
            used[t] = true;
        }
        used.iter().filter(|&&u| u).count()
    }

    fn with_move(&self, a: ActorId, t: TileId) -> Mapping {
        let mut m = self.clone();
        m.tile_of[a] = t;
        m
    }
}

fn check_shape(g: &Sdfg, hw: &HardwareGraph, m: &Mapping) -> Result<()> {
    if m.num_actors() != g.num_actors() {
        return Err(Error::DimensionMismatch {
            expected: g.num_actors(),
            got: m.num_actors(),
        });
    }
    if m.num_tiles() != hw.num_tiles() {
        return Err(Error::DimensionMismatch {
            expected: hw.num_tiles(),
            got: m.num_tiles(),
        });
    }
    Ok(())
}

/// Whether actor `a`'s crossbar footprint fits tile `t`.
pub fn fits(g: &Sdfg, hw: &HardwareGraph, a: ActorId, t: TileId) -> bool {
    let n = hw.tiles()[t].crossbar_n;
    g.actors()[a]
        .footprint
        .is_none_or(|f| f.rows <= n && f.cols <= n && f.synapses <= n * n)
}

/// Adds buffer back-edges for a mapping. Each data channel `u -> v` with
/// rate `r` and `d` initial tokens gets a channel `v -> u` of rate `r`
/// holding `capacity - d` tokens: `u` claims output space when it starts and
/// `v` frees it when it finishes. The capacity is the source tile's output
/// buffer, further limited by the destination's input buffer across tiles.
pub fn constrain(g: &Sdfg, hw: &HardwareGraph, m: &Mapping) -> Result<Sdfg> {
    check_shape(g, hw, m)?;
    for (a, actor) in g.actors().iter().enumerate() {
        let t = m.tile_of(a);
        if !fits(g, hw, a, t) {
            let f = actor.footprint.expect("only footprints can fail to fit");
            return Err(Error::Fit {
                actor: a,
                tile: t,
                rows: f.rows,
                cols: f.cols,
                synapses: f.synapses,
                crossbar: hw.tiles()[t].crossbar_n,
            });
        }
    }
    let mut out = g.clone();
    for c in g.channels().iter().filter(|c| c.kind == ChannelKind::Data) {
        let (ts, td) = (m.tile_of(c.src), m.tile_of(c.dst));
        let mut capacity = hw.tiles()[ts].out_buffer;
        if ts != td {
            capacity = capacity.min(hw.tiles()[td].in_buffer);
        }
        if c.prod > capacity || c.tokens > capacity {
            return Err(Error::Capacity {
                actor: c.src,
                tile: ts,
                rate: c.prod.max(c.tokens),
                capacity,
            });
        }
        out.add_channel(Channel {
            src: c.dst,
            dst: c.src,
            prod: c.cons,
            cons: c.prod,
            tokens: capacity - c.tokens,
            kind: ChannelKind::Buffer,
            spikes: Rational64::zero(),
        })?;
    }
    Ok(out)
}

/// Energy per frame in pJ, split into spike generation and routing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub spike_pj: f64,
    pub route_pj: f64,
    pub total_pj: f64,
}

/// Spike generation on every tile plus hop-weighted routing of inter-tile
/// data traffic. Depends on the mapping only, never on the schedule.
pub fn energy(g: &Sdfg, hw: &HardwareGraph, m: &Mapping) -> Result<Energy> {
    check_shape(g, hw, m)?;
    let spikes: Rational64 = g.actors().iter().map(|a| a.spikes).sum();
    let mut routed = Rational64::zero();
    for c in g.channels().iter().filter(|c| c.kind == ChannelKind::Data) {
        let hops = hw.hops(m.tile_of(c.src), m.tile_of(c.dst));
        if hops > 0 {
            routed += c.spikes * Rational64::from_integer(hops as i64);
        }
    }
    let e = hw.energy();
    let spike_pj = spikes.to_f64().unwrap_or(f64::NAN) * e.e_spike_pj;
    let route_pj = routed.to_f64().unwrap_or(f64::NAN) * e.e_route_pj;
    Ok(Energy {
        spike_pj,
        route_pj,
        total_pj: spike_pj + route_pj,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedMapping {
    pub mapping: Mapping,
    pub order: StaticOrder,
    /// Ticks per iteration.
    pub period: Rational64,
    /// Iterations per tick.
    pub throughput: Rational64,
    pub energy: Energy,
    /// Energy times period; lower is better.
    pub lambda: f64,
}

/// Throughput and energy of a mapping under its static-order schedule.
pub fn evaluate(g: &Sdfg, hw: &HardwareGraph, m: &Mapping) -> Result<EvaluatedMapping> {
    let constrained = constrain(g, hw, m)?;
    let (order, period) = best_order(&constrained, m)?;
    finish(g, hw, m, order, period)
}

/// Like [`evaluate`] with a caller-supplied order.
pub fn evaluate_with_order(g: &Sdfg, hw: &HardwareGraph, m: &Mapping, order: &StaticOrder) -> Result<EvaluatedMapping> {
    order.validate(m)?;
    let constrained = constrain(g, hw, m)?;
    let period = ordered_period(&constrained, order)?;
    finish(g, hw, m, order.clone(), period)
}

fn finish(g: &Sdfg, hw: &HardwareGraph, m: &Mapping, order: StaticOrder, period: Rational64) -> Result<EvaluatedMapping> {
    let energy = energy(g, hw, m)?;
    Ok(EvaluatedMapping {
        mapping: m.clone(),
        order,
        period,
        throughput: Rational64::one() / period,
        energy,
        lambda: energy.total_pj * period.to_f64().unwrap_or(f64::INFINITY),
    })
}

/// Critical cycle of the constrained, ordered graph of an evaluated mapping.
pub fn critical_cycle(g: &Sdfg, hw: &HardwareGraph, e: &EvaluatedMapping) -> Result<Option<CriticalCycle>> {
    crate::maxplus::analyze(&ordered_graph(&constrain(g, hw, &e.mapping)?, &e.order)?)
}

/// What local search minimizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Energy times period.
    #[default]
    EnergyPeriod,
    /// Period first, energy as tie-breaker.
    Throughput,
}

impl Objective {
    /// `Less` when `a` is strictly better than `b`.
    pub fn compare(self, a: &EvaluatedMapping, b: &EvaluatedMapping) -> Ordering {
        match self {
            Objective::EnergyPeriod => a.lambda.total_cmp(&b.lambda),
            Objective::Throughput => a
                .period
                .cmp(&b.period)
                .then(a.energy.total_pj.total_cmp(&b.energy.total_pj)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreOptions {
    pub eta: usize,
    pub seed: u64,
    pub objective: Objective,
    /// Cap on improvement sweeps per restart.
    pub max_sweeps: usize,
    /// Rejection-sampling attempts for a feasible random start.
    pub start_retries: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            eta: 20,
            seed: 0,
            objective: Objective::EnergyPeriod,
            max_sweeps: 50,
            start_retries: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    /// Non-dominated mappings by (throughput up, energy down), sorted by
    /// decreasing throughput.
    pub front: Vec<EvaluatedMapping>,
    /// The highest-throughput mapping found.
    pub max_throughput: EvaluatedMapping,
    /// The lowest-objective mapping found.
    pub best: EvaluatedMapping,
    /// One local optimum per successful restart, in restart order.
    pub local_optima: Vec<EvaluatedMapping>,
    pub evaluations: usize,
}

impl ParetoFront {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("period,throughput,energy_pj,lambda,tile_of\n");
        for e in &self.front {
            let tiles: Vec<String> = e.mapping.assignment().iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.period,
                e.throughput,
                e.energy.total_pj,
                e.lambda,
                tiles.join(" ")
            ));
        }
        out
    }
}

/// `a` dominates `b`: at least as fast and as frugal, strictly better in one.
pub fn dominates(a: &EvaluatedMapping, b: &EvaluatedMapping) -> bool {
    let faster = a.throughput.cmp(&b.throughput);
    let cheaper = b.energy.total_pj.total_cmp(&a.energy.total_pj);
    faster != Ordering::Less && cheaper != Ordering::Less && (faster == Ordering::Greater || cheaper == Ordering::Greater)
}

/// Non-dominated subset with duplicates (same mapping) removed.
pub fn pareto_front(points: &[EvaluatedMapping]) -> Vec<EvaluatedMapping> {
    let mut front: Vec<EvaluatedMapping> = Vec::new();
    for p in points {
        if points.iter().any(|q| dominates(q, p)) || front.iter().any(|f| f.mapping == p.mapping) {
            continue;
        }
        front.push(p.clone());
    }
    front.sort_by(|a, b| {
        b.throughput
            .cmp(&a.throughput)
            .then(a.energy.total_pj.total_cmp(&b.energy.total_pj))
    });
    front
}

fn restart_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn feasible_tiles(g: &Sdfg, hw: &HardwareGraph) -> Result<Vec<Vec<TileId>>> {
    (0..g.num_actors())
        .map(|a| {
            let ok: Vec<TileId> = (0..hw.num_tiles()).filter(|&t| fits(g, hw, a, t)).collect();
            if ok.is_empty() {
                Err(Error::Infeasible(format!("actor {a} fits no tile")))
            } else {
                Ok(ok)
            }
        })
        .collect()
}

/// Uniformly random assignment among the tiles each actor fits.
pub fn random_mapping<R: Rng + ?Sized>(g: &Sdfg, hw: &HardwareGraph, rng: &mut R) -> Result<Mapping> {
    let options = feasible_tiles(g, hw)?;
    let tile_of = options.iter().map(|o| *o.choose(rng).expect("non-empty")).collect();
    Mapping::new(tile_of, hw.num_tiles())
}

/// Longest-processing-time balancing: actors by decreasing execution time
/// go to the least-loaded tile they fit, ties to the lowest tile id.
pub fn load_balanced_mapping(g: &Sdfg, hw: &HardwareGraph) -> Result<Mapping> {
    let options = feasible_tiles(g, hw)?;
    let tau = g.exec_times();
    let mut actors: Vec<ActorId> = (0..g.num_actors()).collect();
    actors.sort_by_key(|&a| (std::cmp::Reverse(tau[a]), a));
    let mut load = vec![0u64; hw.num_tiles()];
    let mut tile_of = vec![0; g.num_actors()];
    for a in actors {
        let &t = options[a].iter().min_by_key(|&&t| (load[t], t)).expect("non-empty");
        load[t] += tau[a];
        tile_of[a] = t;
    }
    Mapping::new(tile_of, hw.num_tiles())
}

/// Draws a mapping from `draw` and a random valid order until the pair
/// evaluates without deadlock or capacity errors.
fn baseline<R: Rng + ?Sized>(
    g: &Sdfg,
    hw: &HardwareGraph,
    rng: &mut R,
    retries: usize,
    mut draw: impl FnMut(&mut R) -> Result<Mapping>,
) -> Result<EvaluatedMapping> {
    let mut last = None;
    for _ in 0..retries.max(1) {
        let m = draw(rng)?;
        let order = random_valid_order(g, &m, rng)?;
        match evaluate_with_order(g, hw, &m, &order) {
            Ok(e) => return Ok(e),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Random assignment with an arbitrary valid order.
pub fn random_baseline(g: &Sdfg, hw: &HardwareGraph, seed: u64) -> Result<EvaluatedMapping> {
    let mut rng = restart_rng(seed, u64::MAX);
    baseline(g, hw, &mut rng, 1000, |r| random_mapping(g, hw, r))
}

/// Load-balanced assignment with an arbitrary valid order.
pub fn load_balanced_baseline(g: &Sdfg, hw: &HardwareGraph, seed: u64) -> Result<EvaluatedMapping> {
    let mut rng = restart_rng(seed, u64::MAX - 1);
    let m = load_balanced_mapping(g, hw)?;
    baseline(g, hw, &mut rng, 1000, |_| Ok(m.clone()))
}

struct Restart {
    optimum: Option<EvaluatedMapping>,
    evaluations: usize,
    /// λ of the start and of every accepted move; read by tests.
    #[cfg_attr(not(test), allow(dead_code))]
    accepted: Vec<f64>,
    /// Why the last random start was rejected, when none was feasible.
    rejection: Option<String>,
}

fn local_search(g: &Sdfg, hw: &HardwareGraph, opts: &ExploreOptions, options: &[Vec<TileId>], r: u64) -> Restart {
    let mut rng = restart_rng(opts.seed, r);
    let mut evaluations = 0;
    let mut cur = None;
    let mut rejection = None;
    for _ in 0..opts.start_retries.max(1) {
        let tile_of = options.iter().map(|o| *o.choose(&mut rng).expect("non-empty")).collect();
        let m = Mapping::new(tile_of, hw.num_tiles()).expect("tiles drawn from range");
        evaluations += 1;
        match evaluate(g, hw, &m) {
            Ok(e) => {
                cur = Some(e);
                break;
            }
            Err(e) => rejection = Some(e.to_string()),
        }
    }
    let Some(mut cur) = cur else {
        return Restart {
            optimum: None,
            evaluations,
            accepted: Vec::new(),
            rejection,
        };
    };
    let mut accepted = vec![cur.lambda];
    for _ in 0..opts.max_sweeps {
        let mut improved = false;
        for a in 0..g.num_actors() {
            let home = cur.mapping.tile_of(a);
            let mut best: Option<EvaluatedMapping> = None;
            for &t in &options[a] {
                if t == home {
                    continue;
                }
                evaluations += 1;
                let Ok(cand) = evaluate(g, hw, &cur.mapping.with_move(a, t)) else { continue };
                let incumbent = best.as_ref().unwrap_or(&cur);
                if opts.objective.compare(&cand, incumbent) == Ordering::Less {
                    best = Some(cand);
                }
            }
            if let Some(b) = best {
                accepted.push(b.lambda);
                cur = b;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Restart {
        optimum: Some(cur),
        evaluations,
        accepted,
        rejection: None,
    }
}

/// Restart-based local search. Each restart draws a feasible random
/// mapping, then sweeps the actors, moving each to the tile that most
/// improves the objective, until a sweep changes nothing. Restarts run in
/// parallel with independent random streams and are merged in order.
pub fn explore(g: &Sdfg, hw: &HardwareGraph, opts: &ExploreOptions) -> Result<ParetoFront> {
    if opts.eta == 0 {
        return Err(Error::invalid("exploration", "eta must be at least 1"));
    }
    if g.num_actors() == 0 {
        return Err(Error::invalid("exploration", "graph has no actors"));
    }
    let options = feasible_tiles(g, hw)?;
    let restarts: Vec<Restart> = (0..opts.eta as u64)
        .into_par_iter()
        .map(|r| local_search(g, hw, opts, &options, r))
        .collect();
    let evaluations = restarts.iter().map(|r| r.evaluations).sum();
    let rejection = restarts.iter().find_map(|r| r.rejection.clone());
    let local_optima: Vec<EvaluatedMapping> = restarts.into_iter().filter_map(|r| r.optimum).collect();
    if local_optima.is_empty() {
        return Err(Error::Infeasible(format!(
            "no feasible mapping found in {} random starts per restart (last: {})",
            opts.start_retries,
            rejection.unwrap_or_default()
        )));
    }
    let pick = |cmp: &dyn Fn(&EvaluatedMapping, &EvaluatedMapping) -> Ordering| {
        local_optima
            .iter()
            .reduce(|a, b| if cmp(b, a) == Ordering::Less { b } else { a })
            .cloned()
            .expect("non-empty")
    };
    let max_throughput = pick(&|a, b| Objective::Throughput.compare(a, b));
    let best = pick(&|a, b| opts.objective.compare(a, b));
    Ok(ParetoFront {
        front: pareto_front(&local_optima),
        max_throughput,
        best,
        local_optima,
        evaluations,
    })
}

/// Every assignment of `g`'s actors to `hw`'s tiles, evaluated; infeasible
/// ones are skipped. Exponential; intended for small instances.
pub fn enumerate_all(g: &Sdfg, hw: &HardwareGraph) -> Vec<EvaluatedMapping> {
    let (n, t) = (g.num_actors(), hw.num_tiles());
    let total = (t as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let tile_of = (0..n)
            .map(|_| {
                let d = (c % t as u64) as usize;
                c /= t as u64;
                d
            })
            .collect();
        let m = Mapping::new(tile_of, t).expect("in range");
        if let Ok(e) = evaluate(g, hw, &m) {
            out.push(e);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdfg::Actor;
    use crate::hardware::dynapse_preset;
    use crate::maxplus::throughput_bound;

    fn energy_fixture() -> (Sdfg, HardwareGraph) {
        let mut g = Sdfg::with_exec_times(&[10, 10]).unwrap();
        g.add_channel(Channel {
            src: 0,
            dst: 1,
            prod: 10,
            cons: 10,
            tokens: 0,
            kind: ChannelKind::Data,
            spikes: Rational64::from_integer(10),
        })
        .unwrap();
        let mut actors = g.actors().to_vec();
        actors[0].spikes = Rational64::from_integer(100);
        (Sdfg::new(actors, g.channels().to_vec()).unwrap(), dynapse_preset(2, 1, 16).unwrap())
    }

    #[test]
    fn hand_computed_energy() {
        let (g, hw) = energy_fixture();
        let split = Mapping::new(vec![0, 1], 2).unwrap();
        assert_eq!(energy(&g, &hw, &split).unwrap().total_pj, 6470.0);
        let joint = Mapping::new(vec![0, 0], 2).unwrap();
        let e = energy(&g, &hw, &joint).unwrap();
        assert_eq!(e.route_pj, 0.0);
        assert_eq!(e.total_pj, 5000.0);
    }

    #[test]
    fn matrix_round_trip_and_row_sums() {
        let m = Mapping::new(vec![2, 0, 1, 2], 3).unwrap();
        assert_eq!(Mapping::from_matrix(&m.matrix()).unwrap(), m);
        assert!(m.matrix().iter().all(|r| r.iter().map(|&v| v as u32).sum::<u32>() == 1));
        assert!(Mapping::from_matrix(&[vec![1, 1]]).is_err());
        assert!(Mapping::from_matrix(&[vec![0, 0]]).is_err());
        assert!(Mapping::new(vec![3], 3).is_err());
    }

    #[test]
    fn back_edge_tokens_claim_buffer_space() {
        let (g, hw) = energy_fixture();
        let hw = hw.with_buffers(25).unwrap();
        let c = constrain(&g, &hw, &Mapping::new(vec![0, 0], 2).unwrap()).unwrap();
        let back = &c.channels()[1];
        assert_eq!((back.src, back.dst, back.prod, back.tokens), (1, 0, 10, 25));
        let tight = hw.with_buffers(9).unwrap();
        assert!(matches!(
            constrain(&g, &tight, &Mapping::new(vec![0, 1], 2).unwrap()),
            Err(Error::Capacity { actor: 0, rate: 10, capacity: 9, .. })
        ));
    }

    #[test]
    fn inactive_constraints_keep_the_bound() {
        let mut g = Sdfg::with_exec_times(&[3, 5, 2]).unwrap();
        g.connect(0, 1, 1, 0).unwrap();
        g.connect(1, 2, 1, 0).unwrap();
        g.connect(2, 0, 1, 1).unwrap();
        let hw = dynapse_preset(3, 1, 4).unwrap();
        let e = evaluate(&g, &hw, &Mapping::new(vec![0, 1, 2], 3).unwrap()).unwrap();
        assert_eq!(Some(e.throughput), throughput_bound(&g).unwrap());
    }

    #[test]
    fn exploring_one_actor_on_one_tile() {
        let g = Sdfg::with_exec_times(&[7]).unwrap();
        let hw = dynapse_preset(1, 1, 4).unwrap();
        let f = explore(&g, &hw, &ExploreOptions { eta: 3, ..Default::default() }).unwrap();
        assert_eq!(f.front.len(), 1);
        assert_eq!(f.max_throughput.period, Rational64::from_integer(7));
    }

    #[test]
    fn pareto_front_has_no_dominated_points() {
        let (g, hw) = energy_fixture();
        let all = enumerate_all(&g, &hw);
        assert_eq!(all.len(), 4);
        let front = pareto_front(&all);
        for a in &front {
            assert!(!front.iter().any(|b| dominates(b, a)));
        }
    }

    #[test]
    fn load_balancing_spreads_work() {
        let g = Sdfg::with_exec_times(&[5, 4, 3, 2]).unwrap();
        let hw = dynapse_preset(2, 1, 4).unwrap();
        let m = load_balanced_mapping(&g, &hw).unwrap();
        assert_eq!(m.assignment(), &[0, 1, 1, 0]);
    }

    #[test]
    fn lambda_never_increases_within_a_restart() {
        let mut g = Sdfg::with_exec_times(&[4, 9, 2, 7, 5]).unwrap();
        for (a, b, tokens) in [(0, 1, 0), (1, 2, 0), (2, 3, 0), (3, 4, 0), (4, 0, 2), (0, 3, 0)] {
            g.connect(a, b, 2, tokens * 2).unwrap();
        }
        let actors: Vec<Actor> = g
            .actors()
            .iter()
            .map(|a| Actor {
                spikes: Rational64::from_integer(3 * a.id as i64 + 1),
                ..a.clone()
            })
            .collect();
        let channels: Vec<Channel> = g
            .channels()
            .iter()
            .map(|c| Channel {
                spikes: Rational64::from_integer(c.src as i64 + 2),
                ..c.clone()
            })
            .collect();
        let g = Sdfg::new(actors, channels).unwrap();
        let hw = dynapse_preset(2, 2, 8).unwrap();
        let opts = ExploreOptions { seed: 5, ..Default::default() };
        let options = feasible_tiles(&g, &hw).unwrap();
        let mut moves = 0;
        for r in 0..8 {
            let run = local_search(&g, &hw, &opts, &options, r);
            moves += run.accepted.len() - 1;
            let optimum = run.optimum.unwrap();
            assert!(run.accepted.windows(2).all(|w| w[1] < w[0]), "{:?}", run.accepted);
            assert_eq!(run.accepted.last(), Some(&optimum.lambda));
        }
        assert!(moves > 0);
    }
}
