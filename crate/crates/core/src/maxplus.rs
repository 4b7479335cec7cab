//! Max-plus algebra and throughput analysis.
//!
//! Firing end times of a homogeneous SDFG evolve as `t(k) = T ⊗ t(k-1)`
//! once intra-iteration dependencies are collapsed into `T`. The iteration
//! period is the maximum cycle mean of `T`, and throughput is its inverse.
//!
//! Dense matrices use Karp's algorithm. For SDFGs whose channels hold many
//! iterations' worth of tokens the companion matrix grows with the token
//! count, so [`max_cycle_ratio`] works on the channel graph directly: it
//! finds the maximum of `Σ τ / Σ δ` over cycles, where `δ` is the number of
//! iterations a channel's initial tokens cover.

use std::collections::VecDeque;
use std::fmt;

use num_rational::Rational64;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdfg::{sccs, topological_order, ActorId, Sdfg};

/// An element of ℝ∪{−∞} restricted to integers. `None` is −∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MaxPlus(pub Option<i64>);

impl MaxPlus {
    /// Additive identity, −∞.
    pub const ZERO: MaxPlus = MaxPlus(None);
    /// Multiplicative identity, 0.
    pub const ONE: MaxPlus = MaxPlus(Some(0));

    pub fn finite(v: i64) -> Self {
        MaxPlus(Some(v))
    }

    pub fn is_neg_inf(self) -> bool {
        self.0.is_none()
    }

    /// `a ⊕ b = max(a, b)`.
    pub fn oplus(self, other: Self) -> Self {
        self.max(other)
    }

    /// `a ⊗ b = a + b`, with −∞ absorbing. `None` on overflow.
    pub fn checked_otimes(self, other: Self) -> Option<Self> {
        match (self.0, other.0) {
            (Some(a), Some(b)) => a.checked_add(b).map(MaxPlus::finite),
            _ => Some(MaxPlus::ZERO),
        }
    }

    /// `a ⊗ b = a + b`, with −∞ absorbing.
    ///
    /// # Panics
    /// On integer overflow, like ordinary integer addition in debug builds.
    pub fn otimes(self, other: Self) -> Self {
        self.checked_otimes(other).expect("max-plus product overflow")
    }
}

impl fmt::Display for MaxPlus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("-inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<MaxPlus>>", into = "Vec<Vec<MaxPlus>>")]
pub struct MaxPlusMatrix {
    n: usize,
    entries: Vec<MaxPlus>,
}

impl TryFrom<Vec<Vec<MaxPlus>>> for MaxPlusMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<MaxPlus>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.len() });
            }
            entries.extend(r);
        }
        Ok(MaxPlusMatrix { n, entries })
    }
}

impl From<MaxPlusMatrix> for Vec<Vec<MaxPlus>> {
    fn from(m: MaxPlusMatrix) -> Self {
        m.entries.chunks(m.n.max(1)).map(<[MaxPlus]>::to_vec).take(m.n).collect()
    }
}

impl MaxPlusMatrix {
    /// The all-−∞ matrix.
    pub fn new(n: usize) -> Self {
        MaxPlusMatrix {
            n,
            entries: vec![MaxPlus::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::new(n);
        for i in 0..n {
            m.set(i, i, MaxPlus::ONE);
        }
        m
    }

    /// Builds a matrix from rows of optional integers (`None` is −∞).
    pub fn from_rows(rows: &[Vec<Option<i64>>]) -> Result<Self> {
        rows.iter()
            .map(|r| r.iter().map(|&v| MaxPlus(v)).collect())
            .collect::<Vec<Vec<MaxPlus>>>()
            .try_into()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> MaxPlus {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: MaxPlus) {
        self.entries[i * self.n + j] = v;
    }

    /// Max-plus matrix product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = Self::new(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let a = self.get(i, k);
                if a.is_neg_inf() {
                    continue;
                }
                for j in 0..self.n {
                    let p = a.checked_otimes(other.get(k, j)).ok_or(Error::Overflow("max-plus product"))?;
                    out.set(i, j, out.get(i, j).oplus(p));
                }
            }
        }
        Ok(out)
    }

    /// Every finite entry scaled by `c`.
    pub fn scale(&self, c: i64) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| match e.0 {
                Some(v) => v.checked_mul(c).map(MaxPlus::finite).ok_or(Error::Overflow("max-plus scale")),
                None => Ok(MaxPlus::ZERO),
            })
            .collect::<Result<_>>()?;
        Ok(MaxPlusMatrix { n: self.n, entries })
    }

    pub fn digraph(&self) -> Digraph {
        let mut arcs = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(w) = self.get(i, j).0 {
                    arcs.push((i, j, w));
                }
            }
        }
        Digraph { n: self.n, arcs }
    }
}

impl fmt::Display for MaxPlusMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Precedence graph of a matrix: one arc `(i, j, T_ij)` per finite entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Digraph {
    pub n: usize,
    pub arcs: Vec<(usize, usize, i64)>,
}

/// `result_i = max_j (T_ij + t_j)`.
pub fn mp_matvec(t: &MaxPlusMatrix, v: &[MaxPlus]) -> Result<Vec<MaxPlus>> {
    if v.len() != t.n {
        return Err(Error::DimensionMismatch {
            expected: t.n,
            got: v.len(),
        });
    }
    (0..t.n)
        .map(|i| {
            (0..t.n).try_fold(MaxPlus::ZERO, |acc, j| {
                let p = t.get(i, j).checked_otimes(v[j]).ok_or(Error::Overflow("max-plus product"))?;
                Ok(acc.oplus(p))
            })
        })
        .collect()
}

/// Maximum cycle mean by Karp's algorithm on each strongly connected
/// component. `None` when the precedence graph has no cycle.
pub fn max_cycle_mean(t: &MaxPlusMatrix) -> Option<Rational64> {
    let g = t.digraph();
    let comps = sccs(g.n, g.arcs.iter().map(|&(i, j, _)| (i, j)));
    let mut comp_of = vec![0; g.n];
    for (c, members) in comps.iter().enumerate() {
        for &v in members {
            comp_of[v] = c;
        }
    }
    let mut best: Option<Rational64> = None;
    for (c, members) in comps.iter().enumerate() {
        let inner: Vec<(usize, usize, i128)> = g
            .arcs
            .iter()
            .filter(|&&(i, j, _)| comp_of[i] == c && comp_of[j] == c)
            .map(|&(i, j, w)| (i, j, i128::from(w)))
            .collect();
        if inner.is_empty() {
            continue;
        }
        let mean = karp(members, &inner);
        best = Some(best.map_or(mean, |b| b.max(mean)));
    }
    best
}

fn karp(members: &[usize], arcs: &[(usize, usize, i128)]) -> Rational64 {
    let k = members.len();
    let local: std::collections::HashMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let arcs: Vec<(usize, usize, i128)> = arcs.iter().map(|&(u, v, w)| (local[&u], local[&v], w)).collect();
    // d[j][v]: max weight of a walk with exactly j arcs from members[0] to v.
    let mut d = vec![vec![None::<i128>; k]; k + 1];
    d[0][0] = Some(0);
    for j in 1..=k {
        for &(u, v, w) in &arcs {
            if let Some(du) = d[j - 1][u] {
                let cand = du + w;
                let slot = &mut d[j][v];
                if slot.is_none_or(|x| cand > x) {
                    *slot = Some(cand);
                }
            }
        }
    }
    let mut best: Option<Rational64> = None;
    for v in 0..k {
        let Some(dk) = d[k][v] else { continue };
        let worst = (0..k)
            .filter_map(|j| d[j][v].map(|dj| ratio(dk - dj, (k - j) as i128)))
            .min()
            .expect("a walk of length k implies a shorter one");
        best = Some(best.map_or(worst, |b| b.max(worst)));
    }
    best.expect("strongly connected component with arcs has a cycle")
}

fn ratio(num: i128, den: i128) -> Rational64 {
    let g = num_integer::gcd(num, den);
    Rational64::new((num / g) as i64, (den / g) as i64)
}

/// Timing arc `src -> dst`: firing `k` of `dst` ends at least `weight`
/// after firing `k - delay` of `src` ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimingArc {
    pub src: usize,
    pub dst: usize,
    pub weight: i64,
    pub delay: u64,
}

/// Per-actor self arcs (no auto-concurrency) plus one arc per channel with
/// `delay = tokens / rate`. Requires equal production and consumption.
pub fn timing_arcs(g: &Sdfg) -> Result<Vec<TimingArc>> {
    let tau = g.exec_times();
    let mut arcs: Vec<TimingArc> = (0..g.num_actors())
        .map(|a| TimingArc {
            src: a,
            dst: a,
            weight: tau[a] as i64,
            delay: 1,
        })
        .collect();
    for (i, c) in g.channels().iter().enumerate() {
        if c.prod != c.cons {
            return Err(Error::NotHomogeneous {
                channel: i,
                prod: c.prod,
                cons: c.cons,
            });
        }
        arcs.push(TimingArc {
            src: c.src,
            dst: c.dst,
            weight: tau[c.dst] as i64,
            delay: c.tokens / c.cons,
        });
    }
    Ok(arcs)
}

/// Fails with a deadlock when zero-delay arcs form a cycle.
fn check_live(n: usize, arcs: &[TimingArc]) -> Result<()> {
    let zero = || arcs.iter().filter(|a| a.delay == 0).map(|a| (a.src, a.dst));
    if topological_order(n, zero()).is_some() {
        return Ok(());
    }
    let stuck = sccs(n, zero().collect::<Vec<_>>())
        .into_iter()
        .find(|c| c.len() > 1 || zero().any(|(u, v)| u == v && u == c[0]))
        .unwrap_or_default();
    Err(Error::Deadlock { actors: stuck })
}

/// Largest state count [`firing_time_matrix`] will build.
pub const MAX_DENSE_STATES: usize = 4096;

/// Dense firing-time matrix of a homogeneous SDFG.
///
/// Zero-delay dependencies are collapsed into longest paths within one
/// iteration. When some channel covers `d > 1` iterations the state holds
/// the last `D` iterations' end times (companion form), so the matrix has
/// `n * D` rows for the largest delay `D`.
pub fn firing_time_matrix(g: &Sdfg) -> Result<MaxPlusMatrix> {
    let n = g.num_actors();
    let arcs = timing_arcs(g)?;
    check_live(n, &arcs)?;
    let depth = arcs.iter().map(|a| a.delay).max().unwrap_or(1).max(1) as usize;
    let states = n.checked_mul(depth).filter(|&s| s <= MAX_DENSE_STATES).ok_or_else(|| {
        Error::invalid(
            "max-plus matrix",
            format!("{n} actors with delays up to {depth} exceed {MAX_DENSE_STATES} states"),
        )
    })?;

    // closure[v][x]: longest zero-delay path from x to v (0 on the diagonal).
    let order = topological_order(n, arcs.iter().filter(|a| a.delay == 0).map(|a| (a.src, a.dst)))
        .expect("checked live");
    let mut zero_in: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for a in arcs.iter().filter(|a| a.delay == 0) {
        zero_in[a.dst].push((a.src, a.weight));
    }
    let mut closure = vec![vec![MaxPlus::ZERO; n]; n];
    for &v in &order {
        closure[v][v] = MaxPlus::ONE;
        for &(u, w) in &zero_in[v] {
            for x in 0..n {
                let via = closure[u][x].checked_otimes(MaxPlus::finite(w)).ok_or(Error::Overflow("closure"))?;
                closure[v][x] = closure[v][x].oplus(via);
            }
        }
    }

    let mut t = MaxPlusMatrix::new(states);
    for a in arcs.iter().filter(|a| a.delay > 0) {
        let col = (a.delay as usize - 1) * n + a.src;
        for v in 0..n {
            let w = closure[v][a.dst]
                .checked_otimes(MaxPlus::finite(a.weight))
                .ok_or(Error::Overflow("firing-time matrix"))?;
            t.set(v, col, t.get(v, col).oplus(w));
        }
    }
    for block in 1..depth {
        for v in 0..n {
            t.set(block * n + v, (block - 1) * n + v, MaxPlus::ONE);
        }
    }
    Ok(t)
}

/// A maximum-ratio cycle: its ratio and its vertex sequence, starting at
/// the smallest vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CriticalCycle {
    pub ratio: Rational64,
    pub cycle: Vec<ActorId>,
}

/// Exact maximum of `Σ weight / Σ delay` over cycles of a graph whose
/// zero-delay arcs are acyclic. `None` when there is no cycle.
///
/// Starting below every possible ratio, each round looks for a cycle that
/// beats the current ratio (a positive cycle under `q·w - p·δ`) with
/// Bellman–Ford and adopts its ratio, until none is left.
pub fn max_cycle_ratio(n: usize, arcs: &[TimingArc]) -> Result<Option<CriticalCycle>> {
    check_live(n, arcs)?;
    let total: i128 = arcs.iter().map(|a| i128::from(a.weight).abs()).sum();
    let mut p: i128 = -total - 1;
    let mut q: i128 = 1;
    let mut best: Option<Vec<usize>> = None;
    // Seed with the best of the self loops and the policy-iteration cycle.
    // Any real cycle is a valid lower bound; the search below makes it exact.
    let policy = policy_cycle(n, arcs);
    let seeds = arcs
        .iter()
        .enumerate()
        .filter(|(_, a)| a.src == a.dst)
        .map(|(k, _)| vec![k])
        .chain(policy.as_ref().map(|(c, _)| c.clone()));
    for cycle in seeds {
        let (w, d) = cycle_sums(arcs, &cycle);
        if d > 0 && w * q > p * d {
            let g = num_integer::gcd(w, d);
            (p, q) = (w / g, d / g);
            best = Some(cycle);
        }
    }
    // Policy values bound the weights from the source side; negated they are
    // forward potentials.
    let mut warm = policy.map(|(_, values)| values.into_iter().map(|v| -v).collect::<Vec<f64>>());
    let mut out = vec![Vec::new(); n];
    for (k, a) in arcs.iter().enumerate() {
        out[a.src].push(k);
    }
    while let Some(cycle) = positive_cycle(n, arcs, &out, p, q, warm.take().as_deref())? {
        let (w, d) = cycle_sums(arcs, &cycle);
        debug_assert!(d > 0 && w * q > p * d);
        let g = num_integer::gcd(w, d);
        (p, q) = (w / g, d / g);
        best = Some(cycle);
    }
    let Some(cycle) = best else { return Ok(None) };
    let ratio = Rational64::new(
        i64::try_from(p).map_err(|_| Error::Overflow("cycle ratio"))?,
        i64::try_from(q).map_err(|_| Error::Overflow("cycle ratio"))?,
    );
    let mut vertices: Vec<usize> = cycle.iter().map(|&k| arcs[k].src).collect();
    let start = vertices.iter().enumerate().min_by_key(|&(_, v)| *v).map_or(0, |(i, _)| i);
    vertices.rotate_left(start);
    Ok(Some(CriticalCycle { ratio, cycle: vertices }))
}

fn cycle_sums(arcs: &[TimingArc], cycle: &[usize]) -> (i128, i128) {
    cycle
        .iter()
        .fold((0, 0), |(w, d), &k| (w + i128::from(arcs[k].weight), d + i128::from(arcs[k].delay)))
}

/// Howard policy iteration in floating point. Returns the arc indices of the
/// best cycle of the final policy, a near-optimal candidate that the exact
/// search then only has to confirm, and the policy's vertex values, which
/// make good starting potentials for that confirmation. `None` when some vertex has no outgoing
/// arc or the iteration does not settle.
fn policy_cycle(n: usize, arcs: &[TimingArc]) -> Option<(Vec<usize>, Vec<f64>)> {
    const EPS: f64 = 1e-9;
    const MAX_ROUNDS: usize = 200;
    let mut policy: Vec<Option<usize>> = vec![None; n];
    for (k, a) in arcs.iter().enumerate() {
        if policy[a.src].is_none_or(|p| arcs[p].weight < a.weight) {
            policy[a.src] = Some(k);
        }
    }
    let policy: Option<Vec<usize>> = policy.into_iter().collect();
    let mut policy = policy?;
    let mut eta = vec![0.0f64; n];
    let mut value = vec![0.0f64; n];
    let mut best_cycle = Vec::new();
    for _ in 0..MAX_ROUNDS {
        // Value determination: every vertex reaches exactly one policy cycle.
        let mut state = vec![0u8; n]; // 0 new, 1 on the current walk, 2 done
        best_cycle.clear();
        let mut best_eta = f64::NEG_INFINITY;
        for start in 0..n {
            let mut path = Vec::new();
            let mut v = start;
            while state[v] == 0 {
                state[v] = 1;
                path.push(v);
                v = arcs[policy[v]].dst;
            }
            if state[v] == 1 {
                let from = path.iter().position(|&u| u == v).expect("on the walk");
                let cycle: Vec<usize> = path[from..].iter().map(|&u| policy[u]).collect();
                let (w, d) = cycle_sums(arcs, &cycle);
                if d == 0 {
                    return None;
                }
                let r = w as f64 / d as f64;
                value[v] = 0.0;
                eta[v] = r;
                for &u in path[from..].iter().skip(1).rev() {
                    let a = &arcs[policy[u]];
                    eta[u] = r;
                    value[u] = a.weight as f64 - r * a.delay as f64 + value[a.dst];
                }
                for &u in &path[from..] {
                    state[u] = 2;
                }
                path.truncate(from);
                if r > best_eta {
                    best_eta = r;
                    best_cycle = cycle;
                }
            }
            for &u in path.iter().rev() {
                let a = &arcs[policy[u]];
                eta[u] = eta[a.dst];
                value[u] = a.weight as f64 - eta[u] * a.delay as f64 + value[a.dst];
                state[u] = 2;
            }
        }
        // Policy improvement: first on cycle ratios, then on values.
        let mut changed = false;
        for (k, a) in arcs.iter().enumerate() {
            if eta[a.dst] > eta[a.src] + EPS * eta[a.src].abs().max(1.0) {
                eta[a.src] = eta[a.dst];
                policy[a.src] = k;
                changed = true;
            }
        }
        if !changed {
            for (k, a) in arcs.iter().enumerate() {
                if (eta[a.dst] - eta[a.src]).abs() > EPS * eta[a.src].abs().max(1.0) {
                    continue;
                }
                let cand = a.weight as f64 - eta[a.src] * a.delay as f64 + value[a.dst];
                if cand > value[a.src] + EPS * value[a.src].abs().max(1.0) {
                    value[a.src] = cand;
                    policy[a.src] = k;
                    changed = true;
                }
            }
        }
        if !changed {
            return Some((best_cycle, value));
        }
    }
    None
}

/// Arc indices of a cycle with positive weight under `q·w - p·δ`, in path
/// order, or `None` if no such cycle exists. Queue-based Bellman–Ford:
/// only vertices whose potential rose are rescanned.
///
/// `start` optionally gives real-valued potentials for the weights divided
/// by `q`; any starting potentials keep the search exact, and near-optimal
/// ones leave little to rescan.
fn positive_cycle(
    n: usize,
    arcs: &[TimingArc],
    out: &[Vec<usize>],
    p: i128,
    q: i128,
    start: Option<&[f64]>,
) -> Result<Option<Vec<usize>>> {
    let weight = |a: &TimingArc| q * i128::from(a.weight) - p * i128::from(a.delay);
    let mut pot: Vec<i128> = match start {
        Some(x) if x.iter().all(|v| v.is_finite() && v.abs() < 1e15) => {
            x.iter().map(|&v| (v * q as f64).round() as i128).collect()
        }
        _ => vec![0; n],
    };
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut queue: VecDeque<usize> = (0..n).collect();
    let mut queued = vec![true; n];
    let budget = (n + 1).saturating_mul(arcs.len() + 1);
    let (mut relaxed, mut since_check) = (0usize, 0usize);
    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        for &k in &out[v] {
            let a = &arcs[k];
            let cand = pot[v] + weight(a);
            if cand > pot[a.dst] {
                pot[a.dst] = cand;
                parent[a.dst] = Some(k);
                if !queued[a.dst] {
                    queued[a.dst] = true;
                    queue.push_back(a.dst);
                }
                since_check += 1;
            }
        }
        // Potentials only rise, so a cycle among the parent pointers is a
        // positive cycle; one must appear if a positive cycle exists.
        if since_check >= n {
            since_check = 0;
            if let Some(c) = parent_cycle(n, arcs, &parent) {
                return Ok(Some(c));
            }
        }
        relaxed += out[v].len();
        if relaxed > budget.saturating_mul(n + 1) {
            return Err(Error::Overflow("positive cycle search"));
        }
    }
    Ok(None)
}

fn parent_cycle(n: usize, arcs: &[TimingArc], parent: &[Option<usize>]) -> Option<Vec<usize>> {
    let mut stamp = vec![usize::MAX; n];
    for start in 0..n {
        let mut v = start;
        while stamp[v] == usize::MAX {
            stamp[v] = start;
            match parent[v] {
                Some(k) => v = arcs[k].src,
                None => break,
            }
        }
        if stamp[v] == start && parent[v].is_some() {
            // v lies on a cycle found during this walk; collect it.
            let mut cycle = Vec::new();
            let mut u = v;
            loop {
                let k = parent[u].expect("cycle vertex has a parent");
                cycle.push(k);
                u = arcs[k].src;
                if u == v {
                    break;
                }
            }
            cycle.reverse();
            return Some(cycle);
        }
    }
    None
}

/// Critical cycle of a dense matrix, as a vertex sequence following arcs
/// `i -> j` for finite `T_ij`.
pub fn critical_cycle(t: &MaxPlusMatrix) -> Result<Option<CriticalCycle>> {
    let arcs: Vec<TimingArc> = t
        .digraph()
        .arcs
        .into_iter()
        .map(|(i, j, w)| TimingArc {
            src: i,
            dst: j,
            weight: w,
            delay: 1,
        })
        .collect();
    max_cycle_ratio(t.dim(), &arcs)
}

/// Iteration period and critical cycle of an SDFG.
pub fn analyze(g: &Sdfg) -> Result<Option<CriticalCycle>> {
    max_cycle_ratio(g.num_actors(), &timing_arcs(g)?)
}

/// Iteration period (maximum cycle mean) of a homogeneous SDFG.
pub fn period(g: &Sdfg) -> Result<Option<Rational64>> {
    Ok(analyze(g)?.map(|c| c.ratio))
}

/// Iterations per tick, the inverse of the period. `None` means no cycle
/// constrains the graph (only for the empty graph, since every actor is
/// self-timed against its own previous firing).
pub fn throughput_bound(g: &Sdfg) -> Result<Option<Rational64>> {
    Ok(period(g)?.map(|p| Rational64::one() / p))
}

#[cfg(test)]
mod tests {
    use num_traits::Zero;

    use super::*;

    const NEG: Option<i64> = None;

    fn two_state() -> MaxPlusMatrix {
        MaxPlusMatrix::from_rows(&[vec![NEG, Some(6)], vec![Some(1), Some(3)]]).unwrap()
    }

    #[test]
    fn identity_and_absorbing() {
        let t = vec![MaxPlus::finite(4), MaxPlus::ZERO, MaxPlus::finite(-2)];
        assert_eq!(mp_matvec(&MaxPlusMatrix::identity(3), &t).unwrap(), t);
        assert_eq!(mp_matvec(&MaxPlusMatrix::new(3), &t).unwrap(), vec![MaxPlus::ZERO; 3]);
        assert!(mp_matvec(&MaxPlusMatrix::new(2), &t).is_err());
    }

    #[test]
    fn two_state_example_matvec_and_mcm() {
        let v = mp_matvec(&two_state(), &[MaxPlus::ONE, MaxPlus::ONE]).unwrap();
        assert_eq!(v, vec![MaxPlus::finite(6), MaxPlus::finite(3)]);
        assert_eq!(max_cycle_mean(&two_state()), Some(Rational64::new(7, 2)));
        let c = critical_cycle(&two_state()).unwrap().unwrap();
        assert_eq!(c.cycle, vec![0, 1]);
        assert_eq!(c.ratio, Rational64::new(7, 2));
    }

    #[test]
    fn single_entry_and_acyclic() {
        let m = MaxPlusMatrix::from_rows(&[vec![Some(5)]]).unwrap();
        assert_eq!(max_cycle_mean(&m), Some(Rational64::from_integer(5)));
        let dag = MaxPlusMatrix::from_rows(&[vec![NEG, Some(2)], vec![NEG, NEG]]).unwrap();
        assert_eq!(max_cycle_mean(&dag), None);
    }

    #[test]
    fn lone_actor_matrix() {
        let g = Sdfg::with_exec_times(&[5]).unwrap();
        let t = firing_time_matrix(&g).unwrap();
        assert_eq!(t, MaxPlusMatrix::from_rows(&[vec![Some(5)]]).unwrap());
        assert_eq!(throughput_bound(&g).unwrap(), Some(Rational64::new(1, 5)));
    }

    #[test]
    fn two_actor_loop_with_one_token() {
        let mut g = Sdfg::with_exec_times(&[2, 3]).unwrap();
        g.connect(0, 1, 1, 0).unwrap();
        g.connect(1, 0, 1, 1).unwrap();
        let t = firing_time_matrix(&g).unwrap();
        assert_eq!(max_cycle_mean(&t), Some(Rational64::from_integer(5)));
        assert_eq!(throughput_bound(&g).unwrap(), Some(Rational64::new(1, 5)));
        assert_eq!(analyze(&g).unwrap().unwrap().cycle, vec![0, 1]);
    }

    #[test]
    fn companion_form_for_deep_tokens() {
        // Loop with three iterations of slack: period max(5/3, 3) = 3.
        let mut g = Sdfg::with_exec_times(&[2, 3]).unwrap();
        g.connect(0, 1, 2, 0).unwrap();
        g.connect(1, 0, 2, 6).unwrap();
        let t = firing_time_matrix(&g).unwrap();
        assert_eq!(t.dim(), 6);
        assert_eq!(max_cycle_mean(&t), Some(Rational64::from_integer(3)));
        assert_eq!(period(&g).unwrap(), Some(Rational64::from_integer(3)));
    }

    #[test]
    fn zero_token_cycle_deadlocks() {
        let mut g = Sdfg::with_exec_times(&[1, 1]).unwrap();
        g.connect(0, 1, 1, 0).unwrap();
        g.connect(1, 0, 1, 0).unwrap();
        assert!(matches!(firing_time_matrix(&g), Err(Error::Deadlock { .. })));
        assert!(matches!(throughput_bound(&g), Err(Error::Deadlock { .. })));
    }

    #[test]
    fn multirate_channel_is_rejected() {
        let mut g = Sdfg::with_exec_times(&[1, 1]).unwrap();
        g.add_channel(crate::sdfg::Channel {
            src: 0,
            dst: 1,
            prod: 2,
            cons: 1,
            tokens: 0,
            kind: Default::default(),
            spikes: Rational64::zero(),
        })
        .unwrap();
        assert!(matches!(timing_arcs(&g), Err(Error::NotHomogeneous { .. })));
    }

    #[test]
    fn serde_uses_null_for_neg_inf() {
        let text = serde_json::to_string(&two_state()).unwrap();
        assert_eq!(text, "[[null,6],[1,3]]");
        let back: MaxPlusMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back, two_state());
        assert!(serde_json::from_str::<MaxPlusMatrix>("[[1,2],[3]]").is_err());
    }

    #[test]
    fn matrix_product_composes_matvec() {
        let a = two_state();
        let sq = a.mul(&a).unwrap();
        let v = [MaxPlus::finite(1), MaxPlus::finite(0)];
        let once = mp_matvec(&a, &mp_matvec(&a, &v).unwrap()).unwrap();
        assert_eq!(mp_matvec(&sq, &v).unwrap(), once);
    }
}
