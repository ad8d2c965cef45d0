//! Dynamic programming over walks of a transition system.
//!
//! Bouquets are compressed: loops that touch `[<= q]` or carry table entries
//! are kept vertex by vertex, every other loop of length `m` is identical to
//! its siblings and is represented once with multiplicity `h(m)`. In
//! [`Expansion::Macro`] mode such a loop becomes a single root-to-root arc of
//! length `m`; in [`Expansion::Chain`] mode it is kept as a vertex chain so
//! walks may start or end inside it.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{CmsError, Result};
use crate::potential::Potential;
use crate::shift::TransitionSystem;
use crate::state::StateId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Expansion {
    Macro,
    Chain,
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub state: StateId,
    pub low: bool,
    pub start_mult: BigUint,
    pub log_start_mult: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Arc {
    pub to: usize,
    pub len: usize,
    pub weight: f64,
    pub mult: BigUint,
    pub log_mult: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct WalkGraph {
    pub nodes: Vec<Node>,
    pub arcs: Vec<Vec<Arc>>,
}

/// `ln x`, with `-inf` for zero.
pub(crate) fn big_ln(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits < 1000 {
        num_traits::ToPrimitive::to_f64(x).map_or(f64::INFINITY, f64::ln)
    } else {
        let shift = bits - 60;
        let top: BigUint = x >> shift;
        num_traits::ToPrimitive::to_f64(&top).map_or(f64::INFINITY, f64::ln) + shift as f64 * std::f64::consts::LN_2
    }
}

impl WalkGraph {
    /// Builds the compressed graph. `cap` bounds the loop lengths kept for
    /// untruncated bouquets; loops touching `[<= q]` are always kept.
    pub fn build(
        system: &TransitionSystem,
        phi: Option<&Potential>,
        q: u128,
        cap: usize,
        expansion: Expansion,
    ) -> Result<WalkGraph> {
        if let Some(p) = phi {
            if p.memory() > 2 {
                return Err(CmsError::domain(format!(
                    "walk dynamic programming needs memory <= 2, got {}",
                    p.memory()
                )));
            }
        }
        let weight = |x: &StateId, y: &StateId| -> Result<f64> {
            match phi {
                Some(p) => p.edge_weight(x, y),
                None => Ok(0.0),
            }
        };
        let mut g = WalkGraph {
            nodes: Vec::new(),
            arcs: Vec::new(),
        };
        if let Some(n) = system.finite_size() {
            for i in 1..=n as u32 {
                g.push_node(StateId::Plain(i), i as u128 <= q, BigUint::one());
            }
            for i in 0..n {
                let x = g.nodes[i].state;
                let succ: Vec<StateId> = system.successors(&x).collect();
                for y in succ {
                    let j = match y {
                        StateId::Plain(j) => j as usize - 1,
                        _ => unreachable!("finite shifts have plain states"),
                    };
                    let w = weight(&x, &y)?;
                    g.push_arc(i, j, 1, w, BigUint::one());
                }
            }
            return Ok(g);
        }

        let cap = match system.max_loop_len() {
            Some(m) => m.min(cap.max(system.loop_len_for_order(q))),
            None => cap.max(system.loop_len_for_order(q)),
        }
        .max(1);

        let mut explicit: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for s in system.states_up_to(q)? {
            if let StateId::Loop { len, index, .. } = s {
                explicit.entry(len).or_default().push(index);
            }
        }
        if let Some(p) = phi {
            for (len, index) in p.table_loops() {
                if (len as usize) <= cap && system.contains(&StateId::vertex(len, index, 1)) {
                    explicit.entry(len).or_default().push(index);
                }
            }
        }
        for v in explicit.values_mut() {
            v.sort_unstable();
            v.dedup();
        }

        let root = g.push_node(StateId::Root, q >= 1, BigUint::one());
        if system.has_edge(&StateId::Root, &StateId::Root) {
            let w = weight(&StateId::Root, &StateId::Root)?;
            g.push_arc(root, root, 1, w, BigUint::one());
        }
        for (&len, indices) in &explicit {
            for &index in indices {
                g.push_chain(system, len, index, q, BigUint::one(), &weight)?;
            }
        }
        for m in 2..=cap {
            let a = system.graph_loop_count(m);
            let taken = explicit.get(&(m as u32)).map_or(0, Vec::len);
            if a <= BigUint::from(taken) {
                continue;
            }
            let h = a - BigUint::from(taken);
            let rep = {
                let used = explicit.get(&(m as u32));
                let mut i = 1u64;
                while used.is_some_and(|u| u.binary_search(&i).is_ok()) {
                    i += 1;
                }
                i
            };
            match expansion {
                Expansion::Chain => {
                    g.push_chain(system, m as u32, rep, 0, h, &weight)?;
                }
                Expansion::Macro => {
                    let mut total = 0.0;
                    let mut prev = StateId::Root;
                    for k in 1..=m as u32 {
                        let next = if k as usize == m {
                            StateId::Root
                        } else {
                            StateId::vertex(m as u32, rep, k)
                        };
                        total += weight(&prev, &next)?;
                        prev = next;
                    }
                    g.push_arc(root, root, m, total, h);
                }
            }
        }
        Ok(g)
    }

    fn push_node(&mut self, state: StateId, low: bool, start_mult: BigUint) -> usize {
        let log_start_mult = big_ln(&start_mult);
        self.nodes.push(Node {
            state,
            low,
            start_mult,
            log_start_mult,
        });
        self.arcs.push(Vec::new());
        self.nodes.len() - 1
    }

    fn push_arc(&mut self, from: usize, to: usize, len: usize, weight: f64, mult: BigUint) {
        let log_mult = big_ln(&mult);
        self.arcs[from].push(Arc {
            to,
            len,
            weight,
            mult,
            log_mult,
        });
    }

    /// Adds the loop `(len, index)` as a vertex chain hanging off the root
    /// (node 0). `entry_mult` copies of the loop are represented.
    fn push_chain(
        &mut self,
        system: &TransitionSystem,
        len: u32,
        index: u64,
        q: u128,
        entry_mult: BigUint,
        weight: &dyn Fn(&StateId, &StateId) -> Result<f64>,
    ) -> Result<()> {
        let mut prev = 0usize;
        let mut prev_state = StateId::Root;
        for k in 1..len {
            let s = StateId::vertex(len, index, k);
            let low = q > 0 && system.order_index(&s) <= q;
            let id = self.push_node(s, low, entry_mult.clone());
            let w = weight(&prev_state, &s)?;
            let mult = if k == 1 { entry_mult.clone() } else { BigUint::one() };
            self.push_arc(prev, id, 1, w, mult);
            prev = id;
            prev_state = s;
        }
        let w = weight(&prev_state, &StateId::Root)?;
        let mult = if len == 1 { entry_mult } else { BigUint::one() };
        self.push_arc(prev, 0, 1, w, mult);
        Ok(())
    }

    /// Runs a forward DP for `steps` steps. Layer `t` holds, per node and
    /// per number of visits to low nodes, the semiring total over walks of
    /// `t` steps starting at a node accepted by `start`.
    fn run<S: Semiring>(&self, steps: usize, start: &dyn Fn(&Node) -> bool, low_cap: Option<usize>) -> Vec<Vec<S>> {
        let slots = low_cap.map_or(1, |c| c + 1);
        let n = self.nodes.len();
        let mut layers: Vec<Vec<S>> = vec![vec![S::zero(); n * slots]; steps + 1];
        for (i, node) in self.nodes.iter().enumerate() {
            if start(node) {
                let c = if low_cap.is_some() { node.low as usize } else { 0 };
                if c < slots {
                    layers[0][i * slots + c] = S::start(node);
                }
            }
        }
        for t in 0..steps {
            for i in 0..n {
                for c in 0..slots {
                    if layers[t][i * slots + c].is_zero() {
                        continue;
                    }
                    let cur = layers[t][i * slots + c].clone();
                    for arc in &self.arcs[i] {
                        let t2 = t + arc.len;
                        if t2 > steps {
                            continue;
                        }
                        let c2 = if low_cap.is_some() {
                            c + self.nodes[arc.to].low as usize
                        } else {
                            0
                        };
                        if c2 >= slots {
                            continue;
                        }
                        let v = cur.extend(arc);
                        layers[t2][arc.to * slots + c2].plus_assign(v);
                    }
                }
            }
        }
        layers
    }

    /// Totals over walks of `t` steps between low nodes, for `t = 0..=steps`.
    fn endpoint_totals<S: Semiring>(&self, steps: usize) -> Vec<S> {
        let layers = self.run::<S>(steps, &|n: &Node| n.low, None);
        layers
            .into_iter()
            .map(|layer| {
                let mut acc = S::zero();
                for (i, v) in layer.into_iter().enumerate() {
                    if self.nodes[i].low {
                        acc.plus_assign(v);
                    }
                }
                acc
            })
            .collect()
    }

    /// Number of walks of `t` steps between low nodes, `t = 0..=steps`.
    pub fn count_endpoint_walks(&self, steps: usize) -> Result<Vec<BigUint>> {
        Ok(self.endpoint_totals::<Count>(steps).into_iter().map(|c| c.0).collect())
    }

    /// Largest weight of a walk of `t` steps between low nodes.
    pub fn max_endpoint_walks(&self, steps: usize) -> Vec<f64> {
        self.endpoint_totals::<MaxPlus>(steps).into_iter().map(|c| c.0).collect()
    }

    /// For each `t <= steps`: the number and the largest weight of walks of
    /// `t` steps between low nodes visiting low nodes at most
    /// `(t + 1) / m` times (both endpoints included).
    pub fn sparse_visit_walks(&self, steps: usize, m: u64) -> Vec<(BigUint, f64)> {
        let cap = ((steps as u64 + 1) / m) as usize;
        let counts = self.run::<Count>(steps, &|n: &Node| n.low, Some(cap));
        let maxes = self.run::<MaxPlus>(steps, &|n: &Node| n.low, Some(cap));
        let slots = cap + 1;
        (0..=steps)
            .map(|t| {
                let allowed = ((t as u64 + 1) / m) as usize;
                let mut c = BigUint::zero();
                let mut best = f64::NEG_INFINITY;
                for (i, node) in self.nodes.iter().enumerate() {
                    if !node.low {
                        continue;
                    }
                    for k in 0..=allowed.min(cap) {
                        c += &counts[t][i * slots + k].0;
                        best = best.max(maxes[t][i * slots + k].0);
                    }
                }
                (c, best)
            })
            .collect()
    }

    /// `log` of the total weight of first-return loops at the state of
    /// order one, per length `1..=steps`. Expects a graph built with `q = 1`.
    pub fn root_first_returns(&self, steps: usize) -> Vec<f64> {
        let layers = self.run::<LogSum>(steps, &|n: &Node| n.low, Some(2));
        (1..=steps).map(|t| layers[t][2].0).collect()
    }

    /// Best-weight walk search with constraints on the first, interior and
    /// last positions. For each `n = 1..=steps` returns the best weight of
    /// an `n`-step walk and its node sequence.
    pub fn best_walks(
        &self,
        steps: usize,
        start_ok: &dyn Fn(&Node) -> bool,
        interior_ok: &dyn Fn(&Node) -> bool,
        end_ok: &dyn Fn(&Node) -> bool,
    ) -> Vec<Option<(f64, Vec<usize>)>> {
        let n = self.nodes.len();
        // f[t][v]: best weight of a t-step walk whose positions 0..=t pass
        // start_ok / interior_ok; pred[t][v] the previous node.
        let mut f = vec![vec![f64::NEG_INFINITY; n]; steps + 1];
        let mut pred = vec![vec![usize::MAX; n]; steps + 1];
        for (i, node) in self.nodes.iter().enumerate() {
            if start_ok(node) {
                f[0][i] = 0.0;
            }
        }
        let mut out = Vec::with_capacity(steps);
        for t in 1..=steps {
            let mut best: Option<(f64, usize, usize)> = None;
            for u in 0..n {
                let base = f[t - 1][u];
                if base == f64::NEG_INFINITY {
                    continue;
                }
                for arc in &self.arcs[u] {
                    debug_assert_eq!(arc.len, 1, "best_walks needs a chain-expanded graph");
                    let v = arc.to;
                    let val = base + arc.weight;
                    if end_ok(&self.nodes[v]) && best.is_none_or(|(b, _, _)| val > b) {
                        best = Some((val, u, v));
                    }
                    if interior_ok(&self.nodes[v]) && val > f[t][v] {
                        f[t][v] = val;
                        pred[t][v] = u;
                    }
                }
            }
            out.push(best.map(|(val, u, v)| {
                let mut path = vec![v, u];
                let mut cur = u;
                for s in (1..t).rev() {
                    cur = pred[s][cur];
                    path.push(cur);
                }
                path.reverse();
                (val, path)
            }));
        }
        out
    }
}

pub(crate) trait Semiring: Clone {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn start(node: &Node) -> Self;
    fn plus_assign(&mut self, other: Self);
    fn extend(&self, arc: &Arc) -> Self;
}

#[derive(Debug, Clone)]
pub(crate) struct Count(pub BigUint);

impl Semiring for Count {
    fn zero() -> Self {
        Count(BigUint::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn start(node: &Node) -> Self {
        Count(node.start_mult.clone())
    }
    fn plus_assign(&mut self, other: Self) {
        self.0 += other.0;
    }
    fn extend(&self, arc: &Arc) -> Self {
        if arc.mult.is_one() {
            self.clone()
        } else {
            Count(&self.0 * &arc.mult)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MaxPlus(pub f64);

impl Semiring for MaxPlus {
    fn zero() -> Self {
        MaxPlus(f64::NEG_INFINITY)
    }
    fn is_zero(&self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
    fn start(_: &Node) -> Self {
        MaxPlus(0.0)
    }
    fn plus_assign(&mut self, other: Self) {
        self.0 = self.0.max(other.0);
    }
    fn extend(&self, arc: &Arc) -> Self {
        MaxPlus(self.0 + arc.weight)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum(pub f64);

impl Semiring for LogSum {
    fn zero() -> Self {
        LogSum(f64::NEG_INFINITY)
    }
    fn is_zero(&self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
    fn start(node: &Node) -> Self {
        LogSum(node.log_start_mult)
    }
    fn plus_assign(&mut self, other: Self) {
        self.0 = crate::numeric::log_add(self.0, other.0);
    }
    fn extend(&self, arc: &Arc) -> Self {
        LogSum(self.0 + arc.weight + arc.log_mult)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::LoopCounts;

    #[test]
    fn bouquet_compositions_count() {
        let t = TransitionSystem::bouquet(LoopCounts::ones()).unwrap();
        let g = WalkGraph::build(&t, None, 1, 10, Expansion::Macro).unwrap();
        let c = g.count_endpoint_walks(10).unwrap();
        assert_eq!(c.len(), 11);
        // Root-to-root walks of n steps: compositions of n, 2^(n-1).
        for (n, count) in c.iter().enumerate().skip(1) {
            assert_eq!(*count, BigUint::from(1u64 << (n - 1)));
        }
    }

    #[test]
    fn macro_and_chain_agree() {
        let t = TransitionSystem::bouquet(LoopCounts::geometric(2).with_first(1)).unwrap();
        let a = WalkGraph::build(&t, None, 3, 9, Expansion::Macro).unwrap();
        let b = WalkGraph::build(&t, None, 3, 9, Expansion::Chain).unwrap();
        assert_eq!(a.count_endpoint_walks(9).unwrap(), b.count_endpoint_walks(9).unwrap());
    }

    #[test]
    fn big_logs() {
        let x = BigUint::one() << 5000usize;
        assert!((big_ln(&x) - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        assert_eq!(big_ln(&BigUint::one()), 0.0);
    }
}
