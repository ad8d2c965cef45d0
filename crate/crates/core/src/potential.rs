//! Locally constant potentials of finite memory.
//!
//! A potential is looked up on the first `memory` symbols of a point: an
//! explicit table first, then (for memory two on a bouquet) a loop rule that
//! spreads a per-loop total over the loop's edges, then a default value.
//! Everything is in natural-log units.

use std::collections::BTreeMap;

use crate::error::{CmsError, Result};
use crate::shift::{is_admissible, shortest_connector, LoopCounts, TransitionSystem};
use crate::state::{StateId, Word};

/// Aggregate first-return weights `w*_n` of a bouquet family, in log form.
///
/// `w*_n` is the sum of `exp(total loop weight)` over all loops of length
/// `n`, i.e. `Z*_n(phi, r)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ReturnLaw {
    /// `log w*_n = log_c - rate * n - beta * log n`.
    PowerLaw { log_c: f64, rate: f64, beta: f64 },
    /// `log w*_n = values[n - 1]`, and `w*_n = 0` past the end.
    Table(Vec<f64>),
}

impl ReturnLaw {
    pub fn log_weight(&self, n: usize) -> f64 {
        if n == 0 {
            return f64::NEG_INFINITY;
        }
        match self {
            ReturnLaw::PowerLaw { log_c, rate, beta } => {
                let nf = n as f64;
                let poly = if *beta == 0.0 { 0.0 } else { beta * nf.ln() };
                log_c - rate * nf - poly
            }
            ReturnLaw::Table(v) => v.get(n - 1).copied().unwrap_or(f64::NEG_INFINITY),
        }
    }

    /// `log w*_n` for `n = 1..=horizon`.
    pub fn log_weights(&self, horizon: usize) -> Vec<f64> {
        (1..=horizon).map(|n| self.log_weight(n)).collect()
    }

    /// The law of `phi + c`: every length-`n` return gains `n c`.
    pub fn shifted(&self, c: f64) -> ReturnLaw {
        match self {
            ReturnLaw::PowerLaw { log_c, rate, beta } => ReturnLaw::PowerLaw {
                log_c: *log_c,
                rate: rate - c,
                beta: *beta,
            },
            ReturnLaw::Table(v) => {
                ReturnLaw::Table(v.iter().enumerate().map(|(i, x)| x + c * (i + 1) as f64).collect())
            }
        }
    }
}

/// Where a loop's total weight sits along the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// On the edge leaving the root.
    Entry,
    /// On the edge returning to the root.
    Exit,
    /// On edge `ceil(n/2) - 1` (0-based) of a length-`n` loop.
    Mid,
    /// Split evenly over the first `ceil(n/2)` edges.
    Spread,
}

impl Placement {
    /// Fraction of the loop total carried by edge `k` (0-based) of a
    /// length-`n` loop.
    pub fn share(&self, n: usize, k: usize) -> f64 {
        let half = n.div_ceil(2);
        match self {
            Placement::Entry => (k == 0) as u8 as f64,
            Placement::Exit => (k + 1 == n) as u8 as f64,
            Placement::Mid => (k + 1 == half) as u8 as f64,
            Placement::Spread => {
                if k < half {
                    1.0 / half as f64
                } else {
                    0.0
                }
            }
        }
    }
}

/// Bouquet edge weights derived from an aggregate return law.
///
/// A single loop of length `n` carries `log w*_n - log a(n)` in total, with
/// `a(n)` the loop count realized in the graph, so the aggregate weight is
/// preserved when `a(1)` is overridden.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopRule {
    pub law: ReturnLaw,
    pub placement: Placement,
    pub graph_loops: LoopCounts,
}

impl LoopRule {
    pub fn loop_total(&self, n: usize) -> f64 {
        self.law.log_weight(n) - self.graph_loops.log_count(n)
    }

    pub fn edge_weight(&self, n: usize, k: usize) -> f64 {
        let share = self.placement.share(n, k);
        if share == 0.0 {
            0.0
        } else {
            share * self.loop_total(n)
        }
    }
}

/// Position of a bouquet edge `x -> y` as (loop length, 0-based edge index).
pub(crate) fn bouquet_edge(x: &StateId, y: &StateId) -> Option<(usize, usize)> {
    match (x, y) {
        (StateId::Root, StateId::Root) => Some((1, 0)),
        (StateId::Root, StateId::Loop { len, pos: 1, .. }) => Some((*len as usize, 0)),
        (StateId::Loop { len, pos, .. }, StateId::Root) if pos + 1 == *len => {
            Some((*len as usize, *len as usize - 1))
        }
        (StateId::Loop { len, index, pos }, StateId::Loop { len: l2, index: i2, pos: p2 })
            if len == l2 && index == i2 && *p2 == pos + 1 =>
        {
            Some((*len as usize, *pos as usize))
        }
        _ => None,
    }
}

/// Which Birkhoff sum [`Potential::birkhoff_sum`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMode {
    /// `S_{|w|-m+1} phi` over the cylinder `[w]`.
    OpenCylinder,
    /// `S_{|w|} phi` at the periodic point with period word `w`.
    PeriodicWrap,
}

/// A Birkhoff sum over a cylinder: exact when the cylinder determines it,
/// otherwise bracketed by its infimum and supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirkhoffValue {
    pub lower: f64,
    pub upper: f64,
    pub length: usize,
    pub exact: bool,
}

impl BirkhoffValue {
    fn exact(value: f64, length: usize) -> Self {
        BirkhoffValue {
            lower: value,
            upper: value,
            length,
            exact: true,
        }
    }

    pub fn value(&self) -> f64 {
        if self.exact {
            self.lower
        } else {
            0.5 * (self.lower + self.upper)
        }
    }

    pub fn average(&self) -> f64 {
        self.value() / self.length as f64
    }
}

/// A potential determined by the first `memory` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    memory: usize,
    default: f64,
    table: BTreeMap<Vec<StateId>, f64>,
    rule: Option<LoopRule>,
    variation: Option<Vec<f64>>,
}

impl Potential {
    /// `phi = 0`.
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `phi = c`, memory one.
    pub fn constant(c: f64) -> Self {
        Potential {
            memory: 1,
            default: c,
            table: BTreeMap::new(),
            rule: None,
            variation: None,
        }
    }

    /// A table potential: each key is a word of length `memory`.
    pub fn from_table<I>(memory: usize, default: f64, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<StateId>, f64)>,
    {
        if memory == 0 {
            return Err(CmsError::domain("memory must be at least 1"));
        }
        if !default.is_finite() {
            return Err(CmsError::domain("default value must be finite"));
        }
        let mut table = BTreeMap::new();
        for (k, v) in entries {
            if k.len() != memory {
                return Err(CmsError::domain(format!(
                    "table key {} has length {}, expected {memory}",
                    Word(k.clone()),
                    k.len()
                )));
            }
            if !v.is_finite() {
                return Err(CmsError::domain(format!("table value at {} is not finite", Word(k))));
            }
            table.insert(k, v);
        }
        Ok(Potential {
            memory,
            default,
            table,
            rule: None,
            variation: None,
        })
    }

    /// A memory-two bouquet potential driven by a loop rule, with optional
    /// table overrides.
    pub fn bouquet(rule: LoopRule) -> Self {
        Potential {
            memory: 2,
            default: 0.0,
            table: BTreeMap::new(),
            rule: Some(rule),
            variation: None,
        }
    }

    /// Adds a loop rule to a memory-two potential.
    pub fn with_rule(mut self, rule: LoopRule) -> Result<Self> {
        if self.memory != 2 {
            return Err(CmsError::domain("loop rules need a memory-two potential"));
        }
        self.rule = Some(rule);
        Ok(self)
    }

    /// Declares `var_k` for `k = 1..memory-1`; later variations are zero.
    pub fn with_variation(mut self, var: Vec<f64>) -> Result<Self> {
        if var.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(CmsError::domain("variations must be finite and non-negative"));
        }
        self.variation = Some(var);
        Ok(self)
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn default_value(&self) -> f64 {
        self.default
    }

    pub fn table(&self) -> &BTreeMap<Vec<StateId>, f64> {
        &self.table
    }

    pub fn rule(&self) -> Option<&LoopRule> {
        self.rule.as_ref()
    }

    /// Loops `(len, index)` that carry table entries.
    pub(crate) fn table_loops(&self) -> Vec<(u32, u64)> {
        let mut v: Vec<(u32, u64)> = self
            .table
            .keys()
            .flat_map(|k| k.iter())
            .filter_map(|s| match s {
                StateId::Loop { len, index, .. } => Some((*len, *index)),
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Value of the potential on the cylinder spanned by `window`
    /// (`window.len() == memory`).
    pub fn value(&self, window: &[StateId]) -> f64 {
        debug_assert_eq!(window.len(), self.memory);
        if let Some(v) = self.table.get(window) {
            return *v;
        }
        if let (Some(rule), [x, y]) = (&self.rule, window) {
            if let Some((n, k)) = bouquet_edge(x, y) {
                return rule.edge_weight(n, k);
            }
        }
        self.default
    }

    /// Weight of the edge `x -> y` for potentials of memory at most two.
    pub fn edge_weight(&self, x: &StateId, y: &StateId) -> Result<f64> {
        match self.memory {
            1 => Ok(self.value(std::slice::from_ref(x))),
            2 => Ok(self.value(&[*x, *y])),
            m => Err(CmsError::domain(format!("edge weights need memory <= 2, got {m}"))),
        }
    }

    /// `var_k(phi)`: the declared value, else the spread of all table and
    /// default values for `k < memory`, and zero from `k = memory` on.
    pub fn variation(&self, k: usize) -> f64 {
        if k >= self.memory {
            return 0.0;
        }
        if let Some(v) = &self.variation {
            return v.get(k.wrapping_sub(1)).copied().unwrap_or(0.0);
        }
        if self.rule.is_some() {
            return f64::INFINITY;
        }
        let (lo, hi) = self
            .table
            .values()
            .fold((self.default, self.default), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi - lo
    }

    /// Distortion constant `B_phi = sum_{k >= 2} var_k(phi)`.
    pub fn distortion_constant(&self) -> f64 {
        (2..self.memory).map(|k| self.variation(k)).sum()
    }

    /// Checks that every table key is an admissible word of `system`.
    pub fn validate(&self, system: &TransitionSystem) -> Result<()> {
        for k in self.table.keys() {
            let w = Word(k.clone());
            if !is_admissible(system, &w)? {
                return Err(CmsError::domain(format!("table key {w} is not admissible")));
            }
        }
        if self.rule.is_some() && !system.is_bouquet() {
            return Err(CmsError::domain("loop rules apply to bouquet shifts only"));
        }
        Ok(())
    }

    /// Birkhoff sum along `w`.
    ///
    /// In periodic mode the sum is `S_{|w|} phi` at the periodic point
    /// `(w w w ...)`, always exact. In open mode it is `S_{|w|-m+1} phi`
    /// over `[w]`, exact once `|w| >= m`; shorter words are bracketed by
    /// enumerating their extensions.
    pub fn birkhoff_sum(&self, system: &TransitionSystem, w: &Word, mode: SumMode) -> Result<BirkhoffValue> {
        if w.is_empty() {
            return Err(CmsError::domain("Birkhoff sums need a non-empty word"));
        }
        if !is_admissible(system, w)? {
            return Err(CmsError::domain(format!("word {w} is not admissible")));
        }
        let s = w.states();
        let n = s.len();
        let m = self.memory;
        match mode {
            SumMode::PeriodicWrap => {
                if !system.has_edge(&s[n - 1], &s[0]) {
                    return Err(CmsError::domain(format!("wrap edge {} -> {} is not admissible", s[n - 1], s[0])));
                }
                let mut window = Vec::with_capacity(m);
                let mut total = 0.0;
                for i in 0..n {
                    window.clear();
                    window.extend((0..m).map(|j| s[(i + j) % n]));
                    total += self.value(&window);
                }
                Ok(BirkhoffValue::exact(total, n))
            }
            SumMode::OpenCylinder => {
                if n >= m {
                    let total = s.windows(m).map(|win| self.value(win)).sum();
                    Ok(BirkhoffValue::exact(total, n - m + 1))
                } else {
                    let (lo, hi) = self.cylinder_bounds(system, w, 1)?;
                    Ok(BirkhoffValue {
                        lower: lo,
                        upper: hi,
                        length: 1,
                        exact: lo == hi,
                    })
                }
            }
        }
    }

    /// Infimum and supremum of `S_n phi` over the cylinder `[w]`.
    pub fn cylinder_bounds(&self, system: &TransitionSystem, w: &Word, n: usize) -> Result<(f64, f64)> {
        let need = n + self.memory - 1;
        if w.len() >= need {
            let total: f64 = w.states()[..need].windows(self.memory).map(|win| self.value(win)).sum();
            return Ok((total, total));
        }
        let last = w.last().ok_or_else(|| CmsError::domain("empty word"))?;
        if !system.is_bounded() {
            return Err(CmsError::Unbounded {
                state: last.to_string(),
                parameter: "truncate_len",
            });
        }
        let extra = need - w.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut count = 0usize;
        let cap = 1_000_000usize;
        // Extensions are words of length extra + 1 starting at the last symbol.
        let ext = crate::shift::enumerate_words(
            system,
            extra + 1,
            crate::shift::StateFilter::Is(last),
            crate::shift::StateFilter::Any,
            cap,
        )?;
        if !ext.exhaustive {
            return Err(CmsError::CapExceeded {
                what: format!("extensions of {w}"),
                cap,
            });
        }
        for e in ext.words {
            let mut full = w.states().to_vec();
            full.extend_from_slice(&e.states()[1..]);
            let total: f64 = full.windows(self.memory).take(n).map(|win| self.value(win)).sum();
            lo = lo.min(total);
            hi = hi.max(total);
            count += 1;
        }
        if count == 0 {
            return Err(CmsError::domain(format!("cylinder {w} is empty")));
        }
        Ok((lo, hi))
    }
}

/// `C_q(phi)`: the least value of `S_{l(a,b)} phi` over `[w(a,b) b]` for
/// states `a, b` with order index `<= q`, using the shortest connectors.
pub fn connector_constant(system: &TransitionSystem, phi: &Potential, q: u128) -> Result<f64> {
    if q == 0 {
        return Err(CmsError::domain("q must be at least 1"));
    }
    let states = system.states_up_to(q)?;
    let mut best = f64::INFINITY;
    for a in &states {
        for b in &states {
            let w = shortest_connector(system, *a, *b)?;
            let mut wb = w.clone();
            wb.push(*b);
            let (lo, _) = phi.cylinder_bounds(system, &wb, w.len())?;
            best = best.min(lo);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::LoopCounts;

    fn w(s: &str) -> Word {
        Word::parse_list(s).unwrap()
    }

    fn sec52(placement: Placement) -> (TransitionSystem, Potential) {
        let loops = LoopCounts::ones();
        let t = TransitionSystem::bouquet(loops.clone()).unwrap();
        let phi = Potential::bouquet(LoopRule {
            law: ReturnLaw::PowerLaw {
                log_c: 0.0,
                rate: std::f64::consts::LN_2,
                beta: 0.0,
            },
            placement,
            graph_loops: loops,
        });
        (t, phi)
    }

    #[test]
    fn zero_potential_sums_vanish() {
        let t = TransitionSystem::full_shift(2);
        let z = Potential::zero();
        for mode in [SumMode::OpenCylinder, SumMode::PeriodicWrap] {
            let v = z.birkhoff_sum(&t, &w("1 2 2 1"), mode).unwrap();
            assert_eq!(v.value(), 0.0);
            assert!(v.exact);
        }
    }

    #[test]
    fn entry_weighted_loop_average() {
        let (t, phi) = sec52(Placement::Entry);
        for n in 1..=9u32 {
            let mut states = vec![StateId::Root];
            states.extend((1..n).map(|k| StateId::vertex(n, 1, k)));
            let v = phi.birkhoff_sum(&t, &Word(states), SumMode::PeriodicWrap).unwrap();
            assert!((v.value() + n as f64 * std::f64::consts::LN_2).abs() < 1e-12);
            assert!((v.average() + std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn memory_two_table_cycle() {
        let t = TransitionSystem::full_shift(2);
        let p = StateId::Plain;
        let phi = Potential::from_table(2, 0.0, [(vec![p(1), p(2)], 0.5), (vec![p(2), p(1)], -1.0)]).unwrap();
        let v = phi.birkhoff_sum(&t, &w("1 2"), SumMode::PeriodicWrap).unwrap();
        assert!((v.value() + 0.5).abs() < 1e-15);
        // [1,2,1] read as an open cylinder sums the two edges.
        let v = phi.birkhoff_sum(&t, &w("1 2 1"), SumMode::OpenCylinder).unwrap();
        assert!((v.value() + 0.5).abs() < 1e-15);
        assert_eq!(v.length, 2);
    }

    #[test]
    fn short_words_are_bracketed() {
        let t = TransitionSystem::full_shift(2);
        let p = StateId::Plain;
        let phi = Potential::from_table(2, 0.0, [(vec![p(1), p(2)], 0.5), (vec![p(2), p(1)], -1.0)]).unwrap();
        let v = phi.birkhoff_sum(&t, &w("1"), SumMode::OpenCylinder).unwrap();
        assert!(!v.exact);
        assert_eq!((v.lower, v.upper), (0.0, 0.5));
    }

    #[test]
    fn inadmissible_inputs_rejected() {
        let (t, phi) = sec52(Placement::Entry);
        assert!(phi.birkhoff_sum(&t, &w("v(3,1,1) r"), SumMode::OpenCylinder).is_err());
        assert!(phi.birkhoff_sum(&t, &w("r v(3,1,1)"), SumMode::PeriodicWrap).is_err());
    }

    #[test]
    fn placements_preserve_loop_totals() {
        for p in [Placement::Entry, Placement::Exit, Placement::Mid, Placement::Spread] {
            for n in 1..20 {
                let s: f64 = (0..n).map(|k| p.share(n, k)).sum();
                assert!((s - 1.0).abs() < 1e-12, "{p:?} n={n}");
            }
        }
    }

    #[test]
    fn distortion_of_short_memory_is_zero() {
        assert_eq!(Potential::constant(3.0).distortion_constant(), 0.0);
        let (_, phi) = sec52(Placement::Entry);
        assert_eq!(phi.distortion_constant(), 0.0);
        let p = StateId::Plain;
        let m3 = Potential::from_table(3, 0.0, [(vec![p(1), p(1), p(2)], 1.0)]).unwrap();
        assert_eq!(m3.distortion_constant(), 1.0);
    }

    #[test]
    fn connector_constants() {
        let t = TransitionSystem::full_shift(2);
        assert_eq!(connector_constant(&t, &Potential::zero(), 2).unwrap(), 0.0);

        let p = StateId::Plain;
        let phi = Potential::from_table(
            2,
            0.0,
            [
                (vec![p(1), p(1)], -1.0),
                (vec![p(1), p(2)], -2.0),
                (vec![p(2), p(1)], -3.0),
                (vec![p(2), p(2)], -4.0),
            ],
        )
        .unwrap();
        assert_eq!(connector_constant(&t, &phi, 2).unwrap(), -4.0);

        let (b, phi) = sec52(Placement::Entry);
        let c = connector_constant(&b, &phi, 1).unwrap();
        assert!((c + std::f64::consts::LN_2).abs() < 1e-15);
    }
}
