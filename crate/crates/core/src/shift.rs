//! Countable Markov shifts given by a lazily enumerable transition graph.
//!
//! Two families are supported: finite 0/1 transition matrices and bouquets of
//! simple loops attached at a root, optionally truncated at a maximal loop
//! length. All enumeration is deterministic and follows the state order.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{CmsError, Result};
use crate::state::{StateId, Word};

/// Upper bound on materialized state lists.
const STATE_LIST_CAP: usize = 10_000_000;

/// How the number of loops `a(n)` of each length grows.
#[derive(Debug, Clone, PartialEq)]
pub enum LoopForm {
    /// `a(n) = 1`.
    Ones,
    /// `a(n) = r^n`.
    Geometric { r: u64 },
    /// `a(n) = values[n - 1]`, zero past the end of the list.
    List(Vec<u64>),
    /// `a(n) = 2^(2^n)`.
    DoubleExponential,
}

/// Loop counts `a(n)` of a bouquet, with an optional override of `a(1)`.
///
/// A bouquet graph can carry at most one root self-loop, so families with
/// `a(1) >= 2` are realized as graphs through the override while their
/// aggregate return weights stay attached to the abstract family.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopCounts {
    form: LoopForm,
    first: Option<u64>,
}

impl LoopCounts {
    pub fn new(form: LoopForm) -> Self {
        LoopCounts { form, first: None }
    }

    pub fn ones() -> Self {
        Self::new(LoopForm::Ones)
    }

    pub fn geometric(r: u64) -> Self {
        Self::new(LoopForm::Geometric { r })
    }

    pub fn list(values: Vec<u64>) -> Self {
        Self::new(LoopForm::List(values))
    }

    pub fn double_exponential() -> Self {
        Self::new(LoopForm::DoubleExponential)
    }

    /// Replaces `a(1)` by `a1`.
    pub fn with_first(mut self, a1: u64) -> Self {
        self.first = Some(a1);
        self
    }

    pub fn form(&self) -> &LoopForm {
        &self.form
    }

    pub fn first_override(&self) -> Option<u64> {
        self.first
    }

    /// The family without the `a(1)` override.
    pub fn without_override(&self) -> LoopCounts {
        LoopCounts::new(self.form.clone())
    }

    /// `a(n)` for `n >= 1`.
    pub fn count(&self, n: usize) -> BigUint {
        if n == 0 {
            return BigUint::zero();
        }
        if n == 1 {
            if let Some(a1) = self.first {
                return BigUint::from(a1);
            }
        }
        match &self.form {
            LoopForm::Ones => BigUint::one(),
            LoopForm::Geometric { r } => BigUint::from(*r).pow(n as u32),
            LoopForm::List(v) => v.get(n - 1).map_or_else(BigUint::zero, |x| BigUint::from(*x)),
            LoopForm::DoubleExponential => BigUint::one() << (1usize << n.min(40)),
        }
    }

    /// `a(n)` when it fits in a `u64`.
    pub fn count_u64(&self, n: usize) -> Option<u64> {
        if n == 0 {
            return Some(0);
        }
        if n == 1 {
            if let Some(a1) = self.first {
                return Some(a1);
            }
        }
        match &self.form {
            LoopForm::Ones => Some(1),
            LoopForm::Geometric { r } => r.checked_pow(u32::try_from(n).ok()?),
            LoopForm::List(v) => Some(v.get(n - 1).copied().unwrap_or(0)),
            LoopForm::DoubleExponential => {
                if n <= 5 {
                    Some(1u64 << (1u64 << n))
                } else {
                    None
                }
            }
        }
    }

    /// `log a(n)`, `-inf` when `a(n) = 0`.
    pub fn log_count(&self, n: usize) -> f64 {
        if n == 0 {
            return f64::NEG_INFINITY;
        }
        if n == 1 {
            if let Some(a1) = self.first {
                return (a1 as f64).ln();
            }
        }
        match &self.form {
            LoopForm::Ones => 0.0,
            LoopForm::Geometric { r } => {
                if *r == 0 {
                    f64::NEG_INFINITY
                } else {
                    n as f64 * (*r as f64).ln()
                }
            }
            LoopForm::List(v) => v.get(n - 1).map_or(f64::NEG_INFINITY, |x| (*x as f64).ln()),
            LoopForm::DoubleExponential => (n as f64).exp2() * std::f64::consts::LN_2,
        }
    }

    /// Largest `n` with `a(n) > 0` when that set is finite.
    pub fn support_end(&self) -> Option<usize> {
        let tail_end = match &self.form {
            LoopForm::List(v) => Some(v.iter().rposition(|&x| x > 0).map_or(0, |i| i + 1)),
            LoopForm::Geometric { r: 0 } => Some(0),
            _ => None,
        }?;
        if tail_end <= 1 {
            Some(if self.count_u64(1).unwrap_or(0) > 0 { 1 } else { 0 })
        } else {
            Some(tail_end)
        }
    }
}

/// Which kind of system a [`TransitionSystem`] is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    FiniteMatrix,
    Bouquet,
    TruncatedBouquet,
}

#[derive(Debug, Clone)]
struct FiniteShift {
    adjacency: Vec<Vec<bool>>,
    succ: Vec<Vec<u32>>,
}

#[derive(Debug, Clone)]
struct BouquetShift {
    loops: LoopCounts,
    max_len: Option<usize>,
}

#[derive(Debug, Clone)]
enum Shift {
    Finite(FiniteShift),
    Bouquet(BouquetShift),
}

/// A topologically transitive countable directed graph.
///
/// Immutable after construction; every query is deterministic.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    inner: Shift,
}

impl TransitionSystem {
    /// A finite shift from a square 0/1 matrix. Rejects matrices whose graph
    /// is not strongly connected.
    pub fn finite(matrix: Vec<Vec<u8>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(CmsError::domain("transition matrix is empty"));
        }
        let mut adjacency = Vec::with_capacity(n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(CmsError::domain(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            let mut r = Vec::with_capacity(n);
            for &x in row {
                match x {
                    0 => r.push(false),
                    1 => r.push(true),
                    _ => return Err(CmsError::domain(format!("entry {x} in row {} is not 0/1", i + 1))),
                }
            }
            adjacency.push(r);
        }
        let succ: Vec<Vec<u32>> = adjacency
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &e)| e)
                    .map(|(j, _)| j as u32 + 1)
                    .collect()
            })
            .collect();
        if !strongly_connected(&adjacency) {
            return Err(CmsError::domain("transition graph is not topologically transitive"));
        }
        Ok(TransitionSystem {
            inner: Shift::Finite(FiniteShift { adjacency, succ }),
        })
    }

    /// The full shift on `k` symbols.
    pub fn full_shift(k: usize) -> Self {
        Self::finite(vec![vec![1; k]; k]).expect("full shift is transitive")
    }

    /// The one-state shift with a single self-loop.
    pub fn self_loop() -> Self {
        Self::full_shift(1)
    }

    /// The untruncated bouquet with loop counts `loops`.
    pub fn bouquet(loops: LoopCounts) -> Result<Self> {
        Self::build_bouquet(loops, None)
    }

    /// The bouquet keeping only loops of length `<= max_len`.
    pub fn truncated_bouquet(loops: LoopCounts, max_len: usize) -> Result<Self> {
        if max_len == 0 {
            return Err(CmsError::domain("truncation length must be at least 1"));
        }
        Self::build_bouquet(loops, Some(max_len))
    }

    fn build_bouquet(loops: LoopCounts, max_len: Option<usize>) -> Result<Self> {
        let a1 = loops.count(1);
        if a1 > BigUint::one() {
            return Err(CmsError::domain(format!(
                "a(1) = {a1}: a graph carries at most one root self-loop; \
                 use abstract renewal weights or override a(1) to 0 or 1"
            )));
        }
        let b = BouquetShift { loops, max_len };
        let nonempty = match b.effective_max() {
            Some(m) => (1..=m).any(|n| !b.loops.count(n).is_zero()),
            None => true,
        };
        if !nonempty {
            return Err(CmsError::domain("bouquet has no loops; the root would be a dead end"));
        }
        Ok(TransitionSystem {
            inner: Shift::Bouquet(b),
        })
    }

    pub fn kind(&self) -> ShiftKind {
        match &self.inner {
            Shift::Finite(_) => ShiftKind::FiniteMatrix,
            Shift::Bouquet(b) if b.max_len.is_some() => ShiftKind::TruncatedBouquet,
            Shift::Bouquet(_) => ShiftKind::Bouquet,
        }
    }

    pub fn is_bouquet(&self) -> bool {
        matches!(self.inner, Shift::Bouquet(_))
    }

    /// Loop counts of a bouquet.
    pub fn loops(&self) -> Option<&LoopCounts> {
        match &self.inner {
            Shift::Bouquet(b) => Some(&b.loops),
            Shift::Finite(_) => None,
        }
    }

    /// The explicit truncation length of a bouquet.
    pub fn truncation(&self) -> Option<usize> {
        match &self.inner {
            Shift::Bouquet(b) => b.max_len,
            Shift::Finite(_) => None,
        }
    }

    /// Longest loop present, when finite. `None` for finite matrices and
    /// for bouquets with infinitely many loops.
    pub fn max_loop_len(&self) -> Option<usize> {
        match &self.inner {
            Shift::Bouquet(b) => b.effective_max(),
            Shift::Finite(_) => None,
        }
    }

    /// Number of states of a finite matrix shift.
    pub fn finite_size(&self) -> Option<usize> {
        match &self.inner {
            Shift::Finite(f) => Some(f.adjacency.len()),
            Shift::Bouquet(_) => None,
        }
    }

    /// True when every state has finitely many successors and there are
    /// finitely many states.
    pub fn is_bounded(&self) -> bool {
        match &self.inner {
            Shift::Finite(_) => true,
            Shift::Bouquet(b) => b.effective_max().is_some(),
        }
    }

    /// `a(n)` as realized in the graph (zero past the truncation).
    pub fn graph_loop_count(&self, n: usize) -> BigUint {
        match &self.inner {
            Shift::Bouquet(b) => {
                if b.effective_max().is_some_and(|m| n > m) {
                    BigUint::zero()
                } else {
                    b.loops.count(n)
                }
            }
            Shift::Finite(_) => BigUint::zero(),
        }
    }

    /// The same bouquet with every loop longer than `max_len` removed.
    /// Finite shifts are returned unchanged.
    pub fn restricted(&self, max_len: usize) -> TransitionSystem {
        match &self.inner {
            Shift::Finite(_) => self.clone(),
            Shift::Bouquet(b) => {
                let m = b.max_len.map_or(max_len, |t| t.min(max_len)).max(1);
                TransitionSystem {
                    inner: Shift::Bouquet(BouquetShift {
                        loops: b.loops.clone(),
                        max_len: Some(m),
                    }),
                }
            }
        }
    }

    pub fn contains(&self, s: &StateId) -> bool {
        match (&self.inner, s) {
            (Shift::Finite(f), StateId::Plain(i)) => *i >= 1 && (*i as usize) <= f.adjacency.len(),
            (Shift::Bouquet(_), StateId::Root) => true,
            (Shift::Bouquet(b), StateId::Loop { len, index, pos }) => {
                let n = *len as usize;
                if n < 2 || *pos == 0 || *pos >= *len || *index == 0 {
                    return false;
                }
                if b.effective_max().is_some_and(|m| n > m) {
                    return false;
                }
                match b.loops.count_u64(n) {
                    Some(a) => *index <= a,
                    None => true,
                }
            }
            _ => false,
        }
    }

    pub fn check_state(&self, s: &StateId) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(CmsError::domain(format!("unknown state {s}")))
        }
    }

    pub fn has_edge(&self, x: &StateId, y: &StateId) -> bool {
        if !self.contains(x) || !self.contains(y) {
            return false;
        }
        match (&self.inner, x, y) {
            (Shift::Finite(f), StateId::Plain(i), StateId::Plain(j)) => {
                f.adjacency[*i as usize - 1][*j as usize - 1]
            }
            (Shift::Bouquet(b), StateId::Root, StateId::Root) => b.loops.count_u64(1) == Some(1),
            (Shift::Bouquet(_), StateId::Root, StateId::Loop { pos, .. }) => *pos == 1,
            (Shift::Bouquet(_), StateId::Loop { len, pos, .. }, StateId::Root) => *pos + 1 == *len,
            (
                Shift::Bouquet(_),
                StateId::Loop { len, index, pos },
                StateId::Loop {
                    len: l2,
                    index: i2,
                    pos: p2,
                },
            ) => len == l2 && index == i2 && *p2 == *pos + 1,
            _ => false,
        }
    }

    /// Successors of `x` in state order. Infinite for the root of an
    /// untruncated bouquet.
    pub fn successors(&self, x: &StateId) -> Box<dyn Iterator<Item = StateId> + '_> {
        if !self.contains(x) {
            return Box::new(std::iter::empty());
        }
        match (&self.inner, *x) {
            (Shift::Finite(f), StateId::Plain(i)) => {
                Box::new(f.succ[i as usize - 1].iter().map(|&j| StateId::Plain(j)))
            }
            (Shift::Bouquet(b), StateId::Root) => {
                let self_loop = (b.loops.count_u64(1) == Some(1)).then_some(StateId::Root);
                let lens: Box<dyn Iterator<Item = usize>> = match b.effective_max() {
                    Some(m) => Box::new(2..=m),
                    None => Box::new(2..),
                };
                let loops = &b.loops;
                Box::new(self_loop.into_iter().chain(lens.flat_map(move |n| {
                    let a = loops.count_u64(n).unwrap_or(u64::MAX);
                    (1..=a).map(move |i| StateId::vertex(n as u32, i, 1))
                })))
            }
            (Shift::Bouquet(_), StateId::Loop { len, index, pos }) => {
                let next = if pos + 1 == len {
                    StateId::Root
                } else {
                    StateId::vertex(len, index, pos + 1)
                };
                Box::new(std::iter::once(next))
            }
            _ => Box::new(std::iter::empty()),
        }
    }

    /// Position of `s` in the state order, starting at 1. Saturates at
    /// `u128::MAX` for indices beyond `u128`.
    pub fn order_index(&self, s: &StateId) -> u128 {
        match (&self.inner, s) {
            (Shift::Finite(_), StateId::Plain(i)) => *i as u128,
            (Shift::Bouquet(_), StateId::Root) => 1,
            (Shift::Bouquet(b), StateId::Loop { len, index, pos }) => {
                let n = *len as usize;
                let mut acc: u128 = 1;
                for m in 2..n {
                    let block = b
                        .loops
                        .count_u64(m)
                        .map_or(u128::MAX, |a| (a as u128).saturating_mul(m as u128 - 1));
                    acc = acc.saturating_add(block);
                }
                acc.saturating_add(((*index as u128) - 1).saturating_mul(n as u128 - 1))
                    .saturating_add(*pos as u128)
            }
            _ => u128::MAX,
        }
    }

    /// The state with order index `order`, if any.
    pub fn state_at(&self, order: u128) -> Option<StateId> {
        if order == 0 {
            return None;
        }
        match &self.inner {
            Shift::Finite(f) => (order <= f.adjacency.len() as u128).then_some(StateId::Plain(order as u32)),
            Shift::Bouquet(b) => {
                if order == 1 {
                    return Some(StateId::Root);
                }
                let mut rem = order - 2;
                let mut m = 2usize;
                loop {
                    if b.effective_max().is_some_and(|mx| m > mx) {
                        return None;
                    }
                    let a = b.loops.count_u64(m).map_or(u128::MAX, |a| a as u128);
                    let block = a.saturating_mul(m as u128 - 1);
                    if rem < block {
                        let i = rem / (m as u128 - 1) + 1;
                        let k = rem % (m as u128 - 1) + 1;
                        return Some(StateId::vertex(m as u32, i as u64, k as u32));
                    }
                    rem -= block;
                    m += 1;
                }
            }
        }
    }

    /// All states with order index `<= q`, in order.
    pub fn states_up_to(&self, q: u128) -> Result<Vec<StateId>> {
        let mut out = Vec::new();
        match &self.inner {
            Shift::Finite(f) => {
                let top = (q.min(f.adjacency.len() as u128)) as u32;
                out.extend((1..=top).map(StateId::Plain));
            }
            Shift::Bouquet(_) => {
                if q >= 1 {
                    out.push(StateId::Root);
                }
                let mut s = StateId::Root;
                while (out.len() as u128) < q {
                    match self.next_state(&s) {
                        Some(t) => {
                            out.push(t);
                            s = t;
                        }
                        None => break,
                    }
                    if out.len() > STATE_LIST_CAP {
                        return Err(CmsError::CapExceeded {
                            what: format!("states with order index <= {q}"),
                            cap: STATE_LIST_CAP,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// All states of a bounded system, in order.
    pub fn all_states(&self) -> Result<Vec<StateId>> {
        if !self.is_bounded() {
            return Err(CmsError::Unbounded {
                state: "r".into(),
                parameter: "truncate_len",
            });
        }
        self.states_up_to(u128::MAX)
    }

    /// Successor of `s` in the state order.
    fn next_state(&self, s: &StateId) -> Option<StateId> {
        match (&self.inner, *s) {
            (Shift::Finite(f), StateId::Plain(i)) => {
                ((i as usize) < f.adjacency.len()).then_some(StateId::Plain(i + 1))
            }
            (Shift::Bouquet(b), StateId::Root) => b.first_vertex_from(2),
            (Shift::Bouquet(b), StateId::Loop { len, index, pos }) => {
                if pos + 1 < len {
                    Some(StateId::vertex(len, index, pos + 1))
                } else if b.loops.count_u64(len as usize).is_none_or(|a| index < a) {
                    Some(StateId::vertex(len, index + 1, 1))
                } else {
                    b.first_vertex_from(len as usize + 1)
                }
            }
            _ => None,
        }
    }

    /// Longest bouquet loop containing a vertex of order index `<= q`.
    pub fn loop_len_for_order(&self, q: u128) -> usize {
        match &self.inner {
            Shift::Finite(_) => 0,
            Shift::Bouquet(b) => {
                if q < 2 {
                    return 0;
                }
                match self.state_at(q) {
                    Some(s) => s.loop_len().unwrap_or(0) as usize,
                    None => b.effective_max().unwrap_or(0),
                }
            }
        }
    }

    /// Loop length bound large enough for every walk of `steps` steps whose
    /// endpoints have order index `<= q`.
    pub(crate) fn horizon_len(&self, steps: usize, q: u128) -> usize {
        steps.max(self.loop_len_for_order(q)).max(1)
    }
}

impl BouquetShift {
    fn effective_max(&self) -> Option<usize> {
        match (self.max_len, self.loops.support_end()) {
            (Some(a), Some(b)) => Some(a.min(b.max(1))),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b.max(1)),
            (None, None) => None,
        }
    }

    fn first_vertex_from(&self, start: usize) -> Option<StateId> {
        let mut n = start;
        loop {
            if self.effective_max().is_some_and(|m| n > m) {
                return None;
            }
            if self.loops.count_u64(n).is_none_or(|a| a > 0) {
                return Some(StateId::vertex(n as u32, 1, 1));
            }
            n += 1;
        }
    }
}

fn strongly_connected(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                let e = if forward { adj[i][j] } else { adj[j][i] };
                if e && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|x| x)
    };
    // A single state needs its self-loop to carry any infinite path.
    if n == 1 {
        return adj[0][0];
    }
    reach(true) && reach(false)
}

/// True iff every consecutive pair of `w` is an edge.
pub fn is_admissible(system: &TransitionSystem, w: &Word) -> Result<bool> {
    for s in w.states() {
        system.check_state(s)?;
    }
    Ok(w.states().windows(2).all(|p| system.has_edge(&p[0], &p[1])))
}

/// Restriction on the first or last state of enumerated words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateFilter {
    Any,
    Is(StateId),
    OrderAtMost(u128),
    OrderAbove(u128),
}

impl StateFilter {
    pub fn matches(&self, system: &TransitionSystem, s: &StateId) -> bool {
        match self {
            StateFilter::Any => true,
            StateFilter::Is(t) => s == t,
            StateFilter::OrderAtMost(q) => system.order_index(s) <= *q,
            StateFilter::OrderAbove(q) => system.order_index(s) > *q,
        }
    }
}

/// Result of a bounded word enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct WordList {
    pub words: Vec<Word>,
    /// False when `limit` cut the enumeration short.
    pub exhaustive: bool,
}

/// Depth-first enumeration of fixed-length admissible words in state order.
#[derive(Debug)]
pub struct WordIter {
    system: TransitionSystem,
    len: usize,
    starts: std::vec::IntoIter<StateId>,
    end: StateFilter,
    close_to: Option<StateId>,
    avoid: Option<StateId>,
    path: Vec<StateId>,
    stack: Vec<Vec<StateId>>,
}

impl WordIter {
    fn new(
        system: TransitionSystem,
        len: usize,
        starts: Vec<StateId>,
        end: StateFilter,
        close_to: Option<StateId>,
        avoid: Option<StateId>,
    ) -> Self {
        WordIter {
            system,
            len,
            starts: starts.into_iter(),
            end,
            close_to,
            avoid,
            path: Vec::new(),
            stack: Vec::new(),
        }
    }

    fn children(&self, s: &StateId) -> Vec<StateId> {
        let mut v: Vec<StateId> = self
            .system
            .successors(s)
            .filter(|t| Some(*t) != self.avoid)
            .collect();
        v.reverse();
        v
    }

    fn accepts(&self) -> bool {
        let last = self.path[self.path.len() - 1];
        self.end.matches(&self.system, &last)
            && self.close_to.is_none_or(|t| self.system.has_edge(&last, &t))
    }
}

impl Iterator for WordIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.len == 0 {
            return None;
        }
        loop {
            if self.stack.is_empty() {
                let start = self.starts.next()?;
                self.path.clear();
                self.path.push(start);
                if self.len == 1 {
                    if self.accepts() {
                        return Some(Word(self.path.clone()));
                    }
                    continue;
                }
                let ch = self.children(&start);
                self.stack.push(ch);
                continue;
            }
            let top = self.stack.last_mut().expect("non-empty stack");
            match top.pop() {
                Some(s) => {
                    self.path.push(s);
                    if self.path.len() == self.len {
                        let hit = self.accepts().then(|| Word(self.path.clone()));
                        self.path.pop();
                        if hit.is_some() {
                            return hit;
                        }
                    } else {
                        let ch = self.children(&s);
                        self.stack.push(ch);
                    }
                }
                None => {
                    self.stack.pop();
                    self.path.pop();
                }
            }
        }
    }
}

fn start_states(system: &TransitionSystem, filter: StateFilter) -> Result<Vec<StateId>> {
    match filter {
        StateFilter::Is(s) => {
            system.check_state(&s)?;
            Ok(vec![s])
        }
        StateFilter::OrderAtMost(q) => system.states_up_to(q),
        StateFilter::Any | StateFilter::OrderAbove(_) => Ok(system
            .all_states()?
            .into_iter()
            .filter(|s| filter.matches(system, s))
            .collect()),
    }
}

/// Admissible words of length `len` whose first and last states pass the
/// filters, in lexicographic state order, at most `limit` of them.
pub fn enumerate_words(
    system: &TransitionSystem,
    len: usize,
    start: StateFilter,
    end: StateFilter,
    limit: usize,
) -> Result<WordList> {
    if limit == 0 {
        return Err(CmsError::domain("limit must be positive"));
    }
    if !system.is_bounded() {
        return Err(CmsError::Unbounded {
            state: "r".into(),
            parameter: "truncate_len",
        });
    }
    if len == 0 {
        let words = if start == StateFilter::Any && end == StateFilter::Any {
            vec![Word::default()]
        } else {
            Vec::new()
        };
        return Ok(WordList { words, exhaustive: true });
    }
    let starts = start_states(system, start)?;
    let mut it = WordIter::new(system.clone(), len, starts, end, None, None);
    let mut words = Vec::new();
    for w in it.by_ref() {
        if words.len() == limit {
            return Ok(WordList {
                words,
                exhaustive: false,
            });
        }
        words.push(w);
    }
    Ok(WordList {
        words,
        exhaustive: true,
    })
}

/// Words `w` of length `n` with `w_0 = a` whose periodic extension is
/// admissible; one per period-`n` point of the cylinder `[a]`.
pub fn periodic_points(system: &TransitionSystem, n: usize, a: StateId) -> Result<WordIter> {
    if n == 0 {
        return Err(CmsError::domain("period must be at least 1"));
    }
    system.check_state(&a)?;
    // A period-n orbit only uses loops of length <= n.
    let sys = system.restricted(n.max(a.loop_len().unwrap_or(0) as usize));
    Ok(WordIter::new(sys, n, vec![a], StateFilter::Any, Some(a), None))
}

/// First-return words to `a` of length `len`: `w_0 = a`, `w_i != a` for
/// `i >= 1`, and `w a` admissible.
pub fn first_return_words(system: &TransitionSystem, a: StateId, len: usize) -> Result<WordIter> {
    if len == 0 {
        return Err(CmsError::domain("return length must be at least 1"));
    }
    system.check_state(&a)?;
    let sys = system.restricted(len.max(a.loop_len().unwrap_or(0) as usize));
    Ok(WordIter::new(sys, len, vec![a], StateFilter::Any, Some(a), Some(a)))
}

/// A shortest word `w` with `w_0 = a` and `w b` admissible, lexicographically
/// least among shortest ones. Its length is the connector length `l(a, b)`.
pub fn shortest_connector(system: &TransitionSystem, a: StateId, b: StateId) -> Result<Word> {
    system.check_state(&a)?;
    system.check_state(&b)?;
    // Connectors never need loops longer than those through a and b.
    let horizon = a.loop_len().unwrap_or(1).max(b.loop_len().unwrap_or(1)).max(2) as usize;
    let sys = system.restricted(horizon);
    let mut parent: HashMap<StateId, StateId> = HashMap::new();
    let mut queue = VecDeque::from([a]);
    parent.insert(a, a);
    while let Some(x) = queue.pop_front() {
        if sys.has_edge(&x, &b) {
            let mut path = vec![x];
            let mut cur = x;
            while cur != a {
                cur = parent[&cur];
                path.push(cur);
            }
            path.reverse();
            return Ok(Word(path));
        }
        for y in sys.successors(&x) {
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(y) {
                e.insert(x);
                queue.push_back(y);
            }
        }
    }
    Err(CmsError::Unreachable {
        from: a.to_string(),
        to: b.to_string(),
        horizon: sys.max_loop_len().or(sys.finite_size()).unwrap_or(horizon),
    })
}

/// Outcome of [`f_property_count`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathCount {
    Exact(BigUint),
    /// The count exceeds the configured bound.
    Overflow,
}

impl PathCount {
    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            PathCount::Exact(c) => Some(c),
            PathCount::Overflow => None,
        }
    }

    pub fn to_u128(&self) -> Option<u128> {
        self.exact().and_then(|c| c.to_u128())
    }
}

/// Number of admissible words of length `len` whose first and last states
/// have order index `<= q`. Returns [`PathCount::Overflow`] above `bound`
/// or when the computation would be too large.
pub fn f_property_count(system: &TransitionSystem, q: u128, len: usize, bound: &BigUint) -> PathCount {
    if q == 0 || len == 0 {
        return PathCount::Exact(BigUint::zero());
    }
    let steps = len - 1;
    let result = crate::walk::WalkGraph::build(
        system,
        None,
        q,
        system.horizon_len(steps, q),
        crate::walk::Expansion::Macro,
    )
    .and_then(|g| Ok(g.count_endpoint_walks(steps)?.pop().unwrap_or_default()));
    match result {
        Ok(c) if &c <= bound => PathCount::Exact(c),
        _ => PathCount::Overflow,
    }
}
