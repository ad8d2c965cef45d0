use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CmsError;

/// A vertex of a countable transition graph.
///
/// Bouquet vertices are `Root` and `Loop { len, index, pos }`, the interior
/// vertex `v_pos` of the `index`-th simple loop of length `len`
/// (`1 <= pos <= len - 1`). Finite-matrix shifts use 1-based `Plain` indices.
///
/// The derived ordering agrees with the state order used for `[<= q]`
/// constraints: the root first, then loop vertices by `(len, index, pos)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateId {
    Root,
    Loop { len: u32, index: u64, pos: u32 },
    Plain(u32),
}

impl StateId {
    pub fn vertex(len: u32, index: u64, pos: u32) -> Self {
        StateId::Loop { len, index, pos }
    }

    pub fn is_root(&self) -> bool {
        matches!(self, StateId::Root)
    }

    /// Length of the bouquet loop this vertex lies on, if any.
    pub fn loop_len(&self) -> Option<u32> {
        match self {
            StateId::Loop { len, .. } => Some(*len),
            _ => None,
        }
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateId::Root => write!(f, "r"),
            StateId::Loop { len, index, pos } => write!(f, "v({len},{index},{pos})"),
            StateId::Plain(i) => write!(f, "{i}"),
        }
    }
}

impl FromStr for StateId {
    type Err = CmsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "r" {
            return Ok(StateId::Root);
        }
        if let Some(inner) = t.strip_prefix("v(").and_then(|x| x.strip_suffix(')')) {
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() == 3 {
                let len = parts[0].parse::<u32>();
                let index = parts[1].parse::<u64>();
                let pos = parts[2].parse::<u32>();
                if let (Ok(len), Ok(index), Ok(pos)) = (len, index, pos) {
                    if len >= 2 && index >= 1 && pos >= 1 && pos < len {
                        return Ok(StateId::Loop { len, index, pos });
                    }
                }
            }
            return Err(CmsError::domain(format!("malformed loop vertex `{t}`")));
        }
        match t.parse::<u32>() {
            Ok(i) if i >= 1 => Ok(StateId::Plain(i)),
            _ => Err(CmsError::domain(format!("unrecognized state `{t}`"))),
        }
    }
}

impl Serialize for StateId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite sequence of states. The empty word is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(pub Vec<StateId>);

impl Word {
    pub fn new(states: Vec<StateId>) -> Self {
        Word(states)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn states(&self) -> &[StateId] {
        &self.0
    }

    pub fn first(&self) -> Option<StateId> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<StateId> {
        self.0.last().copied()
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&mut self, s: StateId) {
        self.0.push(s);
    }

    /// Parses a whitespace- or comma-separated list of state labels.
    pub fn parse_list(s: &str) -> Result<Word, CmsError> {
        let mut out = Vec::new();
        let mut depth = 0usize;
        let mut cur = String::new();
        for ch in s.chars() {
            match ch {
                '(' => {
                    depth += 1;
                    cur.push(ch);
                }
                ')' => {
                    depth = depth.saturating_sub(1);
                    cur.push(ch);
                }
                ',' | ' ' | '\t' if depth == 0 => {
                    if !cur.trim().is_empty() {
                        out.push(cur.trim().parse()?);
                    }
                    cur.clear();
                }
                _ => cur.push(ch),
            }
        }
        if !cur.trim().is_empty() {
            out.push(cur.trim().parse()?);
        }
        Ok(Word(out))
    }
}

impl From<Vec<StateId>> for Word {
    fn from(v: Vec<StateId>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}
