//! JSON documents describing shifts and potentials.
//!
//! ```json
//! {"kind": "bouquet", "a": {"form": "geometric", "r": 2, "a1": 1}, "truncate_len": 25}
//! {"kind": "finite", "matrix": [[0, 1], [1, 1]]}
//! {"memory": 2, "default": 0.0, "table": [{"word": ["r", "v(3,1,1)"], "value": -2.0794}],
//!  "scheme": "bouquet_entry", "C": 1.0, "beta": 0.0}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{CmsError, Result};
use crate::families::scheme_law;
use crate::potential::{LoopRule, Placement, Potential, ReturnLaw};
use crate::shift::{LoopCounts, TransitionSystem};
use crate::state::StateId;

/// Loop counts `a(n)`, with an optional graph override `a1` of `a(1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", try_from = "RawLoops")]
pub enum LoopSpec {
    Geometric {
        r: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a1: Option<u64>,
    },
    Ones {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a1: Option<u64>,
    },
    List {
        values: Vec<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a1: Option<u64>,
    },
    DoubleExponential {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a1: Option<u64>,
    },
}

impl LoopSpec {
    pub fn counts(&self) -> LoopCounts {
        let (base, a1) = match self {
            LoopSpec::Geometric { r, a1 } => (LoopCounts::geometric(*r), a1),
            LoopSpec::Ones { a1 } => (LoopCounts::ones(), a1),
            LoopSpec::List { values, a1 } => (LoopCounts::list(values.clone()), a1),
            LoopSpec::DoubleExponential { a1 } => (LoopCounts::double_exponential(), a1),
        };
        match a1 {
            Some(a) => base.with_first(*a),
            None => base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawShift")]
pub enum ShiftSpec {
    Bouquet {
        a: LoopSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncate_len: Option<usize>,
    },
    Finite {
        matrix: Vec<Vec<u8>>,
    },
}

impl ShiftSpec {
    pub fn build(&self) -> Result<TransitionSystem> {
        match self {
            ShiftSpec::Bouquet { a, truncate_len } => match truncate_len {
                Some(l) => TransitionSystem::truncated_bouquet(a.counts(), *l),
                None => TransitionSystem::bouquet(a.counts()),
            },
            ShiftSpec::Finite { matrix } => TransitionSystem::finite(matrix.clone()),
        }
    }

    /// Overrides the bouquet truncation.
    pub fn with_truncation(mut self, len: usize) -> Self {
        if let ShiftSpec::Bouquet { truncate_len, .. } = &mut self {
            *truncate_len = Some(len);
        }
        self
    }
}

// Flat forms of the tagged enums: serde tracks field paths through plain
// structs but not through buffered tagged content.

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum LoopForm {
    Geometric,
    Ones,
    List,
    DoubleExponential,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoops {
    form: LoopForm,
    r: Option<u64>,
    values: Option<Vec<u64>>,
    a1: Option<u64>,
}

impl TryFrom<RawLoops> for LoopSpec {
    type Error = String;

    fn try_from(raw: RawLoops) -> std::result::Result<Self, String> {
        let RawLoops { form, r, values, a1 } = raw;
        let unused = |name: &str, set: bool| if set { Err(format!("`{name}` does not apply to this form")) } else { Ok(()) };
        match form {
            LoopForm::Geometric => {
                unused("values", values.is_some())?;
                let r = r.ok_or("geometric loop counts need `r`")?;
                Ok(LoopSpec::Geometric { r, a1 })
            }
            LoopForm::List => {
                unused("r", r.is_some())?;
                let values = values.ok_or("list loop counts need `values`")?;
                Ok(LoopSpec::List { values, a1 })
            }
            LoopForm::Ones | LoopForm::DoubleExponential => {
                unused("r", r.is_some())?;
                unused("values", values.is_some())?;
                Ok(match form {
                    LoopForm::Ones => LoopSpec::Ones { a1 },
                    _ => LoopSpec::DoubleExponential { a1 },
                })
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum ShiftKind {
    Bouquet,
    Finite,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShift {
    kind: ShiftKind,
    a: Option<LoopSpec>,
    truncate_len: Option<usize>,
    matrix: Option<Vec<Vec<u8>>>,
}

impl TryFrom<RawShift> for ShiftSpec {
    type Error = String;

    fn try_from(raw: RawShift) -> std::result::Result<Self, String> {
        match raw.kind {
            ShiftKind::Bouquet => {
                if raw.matrix.is_some() {
                    return Err("`matrix` does not apply to bouquets".into());
                }
                let a = raw.a.ok_or("bouquets need loop counts `a`")?;
                Ok(ShiftSpec::Bouquet {
                    a,
                    truncate_len: raw.truncate_len,
                })
            }
            ShiftKind::Finite => {
                if raw.a.is_some() || raw.truncate_len.is_some() {
                    return Err("`a` and `truncate_len` apply to bouquets only".into());
                }
                let matrix = raw.matrix.ok_or("finite shifts need `matrix`")?;
                Ok(ShiftSpec::Finite { matrix })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    BouquetEntry,
    BouquetExit,
    BouquetMid,
    BouquetSpread,
}

impl Scheme {
    pub fn placement(&self) -> Placement {
        match self {
            Scheme::BouquetEntry => Placement::Entry,
            Scheme::BouquetExit => Placement::Exit,
            Scheme::BouquetMid => Placement::Mid,
            Scheme::BouquetSpread => Placement::Spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub word: Vec<StateId>,
    pub value: f64,
}

fn default_memory() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default)]
    pub default: f64,
    #[serde(default)]
    pub table: Vec<TableEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Declared `var_k`, `k = 1..memory-1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variation: Option<Vec<f64>>,
}

impl Default for PotentialSpec {
    /// The zero potential.
    fn default() -> Self {
        PotentialSpec {
            memory: 1,
            default: 0.0,
            table: Vec::new(),
            scheme: None,
            c: None,
            beta: None,
            variation: None,
        }
    }
}

impl PotentialSpec {
    /// Builds the potential on `shift`; schemes also return the aggregate
    /// return law of the abstract family.
    pub fn build(&self, shift: &ShiftSpec) -> Result<(Potential, Option<ReturnLaw>)> {
        let entries = self.table.iter().map(|e| (e.word.clone(), e.value));
        let mut phi = Potential::from_table(self.memory, self.default, entries)
            .map_err(|e| CmsError::spec("table", e.to_string()))?;
        let mut law = None;
        if let Some(scheme) = self.scheme {
            let loops = match shift {
                ShiftSpec::Bouquet { a, .. } => a.counts(),
                ShiftSpec::Finite { .. } => {
                    return Err(CmsError::spec("scheme", "bouquet schemes need a bouquet shift"));
                }
            };
            if self.memory != 2 {
                return Err(CmsError::spec("memory", "bouquet schemes need memory 2"));
            }
            let c = self.c.unwrap_or(1.0);
            if c.is_nan() || c <= 0.0 {
                return Err(CmsError::spec("C", "C must be positive"));
            }
            let l = scheme_law(&loops.without_override(), c.ln(), self.beta.unwrap_or(0.0))
                .map_err(|e| CmsError::spec("scheme", e.to_string()))?;
            phi = phi.with_rule(LoopRule {
                law: l.clone(),
                placement: scheme.placement(),
                graph_loops: loops,
            })?;
            law = Some(l);
        } else if self.c.is_some() || self.beta.is_some() {
            return Err(CmsError::spec("C", "`C` and `beta` need a scheme"));
        }
        if let Some(v) = &self.variation {
            phi = phi.with_variation(v.clone()).map_err(|e| CmsError::spec("variation", e.to_string()))?;
        }
        Ok((phi, law))
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CmsError::spec(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

pub fn parse_shift(text: &str) -> Result<ShiftSpec> {
    parse(text)
}

pub fn parse_potential(text: &str) -> Result<PotentialSpec> {
    parse(text)
}
