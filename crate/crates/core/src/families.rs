//! Bouquet example families, named presets and their closed forms.

use std::f64::consts::LN_2;

use crate::error::{CmsError, Result};
use crate::numeric::{bisect, log_sum_exp, zeta, Bounded};
use crate::potential::{LoopRule, Placement, Potential, ReturnLaw};
use crate::shift::{LoopCounts, LoopForm, TransitionSystem};

/// A bouquet whose length-`n` loops each carry
/// `log C - n log 2 - beta log n`, placed along the loop by `placement`.
///
/// `loops` is the abstract loop-count sequence; a first-length override on
/// it (`a(1)`) changes the graph but keeps the aggregate weights `w*_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BouquetSpec {
    pub loops: LoopCounts,
    pub placement: Placement,
    pub log_c: f64,
    pub beta: f64,
    pub truncate: Option<usize>,
}

impl BouquetSpec {
    pub fn new(loops: LoopCounts, placement: Placement) -> Self {
        BouquetSpec {
            loops,
            placement,
            log_c: 0.0,
            beta: 0.0,
            truncate: None,
        }
    }

    /// Aggregate return law `w*_n = a(n) C 2^{-n} n^{-beta}` of the
    /// untruncated abstract family.
    pub fn law(&self) -> Result<ReturnLaw> {
        scheme_law(&self.loops.without_override(), self.log_c, self.beta)
    }
}

/// Return law of the loop-weight scheme `log C - n log 2 - beta log n`.
pub fn scheme_law(loops: &LoopCounts, log_c: f64, beta: f64) -> Result<ReturnLaw> {
    if !log_c.is_finite() || !beta.is_finite() {
        return Err(CmsError::domain("C must be positive and beta finite"));
    }
    let first = loops.count_u64(1);
    let rest_law = match loops.form() {
        LoopForm::Ones => Some(LN_2),
        LoopForm::Geometric { r } if *r >= 1 => Some(LN_2 - (*r as f64).ln()),
        _ => None,
    };
    let natural_first = match loops.form() {
        LoopForm::Ones => Some(1),
        LoopForm::Geometric { r } => Some(*r),
        _ => None,
    };
    match (rest_law, natural_first) {
        (Some(rate), Some(nat)) if first == Some(nat) => Ok(ReturnLaw::PowerLaw { log_c, rate, beta }),
        _ => match loops.form() {
            LoopForm::DoubleExponential => Err(CmsError::domain(
                "double-exponential loop counts are abstract only; give per-length weights (sec54)",
            )),
            _ => {
                let end = loops
                    .support_end()
                    .ok_or_else(|| CmsError::domain("loop counts with an a(1) override need a finite list"))?;
                Ok(ReturnLaw::Table(
                    (1..=end)
                        .map(|n| loops.log_count(n) + log_c - n as f64 * LN_2 - beta * (n as f64).ln())
                        .collect(),
                ))
            }
        },
    }
}

/// Graph, potential and closed-form law of a bouquet family.
#[derive(Debug, Clone)]
pub struct BuiltBouquet {
    pub spec: BouquetSpec,
    pub system: TransitionSystem,
    pub potential: Potential,
    /// Law of the untruncated abstract family.
    pub law: ReturnLaw,
}

impl BuiltBouquet {
    /// The law restricted to the loops present in the graph.
    pub fn graph_law(&self, horizon: usize) -> Vec<f64> {
        let top = self.system.max_loop_len().unwrap_or(horizon);
        (1..=horizon)
            .map(|n| {
                if n > top {
                    f64::NEG_INFINITY
                } else {
                    self.law.log_weight(n)
                }
            })
            .collect()
    }
}

/// Realizes a bouquet family as a graph with a memory-two potential.
pub fn build_bouquet(spec: &BouquetSpec) -> Result<BuiltBouquet> {
    let law = spec.law()?;
    let graph_loops = spec.loops.clone();
    if graph_loops.count_u64(1).is_none_or(|a| a >= 2) {
        return Err(CmsError::domain(
            "a graph carries at most one loop of length one: set the a(1) override to 0 or 1, \
             or use the abstract return weights",
        ));
    }
    if spec.loops.first_override() == Some(0) && spec.loops.without_override().count_u64(1) != Some(0) {
        return Err(CmsError::domain(
            "an a(1) = 0 override drops the length-one returns; use a list family instead",
        ));
    }
    let system = match spec.truncate {
        Some(l) => TransitionSystem::truncated_bouquet(graph_loops.clone(), l)?,
        None => TransitionSystem::bouquet(graph_loops.clone())?,
    };
    let potential = Potential::bouquet(LoopRule {
        law: law.clone(),
        placement: spec.placement,
        graph_loops,
    });
    Ok(BuiltBouquet {
        spec: spec.clone(),
        system,
        potential,
        law,
    })
}

/// `1 / zeta(beta)` with its error bound.
pub fn normalizing_c(beta: f64) -> Result<Bounded> {
    let z = zeta(beta, 1e-14)?;
    Ok(Bounded {
        value: 1.0 / z.value,
        error: z.error / (z.value * (z.value - z.error)),
    })
}

/// `log sum_n a(n) e^{-nh}`, or `None` where the series diverges.
fn loop_series_log(loops: &LoopCounts, h: f64) -> Option<f64> {
    let x = (-h).exp();
    let first = loops.count_u64(1).map(|a| a as f64);
    match loops.form() {
        LoopForm::Ones | LoopForm::Geometric { .. } => {
            let r = match loops.form() {
                LoopForm::Geometric { r } => *r as f64,
                _ => 1.0,
            };
            if r == 0.0 {
                return Some((first.unwrap_or(0.0) * x).ln());
            }
            let rx = r * x;
            if rx >= 1.0 {
                return None;
            }
            // a(1) x + sum_{n >= 2} (r x)^n
            let tail = rx * rx / (1.0 - rx);
            Some((first.unwrap_or(r) * x + tail).ln())
        }
        LoopForm::List(v) => {
            let terms: Vec<f64> = (1..=v.len()).map(|n| loops.log_count(n) - n as f64 * h).collect();
            Some(log_sum_exp(&terms))
        }
        LoopForm::DoubleExponential => None,
    }
}

/// Topological entropy of a bouquet: the root of
/// `sum_n a(n) e^{-nh} = 1`, to within `tol`.
pub fn htop_solve(loops: &LoopCounts, tol: f64) -> Result<f64> {
    if let LoopForm::Geometric { r } = loops.form() {
        if *r >= 1 && loops.first_override().is_none_or(|a| a == *r) {
            return Ok((2.0 * *r as f64).ln());
        }
    }
    if matches!(loops.form(), LoopForm::DoubleExponential) {
        return Err(CmsError::NoSolution(
            "sum a(n) x^n diverges for every x > 0".into(),
        ));
    }
    let f = |h: f64| loop_series_log(loops, h).unwrap_or(f64::INFINITY);
    // Lower end: just above the radius of convergence, or far left.
    let edge = match loops.form() {
        LoopForm::Ones => 0.0,
        LoopForm::Geometric { r } if *r >= 1 => (*r as f64).ln(),
        _ => f64::NEG_INFINITY,
    };
    let mut lo = if edge.is_finite() { edge + 1.0 } else { -1.0 };
    let mut step = 1.0;
    while f(lo) <= 0.0 {
        if edge.is_finite() {
            step *= 0.5;
            lo = edge + step;
            if step < 1e-300 {
                return Err(CmsError::NoSolution("series stays below one".into()));
            }
        } else {
            lo -= step;
            step *= 2.0;
            if lo < -1e6 {
                return Err(CmsError::NoSolution("series stays below one".into()));
            }
        }
    }
    let mut hi = lo + 1.0;
    while f(hi) > 0.0 {
        hi += hi - lo;
        if hi > 1e6 {
            return Err(CmsError::NoSolution("series stays above one".into()));
        }
    }
    bisect(f, lo, hi, tol)
}

/// What a named preset builds.
#[derive(Debug, Clone)]
pub enum Preset {
    Graph(Box<BuiltBouquet>),
    /// Families known only through their return weights.
    Abstract { law: ReturnLaw, loops: LoopCounts },
}

impl Preset {
    pub fn law(&self) -> &ReturnLaw {
        match self {
            Preset::Graph(b) => &b.law,
            Preset::Abstract { law, .. } => law,
        }
    }

    pub fn loops(&self) -> &LoopCounts {
        match self {
            Preset::Graph(b) => &b.spec.loops,
            Preset::Abstract { loops, .. } => loops,
        }
    }

    pub fn graph(&self) -> Option<&BuiltBouquet> {
        match self {
            Preset::Graph(b) => Some(b),
            Preset::Abstract { .. } => None,
        }
    }
}

/// Preset names and their one-line descriptions.
pub const PRESETS: [(&str, &str); 7] = [
    ("sec52-entry", "a(n) = 1, loop weight -n log 2 on the edge leaving the root"),
    ("sec52-exit", "a(n) = 1, loop weight -n log 2 on the edge returning to the root"),
    ("sec52-mid", "a(n) = 1, loop weight -n log 2 halfway along the loop"),
    ("sec52-spread", "a(n) = 1, loop weight -n log 2 spread over the first half of the loop"),
    (
        "sec53(beta,C|auto)",
        "a(n) = 2^n (graph a(1) = 1), loop weight log C - n log 2 - beta log n; defaults beta = 3, C = auto",
    ),
    ("sec54(psi1,psi2,...)", "a(n) = 2^(2^n), abstract return weights a(n) e^{psi(n)}"),
    ("renewal-ones", "a(n) = 1 with zero potential"),
];

fn parse_args(name: &str) -> Result<(&str, Vec<&str>)> {
    match name.split_once('(') {
        None => Ok((name.trim(), Vec::new())),
        Some((head, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| CmsError::spec("preset", format!("unbalanced parentheses in `{name}`")))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            Ok((head.trim(), args))
        }
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| CmsError::spec("preset", format!("{what} `{s}` is not a number")))
}

/// Builds a named preset, truncated at loop length `truncate` if given.
pub fn preset(name: &str, truncate: Option<usize>) -> Result<Preset> {
    let (head, args) = parse_args(name)?;
    let sec52 = |placement: Placement| -> Result<Preset> {
        if !args.is_empty() {
            return Err(CmsError::spec("preset", format!("`{head}` takes no arguments")));
        }
        let mut spec = BouquetSpec::new(LoopCounts::ones(), placement);
        spec.truncate = truncate;
        Ok(Preset::Graph(Box::new(build_bouquet(&spec)?)))
    };
    match head {
        "sec52-entry" => sec52(Placement::Entry),
        "sec52-exit" => sec52(Placement::Exit),
        "sec52-mid" => sec52(Placement::Mid),
        "sec52-spread" => sec52(Placement::Spread),
        "sec53" => {
            if args.len() > 2 {
                return Err(CmsError::spec("preset", "sec53 takes (beta, C)"));
            }
            let beta = match args.first() {
                Some(b) => parse_f64(b, "beta")?,
                None => 3.0,
            };
            let c = match args.get(1) {
                None | Some(&"auto") => normalizing_c(beta)?.value,
                Some(c) => parse_f64(c, "C")?,
            };
            if c.is_nan() || c <= 0.0 {
                return Err(CmsError::spec("preset", "C must be positive"));
            }
            let spec = BouquetSpec {
                loops: LoopCounts::geometric(2).with_first(1),
                placement: Placement::Entry,
                log_c: c.ln(),
                beta,
                truncate,
            };
            Ok(Preset::Graph(Box::new(build_bouquet(&spec)?)))
        }
        "sec54" => {
            if args.is_empty() {
                return Err(CmsError::spec("preset", "sec54 needs psi(1), psi(2), ..."));
            }
            let loops = LoopCounts::double_exponential();
            let psi: Vec<f64> = args.iter().map(|s| parse_f64(s, "psi")).collect::<Result<_>>()?;
            let law = ReturnLaw::Table(
                psi.iter()
                    .enumerate()
                    .map(|(i, p)| loops.log_count(i + 1) + p)
                    .collect(),
            );
            Ok(Preset::Abstract { law, loops })
        }
        "renewal-ones" => {
            if !args.is_empty() {
                return Err(CmsError::spec("preset", "`renewal-ones` takes no arguments"));
            }
            let loops = LoopCounts::ones();
            let system = match truncate {
                Some(l) => TransitionSystem::truncated_bouquet(loops.clone(), l)?,
                None => TransitionSystem::bouquet(loops.clone())?,
            };
            let mut spec = BouquetSpec::new(loops, Placement::Entry);
            spec.truncate = truncate;
            Ok(Preset::Graph(Box::new(BuiltBouquet {
                spec,
                system,
                potential: Potential::zero(),
                law: ReturnLaw::PowerLaw {
                    log_c: 0.0,
                    rate: 0.0,
                    beta: 0.0,
                },
            })))
        }
        _ => Err(CmsError::spec("preset", format!("unknown preset `{name}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn htop_examples() {
        assert!((htop_solve(&LoopCounts::geometric(2), 1e-12).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!(htop_solve(&LoopCounts::list(vec![1]), 1e-12).unwrap().abs() < 1e-11);
        assert!((htop_solve(&LoopCounts::ones(), 1e-13).unwrap() - LN_2).abs() < 1e-12);
        assert!(htop_solve(&LoopCounts::double_exponential(), 1e-9).is_err());
    }

    #[test]
    fn htop_numeric_matches_closed_form() {
        // Override equal to the natural a(1) goes through bisection.
        let h = htop_solve(&LoopCounts::list((1..=40).map(|n| 1u64 << n).collect()), 1e-13).unwrap();
        assert!((h - 4f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn normalizing_constants() {
        assert!((normalizing_c(3.0).unwrap().value - 0.831_907_372_580_707_5).abs() < 1e-13);
        let six_pi = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert!((normalizing_c(2.0).unwrap().value - six_pi).abs() < 1e-13);
        assert!((normalizing_c(60.0).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sec53_law_is_power() {
        let p = preset("sec53(3,auto)", Some(10)).unwrap();
        match p.law() {
            ReturnLaw::PowerLaw { rate, beta, .. } => {
                assert!(rate.abs() < 1e-15);
                assert_eq!(*beta, 3.0);
            }
            l => panic!("{l:?}"),
        }
        let b = p.graph().unwrap();
        let c = normalizing_c(3.0).unwrap().value;
        let root = crate::state::StateId::Root;
        assert!((b.potential.edge_weight(&root, &root).unwrap() - c.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_parallel_self_loops() {
        let spec = BouquetSpec::new(LoopCounts::geometric(2), Placement::Entry);
        let e = build_bouquet(&spec).unwrap_err();
        assert!(e.to_string().contains("a(1)"));
        assert!(preset("nope", None).is_err());
    }
}
