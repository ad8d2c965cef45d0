//! Counting the cylinders `B(n, M, q)` and the entropy and contraction
//! profiles at infinity.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{CmsError, Result};
use crate::numeric::{fit_rate, FitModel};
use crate::potential::Potential;
use crate::shift::{enumerate_words, LoopCounts, LoopForm, StateFilter, TransitionSystem};
use crate::thermo::{Verdict, TOL_FIT};
use crate::walk::{big_ln, Expansion, WalkGraph};

const ENUMERATION_CAP: usize = 5_000_000;

/// How [`count_b`] is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMethod {
    /// Dynamic programming over the compressed walk graph when the
    /// potential allows it, enumeration otherwise.
    Auto,
    Dp,
    BruteForce,
}

/// `z_n(M, q) = #B(n, M, q)` and `z_{phi,n}(M, q)`, the largest
/// `(1/n) S_n phi` over those cylinders (`-inf` when there are none).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BCount {
    pub n: usize,
    pub m: u64,
    pub q: u128,
    #[serde(serialize_with = "ser_big")]
    pub count: BigUint,
    pub z_phi: Option<f64>,
}

fn ser_big<S: serde::Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(x)
}

impl BCount {
    /// `log z_n`, `-inf` for an empty set.
    pub fn log_count(&self) -> f64 {
        big_ln(&self.count)
    }
}

fn check_args(n: usize, m: u64) -> Result<()> {
    if n == 0 {
        return Err(CmsError::domain("n must be at least 1"));
    }
    if m == 0 {
        return Err(CmsError::domain("M must be at least 1"));
    }
    Ok(())
}

/// Counts `B(n, M, q)`: admissible `(n+1)`-words with both ends in
/// `[<= q]` and at most `(n+1)/M` symbols in `[<= q]`.
pub fn count_b(
    system: &TransitionSystem,
    phi: Option<&Potential>,
    n: usize,
    m: u64,
    q: u128,
    method: CountMethod,
) -> Result<BCount> {
    check_args(n, m)?;
    let dp_ok = phi.is_none_or(|p| p.memory() <= 2);
    match method {
        CountMethod::BruteForce => count_b_bruteforce(system, phi, n, m, q),
        CountMethod::Dp if !dp_ok => Err(CmsError::domain("dynamic programming needs memory <= 2")),
        CountMethod::Auto if !dp_ok => count_b_bruteforce(system, phi, n, m, q),
        _ => Ok(b_series(system, phi, m, q, n)?.pop().expect("n >= 1")),
    }
}

/// `B(n, M, q)` counts for every `n = 1..=horizon` from one dynamic
/// programming pass.
pub fn b_series(
    system: &TransitionSystem,
    phi: Option<&Potential>,
    m: u64,
    q: u128,
    horizon: usize,
) -> Result<Vec<BCount>> {
    check_args(horizon, m)?;
    if q == 0 {
        return Ok((1..=horizon)
            .map(|n| BCount {
                n,
                m,
                q,
                count: BigUint::zero(),
                z_phi: phi.map(|_| f64::NEG_INFINITY),
            })
            .collect());
    }
    let g = WalkGraph::build(system, phi, q, system.horizon_len(horizon, q), Expansion::Macro)?;
    let rows = g.sparse_visit_walks(horizon, m);
    Ok(rows
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(n, (count, best))| BCount {
            n,
            m,
            q,
            count,
            z_phi: phi.map(|_| best / n as f64),
        })
        .collect())
}

/// Enumerates the words of `B(n, M, q)` directly.
pub fn count_b_bruteforce(
    system: &TransitionSystem,
    phi: Option<&Potential>,
    n: usize,
    m: u64,
    q: u128,
) -> Result<BCount> {
    check_args(n, m)?;
    let sys = system.restricted(system.horizon_len(n, q));
    let list = enumerate_words(
        &sys,
        n + 1,
        StateFilter::OrderAtMost(q),
        StateFilter::OrderAtMost(q),
        ENUMERATION_CAP,
    )?;
    if !list.exhaustive {
        return Err(CmsError::CapExceeded {
            what: format!("words of B({n}, {m}, {q})"),
            cap: ENUMERATION_CAP,
        });
    }
    let mut count = BigUint::zero();
    let mut best = f64::NEG_INFINITY;
    for w in &list.words {
        let low = w.states().iter().filter(|s| sys.order_index(s) <= q).count() as u128;
        // #low <= (n+1)/M, compared exactly.
        if low * m as u128 > n as u128 + 1 {
            continue;
        }
        count += 1u8;
        if let Some(p) = phi {
            let (_, hi) = p.cylinder_bounds(&sys, w, n)?;
            best = best.max(hi);
        }
    }
    Ok(BCount {
        n,
        m,
        q,
        count,
        z_phi: phi.map(|_| best / n as f64),
    })
}

/// `sum_{k <= max_parts} sum_{i_1 + ... + i_k = n} a(i_1) ... a(i_k)`.
pub fn loop_composition_count(loops: &LoopCounts, n: usize, max_parts: usize) -> BigUint {
    // c[k][s]: compositions of s into exactly k parts.
    let a: Vec<BigUint> = (0..=n).map(|i| if i == 0 { BigUint::zero() } else { loops.count(i) }).collect();
    let mut prev = vec![BigUint::zero(); n + 1];
    prev[0] = BigUint::from(1u8);
    let mut total = BigUint::zero();
    for _ in 1..=max_parts.min(n) {
        let mut next = vec![BigUint::zero(); n + 1];
        for s in 0..=n {
            if prev[s].is_zero() {
                continue;
            }
            for (i, ai) in a.iter().enumerate().take(n - s + 1).skip(1) {
                if !ai.is_zero() {
                    next[s + i] += &prev[s] * ai;
                }
            }
        }
        total += &next[n];
        prev = next;
    }
    total
}

/// One `(n, M, q)` grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileCell {
    pub n: usize,
    pub m: u64,
    pub q: u128,
    pub log_z: f64,
    pub z_phi: Option<f64>,
}

/// A tail slope for one `(M, q)` pair. `slope` is `-inf` when the
/// sequence vanishes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub m: u64,
    pub q: u128,
    pub slope: f64,
    pub stderr: f64,
}

/// Grid of counts with fitted rates.
///
/// `by_q` holds the estimate at the largest `M` for each `q`, and
/// `estimate` the one at the largest `q`: the iterated limits read at the
/// edge of the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfinityProfile {
    pub horizon: usize,
    pub cells: Vec<ProfileCell>,
    pub fits: Vec<SlopeFit>,
    pub by_q: Vec<(u128, f64)>,
    pub estimate: f64,
    pub stderr: f64,
    /// `z_n(M, q)` is non-increasing in `M` at every `(n, q)`.
    pub monotone_in_m: bool,
    /// Fitted slopes are non-increasing in `M` at every `q`.
    pub slopes_monotone_in_m: bool,
}

fn check_grid(q_list: &[u128], m_list: &[u64], horizon: usize) -> Result<()> {
    if q_list.is_empty() || m_list.is_empty() {
        return Err(CmsError::domain("M and q grids must be non-empty"));
    }
    if horizon == 0 {
        return Err(CmsError::domain("horizon must be at least 1"));
    }
    Ok(())
}

fn sorted<T: Ord + Copy>(v: &[T]) -> Vec<T> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

fn tail_fit(points: &[(usize, f64)], m: u64, q: u128, model: FitModel) -> SlopeFit {
    match fit_rate(points, 5, model) {
        Ok(f) => SlopeFit {
            m,
            q,
            slope: f.slope,
            stderr: f.stderr,
        },
        Err(_) => SlopeFit {
            m,
            q,
            slope: f64::NEG_INFINITY,
            stderr: 0.0,
        },
    }
}

fn build_profile(
    system: &TransitionSystem,
    phi: Option<&Potential>,
    q_list: &[u128],
    m_list: &[u64],
    horizon: usize,
) -> Result<(Vec<ProfileCell>, Vec<Vec<BCount>>)> {
    check_grid(q_list, m_list, horizon)?;
    let mut cells = Vec::new();
    let mut series = Vec::new();
    for &q in &sorted(q_list) {
        for &m in &sorted(m_list) {
            let s = b_series(system, phi, m, q, horizon)?;
            for b in &s {
                cells.push(ProfileCell {
                    n: b.n,
                    m,
                    q,
                    log_z: b.log_count(),
                    z_phi: b.z_phi,
                });
            }
            series.push(s);
        }
    }
    Ok((cells, series))
}

fn summarize(
    horizon: usize,
    cells: Vec<ProfileCell>,
    fits: Vec<SlopeFit>,
    series: &[Vec<BCount>],
    q_list: &[u128],
    m_list: &[u64],
) -> InfinityProfile {
    let qs = sorted(q_list);
    let ms = sorted(m_list);
    let m_top = *ms.last().expect("non-empty");
    let by_q: Vec<(u128, f64)> = qs
        .iter()
        .map(|&q| {
            let f = fits.iter().find(|f| f.q == q && f.m == m_top).expect("grid cell");
            (q, f.slope)
        })
        .collect();
    let last = fits
        .iter()
        .find(|f| f.q == *qs.last().expect("non-empty") && f.m == m_top)
        .expect("grid cell");
    let mut monotone_in_m = true;
    let mut slopes_monotone_in_m = true;
    for (qi, _) in qs.iter().enumerate() {
        for mi in 1..ms.len() {
            let a = &series[qi * ms.len() + mi - 1];
            let b = &series[qi * ms.len() + mi];
            if a.iter().zip(b).any(|(x, y)| y.count > x.count) {
                monotone_in_m = false;
            }
            let fa = &fits[qi * ms.len() + mi - 1];
            let fb = &fits[qi * ms.len() + mi];
            if fb.slope > fa.slope + 1e-9 {
                slopes_monotone_in_m = false;
            }
        }
    }
    InfinityProfile {
        horizon,
        cells,
        by_q,
        estimate: last.slope,
        stderr: last.stderr,
        fits,
        monotone_in_m,
        slopes_monotone_in_m,
    }
}

/// Growth rates of `z_n(M, q)` over the grid.
pub fn hinf_profile(
    system: &TransitionSystem,
    q_list: &[u128],
    m_list: &[u64],
    horizon: usize,
) -> Result<InfinityProfile> {
    let (cells, series) = build_profile(system, None, q_list, m_list, horizon)?;
    let fits = series
        .iter()
        .map(|s| {
            let pts: Vec<(usize, f64)> = s.iter().map(|b| (b.n, b.log_count())).collect();
            tail_fit(&pts, s[0].m, s[0].q, FitModel::Linear)
        })
        .collect();
    Ok(summarize(horizon, cells, fits, &series, q_list, m_list))
}

/// Contraction profile with the (CI) verdict `delta < P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaProfile {
    pub profile: InfinityProfile,
    pub pressure: f64,
    pub band: f64,
    pub verdict: Verdict,
}

/// Rates of `max S_n phi` over `B(n, M, q)` on the grid, i.e. the tail
/// slope of `n z_{phi,n}(M, q)`.
pub fn delta_profile(
    system: &TransitionSystem,
    phi: &Potential,
    q_list: &[u128],
    m_list: &[u64],
    horizon: usize,
    pressure: f64,
) -> Result<DeltaProfile> {
    let (cells, series) = build_profile(system, Some(phi), q_list, m_list, horizon)?;
    let fits = series
        .iter()
        .map(|s| {
            let pts: Vec<(usize, f64)> = s
                .iter()
                .map(|b| (b.n, b.z_phi.unwrap_or(f64::NEG_INFINITY) * b.n as f64))
                .collect();
            tail_fit(&pts, s[0].m, s[0].q, FitModel::LinearLog)
        })
        .collect();
    let profile = summarize(horizon, cells, fits, &series, q_list, m_list);
    let band = TOL_FIT + 2.0 * profile.stderr;
    let d = profile.estimate;
    let verdict = if d + band < pressure {
        Verdict::Holds
    } else if d - band > pressure {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(DeltaProfile {
        profile,
        pressure,
        band,
        verdict,
    })
}

/// `limsup (1/n) log a(n)` for the loop-count forms.
pub fn bouquet_hinf_oracle(loops: &LoopCounts) -> f64 {
    match loops.form() {
        LoopForm::Ones => 0.0,
        LoopForm::Geometric { r } => {
            if *r == 0 {
                f64::NEG_INFINITY
            } else {
                (*r as f64).ln()
            }
        }
        LoopForm::List(_) => f64::NEG_INFINITY,
        LoopForm::DoubleExponential => f64::INFINITY,
    }
}
