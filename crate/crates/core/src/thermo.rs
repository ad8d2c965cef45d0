//! Partition sums, pressure, induced systems and recurrence diagnostics.

use serde::Serialize;

use crate::error::{CmsError, Result};
use crate::numeric::{self, fit_rate, linear_fit, log_sum_exp, CompensatedSum, FitModel, RateFit};
use crate::potential::{BirkhoffValue, Potential, ReturnLaw, SumMode};
use crate::shift::{first_return_words, periodic_points, TransitionSystem};
use crate::state::{StateId, Word};
use crate::walk::{Expansion, WalkGraph};

/// Default band for verdicts on closed-form input.
pub const TOL_CLOSED_FORM: f64 = 1e-6;
/// Default band for verdicts on fitted slopes.
pub const TOL_FIT: f64 = 1e-2;

const ENUMERATION_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumMethod {
    BruteForce,
    RenewalDp,
    ClosedForm,
}

/// `log Z_n(phi, a)` and `log Z*_n(phi, a)` for `n = 1..=horizon`
/// (entry `n - 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionSums {
    pub base: StateId,
    pub log_z: Vec<f64>,
    pub log_zstar: Vec<f64>,
    pub method: SumMethod,
    pub horizon: usize,
}

impl PartitionSums {
    /// Largest `|log Z_n - log sum_m Z*_m Z_{n-m}|` over `n`, skipping
    /// terms where both sides vanish.
    pub fn renewal_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 1..=self.horizon {
            let terms: Vec<f64> = (1..=n)
                .map(|m| {
                    let rest = if m == n { 0.0 } else { self.log_z[n - m - 1] };
                    self.log_zstar[m - 1] + rest
                })
                .collect();
            let rhs = log_sum_exp(&terms);
            let lhs = self.log_z[n - 1];
            if lhs == f64::NEG_INFINITY && rhs == f64::NEG_INFINITY {
                continue;
            }
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }

    /// True when `Z*_n <= Z_n` for every `n` (up to rounding).
    pub fn first_returns_dominated(&self) -> bool {
        self.log_z
            .iter()
            .zip(&self.log_zstar)
            .all(|(z, zs)| *zs == f64::NEG_INFINITY || *zs <= *z + 1e-12 * z.abs().max(1.0))
    }
}

/// Partition sums by enumerating periodic points through `a`.
pub fn partition_sums_bruteforce(
    system: &TransitionSystem,
    phi: &Potential,
    a: StateId,
    horizon: usize,
) -> Result<PartitionSums> {
    if horizon == 0 {
        return Err(CmsError::domain("horizon must be at least 1"));
    }
    let mut log_z = Vec::with_capacity(horizon);
    let mut log_zstar = Vec::with_capacity(horizon);
    let mut seen = 0usize;
    for n in 1..=horizon {
        let mut all = Vec::new();
        let mut first = Vec::new();
        for w in periodic_points(system, n, a)? {
            seen += 1;
            if seen > ENUMERATION_CAP {
                return Err(CmsError::CapExceeded {
                    what: format!("periodic points through {a}"),
                    cap: ENUMERATION_CAP,
                });
            }
            let s = phi.birkhoff_sum(system, &w, SumMode::PeriodicWrap)?.value();
            if w.states()[1..].iter().all(|x| *x != a) {
                first.push(s);
            }
            all.push(s);
        }
        log_z.push(log_sum_exp(&all));
        log_zstar.push(log_sum_exp(&first));
    }
    Ok(PartitionSums {
        base: a,
        log_z,
        log_zstar,
        method: SumMethod::BruteForce,
        horizon,
    })
}

/// Converts non-negative weights to logs, rejecting negative or NaN input.
pub fn log_weights_from_linear(weights: &[f64]) -> Result<Vec<f64>> {
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            if w.is_nan() || w < 0.0 {
                Err(CmsError::domain(format!("return weight w*_{} = {w} is negative", i + 1)))
            } else {
                Ok(w.ln())
            }
        })
        .collect()
}

/// Renewal sums at the root from `log w*_n` (entry `n - 1`):
/// `Z*_n = w*_n` and `Z_n = sum_{m <= n} Z*_m Z_{n-m}`, `Z_0 = 1`.
pub fn partition_sums_renewal(log_wstar: &[f64], horizon: usize) -> Result<PartitionSums> {
    if horizon == 0 {
        return Err(CmsError::domain("horizon must be at least 1"));
    }
    if log_wstar.len() < horizon {
        return Err(CmsError::domain(format!(
            "need {horizon} return weights, got {}",
            log_wstar.len()
        )));
    }
    if let Some(i) = log_wstar[..horizon].iter().position(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(CmsError::domain(format!("return weight w*_{} is not a finite weight", i + 1)));
    }
    let ls = &log_wstar[..horizon];
    // lz[k] = log Z_k, lz[0] = 0.
    let mut lz = vec![0.0f64; horizon + 1];
    let mut terms = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        terms.clear();
        terms.extend((1..=n).map(|m| ls[m - 1] + lz[n - m]));
        lz[n] = log_sum_exp(&terms);
    }
    Ok(PartitionSums {
        base: StateId::Root,
        log_z: lz[1..].to_vec(),
        log_zstar: ls.to_vec(),
        method: SumMethod::RenewalDp,
        horizon,
    })
}

/// `log Z*_n(phi, a)` for `n = 1..=horizon` at the state `a` of order one
/// (the root of a bouquet), by a walk DP. Needs memory at most two.
pub fn root_return_weights(system: &TransitionSystem, phi: &Potential, horizon: usize) -> Result<Vec<f64>> {
    let g = WalkGraph::build(system, Some(phi), 1, system.horizon_len(horizon, 1), Expansion::Macro)?;
    Ok(g.root_first_returns(horizon))
}

/// Partition sums at the state of order one: walk DP plus the renewal
/// recursion for memory at most two, enumeration otherwise.
pub fn partition_sums(system: &TransitionSystem, phi: &Potential, horizon: usize) -> Result<PartitionSums> {
    let base = system.state_at(1).ok_or_else(|| CmsError::domain("shift has no states"))?;
    if phi.memory() > 2 {
        return partition_sums_bruteforce(system, phi, base, horizon);
    }
    let mut sums = partition_sums_renewal(&root_return_weights(system, phi, horizon)?, horizon)?;
    sums.base = base;
    Ok(sums)
}

/// Slope of `log Z_n` against `n`, fitted linearly on the tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureEstimate {
    pub value: f64,
    pub stderr: f64,
    pub intercept: f64,
    /// Set when every sum vanishes; `value` is then `-inf`.
    pub vanishing: bool,
    pub window: (usize, usize),
}

fn indexed(log_values: &[f64]) -> Vec<(usize, f64)> {
    log_values.iter().enumerate().map(|(i, &y)| (i + 1, y)).collect()
}

/// Pressure estimate from the tail of `log Z_n`.
pub fn pressure_estimate(sums: &PartitionSums) -> Result<PressureEstimate> {
    pressure_from_logs(&sums.log_z)
}

/// Pressure estimate from a raw `log Z_n` sequence (entry `n - 1`).
pub fn pressure_from_logs(log_z: &[f64]) -> Result<PressureEstimate> {
    if log_z.len() < 5 {
        return Err(CmsError::domain("pressure estimate needs at least 5 terms"));
    }
    if log_z.iter().all(|x| *x == f64::NEG_INFINITY) {
        return Ok(PressureEstimate {
            value: f64::NEG_INFINITY,
            stderr: 0.0,
            intercept: f64::NEG_INFINITY,
            vanishing: true,
            window: (1, log_z.len()),
        });
    }
    let fit = fit_rate(&indexed(log_z), 5, FitModel::Linear)?;
    Ok(PressureEstimate {
        value: fit.slope,
        stderr: fit.stderr,
        intercept: fit.intercept,
        vanishing: false,
        window: fit.window,
    })
}

/// `chi_per(phi)` over periodic orbits of period `<= horizon`.
///
/// On bouquets with memory at most two every periodic orbit is a loop
/// concatenation, so the answer is the best single-loop average. Finite
/// shifts use a max-plus closed-walk recursion; other potentials fall back
/// to enumeration.
pub fn chi_per(system: &TransitionSystem, phi: &Potential, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(CmsError::domain("horizon must be at least 1"));
    }
    if phi.memory() > 2 {
        return chi_per_bruteforce(system, phi, horizon);
    }
    if let Some(k) = system.finite_size() {
        let w = |i: usize, j: usize| -> Result<f64> {
            phi.edge_weight(&StateId::Plain(i as u32 + 1), &StateId::Plain(j as u32 + 1))
        };
        let mut edge = vec![vec![f64::NEG_INFINITY; k]; k];
        for (i, row) in edge.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                if system.has_edge(&StateId::Plain(i as u32 + 1), &StateId::Plain(j as u32 + 1)) {
                    *e = w(i, j)?;
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut d = edge.clone();
        for n in 1..=horizon {
            for (i, row) in d.iter().enumerate() {
                best = best.max(row[i] / n as f64);
            }
            if n < horizon {
                let mut next = vec![vec![f64::NEG_INFINITY; k]; k];
                for i in 0..k {
                    for m in 0..k {
                        if d[i][m] == f64::NEG_INFINITY {
                            continue;
                        }
                        for j in 0..k {
                            let v = d[i][m] + edge[m][j];
                            if v > next[i][j] {
                                next[i][j] = v;
                            }
                        }
                    }
                }
                d = next;
            }
        }
        return Ok(best);
    }
    let mut best = f64::NEG_INFINITY;
    let top = system.max_loop_len().map_or(horizon, |m| m.min(horizon));
    let table_loops = phi.table_loops();
    for n in 1..=top {
        let a = system.graph_loop_count(n);
        if a == num_bigint::BigUint::from(0u8) {
            continue;
        }
        let mut indices: Vec<u64> = table_loops
            .iter()
            .filter(|(l, _)| *l as usize == n)
            .map(|(_, i)| *i)
            .collect();
        if n >= 2 && a > num_bigint::BigUint::from(indices.len()) {
            let mut rep = 1u64;
            while indices.contains(&rep) {
                rep += 1;
            }
            indices.push(rep);
        }
        if n == 1 {
            let v = phi.edge_weight(&StateId::Root, &StateId::Root)?;
            best = best.max(v);
            continue;
        }
        for i in indices {
            let mut states = vec![StateId::Root];
            states.extend((1..n as u32).map(|k| StateId::vertex(n as u32, i, k)));
            let v = phi.birkhoff_sum(system, &Word(states), SumMode::PeriodicWrap)?;
            best = best.max(v.average());
        }
    }
    Ok(best)
}

/// `chi_per` by enumerating every periodic orbit of period `<= horizon`
/// through every state (bounded systems only).
pub fn chi_per_bruteforce(system: &TransitionSystem, phi: &Potential, horizon: usize) -> Result<f64> {
    let states = system.all_states()?;
    let mut best = f64::NEG_INFINITY;
    let mut seen = 0usize;
    for a in states {
        for n in 1..=horizon {
            for w in periodic_points(system, n, a)? {
                seen += 1;
                if seen > ENUMERATION_CAP {
                    return Err(CmsError::CapExceeded {
                        what: "periodic orbits".into(),
                        cap: ENUMERATION_CAP,
                    });
                }
                best = best.max(phi.birkhoff_sum(system, &w, SumMode::PeriodicWrap)?.average());
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of [`spr_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprCheck {
    pub verdict: Verdict,
    pub slope: f64,
    pub stderr: f64,
    pub pressure: f64,
    pub tol: f64,
    pub horizon: usize,
}

/// Compares the growth rate of `Z*_n` with `P`: holds below `P - tol`,
/// fails within `tol` of `P`, inconclusive above.
pub fn spr_check(log_zstar: &[f64], pressure: f64, tol: f64) -> Result<SprCheck> {
    if log_zstar.len() < 5 {
        return Err(CmsError::domain("SPR check needs at least 5 terms"));
    }
    if !pressure.is_finite() {
        return Err(CmsError::domain("SPR check needs a finite pressure"));
    }
    let (slope, stderr) = if log_zstar.iter().all(|x| *x == f64::NEG_INFINITY) {
        (f64::NEG_INFINITY, 0.0)
    } else if log_zstar.iter().filter(|x| x.is_finite()).count() < 5 {
        // Finitely supported returns decay faster than any exponential.
        (f64::NEG_INFINITY, 0.0)
    } else {
        let f = fit_rate(&indexed(log_zstar), 5, FitModel::LinearLog)?;
        (f.slope, f.stderr)
    };
    let verdict = if slope < pressure - tol {
        Verdict::Holds
    } else if (slope - pressure).abs() <= tol {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    Ok(SprCheck {
        verdict,
        slope,
        stderr,
        pressure,
        tol,
        horizon: log_zstar.len(),
    })
}

/// A first-return word with its induced weight `S_{|w|} phi` on `[w a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedWord {
    pub word: Word,
    pub weight: BirkhoffValue,
}

/// First-return words to `base` up to length `max_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedSystem {
    pub base: StateId,
    pub words: Vec<InducedWord>,
    /// Entry `n - 1` is set when every first-return word of length `n`
    /// was listed.
    pub exhaustive: Vec<bool>,
}

impl InducedSystem {
    /// `log` of the total induced weight per return length.
    pub fn log_return_weights(&self) -> Vec<f64> {
        let mut by_len = vec![Vec::new(); self.exhaustive.len()];
        for w in &self.words {
            by_len[w.word.len() - 1].push(w.weight.value());
        }
        by_len.iter().map(|v| log_sum_exp(v)).collect()
    }
}

pub fn induced_system(
    system: &TransitionSystem,
    phi: &Potential,
    base: StateId,
    max_len: usize,
) -> Result<InducedSystem> {
    let mut words = Vec::new();
    let mut exhaustive = Vec::with_capacity(max_len);
    for len in 1..=max_len {
        let mut complete = true;
        for (count, w) in first_return_words(system, base, len)?.enumerate() {
            if count >= ENUMERATION_CAP {
                complete = false;
                break;
            }
            let mut wa = w.clone();
            wa.push(base);
            let (lo, hi) = phi.cylinder_bounds(system, &wa, len)?;
            words.push(InducedWord {
                word: w,
                weight: BirkhoffValue {
                    lower: lo,
                    upper: hi,
                    length: len,
                    exact: lo == hi,
                },
            });
        }
        exhaustive.push(complete);
    }
    Ok(InducedSystem {
        base,
        words,
        exhaustive,
    })
}

/// First-return weights `Z*_k`, either as a closed-form law or as a
/// finite list of logs.
#[derive(Debug, Clone, PartialEq)]
pub enum ReturnData {
    Law(ReturnLaw),
    Numeric(Vec<f64>),
}

/// Value of `log sum_k e^{kp} Z*_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeriesValue {
    /// Certified value with an absolute error bound.
    Finite { value: f64, error: f64 },
    Infinite,
    /// Estimated from a finite list: partial sum plus a fitted tail.
    Estimated { value: f64, partial: f64 },
    /// The finite list does not decide convergence.
    Inconclusive { partial: f64 },
}

impl SeriesValue {
    /// Best numeric reading: `+inf` for divergence, `None` when undecided.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            SeriesValue::Finite { value, .. } | SeriesValue::Estimated { value, .. } => Some(*value),
            SeriesValue::Infinite => Some(f64::INFINITY),
            SeriesValue::Inconclusive { .. } => None,
        }
    }
}

fn power_series_log(log_c: f64, d: f64, beta: f64) -> Result<SeriesValue> {
    // log sum_k C k^{-beta} e^{kd}
    if d > 0.0 {
        return Ok(SeriesValue::Infinite);
    }
    if d == 0.0 {
        if beta <= 1.0 {
            return Ok(SeriesValue::Infinite);
        }
        let z = numeric::zeta(beta, 1e-14)?;
        return Ok(SeriesValue::Finite {
            value: log_c + z.value.ln(),
            error: z.error / z.value,
        });
    }
    if beta == 0.0 {
        // Geometric: e^d / (1 - e^d).
        return Ok(SeriesValue::Finite {
            value: log_c + d - (-d.exp_m1()).ln(),
            error: 4.0 * f64::EPSILON * (1.0 + log_c.abs() + d.abs()),
        });
    }
    // Terms relative to the first: t_k = k^{-beta} e^{(k-1)d}. Past k0 the
    // ratio t_{k+1}/t_k is below q < 1 and the tail is at most t_{K+1}/(1-q).
    let k0 = if beta < 0.0 {
        ((-beta) / (-d)).ceil().max(1.0) as usize * 2 + 1
    } else {
        1
    };
    let mut sum = CompensatedSum::new();
    let mut k = 1usize;
    loop {
        let lt = -beta * (k as f64).ln() + (k - 1) as f64 * d;
        sum.add(lt.exp());
        if k >= k0 {
            let kf = k as f64;
            let ratio = ((kf + 1.0) / kf).powf(-beta) * d.exp();
            let next = -beta * (kf + 1.0).ln() + kf * d;
            if ratio < 1.0 {
                let tail = next.exp() / (1.0 - ratio);
                if tail <= 1e-17 * sum.total() || k > 10_000_000 {
                    let total = sum.total();
                    return Ok(SeriesValue::Finite {
                        value: log_c + d + total.ln(),
                        error: tail / total + 8.0 * f64::EPSILON,
                    });
                }
            }
        }
        k += 1;
    }
}

/// `log sum_k e^{kp} Z*_k`.
///
/// Closed-form laws get analytic tails. Numeric lists get a fitted tail
/// when the fitted rate plus `p` is clearly negative or positive, and an
/// inconclusive marker otherwise.
pub fn induced_pressure(data: &ReturnData, p: f64) -> Result<SeriesValue> {
    match data {
        ReturnData::Law(ReturnLaw::PowerLaw { log_c, rate, beta }) => power_series_log(*log_c, p - rate, *beta),
        ReturnData::Law(ReturnLaw::Table(v)) => {
            let terms: Vec<f64> = v.iter().enumerate().map(|(i, x)| x + (i + 1) as f64 * p).collect();
            Ok(SeriesValue::Finite {
                value: log_sum_exp(&terms),
                error: 4.0 * f64::EPSILON * v.len() as f64,
            })
        }
        ReturnData::Numeric(v) => {
            let terms: Vec<f64> = v.iter().enumerate().map(|(i, x)| x + (i + 1) as f64 * p).collect();
            let partial = log_sum_exp(&terms);
            if terms.iter().filter(|x| x.is_finite()).count() < 5 {
                return Ok(SeriesValue::Inconclusive { partial });
            }
            let fit = fit_rate(&indexed(&terms), 5, FitModel::LinearLog)?;
            if fit.slope > TOL_FIT {
                Ok(SeriesValue::Infinite)
            } else if fit.slope < -TOL_FIT {
                let last = terms.len() as f64;
                let head = fit.intercept + fit.log_coef * last.ln();
                let ratio = fit.slope.exp();
                let tail = head + (last + 1.0) * fit.slope - (1.0 - ratio).ln();
                Ok(SeriesValue::Estimated {
                    value: numeric::log_add(partial, tail),
                    partial,
                })
            } else {
                Ok(SeriesValue::Inconclusive { partial })
            }
        }
    }
}

/// The shift `p*` where the induced series stops converging, and
/// `Delta = log sum_k e^{k p*} Z*_k` there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InducedThreshold {
    pub p_star: f64,
    pub delta: SeriesValue,
}

pub fn induced_threshold(data: &ReturnData) -> Result<InducedThreshold> {
    match data {
        ReturnData::Law(ReturnLaw::PowerLaw { rate, .. }) => Ok(InducedThreshold {
            p_star: *rate,
            delta: induced_pressure(data, *rate)?,
        }),
        ReturnData::Law(ReturnLaw::Table(_)) => Ok(InducedThreshold {
            p_star: f64::INFINITY,
            delta: SeriesValue::Infinite,
        }),
        ReturnData::Numeric(v) => {
            if v.iter().filter(|x| x.is_finite()).count() < 5 {
                return Ok(InducedThreshold {
                    p_star: f64::INFINITY,
                    delta: SeriesValue::Inconclusive {
                        partial: log_sum_exp(v),
                    },
                });
            }
            let fit = fit_rate(&indexed(v), 5, FitModel::LinearLog)?;
            let p_star = -fit.slope;
            Ok(InducedThreshold {
                p_star,
                delta: induced_pressure(data, p_star)?,
            })
        }
    }
}

fn log_f_closed(data: &ReturnData, p: f64) -> Result<f64> {
    Ok(induced_pressure(data, p)?.as_f64().unwrap_or(f64::NAN))
}

/// Gurevich pressure of a renewal family: `P = -sup{p : F(p) <= 1}` with
/// `F(p) = sum_k e^{kp} Z*_k`.
pub fn renewal_pressure(law: &ReturnLaw) -> Result<f64> {
    let data = ReturnData::Law(law.clone());
    let th = induced_threshold(&data)?;
    let at_star = th.delta.as_f64().unwrap_or(f64::INFINITY);
    // Values within rounding of zero at p* count as the boundary case.
    if th.p_star.is_finite() && at_star <= 1e-12 {
        return Ok(-th.p_star);
    }
    // F is increasing; bracket the root of log F = 0 below p*.
    let f = |p: f64| log_f_closed(&data, p).unwrap_or(f64::NAN);
    let mut hi = if th.p_star.is_finite() { th.p_star } else { 1.0 };
    if !th.p_star.is_finite() {
        while f(hi) < 0.0 {
            hi = hi * 2.0 + 1.0;
            if hi > 1e12 {
                return Err(CmsError::NoSolution("return series never reaches one".into()));
            }
        }
    }
    let mut lo = hi - 1.0;
    while f(lo) >= 0.0 {
        lo = hi - 2.0 * (hi - lo);
        if lo < -1e12 {
            return Err(CmsError::NoSolution("return series stays above one".into()));
        }
    }
    let root = numeric::bisect(
        |p| {
            let v = f(p);
            if v.is_nan() || v == f64::INFINITY {
                1.0
            } else {
                v
            }
        },
        lo,
        hi,
        1e-15,
    )?;
    Ok(-root)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecurrenceClass {
    Transient,
    NullRecurrent,
    PositiveRecurrent,
    StronglyPositiveRecurrent,
    Inconclusive,
}

impl RecurrenceClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecurrenceClass::Transient => "transient",
            RecurrenceClass::NullRecurrent => "null-recurrent",
            RecurrenceClass::PositiveRecurrent => "positive-recurrent",
            RecurrenceClass::StronglyPositiveRecurrent => "strongly-positive-recurrent",
            RecurrenceClass::Inconclusive => "inconclusive",
        }
    }
}

/// Classification with the series behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrenceReport {
    pub class: RecurrenceClass,
    pub pressure: f64,
    /// `log sum_k e^{-kP} Z*_k`; zero for recurrent potentials.
    pub return_series: SeriesValue,
    /// `sum_k k e^{-kP} Z*_k` (finite for positive recurrence).
    pub moment_series: SeriesValue,
    pub tol: f64,
    pub note: String,
}

/// Classifies a return law (pressure computed here) or a numeric list of
/// `log Z*_k` together with a pressure estimate.
pub fn recurrence_classify(data: &ReturnData, pressure: Option<f64>, tol: f64) -> Result<RecurrenceReport> {
    match data {
        ReturnData::Law(law) => {
            let p = match pressure {
                Some(p) => p,
                None => renewal_pressure(law)?,
            };
            let ret = induced_pressure(data, -p)?;
            let moment = match law {
                ReturnLaw::PowerLaw { log_c, rate, beta } => power_series_log(*log_c, -p - rate, beta - 1.0)?,
                ReturnLaw::Table(v) => {
                    let terms: Vec<f64> = v
                        .iter()
                        .enumerate()
                        .map(|(i, x)| x + ((i + 1) as f64).ln() - (i + 1) as f64 * p)
                        .collect();
                    SeriesValue::Finite {
                        value: log_sum_exp(&terms),
                        error: 0.0,
                    }
                }
            };
            let th = induced_threshold(data)?;
            let delta = th.delta.as_f64().unwrap_or(f64::NAN);
            let r = ret.as_f64().unwrap_or(f64::NAN);
            let (class, note) = if r < -tol {
                (RecurrenceClass::Transient, "return series below one at -P".to_string())
            } else if r.abs() <= tol {
                if delta > tol {
                    (
                        RecurrenceClass::StronglyPositiveRecurrent,
                        "induced series exceeds one at p*".to_string(),
                    )
                } else if matches!(moment, SeriesValue::Finite { .. }) {
                    (RecurrenceClass::PositiveRecurrent, "first moment converges".to_string())
                } else {
                    (RecurrenceClass::NullRecurrent, "first moment diverges".to_string())
                }
            } else {
                (RecurrenceClass::Inconclusive, "return series above one at -P".to_string())
            };
            Ok(RecurrenceReport {
                class,
                pressure: p,
                return_series: ret,
                moment_series: moment,
                tol,
                note,
            })
        }
        ReturnData::Numeric(v) => classify_numeric(v, pressure, tol),
    }
}

fn classify_numeric(log_zstar: &[f64], pressure: Option<f64>, tol: f64) -> Result<RecurrenceReport> {
    let p = pressure.ok_or_else(|| CmsError::domain("numeric classification needs a pressure estimate"))?;
    let shifted: Vec<f64> = log_zstar
        .iter()
        .enumerate()
        .map(|(i, x)| x - (i + 1) as f64 * p)
        .collect();
    let partial = log_sum_exp(&shifted);
    let moment_terms: Vec<f64> = shifted
        .iter()
        .enumerate()
        .map(|(i, x)| x + ((i + 1) as f64).ln())
        .collect();
    let moment_partial = log_sum_exp(&moment_terms);
    let inconclusive = |note: &str| RecurrenceReport {
        class: RecurrenceClass::Inconclusive,
        pressure: p,
        return_series: SeriesValue::Inconclusive { partial },
        moment_series: SeriesValue::Inconclusive {
            partial: moment_partial,
        },
        tol,
        note: note.to_string(),
    };
    if shifted.iter().filter(|x| x.is_finite()).count() < 5 {
        return Ok(inconclusive("too few terms"));
    }
    let fit: RateFit = fit_rate(&indexed(&shifted), 5, FitModel::LinearLog)?;
    let n = shifted.len() as f64;
    if fit.slope < -TOL_FIT {
        let ret = induced_pressure(&ReturnData::Numeric(shifted.clone()), 0.0)?;
        let r = ret.as_f64().unwrap_or(f64::NAN);
        let class = if r.abs() <= tol {
            RecurrenceClass::StronglyPositiveRecurrent
        } else if r < -tol {
            RecurrenceClass::Transient
        } else {
            RecurrenceClass::Inconclusive
        };
        return Ok(RecurrenceReport {
            class,
            pressure: p,
            return_series: ret,
            moment_series: SeriesValue::Estimated {
                value: moment_partial,
                partial: moment_partial,
            },
            tol,
            note: "exponentially decaying returns".into(),
        });
    }
    if fit.slope > TOL_FIT {
        return Ok(inconclusive("returns grow faster than e^{nP}"));
    }
    // Polynomial tail c n^{-b}: the tail past n is about c n^{1-b}/(b-1).
    let b = -fit.log_coef;
    let last = fit.intercept - b * n.ln();
    if b <= 1.0 {
        return Ok(inconclusive("return tail is not summable at this horizon"));
    }
    let tail = last + n.ln() - (b - 1.0).ln();
    let total = numeric::log_add(partial, tail);
    let ret = SeriesValue::Estimated { value: total, partial };
    let (class, moment) = if total < -tol {
        (RecurrenceClass::Transient, SeriesValue::Inconclusive { partial: moment_partial })
    } else if total.abs() <= tol {
        if b > 2.0 + 0.1 {
            let mtail = last + 2.0 * n.ln() - (b - 2.0).ln();
            (
                RecurrenceClass::PositiveRecurrent,
                SeriesValue::Estimated {
                    value: numeric::log_add(moment_partial, mtail),
                    partial: moment_partial,
                },
            )
        } else if b < 2.0 - 0.1 {
            (RecurrenceClass::NullRecurrent, SeriesValue::Infinite)
        } else {
            (
                RecurrenceClass::Inconclusive,
                SeriesValue::Inconclusive { partial: moment_partial },
            )
        }
    } else {
        (
            RecurrenceClass::Inconclusive,
            SeriesValue::Inconclusive { partial: moment_partial },
        )
    };
    Ok(RecurrenceReport {
        class,
        pressure: p,
        return_series: ret,
        moment_series: moment,
        tol,
        note: format!("polynomial tail exponent {b:.3}"),
    })
}

/// `s(n)`: the largest `S_n phi` over `(n+1)`-words with both ends in
/// `[<= q]`, with the affine majorant `C_q - n lambda_q` fitted on the tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrcProfile {
    pub q: u128,
    /// Entry `n - 1` is `s(n)`; `-inf` where no word exists.
    pub s: Vec<f64>,
    pub lambda: f64,
    pub c_q: f64,
    pub window: (usize, usize),
}

impl CrcProfile {
    /// `lambda_q + P`: the contraction rate of `phi - P`. Positive values
    /// certify (CRC) at this horizon.
    pub fn margin(&self, pressure: f64) -> f64 {
        self.lambda + pressure
    }

    pub fn verdict(&self, pressure: f64, tol: f64) -> Verdict {
        let m = self.margin(pressure);
        if m > tol {
            Verdict::Holds
        } else if m < -tol || m.abs() <= tol {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    }
}

pub fn crc_profile(system: &TransitionSystem, phi: &Potential, q: u128, horizon: usize) -> Result<CrcProfile> {
    if q == 0 || horizon == 0 {
        return Err(CmsError::domain("q and the horizon must be at least 1"));
    }
    let g = WalkGraph::build(system, Some(phi), q, system.horizon_len(horizon, q), Expansion::Macro)?;
    let s: Vec<f64> = g.max_endpoint_walks(horizon)[1..].to_vec();
    let finite: Vec<(usize, f64)> = indexed(&s).into_iter().filter(|(_, y)| y.is_finite()).collect();
    if finite.len() < 2 {
        return Err(CmsError::domain("no returns to [<= q] within the horizon"));
    }
    let take = (finite.len() / 2).max(5).min(finite.len());
    let tail = &finite[finite.len() - take..];
    let xs: Vec<f64> = tail.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let (slope, _, _) = linear_fit(&xs, &ys)?;
    let lambda = -slope;
    // Smallest C_q majorizing the tail with this slope.
    let c_q = tail.iter().map(|&(n, y)| y + n as f64 * lambda).fold(f64::NEG_INFINITY, f64::max);
    Ok(CrcProfile {
        q,
        s,
        lambda,
        c_q,
        window: (tail[0].0, tail[tail.len() - 1].0),
    })
}

/// Which endpoint constraint a witness search applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// The walk ends in `[<= q]`.
    A,
    /// The walk starts in `[<= q]`.
    B,
    /// The walk stays outside `[<= q]` before its last step.
    C,
}

/// A word of `n + 1` symbols with `S_n phi > C - n eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub word: Word,
    pub steps: usize,
    pub sum: f64,
    pub bound: f64,
}

/// Searches walks of `n <= horizon` steps, shortest first, for one that
/// violates `S_n phi <= C - n eps` under the condition's constraint.
pub fn condition_witness_search(
    system: &TransitionSystem,
    phi: &Potential,
    cond: Condition,
    q: u128,
    c: f64,
    eps: f64,
    horizon: usize,
) -> Result<Option<Witness>> {
    if horizon == 0 {
        return Err(CmsError::domain("horizon must be at least 1"));
    }
    let g = WalkGraph::build(system, Some(phi), q, system.horizon_len(horizon + 1, q), Expansion::Chain)?;
    let any = |_: &crate::walk::Node| true;
    let low = |n: &crate::walk::Node| n.low;
    let high = |n: &crate::walk::Node| !n.low;
    type Filter<'a> = &'a dyn Fn(&crate::walk::Node) -> bool;
    let (start, interior, end): (Filter, Filter, Filter) = match cond {
        Condition::A => (&any, &any, &low),
        Condition::B => (&low, &any, &any),
        Condition::C => (&high, &high, &any),
    };
    for (i, best) in g.best_walks(horizon, start, interior, end).into_iter().enumerate() {
        let n = i + 1;
        if let Some((sum, path)) = best {
            let bound = c - n as f64 * eps;
            if sum > bound {
                let word = Word(path.into_iter().map(|k| g.nodes[k].state).collect());
                return Ok(Some(Witness {
                    word,
                    steps: n,
                    sum,
                    bound,
                }));
            }
        }
    }
    Ok(None)
}

/// Horizon-stamped diagnostics for one system and potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub horizon: usize,
    pub q: u128,
    pub tol: f64,
    pub pressure: PressureEstimate,
    pub chi_per: f64,
    pub ucs: Verdict,
    pub spr: SprCheck,
    pub crc: CrcProfile,
    pub crc_verdict: Verdict,
}

/// Runs pressure, `chi_per`, SPR and CRC diagnostics with partition sums
/// through `a`.
pub fn diagnose(
    system: &TransitionSystem,
    phi: &Potential,
    sums: &PartitionSums,
    q: u128,
    tol: f64,
) -> Result<DiagnosticsReport> {
    let pressure = pressure_estimate(sums)?;
    let chi = chi_per(system, phi, sums.horizon)?;
    let ucs = if chi < pressure.value - tol {
        Verdict::Holds
    } else if chi > pressure.value + tol || (chi - pressure.value).abs() <= tol {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    let spr = spr_check(&sums.log_zstar, pressure.value, tol)?;
    let crc = crc_profile(system, phi, q, sums.horizon)?;
    let crc_verdict = crc.verdict(pressure.value, tol);
    Ok(DiagnosticsReport {
        horizon: sums.horizon,
        q,
        tol,
        pressure,
        chi_per: chi,
        ucs,
        spr,
        crc,
        crc_verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{LoopRule, Placement};
    use crate::shift::LoopCounts;
    use std::f64::consts::LN_2;

    fn sec52() -> (TransitionSystem, Potential) {
        let loops = LoopCounts::ones();
        let t = TransitionSystem::bouquet(loops.clone()).unwrap();
        let phi = Potential::bouquet(LoopRule {
            law: ReturnLaw::PowerLaw {
                log_c: 0.0,
                rate: LN_2,
                beta: 0.0,
            },
            placement: Placement::Entry,
            graph_loops: loops,
        });
        (t, phi)
    }

    #[test]
    fn renewal_halves() {
        let ls: Vec<f64> = (1..=3).map(|n| -(n as f64) * LN_2).collect();
        let z = partition_sums_renewal(&ls, 3).unwrap();
        for v in &z.log_z {
            assert!((v + LN_2).abs() < 1e-15);
        }
        assert!(z.renewal_defect() < 1e-15);
    }

    #[test]
    fn renewal_rejects_negative() {
        assert!(log_weights_from_linear(&[0.5, -0.1]).is_err());
        assert!(partition_sums_renewal(&[f64::NAN], 1).is_err());
    }

    #[test]
    fn full_shift_bruteforce() {
        let t = TransitionSystem::full_shift(2);
        let z = partition_sums_bruteforce(&t, &Potential::zero(), StateId::Plain(1), 4).unwrap();
        assert!((z.log_z[3] - 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn sec52_returns_and_chi() {
        let (t, phi) = sec52();
        let ls = root_return_weights(&t, &phi, 10).unwrap();
        for (i, v) in ls.iter().enumerate() {
            assert!((v + (i + 1) as f64 * LN_2).abs() < 1e-12);
        }
        assert!((chi_per(&t, &phi, 20).unwrap() + LN_2).abs() < 1e-15);
    }

    #[test]
    fn pressure_of_sequences() {
        let half = vec![-LN_2; 20];
        assert!(pressure_from_logs(&half).unwrap().value.abs() < 1e-12);
        let dbl: Vec<f64> = (1..=20).map(|n| (n - 1) as f64 * LN_2).collect();
        assert!((pressure_from_logs(&dbl).unwrap().value - LN_2).abs() < 1e-12);
        let neg: Vec<f64> = (1..=20).map(|n| -(n as f64)).collect();
        assert!((pressure_from_logs(&neg).unwrap().value + 1.0).abs() < 1e-12);
        assert!(pressure_from_logs(&[f64::NEG_INFINITY; 6]).unwrap().vanishing);
    }

    #[test]
    fn spr_verdicts() {
        let geo: Vec<f64> = (1..=40).map(|n| -(n as f64) * LN_2).collect();
        assert_eq!(spr_check(&geo, 0.0, TOL_FIT).unwrap().verdict, Verdict::Holds);
        let poly: Vec<f64> = (1..=200).map(|n| -3.0 * (n as f64).ln()).collect();
        let c = spr_check(&poly, 0.0, TOL_FIT).unwrap();
        assert_eq!(c.verdict, Verdict::Fails);
        let four: Vec<f64> = (1..=40).map(|n| -(n as f64) * 4f64.ln()).collect();
        assert_eq!(spr_check(&four, -LN_2, TOL_FIT).unwrap().verdict, Verdict::Holds);
    }

    #[test]
    fn induced_geometric() {
        let law = ReturnLaw::PowerLaw {
            log_c: 0.0,
            rate: LN_2,
            beta: 0.0,
        };
        let d = ReturnData::Law(law.clone());
        match induced_pressure(&d, 0.0).unwrap() {
            SeriesValue::Finite { value, .. } => assert!(value.abs() < 1e-15),
            v => panic!("{v:?}"),
        }
        let th = induced_threshold(&d).unwrap();
        assert!((th.p_star - LN_2).abs() < 1e-15);
        assert_eq!(th.delta, SeriesValue::Infinite);
        assert!(renewal_pressure(&law).unwrap().abs() < 1e-14);
    }

    #[test]
    fn classification_cases() {
        let case = |beta: f64, scale: f64| {
            let z = numeric::zeta(beta, 1e-14).unwrap().value;
            let law = ReturnLaw::PowerLaw {
                log_c: (scale / z).ln(),
                rate: 0.0,
                beta,
            };
            recurrence_classify(&ReturnData::Law(law), None, 1e-9).unwrap().class
        };
        assert_eq!(case(3.0, 1.0), RecurrenceClass::PositiveRecurrent);
        assert_eq!(case(1.5, 1.0), RecurrenceClass::NullRecurrent);
        assert_eq!(case(3.0, 0.5), RecurrenceClass::Transient);
    }

    #[test]
    fn crc_examples() {
        let (t, phi) = sec52();
        let p = crc_profile(&t, &phi, 1, 20).unwrap();
        for (i, v) in p.s.iter().enumerate() {
            assert!((v + (i + 1) as f64 * LN_2).abs() < 1e-12);
        }
        assert!((p.lambda - LN_2).abs() < 1e-12);
        assert_eq!(p.verdict(0.0, TOL_FIT), Verdict::Holds);
        let one = TransitionSystem::self_loop();
        let p = crc_profile(&one, &Potential::zero(), 1, 20).unwrap();
        assert_eq!(p.verdict(0.0, TOL_FIT), Verdict::Fails);
    }

    #[test]
    fn witnesses() {
        let (t, phi) = sec52();
        let w = condition_witness_search(&t, &phi, Condition::A, 1, 1.0, 0.1, 20)
            .unwrap()
            .unwrap();
        assert_eq!(w.steps, 11);
        assert_eq!(w.sum, 0.0);
        assert_eq!(w.word.last(), Some(StateId::Root));
        let full = TransitionSystem::full_shift(2);
        let none = condition_witness_search(&full, &Potential::zero(), Condition::C, 2, 1.0, 0.1, 20).unwrap();
        assert!(none.is_none());
    }
}
