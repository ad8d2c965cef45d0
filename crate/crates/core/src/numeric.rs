//! Log-space summation, tail fits, the Riemann zeta function and a
//! bracketing root finder.

use nalgebra::{DMatrix, DVector};

use crate::error::{CmsError, Result};

/// `log(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `log sum_i e^{x_i}` with a compensated inner sum. Empty input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    let mut s = CompensatedSum::new();
    for &x in xs {
        s.add((x - m).exp());
    }
    m + s.total().ln()
}

/// Regressors of a tail fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `y ~ a + slope * n`.
    Linear,
    /// `y ~ a + slope * n + b * log n`. The `log n` column absorbs
    /// polynomial prefactors such as `n^{-beta}`.
    LinearLog,
}

/// Least-squares tail fit of `y_n` against `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub log_coef: f64,
    /// Standard error of the slope (zero for an exact fit).
    pub stderr: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
    /// First and last `n` used.
    pub window: (usize, usize),
}

fn least_squares(rows: &[Vec<f64>], ys: &[f64]) -> Option<(DVector<f64>, Vec<f64>, DMatrix<f64>)> {
    let p = rows[0].len();
    let a = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(ys);
    let qr = a.clone().qr();
    let r = qr.r();
    let beta = r.solve_upper_triangular(&(qr.q().transpose() * &y))?;
    let r_inv = r.try_inverse()?;
    // (A^T A)^{-1} = R^{-1} R^{-T}
    let cov = &r_inv * r_inv.transpose();
    let fitted = &a * &beta;
    let resid: Vec<f64> = (0..ys.len()).map(|i| ys[i] - fitted[i]).collect();
    Some((beta, resid, cov))
}

/// Fits the tail of `(n, y_n)` pairs: the last half of the finite points,
/// at least `min_points` of them.
pub fn fit_rate(points: &[(usize, f64)], min_points: usize, model: FitModel) -> Result<RateFit> {
    let finite: Vec<(usize, f64)> = points.iter().copied().filter(|(_, y)| y.is_finite()).collect();
    if finite.len() < min_points.max(3) {
        return Err(CmsError::domain(format!(
            "rate fit needs at least {} finite terms, got {}",
            min_points.max(3),
            finite.len()
        )));
    }
    let take = (finite.len() / 2).max(min_points.max(3)).min(finite.len());
    let tail = &finite[finite.len() - take..];
    let rows: Vec<Vec<f64>> = tail
        .iter()
        .map(|&(n, _)| match model {
            FitModel::Linear => vec![1.0, n as f64],
            FitModel::LinearLog => vec![1.0, n as f64, (n as f64).ln()],
        })
        .collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let (beta, resid, inv) =
        least_squares(&rows, &ys).ok_or_else(|| CmsError::domain("rate fit design matrix is singular"))?;
    let dof = tail.len().saturating_sub(rows[0].len()).max(1) as f64;
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let sigma2 = rss / dof;
    Ok(RateFit {
        slope: beta[1],
        intercept: beta[0],
        log_coef: if beta.len() > 2 { beta[2] } else { 0.0 },
        stderr: (sigma2 * inv[(1, 1)]).max(0.0).sqrt(),
        max_residual: resid.iter().fold(0.0, |m, r| m.max(r.abs())),
        window: (tail[0].0, tail[tail.len() - 1].0),
    })
}

/// Ordinary least squares `y ~ a + b x`; returns `(b, a, stderr(b))`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(CmsError::domain("linear fit needs at least two points"));
    }
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
    let (beta, resid, inv) =
        least_squares(&rows, ys).ok_or_else(|| CmsError::domain("linear fit design matrix is singular"))?;
    let dof = xs.len().saturating_sub(2).max(1) as f64;
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    Ok((beta[1], beta[0], (rss / dof * inv[(1, 1)]).max(0.0).sqrt()))
}

/// A value with an error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub value: f64,
    pub error: f64,
}

// B_2, B_4, ..., B_16.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

fn zeta_at(s: f64, n: usize) -> (f64, f64) {
    let mut head = CompensatedSum::new();
    for k in (1..n).rev() {
        head.add((k as f64).powf(-s));
    }
    let nf = n as f64;
    head.add(nf.powf(1.0 - s) / (s - 1.0));
    head.add(0.5 * nf.powf(-s));
    // Euler-Maclaurin corrections B_{2j}/(2j)! s(s+1)...(s+2j-2) N^{-s-2j+1}.
    let mut rising = s;
    let mut fact = 2.0;
    let mut last = 0.0;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let p = 2 * j + 2;
        let term = b / fact * rising * nf.powf(-s - p as f64 + 1.0);
        if j + 1 == BERNOULLI.len() {
            last = term.abs();
            break;
        }
        head.add(term);
        rising *= (s + p as f64 - 1.0) * (s + p as f64);
        fact *= ((p + 1) * (p + 2)) as f64;
    }
    (head.total(), last)
}

/// `zeta(s)` for real `s > 1`, with an error bound `<= tol`.
///
/// Partial sum up to `N - 1`, the integral tail `N^{1-s}/(s-1)`, and
/// Euler-Maclaurin corrections; the first omitted correction bounds the
/// error.
pub fn zeta(s: f64, tol: f64) -> Result<Bounded> {
    if s.is_nan() || s <= 1.0 {
        return Err(CmsError::Divergent(format!("zeta({s}) diverges for s <= 1")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(CmsError::domain("zeta tolerance must be positive"));
    }
    let mut n = 16usize;
    loop {
        let (v, err) = zeta_at(s, n);
        let err = err + 4.0 * f64::EPSILON * v;
        if err <= tol || n > 1 << 22 {
            return Ok(Bounded { value: v, error: err });
        }
        n *= 2;
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to width `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(CmsError::NoSolution(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Formats like C's `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    fmt_g(x, 12)
}

/// `%.{digits}g` formatting.
pub fn fmt_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= p as i32 {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
