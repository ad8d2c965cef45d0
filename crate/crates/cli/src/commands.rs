//! The subcommands, each producing a [`Report`].

use cms_core::families::{htop_solve, PRESETS};
use cms_core::infinity::{count_b, delta_profile, hinf_profile, CountMethod, DeltaProfile, InfinityProfile};
use cms_core::thermo::{
    crc_profile, diagnose, induced_threshold, partition_sums, partition_sums_bruteforce, pressure_estimate,
    recurrence_classify, renewal_pressure, spr_check, CrcProfile, PartitionSums, ReturnData, SeriesValue,
};
use cms_core::CmsError;

use crate::config::Settings;
use crate::error::CliError;
use crate::source::{Graph, Source};
use crate::table::{Cell, Report, Table};

/// Agreement threshold between enumeration and DP.
const ORACLE_TOL: f64 = 1e-12;

pub fn presets() -> Report {
    let mut r = Report::new("presets");
    let mut t = Table::new("presets", &["name", "description"]);
    for (name, about) in PRESETS {
        t.push(vec![Cell::text(name), Cell::text(about)]);
    }
    r.set("count", Cell::int(PRESETS.len()));
    r.tables.push(t);
    r
}

fn header(r: &mut Report, src: &Source, s: &Settings) {
    r.set("source", Cell::text(&src.label));
    r.set("horizon", Cell::int(s.horizon));
    r.set("units", Cell::text(if s.log2 { "log2" } else { "ln" }));
}

fn sums_table(sums: &PartitionSums) -> Table {
    let mut t = Table::new("partition_sums", &["n", "logZ", "logZstar"]);
    for n in 1..=sums.horizon {
        t.push(vec![Cell::int(n), Cell::Log(sums.log_z[n - 1]), Cell::Log(sums.log_zstar[n - 1])]);
    }
    t
}

fn series(v: &SeriesValue) -> Cell {
    match v {
        SeriesValue::Finite { value, .. } | SeriesValue::Estimated { value, .. } => Cell::Log(*value),
        SeriesValue::Infinite => Cell::Log(f64::INFINITY),
        SeriesValue::Inconclusive { .. } => Cell::text("inconclusive"),
    }
}

/// Renders closed-form failures as text instead of aborting the report.
fn or_note(r: std::result::Result<Cell, CmsError>) -> Cell {
    r.unwrap_or_else(|e| Cell::text(format!("n/a: {e}")))
}

fn closed_form(r: &mut Report, src: &Source, s: &Settings) {
    if let Some(loops) = &src.loops {
        r.set("h_top", or_note(htop_solve(loops, 1e-12).map(Cell::Log)));
    }
    if let Some(law) = &src.law {
        let data = ReturnData::Law(law.clone());
        r.set("pressure_closed_form", or_note(renewal_pressure(law).map(Cell::Log)));
        match induced_threshold(&data) {
            Ok(th) => {
                r.set("p_star", Cell::Log(th.p_star));
                r.set("induced_delta", series(&th.delta));
            }
            Err(e) => r.set("p_star", Cell::text(format!("n/a: {e}"))),
        }
        r.set(
            "class",
            or_note(recurrence_classify(&data, None, s.tol).map(|c| Cell::text(c.class.as_str()))),
        );
    }
}

pub fn pressure(src: &Source, s: &Settings) -> Result<Report, CliError> {
    let sums = src.sums(s.horizon)?;
    let p = pressure_estimate(&sums)?;
    let mut r = Report::new("pressure");
    header(&mut r, src, s);
    r.set("base", Cell::text(sums.base.to_string()));
    r.set("pressure", Cell::Log(p.value));
    r.set("pressure_stderr", Cell::Log(p.stderr));
    r.set("fit_window", Cell::text(format!("{}-{}", p.window.0, p.window.1)));
    r.set("renewal_defect", Cell::Num(sums.renewal_defect()));
    r.tables.push(sums_table(&sums));
    Ok(r)
}

pub fn spr(src: &Source, s: &Settings) -> Result<Report, CliError> {
    let sums = src.sums(s.horizon)?;
    let p = pressure_estimate(&sums)?;
    let check = spr_check(&sums.log_zstar, p.value, s.tol)?;
    let mut r = Report::new("spr");
    header(&mut r, src, s);
    r.set("tol", Cell::Num(s.tol));
    r.set("pressure", Cell::Log(p.value));
    r.set("spr", Cell::text(check.verdict.as_str()));
    r.set("spr_slope", Cell::Log(check.slope));
    r.set("spr_stderr", Cell::Log(check.stderr));
    closed_form(&mut r, src, s);
    r.tables.push(sums_table(&sums));
    Ok(r)
}

fn profile_tables(h: &InfinityProfile, d: &DeltaProfile) -> (Table, Table) {
    let mut cells = Table::new("profile", &["n", "M", "q", "log_z", "z_phi"]);
    for c in &d.profile.cells {
        let z = c.z_phi.map(Cell::Log).unwrap_or(Cell::Log(f64::NEG_INFINITY));
        cells.push(vec![Cell::int(c.n), Cell::int(c.m), Cell::int(c.q), Cell::Log(c.log_z), z]);
    }
    let mut fits = Table::new("profile_fits", &["M", "q", "h_slope", "h_stderr", "delta_slope", "delta_stderr"]);
    for (a, b) in h.fits.iter().zip(&d.profile.fits) {
        fits.push(vec![
            Cell::int(a.m),
            Cell::int(a.q),
            Cell::Log(a.slope),
            Cell::Log(a.stderr),
            Cell::Log(b.slope),
            Cell::Log(b.stderr),
        ]);
    }
    (cells, fits)
}

fn profiles(g: &Graph, s: &Settings, pressure: f64) -> Result<(InfinityProfile, DeltaProfile), CliError> {
    let h = hinf_profile(&g.system, &s.q_list, &s.m_list, s.horizon)?;
    let d = delta_profile(&g.system, &g.potential, &s.q_list, &s.m_list, s.horizon, pressure)?;
    Ok((h, d))
}

fn profile_summary(r: &mut Report, h: &InfinityProfile, d: &DeltaProfile) {
    r.set("h_inf", Cell::Log(h.estimate));
    r.set("h_inf_stderr", Cell::Log(h.stderr));
    r.set("z_monotone_in_M", Cell::Bool(h.monotone_in_m));
    r.set("h_slopes_monotone_in_M", Cell::Bool(h.slopes_monotone_in_m));
    r.set("delta", Cell::Log(d.profile.estimate));
    r.set("delta_band", Cell::Log(d.band));
    r.set("delta_plus_h_inf", Cell::Log(d.profile.estimate + h.estimate));
    r.set("ci", Cell::text(d.verdict.as_str()));
}

pub fn hinf(src: &Source, s: &Settings) -> Result<Report, CliError> {
    let g = src.graph("hinf")?;
    let sums = src.sums(s.horizon)?;
    let p = pressure_estimate(&sums)?.value;
    let (h, d) = profiles(g, s, p)?;
    let mut r = Report::new("hinf");
    header(&mut r, src, s);
    r.set("pressure", Cell::Log(p));
    profile_summary(&mut r, &h, &d);
    let (cells, fits) = profile_tables(&h, &d);
    r.tables.push(cells);
    r.tables.push(fits);
    Ok(r)
}

fn crc_table(profiles: &[CrcProfile], pressure: f64, tol: f64) -> Table {
    let mut t = Table::new("crc", &["q", "lambda", "C_q", "margin", "verdict"]);
    for c in profiles {
        t.push(vec![
            Cell::int(c.q),
            Cell::Log(c.lambda),
            Cell::Log(c.c_q),
            Cell::Log(c.margin(pressure)),
            Cell::text(c.verdict(pressure, tol).as_str()),
        ]);
    }
    t
}

pub fn report(src: &Source, s: &Settings) -> Result<Report, CliError> {
    let sums = src.sums(s.horizon)?;
    let mut r = Report::new("report");
    header(&mut r, src, s);
    r.set("tol", Cell::Num(s.tol));
    match &src.graph {
        Some(g) => {
            let q = s.q_list[0];
            let diag = diagnose(&g.system, &g.potential, &sums, q, s.tol)?;
            let p = diag.pressure.value;
            r.set("pressure", Cell::Log(p));
            r.set("pressure_stderr", Cell::Log(diag.pressure.stderr));
            r.set("chi_per", Cell::Log(diag.chi_per));
            r.set("ucs", Cell::text(diag.ucs.as_str()));
            r.set("spr", Cell::text(diag.spr.verdict.as_str()));
            r.set("spr_slope", Cell::Log(diag.spr.slope));
            r.set("crc", Cell::text(diag.crc_verdict.as_str()));
            r.set("crc_q", Cell::int(q));
            r.set("crc_lambda", Cell::Log(diag.crc.lambda));
            r.set("crc_margin", Cell::Log(diag.crc.margin(p)));
            let (h, d) = profiles(g, s, p)?;
            profile_summary(&mut r, &h, &d);
            closed_form(&mut r, src, s);
            let mut crcs = vec![diag.crc.clone()];
            for &q in &s.q_list[1..] {
                crcs.push(crc_profile(&g.system, &g.potential, q, s.horizon)?);
            }
            r.tables.push(sums_table(&sums));
            let (cells, fits) = profile_tables(&h, &d);
            r.tables.push(cells);
            r.tables.push(fits);
            r.tables.push(crc_table(&crcs, p, s.tol));
        }
        None => {
            let p = pressure_estimate(&sums)?;
            let check = spr_check(&sums.log_zstar, p.value, s.tol)?;
            r.set("pressure", Cell::Log(p.value));
            r.set("pressure_stderr", Cell::Log(p.stderr));
            r.set("spr", Cell::text(check.verdict.as_str()));
            r.set("spr_slope", Cell::Log(check.slope));
            closed_form(&mut r, src, s);
            r.tables.push(sums_table(&sums));
        }
    }
    Ok(r)
}

/// Relative error of `e^a` against `e^b`.
fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if a.is_finite() && b.is_finite() {
        (a - b).exp_m1().abs()
    } else {
        f64::INFINITY
    }
}

fn plain_rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if a.is_finite() && b.is_finite() {
        (a - b).abs() / a.abs().max(1.0)
    } else {
        f64::INFINITY
    }
}

/// Enumeration against DP for `Z_n`, `Z*_n` and `z_n(M, q)`. The second
/// value is set when some row disagrees.
pub fn oracle(src: &Source, s: &Settings) -> Result<(Report, Option<String>), CliError> {
    let g = src.graph("oracle")?;
    if !g.system.is_bounded() {
        return Err(CliError::Refusal(
            "enumeration needs finitely many loops: pass --truncate <L>".into(),
        ));
    }
    let base = g.system.state_at(1).expect("non-empty shift");
    let brute = partition_sums_bruteforce(&g.system, &g.potential, base, s.horizon)?;
    let dp = partition_sums(&g.system, &g.potential, s.horizon)?;
    let mut t = Table::new("oracle", &["quantity", "n", "M", "q", "brute_force", "dp", "rel_err", "pass"]);
    let mut worst: f64 = 0.0;
    let mut failures = 0usize;
    let mut row = |t: &mut Table, what: &str, n: usize, mq: Option<(u64, u128)>, a: Cell, b: Cell, err: f64| {
        let pass = err <= ORACLE_TOL;
        worst = worst.max(err);
        failures += usize::from(!pass);
        let (m, q) = match mq {
            Some((m, q)) => (Cell::int(m), Cell::int(q)),
            None => (Cell::text(""), Cell::text("")),
        };
        t.push(vec![Cell::text(what), Cell::int(n), m, q, a, b, Cell::Num(err), Cell::Bool(pass)]);
    };
    for n in 1..=s.horizon {
        let (a, b) = (brute.log_z[n - 1], dp.log_z[n - 1]);
        row(&mut t, "logZ", n, None, Cell::Log(a), Cell::Log(b), rel_err(a, b));
        let (a, b) = (brute.log_zstar[n - 1], dp.log_zstar[n - 1]);
        row(&mut t, "logZstar", n, None, Cell::Log(a), Cell::Log(b), rel_err(a, b));
    }
    for &m in &s.m_list {
        for &q in &s.q_list {
            for n in 1..=s.horizon {
                let a = count_b(&g.system, Some(&g.potential), n, m, q, CountMethod::BruteForce)?;
                let b = count_b(&g.system, Some(&g.potential), n, m, q, CountMethod::Dp)?;
                let exact = if a.count == b.count { 0.0 } else { f64::INFINITY };
                row(&mut t, "z", n, Some((m, q)), Cell::int(&a.count), Cell::int(&b.count), exact);
                let sn = |z: Option<f64>| z.map_or(f64::NEG_INFINITY, |z| z * n as f64);
                let (x, y) = (sn(a.z_phi), sn(b.z_phi));
                row(&mut t, "n*z_phi", n, Some((m, q)), Cell::Log(x), Cell::Log(y), plain_rel_err(x, y));
            }
        }
    }
    let mut r = Report::new("oracle");
    header(&mut r, src, s);
    r.set("rows", Cell::int(t.rows.len()));
    r.set("failures", Cell::int(failures));
    r.set("max_rel_err", Cell::Num(worst));
    r.set("threshold", Cell::Num(ORACLE_TOL));
    r.tables.push(t);
    let breach = (failures > 0).then(|| format!("{failures} oracle rows disagree (max relative error {worst:e})"));
    Ok((r, breach))
}
