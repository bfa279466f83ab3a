//! Named reproduction suites: preset sweeps plus trend checks on the result.
//!
//! Checks marked `required` decide the suite's pass/fail status; the others
//! are reported for information only.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::{Axes, RunConfig, Scalar, SearchSection};
use super::sweep::{run_sweep, to_csv, SweepRow};
use crate::adversary::{self, sign_crossing};
use crate::exact::{parse_decimal, to_f64, Q};
use crate::lp::LpStatus;
use crate::model::{CostModel, Instance, Mechanism, QualityProfile, RevenueModel};
use crate::optimizer::{solve_allocation, SearchConfig};
use crate::{Error, Result, EPSILON};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Fig2a,
    Fig2b,
    FootnoteLying,
    Fig3a,
    Fig3b,
    Ntable,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Fig2a, Suite::Fig2b, Suite::FootnoteLying, Suite::Fig3a, Suite::Fig3b, Suite::Ntable];
    pub const NAMES: [&'static str; 6] = ["fig2a", "fig2b", "footnote_lying", "fig3a", "fig3b", "ntable"];

    pub fn name(self) -> &'static str {
        Self::NAMES[Self::ALL.iter().position(|&s| s == self).expect("listed")]
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::NAMES
            .iter()
            .position(|&n| n == s)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`; expected one of {}", Self::NAMES.join(", "))))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub required: bool,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let kind = if self.required { "check" } else { "info" };
        write!(f, "{status} [{kind}] {}: {}", self.name, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutput {
    pub suite: Suite,
    pub csv: String,
    pub checks: Vec<Check>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.required)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&c.to_string());
            s.push('\n');
        }
        s.push_str(&format!("{}: {}\n", self.suite, if self.passed() { "PASS" } else { "FAIL" }));
        s
    }

    /// Writes `<suite>.csv` and `<suite>.checks.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.csv", self.suite)), &self.csv)?;
        std::fs::write(dir.join(format!("{}.checks.txt", self.suite)), self.summary())?;
        Ok(())
    }
}

fn check(name: impl Into<String>, required: bool, outcome: std::result::Result<String, String>) -> Check {
    let (passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Check { name: name.into(), required, passed, detail }
}

fn q(s: &str) -> Q {
    parse_decimal(s).expect("preset literal")
}

fn tenths() -> Vec<Scalar> {
    (1..=9).map(|k| Scalar::Text(format!("0.{k}"))).collect()
}

fn search(auto_escalate: bool) -> SearchSection {
    SearchSection { auto_escalate, ..SearchSection::default() }
}

fn base_config(m: Option<usize>, x_high: Option<f64>, x_low: Option<f64>, axes: Axes) -> RunConfig {
    RunConfig {
        m,
        p: None,
        x_high: x_high.map(Scalar::from),
        x_low: x_low.map(Scalar::from),
        cost: CostModel::Exp2Minus1,
        revenue: RevenueModel::QuadraticQualityWeighted,
        search: search(true),
        axes: Some(axes),
    }
}

fn within(prev: f64, next: f64) -> bool {
    next >= prev - EPSILON * prev.abs().max(1.0)
}

/// `Ok` when `values` never drops by more than the tolerance between steps.
fn non_decreasing(label: &str, values: &[(f64, Option<f64>)]) -> std::result::Result<String, String> {
    let mut prev: Option<(f64, f64)> = None;
    for &(x, v) in values {
        let Some(v) = v else { return Err(format!("no feasible mechanism at {label}={x}")) };
        if let Some((px, pv)) = prev {
            if !within(pv, v) {
                return Err(format!("drops from {pv} at {label}={px} to {v} at {label}={x}"));
            }
        }
        prev = Some((x, v));
    }
    Ok(format!("{} points", values.len()))
}

fn non_increasing(label: &str, values: &[(f64, Option<f64>)]) -> std::result::Result<String, String> {
    let negated: Vec<_> = values.iter().map(|&(x, v)| (x, v.map(|u| -u))).collect();
    non_decreasing(label, &negated).map_err(|e| e.replace("drops from -", "rises from ").replace("to -", "to "))
}

fn rows_where<'a>(rows: &'a [SweepRow], pred: impl Fn(&SweepRow) -> bool + 'a) -> impl Iterator<Item = &'a SweepRow> {
    rows.iter().filter(move |r| pred(r))
}

fn series(rows: &[SweepRow], pred: impl Fn(&SweepRow) -> bool, axis: impl Fn(&SweepRow) -> &Q) -> Vec<(f64, Option<f64>)> {
    rows_where(rows, pred).map(|r| (to_f64(axis(r)), r.utility())).collect()
}

fn verification_check(config: &RunConfig, rows: &[SweepRow]) -> Result<Check> {
    let options = config.search.to_search_config()?.engine_options();
    let failures: Vec<String> = rows
        .par_iter()
        .filter_map(|row| {
            let report = row.report()?;
            let instance = config.instance_at(&row.point).ok()?;
            let verdict = adversary::verify(&instance.profile, &instance.cost, &report.mechanism, &options).ok()?;
            (!verdict.passes()).then(|| {
                let (m, p, xh, xl) = super::config::point_f64(&row.point);
                format!("m={m} p={p} x_high={xh} x_low={xl} worst gain {}", verdict.worst_gain)
            })
        })
        .collect();
    let solved = rows.iter().filter(|r| r.report().is_some()).count();
    Ok(check(
        "every solved mechanism passes the deviation search",
        true,
        if failures.is_empty() { Ok(format!("{solved} mechanisms verified")) } else { Err(failures.join("; ")) },
    ))
}

fn feasibility_check(rows: &[SweepRow]) -> Check {
    let missing: Vec<String> = rows
        .iter()
        .filter(|r| r.report().is_none())
        .map(|r| {
            let (m, p, xh, xl) = super::config::point_f64(&r.point);
            format!("m={m} p={p} x_high={xh} x_low={xl}")
        })
        .collect();
    check(
        "every grid point has a feasible mechanism",
        true,
        if missing.is_empty() { Ok(format!("{} points", rows.len())) } else { Err(missing.join("; ")) },
    )
}

fn boundary_check(rows: &[SweepRow]) -> Check {
    let hits = rows.iter().filter(|r| r.report().is_some_and(|rep| !rep.boundary_flags().is_empty())).count();
    check(
        "optima stay inside the allocation search box",
        false,
        if hits == 0 { Ok("no boundary hits".into()) } else { Err(format!("{hits} optima touch n_max after escalation")) },
    )
}

fn fig2a() -> Result<SuiteOutput> {
    let x_highs = [5.0, 13.0, 21.0];
    let axes = Axes { p: Some(tenths()), x_high: Some(x_highs.iter().map(|&v| v.into()).collect()), ..Axes::default() };
    let config = base_config(Some(2), None, Some(1.0), axes);
    let rows = run_sweep(&config)?;
    let mut checks = vec![feasibility_check(&rows)];
    for xh in x_highs {
        let s = series(&rows, |r| to_f64(&r.point.x_high) == xh, |r| &r.point.p);
        checks.push(check(format!("utility non-decreasing in p at x_high={xh}"), true, non_decreasing("p", &s)));
    }
    let increments: Vec<(f64, Option<f64>)> = x_highs
        .iter()
        .map(|&xh| {
            let at = |p: &str| {
                rows.iter().find(|r| to_f64(&r.point.x_high) == xh && r.point.p == q(p)).and_then(SweepRow::utility)
            };
            (xh, at("0.9").zip(at("0.1")).map(|(a, b)| a - b))
        })
        .collect();
    checks.push(check(
        "utility(0.9) - utility(0.1) non-decreasing in x_high",
        true,
        non_decreasing("x_high", &increments).map(|d| format!("{d}: {increments:?}")),
    ));
    for p in tenths() {
        let pq = p.to_q()?;
        let s = series(&rows, |r| r.point.p == pq, |r| &r.point.x_high);
        checks.push(check(
            format!("utility non-increasing in x_high at p={}", to_f64(&pq)),
            true,
            non_increasing("x_high", &s),
        ));
    }
    checks.push(boundary_check(&rows));
    checks.push(verification_check(&config, &rows)?);
    Ok(SuiteOutput { suite: Suite::Fig2a, csv: to_csv(&rows)?, checks })
}

fn fig2b() -> Result<SuiteOutput> {
    let x_lows = [1.0, 6.0, 11.0];
    let axes = Axes { p: Some(tenths()), x_low: Some(x_lows.iter().map(|&v| v.into()).collect()), ..Axes::default() };
    let config = base_config(Some(2), Some(21.0), None, axes);
    let rows = run_sweep(&config)?;
    let mut checks = vec![feasibility_check(&rows)];
    for p in tenths() {
        let pq = p.to_q()?;
        let s = series(&rows, |r| r.point.p == pq, |r| &r.point.x_low);
        checks.push(check(
            format!("utility non-decreasing in x_low at p={}", to_f64(&pq)),
            true,
            non_decreasing("x_low", &s),
        ));
    }
    for xl in x_lows {
        let s = series(&rows, |r| to_f64(&r.point.x_low) == xl, |r| &r.point.p);
        checks.push(check(format!("utility non-decreasing in p at x_low={xl}"), false, non_decreasing("p", &s)));
    }
    checks.push(boundary_check(&rows));
    checks.push(verification_check(&config, &rows)?);
    Ok(SuiteOutput { suite: Suite::Fig2b, csv: to_csv(&rows)?, checks })
}

/// Fixed allocation of the lying example (`x_high=9`, `x_low=1`).
pub const FOOTNOTE_N: [u64; 3] = [1, 4, 3];

/// LP rewards at one `p` of the lying example and what lying gains under them.
#[derive(Clone, Debug, PartialEq)]
pub struct FootnoteSolution {
    pub t: Vec<Q>,
    pub objective: Q,
    pub gain_high: Q,
}

/// High-quality misreport gain at each `p` for the fixed allocation, with
/// rewards from the LP without the high-quality incentive row. `None` where
/// that LP is infeasible.
pub fn footnote_curve(ps: &[Q]) -> Result<Vec<(Q, Option<FootnoteSolution>)>> {
    let base = QualityProfile::new(2, q("0.5"), q("9"), q("1"))?;
    let cost = CostModel::Exp2Minus1;
    let search = SearchConfig { include_ic_high: false, ..SearchConfig::default() };
    ps.par_iter()
        .map(|p| {
            let profile = base.with_p(p.clone())?;
            let instance = Instance::new(profile.clone(), cost.clone(), RevenueModel::QuadraticQualityWeighted)?;
            let (_, out) = solve_allocation(&instance, &FOOTNOTE_N, &search)?;
            if out.status != LpStatus::Optimal {
                return Ok((p.clone(), None));
            }
            let t = out.t_star.expect("optimal");
            let mech = Mechanism::new(FOOTNOTE_N.to_vec(), t.clone())?;
            let curve =
                adversary::regret_curve(&profile, &cost, std::slice::from_ref(p), search.low_deviation_cost, |_| Ok(mech.clone()))?;
            let solution = FootnoteSolution { t, objective: out.objective.expect("optimal"), gain_high: curve[0].gain.clone() };
            Ok((p.clone(), Some(solution)))
        })
        .collect()
}

fn footnote_lying() -> Result<SuiteOutput> {
    let ps: Vec<Q> = (1..=19).map(|k| Q::new(k.into(), 20.into())).collect();
    let curve = footnote_curve(&ps)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["p", "t_1", "t_2", "t_3", "objective", "gain_high"]).map_err(std::io::Error::from)?;
    for (p, sol) in &curve {
        let mut rec = vec![to_f64(p).to_string()];
        match sol {
            Some(sol) => {
                rec.extend(sol.t.iter().map(|v| to_f64(v).to_string()));
                rec.push(to_f64(&sol.objective).to_string());
                rec.push(to_f64(&sol.gain_high).to_string());
            }
            None => rec.extend(std::iter::repeat(String::new()).take(5)),
        }
        w.write_record(&rec).map_err(std::io::Error::from)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?).expect("utf-8");

    let gain_at = |p: &str| curve.iter().find(|(pp, _)| *pp == q(p)).and_then(|(_, s)| s.as_ref().map(|s| to_f64(&s.gain_high)));
    let mut checks = Vec::new();
    checks.push(check(
        "lying pays at p=0.1",
        true,
        match gain_at("0.1") {
            Some(g) if g > 0.0 => Ok(format!("gain {g}")),
            other => Err(format!("gain {other:?}")),
        },
    ));
    checks.push(check(
        "lying does not pay at p=0.9",
        true,
        match gain_at("0.9") {
            Some(g) if g < 0.0 => Ok(format!("gain {g}")),
            other => Err(format!("gain {other:?}")),
        },
    ));
    let points: Vec<adversary::RegretPoint> = curve
        .iter()
        .filter_map(|(p, s)| s.as_ref().map(|s| adversary::RegretPoint { p: p.clone(), gain: s.gain_high.clone() }))
        .collect();
    let crossing = sign_crossing(&points);
    checks.push(check(
        "sign crossing within p in [0.25, 0.55]",
        true,
        match crossing {
            Some(c) if (0.25..=0.55).contains(&c) => Ok(format!("crossing at p={c:.4}")),
            Some(c) => Err(format!("crossing at p={c:.4}")),
            None => Err("no sign change".into()),
        },
    ));
    let changes = points.windows(2).filter(|w| (w[0].gain > Q::from_integer(0.into())) != (w[1].gain > Q::from_integer(0.into()))).count();
    checks.push(check(
        "gain changes sign exactly once",
        false,
        if changes == 1 { Ok("single crossing".into()) } else { Err(format!("{changes} sign changes")) },
    ));
    Ok(SuiteOutput { suite: Suite::FootnoteLying, csv, checks })
}

fn fig3(suite: Suite, x_high: f64, x_low: f64, required: bool) -> Result<SuiteOutput> {
    let axes = Axes { m: Some(vec![2, 3]), p: Some(tenths()), ..Axes::default() };
    let config = base_config(None, Some(x_high), Some(x_low), axes);
    let rows = run_sweep(&config)?;
    let mut checks = vec![feasibility_check(&rows)];
    let at = |m: usize, p: &str| rows.iter().find(|r| r.point.m == m && r.point.p == q(p)).and_then(SweepRow::utility);
    let diff = |p: &str| at(3, p).zip(at(2, p)).map(|(u3, u2)| (u3, u2, u3 - u2));
    checks.push(check(
        "two workers do at least as well as three at p=0.4",
        required,
        match diff("0.4") {
            Some((u3, u2, d)) if d <= EPSILON * u2.abs().max(1.0) => Ok(format!("U3={u3} U2={u2}")),
            Some((u3, u2, _)) => Err(format!("U3={u3} U2={u2}")),
            None => Err("missing solution".into()),
        },
    ));
    checks.push(check(
        "three workers do better than two at p=0.9",
        required,
        match diff("0.9") {
            Some((u3, u2, d)) if d > 0.0 => Ok(format!("U3={u3} U2={u2}")),
            Some((u3, u2, _)) => Err(format!("U3={u3} U2={u2}")),
            None => Err("missing solution".into()),
        },
    ));
    for m in [2, 3] {
        let s = series(&rows, |r| r.point.m == m, |r| &r.point.p);
        checks.push(check(format!("utility non-decreasing in p for m={m}"), false, non_decreasing("p", &s)));
    }
    checks.push(boundary_check(&rows));
    checks.push(verification_check(&config, &rows)?);
    Ok(SuiteOutput { suite, csv: to_csv(&rows)?, checks })
}

struct Regime {
    label: String,
    config: RunConfig,
}

fn ntable_regimes() -> Vec<Regime> {
    let mut out = Vec::new();
    let p_axis = || Axes { p: Some(tenths()), ..Axes::default() };
    for dx in [4.0, 18.0] {
        for xl in [1.0, 5.0, 9.0] {
            out.push(Regime {
                label: format!("fixed_delta_x={dx}"),
                config: base_config(Some(2), Some(xl + dx), Some(xl), p_axis()),
            });
        }
    }
    for p in ["0.2", "0.9"] {
        for xh in [10.0, 20.0] {
            let mut config = base_config(
                Some(2),
                Some(xh),
                None,
                Axes { x_low: Some([1.0, 3.0, 5.0, 7.0, 9.0].iter().map(|dx| (xh - dx).into()).collect()), ..Axes::default() },
            );
            config.p = Some(Scalar::Text(p.into()));
            out.push(Regime { label: format!("fixed_p={p}"), config });
        }
    }
    for (xh, dxs) in [(4.0, vec![1.0, 2.0, 3.0]), (18.0, vec![3.0, 9.0, 15.0])] {
        for dx in dxs {
            out.push(Regime {
                label: format!("fixed_x_high={xh}"),
                config: base_config(Some(2), Some(xh), Some(xh - dx), p_axis()),
            });
        }
    }
    out
}

fn ntable() -> Result<SuiteOutput> {
    let regimes = ntable_regimes();
    let mut csv = String::new();
    let mut checks = Vec::new();
    let mut all_rows = Vec::new();
    for (i, regime) in regimes.iter().enumerate() {
        let rows = run_sweep(&regime.config)?;
        let block = to_csv(&rows)?;
        for (k, line) in block.lines().enumerate() {
            if k == 0 {
                if i == 0 {
                    csv.push_str(&format!("regime,{line}\n"));
                }
            } else {
                csv.push_str(&format!("{},{line}\n", regime.label));
            }
        }
        if regime.config.axes.as_ref().is_some_and(|a| a.p.is_some()) {
            let n_series = |j: usize| -> Vec<(f64, Option<f64>)> {
                rows.iter().map(|r| (to_f64(&r.point.p), r.report().map(|rep| rep.mechanism.n()[j] as f64))).collect()
            };
            let (_, _, xh, xl) = super::config::point_f64(&rows[0].point);
            let tag = format!("{}: x_high={xh} x_low={xl}", regime.label);
            checks.push(check(format!("n_1 non-decreasing in p ({tag})"), false, non_decreasing("p", &n_series(0))));
            checks.push(check(format!("n_2 non-decreasing in p ({tag})"), false, non_decreasing("p", &n_series(1))));
            checks.push(check(format!("n_3 non-increasing in p ({tag})"), false, non_increasing("p", &n_series(2))));
        }
        all_rows.extend(rows);
    }
    checks.insert(0, feasibility_check(&all_rows));
    // Regimes share cost and revenue, so any of their configs rebuilds every point.
    checks.push(verification_check(&regimes[0].config, &all_rows)?);
    Ok(SuiteOutput { suite: Suite::Ntable, csv, checks })
}

pub fn run_suite(suite: Suite) -> Result<SuiteOutput> {
    match suite {
        Suite::Fig2a => fig2a(),
        Suite::Fig2b => fig2b(),
        Suite::FootnoteLying => footnote_lying(),
        Suite::Fig3a => fig3(Suite::Fig3a, 80.0, 20.0, true),
        Suite::Fig3b => fig3(Suite::Fig3b, 50.0, 10.0, false),
        Suite::Ntable => ntable(),
    }
}
