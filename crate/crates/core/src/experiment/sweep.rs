//! Parameter sweeps: one optimizer run per grid point, emitted as CSV.

use std::io::Write;

use rayon::prelude::*;

use super::config::{point_f64, Point, RunConfig};
use crate::exact::to_f64;
use crate::optimizer::{self, SolveReport};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum PointOutcome {
    Solved(SolveReport),
    NoFeasibleMechanism,
    /// The point is outside the model domain (e.g. `x_low >= x_high`).
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub point: Point,
    pub outcome: PointOutcome,
}

impl SweepRow {
    pub fn report(&self) -> Option<&SolveReport> {
        match &self.outcome {
            PointOutcome::Solved(r) => Some(r),
            _ => None,
        }
    }

    pub fn utility(&self) -> Option<f64> {
        self.report().map(|r| to_f64(&r.utility))
    }
}

pub fn solve_point(config: &RunConfig, point: &Point) -> Result<PointOutcome> {
    let instance = match config.instance_at(point) {
        Ok(i) => i,
        Err(Error::InvalidProfile(msg)) => return Ok(PointOutcome::Invalid(msg)),
        Err(e) => return Err(e),
    };
    let search = config.search.to_search_config()?;
    let result = if config.search.auto_escalate {
        optimizer::optimize_escalating(&instance, &search)
    } else {
        optimizer::optimize(&instance, &search)
    };
    match result {
        Ok(report) => Ok(PointOutcome::Solved(report)),
        Err(Error::NoFeasibleMechanism { .. }) => Ok(PointOutcome::NoFeasibleMechanism),
        Err(e) => Err(e),
    }
}

/// Solves every grid point; rows come back in grid order whatever order the
/// thread pool finishes them in.
pub fn run_sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    let points = config.points()?;
    points
        .into_par_iter()
        .map(|point| solve_point(config, &point).map(|outcome| SweepRow { point, outcome }))
        .collect()
}

/// `m,p,x_high,x_low,n_1..,t_1..,utility,feasible,boundary_flag`, with the
/// `n`/`t` blocks as wide as the largest `m` needs.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let width = rows.iter().map(|r| r.point.m + 1).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["m", "p", "x_high", "x_low"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=width).map(|j| format!("n_{j}")));
    header.extend((1..=width).map(|j| format!("t_{j}")));
    header.extend(["utility", "feasible", "boundary_flag"].iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(std::io::Error::from)?;
    for row in rows {
        let (m, p, xh, xl) = point_f64(&row.point);
        let mut rec = vec![m.to_string(), p.to_string(), xh.to_string(), xl.to_string()];
        match row.report() {
            Some(r) => {
                let n = r.mechanism.n();
                rec.extend((0..width).map(|j| n.get(j).map_or(String::new(), u64::to_string)));
                let t = r.mechanism.t();
                rec.extend((0..width).map(|j| t.get(j).map_or(String::new(), |v| to_f64(v).to_string())));
                rec.push(to_f64(&r.utility).to_string());
                rec.push("true".into());
                rec.push((!r.boundary_flags().is_empty()).to_string());
            }
            None => {
                rec.extend(std::iter::repeat(String::new()).take(2 * width + 1));
                rec.push("false".into());
                rec.push("false".into());
            }
        }
        w.write_record(&rec).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}
