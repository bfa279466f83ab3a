//! Mechanism JSON written by `solve` and read by `verify`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constraints::RowLabel;
use crate::exact::{from_f64_exact, parse_decimal, to_exact_string, to_f64, Q};
use crate::optimizer::{SearchStats, SolveReport};
use crate::model::Mechanism;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveOutput {
    Optimal {
        n: Vec<u64>,
        t: Vec<f64>,
        /// Exact rewards as `"a/b"` strings; `verify` prefers these over `t`.
        t_exact: Vec<String>,
        utility: f64,
        utility_exact: String,
        slacks: BTreeMap<RowLabel, f64>,
        stats: SearchStats,
        n_max: u64,
        /// 1-based indices `j` with `n_j == n_max`.
        boundary_flags: Vec<usize>,
        box_active: bool,
    },
    NoFeasibleMechanism {
        stats: SearchStats,
    },
}

impl SolveOutput {
    pub fn from_report(report: &SolveReport) -> Self {
        let t = report.mechanism.t();
        SolveOutput::Optimal {
            n: report.mechanism.n().to_vec(),
            t: t.iter().map(to_f64).collect(),
            t_exact: t.iter().map(to_exact_string).collect(),
            utility: to_f64(&report.utility),
            utility_exact: to_exact_string(&report.utility),
            slacks: report.slacks.iter().map(|(k, v)| (*k, to_f64(v))).collect(),
            stats: report.stats.clone(),
            n_max: report.n_max,
            boundary_flags: report.boundary_flags(),
            box_active: report.box_active,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("output serializes")
    }
}

/// Accepts `solve` output or a hand-written `{"n": [...], "t": [...]}`;
/// other keys are ignored.
#[derive(Debug, Deserialize)]
struct MechanismInput {
    n: Vec<u64>,
    t: Vec<f64>,
    #[serde(default)]
    t_exact: Option<Vec<String>>,
}

pub fn parse_mechanism(text: &str) -> Result<Mechanism> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let input: MechanismInput = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("mechanism at `{path}`: {}", e.into_inner()))
    })?;
    let t: Vec<Q> = match &input.t_exact {
        Some(exact) => {
            if exact.len() != input.t.len() {
                return Err(Error::Config("mechanism `t` and `t_exact` differ in length".into()));
            }
            exact.iter().map(|s| parse_decimal(s)).collect::<Result<_>>()?
        }
        None => input.t.iter().map(|&v| exact_or_float(v)).collect::<Result<_>>()?,
    };
    Mechanism::new(input.n, t)
}

/// Hand-written rewards such as `0.1` are read as the decimal they spell.
fn exact_or_float(v: f64) -> Result<Q> {
    if !v.is_finite() {
        return Err(Error::Config(format!("reward {v} is not finite")));
    }
    crate::exact::from_decimal_f64(v).or_else(|_| Ok(from_f64_exact(v)))
}
