//! JSON run configuration.

use serde::{Deserialize, Serialize};

use crate::exact::{from_decimal_f64, parse_decimal, to_f64, Q};
use crate::model::{CollusionModel, CostModel, Instance, LowDeviationCost, QualityProfile, RevenueModel};
use crate::optimizer::{Arithmetic, SearchConfig};
use crate::{Error, Result};

/// Largest number of grid points a sweep may request.
pub const MAX_GRID_POINTS: usize = 100_000;

/// A number written either as a JSON number or as a decimal/fraction string
/// such as `"1/3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn to_q(&self) -> Result<Q> {
        match self {
            Scalar::Number(v) => from_decimal_f64(*v),
            Scalar::Text(s) => parse_decimal(s),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Number(v)
    }
}

fn default_n_max() -> u64 {
    12
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_true")]
    pub include_ic_high: bool,
    #[serde(default)]
    pub low_deviation_cost: LowDeviationCost,
    #[serde(default)]
    pub collusion_model: CollusionModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_bound: Option<Scalar>,
    #[serde(default)]
    pub arithmetic: Arithmetic,
    /// Grow `n_max` while the optimum touches it.
    #[serde(default)]
    pub auto_escalate: bool,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            n_max: default_n_max(),
            include_ic_high: true,
            low_deviation_cost: LowDeviationCost::default(),
            collusion_model: CollusionModel::default(),
            t_bound: None,
            arithmetic: Arithmetic::default(),
            auto_escalate: false,
        }
    }
}

impl SearchSection {
    pub fn to_search_config(&self) -> Result<SearchConfig> {
        Ok(SearchConfig {
            n_max: self.n_max,
            include_ic_high: self.include_ic_high,
            low_deviation_cost: self.low_deviation_cost,
            collusion_model: self.collusion_model,
            t_bound: self.t_bound.as_ref().map(Scalar::to_q).transpose()?,
            arithmetic: self.arithmetic,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_high: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_low: Option<Vec<Scalar>>,
}

fn default_cost() -> CostModel {
    CostModel::Exp2Minus1
}

fn default_revenue() -> RevenueModel {
    RevenueModel::QuadraticQualityWeighted
}

/// Model, search settings and optional sweep axes. Every scalar model
/// parameter must be given either directly or as an axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_high: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_low: Option<Scalar>,
    #[serde(default = "default_cost")]
    pub cost: CostModel,
    #[serde(default = "default_revenue")]
    pub revenue: RevenueModel,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Axes>,
}

/// One model point of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub m: usize,
    pub p: Q,
    pub x_high: Q,
    pub x_low: Q,
}

impl RunConfig {
    /// Parses JSON, reporting the failing field path and position.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column()))
        })?;
        config.validate_shape()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn validate_shape(&self) -> Result<()> {
        let axes = self.axes.clone().unwrap_or_default();
        let check = |name: &str, scalar: bool, axis: Option<usize>| match (scalar, axis) {
            (false, None) => Err(Error::Config(format!("`{name}` must be given, either directly or under `axes`"))),
            (true, Some(_)) => Err(Error::Config(format!("`{name}` is given both directly and under `axes`"))),
            (_, Some(0)) => Err(Error::Config(format!("axis `{name}` is empty"))),
            _ => Ok(()),
        };
        check("m", self.m.is_some(), axes.m.as_ref().map(Vec::len))?;
        check("p", self.p.is_some(), axes.p.as_ref().map(Vec::len))?;
        check("x_high", self.x_high.is_some(), axes.x_high.as_ref().map(Vec::len))?;
        check("x_low", self.x_low.is_some(), axes.x_low.as_ref().map(Vec::len))?;
        self.cost.validate()?;
        if self.search.n_max < 1 {
            return Err(Error::Config("`search.n_max` must be at least 1".into()));
        }
        let size = self.grid_size();
        if size > MAX_GRID_POINTS {
            return Err(Error::Config(format!("sweep has {size} grid points, more than the limit of {MAX_GRID_POINTS}")));
        }
        Ok(())
    }

    pub fn is_sweep(&self) -> bool {
        self.axes.is_some()
    }

    pub fn grid_size(&self) -> usize {
        let axes = self.axes.clone().unwrap_or_default();
        [
            axes.m.as_ref().map_or(1, Vec::len),
            axes.p.as_ref().map_or(1, Vec::len),
            axes.x_high.as_ref().map_or(1, Vec::len),
            axes.x_low.as_ref().map_or(1, Vec::len),
        ]
        .iter()
        .fold(1usize, |acc, &k| acc.saturating_mul(k))
    }

    /// Grid points in nested axis order `m, p, x_high, x_low`, each axis in
    /// the order listed.
    pub fn points(&self) -> Result<Vec<Point>> {
        let axes = self.axes.clone().unwrap_or_default();
        let ms = axes.m.unwrap_or_else(|| vec![self.m.expect("checked")]);
        let values = |axis: Option<Vec<Scalar>>, scalar: &Option<Scalar>| -> Result<Vec<Q>> {
            axis.unwrap_or_else(|| vec![scalar.clone().expect("checked")]).iter().map(Scalar::to_q).collect()
        };
        let ps = values(axes.p, &self.p)?;
        let xhs = values(axes.x_high, &self.x_high)?;
        let xls = values(axes.x_low, &self.x_low)?;
        let mut out = Vec::with_capacity(self.grid_size());
        for &m in &ms {
            for p in &ps {
                for xh in &xhs {
                    for xl in &xls {
                        out.push(Point { m, p: p.clone(), x_high: xh.clone(), x_low: xl.clone() });
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn instance_at(&self, point: &Point) -> Result<Instance> {
        let profile = QualityProfile::new(point.m, point.p.clone(), point.x_high.clone(), point.x_low.clone())?;
        Instance::new(profile, self.cost.clone(), self.revenue.clone())
    }

    /// The single instance of a non-sweep config.
    pub fn instance(&self) -> Result<Instance> {
        if self.is_sweep() {
            return Err(Error::Config("this command takes a single model point; remove `axes`".into()));
        }
        let points = self.points()?;
        self.instance_at(&points[0])
    }
}

/// `Point` coordinates as floats, for CSV output.
pub fn point_f64(point: &Point) -> (usize, f64, f64, f64) {
    (point.m, to_f64(&point.p), to_f64(&point.x_high), to_f64(&point.x_low))
}
