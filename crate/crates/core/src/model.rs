//! Worker-type model, cost/revenue families and expected-utility arithmetic.
//!
//! Cases are indexed from zero throughout the library: case `j` is the
//! outcome in which `m - j` of the `m` workers are high quality. User-facing
//! output labels it `j + 1`. Mechanisms carry one task count and one extra
//! reward per case.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{self, binomial, from_decimal_f64, from_f64_exact, pow, uint, Q};
use crate::{Error, Result};

/// Largest supported worker count (the reward LP has at most 16 variables).
pub const MAX_WORKERS: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    High,
    Low,
}

impl Quality {
    pub fn other(self) -> Quality {
        match self {
            Quality::High => Quality::Low,
            Quality::Low => Quality::High,
        }
    }
}

/// Cost charged to a low-quality worker who claims to be high quality.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowDeviationCost {
    /// `F(n, x_low)`: the liar still works at his own quality.
    #[default]
    OwnType,
    /// `F(n, x_high)`: cost evaluated at the claimed quality.
    ClaimedType,
}

/// Which task-offloading strategies colluding workers are assumed to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollusionModel {
    /// Every high-quality worker hands all of his tasks to the low-quality
    /// workers; any integer division among the low-quality workers is allowed.
    #[default]
    FullOffload,
    /// Each high-quality worker may hand off any number `0..=n` of his tasks.
    PartialSplits,
}

/// Worker population: count, probability of high quality, and the two
/// quality levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QualityProfile {
    m: usize,
    p: Q,
    x_high: Q,
    x_low: Q,
}

impl QualityProfile {
    pub fn new(m: usize, p: Q, x_high: Q, x_low: Q) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidProfile(format!("worker count m={m} must be at least 2")));
        }
        if m > MAX_WORKERS {
            return Err(Error::InvalidProfile(format!(
                "worker count m={m} exceeds the supported maximum {MAX_WORKERS}"
            )));
        }
        if !p.is_positive() || p >= Q::one() {
            return Err(Error::InvalidProfile(format!(
                "p={} must lie in the open interval (0, 1)",
                exact::to_f64(&p)
            )));
        }
        if !x_low.is_positive() {
            return Err(Error::InvalidProfile(format!(
                "x_low={} must be positive",
                exact::to_f64(&x_low)
            )));
        }
        if x_high <= x_low {
            return Err(Error::InvalidProfile(format!(
                "x_high={} must exceed x_low={}",
                exact::to_f64(&x_high),
                exact::to_f64(&x_low)
            )));
        }
        Ok(Self { m, p, x_high, x_low })
    }

    /// Builds a profile from decimal floats, reading each as its shortest
    /// decimal rational (`0.3` is exactly `3/10`).
    pub fn from_f64(m: usize, p: f64, x_high: f64, x_low: f64) -> Result<Self> {
        Self::new(m, from_decimal_f64(p)?, from_decimal_f64(x_high)?, from_decimal_f64(x_low)?)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> &Q {
        &self.p
    }

    pub fn x_high(&self) -> &Q {
        &self.x_high
    }

    pub fn x_low(&self) -> &Q {
        &self.x_low
    }

    pub fn quality(&self, q: Quality) -> &Q {
        match q {
            Quality::High => &self.x_high,
            Quality::Low => &self.x_low,
        }
    }

    pub fn num_cases(&self) -> usize {
        self.m + 1
    }

    /// Copy of this profile with a different `p`.
    pub fn with_p(&self, p: Q) -> Result<Self> {
        Self::new(self.m, p, self.x_high.clone(), self.x_low.clone())
    }

    /// Number of high-quality workers in case `j`.
    pub fn highs_in_case(&self, j: usize) -> usize {
        self.m - j
    }

    /// Sum of the qualities of all workers in case `j`: `(m-j)·x_high + j·x_low`.
    pub fn case_quality_mass(&self, j: usize) -> Q {
        uint((self.m - j) as u64) * &self.x_high + uint(j as u64) * &self.x_low
    }
}

/// Probability of each case `X_1..X_{m+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseDistribution {
    probs: Vec<Q>,
}

impl CaseDistribution {
    pub fn probs(&self) -> &[Q] {
        &self.probs
    }

    pub fn get(&self, j: usize) -> &Q {
        &self.probs[j]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// `p_j = C(m, m-j) · p^(m-j) · (1-p)^j` for the zero-based case `j`.
pub fn case_probabilities(profile: &QualityProfile) -> CaseDistribution {
    let m = profile.m as u64;
    let q = Q::one() - profile.p();
    let probs = (0..=m)
        .map(|j| binomial(m, m - j) * pow(profile.p(), (m - j) as u32) * pow(&q, j as u32))
        .collect();
    CaseDistribution { probs }
}

/// Joint probability that a given worker has a given type and the case is
/// `j`. High weights cover cases `0..m`, low weights cover cases `1..=m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeWeights {
    high: Vec<Q>,
    low: Vec<Q>,
}

impl TypeWeights {
    /// Weight of a high-quality worker in case `j` (`0 <= j < m`).
    pub fn high(&self, j: usize) -> Option<&Q> {
        self.high.get(j)
    }

    /// Weight of a low-quality worker in case `j` (`1 <= j <= m`).
    pub fn low(&self, j: usize) -> Option<&Q> {
        j.checked_sub(1).and_then(|i| self.low.get(i))
    }

    pub fn high_weights(&self) -> &[Q] {
        &self.high
    }

    pub fn low_weights(&self) -> &[Q] {
        &self.low
    }
}

pub fn type_weights(profile: &QualityProfile) -> TypeWeights {
    let m = profile.m as u64;
    let dist = case_probabilities(profile);
    // share of case-j probability mass in which the focal worker is high / low
    let high = (0..m)
        .map(|j| binomial(m - 1, m - 1 - j) / binomial(m, m - j) * dist.get(j as usize))
        .collect();
    let low = (1..=m)
        .map(|j| binomial(m - 1, m - j) / binomial(m, m - j) * dist.get(j as usize))
        .collect();
    TypeWeights { high, low }
}

/// Per-worker cost shape `f`, with `F(n, x) = f(n)·x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostModel {
    /// `f(n) = 2^n - 1`
    Exp2Minus1,
    /// `f(n) = n^exponent`, `exponent >= 1`
    Power { exponent: f64 },
    /// Values `f(0), f(1), ...` at consecutive integers; piecewise-linear in
    /// between and extrapolated with the last slope.
    Table { values: Vec<f64> },
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            CostModel::Exp2Minus1 => Ok(()),
            CostModel::Power { exponent } => {
                if !exponent.is_finite() || *exponent < 1.0 || *exponent > 64.0 {
                    return Err(Error::InvalidCost(format!(
                        "power exponent {exponent} must lie in [1, 64]"
                    )));
                }
                Ok(())
            }
            CostModel::Table { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidCost("table needs at least two values".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidCost("table values must be finite".into()));
                }
                let vals = values.iter().map(|v| from_decimal_f64(*v)).collect::<Result<Vec<_>>>()?;
                if vals[0].is_negative() {
                    return Err(Error::InvalidCost("f(0) must be non-negative".into()));
                }
                for w in vals.windows(2) {
                    if w[1] < w[0] {
                        return Err(Error::InvalidCost("table values must be non-decreasing".into()));
                    }
                }
                for w in vals.windows(3) {
                    if &w[2] - &w[1] < &w[1] - &w[0] {
                        return Err(Error::InvalidCost(
                            "table values must have non-decreasing increments (convex)".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// `f(n)` at a non-negative integer.
    pub fn at(&self, n: u64) -> Q {
        match self {
            CostModel::Exp2Minus1 => {
                Q::from_integer((BigInt::one() << n as usize) - BigInt::one())
            }
            CostModel::Power { exponent } => match integral_exponent(*exponent) {
                Some(e) => Q::from_integer(num_traits::pow(BigInt::from(n), e as usize)),
                None => from_f64_exact((n as f64).powf(*exponent)),
            },
            CostModel::Table { .. } => self.eval(&uint(n)).expect("tables are exact"),
        }
    }

    /// `f(x)` at a non-negative rational, or `None` when the value is not
    /// rational (e.g. `2^(3/2)`).
    pub fn eval(&self, x: &Q) -> Option<Q> {
        debug_assert!(!x.is_negative(), "cost evaluated at negative task count");
        match self {
            CostModel::Exp2Minus1 | CostModel::Power { .. } => {
                if x.is_integer() {
                    let n: u64 = x.to_integer().try_into().ok()?;
                    match self {
                        CostModel::Power { exponent } if integral_exponent(*exponent).is_none() => None,
                        _ => Some(self.at(n)),
                    }
                } else if let CostModel::Power { exponent } = self {
                    integral_exponent(*exponent).map(|e| pow(x, e))
                } else {
                    None
                }
            }
            CostModel::Table { values } => {
                let vals: Vec<Q> = values.iter().map(|v| from_decimal_f64(*v).ok()).collect::<Option<_>>()?;
                let last = vals.len() - 1;
                let floor = x.floor().to_integer();
                let i: usize = floor.try_into().ok().unwrap_or(usize::MAX);
                if i >= last {
                    let slope = &vals[last] - &vals[last - 1];
                    Some(&vals[last] + (x - uint(last as u64)) * slope)
                } else {
                    let frac = x - x.floor();
                    Some(&vals[i] + frac * (&vals[i + 1] - &vals[i]))
                }
            }
        }
    }

    /// `f(x)` in floating point, defined for every non-negative real.
    pub fn eval_f64(&self, x: f64) -> f64 {
        match self {
            CostModel::Exp2Minus1 => x.exp2() - 1.0,
            CostModel::Power { exponent } => x.powf(*exponent),
            CostModel::Table { values } => {
                let last = values.len() - 1;
                let i = x.floor() as usize;
                if i >= last {
                    values[last] + (x - last as f64) * (values[last] - values[last - 1])
                } else {
                    values[i] + (x - i as f64) * (values[i + 1] - values[i])
                }
            }
        }
    }

    /// `F(n, x) = f(n)·x`.
    pub fn cost(&self, n: u64, quality: &Q) -> Q {
        self.at(n) * quality
    }

    /// Checks `f(a) + f(b) >= 2 f((a+b)/2)` on all pairs of a half-integer grid
    /// over `[0, upper]`.
    pub fn is_midpoint_convex_on(&self, upper: u64) -> bool {
        let pts: Vec<f64> = (0..=2 * upper).map(|k| k as f64 / 2.0).collect();
        pts.iter().all(|&a| {
            pts.iter().all(|&b| {
                let lhs = self.eval_f64(a) + self.eval_f64(b);
                let rhs = 2.0 * self.eval_f64((a + b) / 2.0);
                lhs >= rhs - crate::EPSILON * lhs.abs().max(1.0)
            })
        })
    }
}

fn integral_exponent(e: f64) -> Option<u32> {
    (e.fract() == 0.0 && (0.0..=64.0).contains(&e)).then_some(e as u32)
}

/// Requestor revenue `R_j` from the submissions in case `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RevenueModel {
    /// `R_j = ((m-j)·x_high + j·x_low) · n_j^2` (zero-based `j`).
    QuadraticQualityWeighted,
    /// One polynomial in `n_j` per case: `coefficients[j][k]` multiplies `n^k`.
    /// Coefficients must be non-negative so that revenue is non-negative.
    Custom { coefficients: Vec<Vec<f64>> },
}

impl RevenueModel {
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            RevenueModel::QuadraticQualityWeighted => Ok(()),
            RevenueModel::Custom { coefficients } => {
                if coefficients.len() != m + 1 {
                    return Err(Error::InvalidRevenue(format!(
                        "custom revenue needs {} case polynomials, got {}",
                        m + 1,
                        coefficients.len()
                    )));
                }
                if coefficients.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
                    return Err(Error::InvalidRevenue(
                        "custom revenue coefficients must be finite and non-negative".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn revenue(&self, profile: &QualityProfile, j: usize, n: u64) -> Q {
        match self {
            RevenueModel::QuadraticQualityWeighted => profile.case_quality_mass(j) * uint(n * n),
            RevenueModel::Custom { coefficients } => {
                let nq = uint(n);
                let mut acc = Q::zero();
                for c in coefficients[j].iter().rev() {
                    acc = acc * &nq + from_decimal_f64(*c).unwrap_or_else(|_| Q::zero());
                }
                acc
            }
        }
    }
}

/// The full model a mechanism is designed for.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub profile: QualityProfile,
    pub cost: CostModel,
    pub revenue: RevenueModel,
}

impl Instance {
    pub fn new(profile: QualityProfile, cost: CostModel, revenue: RevenueModel) -> Result<Self> {
        cost.validate()?;
        revenue.validate(profile.m())?;
        Ok(Self { profile, cost, revenue })
    }
}

/// A designed contract: per-case task counts and extra rewards.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mechanism {
    n: Vec<u64>,
    t: Vec<Q>,
}

impl Mechanism {
    pub fn new(n: Vec<u64>, t: Vec<Q>) -> Result<Self> {
        if n.len() != t.len() {
            return Err(Error::InvalidMechanism(format!(
                "n has {} entries but t has {}",
                n.len(),
                t.len()
            )));
        }
        if n.len() < 3 {
            return Err(Error::InvalidMechanism("a mechanism needs at least three cases".into()));
        }
        if let Some(pos) = n.iter().position(|&v| v == 0) {
            return Err(Error::InvalidMechanism(format!("n_{} must be a positive integer", pos + 1)));
        }
        Ok(Self { n, t })
    }

    pub fn n(&self) -> &[u64] {
        &self.n
    }

    pub fn t(&self) -> &[Q] {
        &self.t
    }

    pub fn num_cases(&self) -> usize {
        self.n.len()
    }

    pub fn with_t(&self, t: Vec<Q>) -> Result<Self> {
        Self::new(self.n.clone(), t)
    }

    pub fn check_profile(&self, profile: &QualityProfile) -> Result<()> {
        if self.n.len() != profile.num_cases() {
            return Err(Error::InvalidMechanism(format!(
                "mechanism has {} cases but m={} needs {}",
                self.n.len(),
                profile.m(),
                profile.num_cases()
            )));
        }
        Ok(())
    }
}

/// `u_ij = n_j·x_own + t_j`.
pub fn payment(profile: &QualityProfile, mech: &Mechanism, j: usize, own: Quality) -> Result<Q> {
    mech.check_profile(profile)?;
    if j >= mech.num_cases() {
        return Err(Error::CaseOutOfRange { index: j, cases: mech.num_cases() });
    }
    Ok(uint(mech.n[j]) * profile.quality(own) + &mech.t[j])
}

/// t-free part of the requestor's expected utility:
/// `Σ_j p_j (R_j - n_j·((m-j)x_high + j·x_low))`.
pub fn allocation_surplus(instance: &Instance, dist: &CaseDistribution, n: &[u64]) -> Q {
    let profile = &instance.profile;
    n.iter()
        .enumerate()
        .map(|(j, &nj)| {
            let task_pay = uint(nj) * profile.case_quality_mass(j);
            dist.get(j) * (instance.revenue.revenue(profile, j, nj) - task_pay)
        })
        .sum()
}

/// Requestor's expected utility under honest reporting:
/// `Σ_j p_j (R_j - Σ_i u_ij)`.
pub fn requestor_expected_utility(instance: &Instance, mech: &Mechanism) -> Result<Q> {
    mech.check_profile(&instance.profile)?;
    let dist = case_probabilities(&instance.profile);
    let m = uint(instance.profile.m() as u64);
    let rewards: Q = mech.t.iter().zip(dist.probs()).map(|(t, p)| p * t).sum();
    Ok(allocation_surplus(instance, &dist, &mech.n) - m * rewards)
}

/// Expected utility of a worker of type `own` who reports `report`.
///
/// A high-quality liar lands one case later and is paid at `x_low` while still
/// bearing cost at `x_high`; a low-quality liar lands one case earlier and is
/// paid at `x_high` with cost set by `policy`.
pub fn worker_expected_utility(
    profile: &QualityProfile,
    cost: &CostModel,
    mech: &Mechanism,
    own: Quality,
    report: Quality,
    policy: LowDeviationCost,
) -> Result<Q> {
    mech.check_profile(profile)?;
    let w = type_weights(profile);
    let (weights, first_case) = match own {
        Quality::High => (w.high_weights(), 0usize),
        Quality::Low => (w.low_weights(), 1usize),
    };
    let cost_quality = match (own, report, policy) {
        (Quality::Low, Quality::High, LowDeviationCost::ClaimedType) => profile.x_high(),
        _ => profile.quality(own),
    };
    let shift = |j: usize| match (own, report) {
        (Quality::High, Quality::Low) => j + 1,
        (Quality::Low, Quality::High) => j - 1,
        _ => j,
    };
    let pay_quality = profile.quality(report);
    Ok(weights
        .iter()
        .enumerate()
        .map(|(i, weight)| {
            let k = shift(first_case + i);
            let nk = mech.n[k];
            weight * (uint(nk) * pay_quality + &mech.t[k] - cost.cost(nk, cost_quality))
        })
        .sum())
}
