//! Exhaustive search over integer task allocations.
//!
//! Every allocation in `{1..n_max}^(m+1)` is checked for collusion-proofness
//! and scored by an upper bound on its utility: adding the two participation
//! rows gives `Σ p_j t_j >= b_IR_HIGH + b_IR_LOW`, because the two rows'
//! coefficients sum to `p`. Candidates are then solved in order of decreasing
//! bound until the bound drops below the best utility found, which returns
//! the same argmax as solving every reward LP.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{self, ConstraintSystem, EngineOptions, RowLabel};
use crate::exact::{uint, Q};
use crate::lp::{self, LpOutcome, LpProblem, LpStatus};
use crate::model::{
    allocation_surplus, case_probabilities, type_weights, CaseDistribution, CollusionModel, Instance, LowDeviationCost,
    Mechanism,
};
use crate::{Error, Result};

/// Upper limit on `n_max^(m+1)`.
pub const SEARCH_SPACE_LIMIT: u128 = 1_000_000;

/// Largest `n_max` that automatic escalation will try.
pub const ESCALATION_CAP: u64 = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    #[default]
    Exact,
    Float,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub n_max: u64,
    /// `false` drops the high-quality incentive row from the reward LP.
    pub include_ic_high: bool,
    pub low_deviation_cost: LowDeviationCost,
    pub collusion_model: CollusionModel,
    /// Optional box bound `|t_j| <= t_bound`.
    pub t_bound: Option<Q>,
    pub arithmetic: Arithmetic,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_max: 12,
            include_ic_high: true,
            low_deviation_cost: LowDeviationCost::default(),
            collusion_model: CollusionModel::default(),
            t_bound: None,
            arithmetic: Arithmetic::default(),
        }
    }
}

impl SearchConfig {
    pub fn engine_options(&self) -> EngineOptions {
        EngineOptions { low_deviation_cost: self.low_deviation_cost, collusion_model: self.collusion_model }
    }

    fn validate(&self, cases: usize) -> Result<u128> {
        if self.n_max < 1 {
            return Err(Error::InvalidSearch("n_max must be at least 1".into()));
        }
        if let Some(bound) = &self.t_bound {
            if bound <= &Q::zero() {
                return Err(Error::InvalidSearch("t_bound must be positive".into()));
            }
        }
        let size = search_space_size(self.n_max, cases);
        if size > SEARCH_SPACE_LIMIT {
            return Err(Error::SearchSpaceTooLarge { size, limit: SEARCH_SPACE_LIMIT });
        }
        Ok(size)
    }
}

fn search_space_size(n_max: u64, cases: usize) -> u128 {
    (0..cases).try_fold(1u128, |acc, _| acc.checked_mul(n_max as u128)).unwrap_or(u128::MAX)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub candidates_examined: u64,
    pub candidates_collusion_filtered: u64,
    /// Reward LPs actually solved.
    pub candidates_lp_solved: u64,
    pub candidates_lp_infeasible: u64,
    pub candidates_lp_unbounded: u64,
    /// Skipped because their utility bound could not beat the incumbent.
    pub candidates_pruned: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub mechanism: Mechanism,
    pub utility: Q,
    /// Signed slack of each row at the returned rewards.
    pub slacks: BTreeMap<RowLabel, Q>,
    pub stats: SearchStats,
    pub n_max: u64,
    pub box_active: bool,
}

impl SolveReport {
    /// 1-based indices `j` with `n_j == n_max`.
    pub fn boundary_flags(&self) -> Vec<usize> {
        boundary_flags(self.mechanism.n(), self.n_max)
    }
}

pub fn boundary_flags(n: &[u64], n_max: u64) -> Vec<usize> {
    n.iter().enumerate().filter(|(_, &v)| v == n_max).map(|(j, _)| j + 1).collect()
}

/// Boundary hits of the best mechanism for `instance` under `config`.
pub fn boundary_report(instance: &Instance, config: &SearchConfig) -> Result<Vec<usize>> {
    optimize(instance, config).map(|r| r.boundary_flags())
}

/// Allocation with index `idx` in lexicographic order over `{1..n_max}^cases`.
fn allocation_at(mut idx: u128, n_max: u64, cases: usize) -> Vec<u64> {
    let mut n = vec![0; cases];
    for slot in n.iter_mut().rev() {
        *slot = (idx % n_max as u128) as u64 + 1;
        idx /= n_max as u128;
    }
    n
}

/// Per-case lookup tables that make screening an allocation cheap.
///
/// Both the collusion verdict and the utility bound split into one term per
/// case that depends on `n_j` alone.
struct ScreenTables {
    /// `collusive[j][n - 1]`
    collusive: Vec<Vec<bool>>,
    /// `bound_terms[j][n - 1] * scale` is case `j`'s share of the bound.
    bound_terms: Vec<Vec<BigInt>>,
    scale: BigInt,
}

impl ScreenTables {
    fn new(instance: &Instance, dist: &CaseDistribution, n_max: u64, model: CollusionModel) -> Self {
        let profile = &instance.profile;
        let m = profile.m();
        let weights = type_weights(profile);
        let zero = Q::zero();
        let collusive = (0..=m)
            .map(|j| {
                (1..=n_max)
                    .map(|n| (1..m).contains(&j) && constraints::case_collusion(profile, &instance.cost, j, n, model).is_some())
                    .collect()
            })
            .collect();
        // p_j (R_j - n M_j) + m (n - f(n)) (w_high_j x_high + w_low_j x_low)
        let terms: Vec<Vec<Q>> = (0..=m)
            .map(|j| {
                let wh = weights.high(j).unwrap_or(&zero);
                let wl = if j == 0 { &zero } else { weights.low(j).unwrap_or(&zero) };
                let ir_rate = wh * profile.x_high() + wl * profile.x_low();
                (1..=n_max)
                    .map(|n| {
                        let surplus = instance.revenue.revenue(profile, j, n) - uint(n) * profile.case_quality_mass(j);
                        dist.get(j) * surplus + uint(m as u64) * (uint(n) - instance.cost.at(n)) * &ir_rate
                    })
                    .collect()
            })
            .collect();
        let scale = terms.iter().flatten().fold(BigInt::one(), |acc, t| acc.lcm(t.denom()));
        let bound_terms = terms
            .iter()
            .map(|row| row.iter().map(|t| (t * Q::from_integer(scale.clone())).to_integer()).collect())
            .collect();
        Self { collusive, bound_terms, scale }
    }

    fn collusive(&self, n: &[u64]) -> bool {
        n.iter().enumerate().any(|(j, &v)| self.collusive[j][v as usize - 1])
    }

    fn scaled_bound(&self, n: &[u64]) -> BigInt {
        n.iter().enumerate().map(|(j, &v)| &self.bound_terms[j][v as usize - 1]).sum()
    }
}

struct Scored {
    n: Vec<u64>,
    /// Utility bound times `ScreenTables::scale`.
    bound: BigInt,
}

/// Utility of allocation `n` at rewards with objective `pt = Σ p_j t_j`.
fn utility_at(instance: &Instance, dist: &CaseDistribution, n: &[u64], pt: &Q) -> Q {
    allocation_surplus(instance, dist, n) - uint(instance.profile.m() as u64) * pt
}

fn problem_for(system: &ConstraintSystem, dist: &CaseDistribution, config: &SearchConfig) -> LpProblem<Q> {
    let problem = LpProblem::from_system(system, dist, config.include_ic_high);
    match &config.t_bound {
        Some(bound) => problem.with_box_bound(bound.clone()),
        None => problem,
    }
}

fn to_field<F: lp::Field>(problem: &LpProblem<Q>) -> LpProblem<F> {
    LpProblem {
        rows: problem.rows.iter().map(|(a, b)| (a.iter().map(F::from_q).collect(), F::from_q(b))).collect(),
        objective: problem.objective.iter().map(F::from_q).collect(),
        box_bound: problem.box_bound.as_ref().map(F::from_q),
    }
}

fn outcome_to_q<F: lp::Field>(out: LpOutcome<F>) -> LpOutcome<Q> {
    LpOutcome {
        status: out.status,
        t_star: out.t_star.map(|t| t.iter().map(lp::Field::to_q).collect()),
        objective: out.objective.map(|o| o.to_q()),
        duals: out.duals.map(|d| d.iter().map(lp::Field::to_q).collect()),
        box_active: out.box_active,
    }
}

fn run_lp(problem: &LpProblem<Q>, arithmetic: Arithmetic, full: bool) -> LpOutcome<Q> {
    match (arithmetic, full) {
        (Arithmetic::Exact, false) => lp::solve_value(problem),
        (Arithmetic::Exact, true) => lp::solve(problem),
        (Arithmetic::Float, false) => outcome_to_q(lp::solve_value(&to_field::<f64>(problem))),
        (Arithmetic::Float, true) => outcome_to_q(lp::solve(&to_field::<f64>(problem))),
    }
}

/// Whether the two participation rows sum to the LP objective, which makes
/// `b_IR_HIGH + b_IR_LOW` a valid lower bound on `Σ p_j t_j`.
fn ir_rows_bound_objective(system: &ConstraintSystem, dist: &CaseDistribution) -> bool {
    let (h, l) = (system.row(RowLabel::IrHigh), system.row(RowLabel::IrLow));
    (0..dist.len()).all(|j| &h.coeffs[j] + &l.coeffs[j] == *dist.get(j))
}

/// Requestor-optimal collusion-proof mechanism with allocations in
/// `{1..n_max}^(m+1)`.
///
/// Ties in utility go to the lexicographically smallest allocation; rewards
/// follow the LP tie-break.
pub fn optimize(instance: &Instance, config: &SearchConfig) -> Result<SolveReport> {
    let profile = &instance.profile;
    let cases = profile.num_cases();
    let size = config.validate(cases)?;
    let dist = case_probabilities(profile);
    let options = config.engine_options();
    let m = uint(profile.m() as u64);

    let tables = ScreenTables::new(instance, &dist, config.n_max, options.collusion_model);
    let screened: Vec<Option<Scored>> = (0..size)
        .into_par_iter()
        .map(|idx| {
            let n = allocation_at(idx, config.n_max, cases);
            (!tables.collusive(&n)).then(|| Scored { bound: tables.scaled_bound(&n), n })
        })
        .collect();

    let mut stats = SearchStats { candidates_examined: size as u64, ..SearchStats::default() };
    let mut queue: Vec<Scored> = screened.into_iter().flatten().collect();
    stats.candidates_collusion_filtered = stats.candidates_examined - queue.len() as u64;
    queue.sort_by(|a, b| b.bound.cmp(&a.bound).then_with(|| a.n.cmp(&b.n)));

    let scale = Q::from_integer(tables.scale.clone());
    // (utility, utility * scale, allocation)
    let mut best: Option<(Q, Q, Vec<u64>)> = None;
    for (pos, cand) in queue.iter().enumerate() {
        if let Some((_, scaled, _)) = &best {
            if Q::from_integer(cand.bound.clone()) < *scaled {
                stats.candidates_pruned = (queue.len() - pos) as u64;
                break;
            }
        }
        let system = constraints::build_rows(profile, &instance.cost, &cand.n, &options)?;
        debug_assert!(system.collusion_ok());
        debug_assert!(ir_rows_bound_objective(&system, &dist));
        debug_assert_eq!(
            Q::new(cand.bound.clone(), tables.scale.clone()),
            allocation_surplus(instance, &dist, &cand.n)
                - &m * (&system.row(RowLabel::IrHigh).rhs + &system.row(RowLabel::IrLow).rhs)
        );
        let out = run_lp(&problem_for(&system, &dist, config), config.arithmetic, false);
        stats.candidates_lp_solved += 1;
        match out.status {
            LpStatus::Infeasible => stats.candidates_lp_infeasible += 1,
            LpStatus::Unbounded => stats.candidates_lp_unbounded += 1,
            LpStatus::Optimal => {
                let u = utility_at(instance, &dist, &cand.n, out.objective.as_ref().expect("optimal"));
                let better = match &best {
                    None => true,
                    Some((bu, _, bn)) => u > *bu || (u == *bu && cand.n < *bn),
                };
                if better {
                    best = Some((&u * &scale, u, cand.n.clone())).map(|(s, u, n)| (u, s, n));
                }
            }
        }
    }

    let Some((_, _, n)) = best else {
        return Err(Error::NoFeasibleMechanism { stats });
    };
    let system = constraints::build_rows(profile, &instance.cost, &n, &options)?;
    let out = run_lp(&problem_for(&system, &dist, config), config.arithmetic, true);
    let t = out.t_star.expect("winner is LP-feasible");
    let mechanism = Mechanism::new(n, t)?;
    let utility = crate::model::requestor_expected_utility(instance, &mechanism)?;
    let slacks = constraints::residuals(&system, mechanism.t())?;
    Ok(SolveReport { mechanism, utility, slacks, stats, n_max: config.n_max, box_active: out.box_active })
}

/// Re-runs [`optimize`] with a larger `n_max` while the optimum sits on the
/// search boundary, up to [`ESCALATION_CAP`] and the search-space limit.
pub fn optimize_escalating(instance: &Instance, config: &SearchConfig) -> Result<SolveReport> {
    let cases = instance.profile.num_cases();
    let mut config = config.clone();
    loop {
        let report = optimize(instance, &config)?;
        let next = (config.n_max + 4).min(ESCALATION_CAP);
        if report.boundary_flags().is_empty()
            || next <= config.n_max
            || search_space_size(next, cases) > SEARCH_SPACE_LIMIT
        {
            return Ok(report);
        }
        config.n_max = next;
    }
}

/// Exact LP outcome for one fixed allocation.
pub fn solve_allocation(instance: &Instance, n: &[u64], config: &SearchConfig) -> Result<(ConstraintSystem, LpOutcome<Q>)> {
    let dist = case_probabilities(&instance.profile);
    let system = constraints::build_rows(&instance.profile, &instance.cost, n, &config.engine_options())?;
    let out = run_lp(&problem_for(&system, &dist, config), config.arithmetic, true);
    Ok((system, out))
}
