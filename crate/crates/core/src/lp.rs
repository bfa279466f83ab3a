//! Exact solver for the reward LP
//! `minimize Σ_j p_j t_j  subject to  a_r · t >= b_r`, with `t` free.
//!
//! Free variables are split as `t = u - v`; each stage is a dense two-phase
//! simplex with Bland's rule, so the pivot sequence (and therefore the
//! result) is a pure function of the input. Among optimal rewards the solver
//! first minimises `Σ |t_j|`, then picks the lexicographically smallest `t`.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::constraints::ConstraintSystem;
use crate::exact::{from_f64_exact, to_f64, Q};
use crate::model::CaseDistribution;

/// Scalar the simplex runs over: exact rationals or tolerance-aware floats.
pub trait Field: Clone + fmt::Debug + PartialOrd + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_q(q: &Q) -> Self;
    fn to_q(&self) -> Q;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    /// Right-hand side used when a stage optimum becomes a constraint.
    fn loosen(&self) -> Self;
}

impl Field for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn to_q(&self) -> Q {
        self.clone()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn loosen(&self) -> Self {
        self.clone()
    }
}

const FLOAT_PIVOT_TOL: f64 = 1e-11;
/// Relative slack on stage optima re-imposed as constraints in float mode.
const FLOAT_STAGE_SLACK: f64 = 1e-12;

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_q(q: &Q) -> Self {
        to_f64(q)
    }
    fn to_q(&self) -> Q {
        from_f64_exact(*self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        self.abs() <= FLOAT_PIVOT_TOL
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_PIVOT_TOL
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_PIVOT_TOL
    }
    fn loosen(&self) -> Self {
        self + FLOAT_STAGE_SLACK * self.abs().max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome<F> {
    pub status: LpStatus,
    pub t_star: Option<Vec<F>>,
    /// `Σ_j p_j t*_j`
    pub objective: Option<F>,
    /// Non-negative multipliers, one per input row, with `Σ_r y_r a_r = p`.
    pub duals: Option<Vec<F>>,
    /// Whether the optional box bound `|t_j| <= T` is tight at `t_star`.
    pub box_active: bool,
}

impl<F> LpOutcome<F> {
    fn without_solution(status: LpStatus) -> Self {
        Self { status, t_star: None, objective: None, duals: None, box_active: false }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// `minimize objective · t` subject to `row.0 · t >= row.1` and, if set,
/// `|t_j| <= box_bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem<F> {
    pub rows: Vec<(Vec<F>, F)>,
    pub objective: Vec<F>,
    pub box_bound: Option<F>,
}

impl<F: Field> LpProblem<F> {
    pub fn new(rows: Vec<(Vec<F>, F)>, objective: Vec<F>) -> Self {
        Self { rows, objective, box_bound: None }
    }

    pub fn with_box_bound(mut self, bound: F) -> Self {
        self.box_bound = Some(bound);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Reward LP for one allocation: minimise `Σ p_j t_j` over its rows.
    pub fn from_system(system: &ConstraintSystem, dist: &CaseDistribution, include_ic_high: bool) -> Self {
        let rows = system
            .lp_rows(include_ic_high)
            .into_iter()
            .map(|r| (r.coeffs.iter().map(F::from_q).collect(), F::from_q(&r.rhs)))
            .collect();
        Self::new(rows, dist.probs().iter().map(F::from_q).collect())
    }

    fn all_rows(&self) -> Vec<(Vec<F>, F)> {
        let mut rows = self.rows.clone();
        if let Some(bound) = &self.box_bound {
            let k = self.num_vars();
            for j in 0..k {
                for sign in [F::one(), F::one().neg()] {
                    let mut a = vec![F::zero(); k];
                    a[j] = sign;
                    rows.push((a, bound.neg()));
                }
            }
        }
        rows
    }

    fn box_active(&self, t: &[F]) -> bool {
        self.box_bound.as_ref().is_some_and(|bound| {
            t.iter().any(|x| x.sub(bound).is_zero() || x.add(bound).is_zero())
        })
    }
}

enum Goal<'a, F> {
    Linear(&'a [F]),
    AbsSum,
}

enum StageResult<F> {
    Optimal { t: Vec<F>, value: F, duals: Vec<F> },
    Infeasible,
    Unbounded,
}

/// One stage: minimise `goal` over `rows` (and `Σ|t_j| <= abs_cap`).
fn solve_stage<F: Field>(rows: &[(Vec<F>, F)], k: usize, abs_cap: Option<&F>, goal: Goal<'_, F>) -> StageResult<F> {
    let n_ineq = rows.len() + usize::from(abs_cap.is_some());
    let n_vars = 2 * k + n_ineq;
    let mut a = Vec::with_capacity(n_ineq);
    let mut b = Vec::with_capacity(n_ineq);
    for (r, (coeffs, rhs)) in rows.iter().enumerate() {
        let mut row = vec![F::zero(); n_vars];
        for (j, c) in coeffs.iter().enumerate() {
            row[j] = c.clone();
            row[k + j] = c.neg();
        }
        row[2 * k + r] = F::one().neg();
        a.push(row);
        b.push(rhs.clone());
    }
    if let Some(cap) = abs_cap {
        let mut row = vec![F::one().neg(); 2 * k];
        row.resize(n_vars, F::zero());
        row[n_vars - 1] = F::one().neg();
        a.push(row);
        b.push(cap.neg());
    }
    let mut c = vec![F::zero(); n_vars];
    match goal {
        Goal::Linear(obj) => {
            for (j, cj) in obj.iter().enumerate() {
                c[j] = cj.clone();
                c[k + j] = cj.neg();
            }
        }
        Goal::AbsSum => c[..2 * k].iter_mut().for_each(|x| *x = F::one()),
    }
    match simplex(a, b, &c) {
        Simplex::Optimal { x, value, duals } => {
            let t = (0..k).map(|j| x[j].sub(&x[k + j])).collect();
            StageResult::Optimal { t, value, duals: duals[..rows.len()].to_vec() }
        }
        Simplex::Infeasible => StageResult::Infeasible,
        Simplex::Unbounded => StageResult::Unbounded,
    }
}

/// Optimal value only; `t_star` is whichever optimal vertex the first stage
/// lands on.
pub fn solve_value<F: Field>(problem: &LpProblem<F>) -> LpOutcome<F> {
    let rows = problem.all_rows();
    match solve_stage(&rows, problem.num_vars(), None, Goal::Linear(&problem.objective)) {
        StageResult::Optimal { t, value, duals } => LpOutcome {
            status: LpStatus::Optimal,
            box_active: problem.box_active(&t),
            t_star: Some(t),
            objective: Some(value),
            duals: Some(duals[..problem.rows.len()].to_vec()),
        },
        StageResult::Infeasible => LpOutcome::without_solution(LpStatus::Infeasible),
        StageResult::Unbounded => LpOutcome::without_solution(LpStatus::Unbounded),
    }
}

/// Full solve with the deterministic tie-break among optima.
pub fn solve<F: Field>(problem: &LpProblem<F>) -> LpOutcome<F> {
    let first = solve_value(problem);
    let (Some(value), Some(duals)) = (first.objective.clone(), first.duals.clone()) else {
        return first;
    };
    let k = problem.num_vars();
    let mut rows = problem.all_rows();
    // stay optimal: p·t <= value
    rows.push((problem.objective.iter().map(Field::neg).collect(), value.loosen().neg()));
    let StageResult::Optimal { value: abs_sum, .. } = solve_stage(&rows, k, None, Goal::AbsSum) else {
        unreachable!("the optimal face is non-empty and Σ|t| is bounded below");
    };
    let cap = abs_sum.loosen();
    let mut t_star = first.t_star.clone().expect("optimal");
    for j in 0..k {
        let mut unit = vec![F::zero(); k];
        unit[j] = F::one();
        let StageResult::Optimal { t, value: tj, .. } = solve_stage(&rows, k, Some(&cap), Goal::Linear(&unit))
        else {
            unreachable!("the tie-break face is non-empty and bounded");
        };
        t_star = t;
        let mut neg_unit = vec![F::zero(); k];
        neg_unit[j] = F::one().neg();
        rows.push((neg_unit, tj.loosen().neg()));
    }
    let objective = problem.objective.iter().zip(&t_star).fold(F::zero(), |acc, (p, t)| acc.add(&p.mul(t)));
    LpOutcome {
        status: LpStatus::Optimal,
        box_active: problem.box_active(&t_star),
        t_star: Some(t_star),
        objective: Some(objective),
        duals: Some(duals),
    }
}

enum Simplex<F> {
    Optimal { x: Vec<F>, value: F, duals: Vec<F> },
    Infeasible,
    Unbounded,
}

/// `minimize c·x  s.t.  A x = b, x >= 0` by two-phase tableau simplex with
/// Bland's rule. Duals are returned per equality row.
fn simplex<F: Field>(a: Vec<Vec<F>>, b: Vec<F>, c: &[F]) -> Simplex<F> {
    let rows = a.len();
    let n = c.len();
    let width = n + rows + 1;
    let rhs = width - 1;
    let mut sign = vec![false; rows];
    let mut tab: Vec<Vec<F>> = Vec::with_capacity(rows);
    for (i, (mut row, bi)) in a.into_iter().zip(b).enumerate() {
        let flip = bi.is_negative();
        sign[i] = flip;
        row.resize(width, F::zero());
        row[n + i] = F::one();
        row[rhs] = bi;
        if flip {
            for (col, v) in row.iter_mut().enumerate() {
                if col != n + i {
                    *v = v.neg();
                }
            }
        }
        tab.push(row);
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();

    let mut phase_one = vec![F::zero(); n + rows];
    phase_one[n..].iter_mut().for_each(|x| *x = F::one());
    if run_simplex(&mut tab, &mut basis, &phase_one, n + rows).is_err() {
        unreachable!("phase one is bounded below by zero");
    }
    let infeasibility = basis
        .iter()
        .zip(&tab)
        .filter(|(&col, _)| col >= n)
        .fold(F::zero(), |acc, (_, row)| acc.add(&row[rhs]));
    if infeasibility.is_positive() {
        return Simplex::Infeasible;
    }
    for i in 0..rows {
        if basis[i] >= n {
            if let Some(col) = (0..n).find(|&col| !tab[i][col].is_zero()) {
                pivot(&mut tab, &mut basis, i, col);
            }
        }
    }

    let mut cost = c.to_vec();
    cost.resize(n + rows, F::zero());
    if run_simplex(&mut tab, &mut basis, &cost, n).is_err() {
        return Simplex::Unbounded;
    }
    let mut x = vec![F::zero(); n];
    for (i, &col) in basis.iter().enumerate() {
        if col < n {
            x[col] = tab[i][rhs].clone();
        }
    }
    let value = c.iter().zip(&x).fold(F::zero(), |acc, (ci, xi)| acc.add(&ci.mul(xi)));
    let duals = (0..rows)
        .map(|r| {
            let y = basis
                .iter()
                .zip(&tab)
                .fold(F::zero(), |acc, (&col, row)| acc.add(&cost[col].mul(&row[n + r])));
            if sign[r] {
                y.neg()
            } else {
                y
            }
        })
        .collect();
    Simplex::Optimal { x, value, duals }
}

struct Unbounded;

/// Pivots until optimal for `cost`; only columns `< allowed` may enter.
fn run_simplex<F: Field>(
    tab: &mut [Vec<F>],
    basis: &mut [usize],
    cost: &[F],
    allowed: usize,
) -> Result<(), Unbounded> {
    let rhs = tab.first().map_or(0, |r| r.len() - 1);
    loop {
        let entering = (0..allowed).filter(|col| !basis.contains(col)).find(|&col| {
            let reduced = basis
                .iter()
                .zip(tab.iter())
                .fold(cost[col].clone(), |acc, (&b, row)| acc.sub(&cost[b].mul(&row[col])));
            reduced.is_negative()
        });
        let Some(col) = entering else { return Ok(()) };
        let mut leave: Option<(usize, F)> = None;
        for (i, row) in tab.iter().enumerate() {
            if !row[col].is_positive() {
                continue;
            }
            let ratio = row[rhs].div(&row[col]);
            let better = match &leave {
                None => true,
                Some((li, best)) => {
                    let diff = ratio.sub(best);
                    diff.is_negative() || (diff.is_zero() && basis[i] < basis[*li])
                }
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let Some((row, _)) = leave else { return Err(Unbounded) };
        pivot(tab, basis, row, col);
    }
}

fn pivot<F: Field>(tab: &mut [Vec<F>], basis: &mut [usize], row: usize, col: usize) {
    let inv = F::one().div(&tab[row][col]);
    for v in tab[row].iter_mut() {
        *v = v.mul(&inv);
    }
    let pivot_row = tab[row].clone();
    for (i, other) in tab.iter_mut().enumerate() {
        if i == row || other[col].is_zero() {
            continue;
        }
        let factor = other[col].clone();
        for (v, p) in other.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *v = v.sub(&factor.mul(p));
            }
        }
        other[col] = F::zero();
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::exact::{int, parse_decimal};

    fn q(s: &str) -> Q {
        parse_decimal(s).unwrap()
    }

    fn worked_problem() -> LpProblem<Q> {
        let rows = vec![
            (vec![int(1), int(1), int(0)], int(0)),
            (vec![int(0), int(1), int(1)], int(0)),
            (vec![int(1), int(0), int(-1)], int(-2)),
            (vec![int(-1), int(0), int(1)], int(2)),
        ];
        LpProblem::new(rows, vec![q("0.25"), q("0.5"), q("0.25")])
    }

    #[test]
    fn worked_example_tie_break() {
        let out = solve(&worked_problem());
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.t_star.unwrap(), vec![int(0), int(0), int(2)]);
        assert_eq!(out.objective.unwrap(), q("0.5"));
        assert!(!out.box_active);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let rows = vec![
            (vec![int(-1), int(0), int(1)], int(2)),
            (vec![int(1), int(0), int(-1)], int(3)),
        ];
        let out = solve(&LpProblem::new(rows, vec![q("0.25"), q("0.5"), q("0.25")]));
        assert_eq!(out.status, LpStatus::Infeasible);
        assert!(out.t_star.is_none() && out.objective.is_none());
    }

    #[test]
    fn single_row_boundary_optimum() {
        let out = solve(&LpProblem::new(vec![(vec![int(1)], int(0))], vec![int(1)]));
        assert_eq!(out.t_star.unwrap(), vec![int(0)]);
        assert_eq!(out.objective.unwrap(), int(0));
    }

    #[test]
    fn missing_lower_bound_is_unbounded_unless_boxed() {
        // only t1 - t3 >= -2: objective can decrease forever
        let rows = vec![(vec![int(1), int(0), int(-1)], int(-2))];
        let lp = LpProblem::new(rows, vec![q("0.25"), q("0.5"), q("0.25")]);
        assert_eq!(solve(&lp).status, LpStatus::Unbounded);
        let boxed = solve(&lp.with_box_bound(int(10)));
        assert_eq!(boxed.status, LpStatus::Optimal);
        assert!(boxed.box_active);
        assert_eq!(boxed.t_star.unwrap(), vec![int(-10), int(-10), int(-10)]);
    }

    #[test]
    fn worked_duals_certify_optimality() {
        let lp = worked_problem();
        let out = solve(&lp);
        let y = out.duals.unwrap();
        let t = out.t_star.unwrap();
        assert!(y.iter().all(|v| !Signed::is_negative(v)));
        for j in 0..3 {
            let col: Q = lp.rows.iter().zip(&y).map(|((a, _), yr)| &a[j] * yr).sum();
            assert_eq!(col, lp.objective[j]);
        }
        let dual_value: Q = lp.rows.iter().zip(&y).map(|((_, b), yr)| b * yr).sum();
        assert_eq!(dual_value, q("0.5"));
        for ((a, b), yr) in lp.rows.iter().zip(&y) {
            let slack: Q = a.iter().zip(&t).map(|(x, y)| x * y).sum::<Q>() - b;
            assert!(Zero::is_zero(&(slack * yr)));
        }
    }

    #[test]
    fn float_mode_matches_exact_on_worked_example() {
        let exact = worked_problem();
        let float = LpProblem::<f64> {
            rows: exact.rows.iter().map(|(a, b)| (a.iter().map(to_f64).collect(), to_f64(b))).collect(),
            objective: exact.objective.iter().map(to_f64).collect(),
            box_bound: None,
        };
        let out = solve(&float);
        let t = out.t_star.unwrap();
        for (x, e) in t.iter().zip([0.0, 0.0, 2.0]) {
            assert!((x - e).abs() < 1e-9, "{t:?}");
        }
        assert!((out.objective.unwrap() - 0.5).abs() < 1e-9);
    }

    /// Rows with both "IR-like" rows present: random non-negative rows whose
    /// sum is the objective, plus two arbitrary rows.
    fn arb_bounded_lp() -> impl Strategy<Value = LpProblem<Q>> {
        (
            prop::collection::vec(0i64..6, 3),
            prop::collection::vec(0i64..6, 3),
            prop::collection::vec(-6i64..6, 3),
            prop::collection::vec(-6i64..6, 3),
            prop::collection::vec(-20i64..20, 4),
        )
            .prop_filter("objective must be positive", |(a, b, ..)| {
                a.iter().zip(b).all(|(x, y)| x + y > 0)
            })
            .prop_map(|(a, b, c, d, rhs)| {
                let v = |x: &Vec<i64>| x.iter().map(|&e| int(e)).collect::<Vec<_>>();
                let objective = a.iter().zip(&b).map(|(x, y)| int(x + y)).collect();
                LpProblem::new(
                    vec![(v(&a), int(rhs[0])), (v(&b), int(rhs[1])), (v(&c), int(rhs[2])), (v(&d), int(rhs[3]))],
                    objective,
                )
            })
    }

    proptest! {
        #[test]
        fn never_unbounded_and_certified(lp in arb_bounded_lp()) {
            let out = solve(&lp);
            prop_assert_ne!(out.status, LpStatus::Unbounded);
            if out.is_optimal() {
                let t = out.t_star.clone().unwrap();
                let y = out.duals.clone().unwrap();
                for ((a, b), yr) in lp.rows.iter().zip(&y) {
                    let slack: Q = a.iter().zip(&t).map(|(x, z)| x * z).sum::<Q>() - b;
                    prop_assert!(!Signed::is_negative(&slack));
                    prop_assert!(!Signed::is_negative(yr));
                    prop_assert!(Zero::is_zero(&(slack * yr)));
                }
                let obj: Q = lp.objective.iter().zip(&t).map(|(p, x)| p * x).sum();
                prop_assert_eq!(&obj, out.objective.as_ref().unwrap());
                prop_assert_eq!(solve_value(&lp).objective, out.objective.clone());
                // deterministic
                prop_assert_eq!(solve(&lp), out);
            }
        }
    }
}
