//! Participation and incentive rows over the extra rewards, and the
//! allocation-only collusion predicate.
//!
//! Every row is expressed in expected-utility units: the left-hand side of an
//! IR row is the honest worker's expected utility, and the slack of an IC row
//! is the honest utility minus the misreporting utility.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{uint, Real, Q};
use crate::model::{type_weights, CollusionModel, CostModel, LowDeviationCost, QualityProfile};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RowLabel {
    #[serde(rename = "IR_HIGH")]
    IrHigh,
    #[serde(rename = "IR_LOW")]
    IrLow,
    #[serde(rename = "IC_HIGH")]
    IcHigh,
    #[serde(rename = "IC_LOW")]
    IcLow,
}

impl RowLabel {
    pub const ALL: [RowLabel; 4] = [RowLabel::IrHigh, RowLabel::IrLow, RowLabel::IcHigh, RowLabel::IcLow];

    pub fn as_str(self) -> &'static str {
        match self {
            RowLabel::IrHigh => "IR_HIGH",
            RowLabel::IrLow => "IR_LOW",
            RowLabel::IcHigh => "IC_HIGH",
            RowLabel::IcLow => "IC_LOW",
        }
    }
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `coeffs · t >= rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRow {
    pub label: RowLabel,
    pub coeffs: Vec<Q>,
    pub rhs: Q,
}

impl LinearRow {
    pub fn lhs(&self, t: &[Q]) -> Q {
        self.coeffs.iter().zip(t).map(|(a, x)| a * x).sum()
    }

    pub fn slack(&self, t: &[Q]) -> Q {
        self.lhs(t) - &self.rhs
    }
}

/// A colluding plan in one mixed case and what it saves the coalition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollusionWitness {
    /// One-based case label (`X_case`).
    pub case: usize,
    /// Tasks handed off by each high-quality worker.
    #[serde(with = "crate::exact::serde_f64::vec")]
    pub offloaded: Vec<Q>,
    /// Extra tasks taken on by each low-quality worker.
    #[serde(with = "crate::exact::serde_f64::vec")]
    pub received: Vec<Q>,
    /// Coalition utility gain over honest behaviour.
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CollusionVerdict {
    Proof,
    Violated(CollusionWitness),
}

impl CollusionVerdict {
    pub fn is_proof(&self) -> bool {
        matches!(self, CollusionVerdict::Proof)
    }

    pub fn witness(&self) -> Option<&CollusionWitness> {
        match self {
            CollusionVerdict::Proof => None,
            CollusionVerdict::Violated(w) => Some(w),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineOptions {
    pub low_deviation_cost: LowDeviationCost,
    pub collusion_model: CollusionModel,
}

/// The four reward rows for one allocation plus its collusion verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    n: Vec<u64>,
    rows: Vec<LinearRow>,
    collusion: CollusionVerdict,
}

impl ConstraintSystem {
    pub fn n(&self) -> &[u64] {
        &self.n
    }

    pub fn rows(&self) -> &[LinearRow] {
        &self.rows
    }

    pub fn row(&self, label: RowLabel) -> &LinearRow {
        self.rows.iter().find(|r| r.label == label).expect("all four rows are present")
    }

    pub fn collusion(&self) -> &CollusionVerdict {
        &self.collusion
    }

    pub fn collusion_ok(&self) -> bool {
        self.collusion.is_proof()
    }

    /// Rows handed to the reward LP.
    pub fn lp_rows(&self, include_ic_high: bool) -> Vec<&LinearRow> {
        self.rows.iter().filter(|r| include_ic_high || r.label != RowLabel::IcHigh).collect()
    }
}

fn check_allocation(profile: &QualityProfile, n: &[u64]) -> Result<()> {
    if n.len() != profile.num_cases() {
        return Err(Error::InvalidMechanism(format!(
            "allocation has {} entries, expected {}",
            n.len(),
            profile.num_cases()
        )));
    }
    if let Some(pos) = n.iter().position(|&v| v == 0) {
        return Err(Error::InvalidMechanism(format!("n_{} must be a positive integer", pos + 1)));
    }
    Ok(())
}

/// IR/IC rows for allocation `n`, with all t-free terms folded into `rhs`.
pub fn linear_rows(
    profile: &QualityProfile,
    cost: &CostModel,
    n: &[u64],
    policy: LowDeviationCost,
) -> Result<Vec<LinearRow>> {
    check_allocation(profile, n)?;
    let m = profile.m();
    let (xh, xl) = (profile.x_high(), profile.x_low());
    let w = type_weights(profile);
    let f: Vec<Q> = n.iter().map(|&v| cost.at(v)).collect();
    let low_liar_cost = match policy {
        LowDeviationCost::OwnType => xl,
        LowDeviationCost::ClaimedType => xh,
    };
    // t-free part of each utility term
    let honest_high = |j: usize| uint(n[j]) * xh - &f[j] * xh;
    let lying_high = |j: usize| uint(n[j + 1]) * xl - &f[j + 1] * xh;
    let honest_low = |j: usize| uint(n[j]) * xl - &f[j] * xl;
    let lying_low = |j: usize| uint(n[j - 1]) * xh - &f[j - 1] * low_liar_cost;

    let zeros = || vec![Q::zero(); m + 1];
    let mut ir_high = (zeros(), Q::zero());
    let mut ic_high = (zeros(), Q::zero());
    for j in 0..m {
        let wj = w.high(j).expect("high weight");
        ir_high.0[j] += wj;
        ir_high.1 += wj * honest_high(j);
        ic_high.0[j] += wj;
        ic_high.0[j + 1] -= wj;
        ic_high.1 += wj * (honest_high(j) - lying_high(j));
    }
    let mut ir_low = (zeros(), Q::zero());
    let mut ic_low = (zeros(), Q::zero());
    for j in 1..=m {
        let wj = w.low(j).expect("low weight");
        ir_low.0[j] += wj;
        ir_low.1 += wj * honest_low(j);
        ic_low.0[j] += wj;
        ic_low.0[j - 1] -= wj;
        ic_low.1 += wj * (honest_low(j) - lying_low(j));
    }
    let row = |label, (coeffs, constant): (Vec<Q>, Q)| LinearRow { label, coeffs, rhs: -constant };
    Ok(vec![
        row(RowLabel::IrHigh, ir_high),
        row(RowLabel::IrLow, ir_low),
        row(RowLabel::IcHigh, ic_high),
        row(RowLabel::IcLow, ic_low),
    ])
}

pub fn build_rows(
    profile: &QualityProfile,
    cost: &CostModel,
    n: &[u64],
    options: &EngineOptions,
) -> Result<ConstraintSystem> {
    let rows = linear_rows(profile, cost, n, options.low_deviation_cost)?;
    let collusion = collusion_proof(profile, cost, n, options.collusion_model)?;
    Ok(ConstraintSystem { n: n.to_vec(), rows, collusion })
}

/// Signed slack per row; non-negative means satisfied.
pub fn residuals(system: &ConstraintSystem, t: &[Q]) -> Result<BTreeMap<RowLabel, Q>> {
    if t.len() != system.n.len() {
        return Err(Error::InvalidMechanism(format!(
            "reward vector has {} entries, expected {}",
            t.len(),
            system.n.len()
        )));
    }
    Ok(system.rows.iter().map(|r| (r.label, r.slack(t))).collect())
}

/// Coalition cost when `highs` high-quality workers each hand off
/// `offloaded_total / highs` tasks and `lows` low-quality workers each take
/// `offloaded_total / lows`. For convex `f` this lower-bounds every integer
/// plan that moves the same total.
pub fn equal_split_cost(
    profile: &QualityProfile,
    cost: &CostModel,
    nj: u64,
    highs: usize,
    lows: usize,
    offloaded_total: &Q,
) -> Real {
    let base = uint(nj);
    let give = offloaded_total / uint(highs as u64);
    let take = offloaded_total / uint(lows as u64);
    let term = |x: Q, quality: &Q, count: usize| {
        let scale = uint(count as u64) * quality;
        match cost.eval(&x) {
            Some(v) => Real::Exact(v * scale),
            None => Real::Float(cost.eval_f64(crate::exact::to_f64(&x)) * crate::exact::to_f64(&scale)),
        }
    };
    Real::sum([term(&base - give, profile.x_high(), highs), term(base + take, profile.x_low(), lows)])
}

/// Collusion-proofness of allocation `n`; independent of the rewards.
///
/// For each mixed case this checks the closed-form full-offload bound (each
/// high-quality worker hands off everything, split equally among the
/// low-quality workers). For `m <= 3` it also enumerates every integer plan
/// admitted by `model`; for larger `m` under [`CollusionModel::PartialSplits`]
/// it checks the equal-split bound at every offloaded total.
pub fn collusion_proof(
    profile: &QualityProfile,
    cost: &CostModel,
    n: &[u64],
    model: CollusionModel,
) -> Result<CollusionVerdict> {
    check_allocation(profile, n)?;
    for (j, &nj) in n.iter().enumerate().take(profile.m()).skip(1) {
        if let Some(w) = case_collusion(profile, cost, j, nj, model) {
            return Ok(CollusionVerdict::Violated(w));
        }
    }
    Ok(CollusionVerdict::Proof)
}

/// Profitable collusion in mixed case `j` (zero-based, `1 <= j < m`) with
/// `n_j = nj` tasks per worker, if there is one. Depends on nothing else in
/// the allocation.
pub fn case_collusion(
    profile: &QualityProfile,
    cost: &CostModel,
    j: usize,
    nj: u64,
    model: CollusionModel,
) -> Option<CollusionWitness> {
    let m = profile.m();
    debug_assert!((1..m).contains(&j), "case {j} is not mixed");
    let (xh, xl) = (profile.x_high(), profile.x_low());
    let (highs, lows) = (m - j, j);
    let fj = cost.at(nj);
    let honest = Real::Exact(&fj * uint(highs as u64) * xh + &fj * uint(lows as u64) * xl);

    let full = uint(nj * highs as u64);
    let bound = equal_split_cost(profile, cost, nj, highs, lows, &full);
    if honest.exceeds(&bound) {
        return Some(CollusionWitness {
            case: j + 1,
            offloaded: vec![uint(nj); highs],
            received: vec![&full / uint(lows as u64); lows],
            gain: honest.sub(&bound).to_f64(),
        });
    }

    if m <= 3 {
        if let Some(w) = worst_integer_plan(profile, cost, nj, highs, lows, model) {
            return Some(CollusionWitness { case: j + 1, ..w });
        }
    } else if model == CollusionModel::PartialSplits {
        for total in 0..=nj * highs as u64 {
            let total = uint(total);
            let bound = equal_split_cost(profile, cost, nj, highs, lows, &total);
            if honest.exceeds(&bound) {
                return Some(CollusionWitness {
                    case: j + 1,
                    offloaded: vec![&total / uint(highs as u64); highs],
                    received: vec![&total / uint(lows as u64); lows],
                    gain: honest.sub(&bound).to_f64(),
                });
            }
        }
    }
    None
}

/// Most profitable integer plan in one case, if any saves cost.
fn worst_integer_plan(
    profile: &QualityProfile,
    cost: &CostModel,
    nj: u64,
    highs: usize,
    lows: usize,
    model: CollusionModel,
) -> Option<CollusionWitness> {
    let (xh, xl) = (profile.x_high(), profile.x_low());
    let max_load = nj + nj * highs as u64;
    let f: Vec<Q> = (0..=max_load).map(|k| cost.at(k)).collect();
    let honest = &f[nj as usize] * (uint(highs as u64) * xh + uint(lows as u64) * xl);

    let mut best: Option<(Q, Vec<u64>, Vec<u64>)> = None;
    let give_range: Vec<u64> = match model {
        CollusionModel::FullOffload => vec![nj],
        CollusionModel::PartialSplits => (0..=nj).collect(),
    };
    let mut give = vec![0u64; highs];
    loop_product(&give_range, &mut give, 0, &mut |give| {
        let total: u64 = give.iter().sum();
        let high_cost: Q = give.iter().map(|&a| &f[(nj - a) as usize]).sum::<Q>() * xh;
        let mut take = vec![0u64; lows];
        for_each_composition(total, &mut take, 0, &mut |take| {
            let low_cost: Q = take.iter().map(|&b| &f[(nj + b) as usize]).sum::<Q>() * xl;
            let gain = &honest - &high_cost - low_cost;
            if gain.is_positive() && best.as_ref().map_or(true, |(g, _, _)| &gain > g) {
                best = Some((gain, give.to_vec(), take.to_vec()));
            }
        });
    });
    best.map(|(gain, give, take)| CollusionWitness {
        case: 0,
        offloaded: give.into_iter().map(uint).collect(),
        received: take.into_iter().map(uint).collect(),
        gain: crate::exact::to_f64(&gain),
    })
}

fn loop_product(range: &[u64], slot: &mut [u64], at: usize, visit: &mut dyn FnMut(&[u64])) {
    if at == slot.len() {
        visit(slot);
        return;
    }
    for &v in range {
        slot[at] = v;
        loop_product(range, slot, at + 1, visit);
    }
}

/// Visits every way of writing `total` as an ordered sum of `parts.len()`
/// non-negative integers.
fn for_each_composition(total: u64, parts: &mut [u64], at: usize, visit: &mut dyn FnMut(&[u64])) {
    if at + 1 == parts.len() {
        parts[at] = total;
        visit(parts);
        return;
    }
    for v in 0..=total {
        parts[at] = v;
        for_each_composition(total - v, parts, at + 1, visit);
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::exact::{int, parse_decimal};

    fn q(s: &str) -> Q {
        parse_decimal(s).unwrap()
    }

    fn profile(m: usize, p: &str, xh: &str, xl: &str) -> QualityProfile {
        QualityProfile::new(m, q(p), q(xh), q(xl)).unwrap()
    }

    /// The four rows written out term by term for two workers.
    fn two_worker_rows(
        prof: &QualityProfile,
        cost: &CostModel,
        n: &[u64],
        policy: LowDeviationCost,
    ) -> Vec<(Vec<Q>, Q)> {
        let p = prof.p().clone();
        let (p1, p2, p3) = (&p * &p, int(2) * &p * (int(1) - &p), (int(1) - &p) * (int(1) - &p));
        let half_p2 = &p2 / int(2);
        let (xh, xl) = (prof.x_high().clone(), prof.x_low().clone());
        let nn: Vec<Q> = n.iter().map(|&v| uint(v)).collect();
        let big_f = |k: usize, x: &Q| cost.at(n[k]) * x;
        let xc = match policy {
            LowDeviationCost::OwnType => xl.clone(),
            LowDeviationCost::ClaimedType => xh.clone(),
        };
        // IR high: p1(n1 xh + t1 - F(n1,xh)) + p2/2 (n2 xh + t2 - F(n2,xh)) >= 0
        let ir_h = (
            vec![p1.clone(), half_p2.clone(), int(0)],
            -(&p1 * (&nn[0] * &xh - big_f(0, &xh)) + &half_p2 * (&nn[1] * &xh - big_f(1, &xh))),
        );
        let ir_l = (
            vec![int(0), half_p2.clone(), p3.clone()],
            -(&half_p2 * (&nn[1] * &xl - big_f(1, &xl)) + &p3 * (&nn[2] * &xl - big_f(2, &xl))),
        );
        let ic_h = (
            vec![p1.clone(), &half_p2 - &p1, -&half_p2],
            -(&p1 * (&nn[0] * &xh - big_f(0, &xh)) + &half_p2 * (&nn[1] * &xh - big_f(1, &xh))
                - &p1 * (&nn[1] * &xl - big_f(1, &xh))
                - &half_p2 * (&nn[2] * &xl - big_f(2, &xh))),
        );
        let ic_l = (
            vec![-&half_p2, &half_p2 - &p3, p3.clone()],
            -(&half_p2 * (&nn[1] * &xl - big_f(1, &xl)) + &p3 * (&nn[2] * &xl - big_f(2, &xl))
                - &half_p2 * (&nn[0] * &xh - big_f(0, &xc))
                - &p3 * (&nn[1] * &xh - big_f(1, &xc))),
        );
        vec![ir_h, ir_l, ic_h, ic_l]
    }

    fn worked_system() -> ConstraintSystem {
        build_rows(&profile(2, "0.5", "2", "1"), &CostModel::Exp2Minus1, &[1, 1, 1], &EngineOptions::default())
            .unwrap()
    }

    #[test]
    fn worked_rows_match_hand_expansion() {
        let sys = worked_system();
        // hand expansion, normalised: t1+t2>=0, t2+t3>=0, t1-t3>=-2, t3-t1>=2
        let hand = [
            ([1, 1, 0], 0),
            ([0, 1, 1], 0),
            ([1, 0, -1], -2),
            ([-1, 0, 1], 2),
        ];
        let scale = q("0.25");
        for (row, (coeffs, rhs)) in sys.rows().iter().zip(hand) {
            let expect: Vec<Q> = coeffs.iter().map(|&c| int(c) * &scale).collect();
            assert_eq!(row.coeffs, expect, "{}", row.label);
            assert_eq!(row.rhs, int(rhs) * &scale, "{}", row.label);
        }
        assert!(sys.collusion_ok());
    }

    #[test]
    fn worked_rows_agree_with_hand_rows_on_a_dense_grid() {
        let sys = worked_system();
        let hand = |t: &[f64]| {
            t[0] + t[1] >= 0.0 && t[1] + t[2] >= 0.0 && t[0] - t[2] >= -2.0 && t[2] - t[0] >= 2.0
        };
        let mut checked = 0;
        for a in -12..=12 {
            for b in -12..=12 {
                for c in -12..=12 {
                    let t = [a as f64 / 4.0, b as f64 / 4.0, c as f64 / 4.0];
                    let tq: Vec<Q> = [a, b, c].iter().map(|&v| Q::new(v.into(), 4.into())).collect();
                    let ours = sys.rows().iter().all(|r| !r.slack(&tq).is_negative());
                    assert_eq!(ours, hand(&t), "{t:?}");
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 25 * 25 * 25);
    }

    #[test]
    fn residual_examples() {
        let sys = worked_system();
        let r = residuals(&sys, &[int(0), int(0), int(2)]).unwrap();
        // expected-utility units: the normalised slacks (0, 2, 0, 0) times 1/4
        assert_eq!(
            r.values().cloned().collect::<Vec<_>>(),
            vec![int(0), q("0.5"), int(0), int(0)]
        );
        let r = residuals(&sys, &[int(0), int(0), int(0)]).unwrap();
        assert_eq!(r[&RowLabel::IcLow], q("-0.5"));
        let boundary = residuals(&sys, &[int(-1), int(1), int(1)]).unwrap();
        assert_eq!(boundary[&RowLabel::IrHigh], int(0));
        assert!(residuals(&sys, &[int(0)]).is_err());
    }

    #[test]
    fn rejects_bad_allocations() {
        let prof = profile(2, "0.5", "2", "1");
        assert!(linear_rows(&prof, &CostModel::Exp2Minus1, &[1, 0, 1], LowDeviationCost::OwnType).is_err());
        assert!(linear_rows(&prof, &CostModel::Exp2Minus1, &[1, 1], LowDeviationCost::OwnType).is_err());
        assert!(collusion_proof(&prof, &CostModel::Exp2Minus1, &[0, 1, 1], CollusionModel::FullOffload).is_err());
    }

    #[test]
    fn ir_rows_sum_to_case_probabilities() {
        for m in 2..=6 {
            let prof = profile(m, "0.35", "7", "2");
            let rows = linear_rows(&prof, &CostModel::Exp2Minus1, &vec![2; m + 1], LowDeviationCost::OwnType).unwrap();
            let sum: Vec<Q> = rows[0].coeffs.iter().zip(&rows[1].coeffs).map(|(a, b)| a + b).collect();
            assert_eq!(sum, crate::model::case_probabilities(&prof).probs());
            assert!(rows[..2].iter().flat_map(|r| &r.coeffs).all(|c| !c.is_negative()));
        }
    }

    #[test]
    fn collusion_examples() {
        let prof = profile(2, "0.5", "9", "1");
        // (f(4) - f(0))·9 = 135 <= (f(8) - f(4))·1 = 240
        let v = collusion_proof(&prof, &CostModel::Exp2Minus1, &[1, 4, 1], CollusionModel::FullOffload).unwrap();
        assert!(v.is_proof());

        let linear = CostModel::Power { exponent: 1.0 };
        let prof = profile(2, "0.5", "2", "1");
        let v = collusion_proof(&prof, &linear, &[1, 2, 1], CollusionModel::FullOffload).unwrap();
        let w = v.witness().expect("linear cost invites collusion");
        assert_eq!(w.case, 2);
        assert_eq!(w.offloaded, vec![int(2)]);
        assert_eq!(w.received, vec![int(2)]);
        assert_eq!(w.gain, 2.0);
        let v = collusion_proof(&prof, &linear, &[1, 2, 1], CollusionModel::PartialSplits).unwrap();
        assert_eq!(v.witness().unwrap().offloaded, vec![int(2)]);
    }

    #[test]
    fn worked_collusion_is_tight_at_full_offload() {
        let prof = profile(2, "0.5", "2", "1");
        let honest = CostModel::Exp2Minus1.at(1) * (prof.x_high() + prof.x_low());
        let offload = equal_split_cost(&prof, &CostModel::Exp2Minus1, 1, 1, 1, &int(1));
        assert_eq!(offload, Real::Exact(honest));
        assert_eq!(equal_split_cost(&prof, &CostModel::Exp2Minus1, 1, 1, 1, &int(0)), offload);
    }

    /// Passing the full-offload bound does not rule out partial hand-offs
    /// under convex cost: with n_2 = 4, x_high = 9, x_low = 1 a hand-off of
    /// two tasks saves 150 - 90 = 60.
    #[test]
    fn full_offload_bound_does_not_cover_partial_splits() {
        let prof = profile(2, "0.5", "9", "1");
        let v = collusion_proof(&prof, &CostModel::Exp2Minus1, &[1, 4, 1], CollusionModel::PartialSplits).unwrap();
        let w = v.witness().expect("partial hand-off is profitable");
        assert_eq!(w.offloaded, vec![int(2)]);
        assert_eq!(w.gain, 60.0);
        // for convex f and x_high > 2 x_low, a single-task hand-off always pays
        for nj in 1..=12 {
            let v = collusion_proof(&prof, &CostModel::Exp2Minus1, &[1, nj, 1], CollusionModel::PartialSplits)
                .unwrap();
            assert!(!v.is_proof(), "n_2 = {nj}");
        }
    }

    #[test]
    fn three_worker_fractional_bound_is_checked() {
        // m = 3, case X_3 (one high, two low): the bound evaluates f(3·n/2)
        let prof = profile(3, "0.5", "80", "20");
        let v = collusion_proof(&prof, &CostModel::Exp2Minus1, &[1, 3, 3, 1], CollusionModel::FullOffload).unwrap();
        assert!(v.is_proof());
        let v = collusion_proof(&prof, &CostModel::Exp2Minus1, &[1, 3, 1, 1], CollusionModel::FullOffload).unwrap();
        let w = v.witness().unwrap();
        assert_eq!(w.case, 3);
        assert_eq!(w.received, vec![q("0.5"), q("0.5")]);
    }

    #[test]
    fn larger_m_partial_model_uses_equal_split_sweep() {
        let prof = profile(4, "0.5", "9", "1");
        let full = collusion_proof(&prof, &CostModel::Exp2Minus1, &[1, 4, 4, 6, 1], CollusionModel::FullOffload)
            .unwrap();
        assert!(full.is_proof());
        let partial =
            collusion_proof(&prof, &CostModel::Exp2Minus1, &[1, 4, 4, 6, 1], CollusionModel::PartialSplits)
                .unwrap();
        assert!(!partial.is_proof());
    }

    fn arb_instance() -> impl Strategy<Value = (QualityProfile, CostModel, Vec<u64>, LowDeviationCost)> {
        (
            1i64..100,
            1i64..30,
            1i64..40,
            prop::sample::select(vec![
                CostModel::Exp2Minus1,
                CostModel::Power { exponent: 2.0 },
                CostModel::Power { exponent: 3.0 },
            ]),
            prop::collection::vec(1u64..=8, 3),
            prop::bool::ANY,
        )
            .prop_map(|(p, xl, dx, cost, n, claimed)| {
                let prof = QualityProfile::new(2, Q::new(p.into(), 101.into()), int(xl + dx), int(xl)).unwrap();
                let policy = if claimed { LowDeviationCost::ClaimedType } else { LowDeviationCost::OwnType };
                (prof, cost, n, policy)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn generic_rows_equal_two_worker_rows((prof, cost, n, policy) in arb_instance()) {
            let rows = linear_rows(&prof, &cost, &n, policy).unwrap();
            let hand = two_worker_rows(&prof, &cost, &n, policy);
            for (row, (coeffs, rhs)) in rows.iter().zip(hand) {
                prop_assert_eq!(&row.coeffs, &coeffs, "{}", row.label);
                prop_assert_eq!(&row.rhs, &rhs, "{}", row.label);
            }
        }

        #[test]
        fn partial_model_is_stricter((prof, cost, n, _p) in arb_instance()) {
            let partial = collusion_proof(&prof, &cost, &n, CollusionModel::PartialSplits).unwrap();
            let full = collusion_proof(&prof, &cost, &n, CollusionModel::FullOffload).unwrap();
            prop_assert!(!partial.is_proof() || full.is_proof());
        }
    }
}
