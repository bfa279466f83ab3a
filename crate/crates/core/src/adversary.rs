//! Brute-force deviation search.
//!
//! Nothing here uses the closed-form type weights or the constraint rows:
//! expected utilities come from enumerating every type vector of the other
//! workers, and collusion gains from enumerating task splits directly. The
//! agreement between the two code paths is what the tests check.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constraints::EngineOptions;
use crate::exact::{self, epsilon_q, serde_f64, to_f64, uint, Real, Q};
use crate::model::{CollusionModel, CostModel, Instance, LowDeviationCost, Mechanism, Quality, QualityProfile};
use crate::{Result, EPSILON};

/// Random integer splits drawn per mixed case when `m > 3`.
pub const COLLUSION_SAMPLES: usize = 10_000;
const SAMPLE_SEED: u64 = 0x6d65_6368_7072_6f66;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Coverage {
    #[serde(rename = "exhaustive")]
    Exhaustive,
    #[serde(rename = "bounded + sampled")]
    BoundedSampled,
}

/// Most profitable task split found for one mixed case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollusionDeviation {
    /// 1-based case label.
    pub case: usize,
    /// Tasks handed off by each high-quality worker.
    #[serde(with = "serde_f64::vec")]
    pub offloaded: Vec<Q>,
    /// Tasks taken on by each low-quality worker.
    #[serde(with = "serde_f64::vec")]
    pub received: Vec<Q>,
    /// Reduction in the coalition's total cost.
    pub gain: f64,
    /// Whether the split is a fractional bound rather than an integer plan.
    pub fractional: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub verdict: Verdict,
    pub worst_gain: f64,
    /// Gain of a high-quality worker who reports low.
    #[serde(with = "serde_f64")]
    pub misreport_high: Q,
    /// Gain of a low-quality worker who reports high.
    #[serde(with = "serde_f64")]
    pub misreport_low: Q,
    #[serde(with = "serde_f64")]
    pub participation_high: Q,
    #[serde(with = "serde_f64")]
    pub participation_low: Q,
    pub collusion: Vec<CollusionDeviation>,
    pub collusion_coverage: Coverage,
}

impl DeviationReport {
    pub fn passes(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Expected utility of one worker of type `own` reporting `report`, weighted
/// by the probability of `own` (so the four values are joint expectations).
///
/// The other `m - 1` workers report honestly; their type vectors are
/// enumerated one by one.
pub fn enumerated_worker_utility(
    profile: &QualityProfile,
    cost: &CostModel,
    mech: &Mechanism,
    own: Quality,
    report: Quality,
    policy: LowDeviationCost,
) -> Result<Q> {
    mech.check_profile(profile)?;
    let m = profile.m();
    let p = profile.p();
    let q = Q::one() - p;
    let own_prob = match own {
        Quality::High => p.clone(),
        Quality::Low => q.clone(),
    };
    let pay_rate = profile.quality(report);
    let cost_rate = match (own, report, policy) {
        (Quality::Low, Quality::High, LowDeviationCost::ClaimedType) => profile.x_high(),
        _ => profile.quality(own),
    };
    let mut total = Q::zero();
    for mask in 0u32..1 << (m - 1) {
        // bit set = that other worker is low quality
        let lows = mask.count_ones() as usize;
        let prob = exact::pow(p, (m - 1 - lows) as u32) * exact::pow(&q, lows as u32);
        let case = lows + usize::from(report == Quality::Low);
        let n = mech.n()[case];
        let utility = uint(n) * pay_rate + &mech.t()[case] - cost.at(n) * cost_rate;
        total += prob * utility;
    }
    Ok(own_prob * total)
}

/// Requestor utility by enumerating all `2^m` type vectors.
pub fn enumerated_requestor_utility(instance: &Instance, mech: &Mechanism) -> Result<Q> {
    let profile = &instance.profile;
    mech.check_profile(profile)?;
    let m = profile.m();
    let p = profile.p();
    let q = Q::one() - p;
    let mut total = Q::zero();
    for mask in 0u32..1 << m {
        let lows = mask.count_ones() as usize;
        let prob = exact::pow(p, (m - lows) as u32) * exact::pow(&q, lows as u32);
        let n = mech.n()[lows];
        let mut payments = Q::zero();
        for i in 0..m {
            let x = if mask >> i & 1 == 1 { profile.x_low() } else { profile.x_high() };
            payments += uint(n) * x + &mech.t()[lows];
        }
        let revenue = match &instance.revenue {
            crate::model::RevenueModel::QuadraticQualityWeighted => {
                (uint((m - lows) as u64) * profile.x_high() + uint(lows as u64) * profile.x_low()) * uint(n * n)
            }
            other => other.revenue(profile, lows, n),
        };
        total += prob * (revenue - payments);
    }
    Ok(total)
}

fn cost_at(cost: &CostModel, x: &Q) -> Real {
    match cost.eval(x) {
        Some(v) => Real::Exact(v),
        None => Real::Float(cost.eval_f64(to_f64(x))),
    }
}

/// Coalition cost when high workers keep `nj - offloaded_i` tasks and low
/// workers do `nj + received_k`.
fn coalition_cost(profile: &QualityProfile, cost: &CostModel, nj: u64, offloaded: &[Q], received: &[Q]) -> Real {
    let base = uint(nj);
    let highs = offloaded.iter().map(|k| cost_at(cost, &(&base - k)).scale(profile.x_high()));
    let lows = received.iter().map(|k| cost_at(cost, &(&base + k)).scale(profile.x_low()));
    Real::sum(highs.chain(lows))
}

struct CaseSearch<'a> {
    profile: &'a QualityProfile,
    cost: &'a CostModel,
    nj: u64,
    case: usize,
    honest: Real,
    best: Option<CollusionDeviation>,
}

impl CaseSearch<'_> {
    fn offer(&mut self, offloaded: Vec<Q>, received: Vec<Q>, fractional: bool) {
        let after = coalition_cost(self.profile, self.cost, self.nj, &offloaded, &received);
        let gain = self.honest.sub(&after);
        let gain_f = gain.to_f64();
        if self.best.as_ref().map_or(true, |b| gain_f > b.gain) {
            self.best = Some(CollusionDeviation { case: self.case, offloaded, received, gain: gain_f, fractional });
        }
    }
}

/// Calls `visit` with every way to write `total` as an ordered sum of
/// `parts` non-negative integers.
fn compositions(total: u64, parts: usize, visit: &mut dyn FnMut(&[u64])) {
    fn go(rest: u64, slot: usize, acc: &mut Vec<u64>, visit: &mut dyn FnMut(&[u64])) {
        if slot + 1 == acc.len() {
            acc[slot] = rest;
            visit(acc);
            return;
        }
        for k in 0..=rest {
            acc[slot] = k;
            go(rest - k, slot + 1, acc, visit);
        }
    }
    let mut acc = vec![0; parts];
    go(total, 0, &mut acc, visit);
}

fn offload_vectors(highs: usize, nj: u64, model: CollusionModel) -> Vec<Vec<u64>> {
    match model {
        CollusionModel::FullOffload => vec![vec![nj; highs]],
        CollusionModel::PartialSplits => {
            let mut out = vec![vec![]];
            for _ in 0..highs {
                out = out
                    .into_iter()
                    .flat_map(|v| {
                        (0..=nj).map(move |k| {
                            let mut w = v.clone();
                            w.push(k);
                            w
                        })
                    })
                    .collect();
            }
            out
        }
    }
}

fn to_q(v: &[u64]) -> Vec<Q> {
    v.iter().map(|&k| uint(k)).collect()
}

fn search_case(
    profile: &QualityProfile,
    cost: &CostModel,
    mech: &Mechanism,
    j: usize,
    model: CollusionModel,
    rng: &mut ChaCha8Rng,
) -> CollusionDeviation {
    let m = profile.m();
    let (highs, lows) = (m - j, j);
    let nj = mech.n()[j];
    let honest = Real::Exact(
        cost.at(nj) * (uint(highs as u64) * profile.x_high() + uint(lows as u64) * profile.x_low()),
    );
    let mut search = CaseSearch { profile, cost, nj, case: j + 1, honest, best: None };
    // doing nothing is always available
    search.offer(vec![Q::zero(); highs], vec![Q::zero(); lows], false);

    if m <= 3 {
        for offloaded in offload_vectors(highs, nj, model) {
            let total = offloaded.iter().sum();
            compositions(total, lows, &mut |received| {
                search.offer(to_q(&offloaded), to_q(received), false);
            });
        }
    } else {
        let totals: Vec<u64> = match model {
            CollusionModel::FullOffload => vec![nj * highs as u64],
            CollusionModel::PartialSplits => (0..=nj * highs as u64).collect(),
        };
        for total in totals {
            let t = uint(total);
            search.offer(
                vec![&t / uint(highs as u64); highs],
                vec![&t / uint(lows as u64); lows],
                true,
            );
        }
        for _ in 0..COLLUSION_SAMPLES {
            let offloaded: Vec<u64> = (0..highs)
                .map(|_| match model {
                    CollusionModel::FullOffload => nj,
                    CollusionModel::PartialSplits => rng.gen_range(0..=nj),
                })
                .collect();
            let total: u64 = offloaded.iter().sum();
            let mut cuts: Vec<u64> = (1..lows).map(|_| rng.gen_range(0..=total)).collect();
            cuts.sort_unstable();
            let mut received = Vec::with_capacity(lows);
            let mut prev = 0;
            for c in cuts.into_iter().chain([total]) {
                received.push(c - prev);
                prev = c;
            }
            search.offer(to_q(&offloaded), to_q(&received), false);
        }
    }
    search.best.expect("at least the empty split")
}

/// Searches every unilateral misreport and every collusion split for a
/// profitable deviation from `mech`.
pub fn verify(
    profile: &QualityProfile,
    cost: &CostModel,
    mech: &Mechanism,
    options: &EngineOptions,
) -> Result<DeviationReport> {
    mech.check_profile(profile)?;
    let policy = options.low_deviation_cost;
    let u = |own, report| enumerated_worker_utility(profile, cost, mech, own, report, policy);
    let participation_high = u(Quality::High, Quality::High)?;
    let participation_low = u(Quality::Low, Quality::Low)?;
    let misreport_high = u(Quality::High, Quality::Low)? - &participation_high;
    let misreport_low = u(Quality::Low, Quality::High)? - &participation_low;

    let m = profile.m();
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let collusion: Vec<CollusionDeviation> =
        (1..m).map(|j| search_case(profile, cost, mech, j, options.collusion_model, &mut rng)).collect();
    let collusion_coverage = if m <= 3 { Coverage::Exhaustive } else { Coverage::BoundedSampled };

    let worst_gain = collusion
        .iter()
        .map(|c| c.gain)
        .chain([to_f64(&misreport_high), to_f64(&misreport_low)])
        .fold(f64::NEG_INFINITY, f64::max);
    let eps = epsilon_q();
    let misreport_ok = misreport_high <= eps && misreport_low <= eps;
    let collusion_ok = collusion.iter().all(|c| c.gain <= EPSILON);
    let participation_ok = participation_high >= -&eps && participation_low >= -&eps;
    let verdict = if misreport_ok && collusion_ok && participation_ok { Verdict::Pass } else { Verdict::Fail };
    Ok(DeviationReport {
        verdict,
        worst_gain,
        misreport_high,
        misreport_low,
        participation_high,
        participation_low,
        collusion,
        collusion_coverage,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretPoint {
    #[serde(with = "serde_f64")]
    pub p: Q,
    /// Gain of a high-quality worker who reports low; positive means lying pays.
    #[serde(with = "serde_f64")]
    pub gain: Q,
}

/// High-quality misreport gain at each `p`, for the mechanism `mechanism_at`
/// returns for that `p`.
pub fn regret_curve(
    profile: &QualityProfile,
    cost: &CostModel,
    ps: &[Q],
    policy: LowDeviationCost,
    mut mechanism_at: impl FnMut(&QualityProfile) -> Result<Mechanism>,
) -> Result<Vec<RegretPoint>> {
    ps.iter()
        .map(|p| {
            let at = profile.with_p(p.clone())?;
            let mech = mechanism_at(&at)?;
            let honest = enumerated_worker_utility(&at, cost, &mech, Quality::High, Quality::High, policy)?;
            let lying = enumerated_worker_utility(&at, cost, &mech, Quality::High, Quality::Low, policy)?;
            Ok(RegretPoint { p: p.clone(), gain: lying - honest })
        })
        .collect()
}

/// First `p` bracket `[a, b]` where the regret changes sign from positive to
/// non-positive, interpolated linearly.
pub fn sign_crossing(curve: &[RegretPoint]) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.gain.is_positive() && !b.gain.is_positive() {
            let (pa, pb, ga, gb) = (to_f64(&a.p), to_f64(&b.p), to_f64(&a.gain), to_f64(&b.gain));
            Some(pa + (pb - pa) * ga / (ga - gb))
        } else {
            None
        }
    })
}
