//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Nothing here calls into the constraint engine or the
//! LP solver.

#![allow(dead_code)]

use mechproof::model::{CostModel, Instance, QualityProfile, RevenueModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The three convex cost families used by the randomized checks.
pub const COSTS: [&str; 3] = ["exp2", "square", "cube"];

pub fn cost_model(name: &str) -> CostModel {
    match name {
        "exp2" => CostModel::Exp2Minus1,
        "square" => CostModel::Power { exponent: 2.0 },
        "cube" => CostModel::Power { exponent: 3.0 },
        other => panic!("unknown cost {other}"),
    }
}

pub fn cost_f64(name: &str, x: f64) -> f64 {
    match name {
        "exp2" => x.exp2() - 1.0,
        "square" => x * x,
        "cube" => x * x * x,
        other => panic!("unknown cost {other}"),
    }
}

#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub m: usize,
    pub p: f64,
    pub x_high: f64,
    pub x_low: f64,
    pub cost: &'static str,
}

impl RandomInstance {
    /// `p` in (0.05, 0.95), `x_low` in [1, 20], `x_high` in (x_low, x_low + 80],
    /// all rounded to two decimals so the exact model sees short fractions.
    pub fn draw(rng: &mut ChaCha8Rng, ms: &[usize]) -> Self {
        let round = |v: f64| (v * 100.0).round() / 100.0;
        let m = ms[rng.gen_range(0..ms.len())];
        let p = round(rng.gen_range(0.06..0.94));
        let x_low = round(rng.gen_range(1.0..=20.0));
        let x_high = round(x_low + rng.gen_range(0.01..=80.0)).max(x_low + 0.01);
        let cost = COSTS[rng.gen_range(0..COSTS.len())];
        RandomInstance { m, p, x_high, x_low, cost }
    }

    pub fn instance(&self) -> Instance {
        let profile = QualityProfile::from_f64(self.m, self.p, self.x_high, self.x_low).expect("valid profile");
        Instance::new(profile, cost_model(self.cost), RevenueModel::QuadraticQualityWeighted).expect("valid instance")
    }
}

/// `a · t >= b` over `(t_1, t_2, t_3)`.
pub type Row = ([f64; 3], f64);

/// Two-worker IR_HIGH, IR_LOW, IC_HIGH, IC_LOW rows, written from the point of
/// view of one worker who averages over the other worker's type. Every row is
/// weighted by the probability of the worker's own type. A low-quality liar
/// pays his own cost.
pub fn two_worker_rows(inst: &RandomInstance, n: [u64; 3]) -> [Row; 4] {
    let (p, q) = (inst.p, 1.0 - inst.p);
    let (xh, xl) = (inst.x_high, inst.x_low);
    let f = |k: u64| cost_f64(inst.cost, k as f64);
    let nf = |k: u64| k as f64;
    // Case index the worker lands in: 0 = both high, 1 = mixed, 2 = both low.
    // (weight, case, claimed quality, own quality) for each situation.
    let expect = |terms: &[(f64, usize, f64, f64)]| -> ([f64; 3], f64) {
        let mut a = [0.0; 3];
        let mut c = 0.0;
        for &(w, j, claimed, own) in terms {
            a[j] += w;
            c += w * (nf(n[j]) * claimed - f(n[j]) * own);
        }
        (a, c)
    };
    let honest_high = expect(&[(p * p, 0, xh, xh), (p * q, 1, xh, xh)]);
    let honest_low = expect(&[(q * p, 1, xl, xl), (q * q, 2, xl, xl)]);
    let lying_high = expect(&[(p * p, 1, xl, xh), (p * q, 2, xl, xh)]);
    let lying_low = expect(&[(q * p, 0, xh, xl), (q * q, 1, xh, xl)]);
    let diff = |x: &([f64; 3], f64), y: &([f64; 3], f64)| -> Row {
        ([x.0[0] - y.0[0], x.0[1] - y.0[1], x.0[2] - y.0[2]], -(x.1 - y.1))
    };
    [
        (honest_high.0, -honest_high.1),
        (honest_low.0, -honest_low.1),
        diff(&honest_high, &lying_high),
        diff(&honest_low, &lying_low),
    ]
}

pub fn case_probs_two(p: f64) -> [f64; 3] {
    [p * p, 2.0 * p * (1.0 - p), (1.0 - p) * (1.0 - p)]
}

/// Minimum of `c · t` over `{t : rows}` by a dense lattice search over
/// `(t_1, t_2)` followed by repeated local refinement; `t_3` is solved exactly
/// on each lattice point (an interval of admissible values, whose cheaper end
/// is taken). Needs `c_3 > 0`.
///
/// A lattice point counts as feasible when the rows hold up to a tolerance
/// proportional to the spacing, which always admits the lattice point nearest
/// to a feasible point. The lattice is refined fourfold around the best points
/// until the spacing drops below `1e-9`. The search box is doubled while the
/// best point sits on its edge and the value still improves. Returns `None`
/// when no lattice point stays feasible down to the finest spacing.
pub fn grid_minimum(rows: &[Row], c: &[f64; 3]) -> Option<f64> {
    assert!(c[2] > 0.0);
    let scale = rows.iter().map(|r| r.1.abs()).fold(1.0, f64::max);
    let max_coeff = rows.iter().flat_map(|r| r.0.iter().copied()).fold(0.0, |acc: f64, v| acc.max(v.abs()));
    let min_coeff = rows
        .iter()
        .flat_map(|r| r.0.iter().copied())
        .filter(|v| v.abs() > 1e-6 * max_coeff)
        .fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    let mut half_width = 4.0 * scale / min_coeff;
    let mut previous: Option<f64> = None;
    for _ in 0..12 {
        if let Some((value, t, coarse)) = boxed_grid_minimum(rows, c, half_width) {
            let inside = t.iter().take(2).all(|v| v.abs() < half_width - 2.0 * coarse);
            // An optimal face may run off to infinity; then the value stops improving.
            let settled = previous.is_some_and(|p| p - value <= 1e-9 * value.abs().max(1.0));
            if inside || settled {
                return Some(value);
            }
            previous = Some(value);
        }
        half_width *= 2.0;
    }
    None
}

const SEEDS: usize = 16;
const COARSE_STEPS: i64 = 200;
const FINE_STEPS: i64 = 16;

/// Cheapest admissible `t_3` at `(t_1, t_2)` with tolerance scale `h`.
fn best_t3(rows: &[Row], t1: f64, t2: f64, h: f64) -> Option<[f64; 3]> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut slack = 0.0f64;
    for (a, b) in rows {
        let rest = b - a[0] * t1 - a[1] * t2;
        let planar = a[0].abs() + a[1].abs();
        if a[2].abs() <= 1e-12 * planar.max(1.0) {
            if rest > h * planar {
                return None;
            }
        } else {
            let bound = rest / a[2];
            slack = slack.max(planar / a[2].abs());
            if a[2] > 0.0 {
                lo = lo.max(bound);
            } else {
                hi = hi.min(bound);
            }
        }
    }
    if !lo.is_finite() || lo > hi + 2.0 * h * slack {
        return None;
    }
    Some([t1, t2, lo])
}

fn boxed_grid_minimum(rows: &[Row], c: &[f64; 3], half_width: f64) -> Option<(f64, [f64; 3], f64)> {
    let mut h = half_width / COARSE_STEPS as f64;
    let mut seeds: Vec<(f64, [f64; 3])> = Vec::new();
    for i in -COARSE_STEPS..=COARSE_STEPS {
        for j in -COARSE_STEPS..=COARSE_STEPS {
            if let Some(t) = best_t3(rows, i as f64 * h, j as f64 * h, h) {
                seeds.push((dot(c, &t), t));
            }
        }
    }
    keep_best(&mut seeds);
    if seeds.is_empty() {
        return None;
    }
    let coarse = h;
    while h > 1e-9 {
        let fine = h / 4.0;
        let mut next = Vec::new();
        for (_, s) in &seeds {
            for i in -FINE_STEPS..=FINE_STEPS {
                for j in -FINE_STEPS..=FINE_STEPS {
                    let (t1, t2) = (s[0] + i as f64 * fine, s[1] + j as f64 * fine);
                    if t1.abs() > half_width || t2.abs() > half_width {
                        continue;
                    }
                    if let Some(t) = best_t3(rows, t1, t2, fine) {
                        next.push((dot(c, &t), t));
                    }
                }
            }
        }
        keep_best(&mut next);
        if next.is_empty() {
            // Only the coarse tolerance admitted these points.
            return None;
        }
        seeds = next;
        h = fine;
    }
    let (value, t) = seeds[0];
    Some((value, t, coarse))
}

fn dot(a: &[f64; 3], t: &[f64; 3]) -> f64 {
    a[0] * t[0] + a[1] * t[1] + a[2] * t[2]
}

fn keep_best(points: &mut Vec<(f64, [f64; 3])>) {
    let norm = |t: &[f64; 3]| t.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()));
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| norm(&a.1).total_cmp(&norm(&b.1))));
    points.dedup_by(|a, b| a.1 == b.1);
    points.truncate(SEEDS);
}

/// Cost of an integer collusion plan in a three-worker mixed case: each
/// high-quality worker keeps `n - give_i` tasks, each low-quality worker does
/// `n + take_i`.
pub fn plan_cost(cost: &str, n: u64, x_high: f64, x_low: f64, give: &[u64], take: &[u64]) -> f64 {
    give.iter().map(|&g| cost_f64(cost, (n - g) as f64) * x_high).sum::<f64>()
        + take.iter().map(|&k| cost_f64(cost, (n + k) as f64) * x_low).sum::<f64>()
}
