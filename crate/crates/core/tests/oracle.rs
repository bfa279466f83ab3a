mod common;

use common::{case_probs_two, cost_f64, grid_minimum, two_worker_rows, RandomInstance};
use mechproof::constraints::{build_rows, RowLabel};
use mechproof::exact::to_f64;
use mechproof::lp::LpStatus;
use mechproof::optimizer::{optimize, solve_allocation, SearchConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LABELS: [RowLabel; 4] = [RowLabel::IrHigh, RowLabel::IrLow, RowLabel::IcHigh, RowLabel::IcLow];

fn random_n(rng: &mut ChaCha8Rng, n_max: u64) -> [u64; 3] {
    [rng.gen_range(1..=n_max), rng.gen_range(1..=n_max), rng.gen_range(1..=n_max)]
}

#[test]
fn engine_rows_match_enumerated_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let inst = RandomInstance::draw(&mut rng, &[2]);
        let n = random_n(&mut rng, 10);
        let system = build_rows(&inst.instance().profile, &inst.instance().cost, &n, &Default::default()).unwrap();
        for (label, (a, b)) in LABELS.iter().zip(two_worker_rows(&inst, n)) {
            let row = system.row(*label);
            let tol = 1e-9 * b.abs().max(1.0);
            assert!((to_f64(&row.rhs) - b).abs() <= tol, "{label:?} rhs {} vs {b} for {inst:?} n={n:?}", to_f64(&row.rhs));
            for (x, y) in row.coeffs.iter().zip(a) {
                assert!((to_f64(x) - y).abs() <= 1e-12, "{label:?} coeffs {:?} vs {a:?}", row.coeffs);
            }
        }
    }
}

#[test]
fn lp_optimum_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let config = SearchConfig::default();
    let mut compared = 0;
    while compared < 15 {
        let inst = RandomInstance::draw(&mut rng, &[2]);
        let n = random_n(&mut rng, 6);
        let (_, out) = solve_allocation(&inst.instance(), &n, &config).unwrap();
        let oracle = grid_minimum(&two_worker_rows(&inst, n), &case_probs_two(inst.p));
        match out.status {
            LpStatus::Optimal => {
                let lp = to_f64(out.objective.as_ref().unwrap());
                let grid = oracle.expect("grid finds a feasible point");
                assert!((lp - grid).abs() <= 1e-6 * lp.abs().max(1.0), "{inst:?} n={n:?}: lp {lp} grid {grid}");
                compared += 1;
            }
            LpStatus::Infeasible => assert!(oracle.is_none(), "{inst:?} n={n:?}: grid found {oracle:?}"),
            LpStatus::Unbounded => panic!("two-worker LP is bounded below"),
        }
    }
}

/// Two-worker optimum rebuilt from the enumerated rows, the grid search and
/// the full-offload collusion test.
fn oracle_optimum(inst: &RandomInstance, n_max: u64) -> Option<f64> {
    let probs = case_probs_two(inst.p);
    let mass = [2.0 * inst.x_high, inst.x_high + inst.x_low, 2.0 * inst.x_low];
    let f = |k: u64| cost_f64(inst.cost, k as f64);
    let mut best: Option<f64> = None;
    for n1 in 1..=n_max {
        for n2 in 1..=n_max {
            if f(n2) * (inst.x_high + inst.x_low) > f(2 * n2) * inst.x_low {
                continue;
            }
            for n3 in 1..=n_max {
                let n = [n1, n2, n3];
                let Some(pay) = grid_minimum(&two_worker_rows(inst, n), &probs) else { continue };
                let surplus: f64 =
                    (0..3).map(|j| probs[j] * mass[j] * ((n[j] * n[j]) as f64 - n[j] as f64)).sum();
                let u = surplus - 2.0 * pay;
                if best.map_or(true, |b| u > b) {
                    best = Some(u);
                }
            }
        }
    }
    best
}

#[test]
fn optimum_at_high_p_matches_oracle_search() {
    for x_high in [5.0, 13.0] {
        let inst = RandomInstance { m: 2, p: 0.9, x_high, x_low: 1.0, cost: "exp2" };
        let report = optimize(&inst.instance(), &SearchConfig { n_max: 5, ..SearchConfig::default() }).unwrap();
        let exact = to_f64(&report.utility);
        let oracle = oracle_optimum(&inst, 5).unwrap();
        assert!((exact - oracle).abs() <= 1e-6 * exact.abs().max(1.0), "x_high={x_high}: {exact} vs {oracle}");
    }
}
