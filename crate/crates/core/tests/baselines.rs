mod common;

use common::instance;
use fronthaul_core::allocation::{BitAllocation, Objective};
use fronthaul_core::baselines::{
    ap_exhaustive, comparator_params, equal_allocation, full_exhaustive, run_metaheuristic, BudgetMode,
    Metaheuristic, StageParams,
};
use fronthaul_core::evaluator::{Evaluator, Problem};
use fronthaul_core::hs::{run_stage1, HsParams};
use fronthaul_core::quantization::QuantizationProfile;
use fronthaul_core::rng::seeded;
use fronthaul_core::search::DEFAULT_ENUMERATION_CAP;

const ALL: [Metaheuristic; 5] = [
    Metaheuristic::Ga,
    Metaheuristic::GaElitist,
    Metaheuristic::Pso,
    Metaheuristic::Pso10,
    Metaheuristic::Sa,
];

#[test]
fn equal_split_examples() {
    let (mut c, stats) = instance(4, 8, 4, 1);
    let profile = QuantizationProfile::default();
    for (budget, bits) in [(64, 2), (63, 1), (0, 0)] {
        c.bit_budget = budget;
        let a = equal_allocation(&Problem::new(&stats, &c, &profile, Objective::Total));
        assert!(a.as_flat().iter().all(|&b| b == bits), "b_max={budget}");
        assert!(a.total() <= u64::from(budget));
    }
}

#[test]
fn ap_exhaustive_counts() {
    let profile = QuantizationProfile::default();
    let (mut c, stats) = instance(2, 2, 4, 2);
    c.bit_budget = 4; // B = 2
    let r = ap_exhaustive(&Problem::new(&stats, &c, &profile, Objective::Total), DEFAULT_ENUMERATION_CAP).unwrap();
    assert_eq!((r.enumerated, r.stars_and_bars), (6, 6));

    let (mut c, stats) = instance(4, 4, 4, 3);
    c.bit_budget = 32; // B = 8
    let r = ap_exhaustive(&Problem::new(&stats, &c, &profile, Objective::Total), DEFAULT_ENUMERATION_CAP).unwrap();
    assert_eq!((r.enumerated, r.stars_and_bars), (495, 495));
}

#[test]
fn exhaustive_refuses_over_cap() {
    let (c, stats) = instance(4, 8, 4, 3);
    let profile = QuantizationProfile::default();
    let problem = Problem::new(&stats, &c, &profile, Objective::Total);
    assert!(ap_exhaustive(&problem, 10).is_err());
    assert!(full_exhaustive(&problem, DEFAULT_ENUMERATION_CAP).is_err());
}

#[test]
fn single_link_takes_every_bit() {
    let (mut c, stats) = instance(1, 1, 4, 4);
    c.bit_budget = 3;
    let profile = QuantizationProfile::default();
    let r = full_exhaustive(&Problem::new(&stats, &c, &profile, Objective::Total), DEFAULT_ENUMERATION_CAP).unwrap();
    assert_eq!(r.enumerated, 4);
    assert_eq!(r.allocation.get(0, 0), 3);
}

#[test]
fn two_link_exhaustive_matches_hand_enumeration() {
    let (mut c, stats) = instance(2, 1, 4, 5);
    c.bit_budget = 2;
    let profile = QuantizationProfile::default();
    let problem = Problem::new(&stats, &c, &profile, Objective::Total);
    let r = full_exhaustive(&problem, DEFAULT_ENUMERATION_CAP).unwrap();
    assert_eq!(r.enumerated, 6);
    let mut best = f64::NEG_INFINITY;
    for a in 0..=2u32 {
        for b in 0..=2 - a {
            let v = problem.report(&BitAllocation::from_flat(2, 1, vec![a, b]).unwrap()).unwrap().value();
            best = best.max(v);
        }
    }
    assert_eq!(r.best_eval, best);
}

#[test]
fn ap_exhaustive_bounds_stage1() {
    let profile = QuantizationProfile::default();
    for seed in 0..20 {
        let (c, stats) = instance(4, 8, 4, 100 + seed);
        let problem = Problem::new(&stats, &c, &profile, Objective::Total);
        let ex = ap_exhaustive(&problem, DEFAULT_ENUMERATION_CAP).unwrap();
        let s1 = run_stage1(&mut Evaluator::new(problem), &HsParams::stage1_default(), &mut seeded(seed)).unwrap();
        assert!(s1.best_eval <= ex.best_eval * (1.0 + 1e-12));
    }
}

#[test]
fn matched_budgets_equal_hs_counts() {
    let (h1, h2) = (HsParams::stage1_default(), HsParams::stage2_default());
    for kind in [Metaheuristic::Ga, Metaheuristic::Pso, Metaheuristic::Sa] {
        let (p1, p2) = comparator_params(kind, BudgetMode::MatchedEvaluations, &h1, &h2, 4);
        assert_eq!(p1.evaluations(), 40, "{}", kind.name());
        assert_eq!(p2.evaluations(), 120, "{}", kind.name());
    }
    let tab = |k| {
        let (a, b) = comparator_params(k, BudgetMode::Tabulated, &h1, &h2, 4);
        (a.evaluations(), b.evaluations())
    };
    assert_eq!(tab(Metaheuristic::Ga), (40, 85));
    assert_eq!(tab(Metaheuristic::GaElitist), (1360, 805));
    assert_eq!(tab(Metaheuristic::Pso), (40, 85));
    assert_eq!(tab(Metaheuristic::Pso10), (310, 805));
    assert_eq!(tab(Metaheuristic::Sa), (41, 101));
    assert!(matches!(
        comparator_params(Metaheuristic::GaElitist, BudgetMode::MatchedEvaluations, &h1, &h2, 4).0,
        StageParams::Ga(_)
    ));
}

#[test]
fn comparators_are_feasible_and_counted() {
    let (c, stats) = instance(4, 8, 4, 7);
    let profile = QuantizationProfile::default();
    let (h1, h2) = (HsParams::stage1_default(), HsParams::stage2_default());
    for objective in [Objective::Total, Objective::MaxMin] {
        let problem = Problem::new(&stats, &c, &profile, objective);
        let equal = problem.report(&equal_allocation(&problem)).unwrap().value();
        for kind in ALL {
            for mode in [BudgetMode::MatchedEvaluations, BudgetMode::Tabulated] {
                let (p1, p2) = comparator_params(kind, mode, &h1, &h2, 4);
                let mut eval = Evaluator::new(problem).with_log();
                let out = run_metaheuristic(&mut eval, &p1, &p2, &mut seeded(3)).unwrap();
                assert_eq!(out.stage1.evaluations, p1.evaluations(), "{}", kind.name());
                assert_eq!(out.stage2.evaluations, p2.evaluations(), "{}", kind.name());
                for a in eval.log().unwrap() {
                    a.check_feasible(c.bit_budget, profile.max_bits()).unwrap();
                }
                let s1 = &out.stage1.best;
                assert!(s1.iter().sum::<u32>() <= problem.stage1_budget());
                for (m, &b) in s1.iter().enumerate() {
                    assert!(out.stage2.allocation.ap_total(m) <= 8 * u64::from(b));
                }
                assert!(out.stage1.best_eval >= equal);
                assert!(out.stage2.best_eval >= out.stage1.best_eval);
                let report = problem.report(&out.stage2.allocation).unwrap().value();
                assert_eq!(report, out.stage2.best_eval);
            }
        }
    }
}

#[test]
fn comparators_are_deterministic() {
    let (c, stats) = instance(4, 4, 4, 8);
    let profile = QuantizationProfile::default();
    let problem = Problem::new(&stats, &c, &profile, Objective::Total);
    let (h1, h2) = (HsParams::stage1_default(), HsParams::stage2_default());
    for kind in ALL {
        let (p1, p2) = comparator_params(kind, BudgetMode::MatchedEvaluations, &h1, &h2, 4);
        let run = || run_metaheuristic(&mut Evaluator::new(problem), &p1, &p2, &mut seeded(21)).unwrap();
        assert_eq!(run(), run(), "{}", kind.name());
    }
}
