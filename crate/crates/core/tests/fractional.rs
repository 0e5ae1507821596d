use bcr_core::fractional::{
    evaluate_ratio, maximize_ratio, parametric_value, AffineForm, FractionalModel, RatioStatus,
    DEFAULT_MAX_ITER,
};
use bcr_core::lp::{LinearProgram, Relation, Sense};
use bcr_core::mip::{
    for_each_integer_point, MipConfig, MixedIntegerProgram, DEFAULT_ENUMERATION_CAP,
};
use bcr_core::tolerance::ToleranceConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn enumerate_best_ratio(fm: &FractionalModel) -> Option<f64> {
    let tol = ToleranceConfig::default();
    let mut best: Option<f64> = None;
    for_each_integer_point(&fm.constraints, DEFAULT_ENUMERATION_CAP, |x| {
        if fm.constraints.base.max_violation(x) <= tol.feasibility {
            let r = fm.benefit.eval(x) / fm.cost.eval(x);
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    })
    .unwrap();
    best
}

fn random_model(seed: u64) -> FractionalModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=10);
    let mut lp = LinearProgram::new(n, Sense::Maximize);
    for _ in 0..rng.gen_range(1..=5) {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.5) {
                coeffs.push((j, rng.gen_range(-3..=4) as f64));
            }
        }
        if rng.gen_bool(0.5) {
            lp.add_constraint(coeffs, Relation::Le, rng.gen_range(1..=6) as f64);
        } else {
            lp.add_constraint(coeffs, Relation::Ge, rng.gen_range(-3..=2) as f64);
        }
    }
    let benefit = AffineForm::new(
        (0..n).map(|_| rng.gen_range(-4..=20) as f64).collect(),
        rng.gen_range(0..=5) as f64,
    );
    let cost = AffineForm::new(
        (0..n).map(|_| rng.gen_range(0..=9) as f64).collect(),
        rng.gen_range(1..=6) as f64,
    );
    FractionalModel {
        constraints: MixedIntegerProgram::all_binary(lp),
        benefit,
        cost,
    }
}

#[test]
fn equal_forms_give_unit_ratio() {
    let mut lp = LinearProgram::new(3, Sense::Maximize);
    lp.add_constraint(vec![(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Ge, 1.0);
    let form = AffineForm::new(vec![2.0, 5.0, 1.0], 3.0);
    let fm = FractionalModel {
        constraints: MixedIntegerProgram::all_binary(lp),
        benefit: form.clone(),
        cost: form,
    };
    let sol = maximize_ratio(&fm, None, &MipConfig::exact(), DEFAULT_MAX_ITER).unwrap();
    assert!((sol.q_star - 1.0).abs() < 1e-12);
    assert!(sol.iterations.len() <= 2);
}

#[test]
fn three_point_example() {
    let mut lp = LinearProgram::new(2, Sense::Maximize);
    lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 1.0);
    let fm = FractionalModel {
        constraints: MixedIntegerProgram::all_binary(lp),
        benefit: AffineForm::new(vec![3.0, 2.0], 0.0),
        cost: AffineForm::new(vec![1.0, 1.0], 1.0),
    };
    let mut ratios = Vec::new();
    for_each_integer_point(&fm.constraints, 16.0, |x| {
        if fm.constraints.base.max_violation(x) == 0.0 {
            ratios.push(fm.benefit.eval(x) / fm.cost.eval(x));
        }
    })
    .unwrap();
    ratios.sort_by(f64::total_cmp);
    assert_eq!(ratios, vec![1.0, 1.5, 5.0 / 3.0]);
    let sol = maximize_ratio(&fm, None, &MipConfig::exact(), DEFAULT_MAX_ITER).unwrap();
    assert_eq!(sol.q_star, 5.0 / 3.0);
    assert_eq!(sol.x_star, vec![1.0, 1.0]);
}

#[test]
fn random_models_match_enumeration_and_are_monotone() {
    let cfg = MipConfig::exact();
    let mut solved = 0;
    for seed in 0..60 {
        let fm = random_model(seed);
        let Some(best) = enumerate_best_ratio(&fm) else {
            continue;
        };
        let sol = maximize_ratio(&fm, None, &cfg, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(sol.status, RatioStatus::Converged);
        assert!(
            (sol.q_star - best).abs() <= 1e-6 * best.abs().max(1.0),
            "seed {seed}: {} vs {best}",
            sol.q_star
        );
        let q = sol.q_sequence();
        assert!(q.windows(2).all(|w| w[1] > w[0]), "seed {seed}: {q:?}");
        assert!(sol.iterations.last().unwrap().f_value < sol.epsilon);
        let r = evaluate_ratio(&fm, &sol.x_star, &cfg.tolerances).unwrap();
        assert!((r - sol.q_star).abs() <= 1e-9 * r.abs().max(1.0));
        assert_eq!(sol.best_ratio, sol.q_star);
        assert!(sol.warnings.is_empty());
        solved += 1;
    }
    assert!(solved >= 30, "only {solved} feasible models");
}

#[test]
fn unit_parameter_is_profit() {
    let fm = random_model(5);
    let mut profit = fm.constraints.clone();
    profit.base.sense = Sense::Maximize;
    profit.base.objective = fm
        .benefit
        .coeffs
        .iter()
        .zip(&fm.cost.coeffs)
        .map(|(b, c)| b - c)
        .collect();
    profit.base.objective_offset = fm.benefit.constant - fm.cost.constant;
    assert_eq!(fm.parametric_program(1.0), profit);
}

#[test]
fn infeasible_model_is_reported() {
    let mut lp = LinearProgram::new(2, Sense::Maximize);
    lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 3.0);
    let fm = FractionalModel {
        constraints: MixedIntegerProgram::all_binary(lp),
        benefit: AffineForm::new(vec![1.0, 1.0], 0.0),
        cost: AffineForm::new(vec![1.0, 1.0], 1.0),
    };
    assert!(matches!(
        maximize_ratio(&fm, None, &MipConfig::exact(), DEFAULT_MAX_ITER),
        Err(bcr_core::fractional::FractionalError::InfeasibleModel)
    ));
}

#[test]
fn iteration_limit_keeps_best_so_far() {
    let fm = random_model(3);
    if enumerate_best_ratio(&fm).is_none() {
        return;
    }
    match maximize_ratio(&fm, Some(1e-300), &MipConfig::exact(), 1) {
        Err(bcr_core::fractional::FractionalError::IterationLimit(sol)) => {
            assert_eq!(sol.iterations.len(), 1);
            assert!(sol.best_ratio.is_finite());
        }
        Ok(sol) => assert!(sol.iterations.len() <= 1),
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parametric_value_decreases_in_q(seed in 0u64..10_000, q in 0.0f64..10.0, dq in 0.0f64..5.0) {
        let fm = random_model(seed);
        let cfg = MipConfig::exact();
        if let (Some(a), Some(b)) = (parametric_value(&fm, q, &cfg).unwrap(), parametric_value(&fm, q + dq, &cfg).unwrap()) {
            prop_assert!(b <= a + 1e-9 * a.abs().max(1.0));
        }
    }
}
