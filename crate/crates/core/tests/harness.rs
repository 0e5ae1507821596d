use bcr_core::harness::{
    compare_objectives, compute_metrics, emit_report, fixtures, run_scenario,
    sweep_cost_replications, sweep_lambda, sweep_rho, HarnessError, MonotoneCheck, Scenario,
    SolveSettings,
};
use bcr_core::instance::{Instance, ShelterKind};
use bcr_core::model::{Assignment, AssignmentPlan, ModelError, ModelOptions, ObjectiveMode};
use bcr_core::oracle::best_plan;
use proptest::prelude::*;

fn assignment(youth: &str, shelter: &str, service: &str, period: usize) -> Assignment {
    Assignment {
        youth: youth.into(),
        shelter: shelter.into(),
        service: service.into(),
        period,
        referral: shelter == "referral",
    }
}

fn exact() -> SolveSettings {
    SolveSettings::exact()
}

#[test]
fn status_quo_costs_only_assignments() {
    let inst = fixtures::toy_two_candidates();
    let r = run_scenario(
        &inst,
        &Scenario::status_quo(&inst, ObjectiveMode::CostMin),
        &exact(),
    )
    .unwrap();
    assert_eq!(r.metrics.shelters_opened, 0);
    assert_eq!(r.metrics.expansion_units, 0);
    let assign = r.metrics.referrals as f64 * inst.cost.assignment_referral
        + r.metrics.in_house as f64 * inst.cost.assignment_in_house;
    assert_eq!(r.metrics.total_cost, assign);
}

#[test]
fn profit_opens_both_needed_candidates_at_every_rho() {
    let inst = fixtures::crowded();
    let rhos: Vec<f64> = (1..=12).map(|k| 0.5 * k as f64).collect();
    for r in sweep_rho(&inst, ObjectiveMode::ProfitMax, 1, &rhos, &exact()).unwrap() {
        assert_eq!(r.metrics.shelters_opened, 2, "rho {}", r.scenario.rho);
    }
}

#[test]
fn ratio_matches_enumeration_on_toys() {
    for inst in [fixtures::toy(), fixtures::toy_two_candidates()] {
        let r = run_scenario(
            &inst,
            &Scenario::new(&inst, ObjectiveMode::RatioMax, 1),
            &exact(),
        )
        .unwrap();
        let best = best_plan(
            &inst,
            &ModelOptions::uniform(&inst, ObjectiveMode::RatioMax, 1),
            1 << 24,
        )
        .unwrap()
        .unwrap();
        assert!(
            (r.metrics.bcr - best.ratio()).abs() <= 1e-6 * best.ratio(),
            "{} vs {}",
            r.metrics.bcr,
            best.ratio()
        );
    }
}

#[test]
fn utilization_from_plan_counts() {
    let inst = fixtures::toy();
    let mut plan = AssignmentPlan {
        assignments: vec![
            assignment("y0", "sq0", "beds", 0),
            assignment("y0", "sq0", "beds", 1),
            assignment("y0", "sq0", "mental_health", 0),
            assignment("y1", "referral", "beds", 1),
        ],
        ..AssignmentPlan::default()
    };
    let m = compute_metrics(&inst, &plan);
    assert_eq!(m.utilization, 0.75);
    assert_eq!(m.referrals + m.in_house, 4);
    assert_eq!(m.total_cost, 3.0 + 20.0);
    assert_eq!(m.bcr, m.total_benefit / m.total_cost);
    for a in &mut plan.assignments {
        a.shelter = "referral".into();
        a.referral = true;
    }
    assert_eq!(compute_metrics(&inst, &plan).utilization, 0.0);
    assert_eq!(compute_metrics(&inst, &plan).total_benefit, 0.0);
    for a in &mut plan.assignments {
        a.shelter = "sq0".into();
        a.referral = false;
    }
    assert_eq!(compute_metrics(&inst, &plan).utilization, 1.0);
}

#[test]
fn lambda_sweep_on_toy_is_nonincreasing() {
    let inst = fixtures::toy_two_candidates();
    let s = exact();
    let rs = sweep_lambda(&inst, ObjectiveMode::RatioMax, &[1, 2], &s).unwrap();
    assert!(rs[1].metrics.bcr <= rs[0].metrics.bcr);
    let check = MonotoneCheck::lambda_bcr(&rs, &s);
    assert!(check.hard && check.holds());
}

#[test]
fn lambda_beyond_candidates_is_reported() {
    let inst = fixtures::toy_two_candidates();
    let err = sweep_lambda(&inst, ObjectiveMode::CostMin, &[1, 3], &exact()).unwrap_err();
    assert!(matches!(
        err,
        HarnessError::Build {
            source: ModelError::InfeasibleLambda { .. },
            ..
        }
    ));
}

#[test]
fn zero_lambda_ratio_is_refused() {
    let inst = fixtures::toy();
    let err = run_scenario(
        &inst,
        &Scenario::new(&inst, ObjectiveMode::RatioMax, 0),
        &exact(),
    )
    .unwrap_err();
    assert!(
        matches!(
            err,
            HarnessError::Build {
                source: ModelError::ZeroAction,
                ..
            }
        ),
        "{err}"
    );
    assert!(err.to_string().contains("ratio_max"));
}

#[test]
fn spare_in_house_capacity_beats_referral() {
    let mut inst = fixtures::toy();
    for o in &mut inst.shelters[1].services {
        o.capacity = vec![5; inst.horizon];
        o.max_capacity = 5;
    }
    let r = run_scenario(
        &inst,
        &Scenario::new(&inst, ObjectiveMode::CostMin, 1),
        &exact(),
    )
    .unwrap();
    assert_eq!(r.metrics.referrals, 0);
}

/// One youth the candidate refuses, so the only plan is a referral plus the
/// required opening.
fn single_point() -> Instance {
    let mut inst = fixtures::toy();
    inst.youth.truncate(1);
    inst.youth[0].requests.truncate(1);
    inst.youth[0].requests[0].frequency = 1;
    inst.youth[0].requests[0].latest = 0;
    inst.youth[0].requests[0].duration = 0;
    inst.youth[0].attributes = vec![true];
    inst.shelters.retain(|s| s.kind != ShelterKind::StatusQuo);
    inst.shelters[1].critical_mass = 0;
    inst
}

#[test]
fn modes_coincide_on_single_point() {
    let inst = single_point();
    let cmp = compare_objectives(&inst, 1, &exact()).unwrap();
    let rows: Vec<_> = cmp
        .rows
        .iter()
        .map(|r| r.result.as_ref().unwrap().metrics.clone())
        .collect();
    assert!(rows.windows(2).all(|w| w[0] == w[1]), "{rows:?}");
    assert!(cmp.all_hold());
}

#[test]
fn comparison_orderings_on_midsize() {
    let inst = fixtures::midsize(1);
    let cmp = compare_objectives(&inst, 2, &exact()).unwrap();
    assert!(cmp.all_hold(), "{}", cmp.table());
    let table = cmp.table();
    assert!(table.contains("ratio_max") && table.contains("utilization"));
}

#[test]
fn cost_replications_move_candidates() {
    let inst = fixtures::toy_two_candidates();
    let rs =
        sweep_cost_replications(&inst, ObjectiveMode::CostMin, &[1], &[0, 1, 2], &exact()).unwrap();
    assert_eq!(rs.len(), 3);
    assert!(rs.iter().all(|r| r.scenario.borough_seed.is_some()));
    let mut replica = inst.clone();
    replica.boroughs.push(bcr_core::instance::Borough {
        name: "Bronx".into(),
        cost_multiplier: 0.789,
    });
    let moved: Vec<Vec<String>> = (0..8)
        .map(|b| {
            let sc = Scenario {
                borough_seed: Some(b),
                ..Scenario::new(&replica, ObjectiveMode::CostMin, 1)
            };
            sc.apply(&replica)
                .candidates()
                .map(|(_, s)| s.borough.clone())
                .collect()
        })
        .collect();
    assert!(moved.iter().any(|m| m.iter().any(|b| b == "Bronx")));
}

#[test]
fn report_files_and_determinism() {
    let inst = fixtures::toy_two_candidates();
    let rs = sweep_lambda(&inst, ObjectiveMode::CostMin, &[0, 1, 2], &exact()).unwrap();
    let mut all = rs.clone();
    all.extend(sweep_lambda(&inst, ObjectiveMode::RatioMax, &[1, 2], &exact()).unwrap());
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let written = emit_report(&all, a.path()).unwrap();
    all.reverse();
    emit_report(&all, b.path()).unwrap();
    for p in &written {
        let rel = p.strip_prefix(a.path()).unwrap();
        assert_eq!(
            std::fs::read(p).unwrap(),
            std::fs::read(b.path().join(rel)).unwrap(),
            "{rel:?}"
        );
    }
    let csv = std::fs::read_to_string(a.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario_id,objective_mode,lambda,rho,delta,num_youth,bcr,total_cost,referrals,utilization,shelters_opened,iterations,wall_time"
    );
    assert_eq!(lines.count(), 5);
    let series = std::fs::read_to_string(a.path().join("series_lambda_cost_min.csv")).unwrap();
    assert_eq!(series.lines().count(), 4);
    assert!(series.lines().next().unwrap().ends_with(",monotone"));
    let ratio = std::fs::read_to_string(a.path().join("series_lambda_ratio_max.csv")).unwrap();
    assert!(ratio.lines().skip(1).all(|l| l.ends_with(",true")));
    assert_eq!(
        std::fs::read_dir(a.path().join("scenarios"))
            .unwrap()
            .count(),
        5
    );
}

#[test]
fn empty_report_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert!(matches!(
        emit_report(&[], &out),
        Err(HarnessError::EmptyResults)
    ));
    assert!(!out.exists());
}

#[test]
fn wall_time_only_when_requested() {
    let inst = fixtures::toy();
    let sc = Scenario::new(&inst, ObjectiveMode::CostMin, 1);
    assert!(run_scenario(&inst, &sc, &exact())
        .unwrap()
        .stats
        .wall_time_secs
        .is_none());
    let timed = SolveSettings {
        timings: true,
        ..exact()
    };
    assert!(run_scenario(&inst, &sc, &timed)
        .unwrap()
        .stats
        .wall_time_secs
        .is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn metric_invariants_on_tiny(seed in 0u64..10_000, mode in 0usize..4) {
        let inst = fixtures::tiny(seed);
        let mode = ObjectiveMode::ALL[mode];
        let r = run_scenario(&inst, &Scenario::new(&inst, mode, 1), &exact()).unwrap();
        let m = &r.metrics;
        prop_assert!((0.0..=1.0).contains(&m.utilization));
        prop_assert_eq!(m.bcr, m.total_benefit / m.total_cost);
        let requested: usize = inst.youth.iter().flat_map(|y| &y.requests).map(|q| q.frequency).sum();
        prop_assert_eq!(m.referrals + m.in_house, requested);
        prop_assert!(m.total_cost >= inst.cost.assignment_in_house);
    }
}
