use std::collections::HashMap;

use bcr_core::harness::fixtures;
use bcr_core::instance::{Instance, ShelterKind};
use bcr_core::mip::{solve_mip, MipConfig, MipStatus};
use bcr_core::model::{
    build_model, decode, encode, youth_benefit, BuiltModel, ModelError, ModelOptions,
    ObjectiveMode, VariableKey, VariableKind,
};
use bcr_core::oracle::{best_plan, enumerate_plans, OraclePlan};
use bcr_core::tolerance::ToleranceConfig;

const FAMILIES: [&str; 11] = [
    "capacity",
    "single_provider",
    "provider_link",
    "start_window",
    "exact_count",
    "periodic_count",
    "periodic_once",
    "min_open",
    "critical_mass",
    "open_link",
    "ever_assigned",
];

/// Solution vector for an enumerated plan: provider shares at their lower
/// limit, minimal expansion, every placement indicator set.
fn to_x(inst: &Instance, built: &BuiltModel, plan: &OraclePlan) -> Vec<f64> {
    let mut x = vec![0.0; built.num_vars()];
    let mut load: HashMap<(usize, usize, usize), u32> = HashMap::new();
    for &(y, s, i, t) in &plan.provisions {
        x[built
            .index
            .get(&VariableKey::x(y, s, i, t))
            .expect("X column")] = 1.0;
        x[built.index.get(&VariableKey::u(y, s, i)).expect("U column")] +=
            1.0 / inst.horizon as f64;
        *load.entry((s, i, t)).or_default() += 1;
    }
    for &s in &plan.opened {
        x[built.index.get(&VariableKey::nu(s)).expect("nu column")] = 1.0;
    }
    for (col, key) in built.index.keys().iter().enumerate() {
        if key.kind == VariableKind::Pi {
            x[col] = 1.0;
        }
    }
    for (&(s, i, t), &n) in &load {
        let sh = &inst.shelters[s];
        if sh.kind == ShelterKind::Referral {
            continue;
        }
        let cap = sh.offers(&inst.services[i].name).unwrap().capacity[t];
        if n > cap {
            x[built.index.get(&VariableKey::e(s, i, t)).expect("E column")] = (n - cap) as f64;
        }
    }
    x
}

#[test]
fn toy_has_every_family_within_bounds() {
    let inst = fixtures::toy_two_candidates();
    let built = build_model(
        &inst,
        &ModelOptions::uniform(&inst, ObjectiveMode::RatioMax, 1),
    )
    .unwrap();
    let c = &built.counts;
    assert!(c.within_bounds(), "{c:?}");
    for f in FAMILIES {
        assert!(c.family(f) >= 1, "family {f} missing");
    }
    assert!(c.num_x < c.unpruned_x);
    assert_eq!(c.num_vars, built.num_vars());
}

#[test]
fn generated_models_respect_count_bounds() {
    for seed in 0..15 {
        let inst = fixtures::tiny(seed);
        for mode in ObjectiveMode::ALL {
            let built = build_model(&inst, &ModelOptions::uniform(&inst, mode, 1)).unwrap();
            assert!(
                built.counts.within_bounds(),
                "seed {seed}: {:?}",
                built.counts
            );
            assert!(built.counts.num_x < built.counts.unpruned_x);
        }
    }
    let inst = fixtures::midsize(0);
    let built = build_model(
        &inst,
        &ModelOptions::uniform(&inst, ObjectiveMode::RatioMax, 2),
    )
    .unwrap();
    assert!(built.counts.within_bounds());
}

#[test]
fn every_enumerated_plan_is_feasible_in_the_model() {
    let tol = ToleranceConfig::default();
    for seed in 0..10 {
        let inst = fixtures::tiny(seed);
        let opts = ModelOptions::uniform(&inst, ObjectiveMode::ProfitMax, 1);
        let built = build_model(&inst, &opts).unwrap();
        let mut checked = 0u32;
        enumerate_plans(&inst, &opts, 1 << 22, |p| {
            if checked < 2000 {
                let x = to_x(&inst, &built, p);
                assert!(built.mip.is_feasible(&x, &tol), "seed {seed}: plan {p:?}");
                assert!((built.benefit(&x) - p.benefit).abs() < 1e-6 * p.benefit.max(1.0));
                assert!((built.cost(&x) - p.cost).abs() < 1e-6 * p.cost);
                checked += 1;
            }
        })
        .unwrap();
        assert!(checked > 0);
    }
}

#[test]
fn mip_optimum_matches_enumeration_for_each_mode() {
    for seed in 0..8 {
        let inst = fixtures::tiny(seed);
        for mode in [
            ObjectiveMode::BenefitMax,
            ObjectiveMode::CostMin,
            ObjectiveMode::ProfitMax,
        ] {
            let opts = ModelOptions::uniform(&inst, mode, 1);
            let built = build_model(&inst, &opts).unwrap();
            let sol = solve_mip(&built.mip, &MipConfig::exact()).unwrap();
            assert_eq!(sol.status, MipStatus::Optimal);
            let best = best_plan(&inst, &opts, 1 << 24).unwrap().unwrap();
            let want = match mode {
                ObjectiveMode::CostMin => best.cost,
                m => best.score(m),
            };
            assert!(
                (sol.objective_value - want).abs() <= 1e-6 * want.abs().max(1.0),
                "seed {seed} {mode}: {} vs {want}",
                sol.objective_value
            );
        }
    }
}

#[test]
fn status_quo_plans_cost_only_assignments() {
    let inst = fixtures::toy_two_candidates();
    let opts = ModelOptions::status_quo(&inst, ObjectiveMode::CostMin);
    let built = build_model(&inst, &opts).unwrap();
    for (col, key) in built.index.keys().iter().enumerate() {
        if matches!(key.kind, VariableKind::Nu | VariableKind::E) {
            assert_eq!(built.mip.base.upper[col], 0.0);
        }
    }
    let r = &inst.cost;
    let n = enumerate_plans(&inst, &opts, 1 << 20, |p| {
        assert!(p.opened.is_empty() && p.expansion_units == 0);
        let assign =
            p.referrals as f64 * r.assignment_referral + p.in_house as f64 * r.assignment_in_house;
        assert_eq!(p.cost, assign);
    })
    .unwrap();
    assert!(n > 0);
}

#[test]
fn lambda_at_candidate_count_opens_all() {
    let inst = fixtures::toy_two_candidates();
    let opts = ModelOptions::uniform(&inst, ObjectiveMode::CostMin, 2);
    let built = build_model(&inst, &opts).unwrap();
    let n = enumerate_plans(&inst, &opts, 1 << 22, |p| assert_eq!(p.opened.len(), 2)).unwrap();
    assert!(n > 0);
    let sol = solve_mip(&built.mip, &MipConfig::exact()).unwrap();
    let plan = decode(&inst, &built, sol.incumbent.as_ref().unwrap()).unwrap();
    assert_eq!(plan.opened, vec!["new0".to_string(), "new1".to_string()]);
    let too_many = ModelOptions::uniform(&inst, ObjectiveMode::CostMin, 3);
    assert!(matches!(
        build_model(&inst, &too_many),
        Err(ModelError::InfeasibleLambda { .. })
    ));
}

#[test]
fn ratio_without_required_action_is_refused() {
    let inst = fixtures::toy();
    let opts = ModelOptions::uniform(&inst, ObjectiveMode::RatioMax, 0);
    assert!(matches!(
        build_model(&inst, &opts),
        Err(ModelError::ZeroAction)
    ));
}

#[test]
fn all_referral_point_decodes_to_referrals() {
    let inst = fixtures::toy();
    let opts = ModelOptions::uniform(&inst, ObjectiveMode::CostMin, 0);
    let built = build_model(&inst, &opts).unwrap();
    let mut found = None;
    enumerate_plans(&inst, &opts, 1 << 20, |p| {
        if found.is_none() && p.in_house == 0 {
            found = Some(p.clone());
        }
    })
    .unwrap();
    let p = found.expect("an all-referral plan exists");
    let x = to_x(&inst, &built, &p);
    let plan = decode(&inst, &built, &x).unwrap();
    let requested: usize = inst
        .youth
        .iter()
        .flat_map(|y| &y.requests)
        .map(|r| r.frequency)
        .sum();
    assert_eq!(plan.referrals(), requested);
    assert!(plan.opened.is_empty());
    assert_eq!(encode(&inst, &built, &plan).unwrap(), x);
}

#[test]
fn decode_rejects_wrong_length() {
    let inst = fixtures::toy();
    let built = build_model(
        &inst,
        &ModelOptions::uniform(&inst, ObjectiveMode::CostMin, 1),
    )
    .unwrap();
    assert!(matches!(
        decode(&inst, &built, &[0.0; 3]),
        Err(ModelError::DimensionMismatch { found: 3, .. })
    ));
}

#[test]
fn solved_plans_respect_operational_rules() {
    for seed in 0..12 {
        let inst = fixtures::tiny(seed);
        let opts = ModelOptions::uniform(&inst, ObjectiveMode::ProfitMax, 1);
        let built = build_model(&inst, &opts).unwrap();
        let sol = solve_mip(&built.mip, &MipConfig::exact()).unwrap();
        let x = sol.incumbent.unwrap();
        let plan = decode(&inst, &built, &x).unwrap();
        let ix: HashMap<&str, usize> = inst
            .shelters
            .iter()
            .enumerate()
            .map(|(k, s)| (s.id.as_str(), k))
            .collect();
        let mut expansion: HashMap<(String, String, usize), u32> = HashMap::new();
        for e in &plan.expansions {
            expansion.insert((e.shelter.clone(), e.service.clone(), e.period), e.units);
        }
        for ((s, i, t), n) in plan.load() {
            let sh = &inst.shelters[ix[s.as_str()]];
            let o = sh.offers(&i).unwrap();
            let e = expansion
                .get(&(s.clone(), i.clone(), t))
                .copied()
                .unwrap_or(0);
            assert!(n as u32 <= o.capacity[t] + e, "seed {seed}: {s} {i} {t}");
            if sh.kind != ShelterKind::Referral {
                assert!(o.capacity[t] + e <= o.capacity[t].max(o.max_capacity));
            }
        }
        for y in &inst.youth {
            for r in &y.requests {
                let mut ts: Vec<usize> = plan
                    .assignments
                    .iter()
                    .filter(|a| a.youth == y.id && a.service == r.service)
                    .map(|a| a.period)
                    .collect();
                ts.sort_unstable();
                assert_eq!(ts.len(), r.frequency, "seed {seed}: {} {}", y.id, r.service);
                assert!(ts[0] >= r.earliest && ts.iter().any(|&t| t <= r.latest));
                let svc = &inst.services[inst.service_index(&r.service).unwrap()];
                if svc.periodic {
                    let gap = r.gap.unwrap() as i64;
                    let k = svc.flexibility as i64;
                    let mut used = std::collections::BTreeSet::new();
                    for a in plan
                        .assignments
                        .iter()
                        .filter(|a| a.youth == y.id && a.service == r.service)
                    {
                        let off = a.period as i64 - r.earliest as i64;
                        let j = (off + k).div_euclid(gap);
                        assert!(
                            (off - j * gap).abs() <= k,
                            "seed {seed}: provision outside every window"
                        );
                        assert!(
                            used.insert((a.shelter.clone(), j)),
                            "seed {seed}: window used twice"
                        );
                    }
                }
                let share: f64 = plan
                    .shares
                    .iter()
                    .filter(|u| u.youth == y.id && u.service == r.service)
                    .map(|u| u.share)
                    .sum();
                assert!(share <= 1.0 + 1e-9);
            }
            for a in plan.assignments.iter().filter(|a| a.youth == y.id) {
                let sh = &inst.shelters[ix[a.shelter.as_str()]];
                assert!(sh.accepts(y), "seed {seed}: {} placed at {}", y.id, sh.id);
                if sh.kind == ShelterKind::Candidate {
                    assert!(plan.opened.contains(&sh.id));
                }
            }
        }
    }
}

#[test]
fn youth_benefit_formula() {
    let inst = fixtures::toy();
    let v = inst.benefit.youth_value();
    assert_eq!(v, 199_495.0);
    // y0 mental_health: earliest 0, frequency 1.
    assert_eq!(youth_benefit(&inst, "y0", 0, "mental_health").unwrap(), v);
    // y0 beds: earliest 0, frequency 2.
    assert_eq!(youth_benefit(&inst, "y0", 1, "beds").unwrap(), v / 4.0);
    assert!(matches!(
        youth_benefit(&inst, "y1", 0, "beds"),
        Err(ModelError::OutOfWindow { .. })
    ));
}

#[test]
fn excluded_youth_get_no_columns() {
    // new0 rejects the attribute y1 carries.
    let inst = fixtures::toy();
    let built = build_model(
        &inst,
        &ModelOptions::uniform(&inst, ObjectiveMode::CostMin, 1),
    )
    .unwrap();
    assert!(built
        .index
        .keys()
        .iter()
        .all(|k| !(k.youth == Some(1) && k.shelter == Some(2))));
}
