use bcr_core::harness::fixtures;
use bcr_core::instance::{
    generate_instance, load_instance, opening_cost, partial_return, save_instance, CandidatePolicy,
    CostParams, GeneratorConfig, Instance, InstanceError, ShelterKind, SCHEMA_VERSION,
};
use proptest::prelude::*;

#[test]
fn same_seed_gives_identical_files() {
    let cfg = GeneratorConfig {
        num_youth: 30,
        ..GeneratorConfig::default()
    };
    let a = generate_instance(&cfg, 11).unwrap().to_json();
    let b = generate_instance(&cfg, 11).unwrap().to_json();
    assert_eq!(a, b);
    let c = generate_instance(&cfg, 12).unwrap().to_json();
    assert_ne!(a, c);
}

#[test]
fn twenty_youth_thirteen_services_all_valid() {
    for seed in 0..25 {
        let cfg = GeneratorConfig {
            num_youth: 20,
            num_services: 13,
            ..GeneratorConfig::default()
        };
        let inst = generate_instance(&cfg, seed).unwrap();
        inst.validate().unwrap();
        assert_eq!(inst.services.len(), 13);
        for y in &inst.youth {
            for r in &y.requests {
                assert!(y.arrival <= r.earliest && r.earliest <= r.latest);
                assert!(r.latest + r.duration <= inst.horizon);
                assert!(r.frequency >= 1);
            }
        }
    }
}

#[test]
fn generated_candidates_follow_policy_and_boroughs() {
    let cfg = GeneratorConfig {
        num_youth: 20,
        candidates: CandidatePolicy::Fixed(7),
        ..GeneratorConfig::default()
    };
    let inst = generate_instance(&cfg, 3).unwrap();
    assert_eq!(inst.num_candidates(), 7);
    assert_eq!(
        inst.shelters
            .iter()
            .filter(|s| s.kind == ShelterKind::Referral)
            .count(),
        1
    );
    for (_, s) in inst.candidates() {
        assert!(inst.borough_multiplier(&s.borough).is_some());
        assert!(s.archetype.is_some());
    }
}

#[test]
fn status_quo_capacity_is_scaled_by_delta() {
    let inst = generate_instance(&GeneratorConfig::default(), 5).unwrap();
    for s in inst
        .shelters
        .iter()
        .filter(|s| s.kind == ShelterKind::StatusQuo)
    {
        for o in &s.services {
            for (c, u) in o.capacity.iter().zip(&o.unscaled) {
                assert_eq!(*c, bcr_core::instance::round_half_up(0.1 * *u as f64));
            }
        }
    }
}

#[test]
fn round_trip_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    for inst in [
        fixtures::toy(),
        fixtures::tiny(4),
        fixtures::midsize(2),
    ] {
        save_instance(&inst, &path).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);
    }
}

#[test]
fn tampered_delta_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let text = fixtures::toy()
        .to_json()
        .replace("\"delta\": 0.1", "\"delta\": 0.0");
    std::fs::write(&path, text).unwrap();
    let err = load_instance(&path).unwrap_err();
    assert!(
        matches!(err, InstanceError::Invalid(ref m) if m.contains("delta")),
        "{err}"
    );
}

#[test]
fn wrong_schema_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let text = fixtures::toy().to_json().replace(
        &format!("\"schema_version\": {SCHEMA_VERSION}"),
        "\"schema_version\": 99",
    );
    std::fs::write(&path, text).unwrap();
    assert!(matches!(
        load_instance(&path),
        Err(InstanceError::SchemaVersionMismatch {
            found: Some(99),
            ..
        })
    ));
}

#[test]
fn unknown_service_names_youth_and_service() {
    let mut inst = fixtures::toy();
    inst.youth[1].requests[0].service = "dentistry".into();
    let msg = inst.validate().unwrap_err().to_string();
    assert!(msg.contains("y1") && msg.contains("dentistry"), "{msg}");
}

#[test]
fn opening_costs_by_borough() {
    let mut s = fixtures::toy().shelters[2].clone();
    s.beds = 8;
    let p = CostParams::default();
    assert_eq!(opening_cost(&s, &p, 1.0).unwrap(), 80_000.0);
    assert!((opening_cost(&s, &p, 1.85).unwrap() - 148_000.0).abs() < 1e-9);
    assert!((opening_cost(&s, &p, 0.789).unwrap() - 63_120.0).abs() < 1e-9);
    let referral = fixtures::toy().shelters[0].clone();
    assert!(matches!(
        opening_cost(&referral, &p, 1.0),
        Err(InstanceError::NotACandidate(_))
    ));
}

#[test]
fn malformed_generator_settings_are_reported() {
    let cfg = GeneratorConfig {
        delta: 0.0,
        ..GeneratorConfig::default()
    };
    assert!(matches!(
        generate_instance(&cfg, 0),
        Err(InstanceError::ConfigInvalid(_))
    ));
}

fn small_config() -> impl Strategy<Value = (GeneratorConfig, u64)> {
    (1usize..12, 4usize..10, 1usize..6, 1usize..5, any::<u64>()).prop_map(
        |(y, h, svc, cand, seed)| {
            (
                GeneratorConfig {
                    num_youth: y,
                    horizon: h,
                    num_services: svc,
                    candidates: CandidatePolicy::Fixed(cand),
                    arrival_window: 1,
                    max_start_delay: 1,
                    max_start_slack: 1,
                    ..GeneratorConfig::default()
                },
                seed,
            )
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_instances_are_valid((cfg, seed) in small_config()) {
        let inst: Instance = generate_instance(&cfg, seed).unwrap();
        prop_assert!(inst.validate().is_ok());
        for (_, s) in inst.candidates() {
            let c = inst.opening_cost(s).unwrap();
            prop_assert!(c > 0.0);
            prop_assert_eq!(inst.partial_return(s).unwrap(), partial_return(c, inst.benefit.returns_multiplier));
        }
        for s in &inst.shelters {
            for o in &s.services {
                prop_assert!(o.capacity.iter().all(|&c| c <= o.max_capacity));
            }
        }
    }
}
