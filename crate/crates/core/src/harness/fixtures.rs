//! Instances used by tests, examples and acceptance runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{
    generate_instance, BenefitParams, Borough, CandidatePolicy, CostParams, GeneratorConfig,
    Instance, Request, Service, Shelter, ShelterKind, ShelterService, Youth, SCHEMA_VERSION,
};

fn offer(service: &str, capacity: u32, max: u32, cost: f64, horizon: usize) -> ShelterService {
    ShelterService {
        service: service.into(),
        capacity: vec![capacity; horizon],
        unscaled: vec![capacity; horizon],
        max_capacity: max,
        expansion_cost: vec![cost; horizon],
    }
}

fn request(
    service: &str,
    earliest: usize,
    latest: usize,
    duration: usize,
    frequency: usize,
    gap: Option<usize>,
) -> Request {
    Request {
        service: service.into(),
        earliest,
        latest,
        duration,
        frequency,
        gap,
    }
}

/// Two youth, one referral organization, one status-quo shelter and one
/// candidate in a single borough; beds plus a weekly counselling service
/// over four periods.
pub fn toy() -> Instance {
    let h = 4;
    let mut sq = Shelter {
        id: "sq0".into(),
        kind: ShelterKind::StatusQuo,
        borough: "Queens".into(),
        archetype: None,
        attributes: vec![true],
        beds: 10,
        critical_mass: 0,
        services: vec![
            offer("beds", 1, 2, 700.0, h),
            offer("mental_health", 1, 1, 300.0, h),
        ],
    };
    sq.services[0].unscaled = vec![10; h];
    Instance {
        schema_version: SCHEMA_VERSION,
        seed: 0,
        horizon: h,
        delta: 0.1,
        num_attributes: 1,
        services: vec![
            Service {
                name: "beds".into(),
                periodic: false,
                flexibility: 0,
            },
            Service {
                name: "mental_health".into(),
                periodic: true,
                flexibility: 1,
            },
        ],
        boroughs: vec![Borough {
            name: "Queens".into(),
            cost_multiplier: 1.0,
        }],
        benefit: BenefitParams::default(),
        cost: CostParams::default(),
        youth: vec![
            Youth {
                id: "y0".into(),
                arrival: 0,
                attributes: vec![false],
                requests: vec![
                    request("beds", 0, 1, 1, 2, None),
                    request("mental_health", 0, 0, 1, 1, Some(3)),
                ],
            },
            Youth {
                id: "y1".into(),
                arrival: 1,
                attributes: vec![true],
                requests: vec![request("beds", 1, 1, 2, 2, None)],
            },
        ],
        shelters: vec![
            Shelter {
                id: "referral".into(),
                kind: ShelterKind::Referral,
                borough: "Queens".into(),
                archetype: None,
                attributes: vec![true],
                beds: 0,
                critical_mass: 0,
                services: vec![
                    offer("beds", 2, 2, 0.0, h),
                    offer("mental_health", 2, 2, 0.0, h),
                ],
            },
            sq,
            Shelter {
                id: "new0".into(),
                kind: ShelterKind::Candidate,
                borough: "Queens".into(),
                archetype: Some(1),
                attributes: vec![false],
                beds: 2,
                critical_mass: 1,
                services: vec![offer("beds", 2, 3, 700.0, h)],
            },
        ],
        generator: None,
    }
}

/// [`toy`] with a second, larger candidate that accepts every youth.
pub fn toy_two_candidates() -> Instance {
    let mut inst = toy();
    let h = inst.horizon;
    inst.shelters.push(Shelter {
        id: "new1".into(),
        kind: ShelterKind::Candidate,
        borough: "Queens".into(),
        archetype: Some(3),
        attributes: vec![true],
        beds: 3,
        critical_mass: 1,
        services: vec![
            offer("beds", 3, 3, 700.0, h),
            offer("mental_health", 1, 2, 300.0, h),
        ],
    });
    inst
}

/// [`toy_two_candidates`] plus six youth who each need a bed in period 0
/// only. Period-0 demand exceeds what the status-quo shelter and either
/// candidate can hold together.
pub fn crowded() -> Instance {
    let mut inst = toy_two_candidates();
    for k in 2..8 {
        inst.youth.push(Youth {
            id: format!("y{k}"),
            arrival: 0,
            attributes: vec![false],
            requests: vec![request("beds", 0, 0, 0, 1, None)],
        });
    }
    for o in &mut inst.shelters[0].services {
        o.capacity = vec![8; inst.horizon];
        o.unscaled = o.capacity.clone();
        o.max_capacity = 8;
    }
    inst
}

/// Generator settings for small random instances: at most four youth, two
/// candidates, six periods and two services.
pub fn tiny_config(seed: u64) -> GeneratorConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7469_6e79);
    let horizon = rng.gen_range(5..=6);
    GeneratorConfig {
        num_youth: rng.gen_range(2..=3),
        horizon,
        num_services: 2,
        num_attributes: 2,
        num_status_quo: 1,
        candidates: CandidatePolicy::Fixed(rng.gen_range(1..=2)),
        delta: 0.1,
        critical_mass: 1,
        extra_requests: (0, 1),
        offer_percent: 70,
        youth_attribute_percent: 30,
        shelter_accept_percent: 70,
        arrival_window: 2,
        max_start_delay: 1,
        max_start_slack: 1,
        max_bed_weeks: 2,
        max_periodic_frequency: 2,
        service_capacity_percent: (10, 30),
        expansion_percent: 25,
        boroughs: vec![("Queens".into(), 1.0), ("Bronx".into(), 0.789)],
        ..GeneratorConfig::default()
    }
}

pub fn tiny(seed: u64) -> Instance {
    generate_instance(&tiny_config(seed), seed).expect("tiny configuration is valid")
}

/// Forty youth, ten candidates over five boroughs, twelve periods and six
/// services.
pub fn midsize_config() -> GeneratorConfig {
    GeneratorConfig {
        num_youth: 40,
        horizon: 12,
        num_services: 6,
        candidates: CandidatePolicy::Fixed(10),
        arrival_window: 6,
        max_start_delay: 2,
        max_start_slack: 2,
        max_bed_weeks: 4,
        max_periodic_frequency: 2,
        extra_requests: (0, 2),
        ..GeneratorConfig::default()
    }
}

pub fn midsize(seed: u64) -> Instance {
    generate_instance(&midsize_config(), seed).expect("midsize configuration is valid")
}

/// One hundred youth, ten candidates and 26 weekly periods.
pub fn desk_config() -> GeneratorConfig {
    GeneratorConfig {
        num_youth: 100,
        horizon: 26,
        candidates: CandidatePolicy::Fixed(10),
        ..GeneratorConfig::default()
    }
}

pub fn desk(seed: u64) -> Instance {
    generate_instance(&desk_config(), seed).expect("desk configuration is valid")
}
