use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    round_half_up, BenefitParams, Borough, CostParams, Instance, InstanceError, Request, Service,
    Shelter, ShelterKind, ShelterService, Youth, SCHEMA_VERSION,
};

/// Catalog entry; `expansion_cost` is the default cost of one extra unit for
/// one period.
#[derive(Clone, Copy, Debug)]
pub struct ServiceSpec {
    pub name: &'static str,
    pub periodic: bool,
    pub flexibility: usize,
    pub expansion_cost: f64,
}

const fn svc(name: &'static str, periodic: bool, expansion_cost: f64) -> ServiceSpec {
    ServiceSpec {
        name,
        periodic,
        flexibility: if periodic { 1 } else { 0 },
        expansion_cost,
    }
}

pub const SERVICE_CATALOG: [ServiceSpec; 14] = [
    svc("beds", false, 700.0),
    svc("mental_health", true, 300.0),
    svc("physical_health", true, 250.0),
    svc("substance_abuse", true, 300.0),
    svc("crisis_support", false, 400.0),
    svc("long_term_housing", false, 900.0),
    svc("legal", true, 350.0),
    svc("service_coordination", true, 150.0),
    svc("practical", false, 100.0),
    svc("financial", false, 120.0),
    svc("life_skills", true, 100.0),
    svc("employment", true, 150.0),
    svc("education", true, 150.0),
    svc("childcare_parenting", true, 200.0),
];

/// Average beds of the eight organization archetypes.
pub const ARCHETYPE_BEDS: [u32; 8] = [6, 8, 8, 20, 9, 12, 20, 12];

pub const NYC_BOROUGHS: [(&str, f64); 5] = [
    ("Manhattan", 1.85),
    ("Brooklyn", 1.38),
    ("Queens", 1.0),
    ("Staten Island", 0.830),
    ("Bronx", 0.789),
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidatePolicy {
    Fixed(usize),
    /// `base` candidates, times 1.5 from 750 youth and times 2 from 1000.
    Scaled {
        base: usize,
    },
}

impl CandidatePolicy {
    pub fn count(&self, num_youth: usize) -> usize {
        match *self {
            CandidatePolicy::Fixed(n) => n,
            CandidatePolicy::Scaled { base } => {
                if num_youth >= 1000 {
                    2 * base
                } else if num_youth >= 750 {
                    (3 * base).div_ceil(2)
                } else {
                    base
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub num_youth: usize,
    pub horizon: usize,
    /// Uses the first `num_services` catalog entries; `beds` is always first.
    pub num_services: usize,
    pub num_attributes: usize,
    pub num_status_quo: usize,
    pub candidates: CandidatePolicy,
    pub delta: f64,
    pub critical_mass: u32,
    /// Additional non-bed requests per youth, inclusive range.
    pub extra_requests: (usize, usize),
    /// Chance that a shelter offers a given non-bed service.
    pub offer_percent: u32,
    /// Chance that a youth carries a given attribute flag.
    pub youth_attribute_percent: u32,
    /// Chance that a non-referral shelter accepts a given flag.
    pub shelter_accept_percent: u32,
    /// Arrivals fall in the first `arrival_window` periods.
    pub arrival_window: usize,
    pub max_start_delay: usize,
    pub max_start_slack: usize,
    pub max_bed_weeks: usize,
    pub max_periodic_frequency: usize,
    /// Capacity of a non-bed service as a percentage of the bed count.
    pub service_capacity_percent: (u32, u32),
    /// Extra capacity allowed on top of full capacity.
    pub expansion_percent: u32,
    /// Overrides the catalog expansion costs, indexed like the catalog.
    pub expansion_costs: Option<Vec<f64>>,
    pub boroughs: Vec<(String, f64)>,
    pub benefit: BenefitParams,
    pub cost: CostParams,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_youth: 100,
            horizon: 26,
            num_services: 13,
            num_attributes: 4,
            num_status_quo: 4,
            candidates: CandidatePolicy::Fixed(10),
            delta: 0.1,
            critical_mass: 2,
            extra_requests: (1, 3),
            offer_percent: 60,
            youth_attribute_percent: 20,
            shelter_accept_percent: 75,
            arrival_window: 13,
            max_start_delay: 2,
            max_start_slack: 2,
            max_bed_weeks: 6,
            max_periodic_frequency: 3,
            service_capacity_percent: (30, 80),
            expansion_percent: 25,
            expansion_costs: None,
            boroughs: NYC_BOROUGHS
                .iter()
                .map(|(n, m)| (n.to_string(), *m))
                .collect(),
            benefit: BenefitParams::default(),
            cost: CostParams::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |m: String| Err(InstanceError::ConfigInvalid(m));
        if self.num_youth == 0 {
            return bad("num_youth must be positive".into());
        }
        if self.horizon < 2 {
            return bad("horizon must be at least 2 periods".into());
        }
        if self.num_services == 0 || self.num_services > SERVICE_CATALOG.len() {
            return bad(format!(
                "num_services must be in 1..={}",
                SERVICE_CATALOG.len()
            ));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta {} outside (0, 1]", self.delta));
        }
        if self.boroughs.is_empty() {
            return bad("at least one borough is required".into());
        }
        if self.extra_requests.0 > self.extra_requests.1 {
            return bad("extra_requests range is empty".into());
        }
        if self.service_capacity_percent.0 > self.service_capacity_percent.1 {
            return bad("service_capacity_percent range is empty".into());
        }
        for (name, p) in [
            ("offer_percent", self.offer_percent),
            ("youth_attribute_percent", self.youth_attribute_percent),
            ("shelter_accept_percent", self.shelter_accept_percent),
        ] {
            if p > 100 {
                return bad(format!("{name} must be at most 100"));
            }
        }
        if self.arrival_window == 0 || self.arrival_window > self.horizon {
            return bad("arrival_window must be in 1..=horizon".into());
        }
        if self.max_bed_weeks == 0 || self.max_periodic_frequency == 0 {
            return bad("frequencies must allow at least one provision".into());
        }
        if self.arrival_window + self.max_start_delay + self.max_start_slack >= self.horizon {
            return bad(
                "arrival window plus start delay and slack must leave room inside the horizon"
                    .into(),
            );
        }
        if let Some(costs) = &self.expansion_costs {
            if costs.len() != SERVICE_CATALOG.len()
                || costs.iter().any(|c| !(*c >= 0.0 && c.is_finite()))
            {
                return bad(format!(
                    "expansion_costs needs {} nonnegative entries",
                    SERVICE_CATALOG.len()
                ));
            }
        }
        Ok(())
    }

    fn expansion_cost(&self, i: usize) -> f64 {
        match &self.expansion_costs {
            Some(c) => c[i],
            None => SERVICE_CATALOG[i].expansion_cost,
        }
    }
}

fn percent(rng: &mut ChaCha8Rng, p: u32) -> bool {
    rng.gen_range(0..100u32) < p
}

/// Bed count for an archetype: uniform within a quarter of the average.
pub(crate) fn archetype_beds(rng: &mut ChaCha8Rng, archetype: usize) -> u32 {
    let avg = ARCHETYPE_BEDS[archetype];
    let spread = avg / 4;
    rng.gen_range(avg - spread..=avg + spread)
}

struct Gen<'a> {
    cfg: &'a GeneratorConfig,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn youth(&mut self, idx: usize) -> Youth {
        let cfg = self.cfg;
        let t_len = cfg.horizon;
        let arrival = self.rng.gen_range(0..cfg.arrival_window);
        let attributes = (0..cfg.num_attributes)
            .map(|_| percent(&mut self.rng, cfg.youth_attribute_percent))
            .collect();
        let mut services = vec![0usize];
        let mut others: Vec<usize> = (1..cfg.num_services).collect();
        let extra = self
            .rng
            .gen_range(cfg.extra_requests.0..=cfg.extra_requests.1)
            .min(others.len());
        for _ in 0..extra {
            let k = self.rng.gen_range(0..others.len());
            services.push(others.remove(k));
        }
        services.sort_unstable();
        let requests = services
            .into_iter()
            .map(|i| {
                let spec = SERVICE_CATALOG[i];
                let earliest = arrival + self.rng.gen_range(0..=cfg.max_start_delay);
                let latest = earliest + self.rng.gen_range(0..=cfg.max_start_slack);
                // Room left after the latest start; positive by config validation.
                let room = t_len - 1 - latest;
                if spec.periodic {
                    let gap = self
                        .rng
                        .gen_range(2 * spec.flexibility + 1..=2 * spec.flexibility + 2);
                    let fit = (latest - earliest + room) / gap + 1;
                    let frequency = self.rng.gen_range(1..=cfg.max_periodic_frequency).min(fit);
                    let span = (frequency - 1) * gap;
                    let duration = span.saturating_sub(latest - earliest).max(1).min(room);
                    Request {
                        service: spec.name.to_string(),
                        earliest,
                        latest,
                        duration,
                        frequency,
                        gap: Some(gap),
                    }
                } else {
                    let duration = self.rng.gen_range(1..=room.min(cfg.max_bed_weeks));
                    let frequency = self.rng.gen_range(1..=duration);
                    Request {
                        service: spec.name.to_string(),
                        earliest,
                        latest,
                        duration,
                        frequency,
                        gap: None,
                    }
                }
            })
            .collect();
        Youth {
            id: format!("y{idx}"),
            arrival,
            attributes,
            requests,
        }
    }

    fn shelter(&mut self, id: String, kind: ShelterKind) -> Shelter {
        let cfg = self.cfg;
        let archetype = self.rng.gen_range(0..ARCHETYPE_BEDS.len());
        let beds = archetype_beds(&mut self.rng, archetype);
        let borough = cfg.boroughs[self.rng.gen_range(0..cfg.boroughs.len())]
            .0
            .clone();
        let attributes = (0..cfg.num_attributes)
            .map(|_| percent(&mut self.rng, cfg.shelter_accept_percent))
            .collect();
        let mut services = Vec::new();
        for i in 0..cfg.num_services {
            let full = if i == 0 {
                beds
            } else {
                if !percent(&mut self.rng, cfg.offer_percent) {
                    continue;
                }
                let (lo, hi) = cfg.service_capacity_percent;
                let p = self.rng.gen_range(lo..=hi);
                ((beds * p + 50) / 100).max(1)
            };
            let capacity = match kind {
                ShelterKind::StatusQuo => round_half_up(cfg.delta * full as f64),
                _ => full,
            };
            let max_capacity = capacity + (full * cfg.expansion_percent).div_ceil(100);
            services.push(ShelterService {
                service: SERVICE_CATALOG[i].name.to_string(),
                capacity: vec![capacity; cfg.horizon],
                unscaled: vec![full; cfg.horizon],
                max_capacity,
                expansion_cost: vec![cfg.expansion_cost(i); cfg.horizon],
            });
        }
        Shelter {
            id,
            kind,
            borough,
            archetype: Some(archetype),
            attributes,
            beds,
            critical_mass: cfg.critical_mass,
            services,
        }
    }

    fn referral(&self) -> Shelter {
        let cfg = self.cfg;
        let n = cfg.num_youth as u32;
        Shelter {
            id: "referral".into(),
            kind: ShelterKind::Referral,
            borough: cfg.boroughs[0].0.clone(),
            archetype: None,
            attributes: vec![true; cfg.num_attributes],
            beds: 0,
            critical_mass: 0,
            services: (0..cfg.num_services)
                .map(|i| ShelterService {
                    service: SERVICE_CATALOG[i].name.to_string(),
                    capacity: vec![n; cfg.horizon],
                    unscaled: vec![n; cfg.horizon],
                    max_capacity: n,
                    expansion_cost: vec![0.0; cfg.horizon],
                })
                .collect(),
        }
    }
}

/// Build a synthetic instance. Output depends only on `(cfg, seed)`.
pub fn generate_instance(cfg: &GeneratorConfig, seed: u64) -> Result<Instance, InstanceError> {
    cfg.validate()?;
    let mut g = Gen {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let youth = (0..cfg.num_youth).map(|k| g.youth(k)).collect();
    let mut shelters = vec![g.referral()];
    for k in 0..cfg.num_status_quo {
        let s = g.shelter(format!("sq{k}"), ShelterKind::StatusQuo);
        shelters.push(s);
    }
    for k in 0..cfg.candidates.count(cfg.num_youth) {
        let s = g.shelter(format!("new{k}"), ShelterKind::Candidate);
        shelters.push(s);
    }
    let inst = Instance {
        schema_version: SCHEMA_VERSION,
        seed,
        horizon: cfg.horizon,
        delta: cfg.delta,
        num_attributes: cfg.num_attributes,
        services: SERVICE_CATALOG[..cfg.num_services]
            .iter()
            .map(|s| Service {
                name: s.name.to_string(),
                periodic: s.periodic,
                flexibility: s.flexibility,
            })
            .collect(),
        boroughs: cfg
            .boroughs
            .iter()
            .map(|(name, m)| Borough {
                name: name.clone(),
                cost_multiplier: *m,
            })
            .collect(),
        benefit: cfg.benefit.clone(),
        cost: cfg.cost.clone(),
        youth,
        shelters,
        generator: Some(cfg.clone()),
    };
    inst.validate().map_err(|e| {
        InstanceError::ConfigInvalid(format!("generated instance failed validation: {e}"))
    })?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_candidate_counts() {
        let p = CandidatePolicy::Scaled { base: 10 };
        assert_eq!(p.count(500), 10);
        assert_eq!(p.count(750), 15);
        assert_eq!(p.count(1000), 20);
        assert_eq!(CandidatePolicy::Fixed(3).count(1000), 3);
    }

    #[test]
    fn archetype_bed_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let b = archetype_beds(&mut rng, 0);
            assert!((5..=7).contains(&b));
        }
    }

    #[test]
    fn fourth_archetype_averages_twenty_beds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let total: u32 = (0..1000).map(|_| archetype_beds(&mut rng, 3)).sum();
        let mean = total as f64 / 1000.0;
        assert!((mean - 20.0).abs() <= 2.0, "mean {mean}");
    }
}
