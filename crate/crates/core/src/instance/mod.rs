//! Problem data: youth, shelters, services and the cost/benefit constants,
//! plus validation, JSON persistence and the synthetic generator.

mod generate;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{
    generate_instance, CandidatePolicy, GeneratorConfig, ServiceSpec, ARCHETYPE_BEDS, NYC_BOROUGHS,
    SERVICE_CATALOG,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Service {
    pub name: String,
    /// Delivered every `gap` periods rather than a number of times in a window.
    pub periodic: bool,
    /// Allowed deviation `k_i` around each periodic occurrence.
    pub flexibility: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Borough {
    pub name: String,
    pub cost_multiplier: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenefitParams {
    /// Health-care savings per placed youth, before inflation.
    pub medicaid_savings: f64,
    pub medicaid_inflation: f64,
    pub labor_productivity: f64,
    /// `rho`: partial return of a new shelter as a multiple of its cost.
    pub returns_multiplier: f64,
}

impl BenefitParams {
    /// Numerator `M + P` of the per-youth benefit.
    pub fn youth_value(&self) -> f64 {
        self.medicaid_savings * self.medicaid_inflation + self.labor_productivity
    }
}

impl Default for BenefitParams {
    fn default() -> Self {
        Self {
            medicaid_savings: 4763.0,
            medicaid_inflation: 1.0,
            labor_productivity: 194_732.0,
            returns_multiplier: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    /// Annual cost of one bed.
    pub bed_cost: f64,
    pub assignment_in_house: f64,
    pub assignment_referral: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            bed_cost: 10_000.0,
            assignment_in_house: 1.0,
            assignment_referral: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub service: String,
    /// Earliest start `a`.
    pub earliest: usize,
    /// Latest start `b`.
    pub latest: usize,
    /// Duration `d`; service may be delivered up to period `b + d`.
    pub duration: usize,
    /// Number of provisions `f`.
    pub frequency: usize,
    /// Periods between provisions `omega`, periodic services only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<usize>,
}

impl Request {
    /// Last period in which the service may be delivered.
    pub fn last_period(&self) -> usize {
        self.latest + self.duration
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Youth {
    pub id: String,
    pub arrival: usize,
    pub attributes: Vec<bool>,
    pub requests: Vec<Request>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShelterKind {
    StatusQuo,
    Candidate,
    Referral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShelterService {
    pub service: String,
    /// Capacity available to the model in each period.
    pub capacity: Vec<u32>,
    /// Capacity before scaling by the free fraction (status-quo shelters).
    pub unscaled: Vec<u32>,
    /// Cap `mu` on capacity plus expansion.
    pub max_capacity: u32,
    /// Cost of one expansion unit in each period.
    pub expansion_cost: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shelter {
    pub id: String,
    pub kind: ShelterKind,
    pub borough: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archetype: Option<usize>,
    /// Accepted attributes; a youth with a flag the shelter lacks is excluded.
    pub attributes: Vec<bool>,
    pub beds: u32,
    pub critical_mass: u32,
    pub services: Vec<ShelterService>,
}

impl Shelter {
    pub fn offers(&self, service: &str) -> Option<&ShelterService> {
        self.services.iter().find(|s| s.service == service)
    }

    pub fn accepts(&self, youth: &Youth) -> bool {
        youth
            .attributes
            .iter()
            .zip(&self.attributes)
            .all(|(&y, &s)| !y || s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub schema_version: u32,
    pub seed: u64,
    pub horizon: usize,
    /// Free fraction of status-quo capacity.
    pub delta: f64,
    pub num_attributes: usize,
    pub services: Vec<Service>,
    pub boroughs: Vec<Borough>,
    pub benefit: BenefitParams,
    pub cost: CostParams,
    pub youth: Vec<Youth>,
    pub shelters: Vec<Shelter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("schema version {found:?} does not match supported version {expected}")]
    SchemaVersionMismatch { found: Option<u64>, expected: u32 },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("shelter {0} is not a new candidate")]
    NotACandidate(String),
    #[error("invalid generator configuration: {0}")]
    ConfigInvalid(String),
}

fn invalid(msg: String) -> InstanceError {
    InstanceError::Invalid(msg)
}

/// Round half up for nonnegative values; absorbs representation error such
/// as `0.1 * 5 = 0.5000000000000001`.
pub fn round_half_up(v: f64) -> u32 {
    (v + 0.5 + 1e-9).floor().max(0.0) as u32
}

impl Instance {
    pub fn service_index(&self, name: &str) -> Option<usize> {
        self.services.iter().position(|s| s.name == name)
    }

    pub fn borough_index(&self, name: &str) -> Option<usize> {
        self.boroughs.iter().position(|b| b.name == name)
    }

    pub fn borough_multiplier(&self, name: &str) -> Option<f64> {
        self.boroughs
            .iter()
            .find(|b| b.name == name)
            .map(|b| b.cost_multiplier)
    }

    pub fn candidates(&self) -> impl Iterator<Item = (usize, &Shelter)> {
        self.shelters
            .iter()
            .enumerate()
            .filter(|(_, s)| s.kind == ShelterKind::Candidate)
    }

    pub fn num_candidates(&self) -> usize {
        self.candidates().count()
    }

    /// Opening cost `c(s)` of a candidate shelter.
    pub fn opening_cost(&self, shelter: &Shelter) -> Result<f64, InstanceError> {
        let mult = self.borough_multiplier(&shelter.borough).ok_or_else(|| {
            invalid(format!(
                "shelter {} names unknown borough {}",
                shelter.id, shelter.borough
            ))
        })?;
        opening_cost(shelter, &self.cost, mult)
    }

    /// Partial return `c~(s) = rho * c(s)`.
    pub fn partial_return(&self, shelter: &Shelter) -> Result<f64, InstanceError> {
        Ok(partial_return(
            self.opening_cost(shelter)?,
            self.benefit.returns_multiplier,
        ))
    }

    /// Recompute status-quo capacities for a new free fraction, keeping the
    /// expansion headroom above them.
    pub fn rescale_status_quo(&mut self, delta: f64) {
        self.delta = delta;
        for shelter in &mut self.shelters {
            if shelter.kind != ShelterKind::StatusQuo {
                continue;
            }
            for svc in &mut shelter.services {
                let headroom = svc.max_capacity - svc.capacity.iter().copied().max().unwrap_or(0);
                svc.capacity = svc
                    .unscaled
                    .iter()
                    .map(|&c| round_half_up(delta * c as f64))
                    .collect();
                svc.max_capacity = svc.capacity.iter().copied().max().unwrap_or(0) + headroom;
            }
        }
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(InstanceError::SchemaVersionMismatch {
                found: Some(self.schema_version as u64),
                expected: SCHEMA_VERSION,
            });
        }
        let horizon = self.horizon;
        if horizon == 0 {
            return Err(invalid("horizon must be at least one period".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(invalid(format!("delta {} outside (0, 1]", self.delta)));
        }
        let b = &self.benefit;
        if !(b.returns_multiplier >= 0.0 && b.returns_multiplier.is_finite()) {
            return Err(invalid(format!(
                "returns multiplier {} must be nonnegative",
                b.returns_multiplier
            )));
        }
        for (name, v) in [
            ("medicaid_savings", b.medicaid_savings),
            ("medicaid_inflation", b.medicaid_inflation),
            ("labor_productivity", b.labor_productivity),
            ("bed_cost", self.cost.bed_cost),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!(
                    "{name} must be a nonnegative number, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("assignment_in_house", self.cost.assignment_in_house),
            ("assignment_referral", self.cost.assignment_referral),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let mut names = HashSet::new();
        for s in &self.services {
            if !names.insert(s.name.as_str()) {
                return Err(invalid(format!("service {} listed twice", s.name)));
            }
        }
        let mut boroughs = HashSet::new();
        for bo in &self.boroughs {
            if !(bo.cost_multiplier > 0.0 && bo.cost_multiplier.is_finite()) {
                return Err(invalid(format!(
                    "borough {} has multiplier {}; multipliers must be positive",
                    bo.name, bo.cost_multiplier
                )));
            }
            if !boroughs.insert(bo.name.as_str()) {
                return Err(invalid(format!("borough {} listed twice", bo.name)));
            }
        }
        let service_map: HashMap<&str, &Service> =
            self.services.iter().map(|s| (s.name.as_str(), s)).collect();
        let mut ids = HashSet::new();
        for y in &self.youth {
            if !ids.insert(y.id.as_str()) {
                return Err(invalid(format!("youth id {} used twice", y.id)));
            }
            if y.attributes.len() != self.num_attributes {
                return Err(invalid(format!(
                    "youth {} has {} attributes, expected {}",
                    y.id,
                    y.attributes.len(),
                    self.num_attributes
                )));
            }
            if y.requests.is_empty() {
                return Err(invalid(format!("youth {} requests no services", y.id)));
            }
            let mut seen = HashSet::new();
            for r in &y.requests {
                let Some(svc) = service_map.get(r.service.as_str()) else {
                    return Err(invalid(format!(
                        "youth {} requests unknown service {}",
                        y.id, r.service
                    )));
                };
                if !seen.insert(r.service.as_str()) {
                    return Err(invalid(format!(
                        "youth {} requests service {} twice",
                        y.id, r.service
                    )));
                }
                let ctx = format!("youth {} service {}", y.id, r.service);
                if !(y.arrival <= r.earliest && r.earliest <= r.latest) {
                    return Err(invalid(format!(
                        "{ctx}: need arrival <= earliest <= latest, got {} / {} / {}",
                        y.arrival, r.earliest, r.latest
                    )));
                }
                if r.last_period() > horizon {
                    return Err(invalid(format!(
                        "{ctx}: latest + duration = {} exceeds the horizon {horizon}",
                        r.last_period()
                    )));
                }
                if r.earliest >= horizon {
                    return Err(invalid(format!(
                        "{ctx}: earliest start {} is outside the horizon",
                        r.earliest
                    )));
                }
                if r.frequency == 0 {
                    return Err(invalid(format!("{ctx}: frequency must be at least 1")));
                }
                match (svc.periodic, r.gap) {
                    (true, None) => return Err(invalid(format!("{ctx}: periodic service needs a gap"))),
                    (true, Some(g)) if g <= 2 * svc.flexibility => {
                        return Err(invalid(format!(
                            "{ctx}: gap {g} must exceed twice the flexibility {} so occurrence windows stay disjoint",
                            svc.flexibility
                        )))
                    }
                    (false, Some(_)) => return Err(invalid(format!("{ctx}: gap given for a non-periodic service"))),
                    _ => {}
                }
            }
        }
        let mut ids = HashSet::new();
        let mut has_referral = false;
        for s in &self.shelters {
            if !ids.insert(s.id.as_str()) {
                return Err(invalid(format!("shelter id {} used twice", s.id)));
            }
            if !boroughs.contains(s.borough.as_str()) {
                return Err(invalid(format!(
                    "shelter {} names unknown borough {}",
                    s.id, s.borough
                )));
            }
            if s.attributes.len() != self.num_attributes {
                return Err(invalid(format!(
                    "shelter {} has {} attributes, expected {}",
                    s.id,
                    s.attributes.len(),
                    self.num_attributes
                )));
            }
            if s.kind == ShelterKind::Referral {
                has_referral = true;
            }
            if s.kind == ShelterKind::Candidate && s.beds == 0 {
                return Err(invalid(format!("candidate shelter {} has no beds", s.id)));
            }
            let mut seen = HashSet::new();
            for svc in &s.services {
                if !service_map.contains_key(svc.service.as_str()) {
                    return Err(invalid(format!(
                        "shelter {} offers unknown service {}",
                        s.id, svc.service
                    )));
                }
                if !seen.insert(svc.service.as_str()) {
                    return Err(invalid(format!(
                        "shelter {} lists service {} twice",
                        s.id, svc.service
                    )));
                }
                let ctx = format!("shelter {} service {}", s.id, svc.service);
                if svc.capacity.len() != horizon
                    || svc.unscaled.len() != horizon
                    || svc.expansion_cost.len() != horizon
                {
                    return Err(invalid(format!(
                        "{ctx}: per-period vectors must have {horizon} entries"
                    )));
                }
                if let Some(t) = svc.capacity.iter().position(|&c| c > svc.max_capacity) {
                    return Err(invalid(format!(
                        "{ctx}: capacity {} at period {t} exceeds max capacity {}",
                        svc.capacity[t], svc.max_capacity
                    )));
                }
                if svc
                    .expansion_cost
                    .iter()
                    .any(|c| !(*c >= 0.0 && c.is_finite()))
                {
                    return Err(invalid(format!(
                        "{ctx}: expansion costs must be nonnegative"
                    )));
                }
            }
        }
        if !has_referral {
            return Err(invalid(
                "at least one referral organization is required".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Instance, InstanceError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| InstanceError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let found = value.get("schema_version").and_then(|v| v.as_u64());
        if found != Some(SCHEMA_VERSION as u64) {
            return Err(InstanceError::SchemaVersionMismatch {
                found,
                expected: SCHEMA_VERSION,
            });
        }
        let inst: Instance = serde_json::from_value(value).map_err(|e| InstanceError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        inst.validate()?;
        Ok(inst)
    }
}

/// `c(s) = C_bed * beds * L_b`.
pub fn opening_cost(
    shelter: &Shelter,
    params: &CostParams,
    borough_multiplier: f64,
) -> Result<f64, InstanceError> {
    if shelter.kind != ShelterKind::Candidate {
        return Err(InstanceError::NotACandidate(shelter.id.clone()));
    }
    Ok(params.bed_cost * shelter.beds as f64 * borough_multiplier)
}

pub fn partial_return(opening_cost: f64, rho: f64) -> f64 {
    rho * opening_cost
}

pub fn save_instance(instance: &Instance, path: &Path) -> Result<(), InstanceError> {
    fs::write(path, instance.to_json()).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_instance(path: &Path) -> Result<Instance, InstanceError> {
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Instance::from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn candidate(beds: u32) -> Shelter {
        Shelter {
            id: "c".into(),
            kind: ShelterKind::Candidate,
            borough: "Queens".into(),
            archetype: None,
            attributes: vec![],
            beds,
            critical_mass: 1,
            services: vec![],
        }
    }

    #[test]
    fn opening_cost_by_borough() {
        let p = CostParams::default();
        let s = candidate(8);
        assert_eq!(opening_cost(&s, &p, 1.0).unwrap(), 80_000.0);
        assert!((opening_cost(&s, &p, 1.85).unwrap() - 148_000.0).abs() < 1e-9);
        assert!((opening_cost(&s, &p, 0.789).unwrap() - 63_120.0).abs() < 1e-9);
        let mut sq = s;
        sq.kind = ShelterKind::StatusQuo;
        assert!(matches!(
            opening_cost(&sq, &p, 1.0),
            Err(InstanceError::NotACandidate(_))
        ));
    }

    #[test]
    fn partial_returns() {
        assert_eq!(partial_return(80_000.0, 4.0), 320_000.0);
        assert_eq!(partial_return(80_000.0, 0.0), 0.0);
        assert!((partial_return(100_000.0, 5.67) - 567_000.0).abs() < 1e-9);
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_half_up(0.1 * 5.0), 1);
        assert_eq!(round_half_up(0.1 * 4.0), 0);
        assert_eq!(round_half_up(0.1 * 15.0), 2);
        assert_eq!(round_half_up(2.0), 2);
    }
}
