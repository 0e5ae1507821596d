use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BuiltModel, ModelError, VariableKey, VariableKind};
use crate::instance::{Instance, ShelterKind};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub youth: String,
    pub shelter: String,
    pub service: String,
    pub period: usize,
    pub referral: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub shelter: String,
    pub service: String,
    pub period: usize,
    pub units: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderShare {
    pub youth: String,
    pub shelter: String,
    pub service: String,
    pub share: f64,
}

/// A solution expressed in instance terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub assignments: Vec<Assignment>,
    pub opened: Vec<String>,
    pub expansions: Vec<Expansion>,
    pub shares: Vec<ProviderShare>,
    /// Youth recorded as placed at each candidate shelter.
    pub placed: Vec<(String, String)>,
}

impl AssignmentPlan {
    pub fn referrals(&self) -> usize {
        self.assignments.iter().filter(|a| a.referral).count()
    }

    pub fn in_house(&self) -> usize {
        self.assignments.len() - self.referrals()
    }

    pub fn expansion_units(&self) -> u64 {
        self.expansions.iter().map(|e| e.units as u64).sum()
    }

    /// Youth served per `(shelter, service, period)`.
    pub fn load(&self) -> BTreeMap<(String, String, usize), usize> {
        let mut m = BTreeMap::new();
        for a in &self.assignments {
            *m.entry((a.shelter.clone(), a.service.clone(), a.period))
                .or_default() += 1;
        }
        m
    }

    /// Distinct youth served per shelter.
    pub fn youth_per_shelter(&self) -> BTreeMap<String, usize> {
        let mut seen = BTreeMap::<String, std::collections::BTreeSet<&str>>::new();
        for a in &self.assignments {
            seen.entry(a.shelter.clone()).or_default().insert(&a.youth);
        }
        seen.into_iter().map(|(k, v)| (k, v.len())).collect()
    }
}

fn check_len(built: &BuiltModel, len: usize) -> Result<(), ModelError> {
    if len != built.num_vars() {
        return Err(ModelError::DimensionMismatch {
            expected: built.num_vars(),
            found: len,
        });
    }
    Ok(())
}

/// Map a solution vector to instance terms. Integer columns are rounded.
pub fn decode(
    instance: &Instance,
    built: &BuiltModel,
    x: &[f64],
) -> Result<AssignmentPlan, ModelError> {
    check_len(built, x.len())?;
    let mut plan = AssignmentPlan::default();
    for (col, key) in built.index.keys().iter().enumerate() {
        let v = x[col];
        let shelter = key.shelter.map(|s| &instance.shelters[s]);
        let sid = || shelter.expect("keyed shelter").id.clone();
        let service = || {
            instance.services[key.service.expect("keyed service")]
                .name
                .clone()
        };
        let youth = || instance.youth[key.youth.expect("keyed youth")].id.clone();
        match key.kind {
            VariableKind::X if v.round() >= 1.0 => plan.assignments.push(Assignment {
                youth: youth(),
                shelter: sid(),
                service: service(),
                period: key.time.expect("keyed period"),
                referral: shelter.expect("keyed shelter").kind == ShelterKind::Referral,
            }),
            VariableKind::Nu if v.round() >= 1.0 => plan.opened.push(sid()),
            VariableKind::Pi if v.round() >= 1.0 => plan.placed.push((youth(), sid())),
            VariableKind::E if v.round() >= 1.0 => plan.expansions.push(Expansion {
                shelter: sid(),
                service: service(),
                period: key.time.expect("keyed period"),
                units: v.round() as u32,
            }),
            VariableKind::U if v > 0.0 => plan.shares.push(ProviderShare {
                youth: youth(),
                shelter: sid(),
                service: service(),
                share: v,
            }),
            _ => {}
        }
    }
    Ok(plan)
}

/// Inverse of [`decode`]: rebuild the solution vector from a plan.
pub fn encode(
    instance: &Instance,
    built: &BuiltModel,
    plan: &AssignmentPlan,
) -> Result<Vec<f64>, ModelError> {
    let shelter = |id: &str| {
        instance
            .shelters
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| ModelError::MissingParameter(format!("unknown shelter {id}")))
    };
    let youth = |id: &str| {
        instance
            .youth
            .iter()
            .position(|y| y.id == id)
            .ok_or_else(|| ModelError::MissingParameter(format!("unknown youth {id}")))
    };
    let service = |name: &str| {
        instance
            .service_index(name)
            .ok_or_else(|| ModelError::MissingParameter(format!("unknown service {name}")))
    };
    let column = |key: VariableKey| {
        built.index.get(&key).ok_or_else(|| {
            ModelError::MissingParameter(format!(
                "plan uses a column the model does not have: {key:?}"
            ))
        })
    };
    let mut x = vec![0.0; built.num_vars()];
    for a in &plan.assignments {
        x[column(VariableKey::x(
            youth(&a.youth)?,
            shelter(&a.shelter)?,
            service(&a.service)?,
            a.period,
        ))?] = 1.0;
    }
    for s in &plan.opened {
        x[column(VariableKey::nu(shelter(s)?))?] = 1.0;
    }
    for (y, s) in &plan.placed {
        x[column(VariableKey::pi(youth(y)?, shelter(s)?))?] = 1.0;
    }
    for e in &plan.expansions {
        x[column(VariableKey::e(
            shelter(&e.shelter)?,
            service(&e.service)?,
            e.period,
        ))?] = e.units as f64;
    }
    for u in &plan.shares {
        x[column(VariableKey::u(
            youth(&u.youth)?,
            shelter(&u.shelter)?,
            service(&u.service)?,
        ))?] = u.share;
    }
    Ok(x)
}
