use std::collections::HashMap;

use super::{
    benefit_value, BuiltModel, LambdaScope, ModelCounts, ModelError, ModelOptions, ObjectiveMode,
    RequestWindow, VariableIndex, VariableKey, VariableKind,
};
use crate::fractional::{AffineForm, FractionalModel};
use crate::instance::{Instance, ShelterKind};
use crate::lp::{LinearProgram, Relation, Sense};
use crate::mip::{MixedIntegerProgram, VarKind};

struct Columns {
    index: VariableIndex,
    kind: Vec<VarKind>,
    upper: Vec<f64>,
    benefit: Vec<f64>,
    cost: Vec<f64>,
}

impl Columns {
    fn add(
        &mut self,
        key: VariableKey,
        kind: VarKind,
        upper: f64,
        benefit: f64,
        cost: f64,
    ) -> usize {
        self.kind.push(kind);
        self.upper.push(upper);
        self.benefit.push(benefit);
        self.cost.push(cost);
        self.index.push(key)
    }
}

#[derive(Default)]
struct Rows {
    rows: Vec<(Vec<(usize, f64)>, Relation, f64)>,
    families: Vec<(String, usize)>,
}

impl Rows {
    fn add(&mut self, family: &str, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        match self.families.last_mut() {
            Some((name, n)) if name == family => *n += 1,
            _ => self.families.push((family.to_string(), 1)),
        }
        self.rows.push((coeffs, relation, rhs));
    }
}

fn windows(
    instance: &Instance,
    y: usize,
    i: usize,
    notes: &mut Vec<String>,
) -> Result<RequestWindow, ModelError> {
    let youth = &instance.youth[y];
    let svc = &instance.services[i];
    let r = youth
        .requests
        .iter()
        .find(|r| r.service == svc.name)
        .expect("request exists");
    let horizon_end = instance.horizon - 1;
    let infeasible = |reason: String| ModelError::InfeasibleWindow {
        youth: youth.id.clone(),
        service: svc.name.clone(),
        reason,
    };
    let last = r.last_period().min(horizon_end);
    if r.last_period() > horizon_end {
        notes.push(format!(
            "youth {} service {}: window end {} clipped to {horizon_end}",
            youth.id,
            svc.name,
            r.last_period()
        ));
    }
    let occurrences = if svc.periodic {
        let gap = r.gap.expect("validated periodic gap");
        let k = svc.flexibility;
        let mut occ = Vec::with_capacity(r.frequency);
        for j in 0..r.frequency {
            let center = r.earliest + j * gap;
            let w: Vec<usize> = (center.saturating_sub(k)..=center + k)
                .filter(|&t| t >= r.earliest && t <= last)
                .collect();
            if w.is_empty() {
                return Err(infeasible(format!(
                    "occurrence {} near period {center} falls outside [{}, {last}]",
                    j + 1,
                    r.earliest
                )));
            }
            if center + k > last {
                notes.push(format!(
                    "youth {} service {}: occurrence {} clipped at period {last}",
                    youth.id,
                    svc.name,
                    j + 1
                ));
            }
            occ.push(w);
        }
        Some(occ)
    } else {
        if last + 1 - r.earliest < r.frequency {
            return Err(infeasible(format!(
                "{} provisions do not fit in periods {}..={last}",
                r.frequency, r.earliest
            )));
        }
        None
    };
    Ok(RequestWindow {
        youth: y,
        service: i,
        earliest: r.earliest,
        latest: r.latest,
        last,
        frequency: r.frequency,
        occurrences,
    })
}

/// Assemble the program for `instance` under `opts`.
pub fn build_model(instance: &Instance, opts: &ModelOptions) -> Result<BuiltModel, ModelError> {
    instance.validate()?;
    let num_boroughs = instance.boroughs.len();
    if opts.lambda.len() != num_boroughs {
        return Err(ModelError::DimensionMismatch {
            expected: num_boroughs,
            found: opts.lambda.len(),
        });
    }
    let any_lambda = opts.lambda.iter().any(|&l| l > 0);
    if opts.mode == ObjectiveMode::RatioMax && !opts.status_quo_only && !any_lambda {
        return Err(ModelError::ZeroAction);
    }
    let svc_index: HashMap<&str, usize> = instance
        .services
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    let horizon = instance.horizon;
    let num_services = instance.services.len();
    let num_youth = instance.youth.len();
    let num_shelters = instance.shelters.len();
    let num_candidates = instance.num_candidates();
    let mut notes = Vec::new();

    let mut requests = Vec::new();
    for (y, youth) in instance.youth.iter().enumerate() {
        for r in &youth.requests {
            requests.push(windows(
                instance,
                y,
                svc_index[r.service.as_str()],
                &mut notes,
            )?);
        }
    }

    let mut cols = Columns {
        index: VariableIndex::default(),
        kind: Vec::new(),
        upper: Vec::new(),
        benefit: Vec::new(),
        cost: Vec::new(),
    };
    let mut rows = Rows::default();
    let t_len = horizon as f64;

    // Assignment and provider-share columns, request by request.
    let mut load: HashMap<(usize, usize, usize), Vec<usize>> = HashMap::new();
    let mut providers: Vec<Vec<(usize, Vec<usize>, usize)>> = Vec::with_capacity(requests.len());
    let mut shares_by_youth_shelter: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for req in &requests {
        let youth = &instance.youth[req.youth];
        let name = &instance.services[req.service].name;
        let periods = req.periods();
        let mut list = Vec::new();
        for (s, shelter) in instance.shelters.iter().enumerate() {
            let Some(offer) = shelter.offers(name) else {
                continue;
            };
            if !shelter.accepts(youth) {
                continue;
            }
            let referral = shelter.kind == ShelterKind::Referral;
            let r = if referral {
                instance.cost.assignment_referral
            } else {
                instance.cost.assignment_in_house
            };
            let mut xs = Vec::with_capacity(periods.len());
            for &t in &periods {
                if !referral && offer.capacity[t] == 0 && offer.max_capacity == 0 {
                    continue;
                }
                let b = if referral {
                    0.0
                } else {
                    benefit_value(instance, req.earliest, req.frequency, t)
                };
                let c = cols.add(
                    VariableKey::x(req.youth, s, req.service, t),
                    VarKind::Binary,
                    1.0,
                    b,
                    r,
                );
                load.entry((s, req.service, t)).or_default().push(c);
                xs.push(c);
            }
            if xs.is_empty() {
                continue;
            }
            let u = cols.add(
                VariableKey::u(req.youth, s, req.service),
                VarKind::Continuous,
                1.0,
                0.0,
                0.0,
            );
            shares_by_youth_shelter
                .entry((req.youth, s))
                .or_default()
                .push(u);
            list.push((s, xs, u));
        }
        if list.is_empty() {
            return Err(ModelError::MissingParameter(format!(
                "no shelter can provide {name} to youth {}",
                youth.id
            )));
        }
        providers.push(list);
    }

    // Ever-placed indicators for candidate shelters.
    let mut pis: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_shelters];
    for y in 0..num_youth {
        for (s, shelter) in instance.shelters.iter().enumerate() {
            if shelter.kind == ShelterKind::Candidate
                && shares_by_youth_shelter.contains_key(&(y, s))
            {
                let c = cols.add(VariableKey::pi(y, s), VarKind::Binary, 1.0, 0.0, 0.0);
                pis[s].push((y, c));
            }
        }
    }

    // Expansion columns where the capacity row can bind.
    let mut capacity_rows = Vec::new();
    for (s, shelter) in instance.shelters.iter().enumerate() {
        if shelter.kind == ShelterKind::Referral {
            continue;
        }
        for offer in &shelter.services {
            let i = svc_index[offer.service.as_str()];
            for t in 0..horizon {
                let Some(xs) = load.get(&(s, i, t)) else {
                    continue;
                };
                let cap = offer.capacity[t];
                if xs.len() <= cap as usize {
                    continue;
                }
                let room = offer.max_capacity.saturating_sub(cap);
                let e = (room > 0).then(|| {
                    let upper = if opts.status_quo_only {
                        0.0
                    } else {
                        room as f64
                    };
                    cols.add(
                        VariableKey::e(s, i, t),
                        VarKind::Integer,
                        upper,
                        0.0,
                        offer.expansion_cost[t],
                    )
                });
                capacity_rows.push((xs.clone(), e, cap));
            }
        }
    }

    // Opening decisions.
    let mut nus: Vec<Option<usize>> = vec![None; num_shelters];
    let mut openable_by_borough = vec![0usize; num_boroughs];
    for (s, shelter) in instance.candidates() {
        let can_open = !opts.status_quo_only && pis[s].len() >= shelter.critical_mass as usize;
        let cost = instance.opening_cost(shelter)?;
        let ret = instance.partial_return(shelter)?;
        let c = cols.add(
            VariableKey::nu(s),
            VarKind::Binary,
            if can_open { 1.0 } else { 0.0 },
            ret,
            cost,
        );
        nus[s] = Some(c);
        if can_open {
            let b = instance
                .borough_index(&shelter.borough)
                .expect("validated borough");
            openable_by_borough[b] += 1;
        }
    }
    let openable: usize = openable_by_borough.iter().sum();
    match opts.scope {
        LambdaScope::Citywide => {
            let need = opts.lambda.iter().copied().max().unwrap_or(0);
            if need as usize > openable {
                let b = opts.lambda.iter().position(|&l| l == need).unwrap_or(0);
                return Err(ModelError::InfeasibleLambda {
                    borough: instance.boroughs[b].name.clone(),
                    required: need,
                    available: openable,
                });
            }
        }
        LambdaScope::PerBorough => {
            for (b, &need) in opts.lambda.iter().enumerate() {
                if need as usize > openable_by_borough[b] {
                    return Err(ModelError::InfeasibleLambda {
                        borough: instance.boroughs[b].name.clone(),
                        required: need,
                        available: openable_by_borough[b],
                    });
                }
            }
        }
    }

    for (xs, e, cap) in capacity_rows {
        let mut coeffs: Vec<(usize, f64)> = xs.iter().map(|&c| (c, 1.0)).collect();
        if let Some(e) = e {
            coeffs.push((e, -1.0));
        }
        rows.add("capacity", coeffs, Relation::Le, cap as f64);
    }
    for list in &providers {
        if list.len() >= 2 {
            rows.add(
                "single_provider",
                list.iter().map(|(_, _, u)| (*u, 1.0)).collect(),
                Relation::Le,
                1.0,
            );
        }
    }
    for list in &providers {
        for (_, xs, u) in list {
            let mut coeffs: Vec<(usize, f64)> = xs.iter().map(|&c| (c, 1.0)).collect();
            coeffs.push((*u, -t_len));
            rows.add("provider_link", coeffs, Relation::Le, 0.0);
        }
    }
    let period_of = |c: usize| {
        cols.index
            .key(c)
            .time
            .expect("assignment column has a period")
    };
    for (req, list) in requests.iter().zip(&providers) {
        let start_end = req.latest.min(req.last);
        let coeffs: Vec<(usize, f64)> = list
            .iter()
            .flat_map(|(_, xs, _)| xs.iter().copied())
            .filter(|&c| {
                let t = period_of(c);
                t >= req.earliest && t <= start_end
            })
            .map(|c| (c, 1.0))
            .collect();
        if coeffs.is_empty() {
            let youth = &instance.youth[req.youth];
            return Err(ModelError::InfeasibleWindow {
                youth: youth.id.clone(),
                service: instance.services[req.service].name.clone(),
                reason: format!("no usable period between {} and {start_end}", req.earliest),
            });
        }
        rows.add("start_window", coeffs, Relation::Ge, 1.0);
    }
    for (req, list) in requests.iter().zip(&providers) {
        if req.occurrences.is_none() {
            let coeffs = list
                .iter()
                .flat_map(|(_, xs, _)| xs.iter().map(|&c| (c, 1.0)))
                .collect();
            rows.add("exact_count", coeffs, Relation::Eq, req.frequency as f64);
        }
    }
    for (req, list) in requests.iter().zip(&providers) {
        if let Some(occ) = &req.occurrences {
            let mut coeffs = Vec::new();
            for w in occ {
                for (_, xs, _) in list {
                    coeffs.extend(
                        xs.iter()
                            .filter(|&&c| w.contains(&period_of(c)))
                            .map(|&c| (c, 1.0)),
                    );
                }
            }
            rows.add("periodic_count", coeffs, Relation::Eq, req.frequency as f64);
        }
    }
    for (req, list) in requests.iter().zip(&providers) {
        if let Some(occ) = &req.occurrences {
            for (_, xs, _) in list {
                for w in occ {
                    let coeffs: Vec<(usize, f64)> = xs
                        .iter()
                        .filter(|&&c| w.contains(&period_of(c)))
                        .map(|&c| (c, 1.0))
                        .collect();
                    if coeffs.len() >= 2 {
                        rows.add("periodic_once", coeffs, Relation::Le, 1.0);
                    }
                }
            }
        }
    }

    let before_action = rows.rows.len();
    let candidate_nus: Vec<(usize, usize)> = nus
        .iter()
        .enumerate()
        .filter_map(|(s, c)| c.map(|c| (s, c)))
        .collect();
    match opts.scope {
        LambdaScope::Citywide => {
            let need = opts.lambda.iter().copied().max().unwrap_or(0);
            if need > 0 {
                let coeffs = candidate_nus.iter().map(|&(_, c)| (c, 1.0)).collect();
                rows.add("min_open", coeffs, Relation::Ge, need as f64);
            }
        }
        LambdaScope::PerBorough => {
            for (b, &need) in opts.lambda.iter().enumerate() {
                if need == 0 {
                    continue;
                }
                let name = &instance.boroughs[b].name;
                let coeffs = candidate_nus
                    .iter()
                    .filter(|&&(s, _)| &instance.shelters[s].borough == name)
                    .map(|&(_, c)| (c, 1.0))
                    .collect();
                rows.add("min_open", coeffs, Relation::Ge, need as f64);
            }
        }
    }
    for &(s, nu) in &candidate_nus {
        let k = instance.shelters[s].critical_mass;
        if k > 0 && !pis[s].is_empty() {
            let mut coeffs: Vec<(usize, f64)> = pis[s].iter().map(|&(_, c)| (c, 1.0)).collect();
            coeffs.push((nu, -(k as f64)));
            rows.add("critical_mass", coeffs, Relation::Ge, 0.0);
        }
    }
    let link = (num_services * num_youth) as f64;
    for &(s, nu) in &candidate_nus {
        let mut coeffs: Vec<(usize, f64)> = (0..num_youth)
            .filter_map(|y| shares_by_youth_shelter.get(&(y, s)))
            .flatten()
            .map(|&u| (u, 1.0))
            .collect();
        if !coeffs.is_empty() {
            coeffs.push((nu, -link));
            rows.add("open_link", coeffs, Relation::Le, 0.0);
        }
    }
    for (s, list) in pis.iter().enumerate() {
        for &(y, pi) in list {
            let mut coeffs: Vec<(usize, f64)> = shares_by_youth_shelter[&(y, s)]
                .iter()
                .map(|&u| (u, 1.0))
                .collect();
            coeffs.push((pi, -(num_services as f64)));
            rows.add("ever_assigned", coeffs, Relation::Le, 0.0);
        }
    }
    let num_action_constraints = rows.rows.len() - before_action;

    let n = cols.index.len();
    let (sense, objective) = match opts.mode {
        ObjectiveMode::BenefitMax | ObjectiveMode::RatioMax => {
            (Sense::Maximize, cols.benefit.clone())
        }
        ObjectiveMode::CostMin => (Sense::Minimize, cols.cost.clone()),
        ObjectiveMode::ProfitMax => (
            Sense::Maximize,
            cols.benefit
                .iter()
                .zip(&cols.cost)
                .map(|(b, c)| b - c)
                .collect(),
        ),
    };
    let mut lp = LinearProgram::new(n, sense);
    lp.objective = objective;
    for (j, &u) in cols.upper.iter().enumerate() {
        lp.set_bounds(j, 0.0, u);
    }
    let num_constraints = rows.rows.len();
    for (coeffs, rel, rhs) in rows.rows {
        lp.add_constraint(coeffs, rel, rhs);
    }
    let mip = MixedIntegerProgram::new(lp, cols.kind);
    let mut constraints = mip.clone();
    constraints.base.objective = vec![0.0; n];

    let (s_len, i_len, y_len) = (num_shelters, num_services, num_youth);
    let counts = ModelCounts {
        num_vars: n,
        num_binaries: mip
            .var_kind
            .iter()
            .filter(|k| **k == VarKind::Binary)
            .count(),
        num_integers: mip
            .var_kind
            .iter()
            .filter(|k| **k == VarKind::Integer)
            .count(),
        num_constraints,
        num_action_constraints,
        num_x: cols.index.count(VariableKind::X),
        unpruned_x: y_len * s_len * i_len * horizon,
        max_vars: s_len * (i_len * (horizon * y_len + y_len + horizon) + y_len) + num_candidates,
        max_binaries: y_len * s_len * (i_len * horizon + 1) + num_candidates,
        max_action_constraints: 2 * num_candidates + num_boroughs + y_len * s_len,
        families: rows.families,
    };
    debug_assert!(counts.within_bounds(), "{counts:?}");
    Ok(BuiltModel {
        options: opts.clone(),
        fractional: FractionalModel {
            constraints,
            benefit: AffineForm::new(cols.benefit, 0.0),
            cost: AffineForm::new(cols.cost, 0.0),
        },
        mip,
        index: cols.index,
        counts,
        requests,
        notes,
    })
}
