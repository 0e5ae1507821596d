use bcr_core::lp::{
    solve_lp, verify_farkas, LinearProgram, LpStatus, Relation, Sense, SimplexEngine,
};
use bcr_core::tolerance::ToleranceConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best vertex found by brute force over all `n`-subsets of active
/// hyperplanes (rows plus bounds). `None` when no feasible vertex exists.
fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars;
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &lp.constraints {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_dense(&idx.iter().map(|&k| planes[k].clone()).collect::<Vec<_>>()) {
            if lp.max_violation(&x) <= 1e-9 {
                let v = lp.objective_value(&x);
                best = Some(match (best, lp.sense) {
                    (None, _) => v,
                    (Some(b), Sense::Maximize) => b.max(v),
                    (Some(b), Sense::Minimize) => b.min(v),
                });
            }
        }
        // Next combination.
        let k = planes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for t in i + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_dense(rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|(r, b)| {
            let mut v = r.clone();
            v.push(*b);
            v
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearProgram {
    let sense = if rng.gen_bool(0.5) {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let mut lp = LinearProgram::new(n, sense);
    for j in 0..n {
        lp.objective[j] = rng.gen_range(-5..=5) as f64;
        let lo = rng.gen_range(-3..=1) as f64;
        let hi = lo + rng.gen_range(0..=5) as f64;
        lp.set_bounds(j, lo, hi);
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coeffs.push((j, rng.gen_range(-4..=4) as f64));
            }
        }
        let rel = match rng.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        lp.add_constraint(coeffs, rel, rng.gen_range(-6..=8) as f64);
    }
    lp
}

#[test]
fn matches_vertex_enumeration_on_random_programs() {
    let tol = ToleranceConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut optimal = 0;
    let mut infeasible = 0;
    for case in 0..200 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=5);
        let lp = random_lp(&mut rng, n, m);
        let oracle = vertex_enumeration(&lp);
        let sol = solve_lp(&lp, &tol).unwrap();
        match oracle {
            Some(best) => {
                assert_eq!(sol.status, LpStatus::Optimal, "case {case}: {lp:?}");
                assert!(
                    (sol.objective_value - best).abs() <= 1e-6 * (1.0 + best.abs()),
                    "case {case}: got {} expected {best}",
                    sol.objective_value
                );
                assert!(lp.max_violation(&sol.primal) <= tol.feasibility);
                assert!(sol.duality_gap(&lp) <= tol.duality_gap, "case {case}");
                optimal += 1;
            }
            None => {
                assert_eq!(sol.status, LpStatus::Infeasible, "case {case}");
                let farkas = sol.diagnostics.farkas.as_ref().unwrap();
                assert!(verify_farkas(&lp, farkas, 1e-9), "case {case}");
                infeasible += 1;
            }
        }
    }
    assert!(
        optimal >= 20 && infeasible >= 5,
        "{optimal} optimal, {infeasible} infeasible"
    );
}

#[test]
fn larger_programs_are_certified() {
    let tol = ToleranceConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let mut lp = random_lp(&mut rng, 80, 60);
        // Shift right-hand sides so a random interior point is feasible.
        let x0: Vec<f64> = (0..lp.num_vars)
            .map(|j| lp.lower[j] + rng.gen::<f64>() * (lp.upper[j] - lp.lower[j]))
            .collect();
        for row in &mut lp.constraints {
            let act = row.activity(&x0);
            row.rhs = match row.relation {
                Relation::Le => act + rng.gen_range(0..3) as f64,
                Relation::Ge => act - rng.gen_range(0..3) as f64,
                Relation::Eq => act,
            };
        }
        let sol = solve_lp(&lp, &tol).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
        assert!(
            lp.max_violation(&sol.primal) <= tol.feasibility,
            "case {case}"
        );
        assert!(sol.duality_gap(&lp) <= tol.duality_gap, "case {case}");
        assert!(sol.objective_value.is_finite());
    }
}

#[test]
fn degenerate_assignment_polytope() {
    // 6x6 assignment with equal costs: highly degenerate.
    let k = 6;
    let mut lp = LinearProgram::new(k * k, Sense::Maximize);
    lp.objective = vec![1.0; k * k];
    for i in 0..k {
        lp.add_constraint(
            (0..k).map(|j| (i * k + j, 1.0)).collect(),
            Relation::Eq,
            1.0,
        );
        lp.add_constraint(
            (0..k).map(|j| (j * k + i, 1.0)).collect(),
            Relation::Le,
            1.0,
        );
    }
    let sol = solve_lp(&lp, &ToleranceConfig::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective_value - k as f64).abs() < 1e-9);
    assert!(sol.duality_gap(&lp) < 1e-9);
}

#[test]
fn repeated_solves_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lp = random_lp(&mut rng, 30, 20);
    let tol = ToleranceConfig::default();
    let a = solve_lp(&lp, &tol).unwrap();
    let b = solve_lp(&lp, &tol).unwrap();
    assert_eq!(a, b);
}

#[test]
fn warm_bound_changes_match_cold_solves() {
    let tol = ToleranceConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..30 {
        let mut lp = random_lp(&mut rng, 12, 8);
        let mut engine = SimplexEngine::new(&lp, tol).unwrap();
        engine.solve().unwrap();
        let snap = engine.snapshot();
        for _ in 0..4 {
            let j = rng.gen_range(0..lp.num_vars);
            let lo = lp.lower[j] + rng.gen_range(0..=1) as f64;
            let hi = lo.max(lp.upper[j] - rng.gen_range(0..=2) as f64);
            lp.set_bounds(j, lo, hi);
            engine.set_bounds(j, lo, hi);
            if rng.gen_bool(0.3) {
                engine.restore(&snap);
            }
            let warm = engine.solve().unwrap();
            let cold = solve_lp(&lp, &tol).unwrap();
            assert_eq!(warm, cold.status);
            if warm == LpStatus::Optimal {
                let v = engine.objective_value();
                assert!((v - cold.objective_value).abs() <= 1e-7 * (1.0 + v.abs()));
                assert!(lp.max_violation(engine.primal()) <= tol.feasibility);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_solutions_carry_a_tight_certificate(seed in any::<u64>(), n in 2usize..12, m in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = random_lp(&mut rng, n, m);
        let tol = ToleranceConfig::default();
        let sol = solve_lp(&lp, &tol).unwrap();
        match sol.status {
            LpStatus::Optimal => {
                prop_assert!(lp.max_violation(&sol.primal) <= tol.feasibility);
                prop_assert!(sol.duality_gap(&lp) <= tol.duality_gap);
            }
            LpStatus::Infeasible => {
                prop_assert!(verify_farkas(&lp, sol.diagnostics.farkas.as_ref().unwrap(), 1e-9));
            }
            LpStatus::Unbounded => prop_assert!(false, "bounded program reported unbounded"),
        }
    }
}
