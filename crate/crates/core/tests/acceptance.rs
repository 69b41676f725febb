//! Acceptance criteria. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; the process fails if any
//! criterion does.

mod common;

use std::time::{Duration, Instant};

use infodesign::atomic::{check_bce_bruteforce, convergence_run, expand_symmetric, AtomicGame};
use infodesign::bundled::{self, random_congestion, random_congestion_with, random_parallel_affine, RandomCongestion};
use infodesign::designer_lp::{
    build_grid, solve_outcome_lp, solve_program_p, support_bound_check, DesignerCost, DesignerProblem,
};
use infodesign::equilibrium_checks::{check_bce_flowlevel, check_bcwe, check_sbcwe, Concept, Witness};
use infodesign::expr::Rational;
use infodesign::game_model::{load_profile, social_cost};
use infodesign::implementation::{
    bwe_cost_uniqueness_probe, bwe_violation, direct_structure_from_bcwe, outcome_of_strategies,
    random_information_structure, solve_bwe, KernelKind,
};
use infodesign::wardrop::{
    enumerate_we_grid, grid_flows, potential_gradient, random_flow, solve_we_potential,
    solve_we_potential_from,
};
use infodesign::FlowProfile;
use rand::Rng;

type Verdict = Result<String, String>;

fn single(a: f64, b: f64) -> FlowProfile {
    FlowProfile::single(vec![a, b])
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed(limit: Duration, elapsed: Duration) -> Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:?}, limit {limit:?}"))
}

fn el_farol_we_set() -> Verdict {
    let g = bundled::el_farol();
    let t = Instant::now();
    let found = enumerate_we_grid(&g, 0, 64, 1e-9).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let expected = [single(1.0, 0.0), single(0.75, 0.25), single(0.25, 0.75)];
    ensure(found.len() == 3, format!("found {} equilibria", found.len()))?;
    for e in &expected {
        ensure(found.iter().any(|f| f.linf_distance(e) <= 1e-4), format!("missing {:?}", e.pop(0)))?;
    }
    for f in &found {
        let c = social_cost(&g, f, 0).map_err(|e| e.to_string())?;
        ensure((c - 1.0).abs() <= 1e-9, format!("social cost {c} at {:?}", f.pop(0)))?;
    }
    timed(Duration::from_secs(1), elapsed)?;
    Ok(format!("3 equilibria, social cost 1, {elapsed:?}"))
}

fn el_farol_optimal_cwe() -> Verdict {
    let mut notes = Vec::new();
    for resolution in [4, 8, 12] {
        let t = Instant::now();
        let p = DesignerProblem::on_grid(bundled::el_farol(), DesignerCost::Social, resolution, &[])
            .map_err(|e| e.to_string())?;
        let sol = solve_program_p(&p).map_err(|e| e.to_string())?;
        let elapsed = t.elapsed();
        ensure((sol.objective - 2.0 / 3.0).abs() <= 1e-9, format!("objective {} at resolution {resolution}", sol.objective))?;
        let merged = sol.outcome.merged(1e-12);
        let support = merged.state(0);
        ensure(support.len() == 2, format!("support size {} at resolution {resolution}", support.len()))?;
        for (y, w) in [(single(1.0, 0.0), 1.0 / 3.0), (single(0.5, 0.5), 2.0 / 3.0)] {
            let hit = support.iter().find(|(f, _)| f.linf_distance(&y) <= 1e-12);
            ensure(hit.is_some_and(|(_, v)| (v - w).abs() <= 1e-9), format!("weight of {:?} is not {w}", y.pop(0)))?;
        }
        timed(Duration::from_secs(1), elapsed)?;
        notes.push(format!("r={resolution} {elapsed:?}"));
    }
    Ok(format!("objective 2/3 with weights 1/3, 2/3 ({})", notes.join(", ")))
}

fn pigou_bcwe() -> Verdict {
    let g = bundled::pigou_info();
    let o = bundled::pigou_paper_bcwe(&g);
    let r = check_bcwe(&g, &o);
    ensure(r.worst_violation <= 1e-12, format!("violation {}", r.worst_violation))?;
    ensure(
        r.witness == Some(Witness { pop: 0, recommended: Some(0), deviation: 1 }) && r.lhs == 0.75 && r.rhs == 0.75,
        format!("binding constraint {:?} {} vs {}", r.witness, r.lhs, r.rhs),
    )?;
    let constant = check_sbcwe(&g, &[single(1.0, 0.0), single(1.0, 0.0)]);
    ensure(constant.worst_violation > 0.0, "constant map passes sbcwe")?;
    let cost = o.expected_social_cost(&g).map_err(|e| e.to_string())?;
    ensure((cost - 1.0).abs() <= 1e-12, format!("expected social cost {cost}"))?;
    Ok(format!("(a,b) binds at 3/4 = 3/4; constant map violates by {}; cost 1", constant.worst_violation))
}

fn two_population_structure() -> Verdict {
    let g = bundled::el_farol();
    let cwe = bundled::el_farol_cwe();
    let imp = direct_structure_from_bcwe(&g, &cwe, 2, KernelKind::Symmetrized).map_err(|e| e.to_string())?;
    let s = &imp.structure;
    ensure(s.sizes == vec![Rational::new(1, 2); 2], "population sizes are not 1/2")?;
    let kernel = &s.kernel[0];
    ensure(kernel.len() == 3, format!("kernel support {}", kernel.len()))?;
    // relabel populations so that (a,b) and (b,a) both appear
    for tau in [[0, 0], [0, 1], [1, 0]] {
        let w = kernel.iter().find(|(t, _)| t[..] == tau).map(|(_, w)| *w);
        ensure(w.is_some_and(|w| (w - 1.0 / 3.0).abs() <= 1e-15), format!("weight of {tau:?} is {w:?}"))?;
    }
    let v = bwe_violation(&g, s, &imp.strategies).map_err(|e| e.to_string())?.violation;
    ensure(v <= 1e-12, format!("violation {v}"))?;
    ensure(outcome_of_strategies(s, &imp.strategies) == cwe, "pushed outcome differs from the CWE")?;
    Ok(format!("two populations of size 1/2, weights 1/3, violation {v}"))
}

fn bwe_outcomes_are_bcwe() -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let g = random_congestion(1000 + seed).map_err(|e| e.to_string())?;
        let s = random_information_structure(g.num_states(), 3, 3, seed);
        let sol = solve_bwe(&g, &s, 1e-10).map_err(|e| e.to_string())?;
        ensure(sol.violation <= 1e-8, format!("seed {seed}: equilibrium violation {}", sol.violation))?;
        let o = outcome_of_strategies(&s, &sol.strategies);
        let v = check_bcwe(&g, &o).worst_violation;
        ensure(v <= 1e-6, format!("seed {seed}: pushed outcome violates by {v}"))?;
        worst = worst.max(v);
    }
    Ok(format!("100 structures, worst bcwe violation {worst:.2e}"))
}

/// Largest gap between the social cost of slack-feasible coarse correlated
/// distributions on the grid and the equilibrium cost.
fn ccwe_gap(g: &infodesign::GameSpec, resolution: usize, slack: f64, we_cost: f64) -> Result<f64, String> {
    let cands = vec![grid_flows(&g.shape(), resolution).map_err(|e| e.to_string())?];
    let lo = DesignerProblem::new(g.clone(), DesignerCost::Social, cands.clone()).map_err(|e| e.to_string())?;
    let hi = DesignerProblem::new(g.clone(), DesignerCost::Expr(common::negated_social(g)), cands)
        .map_err(|e| e.to_string())?;
    let min = solve_outcome_lp(&lo, Concept::Cbcwe, slack).map_err(|e| e.to_string())?.objective;
    let max = -solve_outcome_lp(&hi, Concept::Cbcwe, slack).map_err(|e| e.to_string())?.objective;
    Ok((we_cost - min).max(max - we_cost))
}

fn potential_games_have_unique_costs() -> Verdict {
    let mut worst_cost: f64 = 0.0;
    let mut worst_exact: f64 = 0.0;
    for seed in 0..50u64 {
        let links = 2 + (seed as usize % 3);
        let g = random_parallel_affine(seed, links, 1);
        let mut r = common::rng(seed);
        let mut costs: Vec<Vec<f64>> = Vec::new();
        let mut used: Vec<Vec<bool>> = Vec::new();
        for _ in 0..20 {
            let start = random_flow(&g.shape(), &[1.0], &mut r);
            let we = solve_we_potential_from(&g, 0, start, 1e-12, 100_000).map_err(|e| e.to_string())?;
            ensure(we.converged, format!("seed {seed}: solver did not converge"))?;
            costs.push(g.cost_profile(&we.flow, 0)[0].clone());
            used.push(we.flow.pop(0).iter().map(|v| *v > 0.0).collect());
        }
        for i in 0..costs.len() {
            for j in i + 1..costs.len() {
                for a in 0..links {
                    if used[i][a] || used[j][a] {
                        worst_cost = worst_cost.max((costs[i][a] - costs[j][a]).abs());
                    }
                }
            }
        }
        ensure(worst_cost <= 1e-6, format!("seed {seed}: cost spread {worst_cost}"))?;

        // Coarse correlated distributions: exactly feasible ones on grids
        // seeded with the equilibrium, and slack-feasible ones on plain
        // grids with slack proportional to the mesh.
        let we = solve_we_potential(&g, 0, 1e-13, 100_000).map_err(|e| e.to_string())?;
        let we_cost = social_cost(&g, &we.flow, 0).map_err(|e| e.to_string())?;
        let spec = g.congestion().expect("parallel links are congestion games");
        let cmax = spec.latency.iter().map(|l| l[0].eval(1.0)).fold(0.0, f64::max);
        let slope = spec.latency.iter().map(|l| l[0].derivative(1.0)).fold(0.0, f64::max);
        let mut gaps = Vec::new();
        for resolution in [8usize, 16, 32] {
            let seeded = build_grid(&g, resolution, std::slice::from_ref(&we.flow)).map_err(|e| e.to_string())?;
            let lo = DesignerProblem::new(g.clone(), DesignerCost::Social, seeded.clone()).map_err(|e| e.to_string())?;
            let hi = DesignerProblem::new(g.clone(), DesignerCost::Expr(common::negated_social(&g)), seeded)
                .map_err(|e| e.to_string())?;
            let min = solve_outcome_lp(&lo, Concept::Cbcwe, 0.0).map_err(|e| e.to_string())?.objective;
            let max = -solve_outcome_lp(&hi, Concept::Cbcwe, 0.0).map_err(|e| e.to_string())?.objective;
            worst_exact = worst_exact.max((we_cost - min).max(max - we_cost));
            let slack = (links as f64 * cmax + 2.0 * slope) / resolution as f64;
            gaps.push(ccwe_gap(&g, resolution, slack, we_cost)?);
        }
        ensure(gaps[1] < gaps[0] && gaps[2] < gaps[1], format!("seed {seed}: gaps {gaps:?} do not shrink"))?;
        ensure(worst_exact <= 1e-8, format!("seed {seed}: exact coarse gap {worst_exact}"))?;
    }
    Ok(format!(
        "cost spread {worst_cost:.1e}; exact coarse gap {worst_exact:.1e}; slack gaps shrink on 8/16/32 for all 50 games"
    ))
}

fn support_bounds() -> Verdict {
    let mut problems: Vec<DesignerProblem> = Vec::new();
    let err = |e: infodesign::Error| e.to_string();
    problems.push(DesignerProblem::on_grid(bundled::el_farol(), DesignerCost::Social, 8, &[]).map_err(err)?);
    let pigou = bundled::pigou_info();
    let seeds = [single(1.0, 0.0), single(0.0, 1.0)];
    problems.push(DesignerProblem::on_grid(pigou.clone(), DesignerCost::Social, 1, &seeds).map_err(err)?);
    problems.push(DesignerProblem::on_grid(pigou, DesignerCost::Social, 8, &[]).map_err(err)?);
    problems.push(DesignerProblem::on_grid(bundled::pigou_network(), DesignerCost::Social, 8, &[]).map_err(err)?);
    for seed in 0..100u64 {
        let g = if seed % 2 == 0 {
            random_congestion(seed).map_err(err)?
        } else {
            common::random_two_action_game(seed, 1 + (seed as usize % 3))
        };
        let cost = if seed % 4 < 2 { DesignerCost::Social } else { DesignerCost::Expr(common::negated_social(&g)) };
        problems.push(DesignerProblem::on_grid(g, cost, 6, &[]).map_err(err)?);
    }
    let mut largest = (0, 0);
    for (i, p) in problems.iter().enumerate() {
        let sol = solve_program_p(p).map_err(|e| format!("problem {i}: {e}"))?;
        let b = support_bound_check(&sol, &p.game);
        ensure(b.holds() && b.vertex_bound_holds(), format!("problem {i}: support {} bounds {:?}", b.support, b))?;
        let v = check_bcwe(&p.game, &sol.outcome).worst_violation;
        ensure(v <= 1e-9, format!("problem {i}: solution violates by {v}"))?;
        if b.support > largest.0 {
            largest = (b.support, b.vertex_bound);
        }
    }
    Ok(format!("{} problems within both bounds (largest support {} of {})", problems.len(), largest.0, largest.1))
}

fn bwe_uniqueness() -> Verdict {
    let err = |e: infodesign::Error| e.to_string();
    let (mut cost, mut flow, mut strategy) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..20u64 {
        let g = random_congestion(2000 + seed).map_err(err)?;
        let strict = random_parallel_affine(3000 + seed, 2 + seed as usize % 3, 1 + seed as usize % 2);
        for j in 0..5u64 {
            let s = random_information_structure(g.num_states(), 3, 3, 100 * seed + j);
            let r = bwe_cost_uniqueness_probe(&g, &s, 5, seed, 1e-11).map_err(err)?;
            ensure(r.max_violation <= 1e-10, format!("game {seed}: solver violation {}", r.max_violation))?;
            cost = cost.max(r.cost_deviation);
            let s = random_information_structure(strict.num_states(), 3, 3, 100 * seed + j);
            let r = bwe_cost_uniqueness_probe(&strict, &s, 5, seed, 1e-11).map_err(err)?;
            cost = cost.max(r.cost_deviation);
            flow = flow.max(r.flow_deviation);
            strategy = strategy.max(r.strategy_deviation);
        }
    }
    ensure(cost <= 1e-6, format!("cost deviation {cost}"))?;
    ensure(flow <= 1e-6, format!("aggregate flow deviation {flow}"))?;
    Ok(format!(
        "cost deviation {cost:.1e}, aggregate flow deviation {flow:.1e} (per-type strategies differ by up to {strategy:.1e})"
    ))
}

fn convergence() -> Verdict {
    let t = Instant::now();
    let ns: Vec<usize> = (2..=8).map(|j| 1usize << j).collect();
    let pigou = bundled::pigou_info();
    let cases = [("El Farol", bundled::el_farol(), bundled::el_farol_cwe(), 2usize), ("Pigou", pigou.clone(), bundled::pigou_paper_bcwe(&pigou), 2)];
    let mut notes = Vec::new();
    for (name, g, o, denom) in cases {
        let rows = convergence_run(&g, &o, &ns).map_err(|e| e.to_string())?;
        for w in rows.windows(2) {
            ensure(w[1].epsilon <= w[0].epsilon, format!("{name}: eps increases at n={}", w[1].n))?;
        }
        let (first, last) = (&rows[0], &rows[rows.len() - 1]);
        ensure(last.epsilon <= first.epsilon / 10.0, format!("{name}: eps_256 = {} vs eps_4 = {}", last.epsilon, first.epsilon))?;
        for r in &rows {
            if r.n % denom == 0 {
                ensure(r.wasserstein == 0.0, format!("{name}: distance {} at n={}", r.wasserstein, r.n))?;
            }
        }
        notes.push(format!("{name} eps_4={} eps_256={}", first.epsilon, last.epsilon));
    }
    let elapsed = t.elapsed();
    timed(Duration::from_secs(10), elapsed)?;
    Ok(format!("{}; distances 0; {elapsed:?}", notes.join(", ")))
}

fn oracle_equivalence() -> Verdict {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..240u64 {
        let mut r = common::rng(seed);
        let states = 1 + (seed as usize % 2);
        let g = common::random_two_action_game(10_000 + seed, states);
        let n = r.gen_range(1..=6);
        let bce = common::random_symmetric_bce(&g, &mut r, n);
        let flow = check_bce_flowlevel(&g, &bce).worst_violation;
        let atomic = AtomicGame::uniform(g, n).map_err(|e| e.to_string())?;
        let beta = expand_symmetric(&atomic, &bce).map_err(|e| e.to_string())?;
        let brute = check_bce_bruteforce(&atomic, &beta).map_err(|e| e.to_string())?.report.worst_violation;
        let d = (flow - brute).abs();
        ensure(d <= 1e-10, format!("seed {seed}: flow-level {flow} vs brute force {brute}"))?;
        worst = worst.max(d);
        count += 1;
    }
    Ok(format!("{count} instances, largest difference {worst:.1e}"))
}

fn gradient_check() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut r = common::rng(11);
    let opts = RandomCongestion { populations: 2, max_degree: 3, ..RandomCongestion::default() };
    for i in 0..1000u64 {
        let g = random_congestion_with(i / 10, &opts).map_err(|e| e.to_string())?;
        let s = r.gen_range(0..g.num_states());
        let y = random_flow(&g.shape(), &vec![1.0; g.num_populations()], &mut r);
        let grad = potential_gradient(&g, &y, s).map_err(|e| e.to_string())?;
        let spec = g.congestion().expect("random congestion game");
        let h = 1e-5;
        for k in 0..g.num_populations() {
            for a in 0..g.num_actions(k) {
                let (mut up, mut down) = (y.clone(), y.clone());
                up.pop_mut(k)[a] += h;
                down.pop_mut(k)[a] -= h;
                // the potential extends off the simplex through the loads
                let phi = |f: &FlowProfile| spec.potential_at_loads(&load_profile(spec, f), s);
                let fd = (phi(&up) - phi(&down)) / (2.0 * h);
                let rel = (fd - grad[k][a]).abs() / grad[k][a].abs().max(1.0);
                worst = worst.max(rel);
            }
        }
    }
    ensure(worst <= 1e-6, format!("relative error {worst}"))?;
    Ok(format!("1000 flows, largest relative error {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("El Farol equilibrium set", el_farol_we_set),
        ("El Farol optimal correlated equilibrium", el_farol_optimal_cwe),
        ("Pigou Bayes correlated equilibrium", pigou_bcwe),
        ("two-population direct implementation", two_population_structure),
        ("equilibrium outcomes of information structures", bwe_outcomes_are_bcwe),
        ("potential games: unique costs and coarse gap", potential_games_have_unique_costs),
        ("support bound of designer solutions", support_bounds),
        ("Bayes Wardrop cost uniqueness", bwe_uniqueness),
        ("finite-player convergence", convergence),
        ("flow-level vs brute-force obedience", oracle_equivalence),
        ("potential gradient", gradient_check),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(msg) => println!("criterion {:2} PASS  {name}: {msg} [{:.2?}]", i + 1, t.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("criterion {:2} FAIL  {name}: {msg} [{:.2?}]", i + 1, t.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
