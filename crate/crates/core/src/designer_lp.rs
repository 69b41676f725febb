//! The designer's program: minimize an expected cost over Bayes correlated
//! Wardrop equilibria, relaxed to distributions on a finite flow grid and
//! solved as a linear program.

use std::cmp::Ordering;

use crate::equilibrium_checks::{coarse_pairs, coarse_terms, obedience_pairs, obedience_terms, Concept};
use crate::error::{Error, Result};
use crate::expr::CostExpr;
use crate::game_model::{social_cost, FlowProfile, GameSpec, Outcome};
use crate::lp::{lp_solve, LinearProgram};
use crate::wardrop::{enumerate_we_grid, grid_flows, grid_size, solve_we_br, solve_we_potential};

/// Incentive coefficients this small relative to the largest are treated as zero.
pub const ROW_TOL: f64 = 1e-12;

/// Largest grid built per state.
pub const GRID_CAP_PER_STATE: u128 = 1_000_000;

/// The designer's cost `c^D(y, θ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignerCost {
    /// The social cost `Σ y_a c_a(y, θ)`.
    Social,
    /// An expression over flows and state constants.
    Expr(CostExpr),
}

impl DesignerCost {
    pub fn eval(&self, game: &GameSpec, flow: &FlowProfile, state: usize) -> Result<f64> {
        match self {
            DesignerCost::Social => social_cost(game, flow, state),
            DesignerCost::Expr(e) => {
                let v = game.eval_expr(e, flow, state);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Eval(format!("designer cost is not finite at {flow:?}")))
                }
            }
        }
    }
}

/// A game, a designer cost and per-state candidate flows.
#[derive(Debug, Clone)]
pub struct DesignerProblem {
    pub game: GameSpec,
    pub designer_cost: DesignerCost,
    pub candidates: Vec<Vec<FlowProfile>>,
}

impl DesignerProblem {
    pub fn new(game: GameSpec, designer_cost: DesignerCost, candidates: Vec<Vec<FlowProfile>>) -> Result<Self> {
        if candidates.len() != game.num_states() {
            return Err(Error::Spec("one candidate list per state is required".into()));
        }
        for list in &candidates {
            if list.is_empty() {
                return Err(Error::Spec("candidate lists must be nonempty".into()));
            }
            for y in list {
                game.check_flow(y)?;
            }
        }
        Ok(DesignerProblem { game, designer_cost, candidates })
    }

    /// Candidates from [`build_grid`].
    pub fn on_grid(game: GameSpec, designer_cost: DesignerCost, resolution: usize, seeds: &[FlowProfile]) -> Result<Self> {
        let candidates = build_grid(&game, resolution, seeds)?;
        DesignerProblem::new(game, designer_cost, candidates)
    }
}

fn lex_cmp(a: &FlowProfile, b: &FlowProfile) -> Ordering {
    for (x, y) in a.pops().iter().flatten().zip(b.pops().iter().flatten()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Sorts lexicographically and drops flows within `1e-12` of their
/// predecessor.
fn sort_dedup(mut flows: Vec<FlowProfile>) -> Vec<FlowProfile> {
    flows.sort_by(lex_cmp);
    flows.dedup_by(|b, a| a.linf_distance(b) <= 1e-12);
    flows
}

/// Equilibria of one state: the potential minimizer when the game is a
/// congestion game, else the polished grid equilibria.
pub fn state_equilibria(game: &GameSpec, state: usize, resolution: usize) -> Result<Vec<FlowProfile>> {
    if game.congestion().is_some() {
        return Ok(vec![solve_we_potential(game, state, 1e-12, 100_000)?.flow]);
    }
    let mut found = enumerate_we_grid(game, state, resolution, 1e-9)?;
    if found.is_empty() {
        let r = solve_we_br(game, state, game.uniform_flow(), 1e-12, 100_000)?;
        found.push(r.flow);
    }
    Ok(found)
}

/// All grid flows with denominator `resolution`, the seeds, and each
/// state's equilibria, deduplicated and in lexicographic order.
pub fn build_grid(game: &GameSpec, resolution: usize, seeds: &[FlowProfile]) -> Result<Vec<Vec<FlowProfile>>> {
    if resolution == 0 {
        return Err(Error::Spec("resolution must be at least 1".into()));
    }
    let shape = game.shape();
    let size = grid_size(&shape, resolution);
    if size > GRID_CAP_PER_STATE {
        return Err(Error::GridTooLarge { size, cap: GRID_CAP_PER_STATE });
    }
    for y in seeds {
        game.check_flow(y)?;
    }
    let grid = grid_flows(&shape, resolution)?;
    (0..game.num_states())
        .map(|s| {
            let mut all = grid.clone();
            all.extend(seeds.iter().cloned());
            all.extend(state_equilibria(game, s, resolution)?);
            Ok(sort_dedup(all))
        })
        .collect()
}

/// An optimal vertex of the relaxed program.
#[derive(Debug, Clone, PartialEq)]
pub struct LPSolution {
    pub outcome: Outcome,
    /// Expected designer cost of `outcome`.
    pub objective: f64,
    /// `b·y` from the final tableau's duals.
    pub dual_objective: f64,
    /// Basic columns as `(state, candidate index)`.
    pub basis: Vec<(usize, usize)>,
    /// Incentive rows active at the vertex, as `(pop, recommended, deviation)`
    /// (`recommended` is `None` for coarse rows).
    pub active_constraints: Vec<(usize, Option<usize>, usize)>,
}

/// Minimizes the expected designer cost over distributions on the
/// candidates satisfying `concept`'s constraints relaxed by `slack`.
///
/// `concept` is [`Concept::Bcwe`] (obedience rows per `(k, a, b)`) or
/// [`Concept::Cbcwe`] (coarse rows per `(k, b)`); with one state these are
/// the correlated and coarse correlated programs.
pub fn solve_outcome_lp(problem: &DesignerProblem, concept: Concept, slack: f64) -> Result<LPSolution> {
    let game = &problem.game;
    if !matches!(concept, Concept::Bcwe | Concept::Cbcwe) {
        return Err(Error::Unsupported(format!("the outcome program is posed over bcwe or cbcwe, not {concept}")));
    }
    if !(slack >= 0.0) {
        return Err(Error::Spec("slack must be nonnegative".into()));
    }
    let coarse = concept.is_coarse();
    let rows: Vec<(usize, Option<usize>, usize)> = if coarse {
        coarse_pairs(game).into_iter().map(|(k, b)| (k, None, b)).collect()
    } else {
        obedience_pairs(game).into_iter().map(|(k, a, b)| (k, Some(a), b)).collect()
    };
    let columns: Vec<(usize, usize)> = problem
        .candidates
        .iter()
        .enumerate()
        .flat_map(|(s, list)| (0..list.len()).map(move |i| (s, i)))
        .collect();
    let n = columns.len();
    let mut objective = Vec::with_capacity(n);
    let mut le: Vec<(Vec<f64>, f64)> = rows.iter().map(|_| (vec![0.0; n], slack)).collect();
    for (j, &(s, i)) in columns.iter().enumerate() {
        let y = &problem.candidates[s][i];
        let p = game.prior_f64(s);
        objective.push(p * problem.designer_cost.eval(game, y, s)?);
        let terms = if coarse { coarse_terms(game, y, s) } else { obedience_terms(game, y, s) };
        for (row, (l, r)) in le.iter_mut().zip(terms) {
            row.0[j] = p * (l - r);
        }
    }
    // Candidates computed numerically (a solver's equilibrium, say) miss
    // their rows by rounding noise; such a coefficient would make the
    // program infeasible, so it is snapped to zero.
    let scale = le.iter().flat_map(|(row, _)| row.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    for v in le.iter_mut().flat_map(|(row, _)| row.iter_mut()) {
        if v.abs() <= ROW_TOL * scale {
            *v = 0.0;
        }
    }
    let eq = (0..game.num_states())
        .map(|s| (columns.iter().map(|&(t, _)| if t == s { 1.0 } else { 0.0 }).collect(), 1.0))
        .collect();
    let lp = LinearProgram { objective, eq, le };
    let sol = lp_solve(&lp)?;

    let mut per_state: Vec<Vec<(FlowProfile, f64)>> = vec![Vec::new(); game.num_states()];
    for (j, &(s, i)) in columns.iter().enumerate() {
        if sol.x[j] > 0.0 {
            per_state[s].push((problem.candidates[s][i].clone(), sol.x[j]));
        }
    }
    for dist in &mut per_state {
        let total: f64 = dist.iter().map(|(_, w)| w).sum();
        for (_, w) in dist.iter_mut() {
            *w /= total;
        }
    }
    let outcome = Outcome::new(per_state);
    let objective = outcome
        .per_state()
        .iter()
        .enumerate()
        .map(|(s, dist)| -> Result<f64> {
            let mut v = 0.0;
            for (y, w) in dist {
                v += w * problem.designer_cost.eval(game, y, s)?;
            }
            Ok(game.prior_f64(s) * v)
        })
        .sum::<Result<f64>>()?;
    let mut basis: Vec<(usize, usize)> = sol.basic_vars.iter().map(|&j| columns[j]).collect();
    basis.sort();
    Ok(LPSolution {
        outcome,
        objective,
        dual_objective: sol.dual_objective(&lp),
        basis,
        active_constraints: sol.active_le.iter().map(|&r| rows[r]).collect(),
    })
}

/// The designer's program over Bayes correlated Wardrop equilibria on the
/// problem's candidates.
pub fn solve_program_p(problem: &DesignerProblem) -> Result<LPSolution> {
    solve_outcome_lp(problem, Concept::Bcwe, 0.0)
}

/// Support size against the two structural bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportBound {
    pub support: usize,
    /// `|Θ|(|A|² + 1)` with `|A|` the total number of actions.
    pub coarse_bound: usize,
    /// `|Θ| + Σ_k |A^k|(|A^k| - 1)`: the number of LP rows.
    pub vertex_bound: usize,
}

impl SupportBound {
    pub fn holds(&self) -> bool {
        self.support <= self.coarse_bound
    }

    pub fn vertex_bound_holds(&self) -> bool {
        self.support <= self.vertex_bound
    }
}

pub fn support_bound_check(solution: &LPSolution, game: &GameSpec) -> SupportBound {
    let states = game.num_states();
    let total_actions: usize = game.shape().iter().sum();
    let pairs: usize = game.shape().iter().map(|&n| n * (n - 1)).sum();
    SupportBound {
        support: solution.outcome.support_size(),
        coarse_bound: states * (total_actions * total_actions + 1),
        vertex_bound: states + pairs,
    }
}
