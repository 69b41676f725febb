//! Games, cost functions, congestion backings, flows and outcomes.
//!
//! A game has one or more populations, each of unit mass with its own action
//! set, a finite set of states with a full-support prior, and a cost
//! expression per (population, action). Single-population games are the
//! one-population case of the same model.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::{rational_to_f64, to_big, CostExpr, ExprNames, Rational};

/// Tolerance for mass and weight normalization checks.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Population {
    pub name: String,
    pub actions: Vec<String>,
}

impl Population {
    pub fn new(name: &str, actions: &[&str]) -> Self {
        Population {
            name: name.to_string(),
            actions: actions.iter().map(|a| a.to_string()).collect(),
        }
    }
}

/// A named constant taking one value per state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateConstant {
    pub name: String,
    pub values: Vec<Rational>,
}

/// An anonymous nonatomic game with incomplete information.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    populations: Vec<Population>,
    states: Vec<String>,
    prior: Vec<Rational>,
    state_constants: Vec<StateConstant>,
    costs: Vec<Vec<CostExpr>>,
    congestion: Option<CongestionSpec>,
    // caches derived from `state_constants`; [state][constant]
    const_values: Vec<Vec<f64>>,
    const_names: Vec<String>,
    prior_f64: Vec<f64>,
}

impl GameSpec {
    /// Assembles a game without validating it; see [`validate_game`].
    pub fn new(
        populations: Vec<Population>,
        states: Vec<String>,
        prior: Vec<Rational>,
        state_constants: Vec<StateConstant>,
        costs: Vec<Vec<CostExpr>>,
    ) -> Self {
        let const_values = (0..states.len())
            .map(|s| {
                state_constants
                    .iter()
                    .map(|c| c.values.get(s).map(rational_to_f64).unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        let prior_f64 = prior.iter().map(rational_to_f64).collect();
        let const_names = state_constants.iter().map(|c| c.name.clone()).collect();
        GameSpec {
            populations,
            states,
            prior,
            state_constants,
            costs,
            congestion: None,
            const_values,
            const_names,
            prior_f64,
        }
    }

    /// Single-population, complete-information game.
    pub fn complete_information(name: &str, actions: &[&str], costs: Vec<CostExpr>) -> Self {
        GameSpec::new(
            vec![Population::new(name, actions)],
            vec!["0".to_string()],
            vec![Rational::one()],
            Vec::new(),
            vec![costs],
        )
    }

    pub fn populations(&self) -> &[Population] {
        &self.populations
    }

    pub fn num_populations(&self) -> usize {
        self.populations.len()
    }

    pub fn num_actions(&self, pop: usize) -> usize {
        self.populations[pop].actions.len()
    }

    /// Action counts per population.
    pub fn shape(&self) -> Vec<usize> {
        self.populations.iter().map(|p| p.actions.len()).collect()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn prior(&self) -> &[Rational] {
        &self.prior
    }

    pub fn prior_f64(&self, state: usize) -> f64 {
        self.prior_f64[state]
    }

    pub fn state_constants(&self) -> &[StateConstant] {
        &self.state_constants
    }

    pub fn costs(&self) -> &[Vec<CostExpr>] {
        &self.costs
    }

    pub fn congestion(&self) -> Option<&CongestionSpec> {
        self.congestion.as_ref()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Name tables for parsing or printing expressions owned by `owner`.
    pub fn expr_names(&self, owner: Option<usize>) -> ExprNames<'_> {
        ExprNames {
            populations: &self.populations,
            state_consts: self.state_const_names(),
            owner,
        }
    }

    fn state_const_names(&self) -> &[String] {
        &self.const_names
    }

    /// Evaluates c^k_a(flow, state) without bounds checks on the flow.
    #[inline]
    pub fn cost(&self, pop: usize, action: usize, flow: &FlowProfile, state: usize) -> f64 {
        self.costs[pop][action].eval_with(&|k, a| flow.get(k, a), &self.const_values[state])
    }

    /// Evaluates any expression over this game's flow variables and state
    /// constants, such as a designer objective.
    pub fn eval_expr(&self, expr: &CostExpr, flow: &FlowProfile, state: usize) -> f64 {
        expr.eval_with(&|k, a| flow.get(k, a), &self.const_values[state])
    }

    /// Exact cost at a rational flow `flow[k][a]`.
    pub fn cost_exact(&self, pop: usize, action: usize, flow: &[Vec<BigRational>], state: usize) -> BigRational {
        let consts: Vec<BigRational> = self.state_constants.iter().map(|c| to_big(&c.values[state])).collect();
        self.costs[pop][action].eval_exact(&|k, a| flow[k][a].clone(), &consts)
    }

    /// All costs c^k_a at one flow, indexed like the flow.
    pub fn cost_profile(&self, flow: &FlowProfile, state: usize) -> Vec<Vec<f64>> {
        (0..self.populations.len())
            .map(|k| {
                (0..self.num_actions(k))
                    .map(|a| self.cost(k, a, flow, state))
                    .collect()
            })
            .collect()
    }

    pub(crate) fn set_congestion(&mut self, spec: CongestionSpec) {
        self.congestion = Some(spec);
    }

    /// A flow placing each population's mass uniformly on its actions.
    pub fn uniform_flow(&self) -> FlowProfile {
        FlowProfile::new(
            self.populations
                .iter()
                .map(|p| vec![1.0 / p.actions.len() as f64; p.actions.len()])
                .collect(),
        )
    }

    /// Checks that `flow` has the game's shape and unit mass per population.
    pub fn check_flow(&self, flow: &FlowProfile) -> Result<()> {
        flow.check(&self.shape(), 1.0)
    }
}

/// Evaluates the cost of `action` for population `pop` at `flow` in `state`.
pub fn eval_cost(game: &GameSpec, pop: usize, action: usize, flow: &FlowProfile, state: usize) -> Result<f64> {
    if pop >= game.num_populations() {
        return Err(Error::Spec(format!("unknown population index {pop}")));
    }
    if action >= game.num_actions(pop) {
        return Err(Error::Spec(format!(
            "unknown action index {action} for population `{}`",
            game.populations[pop].name
        )));
    }
    if state >= game.num_states() {
        return Err(Error::Spec(format!("unknown state index {state}")));
    }
    if flow.shape() != game.shape() {
        return Err(Error::Spec("flow profile does not match the game's action sets".into()));
    }
    let v = game.cost(pop, action, flow, state);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Eval(format!(
            "cost of `{}.{}` is not finite at {flow:?} in state `{}`",
            game.populations[pop].name, game.populations[pop].actions[action], game.states[state]
        )))
    }
}

/// Social cost: the flow-weighted sum of action costs over all populations.
pub fn social_cost(game: &GameSpec, flow: &FlowProfile, state: usize) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..game.num_populations() {
        for a in 0..game.num_actions(k) {
            total += flow.get(k, a) * eval_cost(game, k, a, flow, state)?;
        }
    }
    Ok(total)
}

/// Lists every violated invariant of `game`. An empty list means valid.
pub fn validate_game(game: &GameSpec) -> Vec<String> {
    let mut issues = Vec::new();
    if game.populations.is_empty() {
        issues.push("game has no populations".to_string());
    }
    for p in &game.populations {
        if p.actions.is_empty() {
            issues.push(format!("population `{}` has no actions", p.name));
        }
    }
    if game.states.is_empty() {
        issues.push("game has no states".to_string());
    }
    if game.prior.len() != game.states.len() {
        issues.push(format!(
            "prior has {} entries but there are {} states",
            game.prior.len(),
            game.states.len()
        ));
    }
    if game.prior.iter().any(|p| !p.is_positive()) {
        issues.push("prior does not have full support".to_string());
    }
    let total: Rational = game.prior.iter().copied().sum();
    if total != Rational::one() {
        issues.push("prior does not sum to 1".to_string());
    }
    for c in &game.state_constants {
        if c.values.len() != game.states.len() {
            issues.push(format!(
                "state constant `{}` has {} values but there are {} states",
                c.name,
                c.values.len(),
                game.states.len()
            ));
        }
    }
    if game.costs.len() != game.populations.len() {
        issues.push("cost table does not match the populations".to_string());
    }
    let shape = game.shape();
    for (k, row) in game.costs.iter().enumerate() {
        let pname = game.populations.get(k).map(|p| p.name.as_str()).unwrap_or("?");
        if k < shape.len() && row.len() != shape[k] {
            issues.push(format!("population `{pname}` has {} actions but {} costs", shape[k], row.len()));
        }
        for (a, expr) in row.iter().enumerate() {
            let mut unbound = Vec::new();
            expr.visit_flows(&mut |kk, aa| {
                if kk >= shape.len() || aa >= shape[kk] {
                    unbound.push((kk, aa));
                }
            });
            for (kk, aa) in unbound {
                issues.push(format!("unbound flow variable y[{kk}][{aa}] in cost of `{pname}` action {a}"));
            }
            let mut bad_const = false;
            expr.visit_state_consts(&mut |i| bad_const |= i >= game.state_constants.len());
            if bad_const {
                issues.push(format!("unbound state constant in cost of `{pname}` action {a}"));
            }
        }
    }
    if let Some(spec) = &game.congestion {
        issues.extend(validate_congestion(spec));
    }
    // finiteness on vertices and the barycenter, only when structurally sound
    if issues.is_empty() {
        let mut probes = vec![game.uniform_flow()];
        for k in 0..game.num_populations() {
            for a in 0..game.num_actions(k) {
                let mut f = game.uniform_flow();
                f.pops[k].iter_mut().for_each(|v| *v = 0.0);
                f.pops[k][a] = 1.0;
                probes.push(f);
            }
        }
        'outer: for s in 0..game.num_states() {
            for f in &probes {
                for k in 0..game.num_populations() {
                    for a in 0..game.num_actions(k) {
                        if !game.cost(k, a, f, s).is_finite() {
                            issues.push(format!(
                                "cost of `{}.{}` is not finite in state `{}`",
                                game.populations[k].name, game.populations[k].actions[a], game.states[s]
                            ));
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    issues
}

/// Latency polynomial with exact coefficients, constant term first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
    coeffs_f64: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        let coeffs_f64 = coeffs.iter().map(rational_to_f64).collect();
        Polynomial { coeffs, coeffs_f64 }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Polynomial::new(coeffs.iter().map(|&c| Rational::from_integer(c)).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs_f64.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// ∫_0^x p(u) du in closed form.
    pub fn integral(&self, x: f64) -> f64 {
        self.coeffs_f64
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, c)| acc * x + c / (i as f64 + 1.0))
            * x
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coeffs_f64
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * x + c * i as f64)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| c.is_zero())
    }
}

/// A congestion game: resources with latencies, actions as resource subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionSpec {
    pub populations: Vec<Population>,
    pub states: Vec<String>,
    pub prior: Vec<Rational>,
    pub resources: Vec<String>,
    /// `latency[e][state]`.
    pub latency: Vec<Vec<Polynomial>>,
    /// `actions[k][a]` lists the resources used by action `a` of population `k`.
    pub actions: Vec<Vec<Vec<usize>>>,
}

impl CongestionSpec {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.actions.iter().map(Vec::len).collect()
    }

    /// Cost of an action given precomputed loads.
    #[inline]
    pub fn action_cost_at_loads(&self, pop: usize, action: usize, loads: &[f64], state: usize) -> f64 {
        self.actions[pop][action]
            .iter()
            .map(|&e| self.latency[e][state].eval(loads[e]))
            .sum()
    }

    /// Beckmann potential at given loads.
    pub fn potential_at_loads(&self, loads: &[f64], state: usize) -> f64 {
        loads
            .iter()
            .enumerate()
            .map(|(e, &x)| self.latency[e][state].integral(x))
            .sum()
    }
}

/// Lists violated invariants of a congestion specification.
pub fn validate_congestion(spec: &CongestionSpec) -> Vec<String> {
    let mut issues = Vec::new();
    let ne = spec.resources.len();
    if spec.latency.len() != ne {
        issues.push("latency table does not match the resources".to_string());
    }
    for (e, per_state) in spec.latency.iter().enumerate() {
        let rname = spec.resources.get(e).map(String::as_str).unwrap_or("?");
        if per_state.len() != spec.states.len() {
            issues.push(format!("resource `{rname}` needs one latency per state"));
        }
        for (s, poly) in per_state.iter().enumerate() {
            if poly.coeffs.iter().any(|c| c.is_negative()) {
                issues.push(format!("latency of `{rname}` in state {s} has a negative coefficient"));
            }
            let top = spec.populations.len().max(1) as f64;
            let nondecreasing = (0..=200).all(|i| poly.derivative(top * i as f64 / 200.0) >= -1e-12);
            if !nondecreasing {
                issues.push(format!("latency of `{rname}` in state {s} is not nondecreasing"));
            }
        }
    }
    if spec.actions.len() != spec.populations.len() {
        issues.push("action incidence does not match the populations".to_string());
    }
    for (k, acts) in spec.actions.iter().enumerate() {
        let pname = spec.populations.get(k).map(|p| p.name.as_str()).unwrap_or("?");
        if let Some(p) = spec.populations.get(k) {
            if p.actions.len() != acts.len() {
                issues.push(format!("population `{pname}` action incidence size mismatch"));
            }
        }
        for (a, res) in acts.iter().enumerate() {
            if res.is_empty() {
                issues.push(format!("action {a} of population `{pname}` uses no resource"));
            }
            if res.iter().any(|&e| e >= ne) {
                issues.push(format!("action {a} of population `{pname}` uses an unknown resource"));
            }
        }
    }
    issues
}

/// Builds the game whose action costs are the resource-latency sums,
/// keeping the congestion backing for potential computations.
pub fn congestion_to_game(spec: &CongestionSpec) -> Result<GameSpec> {
    let issues = validate_congestion(spec);
    if !issues.is_empty() {
        return Err(Error::Spec(issues.join("; ")));
    }
    // Coefficients that vary by state become state constants.
    let mut state_constants = Vec::new();
    let mut resource_cost = Vec::with_capacity(spec.resources.len());
    for (e, per_state) in spec.latency.iter().enumerate() {
        let load = spec
            .actions
            .iter()
            .enumerate()
            .flat_map(|(k, acts)| {
                acts.iter()
                    .enumerate()
                    .filter(move |(_, res)| res.contains(&e))
                    .map(move |(a, _)| CostExpr::flow(k, a))
            })
            .reduce(CostExpr::add)
            .unwrap_or_else(|| CostExpr::int(0));
        let degree = per_state.iter().map(|p| p.coeffs.len()).max().unwrap_or(0);
        let mut terms: Vec<CostExpr> = Vec::new();
        for i in 0..degree {
            let vals: Vec<Rational> = per_state
                .iter()
                .map(|p| p.coeffs.get(i).copied().unwrap_or_else(Rational::zero))
                .collect();
            let coef = if vals.iter().all(|v| *v == vals[0]) {
                if vals[0].is_zero() {
                    continue;
                }
                CostExpr::Const(vals[0])
            } else {
                state_constants.push(StateConstant {
                    name: format!("lat_{}_{}", spec.resources[e], i),
                    values: vals,
                });
                CostExpr::StateConst(state_constants.len() - 1)
            };
            terms.push(match i {
                0 => coef,
                1 => coef.mul(load.clone()),
                _ => coef.mul(load.clone().pow(i as u32)),
            });
        }
        resource_cost.push(terms.into_iter().reduce(CostExpr::add).unwrap_or_else(|| CostExpr::int(0)));
    }
    let costs = spec
        .actions
        .iter()
        .map(|acts| {
            acts.iter()
                .map(|res| {
                    res.iter()
                        .map(|&e| resource_cost[e].clone())
                        .reduce(CostExpr::add)
                        .unwrap_or_else(|| CostExpr::int(0))
                })
                .collect()
        })
        .collect();
    let mut game = GameSpec::new(
        spec.populations.clone(),
        spec.states.clone(),
        spec.prior.clone(),
        state_constants,
        costs,
    );
    game.set_congestion(spec.clone());
    Ok(game)
}

/// Load on each resource: the sum of flows of all actions using it.
pub fn load_profile(spec: &CongestionSpec, flow: &FlowProfile) -> Vec<f64> {
    let mut loads = vec![0.0; spec.resources.len()];
    for (k, acts) in spec.actions.iter().enumerate() {
        for (a, res) in acts.iter().enumerate() {
            let y = flow.get(k, a);
            for &e in res {
                loads[e] += y;
            }
        }
    }
    loads
}

/// Per-population flow vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowProfile {
    pub(crate) pops: Vec<Vec<f64>>,
}

impl FlowProfile {
    pub fn new(pops: Vec<Vec<f64>>) -> Self {
        FlowProfile { pops }
    }

    /// Single-population flow.
    pub fn single(y: Vec<f64>) -> Self {
        FlowProfile { pops: vec![y] }
    }

    #[inline]
    pub fn get(&self, pop: usize, action: usize) -> f64 {
        self.pops[pop][action]
    }

    pub fn pop(&self, k: usize) -> &[f64] {
        &self.pops[k]
    }

    pub fn pop_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.pops[k]
    }

    pub fn pops(&self) -> &[Vec<f64>] {
        &self.pops
    }

    pub fn num_populations(&self) -> usize {
        self.pops.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.pops.iter().map(Vec::len).collect()
    }

    /// All entries, population-major.
    pub fn flat(&self) -> Vec<f64> {
        self.pops.iter().flatten().copied().collect()
    }

    pub fn linf_distance(&self, other: &FlowProfile) -> f64 {
        self.pops
            .iter()
            .zip(&other.pops)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Validates shape, nonnegativity and per-population mass.
    pub fn check(&self, shape: &[usize], mass: f64) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::Spec(format!(
                "flow has shape {:?}, expected {:?}",
                self.shape(),
                shape
            )));
        }
        for (k, y) in self.pops.iter().enumerate() {
            if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Spec(format!("flow of population {k} has a negative entry")));
            }
            let s: f64 = y.iter().sum();
            if (s - mass).abs() > MASS_TOL {
                return Err(Error::Spec(format!("flow of population {k} sums to {s}, expected {mass}")));
            }
        }
        Ok(())
    }

    /// Convex combination `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &FlowProfile, t: f64) -> FlowProfile {
        FlowProfile {
            pops: self
                .pops
                .iter()
                .zip(&other.pops)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect())
                .collect(),
        }
    }
}

/// A finite-support distribution over flow profiles.
pub type FlowDistribution = Vec<(FlowProfile, f64)>;

/// State-conditional distributions over flows: the object a designer chooses.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    per_state: Vec<FlowDistribution>,
}

impl Outcome {
    pub fn new(per_state: Vec<FlowDistribution>) -> Self {
        Outcome { per_state }
    }

    /// Deterministic outcome: one flow per state with probability one.
    pub fn point_masses(flows: Vec<FlowProfile>) -> Self {
        Outcome {
            per_state: flows.into_iter().map(|f| vec![(f, 1.0)]).collect(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.per_state.len()
    }

    pub fn state(&self, s: usize) -> &[(FlowProfile, f64)] {
        &self.per_state[s]
    }

    pub fn per_state(&self) -> &[FlowDistribution] {
        &self.per_state
    }

    pub fn support_size(&self) -> usize {
        self.per_state.iter().map(|d| d.iter().filter(|(_, w)| *w > 0.0).count()).sum()
    }

    /// Checks weights are nonnegative and sum to one in every state, and
    /// that every flow fits `game`.
    pub fn check(&self, game: &GameSpec) -> Result<()> {
        if self.per_state.len() != game.num_states() {
            return Err(Error::Spec(format!(
                "outcome has {} states, game has {}",
                self.per_state.len(),
                game.num_states()
            )));
        }
        for (s, dist) in self.per_state.iter().enumerate() {
            if dist.is_empty() {
                return Err(Error::Spec(format!("outcome is empty in state {s}")));
            }
            let mut total = 0.0;
            for (f, w) in dist {
                if !(w.is_finite() && *w >= 0.0) {
                    return Err(Error::Spec(format!("negative weight in state {s}")));
                }
                total += w;
                game.check_flow(f)?;
            }
            if (total - 1.0).abs() > MASS_TOL {
                return Err(Error::Spec(format!("weights in state {s} sum to {total}")));
            }
        }
        Ok(())
    }

    /// Merges flows closer than `tol` in L∞ and drops zero weights. Flows are
    /// kept in first-appearance order.
    pub fn merged(&self, tol: f64) -> Outcome {
        let per_state = self
            .per_state
            .iter()
            .map(|dist| {
                let mut out: FlowDistribution = Vec::new();
                for (f, w) in dist {
                    if *w <= 0.0 {
                        continue;
                    }
                    match out.iter_mut().find(|(g, _)| g.linf_distance(f) <= tol) {
                        Some(entry) => entry.1 += w,
                        None => out.push((f.clone(), *w)),
                    }
                }
                out
            })
            .collect();
        Outcome { per_state }
    }

    /// Prior-weighted expectation of `f(flow, state)`.
    pub fn expectation<F>(&self, game: &GameSpec, mut f: F) -> f64
    where
        F: FnMut(&FlowProfile, usize) -> f64,
    {
        self.per_state
            .iter()
            .enumerate()
            .map(|(s, dist)| {
                game.prior_f64(s) * dist.iter().map(|(y, w)| w * f(y, s)).sum::<f64>()
            })
            .sum()
    }

    /// Expected social cost under the prior.
    pub fn expected_social_cost(&self, game: &GameSpec) -> Result<f64> {
        let mut total = 0.0;
        for (s, dist) in self.per_state.iter().enumerate() {
            for (y, w) in dist {
                total += game.prior_f64(s) * w * social_cost(game, y, s)?;
            }
        }
        Ok(total)
    }
}
