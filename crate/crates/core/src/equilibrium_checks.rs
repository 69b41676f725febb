//! Obedience constraints of the correlated and Bayes correlated equilibrium
//! concepts, evaluated as signed violations.
//!
//! Every report carries the largest `lhs - rhs` over the concept's
//! constraints together with the constraint attaining it. A value at most
//! zero means every constraint holds; callers pick the tolerance.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::atomic::SymmetricBCE;
use crate::error::{Error, Result};
use crate::game_model::{social_cost, FlowProfile, GameSpec, Outcome};
use crate::wardrop::random_flow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Concept {
    Cwe,
    Ccwe,
    Bcwe,
    Sbcwe,
    Cbcwe,
    /// Obedience of an exchangeable finite-player recommendation scheme.
    Bce,
}

impl Concept {
    pub fn tag(self) -> &'static str {
        match self {
            Concept::Cwe => "cwe",
            Concept::Ccwe => "ccwe",
            Concept::Bcwe => "bcwe",
            Concept::Sbcwe => "sbcwe",
            Concept::Cbcwe => "cbcwe",
            Concept::Bce => "bce",
        }
    }

    pub fn parse(tag: &str) -> Option<Concept> {
        [Concept::Cwe, Concept::Ccwe, Concept::Bcwe, Concept::Sbcwe, Concept::Cbcwe, Concept::Bce]
            .into_iter()
            .find(|c| c.tag() == tag)
    }

    /// Coarse concepts fix the deviation before the recommendation.
    pub fn is_coarse(self) -> bool {
        matches!(self, Concept::Ccwe | Concept::Cbcwe)
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One obedience constraint: population `pop`, recommended action
/// `recommended` (absent for coarse concepts), deviation `deviation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Witness {
    pub pop: usize,
    pub recommended: Option<usize>,
    pub deviation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub concept: Concept,
    pub worst_violation: f64,
    /// Absent when the concept has no constraints (single-action games).
    pub witness: Option<Witness>,
    /// Obedient and deviation sides of the witness constraint.
    pub lhs: f64,
    pub rhs: f64,
}

impl CheckReport {
    fn from_constraints(concept: Concept, cons: Vec<(Witness, f64, f64)>) -> Self {
        let mut best: Option<(Witness, f64, f64)> = None;
        for c in cons {
            if best.map_or(true, |b| c.1 - c.2 > b.1 - b.2) {
                best = Some(c);
            }
        }
        match best {
            Some((w, lhs, rhs)) => CheckReport { concept, worst_violation: lhs - rhs, witness: Some(w), lhs, rhs },
            None => CheckReport { concept, worst_violation: 0.0, witness: None, lhs: 0.0, rhs: 0.0 },
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst_violation <= tol
    }
}

/// Ordered pairs `(k, a, b)`, `a != b`, in lexicographic order.
pub fn obedience_pairs(game: &GameSpec) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for k in 0..game.num_populations() {
        let n = game.num_actions(k);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    out.push((k, a, b));
                }
            }
        }
    }
    out
}

/// `(k, b)` pairs of the coarse concepts.
pub fn coarse_pairs(game: &GameSpec) -> Vec<(usize, usize)> {
    (0..game.num_populations())
        .flat_map(|k| (0..game.num_actions(k)).map(move |b| (k, b)))
        .collect()
}

/// Per pair `(k, a, b)`: `(y_a c_a, y_a c_b)` at one flow.
pub fn obedience_terms(game: &GameSpec, flow: &FlowProfile, state: usize) -> Vec<(f64, f64)> {
    let c = game.cost_profile(flow, state);
    obedience_pairs(game)
        .into_iter()
        .map(|(k, a, b)| {
            let y = flow.get(k, a);
            (y * c[k][a], y * c[k][b])
        })
        .collect()
}

/// Per pair `(k, b)`: `(sum_a y_a c_a, sum_a y_a c_b)` at one flow.
pub fn coarse_terms(game: &GameSpec, flow: &FlowProfile, state: usize) -> Vec<(f64, f64)> {
    let c = game.cost_profile(flow, state);
    coarse_pairs(game)
        .into_iter()
        .map(|(k, b)| {
            let obey: f64 = flow.pop(k).iter().zip(&c[k]).map(|(y, ca)| y * ca).sum();
            let mass: f64 = flow.pop(k).iter().sum();
            (obey, mass * c[k][b])
        })
        .collect()
}

fn accumulate<'a, I>(game: &GameSpec, coarse: bool, items: I) -> Vec<(Witness, f64, f64)>
where
    I: IntoIterator<Item = (usize, &'a FlowProfile, f64)>,
{
    let witnesses: Vec<Witness> = if coarse {
        coarse_pairs(game)
            .into_iter()
            .map(|(k, b)| Witness { pop: k, recommended: None, deviation: b })
            .collect()
    } else {
        obedience_pairs(game)
            .into_iter()
            .map(|(k, a, b)| Witness { pop: k, recommended: Some(a), deviation: b })
            .collect()
    };
    let mut sums = vec![(0.0, 0.0); witnesses.len()];
    for (state, flow, w) in items {
        if w == 0.0 {
            continue;
        }
        let terms = if coarse { coarse_terms(game, flow, state) } else { obedience_terms(game, flow, state) };
        for (s, (l, r)) in sums.iter_mut().zip(terms) {
            s.0 += w * l;
            s.1 += w * r;
        }
    }
    witnesses.into_iter().zip(sums).map(|(w, (l, r))| (w, l, r)).collect()
}

fn outcome_items<'a>(game: &'a GameSpec, outcome: &'a Outcome) -> impl Iterator<Item = (usize, &'a FlowProfile, f64)> {
    outcome
        .per_state()
        .iter()
        .enumerate()
        .flat_map(move |(s, dist)| dist.iter().map(move |(y, w)| (s, y, game.prior_f64(s) * w)))
}

/// Constraint values `lhs - rhs` of `concept` for an outcome, in the
/// order of [`obedience_pairs`] or [`coarse_pairs`].
pub fn constraint_values(game: &GameSpec, outcome: &Outcome, concept: Concept) -> Vec<f64> {
    accumulate(game, concept.is_coarse(), outcome_items(game, outcome))
        .into_iter()
        .map(|(_, l, r)| l - r)
        .collect()
}

/// Correlated Wardrop equilibrium constraints for one state.
pub fn check_cwe(game: &GameSpec, dist: &[(FlowProfile, f64)], state: usize) -> CheckReport {
    let cons = accumulate(game, false, dist.iter().map(|(y, w)| (state, y, *w)));
    CheckReport::from_constraints(Concept::Cwe, cons)
}

/// Coarse correlated Wardrop equilibrium constraints for one state.
pub fn check_ccwe(game: &GameSpec, dist: &[(FlowProfile, f64)], state: usize) -> CheckReport {
    let cons = accumulate(game, true, dist.iter().map(|(y, w)| (state, y, *w)));
    CheckReport::from_constraints(Concept::Ccwe, cons)
}

/// Bayes correlated Wardrop equilibrium constraints, averaged over states.
pub fn check_bcwe(game: &GameSpec, outcome: &Outcome) -> CheckReport {
    CheckReport::from_constraints(Concept::Bcwe, accumulate(game, false, outcome_items(game, outcome)))
}

/// Constraints for a deterministic flow per state.
pub fn check_sbcwe(game: &GameSpec, flow_map: &[FlowProfile]) -> CheckReport {
    let items = flow_map.iter().enumerate().map(|(s, y)| (s, y, game.prior_f64(s)));
    CheckReport::from_constraints(Concept::Sbcwe, accumulate(game, false, items))
}

/// Coarse Bayes correlated constraints: both sides sum the recommended
/// actions inside the expectation.
pub fn check_cbcwe(game: &GameSpec, outcome: &Outcome) -> CheckReport {
    CheckReport::from_constraints(Concept::Cbcwe, accumulate(game, true, outcome_items(game, outcome)))
}

/// Obedience of an exchangeable recommendation scheme with `n^k` players,
/// evaluated at the flow level: a player recommended `a` under counts `N`
/// obeys at `N/n` and deviates to `b` at `N/n + (e_b - e_a)/n`.
pub fn check_bce_flowlevel(game: &GameSpec, bce: &SymmetricBCE) -> CheckReport {
    let pairs = obedience_pairs(game);
    let mut sums = vec![(0.0, 0.0); pairs.len()];
    for (s, support) in bce.support.iter().enumerate() {
        let p = game.prior_f64(s);
        for (counts, w) in support {
            let y = bce.flow_of_counts(counts);
            let c = game.cost_profile(&y, s);
            for (idx, &(k, a, b)) in pairs.iter().enumerate() {
                let na = counts[k][a];
                if na == 0 {
                    continue;
                }
                let nk = bce.n[k] as f64;
                let mut dev = y.clone();
                dev.pop_mut(k)[a] = (na - 1) as f64 / nk;
                dev.pop_mut(k)[b] = (counts[k][b] + 1) as f64 / nk;
                let share = p * w * na as f64 / nk;
                sums[idx].0 += share * c[k][a];
                sums[idx].1 += share * game.cost(k, b, &dev, s);
            }
        }
    }
    let cons = pairs
        .into_iter()
        .zip(sums)
        .map(|((k, a, b), (l, r))| (Witness { pop: k, recommended: Some(a), deviation: b }, l, r))
        .collect();
    CheckReport::from_constraints(Concept::Bce, cons)
}

/// Result of replacing each state's distribution by its mean flow.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterReport {
    pub flows: Vec<FlowProfile>,
    pub sbcwe: CheckReport,
    /// Expected social cost of the input outcome, per state.
    pub input_cost: Vec<f64>,
    /// Social cost of the mean flow, per state.
    pub barycenter_cost: Vec<f64>,
    /// Whether sampled midpoint tests support `y_a c_a` convex and `c_a`
    /// concave. When false, the cost comparison is informational only.
    pub hypotheses_hold: bool,
}

impl BarycenterReport {
    pub fn cost_not_higher(&self, tol: f64) -> bool {
        self.barycenter_cost.iter().zip(&self.input_cost).all(|(b, i)| *b <= i + tol)
    }
}

/// Per-state barycenter of a two-action single-population outcome, with
/// its deterministic-equilibrium check and cost comparison.
pub fn sbcwe_from_bcwe(game: &GameSpec, outcome: &Outcome) -> Result<BarycenterReport> {
    if game.num_populations() != 1 || game.num_actions(0) != 2 {
        return Err(Error::Unsupported("the barycenter construction needs one population with two actions".into()));
    }
    outcome.check(game)?;
    let mut flows = Vec::new();
    let mut input_cost = Vec::new();
    let mut barycenter_cost = Vec::new();
    for (s, dist) in outcome.per_state().iter().enumerate() {
        let mut mean = vec![0.0; 2];
        let mut cost = 0.0;
        for (y, w) in dist {
            mean[0] += w * y.get(0, 0);
            mean[1] += w * y.get(0, 1);
            cost += w * social_cost(game, y, s)?;
        }
        let f = FlowProfile::single(mean);
        barycenter_cost.push(social_cost(game, &f, s)?);
        input_cost.push(cost);
        flows.push(f);
    }
    let sbcwe = check_sbcwe(game, &flows);
    Ok(BarycenterReport { flows, sbcwe, input_cost, barycenter_cost, hypotheses_hold: midpoint_hypotheses(game, 1000) })
}

/// Samples `segments` random segments per state and action and tests
/// midpoint convexity of `y_a c_a` and midpoint concavity of `c_a`.
pub fn midpoint_hypotheses(game: &GameSpec, segments: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let shape = game.shape();
    let masses = vec![1.0; shape.len()];
    for s in 0..game.num_states() {
        for _ in 0..segments {
            let u = random_flow(&shape, &masses, &mut rng);
            let v = random_flow(&shape, &masses, &mut rng);
            let m = u.lerp(&v, 0.5);
            for k in 0..shape.len() {
                for a in 0..shape[k] {
                    let (cu, cv, cm) = (game.cost(k, a, &u, s), game.cost(k, a, &v, s), game.cost(k, a, &m, s));
                    let scale = 1e-9 * (1.0 + cu.abs() + cv.abs());
                    let wu = u.get(k, a) * cu;
                    let wv = v.get(k, a) * cv;
                    let wm = m.get(k, a) * cm;
                    if wm > 0.5 * (wu + wv) + scale || cm < 0.5 * (cu + cv) - scale {
                        return false;
                    }
                }
            }
        }
    }
    true
}
