//! Finite-player anonymous games: Bayes correlated equilibrium checks, the
//! exchangeable recommendation scheme that approximates a nonatomic
//! outcome, and the convergence harness.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::equilibrium_checks::{check_bcwe, obedience_pairs, CheckReport, Concept, Witness};
use crate::error::{Error, Result};
use crate::game_model::{FlowProfile, GameSpec, Outcome};
use crate::implementation::largest_remainder;
use crate::lp::{lp_solve, LinearProgram};
use crate::numfmt::approximate_rational;

const PROFILE_CAP: u128 = 1_000_000;

/// A finite game built on a nonatomic one: population `k` has
/// `weights[k].len()` players whose weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicGame {
    pub base: GameSpec,
    pub weights: Vec<Vec<f64>>,
}

impl AtomicGame {
    /// `n` players of weight `1/n` in every population.
    pub fn uniform(base: GameSpec, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Spec("player count must be positive".into()));
        }
        let weights = vec![vec![1.0 / n as f64; n]; base.num_populations()];
        Ok(AtomicGame { base, weights })
    }

    pub fn with_weights(base: GameSpec, weights: Vec<Vec<f64>>) -> Result<Self> {
        if weights.len() != base.num_populations() {
            return Err(Error::Spec("one weight vector per population is required".into()));
        }
        for w in &weights {
            let total: f64 = w.iter().sum();
            if w.is_empty() || w.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                return Err(Error::Spec("player weights must be nonnegative and sum to 1".into()));
            }
        }
        Ok(AtomicGame { base, weights })
    }

    pub fn players(&self) -> Vec<usize> {
        self.weights.iter().map(Vec::len).collect()
    }

    fn is_uniform(&self) -> bool {
        self.weights.iter().all(|w| {
            let u = 1.0 / w.len() as f64;
            w.iter().all(|v| (v - u).abs() <= 1e-15)
        })
    }
}

/// An action for every player, `profile[k][i]`.
pub type ActionProfile = Vec<Vec<usize>>;

/// Weighted action shares: `y^k_a = sum_i w^k_i 1{a^k_i = a}`.
pub fn flow_of_profile(game: &AtomicGame, profile: &ActionProfile) -> FlowProfile {
    let shape = game.base.shape();
    let mut pops: Vec<Vec<f64>> = shape.iter().map(|&n| vec![0.0; n]).collect();
    for (k, acts) in profile.iter().enumerate() {
        for (i, &a) in acts.iter().enumerate() {
            pops[k][a] += game.weights[k][i];
        }
    }
    FlowProfile::new(pops)
}

/// A state-conditional distribution over action profiles.
pub type ProfileDistribution = Vec<Vec<(ActionProfile, f64)>>;

/// Worst obedience violation of an explicit recommendation distribution,
/// with the player attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceReport {
    pub report: CheckReport,
    pub player: Option<usize>,
}

fn check_profile_count(game: &AtomicGame) -> Result<()> {
    let size = game
        .base
        .shape()
        .iter()
        .zip(game.players())
        .fold(1u128, |acc, (&a, n)| acc.saturating_mul((a as u128).saturating_pow(n as u32)));
    if size > PROFILE_CAP {
        return Err(Error::GridTooLarge { size, cap: PROFILE_CAP });
    }
    Ok(())
}

/// Checks every player's obedience constraints by enumerating the profiles
/// in `beta`'s support. A player recommended `a` who plays `b` pays `c_b`
/// at the flow with their own weight moved from `a` to `b`.
pub fn check_bce_bruteforce(game: &AtomicGame, beta: &ProfileDistribution) -> Result<BruteForceReport> {
    check_profile_count(game)?;
    let g = &game.base;
    if beta.len() != g.num_states() {
        return Err(Error::Spec("one profile distribution per state is required".into()));
    }
    let mut best: Option<(Witness, usize, f64, f64)> = None;
    for (k, ws) in game.weights.iter().enumerate() {
        let na = g.num_actions(k);
        for (i, &wi) in ws.iter().enumerate() {
            // sums[a][b] = (obey, deviate)
            let mut sums = vec![vec![(0.0, 0.0); na]; na];
            for (s, dist) in beta.iter().enumerate() {
                let p = g.prior_f64(s);
                for (profile, prob) in dist {
                    if *prob == 0.0 {
                        continue;
                    }
                    let y = flow_of_profile(game, profile);
                    let a = profile[k][i];
                    let obey = g.cost(k, a, &y, s);
                    for b in 0..na {
                        if b == a {
                            continue;
                        }
                        let mut dev = y.clone();
                        dev.pop_mut(k)[a] -= wi;
                        dev.pop_mut(k)[b] += wi;
                        sums[a][b].0 += p * prob * obey;
                        sums[a][b].1 += p * prob * g.cost(k, b, &dev, s);
                    }
                }
            }
            for a in 0..na {
                for b in 0..na {
                    if a == b {
                        continue;
                    }
                    let (l, r) = sums[a][b];
                    if best.map_or(true, |(_, _, bl, br)| l - r > bl - br) {
                        best = Some((Witness { pop: k, recommended: Some(a), deviation: b }, i, l, r));
                    }
                }
            }
        }
    }
    Ok(match best {
        Some((w, i, lhs, rhs)) => BruteForceReport {
            report: CheckReport { concept: Concept::Bce, worst_violation: lhs - rhs, witness: Some(w), lhs, rhs },
            player: Some(i),
        },
        None => BruteForceReport {
            report: CheckReport { concept: Concept::Bce, worst_violation: 0.0, witness: None, lhs: 0.0, rhs: 0.0 },
            player: None,
        },
    })
}

/// Counts `N[k][a]` of players recommended each action.
pub type Counts = Vec<Vec<usize>>;

/// The exchangeable scheme: in each state draw a support flow, then
/// recommend `a` to a uniformly chosen set of `N^k_a` players of population
/// `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBCE {
    /// Players per population.
    pub n: Vec<usize>,
    /// Per state: recommendation counts and their probability.
    pub support: Vec<Vec<(Counts, f64)>>,
    /// Largest rounding gap `|N_a/n - y_a|` over the target support.
    pub delta: f64,
    /// Realized obedience violation, `max(0, worst)`, computed exactly.
    pub epsilon: f64,
}

impl SymmetricBCE {
    pub fn flow_of_counts(&self, counts: &Counts) -> FlowProfile {
        FlowProfile::new(
            counts
                .iter()
                .zip(&self.n)
                .map(|(c, &n)| c.iter().map(|&v| v as f64 / n as f64).collect())
                .collect(),
        )
    }

    /// The induced outcome: rounded flows with the target weights.
    pub fn outcome(&self) -> Outcome {
        Outcome::new(
            self.support
                .iter()
                .map(|dist| dist.iter().map(|(c, w)| (self.flow_of_counts(c), *w)).collect())
                .collect(),
        )
    }
}

/// A weight as an exact rational: the small-denominator rational it
/// renders as when there is one, else the double's exact value.
fn exact_weight(w: f64) -> BigRational {
    if let Some((p, q)) = approximate_rational(w, 1_000_000) {
        if (p as f64 / q as f64 - w).abs() <= 5e-15 * w.abs() {
            return BigRational::new(BigInt::from(p), BigInt::from(q));
        }
    }
    BigRational::from_float(w).unwrap_or_else(BigRational::zero)
}

/// Builds the exchangeable scheme for `outcome` with uniform player
/// weights and computes its realized violation exactly.
pub fn construct_eps_bce(game: &AtomicGame, outcome: &Outcome) -> Result<SymmetricBCE> {
    if !game.is_uniform() {
        return Err(Error::Unsupported("the exchangeable construction needs uniform player weights".into()));
    }
    let g = &game.base;
    outcome.check(g)?;
    let n = game.players();
    let mut delta = 0.0f64;
    let support: Vec<Vec<(Counts, f64)>> = outcome
        .per_state()
        .iter()
        .map(|dist| {
            dist.iter()
                .filter(|(_, w)| *w > 0.0)
                .map(|(y, w)| {
                    let counts: Counts = (0..g.num_populations())
                        .map(|k| {
                            let c = largest_remainder(y.pop(k), n[k]);
                            for (a, &ca) in c.iter().enumerate() {
                                delta = delta.max((ca as f64 / n[k] as f64 - y.get(k, a)).abs());
                            }
                            c
                        })
                        .collect();
                    (counts, *w)
                })
                .collect()
        })
        .collect();
    let mut bce = SymmetricBCE { n, support, delta, epsilon: 0.0 };
    bce.epsilon = exact_violation(g, &bce).max(0.0);
    Ok(bce)
}

/// The flow-level obedience violation of `bce` in exact arithmetic.
pub fn exact_violation(g: &GameSpec, bce: &SymmetricBCE) -> f64 {
    let pairs = obedience_pairs(g);
    let mut sums = vec![BigRational::zero(); pairs.len()];
    for (s, dist) in bce.support.iter().enumerate() {
        let p = BigRational::new(BigInt::from(*g.prior()[s].numer()), BigInt::from(*g.prior()[s].denom()));
        for (counts, w) in dist {
            let weight = &p * exact_weight(*w);
            let y: Vec<Vec<BigRational>> = counts
                .iter()
                .zip(&bce.n)
                .map(|(c, &nk)| c.iter().map(|&v| BigRational::new(BigInt::from(v), BigInt::from(nk))).collect())
                .collect();
            for (idx, &(k, a, b)) in pairs.iter().enumerate() {
                let na = counts[k][a];
                if na == 0 {
                    continue;
                }
                let mut dev = y.clone();
                let step = BigRational::new(BigInt::from(1), BigInt::from(bce.n[k]));
                dev[k][a] -= &step;
                dev[k][b] += &step;
                let share = &weight * &y[k][a];
                let diff = g.cost_exact(k, a, &y, s) - g.cost_exact(k, b, &dev, s);
                sums[idx] += share * diff;
            }
        }
    }
    sums.iter().max().map_or(0.0, |v| v.to_f64().unwrap_or(f64::NAN))
}

/// Expands the scheme into an explicit distribution over action profiles:
/// every arrangement of the counts is equally likely.
pub fn expand_symmetric(game: &AtomicGame, bce: &SymmetricBCE) -> Result<ProfileDistribution> {
    check_profile_count(game)?;
    let mut out = Vec::with_capacity(bce.support.len());
    for dist in &bce.support {
        let mut state_dist: Vec<(ActionProfile, f64)> = Vec::new();
        for (counts, w) in dist {
            let per_pop: Vec<Vec<Vec<usize>>> = counts.iter().map(|c| arrangements(c)).collect();
            let mut idx = vec![0usize; per_pop.len()];
            let total: f64 = per_pop.iter().map(|v| v.len() as f64).product();
            loop {
                let profile: ActionProfile = idx.iter().zip(&per_pop).map(|(&i, v)| v[i].clone()).collect();
                match state_dist.iter_mut().find(|(p, _)| *p == profile) {
                    Some(e) => e.1 += w / total,
                    None => state_dist.push((profile, w / total)),
                }
                let mut k = per_pop.len();
                let done = loop {
                    if k == 0 {
                        break true;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < per_pop[k].len() {
                        break false;
                    }
                    idx[k] = 0;
                };
                if done {
                    break;
                }
            }
        }
        out.push(state_dist);
    }
    Ok(out)
}

/// All action sequences with the given counts per action.
fn arrangements(counts: &[usize]) -> Vec<Vec<usize>> {
    fn rec(left: &mut Vec<usize>, cur: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for a in 0..left.len() {
            if left[a] > 0 {
                left[a] -= 1;
                cur.push(a);
                rec(left, cur, n, out);
                cur.pop();
                left[a] += 1;
            }
        }
    }
    let n = counts.iter().sum();
    let mut out = Vec::new();
    rec(&mut counts.to_vec(), &mut Vec::with_capacity(n), n, &mut out);
    out
}

/// `sum_θ p(θ) W1(μ1(·|θ), μ2(·|θ))` with the L∞ ground metric, each W1
/// from the transport linear program.
pub fn wasserstein_outcome_distance(mu1: &Outcome, mu2: &Outcome, prior: &[f64]) -> Result<f64> {
    if mu1.num_states() != mu2.num_states() || prior.len() != mu1.num_states() {
        return Err(Error::Spec("outcomes and prior disagree on the number of states".into()));
    }
    let mut total = 0.0;
    for s in 0..prior.len() {
        total += prior[s] * transport_distance(mu1.state(s), mu2.state(s))?;
    }
    Ok(total)
}

/// W1 between two finite distributions over flows.
pub fn transport_distance(d1: &[(FlowProfile, f64)], d2: &[(FlowProfile, f64)]) -> Result<f64> {
    let d1: Vec<_> = d1.iter().filter(|(_, w)| *w > 0.0).collect();
    let d2: Vec<_> = d2.iter().filter(|(_, w)| *w > 0.0).collect();
    let (m, n) = (d1.len(), d2.len());
    if m == 0 || n == 0 {
        return Err(Error::Spec("empty distribution".into()));
    }
    let mut lp = LinearProgram::new(
        d1.iter()
            .flat_map(|(y, _)| d2.iter().map(move |(z, _)| y.linf_distance(z)))
            .collect(),
    );
    for (i, (_, w)) in d1.iter().enumerate() {
        let mut row = vec![0.0; m * n];
        row[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = 1.0);
        lp.eq.push((row, *w));
    }
    // the last column constraint is implied by the others
    for (j, (_, w)) in d2.iter().enumerate().take(n - 1) {
        let mut row = vec![0.0; m * n];
        for i in 0..m {
            row[i * n + j] = 1.0;
        }
        lp.eq.push((row, *w));
    }
    Ok(lp_solve(&lp)?.objective.max(0.0))
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub wasserstein: f64,
}

/// For each `n`, builds the exchangeable scheme with `n` players per
/// population and records its rounding gap, realized violation, and the
/// distance of its induced outcome to `outcome`.
pub fn convergence_run(game: &GameSpec, outcome: &Outcome, n_list: &[usize]) -> Result<Vec<ConvergenceRow>> {
    outcome.check(game)?;
    let r = check_bcwe(game, outcome);
    if r.worst_violation > 1e-6 {
        return Err(Error::Spec(format!(
            "outcome is not a Bayes correlated Wardrop equilibrium (violation {:e})",
            r.worst_violation
        )));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Spec("player counts must be strictly increasing".into()));
    }
    let prior: Vec<f64> = (0..game.num_states()).map(|s| game.prior_f64(s)).collect();
    n_list
        .iter()
        .map(|&n| {
            let atomic = AtomicGame::uniform(game.clone(), n)?;
            let bce = construct_eps_bce(&atomic, outcome)?;
            let wasserstein = wasserstein_outcome_distance(&bce.outcome(), outcome, &prior)?;
            Ok(ConvergenceRow { n, delta: bce.delta, epsilon: bce.epsilon, wasserstein })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::equilibrium_checks::check_bce_flowlevel;
    use crate::expr::CostExpr;

    fn single(a: f64, b: f64) -> FlowProfile {
        FlowProfile::single(vec![a, b])
    }

    #[test]
    fn flows_of_profiles() {
        let g = AtomicGame::uniform(bundled::el_farol(), 4).unwrap();
        assert_eq!(flow_of_profile(&g, &vec![vec![0, 0, 1, 1]]), single(0.5, 0.5));
        assert_eq!(flow_of_profile(&g, &vec![vec![0; 4]]), single(1.0, 0.0));
        let w = AtomicGame::with_weights(bundled::el_farol(), vec![vec![0.5, 0.3, 0.2]]).unwrap();
        let y = flow_of_profile(&w, &vec![vec![0, 1, 0]]);
        assert!((y.get(0, 0) - 0.7).abs() < 1e-15 && (y.get(0, 1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn two_player_el_farol_anticoordination() {
        let g = AtomicGame::uniform(bundled::el_farol(), 2).unwrap();
        let beta = vec![vec![(vec![vec![0, 1]], 0.5), (vec![vec![1, 0]], 0.5)]];
        let r = check_bce_bruteforce(&g, &beta).unwrap();
        assert!(r.report.worst_violation <= 0.0, "{r:?}");
    }

    #[test]
    fn single_player_best_action() {
        let base = bundled::pigou_info();
        let g = AtomicGame::uniform(base.clone(), 1).unwrap();
        let s0 = base.state_index("0").unwrap();
        let mut beta = vec![vec![(vec![vec![0]], 1.0)]; 2];
        beta[s0] = vec![(vec![vec![1]], 1.0)];
        assert!(check_bce_bruteforce(&g, &beta).unwrap().report.worst_violation <= 0.0);
    }

    #[test]
    fn constant_costs_have_zero_violation() {
        let base = GameSpec::complete_information("p", &["a", "b"], vec![CostExpr::int(3), CostExpr::int(3)]);
        let g = AtomicGame::uniform(base, 3).unwrap();
        let mut dist = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    dist.push((vec![vec![a, b, c]], 0.125));
                }
            }
        }
        assert_eq!(check_bce_bruteforce(&g, &vec![dist]).unwrap().report.worst_violation, 0.0);
    }

    #[test]
    fn el_farol_construction_at_four_players() {
        let base = bundled::el_farol();
        let g = AtomicGame::uniform(base.clone(), 4).unwrap();
        let bce = construct_eps_bce(&g, &bundled::el_farol_cwe()).unwrap();
        assert_eq!(bce.support[0][0].0, vec![vec![4, 0]]);
        assert_eq!(bce.support[0][1].0, vec![vec![2, 2]]);
        assert_eq!(bce.delta, 0.0);
        // recommended a: obey 2/3, deviate 1/3 c_b(1/4) + 1/3 c_b(3/4) = 2/3
        assert_eq!(bce.epsilon, 0.0);
        let flow = check_bce_flowlevel(&base, &bce);
        assert!(flow.worst_violation.abs() < 1e-12);
        let brute = check_bce_bruteforce(&g, &expand_symmetric(&g, &bce).unwrap()).unwrap();
        assert!((brute.report.worst_violation - flow.worst_violation).abs() < 1e-12);
    }

    #[test]
    fn off_grid_point_mass_has_shift_violation() {
        // El Farol (3/4,1/4): a recommended-b player deviating to a pays 1,
        // obeying pays c_b(1/4) = 1; a recommended-a player obeys at 1 and
        // deviates to c_b(1/4 + 1/n) = 1 - 4/n, so ε_n = (3/4)(4/n) = 3/n.
        let base = bundled::el_farol();
        let o = Outcome::point_masses(vec![single(0.75, 0.25)]);
        for n in [4, 8, 16] {
            let g = AtomicGame::uniform(base.clone(), n).unwrap();
            let bce = construct_eps_bce(&g, &o).unwrap();
            assert!((bce.epsilon - 3.0 / n as f64).abs() < 1e-15, "{n}: {}", bce.epsilon);
        }
    }

    #[test]
    fn wasserstein_hand_values() {
        let prior = [1.0];
        let a = Outcome::point_masses(vec![single(1.0, 0.0)]);
        let b = Outcome::point_masses(vec![single(0.0, 1.0)]);
        assert_eq!(wasserstein_outcome_distance(&a, &a, &prior).unwrap(), 0.0);
        assert_eq!(wasserstein_outcome_distance(&a, &b, &prior).unwrap(), 1.0);
        let split = Outcome::new(vec![vec![(single(1.0, 0.0), 0.5), (single(0.0, 1.0), 0.5)]]);
        let mid = Outcome::point_masses(vec![single(0.5, 0.5)]);
        assert!((wasserstein_outcome_distance(&split, &mid, &prior).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn convergence_tables() {
        let g = bundled::el_farol();
        let rows = convergence_run(&g, &bundled::el_farol_cwe(), &[4, 8, 16, 32]).unwrap();
        assert!(rows.iter().all(|r| r.wasserstein == 0.0 && r.epsilon == 0.0));
        let third = Outcome::point_masses(vec![single(1.0 / 3.0, 2.0 / 3.0)]);
        let c = GameSpec::complete_information("p", &["a", "b"], vec![CostExpr::int(1), CostExpr::int(1)]);
        let rows = convergence_run(&c, &third, &[2, 4, 8, 16, 32, 64]).unwrap();
        for r in &rows {
            assert!(r.wasserstein <= r.delta + 1e-15);
            assert!(r.delta <= 1.0 / r.n as f64);
        }
        assert!(convergence_run(&g, &Outcome::point_masses(vec![single(0.5, 0.5)]), &[4]).is_err());
        assert!(convergence_run(&g, &bundled::el_farol_cwe(), &[8, 4]).is_err());
    }

    #[test]
    fn weighted_games_rejected_by_constructor() {
        let w = AtomicGame::with_weights(bundled::el_farol(), vec![vec![0.5, 0.3, 0.2]]).unwrap();
        assert!(matches!(construct_eps_bce(&w, &bundled::el_farol_cwe()), Err(Error::Unsupported(_))));
    }
}
