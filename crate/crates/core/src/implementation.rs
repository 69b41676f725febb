//! Information structures: implementing a designed outcome with a direct
//! structure, checking Bayes Wardrop equilibria, and solving them through
//! the auxiliary complete-information game.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{rational_to_f64, Rational};
use crate::game_model::{load_profile, FlowProfile, GameSpec, Outcome};
use crate::wardrop::{minimize_potential, random_flow, Potential, StopRule};

/// Populations with sizes, finite type sets, and a state-conditional kernel
/// over type profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationStructure {
    pub sizes: Vec<Rational>,
    /// Type names per population.
    pub types: Vec<Vec<String>>,
    /// Per state: type profiles (one type index per population) with their
    /// probabilities.
    pub kernel: Vec<Vec<(Vec<usize>, f64)>>,
}

impl InformationStructure {
    pub fn num_populations(&self) -> usize {
        self.sizes.len()
    }

    pub fn size_f64(&self, k: usize) -> f64 {
        rational_to_f64(&self.sizes[k])
    }

    /// Checks sizes, type indices and kernel normalization against `game`.
    pub fn check(&self, game: &GameSpec) -> Result<()> {
        if self.sizes.is_empty() || self.types.len() != self.sizes.len() {
            return Err(Error::Spec("every population needs a size and a type set".into()));
        }
        if self.sizes.iter().any(|s| *s < Rational::zero()) || self.sizes.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::Spec("population sizes must be nonnegative and sum to 1".into()));
        }
        if self.types.iter().any(Vec::is_empty) {
            return Err(Error::Spec("type sets must be nonempty".into()));
        }
        if self.kernel.len() != game.num_states() {
            return Err(Error::Spec("the kernel needs one distribution per state".into()));
        }
        for (s, dist) in self.kernel.iter().enumerate() {
            let mut total = 0.0;
            for (tau, w) in dist {
                if tau.len() != self.sizes.len() || tau.iter().zip(&self.types).any(|(&t, ts)| t >= ts.len()) {
                    return Err(Error::Spec(format!("malformed type profile in state {s}")));
                }
                if !(*w >= 0.0) {
                    return Err(Error::Spec(format!("negative kernel weight in state {s}")));
                }
                total += w;
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Spec(format!("kernel weights in state {s} sum to {total}")));
            }
        }
        Ok(())
    }
}

/// Per population and type, the flow vector chosen by that type; entries
/// sum to the population size.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    pub flows: Vec<Vec<Vec<f64>>>,
}

impl StrategyProfile {
    /// Aggregate flow `y(τ) = Σ_k y^k(τ^k)`.
    pub fn aggregate(&self, tau: &[usize]) -> FlowProfile {
        let n = self.flows[0][0].len();
        let mut y = vec![0.0; n];
        for (k, &t) in tau.iter().enumerate() {
            for (a, v) in self.flows[k][t].iter().enumerate() {
                y[a] += v;
            }
        }
        FlowProfile::single(y)
    }

    fn check(&self, structure: &InformationStructure, actions: usize) -> Result<()> {
        if self.flows.len() != structure.num_populations() {
            return Err(Error::Spec("strategies need one entry per population".into()));
        }
        for (k, per_type) in self.flows.iter().enumerate() {
            if per_type.len() != structure.types[k].len() {
                return Err(Error::Spec("strategies need one flow per type".into()));
            }
            let gamma = structure.size_f64(k);
            for y in per_type {
                let total: f64 = y.iter().sum();
                if y.len() != actions || y.iter().any(|v| !(*v >= 0.0)) || (total - gamma).abs() > 1e-12 {
                    return Err(Error::Spec(format!("strategy of population {k} is not a flow of mass {gamma}")));
                }
            }
        }
        Ok(())
    }
}

fn single_population(game: &GameSpec) -> Result<usize> {
    if game.num_populations() != 1 {
        return Err(Error::Unsupported(
            "information structures are defined for games with one homogeneous action set".into(),
        ));
    }
    Ok(game.num_actions(0))
}

/// Splits `n` units in proportion to `y` (which sums to one): floors
/// first, then the leftover units to the largest remainders, ties going to
/// the earlier action.
pub fn largest_remainder(y: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = y.iter().sum();
    let scaled: Vec<f64> = y.iter().map(|v| v / total * n as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|v| v.floor().max(0.0) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = scaled[i] - scaled[i].floor();
        let rj = scaled[j] - scaled[j].floor();
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    if assigned <= n {
        for &i in order.iter().cycle().take(n - assigned) {
            counts[i] += 1;
        }
    } else {
        let mut extra = assigned - n;
        for &i in order.iter().rev() {
            while extra > 0 && counts[i] > 0 {
                counts[i] -= 1;
                extra -= 1;
            }
        }
    }
    counts
}

/// How recommendation patterns are assigned to populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Uniform over the cyclic rotations of the block pattern: every
    /// population is recommended `a` with probability `N_a/K`.
    Symmetrized,
    /// Populations `0..N_0` get the first action, the next `N_1` the
    /// second, and so on.
    Block,
}

/// A direct structure with obedient strategies and its realized violation.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectImplementation {
    pub structure: InformationStructure,
    pub strategies: StrategyProfile,
    /// Largest recommended-type obedience violation.
    pub epsilon: f64,
    /// Largest rounding gap `|N_a/K - y_a|`.
    pub delta: f64,
}

/// Builds a direct information structure with `denominator` equal-size
/// populations whose types are the actions, recommending each support flow
/// rounded to multiples of `1/denominator`.
pub fn direct_structure_from_bcwe(
    game: &GameSpec,
    outcome: &Outcome,
    denominator: usize,
    kind: KernelKind,
) -> Result<DirectImplementation> {
    let na = single_population(game)?;
    outcome.check(game)?;
    if denominator == 0 {
        return Err(Error::Spec("denominator must be at least 1".into()));
    }
    let k = denominator;
    let action_names = game.populations()[0].actions.clone();
    let mut delta = 0.0f64;
    let kernel = outcome
        .per_state()
        .iter()
        .map(|dist| {
            let mut out: Vec<(Vec<usize>, f64)> = Vec::new();
            let mut add = |tau: Vec<usize>, w: f64| match out.iter_mut().find(|(t, _)| *t == tau) {
                Some(e) => e.1 += w,
                None => out.push((tau, w)),
            };
            for (y, w) in dist.iter().filter(|(_, w)| *w > 0.0) {
                let counts = largest_remainder(y.pop(0), k);
                for (a, &c) in counts.iter().enumerate() {
                    delta = delta.max((c as f64 / k as f64 - y.get(0, a)).abs());
                }
                let block: Vec<usize> = counts.iter().enumerate().flat_map(|(a, &c)| std::iter::repeat(a).take(c)).collect();
                match kind {
                    KernelKind::Block => add(block, *w),
                    KernelKind::Symmetrized => {
                        for r in 0..k {
                            add((0..k).map(|i| block[(i + r) % k]).collect(), w / k as f64);
                        }
                    }
                }
            }
            out
        })
        .collect();
    let structure = InformationStructure {
        sizes: vec![Rational::new(1, k as i64); k],
        types: vec![action_names; k],
        kernel,
    };
    let gamma = 1.0 / k as f64;
    let strategies = StrategyProfile {
        flows: vec![(0..na).map(|t| (0..na).map(|a| if a == t { gamma } else { 0.0 }).collect()).collect(); k],
    };
    let epsilon = bwe_violation(game, &structure, &strategies)?.violation;
    Ok(DirectImplementation { structure, strategies, epsilon, delta })
}

/// The worst Bayes Wardrop equilibrium constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct BweReport {
    /// Largest conditional expected cost difference `E[c_a - c_b | τ^k]`
    /// (not normalized by the type probability) over used actions `a`.
    pub violation: f64,
    /// `(population, type, used action, deviation)` attaining it.
    pub witness: Option<(usize, usize, usize, usize)>,
}

/// `acc[k][t][a] = Σ_{θ, τ: τ^k = t} p(θ) π(τ|θ) c_a(y(τ), θ)`.
fn conditional_costs(game: &GameSpec, structure: &InformationStructure, strategies: &StrategyProfile) -> Vec<Vec<Vec<f64>>> {
    let na = game.num_actions(0);
    let mut acc: Vec<Vec<Vec<f64>>> = structure.types.iter().map(|ts| vec![vec![0.0; na]; ts.len()]).collect();
    for (s, dist) in structure.kernel.iter().enumerate() {
        let p = game.prior_f64(s);
        for (tau, w) in dist {
            if *w == 0.0 {
                continue;
            }
            let y = strategies.aggregate(tau);
            let c = game.cost_profile(&y, s);
            for (k, &t) in tau.iter().enumerate() {
                for a in 0..na {
                    acc[k][t][a] += p * w * c[0][a];
                }
            }
        }
    }
    acc
}

/// Checks the Bayes Wardrop equilibrium conditions.
pub fn bwe_violation(game: &GameSpec, structure: &InformationStructure, strategies: &StrategyProfile) -> Result<BweReport> {
    let na = single_population(game)?;
    structure.check(game)?;
    strategies.check(structure, na)?;
    let acc = conditional_costs(game, structure, strategies);
    let mut best = BweReport { violation: f64::NEG_INFINITY, witness: None };
    for (k, per_type) in acc.iter().enumerate() {
        for (t, costs) in per_type.iter().enumerate() {
            for a in 0..na {
                if strategies.flows[k][t][a] <= 0.0 {
                    continue;
                }
                for b in 0..na {
                    if b != a && costs[a] - costs[b] > best.violation {
                        best = BweReport { violation: costs[a] - costs[b], witness: Some((k, t, a, b)) };
                    }
                }
            }
        }
    }
    if best.witness.is_none() {
        best.violation = 0.0;
    }
    Ok(best)
}

/// Pushes the kernel through the aggregate-flow map.
pub fn outcome_of_strategies(structure: &InformationStructure, strategies: &StrategyProfile) -> Outcome {
    let per_state = structure
        .kernel
        .iter()
        .map(|dist| {
            let mut out: Vec<(FlowProfile, f64)> = Vec::new();
            for (tau, w) in dist.iter().filter(|(_, w)| *w > 0.0) {
                let y = strategies.aggregate(tau);
                match out.iter_mut().find(|(f, _)| *f == y) {
                    Some(e) => e.1 += w,
                    None => out.push((y, *w)),
                }
            }
            out
        })
        .collect();
    Outcome::new(per_state)
}

/// Closed form of the symmetrized direct structure's violation: every
/// population is recommended `a` with probability `N_a/K`, so each
/// recommended-type constraint is `Σ p μ (N_a/K)(c_a - c_b)` at the
/// rounded flow. Equal to [`bwe_violation`] of the explicit structure, at a
/// cost independent of `K`.
pub fn symmetric_direct_violation(game: &GameSpec, outcome: &Outcome, denominator: usize) -> Result<f64> {
    let na = single_population(game)?;
    outcome.check(game)?;
    let k = denominator as f64;
    let mut sums = vec![vec![0.0; na]; na];
    for (s, dist) in outcome.per_state().iter().enumerate() {
        for (y, w) in dist.iter().filter(|(_, w)| *w > 0.0) {
            let counts = largest_remainder(y.pop(0), denominator);
            let yk = FlowProfile::single(counts.iter().map(|&c| c as f64 / k).collect());
            let c = game.cost_profile(&yk, s);
            for a in 0..na {
                for b in 0..na {
                    sums[a][b] += game.prior_f64(s) * w * yk.get(0, a) * (c[0][a] - c[0][b]);
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for a in 0..na {
        for b in 0..na {
            if a != b {
                worst = worst.max(sums[a][b]);
            }
        }
    }
    Ok(worst)
}

/// The auxiliary complete-information game's potential: population
/// `(k, τ^k)` of mass `γ^k`, potential `Σ_θ p(θ) Σ_τ π(τ|θ) Φ_θ(y(τ))`.
struct AuxiliaryPotential<'a> {
    game: &'a GameSpec,
    structure: &'a InformationStructure,
    /// Block index of `(k, t)`.
    offsets: Vec<usize>,
}

impl AuxiliaryPotential<'_> {
    fn strategies(&self, x: &FlowProfile) -> StrategyProfile {
        StrategyProfile {
            flows: self
                .structure
                .types
                .iter()
                .enumerate()
                .map(|(k, ts)| (0..ts.len()).map(|t| x.pop(self.offsets[k] + t).to_vec()).collect())
                .collect(),
        }
    }
}

impl Potential for AuxiliaryPotential<'_> {
    fn value(&self, x: &FlowProfile) -> f64 {
        let spec = self.game.congestion().expect("auxiliary potential needs a congestion backing");
        let strat = self.strategies(x);
        let mut total = 0.0;
        for (s, dist) in self.structure.kernel.iter().enumerate() {
            for (tau, w) in dist {
                let y = strat.aggregate(tau);
                total += self.game.prior_f64(s) * w * spec.potential_at_loads(&load_profile(spec, &y), s);
            }
        }
        total
    }

    fn gradient(&self, x: &FlowProfile) -> Vec<Vec<f64>> {
        let acc = conditional_costs(self.game, self.structure, &self.strategies(x));
        acc.into_iter().flatten().collect()
    }
}

/// A solved Bayes Wardrop equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct BweSolution {
    pub strategies: StrategyProfile,
    pub violation: f64,
    pub potential: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves for a Bayes Wardrop equilibrium by minimizing the auxiliary
/// potential, starting from uniform strategies.
pub fn solve_bwe(game: &GameSpec, structure: &InformationStructure, tol: f64) -> Result<BweSolution> {
    let na = single_population(game)?;
    let start = StrategyProfile {
        flows: structure
            .types
            .iter()
            .enumerate()
            .map(|(k, ts)| vec![vec![structure.size_f64(k) / na as f64; na]; ts.len()])
            .collect(),
    };
    solve_bwe_from(game, structure, start, tol, 100_000)
}

/// [`solve_bwe`] from given strategies.
pub fn solve_bwe_from(
    game: &GameSpec,
    structure: &InformationStructure,
    start: StrategyProfile,
    tol: f64,
    max_iter: usize,
) -> Result<BweSolution> {
    let na = single_population(game)?;
    if game.congestion().is_none() {
        return Err(Error::Unsupported("solving for a Bayes Wardrop equilibrium needs a congestion backing".into()));
    }
    structure.check(game)?;
    start.check(structure, na)?;
    let mut offsets = Vec::new();
    let mut blocks = Vec::new();
    for per_type in &start.flows {
        offsets.push(blocks.len());
        blocks.extend(per_type.iter().cloned());
    }
    let pot = AuxiliaryPotential { game, structure, offsets };
    let r = minimize_potential(&pot, FlowProfile::new(blocks), StopRule::Support, tol, max_iter);
    let strategies = pot.strategies(&r.x);
    let violation = bwe_violation(game, structure, &strategies)?.violation;
    Ok(BweSolution {
        potential: pot.value(&r.x),
        converged: violation <= tol,
        strategies,
        violation,
        iterations: r.iterations,
    })
}

/// Spread of equilibrium quantities over random starts.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub trials: usize,
    /// Largest difference in a type's conditional expected cost of an
    /// action used in either of two trials.
    pub cost_deviation: f64,
    /// Largest L∞ difference of aggregate flows `y(τ)` over the kernel's
    /// support.
    pub flow_deviation: f64,
    /// Largest L∞ difference of the per-type strategies themselves.
    pub strategy_deviation: f64,
    pub max_violation: f64,
}

/// Solves from `trials` random interior starts and compares the results.
pub fn bwe_cost_uniqueness_probe(
    game: &GameSpec,
    structure: &InformationStructure,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<UniquenessReport> {
    let na = single_population(game)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sols = Vec::with_capacity(trials);
    for _ in 0..trials {
        let flows = structure
            .types
            .iter()
            .enumerate()
            .map(|(k, ts)| {
                let gamma = structure.size_f64(k);
                (0..ts.len()).map(|_| random_flow(&[na], &[gamma], &mut rng).pop(0).to_vec()).collect()
            })
            .collect();
        let sol = solve_bwe_from(game, structure, StrategyProfile { flows }, tol, 100_000)?;
        let costs = conditional_costs(game, structure, &sol.strategies);
        sols.push((sol, costs));
    }
    let mut report = UniquenessReport {
        trials,
        cost_deviation: 0.0,
        flow_deviation: 0.0,
        strategy_deviation: 0.0,
        max_violation: sols.iter().map(|(s, _)| s.violation).fold(0.0, f64::max),
    };
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            let (si, ci) = &sols[i];
            let (sj, cj) = &sols[j];
            for k in 0..ci.len() {
                for t in 0..ci[k].len() {
                    for a in 0..na {
                        let used = si.strategies.flows[k][t][a] > 0.0 || sj.strategies.flows[k][t][a] > 0.0;
                        if used {
                            report.cost_deviation = report.cost_deviation.max((ci[k][t][a] - cj[k][t][a]).abs());
                        }
                        report.strategy_deviation = report
                            .strategy_deviation
                            .max((si.strategies.flows[k][t][a] - sj.strategies.flows[k][t][a]).abs());
                    }
                }
            }
            for dist in &structure.kernel {
                for (tau, w) in dist {
                    if *w > 0.0 {
                        let d = si.strategies.aggregate(tau).linf_distance(&sj.strategies.aggregate(tau));
                        report.flow_deviation = report.flow_deviation.max(d);
                    }
                }
            }
        }
    }
    Ok(report)
}

/// The structure revealing nothing: one population, one type.
pub fn uninformative_structure(game: &GameSpec) -> InformationStructure {
    InformationStructure {
        sizes: vec![Rational::one()],
        types: vec![vec!["none".to_string()]],
        kernel: vec![vec![(vec![0], 1.0)]; game.num_states()],
    }
}

/// The structure revealing the state: one population whose type is the
/// state.
pub fn revealing_structure(game: &GameSpec) -> InformationStructure {
    InformationStructure {
        sizes: vec![Rational::one()],
        types: vec![game.states().to_vec()],
        kernel: (0..game.num_states()).map(|s| vec![(vec![s], 1.0)]).collect(),
    }
}

/// A random structure with up to `max_pops` populations and `max_types`
/// types each; sizes are small rationals and every state's kernel has a
/// random support.
pub fn random_information_structure(num_states: usize, max_pops: usize, max_types: usize, seed: u64) -> InformationStructure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=max_pops.max(1));
    let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = raw.iter().sum();
    let sizes = raw.iter().map(|&r| Rational::new(r, total)).collect();
    let types: Vec<Vec<String>> = (0..k)
        .map(|_| (0..rng.gen_range(1..=max_types.max(1))).map(|t| format!("t{t}")).collect())
        .collect();
    let mut profiles: Vec<Vec<usize>> = vec![Vec::new()];
    for ts in &types {
        profiles = profiles
            .into_iter()
            .flat_map(|p| {
                (0..ts.len()).map(move |t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    let kernel = (0..num_states)
        .map(|_| {
            let m = rng.gen_range(1..=profiles.len());
            let mut chosen = profiles.clone();
            chosen.shuffle(&mut rng);
            chosen.truncate(m);
            chosen.sort();
            let w: Vec<f64> = (0..m).map(|_| rng.gen_range(1..=5) as f64).collect();
            let s: f64 = w.iter().sum();
            chosen.into_iter().zip(w).map(|(t, v)| (t, v / s)).collect()
        })
        .collect();
    InformationStructure { sizes, types, kernel }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::equilibrium_checks::check_bcwe;
    use crate::wardrop::solve_we_potential;

    fn single(a: f64, b: f64) -> FlowProfile {
        FlowProfile::single(vec![a, b])
    }

    #[test]
    fn rounding_by_largest_remainder() {
        assert_eq!(largest_remainder(&[0.5, 0.5], 3), vec![2, 1]);
        assert_eq!(largest_remainder(&[1.0 / 3.0, 2.0 / 3.0], 4), vec![1, 3]);
        assert_eq!(largest_remainder(&[0.29, 0.71], 100), vec![29, 71]);
        assert_eq!(largest_remainder(&[1.0, 0.0], 7), vec![7, 0]);
        assert_eq!(largest_remainder(&[0.2, 0.3, 0.5], 1), vec![0, 0, 1]);
    }

    #[test]
    fn el_farol_direct_structure_with_two_populations() {
        let g = bundled::el_farol();
        let cwe = bundled::el_farol_cwe();
        let imp = direct_structure_from_bcwe(&g, &cwe, 2, KernelKind::Symmetrized).unwrap();
        assert_eq!(imp.structure.sizes, vec![Rational::new(1, 2); 2]);
        let kernel = &imp.structure.kernel[0];
        assert_eq!(kernel.len(), 3);
        for tau in [vec![0, 0], vec![0, 1], vec![1, 0]] {
            let w = kernel.iter().find(|(t, _)| *t == tau).unwrap().1;
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(imp.epsilon <= 1e-12);
        assert_eq!(outcome_of_strategies(&imp.structure, &imp.strategies), cwe);
    }

    #[test]
    fn full_disclosure_point_mass() {
        let g = bundled::pigou_info();
        let s0 = g.state_index("0").unwrap();
        let mut flows = vec![single(1.0, 0.0); 2];
        flows[s0] = single(0.0, 1.0);
        let imp = direct_structure_from_bcwe(&g, &Outcome::point_masses(flows), 1, KernelKind::Block).unwrap();
        assert!(imp.epsilon <= 1e-12);
    }

    #[test]
    fn single_type_we_strategy() {
        let g = bundled::el_farol();
        let s = uninformative_structure(&g);
        let we = StrategyProfile { flows: vec![vec![vec![0.25, 0.75]]] };
        assert!(bwe_violation(&g, &s, &we).unwrap().violation <= 0.0);
    }

    #[test]
    fn obedience_fails_for_non_equilibrium_outcome() {
        let g = bundled::pigou_info();
        let all_a = Outcome::point_masses(vec![single(1.0, 0.0), single(1.0, 0.0)]);
        let imp = direct_structure_from_bcwe(&g, &all_a, 1, KernelKind::Block).unwrap();
        let r = bwe_violation(&g, &imp.structure, &imp.strategies).unwrap();
        assert!(r.violation > 0.0);
        assert_eq!(r.witness, Some((0, 0, 0, 1)));
    }

    #[test]
    fn closed_form_matches_explicit_structure() {
        let g = bundled::el_farol();
        let o = Outcome::new(vec![vec![(single(1.0 / 3.0, 2.0 / 3.0), 0.4), (single(0.9, 0.1), 0.6)]]);
        for k in [1, 2, 3, 5, 8, 13] {
            let imp = direct_structure_from_bcwe(&g, &o, k, KernelKind::Symmetrized).unwrap();
            let closed = symmetric_direct_violation(&g, &o, k).unwrap();
            assert!((imp.epsilon.max(0.0) - closed).abs() < 1e-12, "{k}: {} vs {closed}", imp.epsilon);
        }
    }

    #[test]
    fn uninformative_pigou_network_is_the_we() {
        let g = bundled::pigou_network();
        let sol = solve_bwe(&g, &uninformative_structure(&g), 1e-10).unwrap();
        assert!(sol.converged);
        let we = solve_we_potential(&g, 0, 1e-12, 1000).unwrap();
        let y = sol.strategies.aggregate(&[0]);
        assert!(y.linf_distance(&we.flow) < 1e-8);
    }

    #[test]
    fn revealing_structure_gives_state_equilibria() {
        let g = crate::bundled::random_parallel_affine(3, 3, 2);
        let sol = solve_bwe(&g, &revealing_structure(&g), 1e-11).unwrap();
        assert!(sol.converged);
        for s in 0..2 {
            let we = solve_we_potential(&g, s, 1e-13, 10_000).unwrap();
            let y = sol.strategies.aggregate(&[s]);
            let cy = g.cost_profile(&y, s);
            let cw = g.cost_profile(&we.flow, s);
            let level = |c: &[f64], f: &FlowProfile| (0..c.len()).filter(|&a| f.get(0, a) > 1e-9).map(|a| c[a]).fold(f64::NEG_INFINITY, f64::max);
            assert!((level(&cy[0], &y) - level(&cw[0], &we.flow)).abs() < 1e-6);
        }
    }

    #[test]
    fn pushed_equilibrium_outcome_is_bcwe() {
        for seed in 0..10 {
            let g = bundled::random_congestion(seed).unwrap();
            let s = random_information_structure(g.num_states(), 2, 2, seed);
            let sol = solve_bwe(&g, &s, 1e-10).unwrap();
            assert!(sol.converged, "seed {seed}: {}", sol.violation);
            let o = outcome_of_strategies(&s, &sol.strategies);
            assert!(check_bcwe(&g, &o).worst_violation <= 1e-6);
        }
    }

    #[test]
    fn constant_latencies_have_equal_costs() {
        let g = crate::game_model::congestion_to_game(&crate::game_model::CongestionSpec {
            populations: vec![crate::game_model::Population::new("p", &["x", "y"])],
            states: vec!["0".into()],
            prior: vec![Rational::one()],
            resources: vec!["e".into(), "f".into()],
            latency: vec![
                vec![crate::game_model::Polynomial::from_ints(&[2])],
                vec![crate::game_model::Polynomial::from_ints(&[2])],
            ],
            actions: vec![vec![vec![0], vec![1]]],
        })
        .unwrap();
        let s = random_information_structure(1, 2, 2, 4);
        let r = bwe_cost_uniqueness_probe(&g, &s, 20, 1, 1e-10).unwrap();
        assert!(r.cost_deviation <= 1e-9);
    }

    #[test]
    fn non_congestion_games_unsupported() {
        let g = bundled::el_farol();
        assert!(matches!(solve_bwe(&g, &uninformative_structure(&g), 1e-8), Err(Error::Unsupported(_))));
    }
}
