//! Bundled example games, the example outcomes that go with them, and
//! seeded random congestion-game generators.

use num_traits::One;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::Rational;
use crate::format::parse_game;
use crate::game_model::{congestion_to_game, CongestionSpec, FlowProfile, GameSpec, Outcome, Polynomial, Population};

pub const EL_FAROL_TOML: &str = include_str!("../data/elfarol.toml");
pub const PIGOU_INFO_TOML: &str = include_str!("../data/pigou_info.toml");
pub const PIGOU_NETWORK_TOML: &str = include_str!("../data/pigou_network.toml");

/// Names accepted by [`bundled_game`].
pub const BUNDLED_NAMES: [&str; 3] = ["elfarol", "pigou_info", "pigou_network"];

pub fn el_farol() -> GameSpec {
    parse_game(EL_FAROL_TOML).expect("bundled game is valid")
}

pub fn pigou_info() -> GameSpec {
    parse_game(PIGOU_INFO_TOML).expect("bundled game is valid")
}

pub fn pigou_network() -> GameSpec {
    parse_game(PIGOU_NETWORK_TOML).expect("bundled game is valid")
}

/// Looks up a bundled game, or generates one for `random:SEED`.
pub fn bundled_game(name: &str) -> Option<Result<GameSpec>> {
    match name {
        "elfarol" => Some(Ok(el_farol())),
        "pigou_info" => Some(Ok(pigou_info())),
        "pigou_network" => Some(Ok(pigou_network())),
        _ => name.strip_prefix("random:").map(|seed| {
            seed.parse::<u64>()
                .map_err(|_| Error::Spec(format!("`{seed}` is not a seed")))
                .and_then(random_congestion)
        }),
    }
}

/// The El Farol correlated equilibrium with social cost 2/3:
/// (1,0) with weight 1/3 and (1/2,1/2) with weight 2/3.
pub fn el_farol_cwe() -> Outcome {
    Outcome::new(vec![vec![
        (FlowProfile::single(vec![1.0, 0.0]), 1.0 / 3.0),
        (FlowProfile::single(vec![0.5, 0.5]), 2.0 / 3.0),
    ]])
}

/// The two-state Pigou outcome that correlates with the state: everyone on
/// `a` when `a` is free, an even split between the all-`a` and all-`b`
/// flows otherwise.
pub fn pigou_paper_bcwe(game: &GameSpec) -> Outcome {
    let s0 = game.state_index("0").expect("pigou_info has state 0");
    let s1 = game.state_index("1").expect("pigou_info has state 1");
    let mut per_state = vec![Vec::new(); 2];
    per_state[s1] = vec![(FlowProfile::single(vec![1.0, 0.0]), 1.0)];
    per_state[s0] = vec![
        (FlowProfile::single(vec![1.0, 0.0]), 0.5),
        (FlowProfile::single(vec![0.0, 1.0]), 0.5),
    ];
    Outcome::new(per_state)
}

/// Names of bundled outcomes for a bundled game.
pub fn bundled_outcome(game_name: &str, outcome_name: &str, game: &GameSpec) -> Option<Outcome> {
    match (game_name, outcome_name) {
        ("elfarol", "paper_cwe") => Some(el_farol_cwe()),
        ("pigou_info", "paper_bcwe") => Some(pigou_paper_bcwe(game)),
        _ => None,
    }
}

fn small_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    Rational::new(rng.gen_range(lo..=hi), *[1, 2, 4].choose(rng).unwrap())
}

fn state_names(n: usize) -> (Vec<String>, Vec<Rational>) {
    let names = (0..n).map(|s| s.to_string()).collect();
    let prior = vec![Rational::new(1, n as i64); n];
    (names, prior)
}

fn random_prior(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    let w: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = w.iter().sum();
    w.into_iter().map(|x| Rational::new(x, total)).collect()
}

/// Parallel links with strictly increasing affine latencies
/// `c_e(x) = a_e + b_e x` (b_e > 0), one action per link.
pub fn random_parallel_affine(seed: u64, links: usize, states: usize) -> GameSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (names, _) = state_names(states);
    let prior = random_prior(&mut rng, states);
    let latency = (0..links)
        .map(|_| {
            (0..states)
                .map(|_| Polynomial::new(vec![small_rational(&mut rng, 0, 8), small_rational(&mut rng, 1, 8)]))
                .collect()
        })
        .collect();
    let actions: Vec<String> = (0..links).map(|e| format!("l{e}")).collect();
    let action_refs: Vec<&str> = actions.iter().map(String::as_str).collect();
    let spec = CongestionSpec {
        populations: vec![Population::new("p", &action_refs)],
        states: names,
        prior,
        resources: actions.clone(),
        latency,
        actions: vec![(0..links).map(|e| vec![e]).collect()],
    };
    congestion_to_game(&spec).expect("generated game is valid")
}

/// Options for [`random_congestion_with`].
#[derive(Debug, Clone)]
pub struct RandomCongestion {
    pub populations: usize,
    pub max_resources: usize,
    pub max_actions: usize,
    pub max_states: usize,
    pub max_degree: usize,
    /// Force a positive linear coefficient on every latency.
    pub strictly_increasing: bool,
}

impl Default for RandomCongestion {
    fn default() -> Self {
        RandomCongestion {
            populations: 1,
            max_resources: 4,
            max_actions: 3,
            max_states: 2,
            max_degree: 2,
            strictly_increasing: false,
        }
    }
}

/// A random congestion game with the default options; used by the CLI's
/// `random:SEED` game name.
pub fn random_congestion(seed: u64) -> Result<GameSpec> {
    random_congestion_with(seed, &RandomCongestion::default())
}

/// A random congestion game: nonnegative polynomial latencies, actions are
/// distinct nonempty resource subsets.
pub fn random_congestion_with(seed: u64, opts: &RandomCongestion) -> Result<GameSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ne = rng.gen_range(2..=opts.max_resources.max(2));
    let ns = rng.gen_range(1..=opts.max_states.max(1));
    let (names, _) = state_names(ns);
    let prior = if ns == 1 { vec![Rational::one()] } else { random_prior(&mut rng, ns) };
    let resources: Vec<String> = (0..ne).map(|e| format!("e{e}")).collect();
    let latency = (0..ne)
        .map(|_| {
            (0..ns)
                .map(|_| {
                    let degree = rng.gen_range(1..=opts.max_degree.max(1));
                    let mut c: Vec<Rational> = (0..=degree).map(|_| small_rational(&mut rng, 0, 4)).collect();
                    if opts.strictly_increasing && c[1] == Rational::from(0) {
                        c[1] = Rational::new(1, 2);
                    }
                    Polynomial::new(c)
                })
                .collect()
        })
        .collect();
    let mut populations = Vec::new();
    let mut actions = Vec::new();
    for k in 0..opts.populations {
        let max_subsets = (1usize << ne) - 1;
        let na = rng.gen_range(2..=opts.max_actions.max(2)).min(max_subsets);
        let mut subsets: Vec<usize> = (1..=max_subsets).collect();
        subsets.shuffle(&mut rng);
        let acts: Vec<Vec<usize>> = subsets[..na]
            .iter()
            .map(|mask| (0..ne).filter(|e| mask >> e & 1 == 1).collect())
            .collect();
        let names: Vec<String> = (0..na).map(|a| format!("r{a}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        populations.push(Population::new(&format!("p{k}"), &refs));
        actions.push(acts);
    }
    congestion_to_game(&CongestionSpec { populations, states: names, prior, resources, latency, actions })
}
