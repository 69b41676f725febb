//! Random instances shared by the integration tests.
#![allow(dead_code)]

use infodesign::atomic::SymmetricBCE;
use infodesign::expr::CostExpr;
use infodesign::format::parse_game;
use infodesign::wardrop::enumerate_compositions;
use infodesign::{FlowProfile, GameSpec, Outcome};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coef(rng: &mut ChaCha8Rng) -> String {
    format!("{}/{}", rng.gen_range(0..=8), [1, 2, 4].choose(rng).unwrap())
}

/// A two-action game with state-dependent, possibly nonmonotone costs.
pub fn random_two_action_game(seed: u64, states: usize) -> GameSpec {
    let mut r = rng(seed);
    let names: Vec<String> = (0..states).map(|s| format!("\"{s}\"")).collect();
    let w: Vec<u32> = (0..states).map(|_| r.gen_range(1..=4)).collect();
    let total: u32 = w.iter().sum();
    let prior: Vec<String> = w.iter().map(|x| format!("\"{x}/{total}\"")).collect();
    let theta: Vec<String> = (0..states).map(|_| format!("\"{}\"", coef(&mut r))).collect();
    let a = format!("{} + {}*y[a] - {}*y[b]*y[b] + theta", coef(&mut r), coef(&mut r), coef(&mut r));
    let b = format!("max({} - {}*y[b], {}*y[b]) + {}*theta", coef(&mut r), coef(&mut r), coef(&mut r), coef(&mut r));
    let doc = format!(
        "states = [{}]\nprior = [{}]\n\n[[populations]]\nname = \"p\"\nactions = [\"a\", \"b\"]\n\n\
         [state_constants]\ntheta = [{}]\n\n[costs.p]\na = \"{a}\"\nb = \"{b}\"\n",
        names.join(", "),
        prior.join(", "),
        theta.join(", ")
    );
    parse_game(&doc).expect("generated game is valid")
}

/// `-Σ y_a c_a` as an expression, for maximizing the social cost.
pub fn negated_social(game: &GameSpec) -> CostExpr {
    let mut terms = Vec::new();
    for (k, costs) in game.costs().iter().enumerate() {
        for (a, c) in costs.iter().enumerate() {
            terms.push(CostExpr::Mul(Box::new(CostExpr::Flow { pop: k, action: a }), Box::new(c.clone())));
        }
    }
    let sum = terms.into_iter().reduce(|x, y| CostExpr::Add(Box::new(x), Box::new(y))).unwrap();
    CostExpr::Neg(Box::new(sum))
}

/// Random weights summing to one.
pub fn random_weights(r: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| r.gen_range(1..=6) as f64).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// A random finite-support outcome with flows on the grid of `resolution`.
pub fn random_grid_outcome(game: &GameSpec, r: &mut ChaCha8Rng, resolution: usize, max_support: usize) -> Outcome {
    let per_pop: Vec<Vec<Vec<usize>>> = game.shape().iter().map(|&n| enumerate_compositions(resolution, n)).collect();
    let per_state = (0..game.num_states())
        .map(|_| {
            let m = r.gen_range(1..=max_support);
            let w = random_weights(r, m);
            w.into_iter()
                .map(|wi| {
                    let pops = per_pop
                        .iter()
                        .map(|c| c.choose(r).unwrap().iter().map(|&v| v as f64 / resolution as f64).collect())
                        .collect();
                    (FlowProfile::new(pops), wi)
                })
                .collect()
        })
        .collect();
    Outcome::new(per_state)
}

/// A random exchangeable scheme with `n` players in the single population.
pub fn random_symmetric_bce(game: &GameSpec, r: &mut ChaCha8Rng, n: usize) -> SymmetricBCE {
    let counts = enumerate_compositions(n, game.num_actions(0));
    let support = (0..game.num_states())
        .map(|_| {
            let m = r.gen_range(1..=3);
            let w = random_weights(r, m);
            w.into_iter().map(|wi| (vec![counts.choose(r).unwrap().clone()], wi)).collect()
        })
        .collect();
    SymmetricBCE { n: vec![n], support, delta: 0.0, epsilon: 0.0 }
}
