//! Potentials and Wardrop equilibria of complete-information slices.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game_model::{load_profile, CongestionSpec, FlowProfile, GameSpec};

/// Result of an equilibrium solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WESolveResult {
    pub flow: FlowProfile,
    /// Present for congestion-backed games.
    pub potential_value: Option<f64>,
    /// `verify_we` at `flow`.
    pub max_violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn congestion_of(game: &GameSpec) -> Result<&CongestionSpec> {
    game.congestion()
        .ok_or_else(|| Error::Unsupported("the game has no congestion backing, so no potential".into()))
}

fn check_state(game: &GameSpec, state: usize) -> Result<()> {
    if state >= game.num_states() {
        return Err(Error::Spec(format!("unknown state index {state}")));
    }
    Ok(())
}

/// Beckmann potential: the sum over resources of the latency integral up to
/// the load.
pub fn potential_value(game: &GameSpec, flow: &FlowProfile, state: usize) -> Result<f64> {
    let spec = congestion_of(game)?;
    check_state(game, state)?;
    game.check_flow(flow)?;
    Ok(spec.potential_at_loads(&load_profile(spec, flow), state))
}

/// Gradient of the potential, indexed like the flow. Each component is the
/// action cost.
pub fn potential_gradient(game: &GameSpec, flow: &FlowProfile, state: usize) -> Result<Vec<Vec<f64>>> {
    let spec = congestion_of(game)?;
    check_state(game, state)?;
    game.check_flow(flow)?;
    Ok(congestion_gradient(spec, flow, state))
}

fn congestion_gradient(spec: &CongestionSpec, flow: &FlowProfile, state: usize) -> Vec<Vec<f64>> {
    let loads = load_profile(spec, flow);
    (0..spec.actions.len())
        .map(|k| {
            (0..spec.actions[k].len())
                .map(|a| spec.action_cost_at_loads(k, a, &loads, state))
                .collect()
        })
        .collect()
}

/// Largest `y_a (c_a - c_b)` over populations and ordered action pairs.
/// The flow is a Wardrop equilibrium iff this is at most zero.
pub fn verify_we(game: &GameSpec, flow: &FlowProfile, state: usize) -> f64 {
    weighted_gap(flow, &game.cost_profile(flow, state))
}

/// `max_k max_{a != b} x_a (g_a - g_b)`; zero when no population has two
/// actions.
pub fn weighted_gap(x: &FlowProfile, g: &[Vec<f64>]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (k, gk) in g.iter().enumerate() {
        if gk.len() < 2 {
            continue;
        }
        let min = gk.iter().copied().fold(f64::INFINITY, f64::min);
        for (a, &ga) in gk.iter().enumerate() {
            // pair (a, b) with b the cheapest other action
            let other_min = if ga == min {
                gk.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &v)| v).fold(f64::INFINITY, f64::min)
            } else {
                min
            };
            worst = worst.max(x.get(k, a) * (ga - other_min));
        }
    }
    if worst == f64::NEG_INFINITY {
        0.0
    } else {
        worst
    }
}

/// `max_k max_{a: x_a > 0} (g_a - min_b g_b)`: the unweighted gap over used
/// actions.
pub fn support_gap(x: &FlowProfile, g: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (k, gk) in g.iter().enumerate() {
        let min = gk.iter().copied().fold(f64::INFINITY, f64::min);
        for (a, &ga) in gk.iter().enumerate() {
            if x.get(k, a) > 0.0 {
                worst = worst.max(ga - min);
            }
        }
    }
    worst
}

/// A convex function over a product of scaled simplices whose gradient is
/// available.
pub trait Potential {
    fn value(&self, x: &FlowProfile) -> f64;
    fn gradient(&self, x: &FlowProfile) -> Vec<Vec<f64>>;
}

/// Which stationarity measure ends the minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// [`weighted_gap`] at most the tolerance.
    Weighted,
    /// [`support_gap`] at most the tolerance.
    Support,
}

/// Outcome of [`minimize_potential`].
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: FlowProfile,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Pairwise Frank-Wolfe over a product of simplices.
///
/// Every sweep visits each block and moves mass from its most expensive
/// used coordinate to its cheapest coordinate, with an exact line search
/// on the directional derivative (bisection; the potential is convex so
/// the derivative is nondecreasing along the segment). A full step empties
/// the away coordinate exactly. Block masses are those of `start`.
pub fn minimize_potential<P: Potential + ?Sized>(
    p: &P,
    start: FlowProfile,
    rule: StopRule,
    tol: f64,
    max_iter: usize,
) -> MinimizeResult {
    let mut x = start;
    let gap_of = |x: &FlowProfile, g: &[Vec<f64>]| match rule {
        StopRule::Weighted => weighted_gap(x, g),
        StopRule::Support => support_gap(x, g),
    };
    let mut g = p.gradient(&x);
    for it in 0..max_iter {
        let gap = gap_of(&x, &g);
        if gap <= tol {
            return MinimizeResult { x, gap, iterations: it, converged: true };
        }
        for k in 0..x.num_populations() {
            let n = x.pop(k).len();
            if n < 2 {
                continue;
            }
            let gk = &g[k];
            let to = (0..n).min_by(|&i, &j| gk[i].total_cmp(&gk[j])).unwrap();
            let from = (0..n)
                .filter(|&i| x.get(k, i) > 0.0 && i != to)
                .max_by(|&i, &j| gk[i].total_cmp(&gk[j]));
            let Some(from) = from else { continue };
            if gk[from] <= gk[to] {
                continue;
            }
            let slope = |x: &FlowProfile, t: f64| {
                let mut y = x.clone();
                shift(&mut y, k, from, to, t);
                let gy = p.gradient(&y);
                gy[k][to] - gy[k][from]
            };
            let cap = x.get(k, from);
            let t = if slope(&x, cap) <= 0.0 {
                cap
            } else {
                let (mut lo, mut hi) = (0.0, cap);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if slope(&x, mid) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            if t > 0.0 {
                shift(&mut x, k, from, to, t);
                g = p.gradient(&x);
            }
        }
    }
    let gap = gap_of(&x, &g);
    MinimizeResult { converged: gap <= tol, x, gap, iterations: max_iter }
}

fn shift(x: &mut FlowProfile, k: usize, from: usize, to: usize, t: f64) {
    let row = x.pop_mut(k);
    if t >= row[from] {
        row[to] += row[from];
        row[from] = 0.0;
    } else {
        row[from] -= t;
        row[to] += t;
    }
}

/// The Beckmann potential of one state of a congestion game.
pub struct CongestionPotential<'a> {
    pub spec: &'a CongestionSpec,
    pub state: usize,
}

impl Potential for CongestionPotential<'_> {
    fn value(&self, x: &FlowProfile) -> f64 {
        self.spec.potential_at_loads(&load_profile(self.spec, x), self.state)
    }

    fn gradient(&self, x: &FlowProfile) -> Vec<Vec<f64>> {
        congestion_gradient(self.spec, x, self.state)
    }
}

/// Minimizes the potential from the uniform flow.
pub fn solve_we_potential(game: &GameSpec, state: usize, tol: f64, max_iter: usize) -> Result<WESolveResult> {
    solve_we_potential_from(game, state, game.uniform_flow(), tol, max_iter)
}

/// Minimizes the potential from `start`.
pub fn solve_we_potential_from(
    game: &GameSpec,
    state: usize,
    start: FlowProfile,
    tol: f64,
    max_iter: usize,
) -> Result<WESolveResult> {
    let spec = congestion_of(game)?;
    check_state(game, state)?;
    game.check_flow(&start)?;
    if !(tol > 0.0) {
        return Err(Error::Spec("tolerance must be positive".into()));
    }
    let pot = CongestionPotential { spec, state };
    let r = minimize_potential(&pot, start, StopRule::Weighted, tol, max_iter);
    let max_violation = verify_we(game, &r.x, state);
    Ok(WESolveResult {
        potential_value: Some(pot.value(&r.x)),
        converged: max_violation <= tol,
        flow: r.x,
        max_violation,
        iterations: r.iterations,
    })
}

/// Damped best response: each used action above the current minimum cost
/// sends a share `eta * gap` of its mass to the cheapest action. The step
/// halves when the violation grows and grows slowly otherwise.
pub fn solve_we_br(
    game: &GameSpec,
    state: usize,
    start: FlowProfile,
    tol: f64,
    max_iter: usize,
) -> Result<WESolveResult> {
    check_state(game, state)?;
    game.check_flow(&start)?;
    let potential = |f: &FlowProfile| game.congestion().map(|s| s.potential_at_loads(&load_profile(s, f), state));
    let mut x = start;
    let mut v = verify_we(game, &x, state);
    let mut best = (x.clone(), v);
    let mut eta = 0.5;
    let mut iterations = 0;
    while v > tol && iterations < max_iter {
        iterations += 1;
        let c = game.cost_profile(&x, state);
        let mut next = x.clone();
        for (k, ck) in c.iter().enumerate() {
            let to = (0..ck.len()).min_by(|&i, &j| ck[i].total_cmp(&ck[j])).unwrap();
            let row = next.pop_mut(k);
            let mut moved = 0.0;
            for a in 0..ck.len() {
                let gap = ck[a] - ck[to];
                if a != to && row[a] > 0.0 && gap > 0.0 {
                    let m = row[a] * (eta * gap).min(1.0);
                    row[a] -= m;
                    moved += m;
                }
            }
            row[to] += moved;
        }
        let nv = verify_we(game, &next, state);
        if nv > v {
            eta *= 0.5;
            if eta < 1e-18 {
                break;
            }
        } else {
            eta = (eta * 1.2).min(1e6);
        }
        x = next;
        v = nv;
        if v < best.1 {
            best = (x.clone(), v);
        }
    }
    let (flow, max_violation) = best;
    Ok(WESolveResult {
        potential_value: potential(&flow),
        converged: max_violation <= tol,
        flow,
        max_violation,
        iterations,
    })
}

const GRID_CAP: u128 = 10_000_000;

fn binom(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of compositions of `r` into `parts` nonnegative parts.
pub fn compositions(r: usize, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(r == 0);
    }
    binom((r + parts - 1) as u128, (parts - 1) as u128)
}

/// Number of grid flows with denominator `resolution` for `shape`.
pub fn grid_size(shape: &[usize], resolution: usize) -> u128 {
    shape.iter().fold(1u128, |acc, &n| acc.saturating_mul(compositions(resolution, n)))
}

/// All compositions of `r` into `parts` parts in lexicographic order.
pub fn enumerate_compositions(r: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(r: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(r);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in 0..=r {
            prefix.push(v);
            rec(r - v, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(r, parts, &mut Vec::new(), &mut out);
    }
    out
}

/// Lexicographic rank of a composition among [`enumerate_compositions`].
fn composition_rank(c: &[usize]) -> usize {
    let n = c.len();
    let mut rem: usize = c.iter().sum();
    let mut rank = 0u128;
    for i in 0..n.saturating_sub(1) {
        for v in 0..c[i] {
            rank += compositions(rem - v, n - i - 1);
        }
        rem -= c[i];
    }
    rank as usize
}

/// Every flow profile whose entries are multiples of `1/resolution`, in
/// lexicographic order (first population varying slowest).
pub fn grid_flows(shape: &[usize], resolution: usize) -> Result<Vec<FlowProfile>> {
    let size = grid_size(shape, resolution);
    if size > GRID_CAP {
        return Err(Error::GridTooLarge { size, cap: GRID_CAP });
    }
    let per_pop: Vec<Vec<Vec<usize>>> = shape.iter().map(|&n| enumerate_compositions(resolution, n)).collect();
    let r = resolution as f64;
    let mut out = Vec::with_capacity(size as usize);
    let mut idx = vec![0usize; shape.len()];
    loop {
        out.push(FlowProfile::new(
            idx.iter()
                .zip(&per_pop)
                .map(|(&i, comps)| comps[i].iter().map(|&c| c as f64 / r).collect())
                .collect(),
        ));
        let mut k = shape.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_pop[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Finds the Wardrop equilibria of one state by scanning a grid.
///
/// Grid points that are local minima of the violation among grid
/// neighbours (one unit of mass moved between two actions) are polished by
/// best response; a point is kept when the better of the raw and polished
/// flows has violation at most `tol`, and kept flows closer than `10 tol`
/// are merged.
pub fn enumerate_we_grid(game: &GameSpec, state: usize, resolution: usize, tol: f64) -> Result<Vec<FlowProfile>> {
    check_state(game, state)?;
    if resolution == 0 {
        return Err(Error::Spec("resolution must be at least 1".into()));
    }
    let shape = game.shape();
    let size = grid_size(&shape, resolution);
    if size > GRID_CAP {
        return Err(Error::GridTooLarge { size, cap: GRID_CAP });
    }
    let per_pop: Vec<Vec<Vec<usize>>> = shape.iter().map(|&n| enumerate_compositions(resolution, n)).collect();
    let counts: Vec<usize> = per_pop.iter().map(Vec::len).collect();
    let flows = grid_flows(&shape, resolution)?;
    let viol: Vec<f64> = flows.iter().map(|f| verify_we(game, f, state)).collect();

    let mut found: Vec<FlowProfile> = Vec::new();
    let mut idx = vec![0usize; shape.len()];
    for (i, f) in flows.iter().enumerate() {
        if i > 0 {
            // advance the mixed-radix index in step with `grid_flows`
            let mut k = shape.len();
            loop {
                k -= 1;
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        if !is_local_min(i, &idx, &per_pop, &counts, &viol) {
            continue;
        }
        let raw = viol[i];
        let polished = solve_we_br(game, state, f.clone(), tol * 1e-3, 2000)?;
        let (cand, v) = if polished.max_violation < raw { (polished.flow, polished.max_violation) } else { (f.clone(), raw) };
        if v <= tol && !found.iter().any(|g| g.linf_distance(&cand) <= 10.0 * tol) {
            found.push(cand);
        }
    }
    Ok(found)
}

fn is_local_min(i: usize, idx: &[usize], per_pop: &[Vec<Vec<usize>>], counts: &[usize], viol: &[f64]) -> bool {
    let v = viol[i];
    let mut stride = 1usize;
    let strides: Vec<usize> = {
        let mut s = vec![0; counts.len()];
        for k in (0..counts.len()).rev() {
            s[k] = stride;
            stride *= counts[k];
        }
        s
    };
    for k in 0..idx.len() {
        let comp = &per_pop[k][idx[k]];
        for from in 0..comp.len() {
            if comp[from] == 0 {
                continue;
            }
            for to in 0..comp.len() {
                if to == from {
                    continue;
                }
                let mut c = comp.clone();
                c[from] -= 1;
                c[to] += 1;
                let r = composition_rank(&c);
                let j = i - idx[k] * strides[k] + r * strides[k];
                if viol[j] < v {
                    return false;
                }
            }
        }
    }
    true
}

/// A random flow with each population's mass `masses[k]` spread over its
/// actions with uniform-simplex weights.
pub fn random_flow<R: Rng + ?Sized>(shape: &[usize], masses: &[f64], rng: &mut R) -> FlowProfile {
    FlowProfile::new(
        shape
            .iter()
            .zip(masses)
            .map(|(&n, &m)| {
                let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| m * v / s).collect()
            })
            .collect(),
    )
}
