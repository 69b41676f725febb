//! Game and outcome documents.
//!
//! Both are TOML with a strict schema (unknown fields are rejected). Numbers
//! are strings holding rationals (`"1/2"`), integers or decimals. See
//! `docs/file-format.md` for the full description.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, parse_rational, CostExpr, Rational};
use crate::game_model::{
    congestion_to_game, validate_game, CongestionSpec, FlowProfile, GameSpec, Outcome, Polynomial,
    Population, StateConstant,
};
use crate::numfmt::{parse_number, render};

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GameDoc {
    populations: Vec<PopulationDoc>,
    states: Vec<String>,
    prior: Vec<Spanned<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    state_constants: BTreeMap<String, Vec<Spanned<String>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    costs: BTreeMap<String, BTreeMap<String, Spanned<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    congestion: Option<CongestionDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PopulationDoc {
    name: String,
    actions: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct CongestionDoc {
    resources: Vec<String>,
    /// resource -> one coefficient list (all states) or one per state
    latency: BTreeMap<String, Vec<Vec<Spanned<String>>>>,
    /// population -> action -> resources
    actions: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

/// Maps a byte offset in `src` to a 1-based (line, column).
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map(|i| offset - i).unwrap_or(offset + 1);
    (line, column)
}

fn toml_error(src: &str, e: toml::de::Error) -> Error {
    let (line, column) = e.span().map(|s| line_col(src, s.start)).unwrap_or((1, 1));
    Error::Parse { line, column, message: e.message().to_string() }
}

fn spanned_error(src: &str, s: &Spanned<String>, msg: String) -> Error {
    // spans cover the quoted string; point inside the quotes
    let (line, column) = line_col(src, s.span().start + 1);
    Error::Parse { line, column, message: msg }
}

fn rational_at(src: &str, s: &Spanned<String>) -> Result<Rational> {
    parse_rational(s.get_ref())
        .ok_or_else(|| spanned_error(src, s, format!("`{}` is not a rational number", s.get_ref())))
}

/// Parses and validates a game document.
pub fn parse_game(src: &str) -> Result<GameSpec> {
    let doc: GameDoc = toml::from_str(src).map_err(|e| toml_error(src, e))?;
    let populations: Vec<Population> = doc
        .populations
        .iter()
        .map(|p| Population { name: p.name.clone(), actions: p.actions.clone() })
        .collect();
    let prior = doc.prior.iter().map(|p| rational_at(src, p)).collect::<Result<Vec<_>>>()?;

    let game = match &doc.congestion {
        Some(c) => {
            if !doc.costs.is_empty() {
                return Err(Error::Spec("a congestion game derives its costs; remove `costs`".into()));
            }
            if !doc.state_constants.is_empty() {
                return Err(Error::Spec("a congestion game takes no `state_constants`".into()));
            }
            let spec = congestion_from_doc(src, c, &populations, &doc.states, &prior)?;
            congestion_to_game(&spec)?
        }
        None => {
            let mut state_constants = Vec::new();
            for (name, values) in &doc.state_constants {
                let values = values.iter().map(|v| rational_at(src, v)).collect::<Result<Vec<_>>>()?;
                state_constants.push(StateConstant { name: name.clone(), values });
            }
            for pop_name in doc.costs.keys() {
                if !populations.iter().any(|p| p.name == *pop_name) {
                    return Err(Error::Spec(format!("costs given for unknown population `{pop_name}`")));
                }
            }
            // resolve expressions against a skeleton game holding the names
            let skeleton = GameSpec::new(
                populations.clone(),
                doc.states.clone(),
                prior.clone(),
                state_constants.clone(),
                Vec::new(),
            );
            let mut costs = Vec::with_capacity(populations.len());
            for (k, p) in populations.iter().enumerate() {
                let table = doc.costs.get(&p.name).ok_or_else(|| {
                    Error::Spec(format!("missing costs for population `{}`", p.name))
                })?;
                for action in table.keys() {
                    if !p.actions.contains(action) {
                        return Err(Error::Spec(format!(
                            "cost given for unknown action `{action}` of population `{}`",
                            p.name
                        )));
                    }
                }
                let mut row = Vec::with_capacity(p.actions.len());
                for action in &p.actions {
                    let text = table.get(action).ok_or_else(|| {
                        Error::Spec(format!("missing cost for `{}.{action}`", p.name))
                    })?;
                    let names = skeleton.expr_names(Some(k));
                    let expr = parse_expr(text.get_ref(), &names).map_err(|e| match e {
                        Error::Parse { column, message, .. } => {
                            let (line, col0) = line_col(src, text.span().start + 1);
                            Error::Parse { line, column: col0 + column - 1, message }
                        }
                        other => other,
                    })?;
                    row.push(expr);
                }
                costs.push(row);
            }
            GameSpec::new(populations, doc.states.clone(), prior, state_constants, costs)
        }
    };
    let issues = validate_game(&game);
    if issues.is_empty() {
        Ok(game)
    } else {
        Err(Error::Spec(issues.join("; ")))
    }
}

fn congestion_from_doc(
    src: &str,
    c: &CongestionDoc,
    populations: &[Population],
    states: &[String],
    prior: &[Rational],
) -> Result<CongestionSpec> {
    let mut latency = Vec::with_capacity(c.resources.len());
    for r in &c.resources {
        let lists = c
            .latency
            .get(r)
            .ok_or_else(|| Error::Spec(format!("missing latency for resource `{r}`")))?;
        let polys = lists
            .iter()
            .map(|coeffs| {
                coeffs
                    .iter()
                    .map(|v| rational_at(src, v))
                    .collect::<Result<Vec<_>>>()
                    .map(Polynomial::new)
            })
            .collect::<Result<Vec<_>>>()?;
        let per_state = match polys.len() {
            1 => vec![polys[0].clone(); states.len()],
            n if n == states.len() => polys,
            n => {
                return Err(Error::Spec(format!(
                    "resource `{r}` has {n} latency lists; expected 1 or {}",
                    states.len()
                )))
            }
        };
        latency.push(per_state);
    }
    for r in c.latency.keys() {
        if !c.resources.contains(r) {
            return Err(Error::Spec(format!("latency given for unknown resource `{r}`")));
        }
    }
    let mut actions = Vec::with_capacity(populations.len());
    for p in populations {
        let table = c
            .actions
            .get(&p.name)
            .ok_or_else(|| Error::Spec(format!("missing action incidence for population `{}`", p.name)))?;
        let mut row = Vec::with_capacity(p.actions.len());
        for a in &p.actions {
            let res = table
                .get(a)
                .ok_or_else(|| Error::Spec(format!("missing resources for `{}.{a}`", p.name)))?;
            let idx = res
                .iter()
                .map(|e| {
                    c.resources
                        .iter()
                        .position(|r| r == e)
                        .ok_or_else(|| Error::Spec(format!("unknown resource `{e}` in `{}.{a}`", p.name)))
                })
                .collect::<Result<Vec<_>>>()?;
            row.push(idx);
        }
        actions.push(row);
    }
    Ok(CongestionSpec {
        populations: populations.to_vec(),
        states: states.to_vec(),
        prior: prior.to_vec(),
        resources: c.resources.clone(),
        latency,
        actions,
    })
}

fn rational_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn plain(s: String) -> Spanned<String> {
    Spanned::new(0..0, s)
}

/// Writes a game document that [`parse_game`] reads back to an equal game.
pub fn write_game(game: &GameSpec) -> String {
    let populations = game
        .populations()
        .iter()
        .map(|p| PopulationDoc { name: p.name.clone(), actions: p.actions.clone() })
        .collect();
    let prior = game.prior().iter().map(|r| plain(rational_string(r))).collect();
    let mut doc = GameDoc {
        populations,
        states: game.states().to_vec(),
        prior,
        state_constants: BTreeMap::new(),
        costs: BTreeMap::new(),
        congestion: None,
    };
    match game.congestion() {
        Some(spec) => {
            let latency = spec
                .resources
                .iter()
                .zip(&spec.latency)
                .map(|(r, per_state)| {
                    let all_same = per_state.iter().all(|p| p == &per_state[0]);
                    let lists: Vec<Vec<Spanned<String>>> = per_state
                        .iter()
                        .take(if all_same { 1 } else { per_state.len() })
                        .map(|p| p.coeffs().iter().map(|c| plain(rational_string(c))).collect())
                        .collect();
                    (r.clone(), lists)
                })
                .collect();
            let actions = spec
                .populations
                .iter()
                .zip(&spec.actions)
                .map(|(p, acts)| {
                    let table = p
                        .actions
                        .iter()
                        .zip(acts)
                        .map(|(a, res)| (a.clone(), res.iter().map(|&e| spec.resources[e].clone()).collect()))
                        .collect();
                    (p.name.clone(), table)
                })
                .collect();
            doc.congestion = Some(CongestionDoc { resources: spec.resources.clone(), latency, actions });
        }
        None => {
            doc.state_constants = game
                .state_constants()
                .iter()
                .map(|c| (c.name.clone(), c.values.iter().map(|v| plain(rational_string(v))).collect()))
                .collect();
            for (k, p) in game.populations().iter().enumerate() {
                let names = game.expr_names(Some(k));
                let table = p
                    .actions
                    .iter()
                    .zip(&game.costs()[k])
                    .map(|(a, e)| (a.clone(), plain(e.display(&names).to_string())))
                    .collect();
                doc.costs.insert(p.name.clone(), table);
            }
        }
    }
    toml::to_string(&doc).expect("game documents always serialize")
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct OutcomeDoc {
    support: Vec<SupportDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SupportDoc {
    state: String,
    weight: String,
    /// one inner list per population
    flow: Vec<Vec<String>>,
}

/// Parses an outcome document against `game`.
pub fn parse_outcome(src: &str, game: &GameSpec) -> Result<Outcome> {
    let doc: OutcomeDoc = toml::from_str(src).map_err(|e| toml_error(src, e))?;
    let mut per_state = vec![Vec::new(); game.num_states()];
    for entry in &doc.support {
        let s = game
            .state_index(&entry.state)
            .ok_or_else(|| Error::Spec(format!("unknown state `{}`", entry.state)))?;
        let w = parse_number(&entry.weight)
            .ok_or_else(|| Error::Spec(format!("`{}` is not a number", entry.weight)))?;
        let pops = entry
            .flow
            .iter()
            .map(|y| {
                y.iter()
                    .map(|v| parse_number(v).ok_or_else(|| Error::Spec(format!("`{v}` is not a number"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        per_state[s].push((FlowProfile::new(pops), w));
    }
    let outcome = Outcome::new(per_state);
    outcome.check(game)?;
    Ok(outcome)
}

/// Writes an outcome document; weights and flows use exact rationals where
/// possible.
pub fn write_outcome(outcome: &Outcome, game: &GameSpec) -> String {
    let support = outcome
        .per_state()
        .iter()
        .enumerate()
        .flat_map(|(s, dist)| {
            dist.iter().map(move |(y, w)| SupportDoc {
                state: game.states()[s].clone(),
                weight: render(*w),
                flow: y.pops().iter().map(|p| p.iter().map(|v| render(*v)).collect()).collect(),
            })
        })
        .collect();
    toml::to_string(&OutcomeDoc { support }).expect("outcome documents always serialize")
}

/// A designer objective given as an expression over qualified flow
/// variables (`y[pop][action]`) and the game's state constants.
pub fn parse_designer_cost(src: &str, game: &GameSpec) -> Result<CostExpr> {
    let owner = if game.num_populations() == 1 { Some(0) } else { None };
    parse_expr(src, &game.expr_names(owner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    const EL_FAROL: &str = include_str!("../data/elfarol.toml");

    #[test]
    fn parses_bundled_el_farol() {
        let g = parse_game(EL_FAROL).unwrap();
        assert_eq!(g.shape(), vec![2]);
        assert_eq!(g.num_states(), 1);
    }

    #[test]
    fn write_parse_round_trip() {
        for g in [bundled::el_farol(), bundled::pigou_info(), bundled::pigou_network()] {
            let text = write_game(&g);
            let back = parse_game(&text).unwrap();
            assert_eq!(back.shape(), g.shape());
            assert_eq!(back.prior(), g.prior());
            assert_eq!(back.congestion().is_some(), g.congestion().is_some());
            let f = g.uniform_flow();
            for s in 0..g.num_states() {
                assert_eq!(back.cost_profile(&f, s), g.cost_profile(&f, s));
            }
        }
    }

    #[test]
    fn unknown_fields_rejected_with_position() {
        let src = format!("{EL_FAROL}\nextra = 1\n");
        match parse_game(&src) {
            Err(Error::Parse { line, .. }) => assert!(line > 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn expression_errors_point_into_document() {
        let src = EL_FAROL.replace("max(2 - 4*y[b], 4*y[b] - 2)", "max(2 - 4*y[b], 4*y[b] -)");
        match parse_game(&src) {
            Err(Error::Parse { line, column, .. }) => {
                let text_line = src.lines().nth(line - 1).unwrap();
                assert!(text_line.contains("max("), "{text_line}");
                assert_eq!(&text_line[column - 1..column], ")");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbound_variables_and_bad_priors() {
        let src = EL_FAROL.replace("4*y[b] - 2)", "4*y[c] - 2)");
        let err = parse_game(&src).unwrap_err();
        assert!(err.to_string().contains("unbound flow variable"), "{err}");
        let src = EL_FAROL.replace("prior = [\"1\"]", "prior = [\"1/2\"]");
        let err = parse_game(&src).unwrap_err();
        assert!(err.to_string().contains("prior does not sum to 1"), "{err}");
    }

    #[test]
    fn outcome_round_trip() {
        let g = bundled::pigou_info();
        let o = bundled::pigou_paper_bcwe(&g);
        let text = write_outcome(&o, &g);
        assert!(text.contains("\"1/2\""));
        let back = parse_outcome(&text, &g).unwrap();
        assert_eq!(back, o);
    }
}
