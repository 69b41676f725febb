//! Command-line front end: `we`, `check`, `design`, `implement` and
//! `converge`.
//!
//! Reports are TOML documents written to stdout (or `--output`); tables are
//! CSV with a header row and LF line endings. Exit status is 0 on success,
//! 1 on invalid input or a failed check, 2 when a solver does not converge.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::atomic::{convergence_run, ConvergenceRow};
use crate::bundled::{bundled_game, bundled_outcome};
use crate::designer_lp::{build_grid, solve_program_p, support_bound_check, DesignerCost, DesignerProblem};
use crate::equilibrium_checks::{check_bcwe, check_cbcwe, check_ccwe, check_cwe, check_sbcwe, CheckReport, Concept};
use crate::error::{Error, Result};
use crate::format::{parse_designer_cost, parse_game, parse_outcome};
use crate::game_model::{social_cost, FlowProfile, GameSpec, Outcome};
use crate::implementation::{direct_structure_from_bcwe, DirectImplementation, KernelKind};
use crate::numfmt::{parse_number, render};
use crate::wardrop::{enumerate_we_grid, verify_we};

/// Parsed command line.
#[derive(Debug, Clone, Parser)]
#[command(name = "infodesign", version, about = "Information design for anonymous nonatomic games")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// List the Wardrop equilibria of every state found on a flow grid.
    We(WeArgs),
    /// Check an outcome against an equilibrium concept.
    Check(CheckArgs),
    /// Solve the designer's program on a flow grid.
    Design(DesignArgs),
    /// Build a direct information structure implementing an outcome.
    Implement(ImplementArgs),
    /// Tabulate finite-player approximations of an outcome.
    Converge(ConvergeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GameArg {
    /// Bundled game name (elfarol, pigou_info, pigou_network, random:SEED)
    /// or path to a game file.
    #[arg(long)]
    pub game: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct WeArgs {
    #[command(flatten)]
    pub common: GameArg,
    /// Grid points per unit of mass.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Largest equilibrium gap accepted after polishing.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: GameArg,
    /// Bundled outcome name (paper_cwe, paper_bcwe) or path to an outcome
    /// file.
    #[arg(long)]
    pub outcome: String,
    /// One of cwe, ccwe, bcwe, sbcwe, cbcwe.
    #[arg(long, value_parser = parse_concept)]
    pub concept: Concept,
    /// Largest violation reported as satisfied.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub common: GameArg,
    /// `social`, or an expression over flows and state constants.
    #[arg(long, default_value = "social")]
    pub objective: String,
    /// Grid points per unit of mass.
    #[arg(long, default_value_t = 8)]
    pub resolution: usize,
    /// Extra candidate flow, e.g. `1/2,1/2` (populations separated by `;`).
    #[arg(long = "seed-flow")]
    pub seed_flows: Vec<String>,
    /// Also write the support as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Symmetrized,
    Block,
}

#[derive(Debug, Clone, Args)]
pub struct ImplementArgs {
    #[command(flatten)]
    pub common: GameArg,
    /// Bundled outcome name or path to an outcome file.
    #[arg(long)]
    pub outcome: String,
    /// Number of equal-size populations; support flows are rounded to
    /// multiples of its inverse.
    #[arg(long)]
    pub denominator: usize,
    #[arg(long, value_enum, default_value = "symmetrized")]
    pub kernel: KernelArg,
    /// Also write the kernel table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: GameArg,
    /// Bundled outcome name or path to an outcome file.
    #[arg(long)]
    pub outcome: String,
    /// Strictly increasing player counts, e.g. `4,8,16`.
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
}

fn parse_concept(s: &str) -> std::result::Result<Concept, String> {
    Concept::parse(s).ok_or_else(|| format!("unknown concept `{s}`"))
}

/// Why a run stopped, with its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad input, or a check that found a violation.
    Invalid(String),
    /// A solver stopped without a certified answer.
    NotConverged(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::NotConverged(_) => 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible | Error::Unbounded | Error::Numerical(_) => Failure::NotConverged(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn load_game(name: &str) -> Result<GameSpec> {
    match bundled_game(name) {
        Some(g) => g,
        None => parse_game(&fs::read_to_string(name).map_err(|e| Error::Io(format!("{name}: {e}")))?),
    }
}

fn load_outcome(game_name: &str, name: &str, game: &GameSpec) -> Result<Outcome> {
    if let Some(o) = bundled_outcome(game_name, name, game) {
        return Ok(o);
    }
    if !Path::new(name).exists() {
        return Err(Error::Spec(format!("`{name}` is neither a bundled outcome of `{game_name}` nor a file")));
    }
    parse_outcome(&fs::read_to_string(name)?, game)
}

fn parse_flow(text: &str, game: &GameSpec) -> Result<FlowProfile> {
    let pops = text
        .split(';')
        .map(|p| {
            p.split(',')
                .map(|v| parse_number(v).ok_or_else(|| Error::Spec(format!("`{v}` is not a number"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let flow = FlowProfile::new(pops);
    game.check_flow(&flow)?;
    Ok(flow)
}

fn flow_strings(y: &FlowProfile) -> Vec<Vec<String>> {
    y.pops().iter().map(|p| p.iter().map(|v| render(*v)).collect()).collect()
}

fn to_toml<T: Serialize>(doc: &T) -> String {
    toml::to_string(doc).expect("reports always serialize")
}

fn emit(common: &GameArg, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &common.output {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct WeReport {
    game: String,
    resolution: usize,
    state: Vec<WeState>,
}

#[derive(Serialize)]
struct WeState {
    name: String,
    equilibrium: Vec<WeEntry>,
}

#[derive(Serialize)]
struct WeEntry {
    flow: Vec<Vec<String>>,
    social_cost: String,
    violation: String,
}

fn run_we(args: &WeArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    if !(args.tol > 0.0) {
        return Err(Failure::Invalid("tolerance must be positive".into()));
    }
    let game = load_game(&args.common.game)?;
    let mut states = Vec::new();
    let mut empty = Vec::new();
    for s in 0..game.num_states() {
        let found = enumerate_we_grid(&game, s, args.resolution, args.tol)?;
        if found.is_empty() {
            empty.push(game.states()[s].clone());
        }
        let equilibrium = found
            .iter()
            .map(|y| {
                Ok(WeEntry {
                    flow: flow_strings(y),
                    social_cost: render(social_cost(&game, y, s)?),
                    violation: render(verify_we(&game, y, s)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        states.push(WeState { name: game.states()[s].clone(), equilibrium });
    }
    let report = WeReport { game: args.common.game.clone(), resolution: args.resolution, state: states };
    emit(&args.common, &to_toml(&report), stdout)?;
    if !empty.is_empty() {
        return Err(Failure::NotConverged(format!("no equilibrium found in state(s) {}", empty.join(", "))));
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckDoc {
    concept: String,
    violation: String,
    tolerance: String,
    satisfied: bool,
    lhs: String,
    rhs: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_population: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_recommended: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_deviation: Option<String>,
}

/// Runs `concept`'s check; the per-state concepts report their worst state.
pub fn check_outcome(game: &GameSpec, outcome: &Outcome, concept: Concept) -> Result<CheckReport> {
    outcome.check(game)?;
    Ok(match concept {
        Concept::Bcwe => check_bcwe(game, outcome),
        Concept::Cbcwe => check_cbcwe(game, outcome),
        Concept::Cwe | Concept::Ccwe => {
            let reports = (0..game.num_states()).map(|s| {
                if concept == Concept::Cwe {
                    check_cwe(game, outcome.state(s), s)
                } else {
                    check_ccwe(game, outcome.state(s), s)
                }
            });
            reports
                .reduce(|a, b| if b.worst_violation > a.worst_violation { b } else { a })
                .expect("games have at least one state")
        }
        Concept::Sbcwe => {
            let flows = outcome
                .per_state()
                .iter()
                .map(|d| match d.iter().filter(|(_, w)| *w > 0.0).collect::<Vec<_>>()[..] {
                    [(y, _)] => Ok(y.clone()),
                    _ => Err(Error::Spec("sbcwe needs one flow per state".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            check_sbcwe(game, &flows)
        }
        Concept::Bce => return Err(Error::Unsupported("bce is checked on finite-player schemes, see `converge`".into())),
    })
}

fn run_check(args: &CheckArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    if !(args.tol > 0.0) {
        return Err(Failure::Invalid("tolerance must be positive".into()));
    }
    let game = load_game(&args.common.game)?;
    let outcome = load_outcome(&args.common.game, &args.outcome, &game)?;
    let r = check_outcome(&game, &outcome, args.concept)?;
    let pop = |k: usize| &game.populations()[k];
    let doc = CheckDoc {
        concept: args.concept.tag().to_string(),
        violation: render(r.worst_violation),
        tolerance: render(args.tol),
        satisfied: r.passes(args.tol),
        lhs: render(r.lhs),
        rhs: render(r.rhs),
        witness_population: r.witness.map(|w| pop(w.pop).name.clone()),
        witness_recommended: r.witness.and_then(|w| w.recommended.map(|a| pop(w.pop).actions[a].clone())),
        witness_deviation: r.witness.map(|w| pop(w.pop).actions[w.deviation].clone()),
    };
    emit(&args.common, &to_toml(&doc), stdout)?;
    if r.passes(args.tol) {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{} violated by {}", args.concept, render(r.worst_violation))))
    }
}

#[derive(Serialize)]
struct DesignDoc {
    objective: String,
    dual_objective: String,
    resolution: usize,
    candidates: usize,
    support_bound: BoundDoc,
    support: Vec<SupportRow>,
    active_constraint: Vec<ActiveDoc>,
}

#[derive(Serialize)]
struct BoundDoc {
    support: usize,
    bound: usize,
    vertex_bound: usize,
    holds: bool,
}

#[derive(Serialize)]
struct SupportRow {
    state: String,
    weight: String,
    flow: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct ActiveDoc {
    population: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    recommended: Option<String>,
    deviation: String,
}

fn run_design(args: &DesignArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let game = load_game(&args.common.game)?;
    let cost = if args.objective == "social" {
        DesignerCost::Social
    } else {
        DesignerCost::Expr(parse_designer_cost(&args.objective, &game)?)
    };
    let seeds = args.seed_flows.iter().map(|t| parse_flow(t, &game)).collect::<Result<Vec<_>>>()?;
    let candidates = build_grid(&game, args.resolution, &seeds)?;
    let count = candidates.iter().map(Vec::len).sum();
    let problem = DesignerProblem::new(game, cost, candidates)?;
    let sol = solve_program_p(&problem)?;
    let game = &problem.game;
    let bound = support_bound_check(&sol, game);
    let outcome = sol.outcome.merged(1e-12);
    let doc = DesignDoc {
        objective: render(sol.objective),
        dual_objective: render(sol.dual_objective),
        resolution: args.resolution,
        candidates: count,
        support_bound: BoundDoc {
            support: bound.support,
            bound: bound.coarse_bound,
            vertex_bound: bound.vertex_bound,
            holds: bound.holds(),
        },
        support: support_rows(&outcome, game),
        active_constraint: sol
            .active_constraints
            .iter()
            .map(|&(k, a, b)| {
                let p = &game.populations()[k];
                ActiveDoc {
                    population: p.name.clone(),
                    recommended: a.map(|a| p.actions[a].clone()),
                    deviation: p.actions[b].clone(),
                }
            })
            .collect(),
    };
    emit(&args.common, &to_toml(&doc), stdout)?;
    if let Some(path) = &args.csv {
        fs::write(path, write_support_csv(&outcome, game)).map_err(Error::from)?;
    }
    Ok(())
}

fn support_rows(outcome: &Outcome, game: &GameSpec) -> Vec<SupportRow> {
    outcome
        .per_state()
        .iter()
        .enumerate()
        .flat_map(|(s, d)| {
            d.iter().map(move |(y, w)| SupportRow {
                state: game.states()[s].clone(),
                weight: render(*w),
                flow: flow_strings(y),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct ImplementDoc {
    denominator: usize,
    kernel_kind: String,
    epsilon: String,
    delta: String,
    population: Vec<PopulationDoc>,
    kernel: Vec<KernelRow>,
}

#[derive(Serialize)]
struct PopulationDoc {
    name: String,
    size: String,
    types: Vec<String>,
}

#[derive(Serialize)]
struct KernelRow {
    state: String,
    types: Vec<String>,
    weight: String,
}

fn kernel_rows(imp: &DirectImplementation, game: &GameSpec) -> Vec<KernelRow> {
    let s = &imp.structure;
    s.kernel
        .iter()
        .enumerate()
        .flat_map(|(state, dist)| {
            dist.iter().map(move |(tau, w)| KernelRow {
                state: game.states()[state].clone(),
                types: tau.iter().enumerate().map(|(k, &t)| s.types[k][t].clone()).collect(),
                weight: render(*w),
            })
        })
        .collect()
}

fn run_implement(args: &ImplementArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let game = load_game(&args.common.game)?;
    let outcome = load_outcome(&args.common.game, &args.outcome, &game)?;
    let kind = match args.kernel {
        KernelArg::Symmetrized => KernelKind::Symmetrized,
        KernelArg::Block => KernelKind::Block,
    };
    let imp = direct_structure_from_bcwe(&game, &outcome, args.denominator, kind)?;
    let rows = kernel_rows(&imp, &game);
    let doc = ImplementDoc {
        denominator: args.denominator,
        kernel_kind: format!("{:?}", args.kernel).to_lowercase(),
        epsilon: render(imp.epsilon.max(0.0)),
        delta: render(imp.delta),
        population: imp
            .structure
            .sizes
            .iter()
            .enumerate()
            .map(|(k, size)| PopulationDoc {
                name: (k + 1).to_string(),
                size: size.to_string(),
                types: imp.structure.types[k].clone(),
            })
            .collect(),
        kernel: rows,
    };
    emit(&args.common, &to_toml(&doc), stdout)?;
    if let Some(path) = &args.csv {
        fs::write(path, write_kernel_csv(&imp, &game)).map_err(Error::from)?;
    }
    Ok(())
}

fn run_converge(args: &ConvergeArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    if args.n_list.windows(2).any(|w| w[0] >= w[1]) || args.n_list.first() == Some(&0) {
        return Err(Failure::Invalid("--n-list must be strictly increasing positive counts".into()));
    }
    let game = load_game(&args.common.game)?;
    let outcome = load_outcome(&args.common.game, &args.outcome, &game)?;
    let rows = convergence_run(&game, &outcome, &args.n_list)?;
    emit(&args.common, &write_convergence_csv(&rows), stdout)?;
    Ok(())
}

/// Executes one command.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    match &config.command {
        Command::We(a) => run_we(a, stdout),
        Command::Check(a) => run_check(a, stdout),
        Command::Design(a) => run_design(a, stdout),
        Command::Implement(a) => run_implement(a, stdout),
        Command::Converge(a) => run_converge(a, stdout),
    }
}

/// Parses arguments, runs, prints diagnostics to stderr and returns the
/// exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&config, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let msg = match &f {
                Failure::Invalid(m) | Failure::NotConverged(m) => m,
            };
            let _ = writeln!(stderr, "infodesign: {msg}");
            f.exit_code()
        }
    }
}

// CSV artifacts

fn csv_text(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory writes succeed");
    for r in rows {
        w.write_record(r).expect("in-memory writes succeed");
    }
    String::from_utf8(w.into_inner().expect("in-memory writes succeed")).expect("fields are UTF-8")
}

/// Header and records of a CSV document.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()).map_err(csv_error))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse { line: p.line() as usize, column: 1, message: e.to_string() },
        None => Error::Spec(e.to_string()),
    }
}

fn number(v: &str) -> Result<f64> {
    parse_number(v).ok_or_else(|| Error::Spec(format!("`{v}` is not a number")))
}

/// `n,delta_n,eps_n,wasserstein`.
pub fn write_convergence_csv(rows: &[ConvergenceRow]) -> String {
    let header: Vec<String> = ["n", "delta_n", "eps_n", "wasserstein"].map(String::from).to_vec();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.n.to_string(), render(r.delta), render(r.epsilon), render(r.wasserstein)])
        .collect();
    csv_text(&header, &body)
}

pub fn parse_convergence_csv(text: &str) -> Result<Vec<ConvergenceRow>> {
    let (header, rows) = read_csv(text)?;
    if header != ["n", "delta_n", "eps_n", "wasserstein"] {
        return Err(Error::Spec("unexpected convergence table header".into()));
    }
    rows.iter()
        .map(|r| {
            Ok(ConvergenceRow {
                n: r[0].parse().map_err(|_| Error::Spec(format!("`{}` is not a count", r[0])))?,
                delta: number(&r[1])?,
                epsilon: number(&r[2])?,
                wasserstein: number(&r[3])?,
            })
        })
        .collect()
}

/// `state,weight,<pop>.<action>...`.
pub fn write_support_csv(outcome: &Outcome, game: &GameSpec) -> String {
    let mut header = vec!["state".to_string(), "weight".to_string()];
    for p in game.populations() {
        header.extend(p.actions.iter().map(|a| format!("{}.{a}", p.name)));
    }
    let rows: Vec<Vec<String>> = outcome
        .per_state()
        .iter()
        .enumerate()
        .flat_map(|(s, d)| {
            d.iter().map(move |(y, w)| {
                let mut r = vec![game.states()[s].clone(), render(*w)];
                r.extend(y.pops().iter().flatten().map(|v| render(*v)));
                r
            })
        })
        .collect();
    csv_text(&header, &rows)
}

pub fn parse_support_csv(text: &str, game: &GameSpec) -> Result<Outcome> {
    let (header, rows) = read_csv(text)?;
    let shape = game.shape();
    let width = 2 + shape.iter().sum::<usize>();
    if header.len() != width {
        return Err(Error::Spec("support table does not match the game's actions".into()));
    }
    let mut per_state = vec![Vec::new(); game.num_states()];
    for r in &rows {
        let s = game.state_index(&r[0]).ok_or_else(|| Error::Spec(format!("unknown state `{}`", r[0])))?;
        let values = r[2..].iter().map(|v| number(v)).collect::<Result<Vec<_>>>()?;
        let mut pops = Vec::new();
        let mut at = 0;
        for &n in &shape {
            pops.push(values[at..at + n].to_vec());
            at += n;
        }
        per_state[s].push((FlowProfile::new(pops), number(&r[1])?));
    }
    Ok(Outcome::new(per_state))
}

/// `state,type_1..type_K,weight`.
pub fn write_kernel_csv(imp: &DirectImplementation, game: &GameSpec) -> String {
    let k = imp.structure.num_populations();
    let mut header = vec!["state".to_string()];
    header.extend((1..=k).map(|i| format!("type_{i}")));
    header.push("weight".into());
    let rows: Vec<Vec<String>> = kernel_rows(imp, game)
        .into_iter()
        .map(|r| {
            let mut v = vec![r.state];
            v.extend(r.types);
            v.push(r.weight);
            v
        })
        .collect();
    csv_text(&header, &rows)
}

/// Kernel rows as `(state, type names, weight)`.
pub fn parse_kernel_csv(text: &str) -> Result<Vec<(String, Vec<String>, f64)>> {
    let (header, rows) = read_csv(text)?;
    if header.len() < 3 || header[0] != "state" || header[header.len() - 1] != "weight" {
        return Err(Error::Spec("unexpected kernel table header".into()));
    }
    rows.iter()
        .map(|r| Ok((r[0].clone(), r[1..r.len() - 1].to_vec(), number(&r[r.len() - 1])?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(std::iter::once("infodesign").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn el_farol_equilibria() {
        let (code, out, _) = run_args(&["we", "--game", "elfarol", "--resolution", "64"]);
        assert_eq!(code, 0);
        assert_eq!(out.matches("[[state.equilibrium]]").count(), 3);
        assert_eq!(out.matches("social_cost = \"1\"").count(), 3);
        assert!(out.contains("[\"3/4\", \"1/4\"]"));
    }

    #[test]
    fn el_farol_design() {
        let (code, out, _) = run_args(&["design", "--game", "elfarol", "--objective", "social", "--resolution", "4"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("objective = \"2/3\""));
        assert!(out.contains("weight = \"1/3\""));
        assert!(out.contains("weight = \"2/3\""));
    }

    #[test]
    fn pigou_check() {
        let (code, out, _) = run_args(&["check", "--game", "pigou_info", "--outcome", "paper_bcwe", "--concept", "bcwe"]);
        assert_eq!(code, 0);
        assert!(out.contains("witness_recommended = \"a\""));
        assert!(out.contains("witness_deviation = \"b\""));
        assert!(out.contains("lhs = \"3/4\""));
    }

    #[test]
    fn failed_check_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("o.toml");
        fs::write(&path, "[[support]]\nstate = \"0\"\nweight = \"1\"\nflow = [[\"1/2\", \"1/2\"]]\n").unwrap();
        let (code, out, err) = run_args(&["check", "--game", "elfarol", "--outcome", path.to_str().unwrap(), "--concept", "cwe"]);
        assert_eq!(code, 1);
        assert!(out.contains("satisfied = false"));
        assert!(err.contains("violated"));
    }

    #[test]
    fn bad_input_exits_one() {
        assert_eq!(run_args(&["we", "--game", "no/such/file.toml"]).0, 1);
        assert_eq!(run_args(&["frobnicate"]).0, 1);
        assert_eq!(run_args(&["converge", "--game", "elfarol", "--outcome", "paper_cwe", "--n-list", "8,4"]).0, 1);
        assert_eq!(run_args(&["we", "--game", "elfarol", "--tol", "0"]).0, 1);
        assert_eq!(run_args(&["--help"]).0, 0);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.toml");
        fs::write(&path, "states = [\"0\"]\nprior = [\"1\"]\nbogus = 1\n").unwrap();
        let (code, _, err) = run_args(&["we", "--game", path.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn implement_two_populations() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("k.csv");
        let (code, out, _) = run_args(&[
            "implement", "--game", "elfarol", "--outcome", "paper_cwe", "--denominator", "2", "--csv",
            csv_path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("size = \"1/2\""));
        assert_eq!(out.matches("weight = \"1/3\"").count(), 3);
        let text = fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("state,type_1,type_2,weight\n"));
        assert_eq!(parse_kernel_csv(&text).unwrap().len(), 3);
    }

    #[test]
    fn converge_csv_round_trip() {
        let (code, out, _) = run_args(&["converge", "--game", "elfarol", "--outcome", "paper_cwe", "--n-list", "4,8,16"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("n,delta_n,eps_n,wasserstein\n4,0,0,0\n"));
        let rows = parse_convergence_csv(&out).unwrap();
        assert_eq!(write_convergence_csv(&rows), out);
    }

    #[test]
    fn outputs_are_deterministic() {
        let args = ["design", "--game", "random:7", "--resolution", "4"];
        let (c1, a, _) = run_args(&args);
        let (c2, b, _) = run_args(&args);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(a, b);
    }
}
