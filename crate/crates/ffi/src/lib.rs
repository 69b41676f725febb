//! C ABI for the infodesign library.
//!
//! Games and outcomes live behind opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible function returns an
//! [`IdStatus`]; on failure `id_last_error()` describes the problem. Strings
//! returned to the caller are freed with `id_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use infodesign::atomic::convergence_run;
use infodesign::bundled::{bundled_game, bundled_outcome};
use infodesign::cli::check_outcome;
use infodesign::designer_lp::{solve_program_p, DesignerCost, DesignerProblem};
use infodesign::equilibrium_checks::Concept;
use infodesign::format::{parse_designer_cost, parse_game, parse_outcome, write_outcome};
use infodesign::implementation::{direct_structure_from_bcwe, KernelKind};
use infodesign::wardrop::enumerate_we_grid;
use infodesign::{Error, GameSpec, Outcome};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Spec = 3,
    Parse = 4,
    Eval = 5,
    Unsupported = 6,
    GridTooLarge = 7,
    Infeasible = 8,
    Unbounded = 9,
    Numerical = 10,
    Io = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// A game (opaque).
pub struct IdGame {
    game: GameSpec,
    /// Bundled name, used to look up bundled outcomes.
    name: Option<String>,
}

/// A state-conditional distribution over flows (opaque).
pub struct IdOutcome {
    outcome: Outcome,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(IdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Spec(_) => IdStatus::Spec,
            Error::Eval(_) => IdStatus::Eval,
            Error::Unsupported(_) => IdStatus::Unsupported,
            Error::GridTooLarge { .. } => IdStatus::GridTooLarge,
            Error::Parse { .. } => IdStatus::Parse,
            Error::Infeasible => IdStatus::Infeasible,
            Error::Unbounded => IdStatus::Unbounded,
            Error::Numerical(_) => IdStatus::Numerical,
            Error::Io(_) => IdStatus::Io,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(IdStatus::NullArgument, format!("`{what}` is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> IdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            IdStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            IdStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(IdStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn id_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn id_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn id_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a game document.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn id_game_parse(src: *const c_char, out: *mut *mut IdGame) -> IdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let game = parse_game(str_arg(src, "src")?)?;
        *out = Box::into_raw(Box::new(IdGame { game, name: None }));
        Ok(())
    })
}

/// A bundled game (`elfarol`, `pigou_info`, `pigou_network`, `random:SEED`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn id_game_bundled(name: *const c_char, out: *mut *mut IdGame) -> IdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let name = str_arg(name, "name")?;
        let game = bundled_game(name).ok_or_else(|| Fail(IdStatus::Spec, format!("no bundled game `{name}`")))??;
        *out = Box::into_raw(Box::new(IdGame { game, name: Some(name.to_string()) }));
        Ok(())
    })
}

/// # Safety
/// `game` must come from this library and not have been freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn id_game_free(game: *mut IdGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn id_game_num_states(game: *const IdGame, out: *mut usize) -> IdStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(game, "game")?.game.num_states();
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn id_game_num_populations(game: *const IdGame, out: *mut usize) -> IdStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(game, "game")?.game.num_populations();
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn id_game_num_actions(game: *const IdGame, pop: usize, out: *mut usize) -> IdStatus {
    guard(|| {
        let g = &ref_arg(game, "game")?.game;
        if pop >= g.num_populations() {
            return Err(Fail(IdStatus::Spec, format!("no population {pop}")));
        }
        *out_arg(out, "out")? = g.num_actions(pop);
        Ok(())
    })
}

/// Parses an outcome document against `game`.
///
/// # Safety
/// Pointers must be valid; `src` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn id_outcome_parse(game: *const IdGame, src: *const c_char, out: *mut *mut IdOutcome) -> IdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let outcome = parse_outcome(str_arg(src, "src")?, &ref_arg(game, "game")?.game)?;
        *out = Box::into_raw(Box::new(IdOutcome { outcome }));
        Ok(())
    })
}

/// A bundled outcome of a bundled game (`paper_cwe` for `elfarol`,
/// `paper_bcwe` for `pigou_info`).
///
/// # Safety
/// Pointers must be valid; `name` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn id_outcome_bundled(game: *const IdGame, name: *const c_char, out: *mut *mut IdOutcome) -> IdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = ref_arg(game, "game")?;
        let name = str_arg(name, "name")?;
        let outcome = g
            .name
            .as_deref()
            .and_then(|gn| bundled_outcome(gn, name, &g.game))
            .ok_or_else(|| Fail(IdStatus::Spec, format!("no bundled outcome `{name}` for this game")))?;
        *out = Box::into_raw(Box::new(IdOutcome { outcome }));
        Ok(())
    })
}

/// # Safety
/// `outcome` must come from this library and not have been freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn id_outcome_free(outcome: *mut IdOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// Writes an outcome document; free the result with `id_string_free`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn id_outcome_to_toml(game: *const IdGame, outcome: *const IdOutcome, out: *mut *mut c_char) -> IdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = write_outcome(&ref_arg(outcome, "outcome")?.outcome, &ref_arg(game, "game")?.game);
        *out = CString::new(text).map_err(|_| Fail(IdStatus::Spec, "document contains NUL".into()))?.into_raw();
        Ok(())
    })
}

/// Expected social cost of an outcome.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn id_outcome_social_cost(game: *const IdGame, outcome: *const IdOutcome, out: *mut f64) -> IdStatus {
    guard(|| {
        let o = &ref_arg(outcome, "outcome")?.outcome;
        *out_arg(out, "out")? = o.expected_social_cost(&ref_arg(game, "game")?.game)?;
        Ok(())
    })
}

/// Worst violation of `concept` (`cwe`, `ccwe`, `bcwe`, `sbcwe`, `cbcwe`);
/// at most zero means the outcome satisfies it.
///
/// # Safety
/// Pointers must be valid; `concept` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn id_check(
    game: *const IdGame,
    outcome: *const IdOutcome,
    concept: *const c_char,
    violation: *mut f64,
) -> IdStatus {
    guard(|| {
        let tag = str_arg(concept, "concept")?;
        let c = Concept::parse(tag).ok_or_else(|| Fail(IdStatus::Spec, format!("unknown concept `{tag}`")))?;
        let r = check_outcome(&ref_arg(game, "game")?.game, &ref_arg(outcome, "outcome")?.outcome, c)?;
        *out_arg(violation, "violation")? = r.worst_violation;
        Ok(())
    })
}

/// Solves the designer's program on the grid of the given resolution.
/// `objective` is `social` or an expression; the optimal outcome is
/// returned in `out` and its value in `value`.
///
/// # Safety
/// Pointers must be valid; `objective` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn id_design(
    game: *const IdGame,
    objective: *const c_char,
    resolution: usize,
    out: *mut *mut IdOutcome,
    value: *mut f64,
) -> IdStatus {
    guard(|| {
        let g = &ref_arg(game, "game")?.game;
        let obj = str_arg(objective, "objective")?;
        let out = out_arg(out, "out")?;
        let value = out_arg(value, "value")?;
        let cost = if obj == "social" { DesignerCost::Social } else { DesignerCost::Expr(parse_designer_cost(obj, g)?) };
        let sol = solve_program_p(&DesignerProblem::on_grid(g.clone(), cost, resolution, &[])?)?;
        *value = sol.objective;
        *out = Box::into_raw(Box::new(IdOutcome { outcome: sol.outcome }));
        Ok(())
    })
}

/// Wardrop equilibria of `state` found on the grid. Writes up to
/// `capacity` flows, each the concatenation of all populations' flows, into
/// `flows`, and their number into `count`. Returns `BufferTooSmall` (with
/// `count` set) when they do not fit.
///
/// # Safety
/// `flows` must hold `capacity` times the total number of actions doubles
/// (it may be null when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn id_we_grid(
    game: *const IdGame,
    state: usize,
    resolution: usize,
    tol: f64,
    flows: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> IdStatus {
    guard(|| {
        let g = &ref_arg(game, "game")?.game;
        let count = out_arg(count, "count")?;
        if state >= g.num_states() {
            return Err(Fail(IdStatus::Spec, format!("no state {state}")));
        }
        let found = enumerate_we_grid(g, state, resolution, tol)?;
        *count = found.len();
        if found.len() > capacity {
            return Err(Fail(IdStatus::BufferTooSmall, format!("{} equilibria do not fit in {capacity}", found.len())));
        }
        if found.is_empty() {
            return Ok(());
        }
        if flows.is_null() {
            return Err(null("flows"));
        }
        let width: usize = g.shape().iter().sum();
        let buf = std::slice::from_raw_parts_mut(flows, capacity * width);
        for (i, y) in found.iter().enumerate() {
            buf[i * width..(i + 1) * width].copy_from_slice(&y.flat());
        }
        Ok(())
    })
}

/// Obedience violation of the symmetrized direct structure with
/// `denominator` populations implementing `outcome`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn id_implement_epsilon(
    game: *const IdGame,
    outcome: *const IdOutcome,
    denominator: usize,
    epsilon: *mut f64,
) -> IdStatus {
    guard(|| {
        let imp = direct_structure_from_bcwe(
            &ref_arg(game, "game")?.game,
            &ref_arg(outcome, "outcome")?.outcome,
            denominator,
            KernelKind::Symmetrized,
        )?;
        *out_arg(epsilon, "epsilon")? = imp.epsilon.max(0.0);
        Ok(())
    })
}

/// Finite-player approximation table: for each of the `len` player counts
/// writes `(delta_n, eps_n, wasserstein)` to `rows[3 i..3 i + 3]`.
///
/// # Safety
/// `n_list` must hold `len` counts and `rows` `3 len` doubles.
#[no_mangle]
pub unsafe extern "C" fn id_convergence(
    game: *const IdGame,
    outcome: *const IdOutcome,
    n_list: *const usize,
    len: usize,
    rows: *mut f64,
) -> IdStatus {
    guard(|| {
        if len > 0 && (n_list.is_null() || rows.is_null()) {
            return Err(null(if n_list.is_null() { "n_list" } else { "rows" }));
        }
        let ns = if len == 0 { &[][..] } else { std::slice::from_raw_parts(n_list, len) };
        let table = convergence_run(&ref_arg(game, "game")?.game, &ref_arg(outcome, "outcome")?.outcome, ns)?;
        if len > 0 {
            let out = std::slice::from_raw_parts_mut(rows, 3 * len);
            for (i, r) in table.iter().enumerate() {
                out[3 * i..3 * i + 3].copy_from_slice(&[r.delta, r.epsilon, r.wasserstein]);
            }
        }
        Ok(())
    })
}
