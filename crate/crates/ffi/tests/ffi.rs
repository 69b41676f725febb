use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use infodesign_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(id_last_error()) }.to_str().unwrap().to_string()
}

fn bundled(name: &str) -> *mut IdGame {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { id_game_bundled(cstr(name).as_ptr(), &mut g) }, IdStatus::Ok);
    g
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(id_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn game_shape_queries() {
    let g = bundled("pigou_info");
    let (mut states, mut pops, mut acts) = (0usize, 0usize, 0usize);
    unsafe {
        assert_eq!(id_game_num_states(g, &mut states), IdStatus::Ok);
        assert_eq!(id_game_num_populations(g, &mut pops), IdStatus::Ok);
        assert_eq!(id_game_num_actions(g, 0, &mut acts), IdStatus::Ok);
        assert_eq!(id_game_num_actions(g, 3, &mut acts), IdStatus::Spec);
        id_game_free(g);
    }
    assert_eq!((states, pops, acts), (2, 1, 2));
}

#[test]
fn parse_errors_set_message() {
    let mut g = ptr::null_mut();
    let status = unsafe { id_game_parse(cstr("states = [\"0\"]\nbogus = 1\n").as_ptr(), &mut g) };
    assert_eq!(status, IdStatus::Parse);
    assert!(g.is_null());
    assert!(last_error().contains("line"));
    let status = unsafe { id_game_parse(ptr::null(), &mut g) };
    assert_eq!(status, IdStatus::NullArgument);
    assert!(last_error().contains("src"));
}

#[test]
fn check_pigou_outcome() {
    let g = bundled("pigou_info");
    let mut o = ptr::null_mut();
    let mut v = f64::NAN;
    let mut cost = f64::NAN;
    unsafe {
        assert_eq!(id_outcome_bundled(g, cstr("paper_bcwe").as_ptr(), &mut o), IdStatus::Ok);
        assert_eq!(id_check(g, o, cstr("bcwe").as_ptr(), &mut v), IdStatus::Ok);
        assert_eq!(id_outcome_social_cost(g, o, &mut cost), IdStatus::Ok);
        assert_eq!(id_check(g, o, cstr("nope").as_ptr(), &mut v), IdStatus::Spec);
        id_outcome_free(o);
        id_game_free(g);
    }
    assert!(v <= 1e-12);
    assert!((cost - 1.0).abs() < 1e-12);
}

#[test]
fn design_and_serialize() {
    let g = bundled("elfarol");
    let mut o = ptr::null_mut();
    let mut value = f64::NAN;
    let mut text = ptr::null_mut();
    unsafe {
        assert_eq!(id_design(g, cstr("social").as_ptr(), 4, &mut o, &mut value), IdStatus::Ok);
        assert_eq!(id_outcome_to_toml(g, o, &mut text), IdStatus::Ok);
        let doc = CStr::from_ptr(text).to_str().unwrap().to_string();
        assert!(doc.contains("weight = \"1/3\""));
        let mut back = ptr::null_mut();
        assert_eq!(id_outcome_parse(g, text, &mut back), IdStatus::Ok);
        let mut v = f64::NAN;
        assert_eq!(id_check(g, back, cstr("cwe").as_ptr(), &mut v), IdStatus::Ok);
        assert!(v <= 1e-9);
        id_string_free(text);
        id_outcome_free(back);
        id_outcome_free(o);
        id_game_free(g);
    }
    assert!((value - 2.0 / 3.0).abs() < 1e-9);
}

#[test]
fn equilibria_into_buffer() {
    let g = bundled("elfarol");
    let mut count = 0usize;
    unsafe {
        assert_eq!(id_we_grid(g, 0, 64, 1e-9, ptr::null_mut(), 0, &mut count), IdStatus::BufferTooSmall);
        assert_eq!(count, 3);
        let mut buf = vec![0.0; 6];
        assert_eq!(id_we_grid(g, 0, 64, 1e-9, buf.as_mut_ptr(), 3, &mut count), IdStatus::Ok);
        assert!(buf.chunks(2).any(|y| (y[0] - 0.75).abs() < 1e-4));
        id_game_free(g);
    }
}

#[test]
fn implementation_and_convergence() {
    let g = bundled("elfarol");
    let mut o = ptr::null_mut();
    let mut eps = f64::NAN;
    let ns = [4usize, 8, 16];
    let mut rows = [f64::NAN; 9];
    unsafe {
        assert_eq!(id_outcome_bundled(g, cstr("paper_cwe").as_ptr(), &mut o), IdStatus::Ok);
        assert_eq!(id_implement_epsilon(g, o, 2, &mut eps), IdStatus::Ok);
        assert_eq!(id_convergence(g, o, ns.as_ptr(), ns.len(), rows.as_mut_ptr()), IdStatus::Ok);
        let bad = [8usize, 4];
        assert_ne!(id_convergence(g, o, bad.as_ptr(), 2, rows.as_mut_ptr()), IdStatus::Ok);
        id_outcome_free(o);
        id_game_free(g);
    }
    assert!(eps <= 1e-12);
    assert!(rows.iter().all(|v| *v == 0.0));
}

#[test]
fn free_null_is_noop() {
    unsafe {
        id_game_free(ptr::null_mut());
        id_outcome_free(ptr::null_mut());
        id_string_free(ptr::null_mut());
    }
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/infodesign.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["id_game_parse", "id_check", "id_design", "id_last_error", "ID_STATUS_OK", "typedef struct IdGame IdGame"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() else {
        return; // no C compiler available
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
