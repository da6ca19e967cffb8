//! Kept apart from the other CLI tests: it mutates the process environment.

mod common;

use poslab::cli::{run, EXIT_INPUT, MAX_SDP_DIM_ENV};

#[test]
fn sdp_size_cap_from_environment() {
    let input = common::fixture("box_sum.json");
    let args = ["poslab", "solve", "--input", input.to_str().unwrap()];
    std::env::set_var(MAX_SDP_DIM_ENV, "2");
    let mut err = Vec::new();
    let code = run(args, &mut Vec::new(), &mut err);
    std::env::set_var(MAX_SDP_DIM_ENV, "many");
    let bad = run(args, &mut Vec::new(), &mut Vec::new());
    std::env::remove_var(MAX_SDP_DIM_ENV);
    let err = String::from_utf8(err).unwrap();
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("capacity"), "{err}");
    assert_eq!(bad, EXIT_INPUT);
}
