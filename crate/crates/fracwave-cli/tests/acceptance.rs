//! The acceptance checklist as a test target: one test per check, each
//! printing its `[PASS]`/`[FAIL]` line. Run with
//! `cargo test --release --test acceptance -- --nocapture` to see the lines.
//! The implementation lives in `fracwave_cli::checks` and is shared with
//! the `fracwave check` subcommand.

use fracwave_cli::checks::run_check;

fn check(index: usize) {
    let outcome = run_check(index);
    println!("{}", outcome.line());
    assert!(outcome.ok(), "{}", outcome.line());
}

#[test]
fn c01_gradient_divergence_duality() {
    check(1);
}

#[test]
fn c02_spectral_operator_matches_singular_integral() {
    check(2);
}

#[test]
fn c03_gradient_reaches_classical_limit() {
    check(3);
}

#[test]
fn c04_yosida_laws_on_reference_graphs() {
    check(4);
}

#[test]
fn c05_trajectory_matches_scalar_recursion() {
    check(5);
}

#[test]
fn c06_energy_residual_is_first_order() {
    check(6);
}

#[test]
fn c07_uniform_bound_across_penalty_and_viscosity() {
    check(7);
}

#[test]
fn c08_penalty_mass_and_velocity_variation_bands() {
    check(8);
}

#[test]
fn c09_constraint_violation_decays_with_epsilon() {
    check(9);
}

#[test]
fn c10_very_weak_residual_of_the_test_library() {
    check(10);
}

#[test]
fn c11_vanishing_viscosity() {
    check(11);
}

#[test]
fn c12_exponent_limit_to_the_classical_wave() {
    check(12);
}
