//! Acceptance gate: one test per criterion, each printing a pass/fail
//! line (visible with `--nocapture`). Monte Carlo criteria may report
//! INCONCLUSIVE when a comparison is not resolvable at the pinned
//! replicate count; only FAIL breaks the build.
//!
//! The fast tier (criteria 1-5, 9) runs in about a minute; the mc tier
//! (6, 7, 8, 10) integrates millions of replicate trajectories and takes
//! tens of minutes on a two-core machine.

use litm_core::acceptance::{run_criterion, Verdict};

fn check(id: usize) {
    let report = run_criterion(id);
    println!("{}", report.render());
    assert_ne!(report.verdict, Verdict::Fail, "\n{}", report.render());
}

#[test]
fn criterion_01_closed_form_vs_volterra_oracle() {
    check(1);
}

#[test]
fn criterion_02_uniform_case_diagonalization() {
    check(2);
}

#[test]
fn criterion_03_u_shaped_retrieval_profile() {
    check(3);
}

#[test]
fn criterion_04_convexity_certificate() {
    check(4);
}

#[test]
fn criterion_05_meanfield_stationarity_and_self_convergence() {
    check(5);
}

#[test]
fn criterion_06_propagation_of_chaos_rate() {
    check(6);
}

#[test]
fn criterion_07_correlation_limit_monte_carlo() {
    check(7);
}

#[test]
fn criterion_08_covariance_scaling() {
    check(8);
}

#[test]
fn criterion_09_graphon_convergence_rate() {
    check(9);
}

#[test]
fn criterion_10_end_to_end_soft_accuracy() {
    check(10);
}
