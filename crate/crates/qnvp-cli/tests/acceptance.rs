//! Acceptance suite: the ten headline criteria at the reference resolution
//! (nq = 32, nv = 32, vmax = 6; the certificate criterion builds its own
//! coarse grid). One test per criterion, each printing a pass/fail line
//! with the measured values and their bounds.
//!
//! These are long-running integration checks (the full file takes on the
//! order of an hour and a half single-threaded); the cheap per-module
//! guarantees live with the library code instead.

use qnvp_cli::verify::{run_criterion, CheckRecord, VerifyOptions, CRITERIA};
use qnvp_core::grid::{TorusGrid, VelocityGrid};
use qnvp_core::phase::{Discretization, PhaseGrid};

fn reference_disc() -> Discretization {
    Discretization::new(PhaseGrid::new(
        TorusGrid::new(32).unwrap(),
        VelocityGrid::new(32, 6.0).unwrap(),
    ))
}

fn run(index: u32) {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == index)
        .map(|(_, n)| *n)
        .unwrap();
    let disc = reference_disc();
    let records: Vec<CheckRecord> =
        run_criterion(&disc, index, &VerifyOptions::default()).unwrap();
    let pass = records.iter().all(|r| r.pass);
    println!(
        "ACCEPTANCE criterion {:>2} ({}): {}",
        index,
        name,
        if pass { "PASS" } else { "FAIL" }
    );
    for r in &records {
        let rel = match r.kind {
            qnvp_cli::verify::BoundKind::Upper => "<",
            qnvp_cli::verify::BoundKind::Lower => ">",
        };
        println!(
            "    {} {}: {:.6e} (required {} {:.1e})",
            if r.pass { "ok  " } else { "FAIL" },
            r.name,
            r.value,
            rel,
            r.bound
        );
    }
    assert!(pass, "criterion {index} ({name}) failed; see printed records");
}

#[test]
fn criterion_01_langmuir_frequency() {
    run(1);
}

#[test]
fn criterion_02_amplitude_scaling() {
    run(2);
}

#[test]
fn criterion_03_rhs_equivalence() {
    run(3);
}

#[test]
fn criterion_04_dirac_certificate() {
    run(4);
}

#[test]
fn criterion_05_bracket_routes() {
    run(5);
}

#[test]
fn criterion_06_poisson_map() {
    run(6);
}

#[test]
fn criterion_07_conservation() {
    run(7);
}

#[test]
fn criterion_08_limit_agreement() {
    run(8);
}

#[test]
fn criterion_09_collectivization() {
    run(9);
}

#[test]
fn criterion_10_equilibrium() {
    run(10);
}
