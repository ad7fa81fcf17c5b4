mod common;

use common::TRIALS;

fn assert_suite(outcome: common::SuiteOutcome) {
    assert!(
        outcome.passed(),
        "{}: {} of {} trials failed, first: {:?}",
        outcome.name,
        outcome.failures.len(),
        outcome.trials,
        outcome.failures.first()
    );
}

#[test]
fn gradient_matches_finite_differences() {
    assert_suite(common::gradient_vs_finite_differences(TRIALS));
}

#[test]
fn energy_is_convex_along_segments() {
    assert_suite(common::convexity_triples(TRIALS));
}

#[test]
fn minimizer_beats_perturbations() {
    assert_suite(common::minimality_vs_perturbations(TRIALS));
}

#[test]
fn minimizer_is_independent_of_the_start() {
    assert_suite(common::multi_start_uniqueness(TRIALS));
}

#[test]
fn normalization_and_homogeneity_hold() {
    assert_suite(common::homogeneity_and_normalization(TRIALS));
}

#[test]
fn density_integrals_are_consistent() {
    assert_suite(common::energy_consistency(TRIALS));
}
