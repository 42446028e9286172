//! Built-in reference problems.

use crate::models::{factor, FamilyLink, GlmSpec, LogitType, MultinomialSpec, Odds, Term};
use crate::region::{Allocation, FeasibleRegion, LinearConstraint};

/// Stratum sizes of the 2×3 logistic example.
pub const EXAMPLE1_COUNTS: [u64; 6] = [50, 40, 10, 200, 150, 50];
pub const EXAMPLE1_BUDGET: u64 = 200;
pub const EXAMPLE1_THETA: [f64; 4] = [0.0, 3.0, 3.0, 3.0];

pub fn example1_strata() -> Vec<Vec<f64>> {
    (0..2)
        .flat_map(|a| (0..3).map(move |b| vec![a as f64, b as f64]))
        .collect()
}

/// Main effects: intercept, `x1`, `1{x2 = 1}`, `1{x2 = 2}`.
pub fn example1_terms() -> Vec<Term> {
    let mut terms = vec![Term::Intercept, Term::Continuous { covariate: 0 }];
    terms.extend(factor(1, &[1.0, 2.0]));
    terms
}

/// Main effects plus `x1 · 1{x2 = 1}` and `x1 · 1{x2 = 2}`.
pub fn example1_interaction_terms() -> Vec<Term> {
    let mut terms = example1_terms();
    for level in [1.0, 2.0] {
        terms.push(Term::interaction(
            Term::Continuous { covariate: 0 },
            Term::Indicator {
                covariate: 1,
                level,
            },
        ));
    }
    terms
}

pub fn example1_model() -> GlmSpec {
    GlmSpec::new(FamilyLink::Logit, example1_terms(), example1_strata()).expect("valid model")
}

pub fn example1_interaction_model() -> GlmSpec {
    GlmSpec::new(
        FamilyLink::Logit,
        example1_interaction_terms(),
        example1_strata(),
    )
    .expect("valid model")
}

pub fn example1_region() -> FeasibleRegion {
    FeasibleRegion::from_counts(&EXAMPLE1_COUNTS, EXAMPLE1_BUDGET).expect("valid region")
}

/// Intercept plus two continuous covariates over three strata.
pub fn counterexample_model() -> GlmSpec {
    GlmSpec::new(
        FamilyLink::Logit,
        vec![
            Term::Intercept,
            Term::Continuous { covariate: 0 },
            Term::Continuous { covariate: 1 },
        ],
        vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0]],
    )
    .expect("valid model")
}

/// `(4/9) w1 − (1/3) w2 − (1/9) w3 ≤ 0` and `w1 ≥ 3/11`.
pub fn counterexample_region() -> FeasibleRegion {
    FeasibleRegion::new(
        3,
        None,
        vec![
            LinearConstraint::new(vec![4.0 / 9.0, -1.0 / 3.0, -1.0 / 9.0], 0.0),
            LinearConstraint::new(vec![-1.0, 0.0, 0.0], -3.0 / 11.0),
        ],
    )
    .expect("valid region")
}

pub fn counterexample_start() -> Allocation {
    Allocation::new(vec![3.0 / 11.0, 2.0 / 11.0, 6.0 / 11.0]).expect("valid allocation")
}

/// Fitted cumulative npo coefficients: four intercepts, four `x1` slopes,
/// four `x2` slopes.
pub const TRAUMA_THETA: [f64; 12] = [
    -4.047, -2.225, -0.302, 1.386, 4.214, 3.519, 2.420, 1.284, -0.131, -0.376, -0.237, -0.120,
];
pub const TRAUMA_BUDGET: u64 = 600;
/// Per-stratum population sizes; severity groups total 392 and 410.
pub const TRAUMA_COUNTS: [u64; 8] = [104, 93, 100, 95, 106, 97, 107, 100];
/// Severity-group sizes of the modified study (592 mild, 210 severe).
pub const TRAUMA_MODIFIED_COUNTS: [u64; 8] = [148, 148, 148, 148, 55, 50, 54, 51];

/// Strata `(x1, x2)` for `x1 ∈ {0, 1}`, `x2 ∈ {1, …, 4}`.
pub fn trauma_strata() -> Vec<Vec<f64>> {
    (0..2)
        .flat_map(|a| (1..=4).map(move |b| vec![a as f64, b as f64]))
        .collect()
}

pub fn trauma_model() -> MultinomialSpec {
    MultinomialSpec {
        link: LogitType::Cumulative,
        odds: Odds::Npo,
        categories: 5,
        terms: vec![
            Term::Intercept,
            Term::Continuous { covariate: 0 },
            Term::Continuous { covariate: 1 },
        ],
        strata: trauma_strata(),
    }
}

/// Group constraints `Σ_{i≤4} n_i ≤ mild` and `Σ_{i>4} n_i ≤ severe`.
pub fn trauma_group_region(mild: u64, severe: u64, budget: u64) -> FeasibleRegion {
    let n = budget as f64;
    FeasibleRegion::new(
        8,
        None,
        vec![
            LinearConstraint::new(
                vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                mild as f64 / n,
            ),
            LinearConstraint::new(
                vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0],
                severe as f64 / n,
            ),
        ],
    )
    .expect("valid region")
}

pub fn trauma_region() -> FeasibleRegion {
    trauma_group_region(392, 410, TRAUMA_BUDGET)
}

pub fn trauma_modified_region() -> FeasibleRegion {
    trauma_group_region(592, 210, TRAUMA_BUDGET)
}
