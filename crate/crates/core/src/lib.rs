//! Contest success functions with luck.
//!
//! The crate evaluates logit CSFs `p_i = f_i(x_i) / Σ_j f_j(x_j)` with impact
//! `f_j(x) = b_j + a_j x^r` and its special cases, checks allocation axioms
//! against them by sampling, searches for counterexamples, splits a CSF into
//! an effort part and a luck part, and solves the associated contest game.

pub mod axioms;
pub mod contest;
pub mod csf;
pub mod decompose;
pub mod equilibrium;
pub mod error;
pub mod falsifier;
pub mod impact;
pub mod scalar;

pub use axioms::{check_axiom, AxiomId, AxiomVerdict, SamplingPlan, Status, Witness};
pub use contest::{ContestantSet, EffortProfile, Subset};
pub use csf::{deviation, evaluate, evaluate_full, restrict, Kernel};
pub use decompose::{blavatskyy_params, decompose_two_level, Decomposition};
pub use equilibrium::{
    best_response, comparative_static_b, solve_nash, ContestGame, EquilibriumResult, SolverConfig,
};
pub use error::{CsfError, Result};
pub use falsifier::{falsify, reproduce_paper_examples, shrink, Counterexample};
pub use impact::{CustomImpact, Family, ImpactFn, ImpactSpec, PiecewiseLinear};
#[cfg(feature = "exact")]
pub use scalar::Rational;
pub use scalar::{Backend, Number, Scalar};

// The guide's snippets run as doctests. Several use the rational backend.
#[cfg(all(doctest, feature = "exact"))]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/csf.md")]
    mod csf {}
    #[doc = include_str!("../../../book/src/backends.md")]
    mod backends {}
    #[doc = include_str!("../../../book/src/axioms.md")]
    mod axioms {}
    #[doc = include_str!("../../../book/src/falsifier.md")]
    mod falsifier {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/equilibrium.md")]
    mod equilibrium {}
}
