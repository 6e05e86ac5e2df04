//! Forcing relations over finite notions: the atomic clauses, the forcing
//! scheme, the star translation to single equations, the regular-open
//! completion, generic extensions and truth names.

pub mod audit;
pub mod boolean;
pub mod extension;
pub mod relation;
pub mod star;
pub mod truth_name;

pub use audit::{audit, LawReport};
pub use boolean::{check_atomic_values, check_lambda_onto, BooleanValues, RegularOpenAlgebra};
pub use extension::{quotient, truth_lemma_check, Extension, Quotient};
pub use relation::{atomic_by_definition, Atomic, ForcingRelation};
pub use star::{star_equation, star_translate};
pub use truth_name::{check_forces_star, check_truth_in_extension, truth_name};
