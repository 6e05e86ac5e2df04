//! Truth predicates for finite structures: Tarskian tables, iterated truth
//! and truth read off a collapse forcing.

mod model;
mod table;

pub mod iterated;
pub mod star8;

pub use iterated::{
    check_iterated, derived_iterated_truth, iterated_truth, iterated_truth_etr, IteratedTranslator, IteratedTruth,
    StageOracle,
};
pub use model::{Evaluator, HfModel, Model, TrOracle};
pub use star8::{forcing_truth, ForcingTruth, StarTranslator};
pub use table::{check_clauses, tarski_instance, tarski_truth, tarski_truth_direct, TruthTable, TABLE_BUDGET};
