//! Batch harness over `forcelab-core`: s-expression inputs, the built-in
//! corpus, verification suites and JSON reports.

pub mod corpus;
pub mod report;
pub mod sexp;
pub mod suites;

pub use report::{Report, Row, Status};
pub use suites::{run, tasks, Context, Suite};
