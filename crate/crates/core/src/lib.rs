//! Finite-scale forcing machinery over hereditarily finite sets.
//!
//! Everything here is instantiated over finite preorders and finite stages
//! `V_n` of the cumulative hierarchy, so that each statement about forcing
//! relations, truth predicates and clopen games can be checked by brute force.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and the
//! command line live in the `forcelab` companion crate.

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod error;
mod stable_hash;

pub mod coding;
pub mod etr;
pub mod forcing;
pub mod formula;
pub mod games;
pub mod hfset;
pub mod names;
pub mod poset;
pub mod truth;

pub use error::{Error, Result};
pub use formula::{ClassId, Formula, Kind, Term, Var};
pub use hfset::HFSet;
pub use names::{ClassName, PName};
pub use poset::{CondSet, Filter, ForcingNotion};
