//! Satisfiability and entailment of temporal conjunctive queries (TCQs) over
//! DL-Lite horn temporal knowledge bases with rigid concept and role names.
//!
//! The crate offers two decision paths for TCQ satisfiability:
//!
//! * [`solver`] enumerates r-complete tuples and searches for an LTL lasso
//!   whose worlds are each realisable at their time point;
//! * [`rewrite`] evaluates first-order rewritings over the temporal database
//!   read off the ABox sequence, for queries whose propositional abstraction
//!   is separated.
//!
//! Supporting modules: [`model`] and [`syntax`] for the data model and text
//! formats, [`dllite`] for atemporal reasoning, [`ltl`] for propositional
//! temporal logic, [`rsat`] for the tuple conditions, [`boolkrom`] for the
//! Boolean-to-krom query transformation and [`oracle`] for brute-force
//! semantic checks used in testing.

pub mod boolkrom;
pub mod dllite;
pub mod error;
pub mod ltl;
pub mod model;
pub mod oracle;
pub mod rewrite;
pub mod rsat;
pub mod solver;
pub mod syntax;

pub use error::{Error, Result};
