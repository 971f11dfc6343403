//! Variable Shift Sentential Decision Diagrams (VS-SDDs).
//!
//! A VS-SDD represents a Boolean function as a pair of an interned DAG
//! structure and an integer offset into a vtree's preorder numbering.
//! Structures are shared between functions that are equal up to the variable
//! substitution induced by an isomorphism of vtree subtrees, which can make
//! them strictly smaller than the corresponding SDDs.
//!
//! The crate also ships a compressed-and-trimmed SDD manager used as a size
//! baseline and cross-check, a DIMACS CNF frontend with benchmark
//! generators, and a brute-force oracle for differential testing.

pub mod error;
pub mod export;
pub mod op;
pub mod frontend;
pub mod oracle;
pub mod queries;
pub mod sdd;
pub mod vssdd;
pub mod vtree;

pub use error::{Error, Result};
pub use op::Op;
pub use sdd::{SddId, SddManager};
pub use vssdd::{Mode, StructId, VsManager, VsSdd};
pub use vtree::{NodeId, Side, Var, Vtree, SENTINEL};
