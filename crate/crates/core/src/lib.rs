//! Composition and inversion of relational schema mappings.
//!
//! Mappings are given by source-to-target dependencies or second-order
//! tgds. The crate chases, composes, inverts and certifies them; the
//! [`oracle`] module materializes mappings over small instance pools so
//! every inverse notion can be checked by brute force.

pub mod error;
pub mod lang;
pub mod model;
pub mod eval;
pub mod chase;
pub mod compose;
pub mod invert;
pub mod oracle;
pub mod cli;

pub use error::{MapError, Result};
