//! Composition: Skolemization, SO-tgd composition, plain normalization and
//! the composition-membership test.

mod member;
mod sotgd;

pub use member::{composition_member, CompositionWitness, Membership};
pub(crate) use member::formula_constants;
pub use sotgd::{as_so_tgd, compose, skolemize, to_plain};
