//! Values, schemas, instances and homomorphisms.

mod hom;
mod instance;
mod schema;
mod value;

pub use hom::{find_homomorphism, hom_equivalent, Homomorphism};
pub(crate) use hom::has_homomorphism;
pub use instance::{Instance, Tuple};
pub use schema::{Relation, Schema};
pub use value::Value;
pub(crate) use value::{is_keyword, FactValue};
