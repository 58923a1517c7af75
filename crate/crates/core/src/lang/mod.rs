//! Syntax of queries, dependencies, SO-tgds and mapping files.

mod ast;
mod lexer;
mod parser;
mod printer;
mod validate;

pub use ast::{
    relational_vars, vars_of, Atom, Body, ClassTag, Conjunct, Dependency, Direction, Fragment, MappingSpec, Query,
    Semantics, SoClause, SoTgd, Term, Var,
};
pub use parser::{parse_dependency, parse_instance, parse_instances, parse_mapping, parse_named_instance, parse_query};
pub use printer::{print_mapping, print_query};
pub use validate::{validate, validate_query, Violation};
