//! Bounded brute force: mappings restricted to finite instance pools as
//! explicit relations, and checkers for every inverse notion on them.
//!
//! Verdicts are relative to the pools. Where a mapping class allows it,
//! solution containment, `∼M` classes and certain answers are computed
//! exactly with the chase instead of from pool rows.

mod check;
mod corpus;
mod cq;
mod materialize;
mod pool;
mod relation;

pub use check::{
    check_cq_recovery, check_fagin_inverse, check_max_extended_recovery, check_max_recovery, check_quasi_inverse,
    check_recovery, cq_equivalent, discrepancies, max_recovery_on, pools_for, recovery_on, Counterexample, PoolConfig,
    Verdict,
};
pub use corpus::{corpus_source, corpus_target, random_st_mapping};
pub use cq::conjunctive_queries;
pub use materialize::{materialize, materialize_by_satisfaction};
pub use pool::{image, InstancePool, Mask, MAX_POOL_FACTS};
pub use relation::MappingRelation;
