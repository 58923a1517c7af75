use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::lang::{Atom, Body, Dependency, MappingSpec, Term};
use crate::model::Schema;

/// Source schema of generated mappings: `S/2, R/1`.
pub fn corpus_source() -> Arc<Schema> {
    Arc::new(Schema::of("Src", &[("S", 2), ("R", 1)]).expect("valid schema"))
}

/// Target schema of generated mappings: `T/2, U/1`.
pub fn corpus_target() -> Arc<Schema> {
    Arc::new(Schema::of("Tgt", &[("T", 2), ("U", 1)]).expect("valid schema"))
}

const UNIVERSAL: [&str; 3] = ["x", "y", "z"];
const EXISTENTIAL: [&str; 2] = ["u", "v"];

/// A random st-tgd mapping from [`corpus_source`] to [`corpus_target`]
/// with one to three tgds of one to three atoms on each side.
pub fn random_st_mapping(rng: &mut impl Rng, name: &str) -> MappingSpec {
    let (source, target) = (corpus_source(), corpus_target());
    let count = rng.gen_range(1..=3);
    let deps = (0..count).map(|_| random_tgd(rng, &source, &target)).collect();
    MappingSpec::new(name, source, target, Body::Dependencies(deps))
}

fn random_atoms(rng: &mut impl Rng, schema: &Schema, names: &[&str]) -> Vec<Atom> {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| {
            let r = schema.relations().choose(rng).expect("nonempty schema");
            let args = (0..r.arity).map(|_| Term::var(names.choose(rng).expect("names"))).collect();
            Atom::rel(&r.name, args)
        })
        .collect()
}

fn random_tgd(rng: &mut impl Rng, source: &Schema, target: &Schema) -> Dependency {
    let premise = random_atoms(rng, source, &UNIVERSAL);
    let mut bound: Vec<&str> = UNIVERSAL
        .iter()
        .copied()
        .filter(|x| premise.iter().any(|a| a.terms().iter().any(|t| t.as_var() == Some(*x))))
        .collect();
    let existentials = rng.gen_range(0..=EXISTENTIAL.len());
    bound.extend(&EXISTENTIAL[..existentials]);
    let conclusion = random_atoms(rng, target, &bound);
    let exists: Vec<&str> = EXISTENTIAL[..existentials]
        .iter()
        .copied()
        .filter(|x| conclusion.iter().any(|a| a.terms().iter().any(|t| t.as_var() == Some(*x))))
        .collect();
    Dependency::tgd(premise, &exists, conclusion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_mappings_are_valid_st_tgds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..200 {
            let m = random_st_mapping(&mut rng, &format!("M{k}"));
            assert!(m.is_st_tgd_mapping());
            assert!(validate(&m).is_empty(), "{:?}", validate(&m));
        }
    }
}
