use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mapkit::chase::{chase, is_universal_solution};
use mapkit::compose::{skolemize, to_plain};
use mapkit::eval::{certain_answers_st, eval_query, satisfies};
use mapkit::invert::rewrite_over_source;
use mapkit::lang::{parse_mapping, print_mapping, MappingSpec};
use mapkit::model::{find_homomorphism, Instance};
use mapkit::oracle::*;

fn generated(seed: u64) -> MappingSpec {
    random_st_mapping(&mut ChaCha8Rng::seed_from_u64(seed), "G")
}

fn source_pool(constants: usize) -> Arc<InstancePool> {
    Arc::new(InstancePool::numbered(corpus_source(), constants, 0, &BTreeSet::new()).unwrap())
}

fn source_instance(mask: u64) -> Instance {
    let pool = source_pool(3);
    pool.instance(mask & ((1 << pool.fact_count()) - 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn printing_then_parsing_is_the_identity(seed in any::<u64>()) {
        let m = generated(seed);
        let text = print_mapping(&m);
        let back = parse_mapping(&text).unwrap();
        prop_assert_eq!(print_mapping(&back), text);
        let so = skolemize(&m).unwrap();
        let so_text = print_mapping(&so);
        prop_assert_eq!(print_mapping(&parse_mapping(&so_text).unwrap()), so_text);
    }

    #[test]
    fn chase_result_is_a_universal_solution(seed in any::<u64>(), mask in any::<u64>(), extra in any::<u64>()) {
        let m = generated(seed);
        let i = source_instance(mask);
        let j = chase(&m, &i).unwrap().result;
        prop_assert!(satisfies(&m, &i, &j).unwrap());
        prop_assert!(is_universal_solution(&m, &i, &j).unwrap());
        // any solution obtained by adding facts receives a homomorphism
        let tp = InstancePool::numbered(corpus_target(), 3, 0, &BTreeSet::new()).unwrap();
        let mut bigger = j.clone();
        for (rel, t) in tp.instance(extra & ((1 << tp.fact_count()) - 1)).facts() {
            bigger.insert(rel, t.clone()).unwrap();
        }
        prop_assert!(find_homomorphism(&j, &bigger).unwrap().is_some());
    }

    #[test]
    fn skolemized_mapping_accepts_the_chase(seed in any::<u64>(), mask in any::<u64>()) {
        let m = generated(seed);
        let so = skolemize(&m).unwrap();
        let i = source_instance(mask);
        let j = chase(&m, &i).unwrap().result;
        prop_assert!(satisfies(&so, &i, &j).unwrap());
        let empty = Instance::new(m.target.clone());
        prop_assert_eq!(satisfies(&so, &i, &empty).unwrap(), satisfies(&m, &i, &empty).unwrap());
    }

    #[test]
    fn skolemization_preserves_solutions_on_a_pool(seed in any::<u64>()) {
        let m = generated(seed);
        let cfg = PoolConfig { constants: 1, nulls: 1 };
        let (sp, tp) = pools_for(&m, None, cfg).unwrap();
        let a = materialize(&m, &sp, &tp).unwrap();
        let b = materialize(&skolemize(&m).unwrap(), &sp, &tp).unwrap();
        prop_assert_eq!(discrepancies(&a, &b).unwrap(), 0);
    }

    #[test]
    fn materialization_routes_agree(seed in any::<u64>()) {
        let m = generated(seed);
        let cfg = PoolConfig { constants: 1, nulls: 1 };
        let (sp, tp) = pools_for(&m, None, cfg).unwrap();
        let compiled = materialize(&m, &sp, &tp).unwrap();
        let direct = materialize_by_satisfaction(&m, &sp, &tp).unwrap();
        prop_assert_eq!(discrepancies(&compiled, &direct).unwrap(), 0);
        let so = skolemize(&m).unwrap();
        let images = materialize(&so, &sp, &tp).unwrap();
        let so_direct = materialize_by_satisfaction(&so, &sp, &tp).unwrap();
        prop_assert_eq!(discrepancies(&images, &so_direct).unwrap(), 0);
    }

    #[test]
    fn rewriting_gives_certain_answers(seed in any::<u64>(), mask in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let m = generated(seed);
        let queries = conjunctive_queries(&corpus_target(), 2);
        let q = &queries[pick.index(queries.len())];
        let i = source_instance(mask);
        let rw = rewrite_over_source(&m, q).unwrap();
        prop_assert_eq!(eval_query(&rw.rewritten, &i).unwrap(), certain_answers_st(&m, q, &i).unwrap());
    }

    #[test]
    fn plain_form_is_cq_equivalent(seed in any::<u64>()) {
        let m = generated(seed);
        let plain = to_plain(&skolemize(&m).unwrap()).unwrap();
        prop_assert!(plain.so_tgd().unwrap().is_plain());
        let v = cq_equivalent(&m, &plain, PoolConfig { constants: 1, nulls: 1 }, 2).unwrap();
        prop_assert!(v.is_pass(), "{}", v);
    }
}
