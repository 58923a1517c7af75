mod common;

use std::sync::Arc;

use common::*;
use mapkit::invert::maximum_recovery;
use mapkit::lang::{parse_mapping, Semantics};
use mapkit::oracle::*;

fn small() -> PoolConfig {
    PoolConfig { constants: 2, nulls: 1 }
}

#[test]
fn fagin_inverses_of_the_double_copy() {
    let m = mapping("uv.map");
    for back in ["uv_from_u.map", "uv_from_v.map"] {
        let v = check_fagin_inverse(&m, &mapping(back), PoolConfig::default()).unwrap();
        assert!(v.is_pass(), "{back}: {v}");
    }
}

#[test]
fn projection_is_not_fagin_invertible_but_has_a_quasi_inverse() {
    let m = mapping("projection.map");
    let back = mapping("projection_back.map");
    let v = check_fagin_inverse(&m, &back, PoolConfig::default()).unwrap();
    let c = v.counterexample().expect("a counterexample");
    let (i1, i2) = (&c.instances[0].1, &c.instances[1].1);
    assert!(!i1.is_subset(i2));
    assert_eq!(i1.to_string(), "{S(1, 1)}");
    assert_eq!(i2.to_string(), "{S(1, 2)}");
    assert!(check_quasi_inverse(&m, &back, PoolConfig::default()).unwrap().is_pass());
    assert!(check_max_recovery(&m, &back, PoolConfig::default()).unwrap().is_pass());
}

#[test]
fn empty_reverse_mapping_is_no_quasi_inverse() {
    let m = mapping("projection.map");
    let none = parse_mapping("schema S { S/2 } schema T { T/1 } map N : T -> S { }").unwrap();
    // the empty body relates every pair, so it is a recovery but not a maximum one
    assert!(check_recovery(&m, &none, small()).unwrap().is_pass());
    assert!(check_max_recovery(&m, &none, small()).unwrap().is_fail());
    let nothing =
        parse_mapping("schema S { S/2 } schema T { T/1 } map N : T -> S { T(x) -> false; }").unwrap();
    assert!(check_quasi_inverse(&m, &nothing, small()).unwrap().is_fail());
}

#[test]
fn printed_recovery_of_the_paths_mapping_is_maximum() {
    let m = mapping("paths.map");
    let back = mapping("paths_back.map");
    assert!(check_recovery(&m, &back, PoolConfig::default()).unwrap().is_pass());
    assert!(check_max_recovery(&m, &back, PoolConfig::default()).unwrap().is_pass());
    let rec = maximum_recovery(&m).unwrap();
    assert!(check_recovery(&m, &rec, PoolConfig::default()).unwrap().is_pass());
    assert!(check_max_recovery(&m, &rec, PoolConfig::default()).unwrap().is_pass());
}

#[test]
fn wrong_schema_is_an_error() {
    let m = mapping("copy.map");
    let other = parse_mapping("schema T { T/1 } schema S2 { S2/1 } map W : T -> S2 { T(x) -> S2(x); }").unwrap();
    assert!(check_recovery(&m, &other, small()).is_err());
}

#[test]
fn copy_mapping_inverses() {
    let m = mapping("copy.map");
    let rec = maximum_recovery(&m).unwrap();
    assert!(check_fagin_inverse(&m, &rec, PoolConfig::default()).unwrap().is_pass());
    assert!(check_cq_recovery(&m, &rec, PoolConfig::default(), 3).unwrap().is_pass());
    assert!(check_cq_recovery(&m, &rec, PoolConfig::default(), 0).unwrap().is_pass());
    let wrong = parse_mapping("schema S { S/1 } schema T { T/1 } map W : T -> S { T(x) -> S(\"1\"); }").unwrap();
    let v = check_cq_recovery(&m, &wrong, PoolConfig::default(), 1).unwrap();
    let c = v.counterexample().expect("a witness");
    assert!(c.query.is_some() && c.tuple.is_some());
}

#[test]
fn full_relation_is_a_recovery_but_not_maximum() {
    let m = mapping("projection.map");
    let (sp, tp) = pools_for(&m, None, small()).unwrap();
    let r = materialize(&m, &sp, &tp).unwrap();
    let full = MappingRelation::full(tp.clone(), sp.clone());
    assert!(recovery_on(&r, &full).unwrap().is_pass());
    assert!(max_recovery_on(&r, &full, &|a, b| Ok(r.row_subset(a, b))).unwrap().is_fail());
}

#[test]
fn extended_recovery_of_the_copy_mapping() {
    let cfg = PoolConfig { constants: 1, nulls: 1 };
    let m = mapping("copy.map");
    let back = mapping("copy_back.map");
    let v = check_max_extended_recovery(&m, &back, cfg).unwrap();
    assert!(v.is_pass(), "{v}");
    let ext = |x: &mapkit::lang::MappingSpec| x.clone().with_semantics(Semantics::Extended);
    assert!(check_max_recovery(&ext(&m), &ext(&back), cfg).unwrap().is_pass());
    let none = parse_mapping("schema S { S/1 } schema T { T/1 } map N : T -> S { }").unwrap();
    assert!(check_max_extended_recovery(&m, &none, cfg).unwrap().is_fail());
}

#[test]
fn extend_is_idempotent() {
    let m = mapping("split.map");
    let cfg = PoolConfig { constants: 1, nulls: 1 };
    let (sp, tp) = pools_for(&m.clone().with_semantics(Semantics::Extended), None, cfg).unwrap();
    let e = materialize(&m.clone().with_semantics(Semantics::Extended), &sp, &tp).unwrap();
    assert_eq!(e.extend(), e);
    let std = materialize(&m, &sp, &tp).unwrap();
    assert!(discrepancies(&std, &e).unwrap() > 0);
}

#[test]
fn composition_of_relations_is_associative() {
    let m = mapping("copy.map");
    let back = mapping("copy_back.map");
    let cfg = PoolConfig { constants: 2, nulls: 1 };
    let (sp, tp) = pools_for(&m, None, cfg).unwrap();
    let a = materialize(&m, &sp, &tp).unwrap();
    let b = materialize(&back, &tp, &sp).unwrap();
    let left = a.compose(&b).unwrap().compose(&a).unwrap();
    let right = a.compose(&b.compose(&a).unwrap()).unwrap();
    assert_eq!(left, right);
    assert!(a.compose(&a).is_err());
    let id = MappingRelation::identity(Arc::clone(&sp));
    assert_eq!(id.compose(&a).unwrap(), a);
}
