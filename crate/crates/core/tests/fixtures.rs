mod common;

use common::*;
use mapkit::lang::{parse_mapping, print_mapping, validate};

#[test]
fn every_fixture_parses_validates_and_round_trips() {
    for name in MAPPINGS {
        let m = mapping(name);
        assert!(validate(&m).is_empty(), "{name}: {:?}", validate(&m));
        let printed = print_mapping(&m);
        let again = parse_mapping(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(again, m, "{name}");
    }
}

#[test]
fn instance_and_query_fixtures_parse() {
    let m12 = mapping("takes_m12.map");
    let i = instance_for(&m12, "takes.inst");
    assert_eq!(i.len(), 1);
    let q = query_for(&m12, "takes_student.query");
    assert_eq!(q.free.len(), 2);
    query_for(&m12, "takes_copy.query");
}
