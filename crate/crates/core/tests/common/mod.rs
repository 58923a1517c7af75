#![allow(dead_code)]

use std::path::PathBuf;

use mapkit::lang::{parse_instance, parse_mapping, parse_query, MappingSpec, Query};
use mapkit::model::Instance;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn mapping(name: &str) -> MappingSpec {
    parse_mapping(&read(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn instance_for(m: &MappingSpec, name: &str) -> Instance {
    parse_instance(&read(name), &[m.source.clone(), m.target.clone()]).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn query_for(m: &MappingSpec, name: &str) -> Query {
    parse_query(&read(name), &[m.source.clone(), m.target.clone()]).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const MAPPINGS: &[&str] = &[
    "copy.map",
    "copy_back.map",
    "diagonal.map",
    "emp_m12.map",
    "emp_m13.map",
    "emp_m13_plain.map",
    "emp_m23.map",
    "join.map",
    "paths.map",
    "paths_back.map",
    "projection.map",
    "projection_back.map",
    "split.map",
    "split_back.map",
    "swap.map",
    "tagged.map",
    "takes_m12.map",
    "takes_m13.map",
    "takes_m23.map",
    "union.map",
    "uv.map",
    "uv_from_u.map",
    "uv_from_v.map",
];
