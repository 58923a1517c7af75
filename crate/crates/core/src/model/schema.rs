use crate::error::{MapError, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
}

/// A named, finite set of relation symbols with fixed positive arities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Schema {
    name: String,
    relations: Vec<Relation>,
}

impl Schema {
    pub fn new<N, R>(name: N, relations: R) -> Result<Self>
    where
        N: Into<String>,
        R: IntoIterator<Item = (String, usize)>,
    {
        let mut rels: Vec<Relation> = Vec::new();
        for (rel, arity) in relations {
            if arity == 0 {
                return Err(MapError::semantic(rel, "relations must have positive arity"));
            }
            if rel == "C" {
                return Err(MapError::semantic(rel, "`C` is reserved for the constant predicate"));
            }
            if rels.iter().any(|r| r.name == rel) {
                return Err(MapError::semantic(rel, "duplicate relation in schema"));
            }
            rels.push(Relation { name: rel, arity });
        }
        Ok(Schema {
            name: name.into(),
            relations: rels,
        })
    }

    /// Shorthand for tests and fixtures: `Schema::of("S", &[("S", 2)])`.
    pub fn of(name: &str, relations: &[(&str, usize)]) -> Result<Self> {
        Schema::new(name, relations.iter().map(|(r, a)| (r.to_string(), *a)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn arity(&self, rel: &str) -> Option<usize> {
        self.relations.iter().find(|r| r.name == rel).map(|r| r.arity)
    }

    pub fn contains(&self, rel: &str) -> bool {
        self.arity(rel).is_some()
    }

    pub fn is_disjoint_from(&self, other: &Schema) -> bool {
        self.relations.iter().all(|r| !other.contains(&r.name))
    }

    /// Same relation symbols with the same arities (schema names may differ).
    pub fn same_relations(&self, other: &Schema) -> bool {
        self.relations.len() == other.relations.len()
            && self.relations.iter().all(|r| other.arity(&r.name) == Some(r.arity))
    }
}
