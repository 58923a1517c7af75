use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{MapError, Result};
use crate::model::value::FactValue;
use crate::model::{Schema, Value};

pub type Tuple = Vec<Value>;

/// A finite instance of a schema. Only non-empty relations are stored, so
/// structural equality coincides with fact-set equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instance {
    schema: Arc<Schema>,
    facts: BTreeMap<String, BTreeSet<Tuple>>,
}

impl Instance {
    pub fn new(schema: Arc<Schema>) -> Self {
        Instance {
            schema,
            facts: BTreeMap::new(),
        }
    }

    /// Builds an instance from `(relation, tuple)` pairs, checking arities.
    pub fn from_facts<I>(schema: Arc<Schema>, facts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Tuple)>,
    {
        let mut inst = Instance::new(schema);
        for (rel, tuple) in facts {
            inst.insert(&rel, tuple)?;
        }
        Ok(inst)
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    /// Returns true when the fact was not present before.
    pub fn insert(&mut self, rel: &str, tuple: Tuple) -> Result<bool> {
        match self.schema.arity(rel) {
            None => Err(MapError::semantic(
                rel,
                format!("relation not in schema {}", self.schema.name()),
            )),
            Some(a) if a != tuple.len() => Err(MapError::semantic(
                rel,
                format!("arity mismatch: expected {a}, got {}", tuple.len()),
            )),
            Some(_) => Ok(self.facts.entry(rel.to_string()).or_default().insert(tuple)),
        }
    }

    pub fn contains(&self, rel: &str, tuple: &[Value]) -> bool {
        self.facts.get(rel).is_some_and(|ts| ts.contains(tuple))
    }

    pub fn tuples(&self, rel: &str) -> impl Iterator<Item = &Tuple> + '_ {
        self.facts.get(rel).into_iter().flatten()
    }

    pub fn relation_len(&self, rel: &str) -> usize {
        self.facts.get(rel).map_or(0, BTreeSet::len)
    }

    /// All facts in relation-name order, then tuple order.
    pub fn facts(&self) -> impl Iterator<Item = (&str, &Tuple)> + '_ {
        self.facts
            .iter()
            .flat_map(|(r, ts)| ts.iter().map(move |t| (r.as_str(), t)))
    }

    pub fn len(&self) -> usize {
        self.facts.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// The set of values occurring in some fact.
    pub fn active_domain(&self) -> BTreeSet<Value> {
        self.facts().flat_map(|(_, t)| t.iter().cloned()).collect()
    }

    pub fn nulls(&self) -> BTreeSet<Value> {
        self.facts()
            .flat_map(|(_, t)| t.iter().filter(|v| v.is_null()).cloned())
            .collect()
    }

    pub fn is_ground(&self) -> bool {
        self.facts().all(|(_, t)| t.iter().all(Value::is_const))
    }

    /// Fact-wise containment; schemas must agree.
    pub fn is_subset(&self, other: &Instance) -> bool {
        self.facts().all(|(r, t)| other.contains(r, t))
    }

    pub fn union(&self, other: &Instance) -> Result<Instance> {
        self.check_same_schema(other)?;
        let mut out = self.clone();
        for (r, t) in other.facts() {
            out.insert(r, t.clone())?;
        }
        Ok(out)
    }

    /// Applies `f` to every value; facts collapse as sets.
    pub fn map_values(&self, mut f: impl FnMut(&Value) -> Value) -> Instance {
        let mut out = Instance::new(self.schema.clone());
        for (r, t) in self.facts() {
            let mapped: Tuple = t.iter().map(&mut f).collect();
            out.facts.entry(r.to_string()).or_default().insert(mapped);
        }
        out
    }

    pub fn check_same_schema(&self, other: &Instance) -> Result<()> {
        if self.schema.same_relations(&other.schema) {
            Ok(())
        } else {
            Err(MapError::SchemaMismatch(format!(
                "instances over {} and {}",
                self.schema.name(),
                other.schema.name()
            )))
        }
    }

    /// Renders the instance in instance-file syntax.
    pub fn to_file(&self, name: &str) -> String {
        let mut out = format!("instance {name} over {} {{\n", self.schema.name());
        for (r, t) in self.facts() {
            out.push_str("  ");
            out.push_str(&render_fact(r, t));
            out.push_str(".\n");
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn render_fact(rel: &str, tuple: &[Value]) -> String {
    let args: Vec<String> = tuple.iter().map(|v| FactValue(v).to_string()).collect();
    format!("{rel}({})", args.join(", "))
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let facts: Vec<String> = self.facts().map(|(r, t)| render_fact(r, t)).collect();
        write!(f, "{{{}}}", facts.join(", "))
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Arc<Schema> {
        Arc::new(Schema::of("S", &[("S", 2), ("T", 1)]).unwrap())
    }

    #[test]
    fn active_domain_examples() {
        let s = schema();
        assert!(Instance::new(s.clone()).active_domain().is_empty());

        let mut i = Instance::new(s.clone());
        i.insert("S", vec![Value::constant("1"), Value::constant("2")]).unwrap();
        let dom: Vec<_> = i.active_domain().into_iter().collect();
        assert_eq!(dom, vec![Value::constant("1"), Value::constant("2")]);

        let mut j = Instance::new(s);
        j.insert("S", vec![Value::constant("1"), Value::null("1")]).unwrap();
        j.insert("T", vec![Value::null("1")]).unwrap();
        let dom: Vec<_> = j.active_domain().into_iter().collect();
        assert_eq!(dom, vec![Value::constant("1"), Value::null("1")]);
        assert!(!j.is_ground());
    }

    #[test]
    fn arity_is_checked() {
        let mut i = Instance::new(schema());
        assert!(i.insert("S", vec![Value::constant("1")]).is_err());
        assert!(i.insert("U", vec![Value::constant("1")]).is_err());
    }

    #[test]
    fn equality_ignores_insertion_order() {
        let s = schema();
        let a = Instance::from_facts(
            s.clone(),
            [
                ("T".to_string(), vec![Value::constant("1")]),
                ("T".to_string(), vec![Value::constant("2")]),
            ],
        )
        .unwrap();
        let b = Instance::from_facts(
            s,
            [
                ("T".to_string(), vec![Value::constant("2")]),
                ("T".to_string(), vec![Value::constant("1")]),
                ("T".to_string(), vec![Value::constant("1")]),
            ],
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }
}
