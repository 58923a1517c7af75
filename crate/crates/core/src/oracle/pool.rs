use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::error::{MapError, Result};
use crate::model::{Instance, Schema, Tuple, Value};

/// An instance of a pool, as a bit set over the pool's fact universe.
pub type Mask = u64;

/// Largest fact universe a pool may have.
pub const MAX_POOL_FACTS: usize = 24;

/// Every instance of a schema over a fixed finite set of values.
///
/// Facts are numbered relation by relation in schema order, tuples in
/// lexicographic order of value positions; instance `m` holds fact `k` iff
/// bit `k` of `m` is set. Enumeration order is the numeric order of masks.
#[derive(Debug, Clone)]
pub struct InstancePool {
    schema: Arc<Schema>,
    constants: Vec<Value>,
    nulls: Vec<Value>,
    values: Vec<Value>,
    facts: Vec<(String, Tuple)>,
    index: HashMap<(String, Tuple), usize>,
}

impl PartialEq for InstancePool {
    fn eq(&self, other: &Self) -> bool {
        self.schema.same_relations(&other.schema) && self.values == other.values
    }
}

impl Eq for InstancePool {}

impl InstancePool {
    pub fn new(schema: Arc<Schema>, constants: Vec<Value>, nulls: Vec<Value>) -> Result<Self> {
        if constants.iter().any(Value::is_null) || nulls.iter().any(Value::is_const) {
            return Err(MapError::Pool("pool constants and nulls are mixed up".into()));
        }
        let values: Vec<Value> = constants.iter().chain(&nulls).cloned().collect();
        let distinct: BTreeSet<&Value> = values.iter().collect();
        if distinct.len() != values.len() {
            return Err(MapError::Pool("pool values repeat".into()));
        }
        let mut count = 0usize;
        for r in schema.relations() {
            count = count.saturating_add(values.len().saturating_pow(r.arity as u32));
        }
        if count > MAX_POOL_FACTS {
            return Err(MapError::Pool(format!(
                "pool over {} with {} values has {count} facts, at most {MAX_POOL_FACTS} are supported",
                schema.name(),
                values.len()
            )));
        }
        let mut facts = Vec::with_capacity(count);
        for r in schema.relations() {
            let mut idx = vec![0usize; r.arity];
            loop {
                facts.push((r.name.clone(), idx.iter().map(|&k| values[k].clone()).collect()));
                if !advance(&mut idx, values.len()) {
                    break;
                }
            }
        }
        let index = facts.iter().enumerate().map(|(k, f)| (f.clone(), k)).collect();
        Ok(InstancePool {
            schema,
            constants,
            nulls,
            values,
            facts,
            index,
        })
    }

    /// Constants `1..=constants` plus `extra`, and nulls `n1..=nulls`.
    pub fn numbered(schema: Arc<Schema>, constants: usize, nulls: usize, extra: &BTreeSet<Value>) -> Result<Self> {
        let mut cs: Vec<Value> = (1..=constants).map(|k| Value::constant(k.to_string())).collect();
        for c in extra {
            if c.is_const() && !cs.contains(c) {
                cs.push(c.clone());
            }
        }
        let ns = (1..=nulls).map(|k| Value::null(format!("n{k}"))).collect();
        InstancePool::new(schema, cs, ns)
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn constants(&self) -> &[Value] {
        &self.constants
    }

    pub fn nulls(&self) -> &[Value] {
        &self.nulls
    }

    /// Constants first, then nulls.
    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn is_ground(&self) -> bool {
        self.nulls.is_empty()
    }

    pub fn facts(&self) -> &[(String, Tuple)] {
        &self.facts
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    /// Number of instances in the pool.
    pub fn size(&self) -> usize {
        1usize << self.facts.len()
    }

    pub fn fact_index(&self, rel: &str, tuple: &[Value]) -> Option<usize> {
        self.index.get(&(rel.to_string(), tuple.to_vec())).copied()
    }

    pub fn instance(&self, mask: Mask) -> Instance {
        let mut inst = Instance::new(self.schema.clone());
        for (k, (rel, tuple)) in self.facts.iter().enumerate() {
            if mask >> k & 1 == 1 {
                inst.insert(rel, tuple.clone()).expect("pool facts fit the schema");
            }
        }
        inst
    }

    /// The mask of `inst`, or `None` when it uses values outside the pool.
    pub fn mask_of(&self, inst: &Instance) -> Option<Mask> {
        let mut m = 0;
        for (rel, tuple) in inst.facts() {
            m |= 1 << self.fact_index(rel, tuple)?;
        }
        Some(m)
    }

    pub fn members(&self) -> impl Iterator<Item = Instance> + '_ {
        (0..self.size() as Mask).map(|m| self.instance(m))
    }

    /// For every map from the pool's nulls to its values, the induced map
    /// on fact indices. The identity comes first.
    pub fn null_maps(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut choice: Vec<usize> = (0..self.nulls.len()).map(|k| self.constants.len() + k).collect();
        let start = choice.clone();
        loop {
            out.push(self.fact_map(|v| match self.nulls.iter().position(|n| n == v) {
                Some(k) => self.values[choice[k]].clone(),
                None => v.clone(),
            }));
            if !advance(&mut choice, self.values.len()) {
                choice.iter_mut().for_each(|c| *c = 0);
            }
            if choice == start {
                break;
            }
        }
        out
    }

    fn fact_map(&self, f: impl Fn(&Value) -> Value) -> Vec<usize> {
        self.facts
            .iter()
            .map(|(rel, tuple)| {
                let image: Tuple = tuple.iter().map(&f).collect();
                self.index[&(rel.clone(), image)]
            })
            .collect()
    }
}

/// The image of `mask` under a map of fact indices.
pub fn image(map: &[usize], mask: Mask) -> Mask {
    let mut out = 0;
    let mut rest = mask;
    while rest != 0 {
        let k = rest.trailing_zeros() as usize;
        out |= 1 << map[k];
        rest &= rest - 1;
    }
    out
}

/// Odometer step over `0..base` per position; false after the last tuple.
fn advance(idx: &mut [usize], base: usize) -> bool {
    for pos in (0..idx.len()).rev() {
        idx[pos] += 1;
        if idx[pos] < base {
            return true;
        }
        idx[pos] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_facts_and_masks() {
        let s = Arc::new(Schema::of("S", &[("S", 2), ("R", 1)]).unwrap());
        let p = InstancePool::numbered(s.clone(), 2, 0, &BTreeSet::new()).unwrap();
        assert_eq!(p.fact_count(), 6);
        assert_eq!(p.size(), 64);
        let i = p.instance(0b100010);
        assert_eq!(i.to_string(), "{R(2), S(1, 2)}");
        assert_eq!(p.mask_of(&i), Some(0b100010));
        let too_big = InstancePool::numbered(s, 3, 2, &BTreeSet::new());
        assert!(matches!(too_big, Err(MapError::Pool(_))));
    }

    #[test]
    fn null_maps_cover_every_assignment() {
        let s = Arc::new(Schema::of("S", &[("S", 1)]).unwrap());
        let p = InstancePool::numbered(s, 1, 2, &BTreeSet::new()).unwrap();
        let maps = p.null_maps();
        assert_eq!(maps.len(), 9);
        assert_eq!(maps[0], vec![0, 1, 2]);
        let distinct: BTreeSet<_> = maps.iter().collect();
        assert_eq!(distinct.len(), 9);
    }
}
