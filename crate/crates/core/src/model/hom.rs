use std::collections::{BTreeMap, HashMap};

use crate::error::Result;
use crate::model::{Instance, Tuple, Value};

/// A value mapping that fixes every constant.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Homomorphism {
    map: BTreeMap<Value, Value>,
}

impl Homomorphism {
    pub fn identity_on(inst: &Instance) -> Self {
        Homomorphism {
            map: inst.active_domain().into_iter().map(|v| (v.clone(), v)).collect(),
        }
    }

    pub fn from_map(map: BTreeMap<Value, Value>) -> Self {
        Homomorphism { map }
    }

    /// Values outside the explicit domain are mapped to themselves.
    pub fn apply(&self, v: &Value) -> Value {
        self.map.get(v).cloned().unwrap_or_else(|| v.clone())
    }

    pub fn mapping(&self) -> &BTreeMap<Value, Value> {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(k, v)| k == v)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Homomorphism) -> Homomorphism {
        Homomorphism {
            map: self.map.iter().map(|(k, v)| (k.clone(), next.apply(v))).collect(),
        }
    }

    /// Checks both homomorphism conditions for `from -> to`.
    pub fn is_valid(&self, from: &Instance, to: &Instance) -> bool {
        self.map.iter().all(|(k, v)| !k.is_const() || k == v)
            && from.facts().all(|(r, t)| {
                let image: Tuple = t.iter().map(|v| self.apply(v)).collect();
                to.contains(r, &image)
            })
    }
}

/// Searches for a homomorphism `from -> to`.
///
/// Backtracking over the facts of `from` that mention nulls, always
/// extending the fact with the fewest consistent images next.
pub fn find_homomorphism(from: &Instance, to: &Instance) -> Result<Option<Homomorphism>> {
    from.check_same_schema(to)?;
    Ok(search(from, to))
}

pub fn hom_equivalent(a: &Instance, b: &Instance) -> Result<bool> {
    Ok(find_homomorphism(a, b)?.is_some() && find_homomorphism(b, a)?.is_some())
}

/// Whether some homomorphism exists; skips building the witness.
pub(crate) fn has_homomorphism(from: &Instance, to: &Instance) -> bool {
    search(from, to).is_some()
}

fn search(from: &Instance, to: &Instance) -> Option<Homomorphism> {
    let mut open: Vec<(&str, &Tuple)> = Vec::new();
    for (r, t) in from.facts() {
        if t.iter().all(Value::is_const) {
            if !to.contains(r, t) {
                return None;
            }
        } else {
            open.push((r, t));
        }
    }
    let mut assignment: HashMap<Value, Value> = HashMap::new();
    if !extend(&mut open, to, &mut assignment) {
        return None;
    }
    let mut map: BTreeMap<Value, Value> = from
        .active_domain()
        .into_iter()
        .filter(Value::is_const)
        .map(|c| (c.clone(), c))
        .collect();
    map.extend(assignment);
    Some(Homomorphism { map })
}

fn consistent(pattern: &[Value], image: &[Value], assignment: &HashMap<Value, Value>) -> bool {
    let mut local: Vec<(&Value, &Value)> = Vec::new();
    for (p, v) in pattern.iter().zip(image) {
        if p.is_const() {
            if p != v {
                return false;
            }
        } else if let Some(bound) = assignment.get(p) {
            if bound != v {
                return false;
            }
        } else if let Some((_, prev)) = local.iter().find(|(q, _)| *q == p) {
            if *prev != v {
                return false;
            }
        } else {
            local.push((p, v));
        }
    }
    true
}

fn extend(open: &mut Vec<(&str, &Tuple)>, to: &Instance, assignment: &mut HashMap<Value, Value>) -> bool {
    if open.is_empty() {
        return true;
    }
    // most constrained fact first
    let mut best: Option<(usize, usize)> = None;
    for (i, (r, t)) in open.iter().enumerate() {
        let n = to.tuples(r).filter(|img| consistent(t, img, assignment)).count();
        if n == 0 {
            return false;
        }
        if best.is_none_or(|(_, m)| n < m) {
            best = Some((i, n));
        }
    }
    let (idx, _) = best.expect("open is non-empty");
    let (rel, pattern) = open.swap_remove(idx);
    let candidates: Vec<&Tuple> = to
        .tuples(rel)
        .filter(|img| consistent(pattern, img, assignment))
        .collect();
    for img in candidates {
        let mut added = Vec::new();
        for (p, v) in pattern.iter().zip(img.iter()) {
            if p.is_null() && !assignment.contains_key(p) {
                assignment.insert(p.clone(), v.clone());
                added.push(p.clone());
            }
        }
        if extend(open, to, assignment) {
            return true;
        }
        for p in added {
            assignment.remove(&p);
        }
    }
    open.push((rel, pattern));
    let last = open.len() - 1;
    open.swap(idx, last);
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Schema;
    use std::sync::Arc;

    fn c(s: &str) -> Value {
        Value::constant(s)
    }
    fn n(s: &str) -> Value {
        Value::null(s)
    }

    fn inst(facts: &[(&str, Vec<Value>)]) -> Instance {
        let schema = Arc::new(Schema::of("R", &[("S", 2), ("T", 1)]).unwrap());
        Instance::from_facts(schema, facts.iter().map(|(r, t)| (r.to_string(), t.clone()))).unwrap()
    }

    #[test]
    fn identity_on_equal_instances() {
        let i = inst(&[("T", vec![c("1")])]);
        let h = find_homomorphism(&i, &i).unwrap().unwrap();
        assert!(h.is_identity());
    }

    #[test]
    fn null_maps_to_constant() {
        let h = find_homomorphism(&inst(&[("T", vec![n("1")])]), &inst(&[("T", vec![c("1")])]))
            .unwrap()
            .unwrap();
        assert_eq!(h.apply(&n("1")), c("1"));
    }

    #[test]
    fn constants_are_fixed() {
        let from = inst(&[("S", vec![c("1"), n("1")])]);
        let to = inst(&[("S", vec![c("2"), c("3")])]);
        assert!(find_homomorphism(&from, &to).unwrap().is_none());
    }

    #[test]
    fn equivalence_examples() {
        assert!(hom_equivalent(&inst(&[("T", vec![n("1")])]), &inst(&[("T", vec![n("2")])])).unwrap());
        // {T(1)} and {T(⊥1), T(1)}: ⊥1 ↦ 1 one way, identity the other
        let a = inst(&[("T", vec![c("1")])]);
        let b = inst(&[("T", vec![n("1")]), ("T", vec![c("1")])]);
        let ab = find_homomorphism(&a, &b).unwrap().unwrap();
        let ba = find_homomorphism(&b, &a).unwrap().unwrap();
        assert!(ab.is_valid(&a, &b));
        assert_eq!(ba.apply(&n("1")), c("1"));
        assert!(!hom_equivalent(&inst(&[("T", vec![c("1")])]), &inst(&[("T", vec![c("2")])])).unwrap());
    }

    #[test]
    fn repeated_nulls_must_agree() {
        let from = inst(&[("S", vec![n("1"), n("1")])]);
        let to = inst(&[("S", vec![c("1"), c("2")])]);
        assert!(find_homomorphism(&from, &to).unwrap().is_none());
        let to = inst(&[("S", vec![c("1"), c("2")]), ("S", vec![c("2"), c("2")])]);
        assert!(find_homomorphism(&from, &to).unwrap().is_some());
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let other = Instance::new(Arc::new(Schema::of("X", &[("U", 1)]).unwrap()));
        assert!(find_homomorphism(&inst(&[]), &other).is_err());
    }
}
