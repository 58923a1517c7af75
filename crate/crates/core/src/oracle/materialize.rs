use std::collections::BTreeSet;
use std::sync::Arc;

use super::pool::{InstancePool, Mask};
use super::relation::{get_bit, set_bit, up_close, MappingRelation};
use crate::chase::chase;
use crate::error::{MapError, Result};
use crate::eval::satisfies;
use crate::lang::{vars_of, Atom, Body, Dependency, MappingSpec, Semantics, Term};
use crate::model::{has_homomorphism, Instance, Tuple, Value};

/// The pairs of pool members that belong to `spec` under its semantics.
pub fn materialize(spec: &MappingSpec, sp: &Arc<InstancePool>, tp: &Arc<InstancePool>) -> Result<MappingRelation> {
    check_pools(spec, sp, tp)?;
    match spec.semantics {
        Semantics::Standard => standard(spec, sp, tp),
        Semantics::Universal => universal(spec, sp, tp),
        Semantics::Extended => Ok(standard(spec, sp, tp)?.extend()),
    }
}

/// Standard-semantics materialization by a satisfaction check on every
/// pair, with no compiled triggers or canonical solutions involved.
///
/// Every supported body is upward closed in the target, so a target whose
/// one-fact-smaller subset is a solution is taken without a check.
pub fn materialize_by_satisfaction(
    spec: &MappingSpec,
    sp: &Arc<InstancePool>,
    tp: &Arc<InstancePool>,
) -> Result<MappingRelation> {
    check_pools(spec, sp, tp)?;
    MappingRelation::build(sp.clone(), tp.clone(), |i, row| {
        let inst = sp.instance(i);
        monotone_row(tp, row, |j| satisfies(spec, &inst, &tp.instance(j)))
    })
}

fn check_pools(spec: &MappingSpec, sp: &InstancePool, tp: &InstancePool) -> Result<()> {
    if !sp.schema().same_relations(&spec.source) || !tp.schema().same_relations(&spec.target) {
        return Err(MapError::SchemaMismatch(format!(
            "pools over {} and {} do not fit {} : {} -> {}",
            sp.schema().name(),
            tp.schema().name(),
            spec.name,
            spec.source.name(),
            spec.target.name()
        )));
    }
    Ok(())
}

fn monotone_row(tp: &InstancePool, row: &mut [u64], mut check: impl FnMut(Mask) -> Result<bool>) -> Result<()> {
    let k = tp.fact_count();
    for j in 0..tp.size() as Mask {
        let below = (0..k).any(|b| j >> b & 1 == 1 && get_bit(row, j & !(1 << b)));
        if below || check(j)? {
            set_bit(row, j);
        }
    }
    Ok(())
}

fn standard(spec: &MappingSpec, sp: &Arc<InstancePool>, tp: &Arc<InstancePool>) -> Result<MappingRelation> {
    match &spec.body {
        Body::Dependencies(ds) => {
            let triggers = compile_triggers(ds, sp, tp);
            MappingRelation::build(sp.clone(), tp.clone(), |i, row| {
                fill_from_triggers(&triggers, i, tp, row);
                Ok(())
            })
        }
        Body::SoTgd(so) if so.is_plain() => MappingRelation::build(sp.clone(), tp.clone(), |i, row| {
            let inst = sp.instance(i);
            let canonical = chase(spec, &inst)?.result;
            for m in canonical_images(&canonical, &inst, tp) {
                set_bit(row, m);
            }
            up_close(row, tp.fact_count());
            Ok(())
        }),
        Body::SoTgd(_) => materialize_by_satisfaction(spec, sp, tp),
    }
}

/// A premise match over the pool: when all `premise` facts are present,
/// one of the `alternatives` must be contained in the other side.
struct Trigger {
    premise: Mask,
    alternatives: Vec<Mask>,
}

fn compile_triggers(ds: &[Dependency], sp: &InstancePool, tp: &InstancePool) -> Vec<Trigger> {
    let mut out = Vec::new();
    for d in ds {
        let vars = vars_of(&d.premise);
        for_each_assignment(&vars, sp.values(), &mut |env| {
            let Some(premise) = ground(&d.premise, &vars, env, sp) else {
                return;
            };
            let mut alternatives = BTreeSet::new();
            for c in &d.conclusion {
                let mut all: Vec<String> = vars.clone();
                all.extend(c.exists.iter().cloned());
                for_each_assignment(&c.exists, tp.values(), &mut |ext| {
                    let full: Vec<Value> = env.iter().chain(ext).cloned().collect();
                    if let Some(m) = ground(&c.atoms, &all, &full, tp) {
                        alternatives.insert(m);
                    }
                });
            }
            let alternatives: Vec<Mask> = alternatives.iter().copied().filter(|&a| is_minimal(a, &alternatives)).collect();
            out.push(Trigger { premise, alternatives });
        });
    }
    out
}

fn is_minimal(a: Mask, all: &BTreeSet<Mask>) -> bool {
    !all.iter().any(|&b| b != a && b & !a == 0)
}

fn for_each_assignment(vars: &[String], values: &[Value], f: &mut dyn FnMut(&[Value])) {
    let mut env: Vec<Value> = Vec::with_capacity(vars.len());
    fn go(k: usize, n: usize, values: &[Value], env: &mut Vec<Value>, f: &mut dyn FnMut(&[Value])) {
        if k == n {
            f(env);
            return;
        }
        for v in values {
            env.push(v.clone());
            go(k + 1, n, values, env, f);
            env.pop();
        }
    }
    go(0, vars.len(), values, &mut env, f);
}

/// The fact mask of `atoms` under an assignment, or `None` when a built-in
/// atom fails or a fact falls outside the pool.
fn ground(atoms: &[Atom], vars: &[String], env: &[Value], pool: &InstancePool) -> Option<Mask> {
    let eval = |t: &Term| -> Option<Value> {
        match t {
            Term::Var(x) => vars.iter().position(|y| y == x).map(|k| env[k].clone()),
            Term::Const(c) => Some(c.clone()),
            Term::App(..) => None,
        }
    };
    let mut mask = 0;
    for a in atoms {
        match a {
            Atom::Rel { rel, args } => {
                let tuple: Tuple = args.iter().map(eval).collect::<Option<_>>()?;
                mask |= 1 << pool.fact_index(rel, &tuple)?;
            }
            Atom::Eq(s, t) => {
                if eval(s)? != eval(t)? {
                    return None;
                }
            }
            Atom::Neq(s, t) => {
                if eval(s)? == eval(t)? {
                    return None;
                }
            }
            Atom::IsConst(t) => {
                if !eval(t)?.is_const() {
                    return None;
                }
            }
        }
    }
    Some(mask)
}

fn fill_from_triggers(triggers: &[Trigger], i: Mask, tp: &InstancePool, row: &mut [u64]) {
    let mut active: Vec<&[Mask]> = triggers
        .iter()
        .filter(|t| t.premise & !i == 0)
        .map(|t| t.alternatives.as_slice())
        .collect();
    if active.iter().any(|alts| alts.is_empty()) {
        return;
    }
    active.sort();
    active.dedup();
    for j in 0..tp.size() as Mask {
        if active.iter().all(|alts| alts.iter().any(|&a| a & !j == 0)) {
            set_bit(row, j);
        }
    }
}

/// Masks of the images of `canonical` under every map of the nulls it
/// invents for `source` into the pool's values, skipping images that fall
/// outside the pool.
fn canonical_images(canonical: &Instance, source: &Instance, tp: &InstancePool) -> Vec<Mask> {
    let own = source.nulls();
    let nulls: Vec<Value> = canonical.nulls().into_iter().filter(|n| !own.contains(n)).collect();
    let values = tp.values();
    let mut out = Vec::new();
    let mut choice = vec![0usize; nulls.len()];
    if values.is_empty() && !nulls.is_empty() {
        return out;
    }
    loop {
        let img = canonical.map_values(|v| match nulls.iter().position(|n| n == v) {
            Some(k) => values[choice[k]].clone(),
            None => v.clone(),
        });
        if let Some(m) = tp.mask_of(&img) {
            out.push(m);
        }
        let mut advanced = false;
        for pos in (0..choice.len()).rev() {
            choice[pos] += 1;
            if choice[pos] < values.len() {
                advanced = true;
                break;
            }
            choice[pos] = 0;
        }
        if !advanced {
            break;
        }
    }
    out
}

/// `u(M)`: solutions that map homomorphically into the canonical solution.
fn universal(spec: &MappingSpec, sp: &Arc<InstancePool>, tp: &Arc<InstancePool>) -> Result<MappingRelation> {
    if let Some(ds) = spec.dependencies() {
        if !ds.iter().all(Dependency::is_st_tgd) {
            return Err(MapError::Unsupported(format!(
                "universal semantics needs st-tgds or an SO-tgd, {} has other dependencies",
                spec.name
            )));
        }
    }
    let std = standard(spec, sp, tp)?;
    MappingRelation::build(sp.clone(), tp.clone(), |i, row| {
        let canonical = chase(spec, &sp.instance(i))?.result;
        for j in std.targets(i) {
            if has_homomorphism(&tp.instance(j), &canonical) {
                set_bit(row, j);
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_mapping;

    fn pools(m: &MappingSpec, c: usize, n: usize) -> (Arc<InstancePool>, Arc<InstancePool>) {
        let none = BTreeSet::new();
        (
            Arc::new(InstancePool::numbered(m.source.clone(), c, 0, &none).unwrap()),
            Arc::new(InstancePool::numbered(m.target.clone(), c, n, &none).unwrap()),
        )
    }

    #[test]
    fn copy_mapping_on_one_constant() {
        let m = parse_mapping("schema S { S/1 } schema T { T/1 } map M : S -> T { S(x) -> T(x); }").unwrap();
        let (sp, tp) = pools(&m, 1, 0);
        let r = materialize(&m, &sp, &tp).unwrap();
        let pairs: Vec<_> = r.pairs().collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn empty_body_relates_everything() {
        let m = parse_mapping("schema S { S/1 } schema T { T/1 } map M : S -> T { }").unwrap();
        let (sp, tp) = pools(&m, 2, 1);
        let r = materialize(&m, &sp, &tp).unwrap();
        assert_eq!(r, MappingRelation::full(sp, tp));
    }

    #[test]
    fn universal_solutions_of_a_projection() {
        let m = parse_mapping("schema S { S/2 } schema T { T/1 } map M : S -> T { S(x, y) -> T(x); }").unwrap();
        let (sp, tp) = pools(&m, 2, 1);
        let u = materialize(&m.clone().with_semantics(Semantics::Universal), &sp, &tp).unwrap();
        let i = sp.fact_index("S", &[Value::constant("1"), Value::constant("2")]).unwrap();
        let t1 = tp.fact_index("T", &[Value::constant("1")]).unwrap();
        let t2 = tp.fact_index("T", &[Value::constant("2")]).unwrap();
        assert!(u.contains(1 << i, 1 << t1));
        assert!(!u.contains(1 << i, 1 << t1 | 1 << t2));
    }

    #[test]
    fn compiled_triggers_agree_with_satisfaction() {
        let texts = [
            "schema S { S/2 } schema T { T/2, U/1 } map M : S -> T { S(x, y) -> exists z . T(x, z) & U(z); S(x, x) -> U(x); }",
            "schema T { T/1 } schema S { S/2 } map M : T -> S { T(x) & C(x) -> exists y . S(x, y) | S(x, x); }",
            "schema S { S/1, R/1 } schema T { T/1 } map M : S -> T { S(x) & R(y) & x != y -> T(x); R(x) -> false; }",
        ];
        for text in texts {
            let m = parse_mapping(text).unwrap();
            let (sp, tp) = pools(&m, 2, 1);
            let a = materialize(&m, &sp, &tp).unwrap();
            let b = materialize_by_satisfaction(&m, &sp, &tp).unwrap();
            assert_eq!(a.first_difference(&b), None, "{text}");
        }
    }

    #[test]
    fn canonical_images_agree_with_satisfaction_for_plain_so_tgds() {
        let m = parse_mapping(
            "functions g/1
             schema R1 { Takes/2 } schema R3 { Enrollment/2 }
             map M : R1 -> R3 exists g { Takes(n, c) -> Enrollment(g(n), c); }",
        )
        .unwrap();
        let (sp, tp) = pools(&m, 2, 1);
        let a = materialize(&m, &sp, &tp).unwrap();
        let b = materialize_by_satisfaction(&m, &sp, &tp).unwrap();
        assert_eq!(a.first_difference(&b), None);
    }
}
