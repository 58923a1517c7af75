//! Query evaluation, dependency satisfaction and certain answers.
//!
//! Equality and inequality compare values by labeled identity: a null only
//! equals itself. Certain-answer semantics is applied on top, in
//! [`certain_answers_st`].

mod pattern;
mod so;

use std::collections::BTreeSet;
use std::sync::Arc;

pub(crate) use pattern::Pattern;
pub use so::{satisfies_so_tgd, solve_so_tgd, FunctionTables};

use crate::chase::chase;
use crate::error::{MapError, Result};
use crate::lang::{validate_query, Body, Dependency, Fragment, MappingSpec, Query};
use crate::model::{Instance, Schema, Tuple};

fn check_query(q: &Query, schema: &Schema) -> Result<()> {
    match validate_query(q, schema).into_iter().next() {
        Some(v) => Err(MapError::SchemaMismatch(format!(
            "query {} over schema {}: {v}",
            q.name,
            schema.name()
        ))),
        None => Ok(()),
    }
}

/// All tuples of free-variable values with a satisfying assignment.
pub fn eval_query(q: &Query, inst: &Instance) -> Result<BTreeSet<Tuple>> {
    Ok(CompiledQuery::new(q, inst.schema())?.eval(inst))
}

/// A query validated against a schema and compiled for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct CompiledQuery {
    name: String,
    schema: Arc<Schema>,
    fragment: Fragment,
    /// Per disjunct, its pattern and the indices of the free variables.
    disjuncts: Vec<(Pattern, Vec<usize>)>,
}

impl CompiledQuery {
    pub fn new(q: &Query, schema: &Arc<Schema>) -> Result<Self> {
        check_query(q, schema)?;
        let disjuncts = q
            .disjuncts
            .iter()
            .map(|d| {
                let pat = Pattern::compile_merged(&d.atoms);
                let idx = q.free.iter().map(|x| pat.index(x).expect("safe query")).collect();
                (pat, idx)
            })
            .collect();
        Ok(CompiledQuery {
            name: q.name.clone(),
            schema: schema.clone(),
            fragment: q.fragment(),
            disjuncts,
        })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    /// Answers on an instance over the schema the query was compiled for.
    pub fn eval(&self, inst: &Instance) -> BTreeSet<Tuple> {
        let mut out = BTreeSet::new();
        let mut tuple: Tuple = Vec::new();
        for (pat, idx) in &self.disjuncts {
            pat.run(inst, &[], &mut |b| {
                tuple.clear();
                tuple.extend(idx.iter().map(|&i| b[i].clone()));
                if !out.contains(&tuple) {
                    out.insert(tuple.clone());
                }
                false
            });
        }
        out
    }
}

/// A first-order dependency compiled for satisfaction checks.
pub(crate) struct CompiledDependency {
    pub premise: Pattern,
    /// Per disjunct, a pattern whose prebound variables are the premise's.
    pub disjuncts: Vec<Pattern>,
}

impl CompiledDependency {
    pub fn new(d: &Dependency) -> Self {
        let premise = Pattern::compile(&d.premise, &[]);
        let universals = premise.vars().to_vec();
        let disjuncts = d
            .conclusion
            .iter()
            .map(|c| Pattern::compile(&c.atoms, &universals))
            .collect();
        CompiledDependency { premise, disjuncts }
    }

    pub fn holds(&self, premise_side: &Instance, conclusion_side: &Instance) -> bool {
        !self.premise.run(premise_side, &[], &mut |b| {
            // stop on the first trigger that has no witness
            !self.disjuncts.iter().any(|p| p.exists(conclusion_side, b))
        })
    }
}

/// Whether every premise match in `premise_side` extends to a witness of
/// some conclusion disjunct in `conclusion_side`.
pub fn satisfies_dependency(premise_side: &Instance, conclusion_side: &Instance, d: &Dependency) -> bool {
    CompiledDependency::new(d).holds(premise_side, conclusion_side)
}

fn check_pair(spec: &MappingSpec, i: &Instance, j: &Instance) -> Result<()> {
    if !i.schema().same_relations(&spec.source) {
        return Err(MapError::SchemaMismatch(format!(
            "instance over {} given as source of {}",
            i.schema().name(),
            spec.name
        )));
    }
    if !j.schema().same_relations(&spec.target) {
        return Err(MapError::SchemaMismatch(format!(
            "instance over {} given as target of {}",
            j.schema().name(),
            spec.name
        )));
    }
    Ok(())
}

/// Whether `(i, j)` satisfies the body of `spec` (standard semantics).
pub fn satisfies(spec: &MappingSpec, i: &Instance, j: &Instance) -> Result<bool> {
    check_pair(spec, i, j)?;
    Ok(match &spec.body {
        Body::Dependencies(ds) => ds.iter().all(|d| satisfies_dependency(i, j, d)),
        Body::SoTgd(s) => satisfies_so_tgd(i, j, s),
    })
}

/// Certain answers of a union of conjunctive queries under st-tgds,
/// read off the canonical universal solution.
pub fn certain_answers_st(spec: &MappingSpec, q: &Query, i: &Instance) -> Result<BTreeSet<Tuple>> {
    let compiled = CompiledQuery::new(q, &spec.target)?;
    let mut all = certain_answers_st_all(spec, std::slice::from_ref(&compiled), i)?;
    Ok(all.pop().expect("one query"))
}

/// Certain answers of several compiled target queries over one source
/// instance, chasing it once.
pub fn certain_answers_st_all(spec: &MappingSpec, qs: &[CompiledQuery], i: &Instance) -> Result<Vec<BTreeSet<Tuple>>> {
    spec.st_tgds()?;
    for q in qs {
        if q.fragment.neq || q.fragment.cpred {
            return Err(MapError::Unsupported(format!(
                "certain answers need a union of conjunctive queries, {} is {}",
                q.name, q.fragment
            )));
        }
        if !q.schema.same_relations(&spec.target) {
            return Err(MapError::SchemaMismatch(format!("query {} is not over {}", q.name, spec.target.name())));
        }
    }
    if !i.is_ground() {
        return Err(MapError::Unsupported("certain answers need a ground source instance".into()));
    }
    if !i.schema().same_relations(&spec.source) {
        return Err(MapError::SchemaMismatch(format!("instance is not over {}", spec.source.name())));
    }
    let canonical = chase(spec, i)?.result;
    Ok(qs
        .iter()
        .map(|q| q.eval(&canonical).into_iter().filter(|t| t.iter().all(|v| v.is_const())).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_dependency, parse_instance, parse_mapping, parse_query, Direction};
    use crate::model::Value;
    use std::sync::Arc;

    fn st() -> (Arc<Schema>, Arc<Schema>) {
        (
            Arc::new(Schema::of("S", &[("S", 2)]).unwrap()),
            Arc::new(Schema::of("T", &[("T", 1)]).unwrap()),
        )
    }

    fn c(s: &str) -> Value {
        Value::constant(s)
    }

    #[test]
    fn query_examples() {
        let t = Arc::new(Schema::of("T", &[("T", 1), ("S", 2)]).unwrap());
        let i = parse_instance("instance I over T { T(1). T(?n1). S(1,2). S(1,3). }", &[t.clone()]).unwrap();
        let q = parse_query("query Q(x) over T { T(x) }", &[t.clone()]).unwrap();
        assert_eq!(eval_query(&q, &i).unwrap().len(), 2);
        let q = parse_query("query Q(x) over T { T(x) & C(x) }", &[t.clone()]).unwrap();
        assert_eq!(eval_query(&q, &i).unwrap(), BTreeSet::from([vec![c("1")]]));
        let q = parse_query("query Q(x) over T { exists y . S(x, y) }", &[t]).unwrap();
        assert_eq!(eval_query(&q, &i).unwrap(), BTreeSet::from([vec![c("1")]]));
    }

    #[test]
    fn dependency_examples() {
        let (s, t) = st();
        let d = parse_dependency("S(x,y) -> T(x)", &s, &t, Direction::SourceToTarget).unwrap();
        let i = parse_instance("instance I over S { S(1,2). }", &[s.clone()]).unwrap();
        let j = parse_instance("instance J over T { T(1). }", &[t.clone()]).unwrap();
        assert!(satisfies_dependency(&i, &j, &d));
        assert!(!satisfies_dependency(&i, &Instance::new(t), &d));
    }

    #[test]
    fn ts_dependency_with_path() {
        let m = parse_mapping(
            "schema S { E/2 } schema T { F/2, M/1 }
             map Inv : T -> S { F(x,y) -> exists u . E(x,u) & E(u,y); }",
        )
        .unwrap();
        let j = parse_instance("instance J over T { F(1,3). M(2). }", &[m.source.clone()]).unwrap();
        let i = parse_instance("instance I over S { E(1,2). E(2,3). }", &[m.target.clone()]).unwrap();
        assert!(satisfies(&m, &j, &i).unwrap());
    }

    #[test]
    fn so_tgd_examples() {
        let m = parse_mapping(
            "functions g/1
             schema R1 { Takes/2 } schema R3 { Enrollment/2 }
             map M13 : R1 -> R3 exists g { Takes(n, c) -> Enrollment(g(n), c); }",
        )
        .unwrap();
        let so = m.so_tgd().unwrap();
        let i = parse_instance("instance I over R1 { Takes(Chris, logic). }", &[m.source.clone()]).unwrap();
        let j1 = parse_instance("instance J over R3 { Enrollment(075, logic). }", &[m.target.clone()]).unwrap();
        let w = solve_so_tgd(&i, &j1, so).unwrap();
        assert_eq!(w.get("g", &[c("Chris")]), Some(&c("075")));
        let j2 = parse_instance("instance J over R3 { Enrollment(075, algebra). }", &[m.target.clone()]).unwrap();
        assert!(!satisfies_so_tgd(&i, &j2, so));
        assert!(satisfies_so_tgd(&Instance::new(m.source.clone()), &j2, so));
    }

    #[test]
    fn so_tgd_equalities_can_be_falsified() {
        let m = parse_mapping(
            "functions f/1
             schema R1 { Emp/1 } schema R3 { Mgr/2, SelfMgr/1 }
             map M13 : R1 -> R3 exists f {
               Emp(e) -> Mgr(e, f(e));
               Emp(e) & e = f(e) -> SelfMgr(e);
             }",
        )
        .unwrap();
        let so = m.so_tgd().unwrap();
        let i = parse_instance("instance I over R1 { Emp(1). }", &[m.source.clone()]).unwrap();
        let t = [m.target.clone()];
        let self_loop = parse_instance("instance J over R3 { Mgr(1, 1). }", &t).unwrap();
        assert!(!satisfies_so_tgd(&i, &self_loop, so));
        let with_self = parse_instance("instance J over R3 { Mgr(1, 1). SelfMgr(1). }", &t).unwrap();
        assert!(satisfies_so_tgd(&i, &with_self, so));
        let other = parse_instance("instance J over R3 { Mgr(1, 2). }", &t).unwrap();
        assert!(satisfies_so_tgd(&i, &other, so));
        let both = parse_instance("instance J over R3 { Mgr(1, 2). Mgr(1, 1). }", &t).unwrap();
        assert!(satisfies_so_tgd(&i, &both, so));
    }

    #[test]
    fn certain_answer_examples() {
        let (s, t) = st();
        let m = parse_mapping("schema S { S/2 } schema T { T/1 } map M : S -> T { S(x,y) -> T(x); }").unwrap();
        let i = parse_instance("instance I over S { S(1,2). }", &[s.clone()]).unwrap();
        let q = parse_query("query Q(x) over T { T(x) }", &[t.clone()]).unwrap();
        assert_eq!(certain_answers_st(&m, &q, &i).unwrap(), BTreeSet::from([vec![c("1")]]));
        assert!(certain_answers_st(&m, &q, &Instance::new(s)).unwrap().is_empty());
    }
}
