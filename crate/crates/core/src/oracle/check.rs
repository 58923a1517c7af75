use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::cq::conjunctive_queries;
use super::materialize::materialize;
use super::pool::{InstancePool, Mask};
use super::relation::{get_bit, MappingRelation};
use crate::chase::{chase, data_exchange_equivalent, sol_subseteq};
use crate::compose::formula_constants;
use crate::error::{MapError, Result};
use crate::eval::eval_query;
use crate::lang::{print_query, Body, MappingSpec, Query, Semantics};
use crate::model::{Instance, Tuple, Value};

/// Pool sizes used by the checkers.
///
/// Source pools are ground except under the extended semantics; target
/// pools get `nulls` nulls. Both also contain every constant written in
/// the mappings involved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolConfig {
    pub constants: usize,
    pub nulls: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig { constants: 2, nulls: 2 }
    }
}

/// A witness against a checked property, printable in instance-file syntax.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub reason: String,
    pub instances: Vec<(String, Instance)>,
    pub query: Option<Query>,
    pub tuple: Option<Tuple>,
}

impl Counterexample {
    fn new(reason: impl Into<String>, instances: Vec<(&str, Instance)>) -> Self {
        Counterexample {
            reason: reason.into(),
            instances: instances.into_iter().map(|(n, i)| (n.to_string(), i)).collect(),
            query: None,
            tuple: None,
        }
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "// {}", self.reason)?;
        for (name, inst) in &self.instances {
            write!(f, "{}", inst.to_file(name))?;
        }
        if let Some(q) = &self.query {
            writeln!(f, "{}", print_query(q).trim_end())?;
        }
        if let Some(t) = &self.tuple {
            let vals: Vec<String> = t.iter().map(|v| crate::model::FactValue(v).to_string()).collect();
            writeln!(f, "// tuple ({})", vals.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// The property holds on the pools.
    Pass,
    Fail(Counterexample),
    /// The checker's precondition does not hold on the pools.
    Inapplicable(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }

    pub fn is_inapplicable(&self) -> bool {
        matches!(self, Verdict::Inapplicable(_))
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::Fail(c) => Some(c),
            _ => None,
        }
    }

    /// Same outcome, ignoring the witness.
    pub fn same_outcome(&self, other: &Verdict) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => writeln!(f, "pass"),
            Verdict::Fail(c) => write!(f, "fail\n{c}"),
            Verdict::Inapplicable(why) => writeln!(f, "inapplicable: {why}"),
        }
    }
}

/// Source and target pools for a mapping and a candidate reverse mapping.
pub fn pools_for(
    m: &MappingSpec,
    m2: Option<&MappingSpec>,
    cfg: PoolConfig,
) -> Result<(Arc<InstancePool>, Arc<InstancePool>)> {
    let mut extra = formula_constants(m);
    if let Some(m2) = m2 {
        if !m2.source.same_relations(&m.target) || !m2.target.same_relations(&m.source) {
            return Err(MapError::SchemaMismatch(format!(
                "{} : {} -> {} does not reverse {} : {} -> {}",
                m2.name,
                m2.source.name(),
                m2.target.name(),
                m.name,
                m.source.name(),
                m.target.name()
            )));
        }
        extra.extend(formula_constants(m2));
    }
    let source_nulls = if m.semantics == Semantics::Extended { cfg.nulls } else { 0 };
    let sp = InstancePool::numbered(m.source.clone(), cfg.constants, source_nulls, &extra)?;
    let tp = InstancePool::numbered(m.target.clone(), cfg.constants, cfg.nulls, &extra)?;
    Ok((Arc::new(sp), Arc::new(tp)))
}

fn materialize_pair(
    m: &MappingSpec,
    m2: &MappingSpec,
    cfg: PoolConfig,
) -> Result<(MappingRelation, MappingRelation)> {
    let (sp, tp) = pools_for(m, Some(m2), cfg)?;
    Ok((materialize(m, &sp, &tp)?, materialize(m2, &tp, &sp)?))
}

/// Whether solutions of `m` are closed under homomorphisms and contain a
/// canonical solution, so that `sol_subseteq` decides containment.
fn exact_containment(m: &MappingSpec) -> bool {
    m.semantics == Semantics::Standard
        && match &m.body {
            Body::Dependencies(_) => m.is_st_tgd_mapping(),
            Body::SoTgd(s) => s.is_plain(),
        }
}

/// `(I, I) ∈ M ∘ M'` for every pool member `I` with a solution.
pub fn check_recovery(m: &MappingSpec, m2: &MappingSpec, cfg: PoolConfig) -> Result<Verdict> {
    let (r, r2) = materialize_pair(m, m2, cfg)?;
    recovery_on(&r, &r2)
}

pub fn recovery_on(r: &MappingRelation, r2: &MappingRelation) -> Result<Verdict> {
    let comp = r.compose(r2)?;
    for i in 0..r.source().size() as Mask {
        if r.in_domain(i) && !comp.contains(i, i) {
            return Ok(Verdict::Fail(Counterexample::new(
                "I has a solution but (I, I) is not in the composition",
                vec![("I", r.source().instance(i))],
            )));
        }
    }
    Ok(Verdict::Pass)
}

/// A recovery such that `Sol(I2) ⊆ Sol(I1)` for every `(I1, I2)` of the
/// composition. Containment is decided by the chase when `m` is given by
/// st-tgds or a plain SO-tgd, and by comparing pool rows otherwise.
pub fn check_max_recovery(m: &MappingSpec, m2: &MappingSpec, cfg: PoolConfig) -> Result<Verdict> {
    let (r, r2) = materialize_pair(m, m2, cfg)?;
    if exact_containment(m) {
        let sp = r.source().clone();
        max_recovery_on(&r, &r2, &|i2, i1| sol_subseteq(m, &sp.instance(i2), &sp.instance(i1)))
    } else {
        max_recovery_on(&r, &r2, &|i2, i1| Ok(r.row_subset(i2, i1)))
    }
}

/// The maximum-recovery test on materialized relations, with `contained(a,
/// b)` deciding `Sol(a) ⊆ Sol(b)`. A relation that is not total on its
/// source pool is reported as inapplicable.
pub fn max_recovery_on(
    r: &MappingRelation,
    r2: &MappingRelation,
    contained: &(dyn Fn(Mask, Mask) -> Result<bool> + Sync),
) -> Result<Verdict> {
    if let Some(i) = (0..r.source().size() as Mask).find(|&i| !r.in_domain(i)) {
        return Ok(Verdict::Inapplicable(format!(
            "the mapping is not total on the pool: {} has no solution",
            r.source().instance(i)
        )));
    }
    let recovery = recovery_on(r, r2)?;
    if !recovery.is_pass() {
        return Ok(recovery);
    }
    let comp = r.compose(r2)?;
    let pairs: Vec<(Mask, Mask)> = comp.pairs().filter(|(a, b)| a != b).collect();
    let bad = pairs
        .par_iter()
        .map(|&(i1, i2)| contained(i2, i1).map(|ok| (i1, i2, ok)))
        .find_first(|res| !matches!(res, Ok((_, _, true))));
    match bad {
        None => Ok(Verdict::Pass),
        Some(Err(e)) => Err(e),
        Some(Ok((i1, i2, _))) => Ok(Verdict::Fail(Counterexample::new(
            "(I1, I2) is in the composition but Sol(I2) is not contained in Sol(I1)",
            vec![("I1", r.source().instance(i1)), ("I2", r.source().instance(i2))],
        ))),
    }
}

/// `M ∘ M'` equals `{(I1, I2) | I1 ⊆ I2}` on the pools; the least
/// differing pair is reported.
pub fn check_fagin_inverse(m: &MappingSpec, m2: &MappingSpec, cfg: PoolConfig) -> Result<Verdict> {
    let (r, r2) = materialize_pair(m, m2, cfg)?;
    let comp = r.compose(&r2)?;
    let bar = MappingRelation::id_bar(r.source().clone());
    Ok(match comp.first_difference(&bar) {
        None => Verdict::Pass,
        Some((i1, i2, in_comp)) => {
            let reason = if in_comp {
                "(I1, I2) is in the composition but I1 is not contained in I2"
            } else {
                "I1 is contained in I2 but (I1, I2) is not in the composition"
            };
            let sp = r.source();
            Verdict::Fail(Counterexample::new(reason, vec![("I1", sp.instance(i1)), ("I2", sp.instance(i2))]))
        }
    })
}

/// Classes of `Sol(I1) = Sol(I2)` over the source pool: exact through the
/// chase when `m` allows it, by comparing pool rows otherwise.
fn solution_classes(m: &MappingSpec, r: &MappingRelation) -> Result<Vec<usize>> {
    let sp = r.source();
    let n = sp.size();
    let exact = exact_containment(m);
    let mut reps: Vec<Mask> = Vec::new();
    let mut class = Vec::with_capacity(n);
    for i in 0..n as Mask {
        let mut found = None;
        for (c, &rep) in reps.iter().enumerate() {
            let same = if exact {
                data_exchange_equivalent(m, &sp.instance(rep), &sp.instance(i))?
            } else {
                r.row(rep) == r.row(i)
            };
            if same {
                found = Some(c);
                break;
            }
        }
        class.push(found.unwrap_or_else(|| {
            reps.push(i);
            reps.len() - 1
        }));
    }
    Ok(class)
}

/// `(M ∘ M')[∼M, ∼M] = Id̄[∼M, ∼M]` on the pools, where `R[∼, ∼]` relates
/// `I1` and `I2` when some `I1' ∼ I1` and `I2' ∼ I2` are related by `R`.
pub fn check_quasi_inverse(m: &MappingSpec, m2: &MappingSpec, cfg: PoolConfig) -> Result<Verdict> {
    let (r, r2) = materialize_pair(m, m2, cfg)?;
    if !r.source().is_ground() {
        return Err(MapError::Pool("the quasi-inverse check needs a ground source pool".into()));
    }
    let comp = r.compose(&r2)?;
    let bar = MappingRelation::id_bar(r.source().clone());
    let class = solution_classes(m, &r)?;
    let k = class.iter().max().map_or(0, |c| c + 1);
    let lift = |rel: &MappingRelation| {
        let mut out = vec![false; k * k];
        for (a, b) in rel.pairs() {
            out[class[a as usize] * k + class[b as usize]] = true;
        }
        out
    };
    let (cc, bc) = (lift(&comp), lift(&bar));
    let n = r.source().size() as Mask;
    for i1 in 0..n {
        for i2 in 0..n {
            let at = class[i1 as usize] * k + class[i2 as usize];
            if cc[at] != bc[at] {
                let reason = if cc[at] {
                    "(I1, I2) is in the saturated composition but not in the saturated subset relation"
                } else {
                    "(I1, I2) is in the saturated subset relation but not in the saturated composition"
                };
                let sp = r.source();
                return Ok(Verdict::Fail(Counterexample::new(
                    reason,
                    vec![("I1", sp.instance(i1)), ("I2", sp.instance(i2))],
                )));
            }
        }
    }
    Ok(Verdict::Pass)
}

/// Maximum extended recovery, checked from its definition.
///
/// `M'` must be an extended recovery (`(I, I) ∈ e(M) ∘ e(M')` for all `I`)
/// and, for every `I1`, the row of `I1` in `e(M) ∘ e(M')` must be inside
/// the row of `I1` in `e(M) ∘ e(M*)`, where `M*` is the extended recovery
/// that sends a target `J` to every source instance when `J` is not a
/// solution for `I1`, and otherwise to the sources whose solutions are all
/// solutions for `I1`. Source pools carry nulls here.
pub fn check_max_extended_recovery(m: &MappingSpec, m2: &MappingSpec, cfg: PoolConfig) -> Result<Verdict> {
    let m = m.clone().with_semantics(Semantics::Standard);
    let m2 = m2.clone().with_semantics(Semantics::Standard);
    let probe = m.clone().with_semantics(Semantics::Extended);
    let (sp, tp) = pools_for(&probe, Some(&m2), cfg)?;
    let em = materialize(&m, &sp, &tp)?.extend();
    let em2 = materialize(&m2, &tp, &sp)?.extend();
    if let Some(i) = (0..sp.size() as Mask).find(|&i| !em.in_domain(i)) {
        return Ok(Verdict::Inapplicable(format!(
            "e(M) is not total on the pool: {} has no solution",
            sp.instance(i)
        )));
    }
    let comp = em.compose(&em2)?;
    if let Some(i) = (0..sp.size() as Mask).find(|&i| !comp.contains(i, i)) {
        return Ok(Verdict::Fail(Counterexample::new(
            "(I, I) is not in e(M) ∘ e(M')",
            vec![("I", sp.instance(i))],
        )));
    }
    for i1 in 0..sp.size() as Mask {
        let star = MappingRelation::build(tp.clone(), sp.clone(), |j, row| {
            let everything = !em.contains(i1, j);
            for i in 0..sp.size() as Mask {
                if everything || em.row_subset(i, i1) {
                    super::relation::set_bit(row, i);
                }
            }
            Ok(())
        })?;
        let competitor = em.compose(&star.extend())?;
        if let Some(i2) = comp.targets(i1).find(|&i2| !competitor.contains(i1, i2)) {
            return Ok(Verdict::Fail(Counterexample::new(
                "(I1, I2) is in e(M) ∘ e(M') but not in e(M) ∘ e(M*) for the extended recovery M* built from I1",
                vec![("I1", sp.instance(i1)), ("I2", sp.instance(i2))],
            )));
        }
    }
    Ok(Verdict::Pass)
}

/// Certain answers of `q` over the pool members of a row: the tuples in
/// every member's answer. `None` stands for an empty row.
fn row_certain(answers: &[BTreeSet<Tuple>], row: &[u64], size: usize) -> Option<BTreeSet<Tuple>> {
    let mut out: Option<BTreeSet<Tuple>> = None;
    for j in 0..size as Mask {
        if get_bit(row, j) {
            out = Some(match out {
                None => answers[j as usize].clone(),
                Some(acc) => acc.intersection(&answers[j as usize]).cloned().collect(),
            });
        }
    }
    out
}

fn all_answers(q: &Query, pool: &InstancePool) -> Result<Vec<BTreeSet<Tuple>>> {
    pool.members().map(|inst| eval_query(q, &inst)).collect()
}

/// For every pool member `I` and conjunctive query `Q` with at most
/// `budget` atoms over the source, pool-restricted `certain_{M∘M'}(Q, I)`
/// is contained in `Q(I)`.
///
/// Pool restriction can only enlarge certain answers, so a pass is
/// evidence and a failure reports a tuple certain on the pool that is not
/// an answer on `I`. Members with no composed image are skipped.
pub fn check_cq_recovery(m: &MappingSpec, m2: &MappingSpec, cfg: PoolConfig, budget: usize) -> Result<Verdict> {
    let (r, r2) = materialize_pair(m, m2, cfg)?;
    let sp = r.source().clone();
    if !sp.is_ground() {
        return Err(MapError::Pool("the CQ-recovery check needs a ground source pool".into()));
    }
    let comp = r.compose(&r2)?;
    let queries = conjunctive_queries(&sp.schema().clone(), budget);
    let answers: Vec<Vec<BTreeSet<Tuple>>> =
        queries.par_iter().map(|q| all_answers(q, &sp)).collect::<Result<_>>()?;
    for i in 0..sp.size() as Mask {
        for (q, ans) in queries.iter().zip(&answers) {
            let Some(certain) = row_certain(ans, comp.row(i), sp.size()) else {
                break;
            };
            if let Some(t) = certain.difference(&ans[i as usize]).next() {
                return Ok(Verdict::Fail(Counterexample {
                    reason: "a pool-restricted certain answer under the composition is not an answer on I".into(),
                    instances: vec![("I".into(), sp.instance(i))],
                    query: Some(q.clone()),
                    tuple: Some(t.clone()),
                }));
            }
        }
    }
    Ok(Verdict::Pass)
}

/// Whether every canonical solution yields exact certain answers for
/// conjunctive queries.
fn canonical_answers(m: &MappingSpec) -> bool {
    m.semantics == Semantics::Standard
        && match &m.body {
            Body::Dependencies(_) => m.is_st_tgd_mapping(),
            Body::SoTgd(_) => true,
        }
}

/// Certain answers of every conjunctive query with at most `budget` atoms
/// agree under `a` and `b` on every ground pool member.
///
/// Mappings given by st-tgds or SO-tgds are answered exactly from their
/// canonical solutions; any other mapping through its pool rows.
pub fn cq_equivalent(a: &MappingSpec, b: &MappingSpec, cfg: PoolConfig, budget: usize) -> Result<Verdict> {
    if !a.source.same_relations(&b.source) || !a.target.same_relations(&b.target) {
        return Err(MapError::SchemaMismatch(format!("{} and {} have different schemas", a.name, b.name)));
    }
    let mut extra = formula_constants(a);
    extra.extend(formula_constants(b));
    let sp = Arc::new(InstancePool::numbered(a.source.clone(), cfg.constants, 0, &extra)?);
    let queries = conjunctive_queries(&a.target, budget);
    let answers = |m: &MappingSpec| -> Result<Vec<Vec<Option<BTreeSet<Tuple>>>>> {
        if canonical_answers(m) {
            let canon: Vec<Instance> = sp.members().map(|i| chase(m, &i).map(|c| c.result)).collect::<Result<_>>()?;
            queries
                .par_iter()
                .map(|q| {
                    canon
                        .iter()
                        .map(|c| Ok(Some(ground_tuples(eval_query(q, c)?))))
                        .collect::<Result<Vec<_>>>()
                })
                .collect()
        } else {
            let tp = Arc::new(InstancePool::numbered(a.target.clone(), cfg.constants, cfg.nulls, &extra)?);
            let r = materialize(m, &sp, &tp)?;
            queries
                .par_iter()
                .map(|q| {
                    let ans = all_answers(q, &tp)?;
                    Ok((0..sp.size() as Mask)
                        .map(|i| row_certain(&ans, r.row(i), tp.size()).map(ground_tuples))
                        .collect())
                })
                .collect()
        }
    };
    let (xa, xb) = (answers(a)?, answers(b)?);
    for i in 0..sp.size() {
        for (k, q) in queries.iter().enumerate() {
            let (ca, cb) = (&xa[k][i], &xb[k][i]);
            if ca == cb {
                continue;
            }
            let (reason, tuple) = match (ca, cb) {
                (Some(x), Some(y)) => match x.difference(y).next() {
                    Some(t) => (format!("certain under {} but not under {}", a.name, b.name), Some(t.clone())),
                    None => (
                        format!("certain under {} but not under {}", b.name, a.name),
                        y.difference(x).next().cloned(),
                    ),
                },
                _ => ("one mapping has no solution on the pool for I".to_string(), None),
            };
            return Ok(Verdict::Fail(Counterexample {
                reason,
                instances: vec![("I".into(), sp.instance(i as Mask))],
                query: Some(q.clone()),
                tuple,
            }));
        }
    }
    Ok(Verdict::Pass)
}

fn ground_tuples(ts: BTreeSet<Tuple>) -> BTreeSet<Tuple> {
    ts.into_iter().filter(|t| t.iter().all(Value::is_const)).collect()
}

/// Number of pairs in exactly one of two relations over the same pools.
pub fn discrepancies(a: &MappingRelation, b: &MappingRelation) -> Result<usize> {
    if a.source() != b.source() || a.target() != b.target() {
        return Err(MapError::Pool("relations over different pools".into()));
    }
    Ok((0..a.source().size() as Mask)
        .map(|i| a.row(i).iter().zip(b.row(i)).map(|(x, y)| (x ^ y).count_ones() as usize).sum::<usize>())
        .sum())
}
