//! Query rewriting over the source and the maximum-recovery construction
//! for st-tgd mappings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{MapError, Result};
use crate::lang::{Atom, Body, Conjunct, Dependency, Direction, MappingSpec, Query, Term, Var};
use crate::model::Value;

/// A target query and its rewriting over the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewriting {
    pub original: Query,
    pub rewritten: Query,
}

/// Nodes of the unification graph of one covering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Node {
    QueryVar(Var),
    Const(Value),
    /// A variable of a renamed tgd copy.
    CopyVar(usize, Var),
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.parent[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.parent[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[b] = a;
        }
    }
}

struct Tgd<'a> {
    premise: &'a [Atom],
    exists: BTreeSet<&'a str>,
    atoms: &'a [Atom],
}

/// One query atom's cover: (copy id, conclusion atom index).
type Cover = (usize, usize);

fn uniquify(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (2..).map(|k| format!("{base}{k}")).find(|s| !taken.contains(s)).expect("unbounded")
}

/// Rewrites a conjunctive query over the target into a union of
/// conjunctive queries with equalities over the source whose answers on
/// every ground source instance are the certain answers.
///
/// Each query atom is covered by a conclusion atom of a renamed tgd copy
/// (copy ids in first-use order, so every covering is produced once). The
/// covered positions are unified; a covering is dropped when an
/// existential position of a copy is unified with a constant, a free
/// variable, a universal, another existential, or a query variable that
/// also occurs elsewhere uncovered by that null. Each surviving covering
/// contributes the premises of its copies plus equalities among the free
/// variables.
pub fn rewrite_over_source(spec: &MappingSpec, q: &Query) -> Result<Rewriting> {
    let tgds_raw = spec.st_tgds()?;
    if q.disjuncts.len() > 1 || !q.fragment().is_plain_cq() {
        return Err(MapError::Unsupported(format!(
            "rewriting needs a conjunctive query, {} is {}",
            q.name,
            q.fragment()
        )));
    }
    let mut rewritten = Query {
        name: q.name.clone(),
        schema: spec.source.name().to_string(),
        free: q.free.clone(),
        disjuncts: Vec::new(),
    };
    let Some(body) = q.disjuncts.first() else {
        return Ok(Rewriting {
            original: q.clone(),
            rewritten,
        });
    };
    let tgds: Vec<Tgd> = tgds_raw
        .iter()
        .map(|d| Tgd {
            premise: &d.premise,
            exists: d.conclusion[0].exists.iter().map(String::as_str).collect(),
            atoms: &d.conclusion[0].atoms,
        })
        .collect();
    let qatoms: Vec<(&str, &[Term])> = body
        .atoms
        .iter()
        .map(|a| match a {
            Atom::Rel { rel, args } => (rel.as_str(), args.as_slice()),
            _ => unreachable!("plain CQ"),
        })
        .collect();
    let mut reserved: BTreeSet<String> = q.free.iter().cloned().collect();
    reserved.extend(body.exists.iter().cloned());
    reserved.extend(body.vars());
    let mut seen_keys: BTreeSet<Vec<Atom>> = BTreeSet::new();
    let mut copies: Vec<usize> = Vec::new();
    let mut covers: Vec<Cover> = Vec::new();
    enumerate(&tgds, &qatoms, &mut copies, &mut covers, &mut |copies, covers| {
        if let Some(d) = disjunct_of(&tgds, &qatoms, q, copies, covers, &reserved) {
            let key = canonical_key(&d, &q.free);
            if seen_keys.insert(key) {
                rewritten.disjuncts.push(d);
            }
        }
    });
    Ok(Rewriting {
        original: q.clone(),
        rewritten,
    })
}

fn enumerate(
    tgds: &[Tgd],
    qatoms: &[(&str, &[Term])],
    copies: &mut Vec<usize>,
    covers: &mut Vec<Cover>,
    emit: &mut dyn FnMut(&[usize], &[Cover]),
) {
    let i = covers.len();
    if i == qatoms.len() {
        emit(copies, covers);
        return;
    }
    let rel = qatoms[i].0;
    let matching = |j: usize| {
        tgds[j]
            .atoms
            .iter()
            .enumerate()
            .filter(move |(_, a)| matches!(a, Atom::Rel { rel: r, .. } if r == rel))
            .map(|(k, _)| k)
    };
    for c in 0..copies.len() {
        for k in matching(copies[c]) {
            covers.push((c, k));
            enumerate(tgds, qatoms, copies, covers, emit);
            covers.pop();
        }
    }
    for j in 0..tgds.len() {
        for k in matching(j) {
            copies.push(j);
            covers.push((copies.len() - 1, k));
            enumerate(tgds, qatoms, copies, covers, emit);
            covers.pop();
            copies.pop();
        }
    }
}

fn disjunct_of(
    tgds: &[Tgd],
    qatoms: &[(&str, &[Term])],
    q: &Query,
    copies: &[usize],
    covers: &[Cover],
    reserved: &BTreeSet<String>,
) -> Option<Conjunct> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut index: HashMap<Node, usize> = HashMap::new();
    let mut id = |n: Node, nodes: &mut Vec<Node>| -> usize {
        *index.entry(n.clone()).or_insert_with(|| {
            nodes.push(n);
            nodes.len() - 1
        })
    };
    let node_of = |t: &Term, copy: Option<usize>| match (t, copy) {
        (Term::Var(v), None) => Node::QueryVar(v.clone()),
        (Term::Var(v), Some(c)) => Node::CopyVar(c, v.clone()),
        (Term::Const(c), _) => Node::Const(c.clone()),
        (Term::App(..), _) => unreachable!("function-free"),
    };
    let mut pairs = Vec::new();
    for ((_, args), &(c, k)) in qatoms.iter().zip(covers) {
        let Atom::Rel { args: targs, .. } = &tgds[copies[c]].atoms[k] else { unreachable!() };
        for (s, t) in args.iter().zip(targs) {
            let a = id(node_of(s, None), &mut nodes);
            let b = id(node_of(t, Some(c)), &mut nodes);
            pairs.push((a, b));
        }
    }
    // make every premise variable of every copy a node
    for (c, &j) in copies.iter().enumerate() {
        for a in tgds[j].premise {
            for t in a.terms() {
                id(node_of(t, Some(c)), &mut nodes);
            }
        }
    }
    let mut uf = UnionFind {
        parent: (0..nodes.len()).collect(),
    };
    for (a, b) in pairs {
        uf.union(a, b);
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for n in 0..nodes.len() {
        classes.entry(uf.find(n)).or_default().push(n);
    }
    let is_existential = |n: &Node| match n {
        Node::CopyVar(c, v) => tgds[copies[*c]].exists.contains(v.as_str()),
        _ => false,
    };
    let free: BTreeSet<&str> = q.free.iter().map(String::as_str).collect();
    for members in classes.values() {
        let ms: Vec<&Node> = members.iter().map(|&m| &nodes[m]).collect();
        let consts: BTreeSet<&Value> = ms
            .iter()
            .filter_map(|n| match n {
                Node::Const(c) => Some(c),
                _ => None,
            })
            .collect();
        if consts.len() > 1 {
            return None;
        }
        let nulls = ms.iter().filter(|n| is_existential(n)).count();
        if nulls > 0 {
            let ok = nulls == 1
                && ms.iter().all(|n| match n {
                    Node::QueryVar(v) => !free.contains(v.as_str()),
                    Node::Const(_) => false,
                    Node::CopyVar(..) => is_existential(n),
                });
            if !ok {
                return None;
            }
        }
    }
    // name each class
    let mut taken: BTreeSet<String> = reserved.clone();
    let mut names: HashMap<usize, Term> = HashMap::new();
    let mut equalities = Vec::new();
    for (root, members) in &classes {
        let ms: Vec<&Node> = members.iter().map(|&m| &nodes[m]).collect();
        let mut frees: Vec<&Var> = ms
            .iter()
            .filter_map(|n| match n {
                Node::QueryVar(v) if free.contains(v.as_str()) => Some(v),
                _ => None,
            })
            .collect();
        frees.sort_by_key(|v| q.free.iter().position(|x| x == *v));
        let constant = ms.iter().find_map(|n| match n {
            Node::Const(c) => Some(c.clone()),
            _ => None,
        });
        let term = if let Some(first) = frees.first() {
            for other in &frees[1..] {
                equalities.push(Atom::Eq(Term::Var((*other).clone()), Term::Var((*first).clone())));
            }
            if let Some(c) = &constant {
                equalities.push(Atom::Eq(Term::Var((*first).clone()), Term::Const(c.clone())));
            }
            Term::Var((*first).clone())
        } else if let Some(c) = constant {
            Term::Const(c)
        } else {
            let base = ms
                .iter()
                .find_map(|n| match n {
                    Node::CopyVar(_, v) => Some(v.clone()),
                    _ => None,
                })
                .unwrap_or_else(|| "v".to_string());
            let name = uniquify(&base, &taken);
            taken.insert(name.clone());
            Term::Var(name)
        };
        names.insert(*root, term);
    }
    let mut atoms: Vec<Atom> = Vec::new();
    for (c, &j) in copies.iter().enumerate() {
        for a in tgds[j].premise {
            let renamed = match a {
                Atom::Rel { rel, args } => Atom::rel(
                    rel,
                    args.iter()
                        .map(|t| {
                            let n = index[&node_of(t, Some(c))];
                            names[&uf.find(n)].clone()
                        })
                        .collect(),
                ),
                other => other.clone(),
            };
            if !atoms.contains(&renamed) {
                atoms.push(renamed);
            }
        }
    }
    atoms.extend(equalities);
    let mut exists: Vec<Var> = Vec::new();
    for a in &atoms {
        let mut vs = Vec::new();
        a.collect_vars(&mut vs);
        for v in vs {
            if !free.contains(v.as_str()) && !exists.contains(&v) {
                exists.push(v);
            }
        }
    }
    Some(Conjunct::new(exists, atoms))
}

/// A renaming-invariant key: relational atoms sorted, then bound variables
/// renamed by first occurrence.
fn canonical_key(d: &Conjunct, free: &[Var]) -> Vec<Atom> {
    let blank = |a: &Atom| {
        a.substitute(&|v: &str| (!free.iter().any(|x| x == v)).then(|| Term::Var(String::new())))
    };
    let mut atoms = d.atoms.clone();
    atoms.sort_by_key(|a| (blank(a), a.clone()));
    let mut ren: HashMap<String, String> = HashMap::new();
    let mut out = Vec::new();
    for a in &atoms {
        let mut vs = Vec::new();
        a.collect_vars(&mut vs);
        for v in vs {
            if !free.contains(&v) && !ren.contains_key(&v) {
                let k = ren.len();
                ren.insert(v, format!("_{k}"));
            }
        }
        out.push(a.substitute(&|v: &str| ren.get(v).map(|n| Term::Var(n.clone()))));
    }
    out
}

/// Builds the maximum recovery of an st-tgd mapping: for each tgd
/// `φ(x̄) → ∃ȳ ψ(x̄, ȳ)`, with `x̄` the universals occurring in `ψ`, the
/// reverse dependency `ψ(x̄, ȳ) ∧ C(x̄) → α(x̄)`, where `α` rewrites
/// `∃ȳ ψ(x̄, ȳ)` over the source.
pub fn maximum_recovery(spec: &MappingSpec) -> Result<MappingSpec> {
    let tgds = spec.st_tgds()?;
    let mut deps = Vec::new();
    for d in tgds {
        let frontier = d.frontier();
        let concl = &d.conclusion[0];
        let q = Query {
            name: "Q".into(),
            schema: spec.target.name().to_string(),
            free: frontier.clone(),
            disjuncts: vec![concl.clone()],
        };
        let alpha = rewrite_over_source(spec, &q)?.rewritten;
        let mut premise = concl.atoms.clone();
        premise.extend(frontier.iter().map(|x| Atom::IsConst(Term::Var(x.clone()))));
        deps.push(Dependency::new(premise, alpha.disjuncts, Direction::TargetToSource));
    }
    Ok(MappingSpec::new(
        &format!("{}_rec", spec.name),
        spec.target.clone(),
        spec.source.clone(),
        Body::Dependencies(deps),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_mapping, parse_query, validate};

    fn rewrite(map: &str, query: &str) -> Vec<String> {
        let m = parse_mapping(map).unwrap();
        let q = parse_query(query, &[m.target.clone()]).unwrap();
        let r = rewrite_over_source(&m, &q).unwrap();
        r.rewritten.disjuncts.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn projection() {
        assert_eq!(
            rewrite(
                "schema S { S/2 } schema T { T/1 } map M : S -> T { S(x,y) -> T(x); }",
                "query Q(x) over T { T(x) }"
            ),
            vec!["exists y . S(x, y)"]
        );
    }

    #[test]
    fn two_views() {
        assert_eq!(
            rewrite(
                "schema S { S/1 } schema T { U/1, V/1 } map M : S -> T { S(x) -> U(x); S(x) -> V(x); }",
                "query Q(x) over T { U(x) }"
            ),
            vec!["S(x)"]
        );
    }

    #[test]
    fn path_view() {
        assert_eq!(
            rewrite(
                "schema S { E/2 } schema T { F/2, M/1 } map M : S -> T { E(x,z) & E(z,y) -> F(x,y) & M(z); }",
                "query Q(x, y) over T { F(x, y) }"
            ),
            vec!["exists z . E(x, z) & E(z, y)"]
        );
    }

    #[test]
    fn nulls_do_not_join_with_free_variables() {
        let out = rewrite(
            "schema S { S/1 } schema T { T/2 } map M : S -> T { S(x) -> exists y . T(x, y); }",
            "query Q(x, z) over T { T(x, z) }",
        );
        assert!(out.is_empty());
        let out = rewrite(
            "schema S { S/1 } schema T { T/2 } map M : S -> T { S(x) -> exists y . T(x, y) & T(y, x); }",
            "query Q(x) over T { exists z . T(x, z) & T(z, x) }",
        );
        assert_eq!(out, vec!["S(x)"]);
    }

    #[test]
    fn recovery_of_projection() {
        let m = parse_mapping("schema S { S/2 } schema T { T/1 } map M : S -> T { S(x,y) -> T(x); }").unwrap();
        let r = maximum_recovery(&m).unwrap();
        assert!(validate(&r).is_empty());
        let d = &r.dependencies().unwrap()[0];
        assert_eq!(d.to_string(), "T(x) & C(x) -> exists y . S(x, y)");
        assert_eq!(d.class().to_string(), "<CQ^C, CQ>");
    }

    #[test]
    fn recovery_of_copy() {
        let m = parse_mapping("schema S { S/1 } schema T { T/1 } map M : S -> T { S(x) -> T(x); }").unwrap();
        let r = maximum_recovery(&m).unwrap();
        assert_eq!(r.dependencies().unwrap()[0].to_string(), "T(x) & C(x) -> S(x)");
    }
}
