use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{MapError, Result};
use crate::lang::{Atom, Body, MappingSpec, SoClause, SoTgd, Term, Var};

fn fresh_symbol(taken: &BTreeSet<String>, base: &str) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (2..)
        .map(|k| format!("{base}{k}"))
        .find(|s| !taken.contains(s))
        .expect("unbounded")
}

/// Replaces every existential variable of every st-tgd by a function of
/// all the universal variables of its tgd.
pub fn skolemize(spec: &MappingSpec) -> Result<MappingSpec> {
    let tgds = spec.st_tgds()?;
    let mut taken: BTreeSet<String> = BTreeSet::new();
    for d in tgds {
        taken.extend(d.universals());
    }
    let mut functions = Vec::new();
    let mut clauses = Vec::new();
    for d in tgds {
        let universals = d.universals();
        let args: Vec<Term> = universals.iter().map(|x| Term::Var(x.clone())).collect();
        let concl = &d.conclusion[0];
        let mut sub: HashMap<&str, Term> = HashMap::new();
        for y in &concl.exists {
            let f = fresh_symbol(&taken, "f");
            taken.insert(f.clone());
            functions.push((f.clone(), args.len()));
            sub.insert(y, Term::App(f, args.clone()));
        }
        let conclusion = concl.atoms.iter().map(|a| a.substitute(&|v| sub.get(v).cloned())).collect();
        clauses.push(SoClause::new(d.premise.clone(), conclusion));
    }
    Ok(MappingSpec::new(
        &spec.name,
        spec.source.clone(),
        spec.target.clone(),
        Body::SoTgd(SoTgd::new(functions, clauses)),
    ))
}

/// The SO-tgd of a mapping, Skolemizing st-tgd bodies first.
pub fn as_so_tgd(spec: &MappingSpec) -> Result<SoTgd> {
    match &spec.body {
        Body::SoTgd(s) => Ok(s.clone()),
        Body::Dependencies(_) => match skolemize(spec)?.body {
            Body::SoTgd(s) => Ok(s),
            Body::Dependencies(_) => unreachable!("skolemize yields an SO-tgd"),
        },
    }
}

fn rename_functions(t: &Term, ren: &BTreeMap<String, String>) -> Term {
    match t {
        Term::App(f, args) => Term::App(
            ren.get(f).cloned().unwrap_or_else(|| f.clone()),
            args.iter().map(|a| rename_functions(a, ren)).collect(),
        ),
        other => other.clone(),
    }
}

fn map_terms(a: &Atom, f: &impl Fn(&Term) -> Term) -> Atom {
    match a {
        Atom::Rel { rel, args } => Atom::Rel {
            rel: rel.clone(),
            args: args.iter().map(f).collect(),
        },
        Atom::Eq(l, r) => Atom::Eq(f(l), f(r)),
        Atom::Neq(l, r) => Atom::Neq(f(l), f(r)),
        Atom::IsConst(t) => Atom::IsConst(f(t)),
    }
}

fn substitute_clause(c: &mut SoClause, var: &str, by: &Term) {
    let sub = |v: &str| (v == var).then(|| by.clone());
    c.premise = c.premise.iter().map(|a| a.substitute(&sub)).collect();
    c.conclusion = c.conclusion.iter().map(|a| a.substitute(&sub)).collect();
}

/// Removes trivial equalities and eliminates equalities that bind one of
/// `eliminable` (any term), or that relate two variables or a variable and a
/// constant.
fn simplify_equalities(c: &mut SoClause, eliminable: &BTreeSet<Var>) {
    loop {
        let mut target: Option<(usize, Var, Term)> = None;
        for (k, a) in c.premise.iter().enumerate() {
            let Atom::Eq(l, r) = a else { continue };
            if l == r {
                target = Some((k, String::new(), l.clone()));
                break;
            }
            let pick = [(l, r), (r, l)].into_iter().find_map(|(x, t)| match x {
                Term::Var(v) if eliminable.contains(v) && !t.contains_var(v) => Some((v.clone(), t.clone())),
                _ => None,
            });
            let pick = pick.or_else(|| match (l, r) {
                (Term::Var(v), Term::Var(_) | Term::Const(_)) => Some((v.clone(), r.clone())),
                (Term::Const(_), Term::Var(v)) => Some((v.clone(), l.clone())),
                _ => None,
            });
            if let Some((v, t)) = pick {
                target = Some((k, v, t));
                break;
            }
        }
        let Some((k, v, t)) = target else { return };
        c.premise.remove(k);
        if !v.is_empty() {
            substitute_clause(c, &v, &t);
        }
    }
}

/// Renames the variables of a clause to their base names (text before the
/// last `_`), numbering repeated bases.
fn tidy_variables(c: &SoClause) -> SoClause {
    let mut vars = Vec::new();
    c.premise.iter().chain(&c.conclusion).for_each(|a| a.collect_vars(&mut vars));
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut ren: HashMap<String, Term> = HashMap::new();
    for v in vars {
        let base = v.rsplit_once('_').map_or(v.as_str(), |(b, _)| b).to_string();
        let name = if used.contains(&base) {
            (2..).map(|k| format!("{base}{k}")).find(|s| !used.contains(s)).expect("unbounded")
        } else {
            base
        };
        used.insert(name.clone());
        ren.insert(v, Term::Var(name));
    }
    let sub = |v: &str| ren.get(v).cloned();
    SoClause::new(
        c.premise.iter().map(|a| a.substitute(&sub)).collect(),
        c.conclusion.iter().map(|a| a.substitute(&sub)).collect(),
    )
}

/// Advances an odometer over `options`; false once every choice was seen.
pub(crate) fn next_choice<T>(choice: &mut [usize], options: &[Vec<T>]) -> bool {
    for pos in (0..choice.len()).rev() {
        choice[pos] += 1;
        if choice[pos] < options[pos].len() {
            return true;
        }
        choice[pos] = 0;
    }
    false
}

fn rename_apart(c: &SoClause, suffix: &str) -> SoClause {
    let sub = |v: &str| Some(Term::Var(format!("{v}_{suffix}")));
    SoClause::new(
        c.premise.iter().map(|a| a.substitute(&sub)).collect(),
        c.conclusion.iter().map(|a| a.substitute(&sub)).collect(),
    )
}

/// Composes two SO-tgd (or st-tgd) mappings into one SO-tgd.
///
/// For each clause of the second mapping and each way of covering its
/// premise atoms by conclusion atoms of renamed-apart clauses of the first,
/// the covered atoms are replaced by the covering clauses' premises plus
/// argument-wise equalities, which are then eliminated where a variable
/// can be substituted.
pub fn compose(m12: &MappingSpec, m23: &MappingSpec) -> Result<MappingSpec> {
    if !m12.target.same_relations(&m23.source) {
        return Err(MapError::SchemaMismatch(format!(
            "cannot compose {} (target {}) with {} (source {})",
            m12.name,
            m12.target.name(),
            m23.name,
            m23.source.name()
        )));
    }
    let s12 = as_so_tgd(m12)?;
    let s23 = as_so_tgd(m23)?;
    let mut taken: BTreeSet<String> = s12.functions.iter().map(|(f, _)| f.clone()).collect();
    let mut ren = BTreeMap::new();
    let mut functions = s12.functions.clone();
    for (f, a) in &s23.functions {
        let g = fresh_symbol(&taken, f);
        taken.insert(g.clone());
        functions.push((g.clone(), *a));
        ren.insert(f.clone(), g);
    }
    let mut clauses: Vec<SoClause> = Vec::new();
    for c23 in &s23.clauses {
        let c23 = SoClause::new(
            c23.premise.iter().map(|a| map_terms(a, &|t| rename_functions(t, &ren))).collect(),
            c23.conclusion.iter().map(|a| map_terms(a, &|t| rename_functions(t, &ren))).collect(),
        );
        let covered: Vec<&Atom> = c23.premise.iter().filter(|a| a.is_relational()).collect();
        let eqs23: Vec<&Atom> = c23.premise.iter().filter(|a| !a.is_relational()).collect();
        // options per covered atom: (clause index, conclusion atom index)
        let options: Vec<Vec<(usize, usize)>> = covered
            .iter()
            .map(|a| {
                let Atom::Rel { rel, .. } = a else { unreachable!() };
                s12.clauses
                    .iter()
                    .enumerate()
                    .flat_map(|(j, c)| {
                        c.conclusion
                            .iter()
                            .enumerate()
                            .filter(move |(_, b)| matches!(b, Atom::Rel { rel: r, .. } if r == rel))
                            .map(move |(k, _)| (j, k))
                    })
                    .collect()
            })
            .collect();
        if options.iter().any(Vec::is_empty) {
            continue;
        }
        let vars23: BTreeSet<Var> = c23.universals().into_iter().collect();
        let mut choice = vec![0usize; covered.len()];
        loop {
            let mut premise: Vec<Atom> = Vec::new();
            let mut eqs: Vec<Atom> = Vec::new();
            for (pos, (a, &o)) in covered.iter().zip(&choice).enumerate() {
                let (j, k) = options[pos][o];
                let copy = rename_apart(&s12.clauses[j], &(pos + 1).to_string());
                premise.extend(copy.premise.iter().cloned());
                let (Atom::Rel { args, .. }, Atom::Rel { args: bargs, .. }) = (a, &copy.conclusion[k]) else {
                    unreachable!()
                };
                for (s, t) in args.iter().zip(bargs) {
                    eqs.push(Atom::Eq(s.clone(), t.clone()));
                }
            }
            premise.extend(eqs);
            premise.extend(eqs23.iter().map(|a| (*a).clone()));
            let mut clause = SoClause::new(premise, c23.conclusion.clone());
            simplify_equalities(&mut clause, &vars23);
            let clause = tidy_variables(&clause);
            if !clauses.contains(&clause) {
                clauses.push(clause);
            }
            if !next_choice(&mut choice, &options) {
                break;
            }
        }
    }
    let name = format!("{}_{}", m12.name, m23.name);
    Ok(MappingSpec::new(
        &name,
        m12.source.clone(),
        m23.target.clone(),
        Body::SoTgd(SoTgd::new(functions, clauses)),
    ))
}

/// Most general unifier of two Herbrand terms, or `None` when they can
/// never denote the same value: distinct symbols, a constant against a
/// function term, or a variable bound to a function term (variables range
/// over domain values, which are never function terms).
fn unify(l: &Term, r: &Term, sub: &mut BTreeMap<Var, Term>) -> Option<()> {
    let resolve = |t: &Term, sub: &BTreeMap<Var, Term>| -> Term {
        let mut t = t.clone();
        while let Term::Var(v) = &t {
            match sub.get(v) {
                Some(u) => t = u.clone(),
                None => break,
            }
        }
        t
    };
    let (l, r) = (resolve(l, sub), resolve(r, sub));
    match (&l, &r) {
        _ if l == r => Some(()),
        (Term::Var(_), Term::Var(w)) => {
            sub.insert(w.clone(), l.clone());
            Some(())
        }
        (Term::Var(v), Term::Const(_)) => {
            sub.insert(v.clone(), r.clone());
            Some(())
        }
        (Term::Const(_), Term::Var(v)) => {
            sub.insert(v.clone(), l.clone());
            Some(())
        }
        (Term::App(f, xs), Term::App(g, ys)) if f == g && xs.len() == ys.len() => {
            xs.iter().zip(ys).try_for_each(|(x, y)| unify(x, y, sub))
        }
        _ => None,
    }
}

fn apply_sub(t: &Term, sub: &BTreeMap<Var, Term>) -> Term {
    match t {
        Term::Var(v) => match sub.get(v) {
            Some(u) => apply_sub(u, sub),
            None => t.clone(),
        },
        Term::Const(_) => t.clone(),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| apply_sub(a, sub)).collect()),
    }
}

/// Shape of a nested term: the term with each variable occurrence replaced
/// by a placeholder, so that equal shapes get the same fresh symbol.
fn shape(t: &Term) -> Term {
    match t {
        Term::Var(_) => Term::Var(String::new()),
        Term::Const(_) => t.clone(),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(shape).collect()),
    }
}

fn var_occurrences(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::Var(_) => out.push(t.clone()),
        Term::Const(_) => {}
        Term::App(_, args) => args.iter().for_each(|a| var_occurrences(a, out)),
    }
}

/// A plain SO-tgd with the same certain answers for every conjunctive
/// query.
///
/// Each premise equality is resolved by unification over Herbrand terms:
/// a clause whose equalities cannot unify (with variables standing for
/// domain values) never fires on the canonical solution and is dropped;
/// otherwise the unifier is applied. Each maximal nested term is then
/// replaced by a fresh symbol applied to its variable occurrences, one
/// symbol per term shape. Both steps keep the canonical solution unchanged
/// up to renaming of nulls.
pub fn to_plain(spec: &MappingSpec) -> Result<MappingSpec> {
    let so = as_so_tgd(spec)?;
    let mut taken: BTreeSet<String> = so.functions.iter().map(|(f, _)| f.clone()).collect();
    let mut shapes: BTreeMap<Term, String> = BTreeMap::new();
    let mut new_functions: Vec<(String, usize)> = Vec::new();
    let mut clauses = Vec::new();
    'clauses: for c in &so.clauses {
        let mut sub = BTreeMap::new();
        for (l, r) in c.equalities() {
            if unify(l, r, &mut sub).is_none() {
                continue 'clauses;
            }
        }
        let mut denest = |t: &Term| -> Term {
            let t = apply_sub(t, &sub);
            if !t.is_nested() {
                return t;
            }
            let key = shape(&t);
            let mut args = Vec::new();
            var_occurrences(&t, &mut args);
            let h = match shapes.get(&key) {
                Some(h) => h.clone(),
                None => {
                    let h = fresh_symbol(&taken, "h");
                    taken.insert(h.clone());
                    shapes.insert(key, h.clone());
                    new_functions.push((h.clone(), args.len()));
                    h
                }
            };
            Term::App(h, args)
        };
        let mut premise = Vec::new();
        for a in c.premise.iter().filter(|a| a.is_relational()) {
            let Atom::Rel { rel, args } = a else { unreachable!() };
            premise.push(Atom::rel(rel, args.iter().map(&mut denest).collect()));
        }
        let mut conclusion = Vec::new();
        for a in &c.conclusion {
            if let Atom::Rel { rel, args } = a {
                conclusion.push(Atom::rel(rel, args.iter().map(&mut denest).collect()));
            }
        }
        let clause = SoClause::new(premise, conclusion);
        if !clauses.contains(&clause) {
            clauses.push(clause);
        }
    }
    let mut out = SoTgd::new(Vec::new(), clauses);
    let used = out.used_functions();
    out.functions = so
        .functions
        .iter()
        .chain(&new_functions)
        .filter(|(f, _)| used.contains(f))
        .cloned()
        .collect();
    out.plain = out.is_plain();
    Ok(MappingSpec::new(
        &spec.name,
        spec.source.clone(),
        spec.target.clone(),
        Body::SoTgd(out),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_mapping, print_mapping, validate};

    fn takes() -> (MappingSpec, MappingSpec) {
        (
            parse_mapping(
                "schema R1 { Takes/2 } schema R2 { Takes1/2, Student/2 }
                 map M12 : R1 -> R2 { Takes(n,c) -> Takes1(n,c); Takes(n,c) -> exists s . Student(n,s); }",
            )
            .unwrap(),
            parse_mapping(
                "schema R2 { Takes1/2, Student/2 } schema R3 { Enrollment/2 }
                 map M23 : R2 -> R3 { Student(n,s) & Takes1(n,c) -> Enrollment(s,c); }",
            )
            .unwrap(),
        )
    }

    fn emp() -> (MappingSpec, MappingSpec) {
        (
            parse_mapping("schema R1 { Emp/1 } schema R2 { Mgr1/2 } map M12 : R1 -> R2 { Emp(e) -> exists m . Mgr1(e,m); }")
                .unwrap(),
            parse_mapping(
                "schema R2 { Mgr1/2 } schema R3 { Mgr/2, SelfMgr/1 }
                 map M23 : R2 -> R3 { Mgr1(e,m) -> Mgr(e,m); Mgr1(e,e) -> SelfMgr(e); }",
            )
            .unwrap(),
        )
    }

    #[test]
    fn skolemize_takes() {
        let s = skolemize(&takes().0).unwrap();
        let so = s.so_tgd().unwrap();
        assert_eq!(so.functions, vec![("f".to_string(), 2)]);
        assert_eq!(so.clauses[1].to_string(), "Takes(n, c) -> Student(n, f(n, c))");
        assert!(so.plain);
    }

    #[test]
    fn skolemize_emp() {
        let so = as_so_tgd(&emp().0).unwrap();
        assert_eq!(so.clauses[0].to_string(), "Emp(e) -> Mgr1(e, f(e))");
    }

    #[test]
    fn compose_takes_has_one_clause() {
        let (a, b) = takes();
        let m = compose(&a, &b).unwrap();
        let so = m.so_tgd().unwrap();
        assert_eq!(so.clauses.len(), 1);
        assert_eq!(so.clauses[0].to_string(), "Takes(n, c) & Takes(n, c2) -> Enrollment(f(n, c), c2)");
        assert!(validate(&m).is_empty(), "{:?}", validate(&m));
        assert_eq!(parse_mapping(&print_mapping(&m)).unwrap(), m);
    }

    #[test]
    fn compose_emp_gives_equality() {
        let (a, b) = emp();
        let m = compose(&a, &b).unwrap();
        let so = m.so_tgd().unwrap();
        let text: Vec<String> = so.clauses.iter().map(ToString::to_string).collect();
        assert_eq!(text, vec!["Emp(e) -> Mgr(e, f(e))", "Emp(e) & e = f(e) -> SelfMgr(e)"]);
        let plain = to_plain(&m).unwrap();
        let p = plain.so_tgd().unwrap();
        assert!(p.plain);
        assert_eq!(p.clauses.len(), 1);
        assert_eq!(p.clauses[0].to_string(), "Emp(e) -> Mgr(e, f(e))");
    }

    #[test]
    fn to_plain_denests_and_unifies() {
        let m = parse_mapping(
            "functions f/1, g/1
             schema A { S/2 } schema B { T/2, U/1 }
             map M : A -> B exists f, g {
               S(x, y) -> T(f(g(x)), g(y));
               S(x, y) & f(x) = f(y) -> U(x);
             }",
        )
        .unwrap();
        let p = to_plain(&m).unwrap();
        let so = p.so_tgd().unwrap();
        let text: Vec<String> = so.clauses.iter().map(ToString::to_string).collect();
        assert_eq!(text, vec!["S(x, y) -> T(h(x), g(y))", "S(x, x) -> U(x)"]);
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn chain_mismatch() {
        let (a, _) = takes();
        assert!(matches!(compose(&a, &a), Err(MapError::SchemaMismatch(_))));
    }
}
