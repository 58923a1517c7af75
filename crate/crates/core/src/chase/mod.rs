//! Canonical universal solutions and the solution-containment tests built
//! on them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{MapError, Result};
use crate::eval::{satisfies, Pattern};
use crate::lang::{Atom, Body, MappingSpec, SoTgd, Term, Var};
use crate::model::{has_homomorphism, Instance, Tuple, Value};

/// Where a fact or null of a chase result came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    /// Index of the dependency (or SO-tgd clause) that fired.
    pub dependency: usize,
    /// The premise assignment of the trigger.
    pub trigger: BTreeMap<Var, Value>,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.trigger.iter().map(|(x, v)| format!("{x}={v}")).collect();
        write!(f, "#{} [{}]", self.dependency + 1, parts.join(", "))
    }
}

/// What a fresh null stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NullOrigin {
    /// Invented for an existential variable of a tgd trigger.
    Existential { origin: Origin, var: Var },
    /// Denotes a ground function term of an SO-tgd.
    Term(String),
}

impl fmt::Display for NullOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NullOrigin::Existential { origin, var } => write!(f, "{var} of {origin}"),
            NullOrigin::Term(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChaseResult {
    pub result: Instance,
    /// Every fact of `result` with the first trigger that produced it.
    pub facts: Vec<(String, Tuple, Origin)>,
    pub nulls: BTreeMap<Value, NullOrigin>,
}

/// Hands out `n1, n2, ...`, skipping labels already used in the input.
struct NullNames {
    used: BTreeSet<String>,
    next: usize,
}

impl NullNames {
    fn new(input: &Instance) -> Self {
        NullNames {
            used: input.nulls().iter().map(|v| v.label().to_string()).collect(),
            next: 0,
        }
    }

    fn fresh(&mut self) -> Value {
        loop {
            self.next += 1;
            let label = format!("n{}", self.next);
            if !self.used.contains(&label) {
                return Value::null(label);
            }
        }
    }
}

/// The canonical universal solution of `i` under an st-tgd or SO-tgd
/// mapping.
///
/// For st-tgds this is the single-pass oblivious chase: every trigger of
/// every tgd adds its conclusion with one fresh null per existential
/// variable. For SO-tgds, ground function terms denote distinct nulls and
/// an equality holds only between syntactically identical terms.
pub fn chase(spec: &MappingSpec, i: &Instance) -> Result<ChaseResult> {
    if !i.schema().same_relations(&spec.source) {
        return Err(MapError::SchemaMismatch(format!(
            "instance over {} chased with {}",
            i.schema().name(),
            spec.name
        )));
    }
    match &spec.body {
        Body::Dependencies(_) => chase_tgds(spec, i),
        Body::SoTgd(so) => chase_so_tgd(spec, so, i),
    }
}

fn chase_tgds(spec: &MappingSpec, i: &Instance) -> Result<ChaseResult> {
    let tgds = spec.st_tgds()?;
    let mut names = NullNames::new(i);
    let mut out = ChaseResult {
        result: Instance::new(spec.target.clone()),
        facts: Vec::new(),
        nulls: BTreeMap::new(),
    };
    for (k, d) in tgds.iter().enumerate() {
        let premise = Pattern::compile(&d.premise, &[]);
        let universals = premise.vars().to_vec();
        let concl = &d.conclusion[0];
        let mut triggers: Vec<Vec<Value>> = Vec::new();
        premise.run(i, &[], &mut |b| {
            triggers.push(b.to_vec());
            false
        });
        for b in triggers {
            let origin = Origin {
                dependency: k,
                trigger: universals.iter().cloned().zip(b.iter().cloned()).collect(),
            };
            let mut env: HashMap<&str, Value> = universals.iter().map(String::as_str).zip(b).collect();
            for y in &concl.exists {
                let n = names.fresh();
                out.nulls.insert(
                    n.clone(),
                    NullOrigin::Existential {
                        origin: origin.clone(),
                        var: y.clone(),
                    },
                );
                env.insert(y, n);
            }
            for a in &concl.atoms {
                if let Atom::Rel { rel, args } = a {
                    let tuple: Tuple = args
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => env[v.as_str()].clone(),
                            Term::Const(c) => c.clone(),
                            Term::App(..) => unreachable!("st-tgds are function-free"),
                        })
                        .collect();
                    if out.result.insert(rel, tuple.clone())? {
                        out.facts.push((rel.clone(), tuple, origin.clone()));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Ground {
    Val(Value),
    App(String, Vec<Ground>),
}

impl fmt::Display for Ground {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ground::Val(v) => write!(f, "{v}"),
            Ground::App(g, args) => {
                let parts: Vec<String> = args.iter().map(ToString::to_string).collect();
                write!(f, "{g}({})", parts.join(", "))
            }
        }
    }
}

fn ground(t: &Term, env: &HashMap<&str, Value>) -> Ground {
    match t {
        Term::Var(v) => Ground::Val(env[v.as_str()].clone()),
        Term::Const(c) => Ground::Val(c.clone()),
        Term::App(f, args) => Ground::App(f.clone(), args.iter().map(|a| ground(a, env)).collect()),
    }
}

fn chase_so_tgd(spec: &MappingSpec, so: &SoTgd, i: &Instance) -> Result<ChaseResult> {
    let mut names = NullNames::new(i);
    let mut memo: HashMap<Ground, Value> = HashMap::new();
    let mut out = ChaseResult {
        result: Instance::new(spec.target.clone()),
        facts: Vec::new(),
        nulls: BTreeMap::new(),
    };
    for (k, c) in so.clauses.iter().enumerate() {
        let rels: Vec<Atom> = c.premise.iter().filter(|a| a.is_relational()).cloned().collect();
        let premise = Pattern::compile(&rels, &[]);
        let universals = premise.vars().to_vec();
        let mut triggers: Vec<Vec<Value>> = Vec::new();
        premise.run(i, &[], &mut |b| {
            triggers.push(b.to_vec());
            false
        });
        for b in triggers {
            let env: HashMap<&str, Value> = universals.iter().map(String::as_str).zip(b.iter().cloned()).collect();
            if !c.equalities().all(|(l, r)| ground(l, &env) == ground(r, &env)) {
                continue;
            }
            let origin = Origin {
                dependency: k,
                trigger: universals.iter().cloned().zip(b.iter().cloned()).collect(),
            };
            for a in &c.conclusion {
                if let Atom::Rel { rel, args } = a {
                    let mut tuple = Vec::with_capacity(args.len());
                    for t in args {
                        let v = match ground(t, &env) {
                            Ground::Val(v) => v,
                            g => match memo.get(&g) {
                                Some(v) => v.clone(),
                                None => {
                                    let n = names.fresh();
                                    out.nulls.insert(n.clone(), NullOrigin::Term(g.to_string()));
                                    memo.insert(g, n.clone());
                                    n
                                }
                            },
                        };
                        tuple.push(v);
                    }
                    if out.result.insert(rel, tuple.clone())? {
                        out.facts.push((rel.clone(), tuple, origin.clone()));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// A solution for `i` that maps homomorphically into the canonical one.
pub fn is_universal_solution(spec: &MappingSpec, i: &Instance, j: &Instance) -> Result<bool> {
    if !satisfies(spec, i, j)? {
        return Ok(false);
    }
    let canonical = chase(spec, i)?.result;
    Ok(has_homomorphism(j, &canonical))
}

fn check_closed_under_homomorphisms(spec: &MappingSpec) -> Result<()> {
    match &spec.body {
        Body::Dependencies(_) => spec.st_tgds().map(|_| ()),
        Body::SoTgd(so) if so.is_plain() => Ok(()),
        Body::SoTgd(_) => Err(MapError::Unsupported(format!(
            "solution containment needs st-tgds or a plain SO-tgd, {} has equalities or nesting",
            spec.name
        ))),
    }
}

/// `Sol(i2) ⊆ Sol(i1)`.
///
/// Solutions of st-tgds and plain SO-tgds over ground sources are closed under
/// constant-fixing homomorphisms, and the canonical solution of `i2` maps
/// into each of its solutions; so the containment holds iff that canonical
/// solution is a solution for `i1`.
pub fn sol_subseteq(spec: &MappingSpec, i2: &Instance, i1: &Instance) -> Result<bool> {
    check_closed_under_homomorphisms(spec)?;
    let canonical = chase(spec, i2)?.result;
    satisfies(spec, i1, &canonical)
}

/// `Sol(i1) = Sol(i2)`.
pub fn data_exchange_equivalent(spec: &MappingSpec, i1: &Instance, i2: &Instance) -> Result<bool> {
    Ok(sol_subseteq(spec, i1, i2)? && sol_subseteq(spec, i2, i1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_instance, parse_mapping};

    fn mapping(text: &str) -> MappingSpec {
        parse_mapping(text).unwrap()
    }

    fn src(m: &MappingSpec, facts: &str) -> Instance {
        parse_instance(&format!("instance I over {} {{ {facts} }}", m.source.name()), &[m.source.clone()]).unwrap()
    }

    fn tgt(m: &MappingSpec, facts: &str) -> Instance {
        parse_instance(&format!("instance J over {} {{ {facts} }}", m.target.name()), &[m.target.clone()]).unwrap()
    }

    #[test]
    fn chase_takes_example() {
        let m = mapping(
            "schema R1 { Takes/2 } schema R2 { Takes1/2, Student/2 }
             map M12 : R1 -> R2 { Takes(n,c) -> Takes1(n,c); Takes(n,c) -> exists s . Student(n,s); }",
        );
        let r = chase(&m, &src(&m, "Takes(Chris, logic).")).unwrap();
        assert_eq!(r.result, tgt(&m, "Takes1(Chris, logic). Student(Chris, ?n1)."));
        assert!(matches!(&r.nulls[&Value::null("n1")], NullOrigin::Existential { var, .. } if var == "s"));
        assert!(chase(&m, &src(&m, "")).unwrap().result.is_empty());
    }

    #[test]
    fn duplicates_collapse() {
        let m = mapping("schema S { S/2 } schema T { T/1 } map M : S -> T { S(x,y) -> T(x); }");
        let r = chase(&m, &src(&m, "S(1,2). S(1,3).")).unwrap();
        assert_eq!(r.result, tgt(&m, "T(1)."));
        assert_eq!(r.facts.len(), 1);
    }

    #[test]
    fn universal_solutions() {
        let m = mapping("schema S { S/2 } schema T { T/1 } map M : S -> T { S(x,y) -> T(x); }");
        let i = src(&m, "S(1,2).");
        assert!(is_universal_solution(&m, &i, &tgt(&m, "T(1).")).unwrap());
        assert!(is_universal_solution(&m, &i, &tgt(&m, "T(1). T(?n9).")).unwrap());
        assert!(!is_universal_solution(&m, &i, &tgt(&m, "T(1). T(7).")).unwrap());
    }

    #[test]
    fn containment_examples() {
        let m = mapping("schema S { S/2 } schema T { T/1 } map M : S -> T { S(x,y) -> T(x); }");
        let (a, b, c) = (src(&m, "S(1,2)."), src(&m, "S(1,3)."), src(&m, "S(2,2)."));
        assert!(sol_subseteq(&m, &b, &a).unwrap());
        assert!(sol_subseteq(&m, &a, &b).unwrap());
        assert!(data_exchange_equivalent(&m, &a, &b).unwrap());
        assert!(!sol_subseteq(&m, &c, &a).unwrap());
        assert!(sol_subseteq(&m, &a, &a).unwrap());
        let copy = mapping("schema S { S/1 } schema T { T/1 } map M : S -> T { S(x) -> T(x); }");
        assert!(!data_exchange_equivalent(&copy, &src(&copy, "S(1)."), &src(&copy, "S(2).")).unwrap());
    }

    #[test]
    fn herbrand_chase_respects_equalities() {
        let m = mapping(
            "functions f/1
             schema R1 { Emp/1 } schema R3 { Mgr/2, SelfMgr/1 }
             map M13 : R1 -> R3 exists f { Emp(e) -> Mgr(e, f(e)); Emp(e) & e = f(e) -> SelfMgr(e); }",
        );
        let r = chase(&m, &src(&m, "Emp(1).")).unwrap();
        assert_eq!(r.result, tgt(&m, "Mgr(1, ?n1)."));
        assert_eq!(r.nulls[&Value::null("n1")], NullOrigin::Term("f(1)".into()));
    }
}
