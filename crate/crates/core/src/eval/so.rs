use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::eval::pattern::Pattern;
use crate::lang::{Atom, SoTgd, Term};
use crate::model::{Instance, Value};

/// An interpretation of function symbols as finite tables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FunctionTables {
    pub entries: BTreeMap<(String, Vec<Value>), Value>,
}

impl FunctionTables {
    pub fn get(&self, f: &str, args: &[Value]) -> Option<&Value> {
        self.entries.get(&(f.to_string(), args.to_vec()))
    }
}

impl fmt::Display for FunctionTables {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .entries
            .iter()
            .map(|((g, args), v)| {
                let args: Vec<String> = args.iter().map(ToString::to_string).collect();
                format!("{g}({}) = {v}", args.join(", "))
            })
            .collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

#[derive(Debug, Clone)]
enum CTerm {
    Var(usize),
    Val(Value),
    App(usize, Vec<CTerm>),
}

struct Clause {
    eqs: Vec<(CTerm, CTerm)>,
    conclusion: Vec<(String, Vec<CTerm>)>,
}

struct Ctx<'a> {
    j: &'a Instance,
    names: Vec<String>,
    clauses: Vec<Clause>,
    triggers: Vec<(usize, Vec<Value>)>,
    candidates: Vec<Value>,
}

#[derive(Default)]
struct State {
    table: HashMap<(usize, Vec<Value>), Value>,
    fresh: Vec<Value>,
    witness: Option<HashMap<(usize, Vec<Value>), Value>>,
}

/// Label prefix of solver-invented values; unparseable, so it never
/// clashes with a null read from a file.
const FRESH_PREFIX: &str = "~";

fn compile_term(t: &Term, pat: &Pattern, names: &[String]) -> CTerm {
    match t {
        Term::Var(v) => CTerm::Var(pat.index(v).expect("clause variable bound by premise")),
        Term::Const(c) => CTerm::Val(c.clone()),
        Term::App(f, args) => CTerm::App(
            names.iter().position(|g| g == f).expect("declared function"),
            args.iter().map(|a| compile_term(a, pat, names)).collect(),
        ),
    }
}

type Cont<'k, T> = &'k mut dyn FnMut(&mut State, T) -> bool;
type Done<'k> = &'k mut dyn FnMut(&mut State) -> bool;

impl Ctx<'_> {
    /// Every value `t` may take, given the partial tables; unset entries
    /// branch over existing values, used fresh values and one new one.
    fn eval(&self, st: &mut State, t: &CTerm, b: &[Value], k: Cont<'_, Value>) -> bool {
        match t {
            CTerm::Var(i) => k(st, b[*i].clone()),
            CTerm::Val(v) => k(st, v.clone()),
            CTerm::App(f, args) => self.eval_list(st, args, b, &mut Vec::new(), &mut |st, vals| {
                let key = (*f, vals);
                if let Some(v) = st.table.get(&key) {
                    let v = v.clone();
                    return k(st, v);
                }
                let mut options: Vec<Value> = self.candidates.clone();
                options.extend(st.fresh.iter().cloned());
                for v in options {
                    st.table.insert(key.clone(), v.clone());
                    if k(st, v) {
                        return true;
                    }
                }
                let v = Value::null(format!("{FRESH_PREFIX}{}", st.fresh.len() + 1));
                st.fresh.push(v.clone());
                st.table.insert(key.clone(), v.clone());
                let found = k(st, v);
                st.fresh.pop();
                st.table.remove(&key);
                found
            }),
        }
    }

    fn eval_list(
        &self,
        st: &mut State,
        ts: &[CTerm],
        b: &[Value],
        acc: &mut Vec<Value>,
        k: Cont<'_, Vec<Value>>,
    ) -> bool {
        match ts.split_first() {
            None => k(st, acc.clone()),
            Some((t, rest)) => self.eval(st, t, b, &mut |st, v| {
                acc.push(v);
                let r = self.eval_list(st, rest, b, acc, k);
                acc.pop();
                r
            }),
        }
    }

    /// Continues with every extension in which `t` denotes `v`.
    fn force(&self, st: &mut State, t: &CTerm, v: &Value, b: &[Value], k: Done<'_>) -> bool {
        match t {
            CTerm::Var(i) => b[*i] == *v && k(st),
            CTerm::Val(c) => c == v && k(st),
            CTerm::App(f, args) => self.eval_list(st, args, b, &mut Vec::new(), &mut |st, vals| {
                let key = (*f, vals);
                match st.table.get(&key) {
                    Some(w) => w == v && k(st),
                    None => {
                        st.table.insert(key.clone(), v.clone());
                        let r = k(st);
                        st.table.remove(&key);
                        r
                    }
                }
            }),
        }
    }

    fn force_all(&self, st: &mut State, ts: &[CTerm], vs: &[Value], b: &[Value], k: Done<'_>) -> bool {
        match ts.split_first() {
            None => k(st),
            Some((t, rest)) => self.force(st, t, &vs[0], b, &mut |st| self.force_all(st, rest, &vs[1..], b, k)),
        }
    }

    fn equalities_hold(&self, st: &mut State, c: &Clause, e: usize, b: &[Value], k: Done<'_>) -> bool {
        match c.eqs.get(e) {
            None => k(st),
            Some((l, r)) => self.eval(st, l, b, &mut |st, v| {
                self.force(st, r, &v, b, &mut |st| self.equalities_hold(st, c, e + 1, b, k))
            }),
        }
    }

    fn conclusion_holds(&self, st: &mut State, c: &Clause, a: usize, b: &[Value], k: Done<'_>) -> bool {
        match c.conclusion.get(a) {
            None => k(st),
            Some((rel, args)) => {
                for fact in self.j.tuples(rel) {
                    if self.force_all(st, args, fact, b, &mut |st| self.conclusion_holds(st, c, a + 1, b, k)) {
                        return true;
                    }
                }
                false
            }
        }
    }

    fn process(&self, st: &mut State, i: usize) -> bool {
        let Some((ci, b)) = self.triggers.get(i) else {
            st.witness = Some(st.table.clone());
            return true;
        };
        let c = &self.clauses[*ci];
        let next = &mut |st: &mut State| self.process(st, i + 1);
        if self.equalities_hold(st, c, 0, b, &mut |st| self.conclusion_holds(st, c, 0, b, next)) {
            return true;
        }
        for (l, r) in &c.eqs {
            let falsified = self.eval(st, l, b, &mut |st, v| {
                self.eval(st, r, b, &mut |st, w| v != w && self.process(st, i + 1))
            });
            if falsified {
                return true;
            }
        }
        false
    }
}

/// Searches for function tables witnessing that `(i, j)` satisfies `so`.
///
/// Triggers are the premise matches in `i`; each must either falsify an
/// equality of its clause or have its conclusion present in `j`. Function
/// values range over `dom(i) ∪ dom(j)` plus fresh values, of which only one
/// new one is tried at a time since fresh values are interchangeable.
pub fn solve_so_tgd(i: &Instance, j: &Instance, so: &SoTgd) -> Option<FunctionTables> {
    let names: Vec<String> = so.functions.iter().map(|(f, _)| f.clone()).collect();
    let mut clauses = Vec::new();
    let mut triggers: Vec<(usize, Vec<Value>)> = Vec::new();
    // equality-free clauses fix table entries first
    let mut order: Vec<usize> = (0..so.clauses.len()).collect();
    order.sort_by_key(|&k| so.clauses[k].equalities().next().is_some());
    for (ci, &k) in order.iter().enumerate() {
        let c = &so.clauses[k];
        let rels: Vec<Atom> = c.premise.iter().filter(|a| a.is_relational()).cloned().collect();
        let pat = Pattern::compile(&rels, &[]);
        let clause = Clause {
            eqs: c
                .equalities()
                .map(|(l, r)| (compile_term(l, &pat, &names), compile_term(r, &pat, &names)))
                .collect(),
            conclusion: c
                .conclusion
                .iter()
                .filter_map(|a| match a {
                    Atom::Rel { rel, args } => {
                        Some((rel.clone(), args.iter().map(|t| compile_term(t, &pat, &names)).collect()))
                    }
                    _ => None,
                })
                .collect(),
        };
        pat.run(i, &[], &mut |b| {
            triggers.push((ci, b.to_vec()));
            false
        });
        clauses.push(clause);
    }
    let mut candidates: BTreeSet<Value> = i.active_domain();
    candidates.extend(j.active_domain());
    let ctx = Ctx {
        j,
        names,
        clauses,
        triggers,
        candidates: candidates.into_iter().collect(),
    };
    let mut st = State::default();
    if !ctx.process(&mut st, 0) {
        return None;
    }
    let table = st.witness.expect("witness recorded on success");
    Some(FunctionTables {
        entries: table
            .into_iter()
            .map(|((f, args), v)| ((ctx.names[f].clone(), args), v))
            .collect(),
    })
}

pub fn satisfies_so_tgd(i: &Instance, j: &Instance, so: &SoTgd) -> bool {
    solve_so_tgd(i, j, so).is_some()
}
