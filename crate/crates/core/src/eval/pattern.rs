use std::collections::BTreeMap;

use crate::lang::{Atom, Term, Var};
use crate::model::{Instance, Value};

#[derive(Debug, Clone)]
enum Slot {
    Var(usize),
    Val(Value),
}

/// A conjunction of function-free atoms compiled for repeated matching.
///
/// Relational atoms are joined by backtracking in a static order that
/// prefers atoms with more bound positions; equalities then propagate
/// bindings, and the remaining comparisons are checked last.
#[derive(Debug, Clone)]
pub(crate) struct Pattern {
    vars: Vec<Var>,
    prebound: usize,
    /// Relational atoms in join order, each with the variables it binds
    /// first.
    rels: Vec<(String, Vec<Slot>, Vec<usize>)>,
    eqs: Vec<(Slot, Slot)>,
    neqs: Vec<(Slot, Slot)>,
    consts: Vec<Slot>,
    /// Variables merged into another one by a variable equality.
    aliases: Vec<(Var, Var)>,
}

impl Pattern {
    /// `prebound` variables take indices `0..prebound.len()` and must be
    /// supplied to every run.
    pub(crate) fn compile(atoms: &[Atom], prebound: &[Var]) -> Pattern {
        let mut vars: Vec<Var> = prebound.to_vec();
        let slot = |t: &Term, vars: &mut Vec<Var>| match t {
            Term::Var(v) => Slot::Var(match vars.iter().position(|w| w == v) {
                Some(i) => i,
                None => {
                    vars.push(v.clone());
                    vars.len() - 1
                }
            }),
            Term::Const(c) => Slot::Val(c.clone()),
            Term::App(..) => panic!("function term in a first-order pattern"),
        };
        let mut rels = Vec::new();
        let mut eqs = Vec::new();
        let mut neqs = Vec::new();
        let mut consts = Vec::new();
        for a in atoms {
            match a {
                Atom::Rel { rel, args } => {
                    let slots = args.iter().map(|t| slot(t, &mut vars)).collect();
                    rels.push((rel.clone(), slots));
                }
                Atom::Eq(l, r) => eqs.push((slot(l, &mut vars), slot(r, &mut vars))),
                Atom::Neq(l, r) => neqs.push((slot(l, &mut vars), slot(r, &mut vars))),
                Atom::IsConst(t) => consts.push(slot(t, &mut vars)),
            }
        }
        // greedy join order: most already-bound positions first
        let mut bound = vec![false; vars.len()];
        bound[..prebound.len()].iter_mut().for_each(|b| *b = true);
        let mut ordered = Vec::with_capacity(rels.len());
        while !rels.is_empty() {
            let score = |(_, slots): &(String, Vec<Slot>)| {
                let b = slots
                    .iter()
                    .filter(|s| match s {
                        Slot::Var(i) => bound[*i],
                        Slot::Val(_) => true,
                    })
                    .count();
                (b, usize::MAX - slots.len())
            };
            let best = (0..rels.len()).max_by_key(|&i| (score(&rels[i]), usize::MAX - i)).expect("non-empty");
            let (rel, slots) = rels.remove(best);
            let mut fresh = Vec::new();
            for s in &slots {
                if let Slot::Var(i) = s {
                    if !bound[*i] {
                        bound[*i] = true;
                        fresh.push(*i);
                    }
                }
            }
            ordered.push((rel, slots, fresh));
        }
        Pattern {
            vars,
            prebound: prebound.len(),
            rels: ordered,
            eqs,
            neqs,
            consts,
            aliases: Vec::new(),
        }
    }

    /// Like `compile` without prebound variables, but first merges
    /// variables that are equated with each other, so the join itself
    /// enforces those equalities.
    pub(crate) fn compile_merged(atoms: &[Atom]) -> Pattern {
        let mut rep: BTreeMap<Var, Var> = BTreeMap::new();
        fn find(rep: &BTreeMap<Var, Var>, v: &str) -> Var {
            let mut v = v.to_string();
            while let Some(p) = rep.get(&v) {
                v = p.clone();
            }
            v
        }
        let mut rest = Vec::with_capacity(atoms.len());
        for a in atoms {
            match a {
                Atom::Eq(Term::Var(l), Term::Var(r)) => {
                    let (l, r) = (find(&rep, l), find(&rep, r));
                    if l != r {
                        let (keep, drop) = if l < r { (l, r) } else { (r, l) };
                        rep.insert(drop, keep);
                    }
                }
                _ => rest.push(a),
            }
        }
        let aliases: Vec<(Var, Var)> = rep.keys().map(|v| (v.clone(), find(&rep, v))).collect();
        let sub = |v: &str| aliases.iter().find(|(a, _)| a == v).map(|(_, b)| Term::Var(b.clone()));
        let merged: Vec<Atom> = rest.iter().map(|a| a.substitute(&sub)).collect();
        let mut pat = Pattern::compile(&merged, &[]);
        pat.aliases = aliases;
        pat
    }

    pub(crate) fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub(crate) fn index(&self, v: &str) -> Option<usize> {
        let v = self.aliases.iter().find(|(a, _)| a == v).map_or(v, |(_, b)| b.as_str());
        self.vars.iter().position(|w| w == v)
    }

    /// Calls `cb` with each satisfying assignment (indexed like `vars()`)
    /// until it returns `true`. Returns whether the callback stopped early.
    pub(crate) fn run(&self, inst: &Instance, init: &[Value], cb: &mut dyn FnMut(&[Value]) -> bool) -> bool {
        debug_assert_eq!(init.len(), self.prebound);
        let mut binding: Vec<Option<Value>> = vec![None; self.vars.len()];
        for (b, v) in binding.iter_mut().zip(init) {
            *b = Some(v.clone());
        }
        let mut scratch = Vec::with_capacity(self.vars.len());
        self.join(inst, 0, &mut binding, &mut scratch, cb)
    }

    pub(crate) fn exists(&self, inst: &Instance, init: &[Value]) -> bool {
        self.run(inst, init, &mut |_| true)
    }

    fn join(
        &self,
        inst: &Instance,
        k: usize,
        binding: &mut [Option<Value>],
        scratch: &mut Vec<Value>,
        cb: &mut dyn FnMut(&[Value]) -> bool,
    ) -> bool {
        if k == self.rels.len() {
            return self.finish(binding, scratch, cb);
        }
        let (rel, slots, fresh) = &self.rels[k];
        for tuple in inst.tuples(rel) {
            let mut ok = true;
            for (s, v) in slots.iter().zip(tuple) {
                match s {
                    Slot::Val(c) => ok = c == v,
                    Slot::Var(i) => match &binding[*i] {
                        Some(b) => ok = b == v,
                        None => binding[*i] = Some(v.clone()),
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok && self.join(inst, k + 1, binding, scratch, cb) {
                return true;
            }
            for &i in fresh {
                binding[i] = None;
            }
        }
        false
    }

    fn finish(&self, binding: &[Option<Value>], scratch: &mut Vec<Value>, cb: &mut dyn FnMut(&[Value]) -> bool) -> bool {
        if self.eqs.is_empty() && self.neqs.is_empty() && self.consts.is_empty() {
            scratch.clear();
            for b in binding {
                match b {
                    Some(v) => scratch.push(v.clone()),
                    None => return false,
                }
            }
            return cb(scratch);
        }
        let mut local: Vec<Option<Value>> = binding.to_vec();
        let get = |s: &Slot, b: &[Option<Value>]| -> Option<Value> {
            match s {
                Slot::Val(c) => Some(c.clone()),
                Slot::Var(i) => b[*i].clone(),
            }
        };
        let mut pending: Vec<&(Slot, Slot)> = self.eqs.iter().collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for eq in pending {
                match (get(&eq.0, &local), get(&eq.1, &local)) {
                    (Some(a), Some(b)) => {
                        if a != b {
                            return false;
                        }
                    }
                    (Some(a), None) => {
                        if let Slot::Var(i) = eq.1 {
                            local[i] = Some(a);
                        }
                    }
                    (None, Some(b)) => {
                        if let Slot::Var(i) = eq.0 {
                            local[i] = Some(b);
                        }
                    }
                    (None, None) => rest.push(eq),
                }
            }
            if rest.len() == before {
                // unsafe: both sides unbound
                return false;
            }
            pending = rest;
        }
        for (l, r) in &self.neqs {
            match (get(l, &local), get(r, &local)) {
                (Some(a), Some(b)) if a != b => {}
                _ => return false,
            }
        }
        for s in &self.consts {
            match get(s, &local) {
                Some(v) if v.is_const() => {}
                _ => return false,
            }
        }
        if local.iter().any(Option::is_none) {
            return false;
        }
        let full: Vec<Value> = local.into_iter().map(|v| v.expect("checked")).collect();
        cb(&full)
    }
}
