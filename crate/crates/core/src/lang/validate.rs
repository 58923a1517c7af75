use std::collections::BTreeSet;
use std::fmt;

use crate::error::MapError;
use crate::lang::ast::{Atom, Body, Conjunct, Direction, MappingSpec, Query, SoTgd, Term, Var};
use crate::model::Schema;

/// A broken well-formedness rule, with where and on what symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub location: String,
    pub symbol: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: `{}`: {}", self.rule, self.location, self.symbol, self.message)
    }
}

impl From<Violation> for MapError {
    fn from(v: Violation) -> Self {
        MapError::semantic(v.symbol, format!("{} ({}, {})", v.message, v.rule, v.location))
    }
}

struct Report {
    out: Vec<Violation>,
}

impl Report {
    fn add(&mut self, rule: &'static str, location: &str, symbol: impl Into<String>, message: impl Into<String>) {
        self.out.push(Violation {
            rule,
            location: location.to_string(),
            symbol: symbol.into(),
            message: message.into(),
        });
    }

    fn relational(&mut self, atom: &Atom, schema: &Schema, loc: &str) {
        if let Atom::Rel { rel, args } = atom {
            match schema.arity(rel) {
                None => self.add(
                    "unknown-relation",
                    loc,
                    rel.as_str(),
                    format!("relation not in schema {}", schema.name()),
                ),
                Some(a) if a != args.len() => self.add(
                    "arity",
                    loc,
                    rel.as_str(),
                    format!("expected {a} arguments, got {}", args.len()),
                ),
                Some(_) => {}
            }
        }
    }

    fn no_functions(&mut self, atoms: &[Atom], loc: &str) {
        for a in atoms {
            for t in a.terms() {
                t.visit_apps(&mut |f, _| {
                    self.add("function-term", loc, f, "function terms are only allowed in SO-tgds")
                });
            }
        }
    }
}

/// Variables bound by relational atoms, extended through equality chains
/// to bound variables or constants.
pub(crate) fn bound_vars(atoms: &[Atom], extra: &BTreeSet<Var>) -> BTreeSet<Var> {
    let mut bound: BTreeSet<Var> = extra.clone();
    for a in atoms.iter().filter(|a| a.is_relational()) {
        let mut vs = Vec::new();
        a.collect_vars(&mut vs);
        bound.extend(vs);
    }
    loop {
        let mut grew = false;
        for a in atoms {
            if let Atom::Eq(l, r) = a {
                let is_bound = |t: &Term, b: &BTreeSet<Var>| match t {
                    Term::Var(v) => b.contains(v),
                    Term::Const(_) => true,
                    Term::App(..) => false,
                };
                for (x, other) in [(l, r), (r, l)] {
                    if let Term::Var(v) = x {
                        if !bound.contains(v) && is_bound(other, &bound) {
                            bound.insert(v.clone());
                            grew = true;
                        }
                    }
                }
            }
        }
        if !grew {
            return bound;
        }
    }
}

fn check_disjunct(
    rep: &mut Report,
    d: &Conjunct,
    outer: &BTreeSet<Var>,
    loc: &str,
) {
    let mut seen = BTreeSet::new();
    for y in &d.exists {
        if outer.contains(y) {
            rep.add("shadowing", loc, y.as_str(), "existential variable also occurs as a universal");
        }
        if !seen.insert(y.clone()) {
            rep.add("duplicate-variable", loc, y.as_str(), "existential variable quantified twice");
        }
    }
    if d.atoms.is_empty() {
        rep.add("empty-conjunction", loc, "", "conjunction without atoms");
    }
    let bound = bound_vars(&d.atoms, outer);
    for v in d.vars() {
        if !outer.contains(&v) && !seen.contains(&v) {
            rep.add("unsafe-variable", loc, v.as_str(), "variable is neither universal nor existentially quantified");
        } else if !bound.contains(&v) {
            rep.add("unsafe-variable", loc, v.as_str(), "variable does not occur in a relational atom");
        }
    }
}

/// Checks every typing and safety rule of a mapping; empty means valid.
pub fn validate(spec: &MappingSpec) -> Vec<Violation> {
    let mut rep = Report { out: Vec::new() };
    let (src, tgt) = (&*spec.source, &*spec.target);
    for r in src.relations() {
        if tgt.contains(&r.name) {
            rep.add(
                "schema-disjoint",
                &format!("map {}", spec.name),
                r.name.as_str(),
                "relation occurs in both schemas",
            );
        }
    }
    match &spec.body {
        Body::Dependencies(ds) => {
            let dir: Option<Direction> = ds.first().map(|d| d.direction);
            for (i, d) in ds.iter().enumerate() {
                let loc = format!("dependency {}", i + 1);
                if Some(d.direction) != dir {
                    rep.add("direction", &loc, "", "dependencies of one mapping must share a direction");
                }
                if !d.premise.iter().any(Atom::is_relational) {
                    rep.add("empty-premise", &loc, "", "premise needs a relational atom");
                }
                for a in &d.premise {
                    rep.relational(a, src, &loc);
                    if let Atom::Eq(..) = a {
                        rep.add("feature-placement", &loc, "=", "equalities are only allowed in conclusions");
                    }
                }
                rep.no_functions(&d.premise, &loc);
                let universals: BTreeSet<Var> = d.universals().into_iter().collect();
                let bound = bound_vars(&d.premise, &BTreeSet::new());
                for v in &universals {
                    if !bound.contains(v) {
                        rep.add("unsafe-variable", &loc, v.as_str(), "premise variable does not occur in a relational atom");
                    }
                }
                for c in &d.conclusion {
                    for a in &c.atoms {
                        rep.relational(a, tgt, &loc);
                        match a {
                            Atom::Neq(..) => rep.add("feature-placement", &loc, "!=", "inequalities are only allowed in premises"),
                            Atom::IsConst(_) => rep.add("feature-placement", &loc, "C", "C(.) is only allowed in premises"),
                            _ => {}
                        }
                    }
                    rep.no_functions(&c.atoms, &loc);
                    check_disjunct(&mut rep, c, &universals, &loc);
                }
            }
        }
        Body::SoTgd(s) => validate_so(&mut rep, s, src, tgt),
    }
    rep.out
}

fn validate_so(rep: &mut Report, s: &SoTgd, src: &Schema, tgt: &Schema) {
    let mut names = BTreeSet::new();
    for (f, _) in &s.functions {
        if !names.insert(f) {
            rep.add("function-arity", "functions", f.as_str(), "function declared twice");
        }
    }
    for (i, c) in s.clauses.iter().enumerate() {
        let loc = format!("clause {}", i + 1);
        if !c.premise.iter().any(Atom::is_relational) {
            rep.add("empty-premise", &loc, "", "premise needs a relational atom");
        }
        if c.conclusion.is_empty() {
            rep.add("empty-conjunction", &loc, "", "conclusion without atoms");
        }
        for a in &c.premise {
            match a {
                Atom::Rel { rel, args } => {
                    rep.relational(a, src, &loc);
                    if args.iter().any(Term::is_app) {
                        rep.add("so-condition-1", &loc, rel.as_str(), "premise relational atoms take variables only");
                    }
                }
                Atom::Eq(..) => {}
                Atom::Neq(..) | Atom::IsConst(_) => {
                    rep.add("so-condition-3", &loc, "", "premises may only contain relational atoms and equalities")
                }
            }
        }
        for a in &c.conclusion {
            if a.is_relational() {
                rep.relational(a, tgt, &loc);
            } else {
                rep.add("so-condition-2", &loc, "", "conclusions may only contain relational atoms");
            }
        }
        for a in c.premise.iter().chain(&c.conclusion) {
            for t in a.terms() {
                t.visit_apps(&mut |f, args| match s.arity(f) {
                    None => rep.add("undeclared-function", &loc, f, "function symbol not declared"),
                    Some(n) if n != args.len() => rep.add(
                        "function-arity",
                        &loc,
                        f,
                        format!("declared with arity {n}, applied to {}", args.len()),
                    ),
                    Some(_) => {}
                });
            }
        }
        let universals: BTreeSet<Var> = c.universals().into_iter().collect();
        let mut all = Vec::new();
        c.premise.iter().chain(&c.conclusion).for_each(|a| a.collect_vars(&mut all));
        for v in all {
            if !universals.contains(&v) {
                rep.add("so-condition-4", &loc, v.as_str(), "variable does not occur in a relational premise atom");
            }
        }
    }
    if s.plain {
        if s.has_equalities() {
            rep.add("plain-equality", "sotgd", "=", "plain SO-tgds have no equality atoms");
        }
        if s.max_depth() > 1 {
            rep.add("plain-nesting", "sotgd", "", "plain SO-tgds have no nested function terms");
        }
    }
}

/// Checks a query against the schema it ranges over.
pub fn validate_query(q: &Query, schema: &Schema) -> Vec<Violation> {
    let mut rep = Report { out: Vec::new() };
    let free: BTreeSet<Var> = q.free.iter().cloned().collect();
    if free.len() != q.free.len() {
        rep.add("duplicate-variable", &format!("query {}", q.name), "", "free variable listed twice");
    }
    for (i, d) in q.disjuncts.iter().enumerate() {
        let loc = format!("query {} disjunct {}", q.name, i + 1);
        for a in &d.atoms {
            rep.relational(a, schema, &loc);
        }
        rep.no_functions(&d.atoms, &loc);
        check_disjunct(&mut rep, d, &BTreeSet::new(), &loc);
        // free variables are implicitly quantified here, so recheck them as such
        rep.out.retain(|v| !(v.location == loc && v.rule == "unsafe-variable" && free.contains(&v.symbol)));
        let bound = bound_vars(&d.atoms, &BTreeSet::new());
        for x in &free {
            if !bound.contains(x) {
                rep.add("unsafe-variable", &loc, x.as_str(), "free variable must occur in every disjunct");
            }
        }
        for y in &d.exists {
            if free.contains(y) {
                rep.add("shadowing", &loc, y.as_str(), "existential variable is also free");
            }
        }
    }
    rep.out
}
