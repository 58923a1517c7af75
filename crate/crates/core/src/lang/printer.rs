use std::fmt::{self, Write as _};

use crate::lang::ast::{Atom, Body, Conjunct, Dependency, Direction, MappingSpec, Query, Semantics, SoClause, SoTgd, Term};
use crate::model::Schema;

fn join<T: fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{c}"),
            Term::App(g, args) => write!(f, "{g}({})", join(args, ", ")),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel { rel, args } => write!(f, "{rel}({})", join(args, ", ")),
            Atom::Eq(a, b) => write!(f, "{a} = {b}"),
            Atom::Neq(a, b) => write!(f, "{a} != {b}"),
            Atom::IsConst(t) => write!(f, "C({t})"),
        }
    }
}

impl fmt::Display for Conjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.exists.is_empty() {
            write!(f, "exists {} . ", self.exists.join(", "))?;
        }
        f.write_str(&join(&self.atoms, " & "))
    }
}

fn fmt_disjunction(ds: &[Conjunct]) -> String {
    if ds.is_empty() {
        "false".to_string()
    } else {
        join(ds, " | ")
    }
}

impl fmt::Display for Dependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", join(&self.premise, " & "), fmt_disjunction(&self.conclusion))
    }
}

impl fmt::Display for SoClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", join(&self.premise, " & "), join(&self.conclusion, " & "))
    }
}

/// One-line rendering: `exists f, g ( clause ; clause )`.
impl fmt::Display for SoTgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.functions.is_empty() {
            let names: Vec<&str> = self.functions.iter().map(|(g, _)| g.as_str()).collect();
            write!(f, "exists {} ", names.join(", "))?;
        }
        write!(f, "({})", join(&self.clauses, " ; "))
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) = {}", self.name, self.free.join(", "), fmt_disjunction(&self.disjuncts))
    }
}

fn print_schema(out: &mut String, s: &Schema) {
    let _ = write!(out, "schema {} {{", s.name());
    for r in s.relations() {
        let _ = write!(out, " {}/{},", r.name, r.arity);
    }
    out.push_str(" }\n");
}

/// Renders a mapping in the file syntax accepted by `parse_mapping`.
pub fn print_mapping(spec: &MappingSpec) -> String {
    let mut out = String::new();
    let reverse = matches!(&spec.body, Body::Dependencies(ds) if ds.first().is_some_and(|d| d.direction == Direction::TargetToSource));
    if let Body::SoTgd(s) = &spec.body {
        out.push_str("functions");
        let sigs: Vec<String> = s.functions.iter().map(|(g, a)| format!("{g}/{a}")).collect();
        if !sigs.is_empty() {
            out.push(' ');
            out.push_str(&sigs.join(", "));
        }
        out.push('\n');
    }
    if reverse {
        print_schema(&mut out, &spec.target);
        print_schema(&mut out, &spec.source);
    } else {
        print_schema(&mut out, &spec.source);
        print_schema(&mut out, &spec.target);
    }
    let _ = write!(out, "map {} : {} -> {}", spec.name, spec.source.name(), spec.target.name());
    if let Body::SoTgd(s) = &spec.body {
        if s.plain {
            out.push_str(" plain");
        }
        if !s.functions.is_empty() {
            let names: Vec<&str> = s.functions.iter().map(|(g, _)| g.as_str()).collect();
            let _ = write!(out, " exists {}", names.join(", "));
        }
    }
    if spec.semantics != Semantics::Standard {
        let _ = write!(out, " semantics {}", spec.semantics.keyword());
    }
    out.push_str(" {\n");
    match &spec.body {
        Body::Dependencies(ds) => ds.iter().for_each(|d| {
            let _ = writeln!(out, "  {d};");
        }),
        Body::SoTgd(s) => s.clauses.iter().for_each(|c| {
            let _ = writeln!(out, "  {c};");
        }),
    }
    out.push_str("}\n");
    out
}

/// Renders a query in the file syntax accepted by `parse_query`.
pub fn print_query(q: &Query) -> String {
    format!(
        "query {}({}) over {} {{ {} }}\n",
        q.name,
        q.free.join(", "),
        q.schema,
        fmt_disjunction(&q.disjuncts)
    )
}
