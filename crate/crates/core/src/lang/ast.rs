use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::model::{Schema, Value};

pub type Var = String;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Const(Value),
    /// Function application; only legal inside SO-tgds.
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(f.to_string(), args)
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_app(&self) -> bool {
        matches!(self, Term::App(..))
    }

    /// Collects variables in left-to-right order of first occurrence.
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Nesting depth of function applications (a variable has depth 0).
    pub fn depth(&self) -> usize {
        match self {
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn is_nested(&self) -> bool {
        self.depth() > 1
    }

    pub fn substitute(&self, f: &impl Fn(&str) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| a.substitute(f)).collect()),
        }
    }

    pub fn contains_var(&self, var: &str) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::Const(_) => false,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(var)),
        }
    }

    pub(crate) fn visit_apps<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a [Term])) {
        if let Term::App(g, args) = self {
            f(g, args);
            args.iter().for_each(|a| a.visit_apps(f));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Rel { rel: String, args: Vec<Term> },
    Eq(Term, Term),
    Neq(Term, Term),
    /// The constant predicate `C(t)`: true iff `t` denotes a constant.
    IsConst(Term),
}

impl Atom {
    pub fn rel(rel: &str, args: Vec<Term>) -> Atom {
        Atom::Rel {
            rel: rel.to_string(),
            args,
        }
    }

    /// `R(x, y, ...)` over plain variables.
    pub fn rel_vars(rel: &str, vars: &[&str]) -> Atom {
        Atom::rel(rel, vars.iter().map(|v| Term::var(v)).collect())
    }

    pub fn is_relational(&self) -> bool {
        matches!(self, Atom::Rel { .. })
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Rel { args, .. } => args.iter().collect(),
            Atom::Eq(a, b) | Atom::Neq(a, b) => vec![a, b],
            Atom::IsConst(t) => vec![t],
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        self.terms().into_iter().for_each(|t| t.collect_vars(out));
    }

    pub fn substitute(&self, f: &impl Fn(&str) -> Option<Term>) -> Atom {
        match self {
            Atom::Rel { rel, args } => Atom::Rel {
                rel: rel.clone(),
                args: args.iter().map(|a| a.substitute(f)).collect(),
            },
            Atom::Eq(a, b) => Atom::Eq(a.substitute(f), b.substitute(f)),
            Atom::Neq(a, b) => Atom::Neq(a.substitute(f), b.substitute(f)),
            Atom::IsConst(t) => Atom::IsConst(t.substitute(f)),
        }
    }
}

pub fn vars_of(atoms: &[Atom]) -> Vec<Var> {
    let mut out = Vec::new();
    atoms.iter().for_each(|a| a.collect_vars(&mut out));
    out
}

/// Variables occurring in some relational atom.
pub fn relational_vars(atoms: &[Atom]) -> Vec<Var> {
    let mut out = Vec::new();
    atoms
        .iter()
        .filter(|a| a.is_relational())
        .for_each(|a| a.collect_vars(&mut out));
    out
}

/// One disjunct of a query or dependency conclusion: `exists ȳ . atoms`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Conjunct {
    pub exists: Vec<Var>,
    pub atoms: Vec<Atom>,
}

impl Conjunct {
    pub fn new(exists: Vec<Var>, atoms: Vec<Atom>) -> Self {
        Conjunct { exists, atoms }
    }

    pub fn vars(&self) -> Vec<Var> {
        vars_of(&self.atoms)
    }
}

/// Which extensions of conjunctive queries a formula uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Fragment {
    pub union: bool,
    pub eq: bool,
    pub neq: bool,
    pub cpred: bool,
}

impl Fragment {
    pub fn of_atoms(atoms: &[Atom]) -> Fragment {
        let mut f = Fragment::default();
        for a in atoms {
            match a {
                Atom::Eq(..) => f.eq = true,
                Atom::Neq(..) => f.neq = true,
                Atom::IsConst(_) => f.cpred = true,
                Atom::Rel { .. } => {}
            }
        }
        f
    }

    pub fn of_disjuncts(ds: &[Conjunct]) -> Fragment {
        let mut f = Fragment {
            union: ds.len() > 1,
            ..Fragment::default()
        };
        for d in ds {
            let g = Fragment::of_atoms(&d.atoms);
            f.eq |= g.eq;
            f.neq |= g.neq;
            f.cpred |= g.cpred;
        }
        f
    }

    pub fn is_plain_cq(&self) -> bool {
        *self == Fragment::default()
    }

    /// Whether every feature of `self` is also allowed by `other`.
    pub fn within(&self, other: &Fragment) -> bool {
        (!self.union || other.union)
            && (!self.eq || other.eq)
            && (!self.neq || other.neq)
            && (!self.cpred || other.cpred)
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.union { "UCQ" } else { "CQ" })?;
        let mut feats = Vec::new();
        if self.eq {
            feats.push("=");
        }
        if self.neq {
            feats.push("!=");
        }
        if self.cpred {
            feats.push("C");
        }
        if !feats.is_empty() {
            write!(f, "^{}", feats.join(","))?;
        }
        Ok(())
    }
}

/// A union of conjunctive queries with optional `=`, `!=`, `C(·)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Query {
    pub name: String,
    /// Schema the query ranges over (by name).
    pub schema: String,
    pub free: Vec<Var>,
    /// An empty list is the unsatisfiable query `false`.
    pub disjuncts: Vec<Conjunct>,
}

impl Query {
    pub fn cq(name: &str, schema: &str, free: &[&str], exists: &[&str], atoms: Vec<Atom>) -> Query {
        Query {
            name: name.to_string(),
            schema: schema.to_string(),
            free: free.iter().map(|v| v.to_string()).collect(),
            disjuncts: vec![Conjunct::new(exists.iter().map(|v| v.to_string()).collect(), atoms)],
        }
    }

    pub fn fragment(&self) -> Fragment {
        Fragment::of_disjuncts(&self.disjuncts)
    }

    pub fn is_false(&self) -> bool {
        self.disjuncts.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    SourceToTarget,
    TargetToSource,
}

/// The language pair `<L1, L2>` of a dependency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClassTag {
    pub premise: Fragment,
    pub conclusion: Fragment,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}>", self.premise, self.conclusion)
    }
}

/// `∀x̄ (premise → conclusion)`; universals are the premise variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dependency {
    pub premise: Vec<Atom>,
    /// Disjuncts of the conclusion; empty means `false`.
    pub conclusion: Vec<Conjunct>,
    pub direction: Direction,
}

impl Dependency {
    pub fn new(premise: Vec<Atom>, conclusion: Vec<Conjunct>, direction: Direction) -> Self {
        Dependency {
            premise,
            conclusion,
            direction,
        }
    }

    /// A tgd `premise -> exists ȳ . atoms` in the source-to-target direction.
    pub fn tgd(premise: Vec<Atom>, exists: &[&str], atoms: Vec<Atom>) -> Self {
        Dependency::new(
            premise,
            vec![Conjunct::new(exists.iter().map(|v| v.to_string()).collect(), atoms)],
            Direction::SourceToTarget,
        )
    }

    pub fn universals(&self) -> Vec<Var> {
        vars_of(&self.premise)
    }

    /// Universal variables that also occur in the conclusion.
    pub fn frontier(&self) -> Vec<Var> {
        let mut concl = Vec::new();
        for d in &self.conclusion {
            d.atoms.iter().for_each(|a| a.collect_vars(&mut concl));
        }
        self.universals().into_iter().filter(|v| concl.contains(v)).collect()
    }

    pub fn class(&self) -> ClassTag {
        ClassTag {
            premise: Fragment::of_atoms(&self.premise),
            conclusion: Fragment::of_disjuncts(&self.conclusion),
        }
    }

    pub fn is_st_tgd(&self) -> bool {
        let c = self.class();
        self.direction == Direction::SourceToTarget
            && c.premise.is_plain_cq()
            && c.conclusion.is_plain_cq()
            && self.conclusion.len() == 1
    }
}

/// One implication `∀x̄ (premise → conclusion)` of an SO-tgd.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SoClause {
    pub premise: Vec<Atom>,
    pub conclusion: Vec<Atom>,
}

impl SoClause {
    pub fn new(premise: Vec<Atom>, conclusion: Vec<Atom>) -> Self {
        SoClause { premise, conclusion }
    }

    pub fn universals(&self) -> Vec<Var> {
        relational_vars(&self.premise)
    }

    pub fn equalities(&self) -> impl Iterator<Item = (&Term, &Term)> + '_ {
        self.premise.iter().filter_map(|a| match a {
            Atom::Eq(l, r) => Some((l, r)),
            _ => None,
        })
    }
}

/// `∃f̄ (clause_1 ∧ ... ∧ clause_n)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SoTgd {
    pub functions: Vec<(String, usize)>,
    pub clauses: Vec<SoClause>,
    /// Declared plainness; `validate` checks it against the formula.
    pub plain: bool,
}

impl SoTgd {
    /// Builds an SO-tgd whose plain flag is computed from the clauses.
    pub fn new(functions: Vec<(String, usize)>, clauses: Vec<SoClause>) -> Self {
        let mut s = SoTgd {
            functions,
            clauses,
            plain: false,
        };
        s.plain = s.is_plain();
        s
    }

    /// No equality atoms and no function application nested in another.
    pub fn is_plain(&self) -> bool {
        self.clauses.iter().all(|c| {
            c.premise.iter().chain(&c.conclusion).all(|a| match a {
                Atom::Eq(..) => false,
                a => a.terms().iter().all(|t| !t.is_nested()),
            })
        })
    }

    pub fn arity(&self, f: &str) -> Option<usize> {
        self.functions.iter().find(|(g, _)| g == f).map(|(_, a)| *a)
    }

    pub fn has_equalities(&self) -> bool {
        self.clauses.iter().any(|c| c.equalities().next().is_some())
    }

    pub fn max_depth(&self) -> usize {
        self.clauses
            .iter()
            .flat_map(|c| c.premise.iter().chain(&c.conclusion))
            .flat_map(|a| a.terms())
            .map(Term::depth)
            .max()
            .unwrap_or(0)
    }

    pub fn used_functions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            for a in c.premise.iter().chain(&c.conclusion) {
                for t in a.terms() {
                    t.visit_apps(&mut |g, _| {
                        out.insert(g.to_string());
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Body {
    Dependencies(Vec<Dependency>),
    SoTgd(SoTgd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Semantics {
    #[default]
    Standard,
    /// `u(M)`: pairs whose target is a universal solution.
    Universal,
    /// `e(M)`: closure of `M` under homomorphisms on both sides.
    Extended,
}

impl Semantics {
    pub fn keyword(&self) -> &'static str {
        match self {
            Semantics::Standard => "standard",
            Semantics::Universal => "universal",
            Semantics::Extended => "extended",
        }
    }
}

/// A schema mapping `(source, target, body)` under a semantics.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MappingSpec {
    pub name: String,
    pub source: Arc<Schema>,
    pub target: Arc<Schema>,
    pub body: Body,
    pub semantics: Semantics,
}

impl MappingSpec {
    pub fn new(name: &str, source: Arc<Schema>, target: Arc<Schema>, body: Body) -> Self {
        MappingSpec {
            name: name.to_string(),
            source,
            target,
            body,
            semantics: Semantics::Standard,
        }
    }

    pub fn with_semantics(mut self, semantics: Semantics) -> Self {
        self.semantics = semantics;
        self
    }

    pub fn dependencies(&self) -> Option<&[Dependency]> {
        match &self.body {
            Body::Dependencies(ds) => Some(ds),
            Body::SoTgd(_) => None,
        }
    }

    pub fn so_tgd(&self) -> Option<&SoTgd> {
        match &self.body {
            Body::SoTgd(s) => Some(s),
            Body::Dependencies(_) => None,
        }
    }

    /// Standard semantics and a body made only of st-tgds.
    pub fn is_st_tgd_mapping(&self) -> bool {
        self.semantics == Semantics::Standard
            && self
                .dependencies()
                .is_some_and(|ds| ds.iter().all(Dependency::is_st_tgd))
    }

    /// The st-tgds of the body, or an error naming the offending class.
    pub fn st_tgds(&self) -> crate::Result<&[Dependency]> {
        let ds = self.dependencies().ok_or_else(|| {
            crate::MapError::Unsupported(format!("mapping {} is an SO-tgd, expected st-tgds", self.name))
        })?;
        if let Some(d) = ds.iter().find(|d| !d.is_st_tgd()) {
            return Err(crate::MapError::Unsupported(format!(
                "mapping {} has a {} {} dependency, expected st-tgds",
                self.name,
                d.class(),
                match d.direction {
                    Direction::SourceToTarget => "st",
                    Direction::TargetToSource => "ts",
                }
            )));
        }
        Ok(ds)
    }
}
