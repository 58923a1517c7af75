use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{MapError, Result};
use crate::lang::ast::{
    Atom, Body, Conjunct, Dependency, Direction, MappingSpec, Query, Semantics, SoClause, SoTgd, Term, Var,
};
use crate::lang::lexer::{syntax, tokenize, Tok, Token};
use crate::lang::validate::{validate, validate_query};
use crate::model::{Instance, Schema, Value};

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn starts_upper(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_uppercase())
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> MapError {
        let t = &self.toks[self.pos];
        syntax(t.line, t.column, message)
    }

    fn unexpected(&self, wanted: &str) -> MapError {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn number(&mut self) -> Result<usize> {
        match self.peek() {
            Tok::Num(s) => {
                let n = s.parse().map_err(|_| self.error("number out of range"))?;
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn relation_name(&mut self) -> Result<String> {
        let name = self.ident("a relation name")?;
        if !starts_upper(&name) {
            self.pos -= 1;
            return Err(self.error(format!("relation name `{name}` must start with an uppercase letter")));
        }
        Ok(name)
    }

    fn variable(&mut self) -> Result<Var> {
        match self.peek() {
            Tok::Ident(s) if !starts_upper(s) && !crate::model::is_keyword(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("a variable")),
        }
    }

    fn eof(&mut self) -> Result<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    /// `NAME/ARITY, ...` with an optional trailing comma, stopping at `stop`.
    fn signature_list(&mut self, stop: impl Fn(&Tok) -> bool) -> Result<Vec<(String, usize)>> {
        let mut out = Vec::new();
        while !stop(self.peek()) {
            let name = self.ident("a symbol name")?;
            self.expect(Tok::Slash)?;
            let arity = self.number()?;
            out.push((name, arity));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    fn schema_decl(&mut self) -> Result<Schema> {
        self.keyword("schema")?;
        let name = self.ident("a schema name")?;
        self.expect(Tok::LBrace)?;
        let start = self.pos;
        let rels = self.signature_list(|t| *t == Tok::RBrace)?;
        for (i, (r, _)) in rels.iter().enumerate() {
            if !starts_upper(r) {
                self.pos = start + 4 * i;
                return Err(self.error(format!("relation name `{r}` must start with an uppercase letter")));
            }
        }
        self.expect(Tok::RBrace)?;
        Schema::new(name, rels)
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(Term::Const(Value::constant(s)))
            }
            Tok::Num(s) => {
                self.bump();
                Ok(Term::Const(Value::constant(s)))
            }
            Tok::Null(s) => {
                self.bump();
                Ok(Term::Const(Value::null(s)))
            }
            Tok::Ident(s) if !starts_upper(&s) && !crate::model::is_keyword(&s) => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let args = self.term_list()?;
                    Ok(Term::App(s, args))
                } else {
                    Ok(Term::Var(s))
                }
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    /// Terms up to and including the closing parenthesis.
    fn term_list(&mut self) -> Result<Vec<Term>> {
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.unexpected("`,` or `)`")),
            }
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        if let Tok::Ident(name) = self.peek().clone() {
            if starts_upper(&name) {
                self.bump();
                self.expect(Tok::LParen)?;
                let args = self.term_list()?;
                if name == "C" {
                    return match <[Term; 1]>::try_from(args) {
                        Ok([t]) => Ok(Atom::IsConst(t)),
                        Err(_) => Err(MapError::semantic("C", "the constant predicate takes one argument")),
                    };
                }
                return Ok(Atom::Rel { rel: name, args });
            }
        }
        let lhs = self.term()?;
        match self.bump() {
            Tok::Eq => Ok(Atom::Eq(lhs, self.term()?)),
            Tok::Neq => Ok(Atom::Neq(lhs, self.term()?)),
            _ => {
                self.pos -= 1;
                Err(self.unexpected("`=` or `!=`"))
            }
        }
    }

    fn conj(&mut self) -> Result<Vec<Atom>> {
        let mut atoms = vec![self.atom()?];
        while self.eat(&Tok::Amp) {
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn var_list(&mut self) -> Result<Vec<Var>> {
        let mut vs = vec![self.variable()?];
        while self.eat(&Tok::Comma) {
            vs.push(self.variable()?);
        }
        Ok(vs)
    }

    fn disjunct(&mut self) -> Result<Conjunct> {
        let mut exists = Vec::new();
        if self.is_keyword("exists") {
            self.bump();
            exists = self.var_list()?;
            self.expect(Tok::Dot)?;
        }
        Ok(Conjunct::new(exists, self.conj()?))
    }

    /// `false`, or disjuncts separated by `|`.
    fn disjunction(&mut self) -> Result<Vec<Conjunct>> {
        if self.is_keyword("false") {
            self.bump();
            return Ok(Vec::new());
        }
        let mut ds = vec![self.disjunct()?];
        while self.eat(&Tok::Bar) {
            ds.push(self.disjunct()?);
        }
        Ok(ds)
    }

    fn dependency(&mut self, direction: Direction) -> Result<Dependency> {
        let premise = self.conj()?;
        self.expect(Tok::Arrow)?;
        let conclusion = self.disjunction()?;
        Ok(Dependency::new(premise, conclusion, direction))
    }

    fn clause(&mut self) -> Result<SoClause> {
        let premise = self.conj()?;
        self.expect(Tok::Arrow)?;
        let conclusion = self.conj()?;
        Ok(SoClause::new(premise, conclusion))
    }

    fn mapping(&mut self) -> Result<MappingSpec> {
        let functions = if self.is_keyword("functions") {
            self.bump();
            Some(self.signature_list(|t| matches!(t, Tok::Ident(s) if s == "schema"))?)
        } else {
            None
        };
        let first = Arc::new(self.schema_decl()?);
        let second = Arc::new(self.schema_decl()?);
        self.keyword("map")?;
        let name = self.ident("a mapping name")?;
        self.expect(Tok::Colon)?;
        let lookup = |p: &Parser, n: &str| -> Result<Arc<Schema>> {
            [&first, &second]
                .into_iter()
                .find(|s| s.name() == n)
                .cloned()
                .ok_or_else(|| {
                    let _ = p;
                    MapError::semantic(n, "undeclared schema")
                })
        };
        let src_name = self.ident("a schema name")?;
        self.expect(Tok::Arrow)?;
        let tgt_name = self.ident("a schema name")?;
        let source = lookup(self, &src_name)?;
        let target = lookup(self, &tgt_name)?;
        if first.name() == second.name() || src_name == tgt_name {
            return Err(MapError::semantic(tgt_name, "source and target schemas must be distinct"));
        }
        let direction = if src_name == first.name() {
            Direction::SourceToTarget
        } else {
            Direction::TargetToSource
        };
        let plain = if self.is_keyword("plain") {
            self.bump();
            true
        } else {
            false
        };
        let quantified = if self.is_keyword("exists") {
            self.bump();
            self.var_list()?
        } else {
            Vec::new()
        };
        let semantics = if self.is_keyword("semantics") {
            self.bump();
            match self.ident("a semantics name")?.as_str() {
                "standard" => Semantics::Standard,
                "universal" => Semantics::Universal,
                "extended" => Semantics::Extended,
                other => {
                    self.pos -= 1;
                    return Err(self.error(format!("unknown semantics `{other}`")));
                }
            }
        } else {
            Semantics::Standard
        };
        self.expect(Tok::LBrace)?;
        let body = match &functions {
            Some(fs) => {
                let declared: BTreeSet<&str> = fs.iter().map(|(f, _)| f.as_str()).collect();
                let listed: BTreeSet<&str> = quantified.iter().map(String::as_str).collect();
                if declared != listed {
                    let sym = declared.symmetric_difference(&listed).next().copied().unwrap_or("");
                    return Err(MapError::semantic(sym, "`exists` list must name exactly the declared functions"));
                }
                if direction != Direction::SourceToTarget {
                    return Err(MapError::semantic(src_name, "SO-tgds map the first schema to the second"));
                }
                let mut clauses = Vec::new();
                while *self.peek() != Tok::RBrace {
                    clauses.push(self.clause()?);
                    self.expect(Tok::Semi)?;
                }
                Body::SoTgd(SoTgd {
                    functions: fs.clone(),
                    clauses,
                    plain,
                })
            }
            None => {
                if let Some(f) = quantified.first() {
                    return Err(MapError::semantic(f.as_str(), "function quantifier without a `functions` header"));
                }
                if plain {
                    return Err(MapError::semantic("plain", "only SO-tgds carry a plain flag"));
                }
                let mut deps = Vec::new();
                while *self.peek() != Tok::RBrace {
                    deps.push(self.dependency(direction)?);
                    self.expect(Tok::Semi)?;
                }
                Body::Dependencies(deps)
            }
        };
        self.expect(Tok::RBrace)?;
        self.eof()?;
        Ok(MappingSpec {
            name,
            source,
            target,
            body,
            semantics,
        })
    }

    fn fact_value(&mut self) -> Result<Value> {
        match self.bump() {
            Tok::Ident(s) => Ok(Value::constant(s)),
            Tok::Str(s) | Tok::Num(s) => Ok(Value::constant(s)),
            Tok::Null(s) => Ok(Value::null(s)),
            _ => {
                self.pos -= 1;
                Err(self.unexpected("a value"))
            }
        }
    }

    fn instance(&mut self, schemas: &[Arc<Schema>]) -> Result<(String, Instance)> {
        self.keyword("instance")?;
        let name = self.ident("an instance name")?;
        self.keyword("over")?;
        let sname = self.ident("a schema name")?;
        let schema = find_schema(schemas, &sname)?;
        self.expect(Tok::LBrace)?;
        let mut inst = Instance::new(schema);
        while *self.peek() != Tok::RBrace {
            let rel = self.relation_name()?;
            self.expect(Tok::LParen)?;
            let mut tuple = Vec::new();
            if !self.eat(&Tok::RParen) {
                loop {
                    tuple.push(self.fact_value()?);
                    if self.eat(&Tok::RParen) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
            }
            self.expect(Tok::Dot)?;
            inst.insert(&rel, tuple)?;
        }
        self.expect(Tok::RBrace)?;
        Ok((name, inst))
    }

    fn query(&mut self, schemas: &[Arc<Schema>]) -> Result<Query> {
        self.keyword("query")?;
        let name = self.ident("a query name")?;
        self.expect(Tok::LParen)?;
        let free = if self.eat(&Tok::RParen) {
            Vec::new()
        } else {
            let vs = self.var_list()?;
            self.expect(Tok::RParen)?;
            vs
        };
        self.keyword("over")?;
        let sname = self.ident("a schema name")?;
        let schema = find_schema(schemas, &sname)?;
        self.expect(Tok::LBrace)?;
        let disjuncts = self.disjunction()?;
        self.expect(Tok::RBrace)?;
        self.eof()?;
        let q = Query {
            name,
            schema: sname,
            free,
            disjuncts,
        };
        first_violation(validate_query(&q, &schema))?;
        Ok(q)
    }
}

fn find_schema(schemas: &[Arc<Schema>], name: &str) -> Result<Arc<Schema>> {
    schemas
        .iter()
        .find(|s| s.name() == name)
        .cloned()
        .ok_or_else(|| MapError::semantic(name, "unknown schema"))
}

fn first_violation(vs: Vec<crate::lang::Violation>) -> Result<()> {
    match vs.into_iter().next() {
        Some(v) => Err(v.into()),
        None => Ok(()),
    }
}

/// Parses and validates a mapping file.
pub fn parse_mapping(text: &str) -> Result<MappingSpec> {
    let spec = Parser::new(text)?.mapping()?;
    first_violation(validate(&spec))?;
    Ok(spec)
}

/// Parses an instance file over one of the given schemas (matched by name).
pub fn parse_instance(text: &str, schemas: &[Arc<Schema>]) -> Result<Instance> {
    parse_named_instance(text, schemas).map(|(_, i)| i)
}

pub fn parse_named_instance(text: &str, schemas: &[Arc<Schema>]) -> Result<(String, Instance)> {
    let mut p = Parser::new(text)?;
    let out = p.instance(schemas)?;
    p.eof()?;
    Ok(out)
}

/// Parses a sequence of instance declarations.
pub fn parse_instances(text: &str, schemas: &[Arc<Schema>]) -> Result<Vec<(String, Instance)>> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        out.push(p.instance(schemas)?);
    }
    Ok(out)
}

/// Parses a query file; the query's `over` schema must be among `schemas`.
pub fn parse_query(text: &str, schemas: &[Arc<Schema>]) -> Result<Query> {
    Parser::new(text)?.query(schemas)
}

/// Parses a single dependency such as `S(x,y) -> T(x)` (trailing `;` optional).
pub fn parse_dependency(
    text: &str,
    source: &Arc<Schema>,
    target: &Arc<Schema>,
    direction: Direction,
) -> Result<Dependency> {
    let mut p = Parser::new(text)?;
    let d = p.dependency(direction)?;
    p.eat(&Tok::Semi);
    p.eof()?;
    let spec = MappingSpec::new("_", source.clone(), target.clone(), Body::Dependencies(vec![d.clone()]));
    first_violation(validate(&spec))?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::ClassTag;

    #[test]
    fn st_tgd_from_text() {
        let m = parse_mapping("schema A { S/2, } schema B { T/1 } map M : A -> B { S(x,y) -> T(x); }").unwrap();
        let d = &m.dependencies().unwrap()[0];
        assert!(d.is_st_tgd());
        assert_eq!(d.class().to_string(), "<CQ, CQ>");
    }

    #[test]
    fn ts_dependency_with_constant_guard() {
        let s = Arc::new(Schema::of("S", &[("S", 2)]).unwrap());
        let t = Arc::new(Schema::of("T", &[("T", 1)]).unwrap());
        let d = parse_dependency("T(x) & C(x) -> exists y . S(x,y);", &t, &s, Direction::TargetToSource).unwrap();
        let c: ClassTag = d.class();
        assert_eq!(c.to_string(), "<CQ^C, CQ>");
        assert_eq!(d.direction, Direction::TargetToSource);
    }

    #[test]
    fn missing_comma_is_a_syntax_error() {
        let err = parse_mapping("schema A { S/2 } schema B { T/1 } map M : A -> B { S(x y) -> T(x); }").unwrap_err();
        assert!(matches!(err, MapError::Syntax { line: 1, column: 56, .. }), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_symbol() {
        let unknown = parse_mapping("schema A { S/2 } schema B { T/1 } map M : A -> B { S(x,y) -> U(x); }").unwrap_err();
        assert!(matches!(unknown, MapError::Semantic { ref symbol, .. } if symbol == "U"));
        let arity = parse_mapping("schema A { S/2 } schema B { T/1 } map M : A -> B { S(x) -> T(x); }").unwrap_err();
        assert!(matches!(arity, MapError::Semantic { ref symbol, .. } if symbol == "S"));
        let unsafe_var = parse_mapping("schema A { S/2 } schema B { T/1 } map M : A -> B { S(x,y) -> T(z); }").unwrap_err();
        assert!(matches!(unsafe_var, MapError::Semantic { ref symbol, .. } if symbol == "z"));
    }

    #[test]
    fn instances_accept_bare_constants_and_nulls() {
        let s = Arc::new(Schema::of("R1", &[("Takes", 2)]).unwrap());
        let i = parse_instance("instance I over R1 { Takes(Chris, \"logic\"). Takes(?n1, 2). }", &[s]).unwrap();
        assert!(i.contains("Takes", &[Value::constant("Chris"), Value::constant("logic")]));
        assert!(i.contains("Takes", &[Value::null("n1"), Value::constant("2")]));
    }
}
