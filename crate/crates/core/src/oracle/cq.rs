use crate::lang::{Atom, Query, Term};
use crate::model::Schema;

/// Every constant-free conjunctive query over `schema` with between one and
/// `max_atoms` atoms, up to variable renaming and atom order, with every
/// choice of free variables.
///
/// Atoms are listed in schema order of their relations and variables are
/// numbered by first occurrence, so each query body appears once.
/// Constants are left out: a query with a constant selects from the
/// answers of the query that frees that position instead.
pub fn conjunctive_queries(schema: &Schema, max_atoms: usize) -> Vec<Query> {
    let rels = schema.relations();
    let mut out = Vec::new();
    for k in 1..=max_atoms {
        let mut seq = vec![0usize; k];
        loop {
            let arities: Vec<usize> = seq.iter().map(|&r| rels[r].arity).collect();
            let positions: usize = arities.iter().sum();
            let mut rg = vec![0usize; positions];
            loop {
                push_queries(schema, &seq, &arities, &rg, &mut out);
                if !next_restricted_growth(&mut rg) {
                    break;
                }
            }
            if !next_nondecreasing(&mut seq, rels.len()) {
                break;
            }
        }
    }
    out
}

fn push_queries(schema: &Schema, seq: &[usize], arities: &[usize], rg: &[usize], out: &mut Vec<Query>) {
    let rels = schema.relations();
    let mut atoms = Vec::with_capacity(seq.len());
    let mut pos = 0;
    for (&r, &a) in seq.iter().zip(arities) {
        let args = rg[pos..pos + a].iter().map(|v| Term::var(&format!("x{v}"))).collect();
        atoms.push(Atom::rel(&rels[r].name, args));
        pos += a;
    }
    if (1..atoms.len()).any(|k| atoms[..k].contains(&atoms[k])) {
        return;
    }
    let nvars = rg.iter().max().map_or(0, |m| m + 1);
    let names: Vec<String> = (0..nvars).map(|v| format!("x{v}")).collect();
    for subset in 0..1usize << nvars {
        let free: Vec<&str> = (0..nvars).filter(|v| subset >> v & 1 == 1).map(|v| names[v].as_str()).collect();
        let exists: Vec<&str> = (0..nvars).filter(|v| subset >> v & 1 == 0).map(|v| names[v].as_str()).collect();
        let name = format!("Q{}", out.len() + 1);
        out.push(Query::cq(&name, schema.name(), &free, &exists, atoms.clone()));
    }
}

/// Next string with `s[0] = 0` and each entry at most one above the
/// maximum before it.
fn next_restricted_growth(s: &mut [usize]) -> bool {
    for pos in (1..s.len()).rev() {
        let max_before = s[..pos].iter().copied().max().unwrap_or(0);
        if s[pos] <= max_before {
            s[pos] += 1;
            s[pos + 1..].iter_mut().for_each(|x| *x = 0);
            return true;
        }
    }
    false
}

fn next_nondecreasing(s: &mut [usize], base: usize) -> bool {
    for pos in (0..s.len()).rev() {
        if s[pos] + 1 < base {
            s[pos] += 1;
            let v = s[pos];
            s[pos + 1..].iter_mut().for_each(|x| *x = v);
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::print_query;

    #[test]
    fn counts_for_a_unary_relation() {
        let s = Schema::of("S", &[("S", 1)]).unwrap();
        // S(x0) with 2 free choices; S(x0) & S(x1) with 4
        let qs = conjunctive_queries(&s, 2);
        assert_eq!(qs.len(), 6);
        assert_eq!(print_query(&qs[0]).trim(), "query Q1() over S { exists x0 . S(x0) }");
    }

    #[test]
    fn no_repeated_atoms_and_budget_zero_is_empty() {
        let s = Schema::of("S", &[("E", 2)]).unwrap();
        assert!(conjunctive_queries(&s, 0).is_empty());
        let qs = conjunctive_queries(&s, 2);
        for q in &qs {
            let atoms = &q.disjuncts[0].atoms;
            assert!(atoms.len() < 2 || atoms[0] != atoms[1]);
        }
        // E bodies: 2 of one atom (free subsets 2 + 4), pairs of atoms over
        // restricted growth strings of length 4 minus the repeated ones
        let one_atom = 2 + 4;
        assert_eq!(qs.iter().filter(|q| q.disjuncts[0].atoms.len() == 1).count(), one_atom);
    }
}
