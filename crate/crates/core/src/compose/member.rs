use std::collections::BTreeSet;

use crate::chase::chase;
use crate::error::{MapError, Result};
use crate::eval::{satisfies, solve_so_tgd, FunctionTables};
use crate::lang::{Atom, Body, MappingSpec, Term};
use crate::model::{Instance, Value};

/// A middle instance linking a pair through two mappings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionWitness {
    pub middle: Instance,
    /// Function tables used by the first mapping, when it is an SO-tgd.
    pub first_tables: Option<FunctionTables>,
    /// Function tables used by the second mapping, when it is an SO-tgd.
    pub second_tables: Option<FunctionTables>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    Member(CompositionWitness),
    NotMember,
    /// The search was not complete for these mapping classes and found
    /// nothing.
    NotFoundWithinBudget,
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

pub(crate) fn formula_constants(spec: &MappingSpec) -> BTreeSet<Value> {
    let mut out = BTreeSet::new();
    let mut visit = |atoms: &[Atom]| {
        for a in atoms {
            for t in a.terms() {
                collect_constants(t, &mut out);
            }
        }
    };
    match &spec.body {
        Body::Dependencies(ds) => ds.iter().for_each(|d| {
            visit(&d.premise);
            d.conclusion.iter().for_each(|c| visit(&c.atoms));
        }),
        Body::SoTgd(s) => s.clauses.iter().for_each(|c| {
            visit(&c.premise);
            visit(&c.conclusion);
        }),
    }
    out
}

fn collect_constants(t: &Term, out: &mut BTreeSet<Value>) {
    match t {
        Term::Var(_) => {}
        Term::Const(c) => {
            out.insert(c.clone());
        }
        Term::App(_, args) => args.iter().for_each(|a| collect_constants(a, out)),
    }
}

/// Whether every solution contains a homomorphic image of the canonical
/// solution that is itself a solution.
fn has_complete_canonical(spec: &MappingSpec) -> bool {
    match &spec.body {
        Body::Dependencies(_) => spec.is_st_tgd_mapping(),
        Body::SoTgd(s) => !s.has_equalities(),
    }
}

/// Whether every homomorphic image of the canonical solution is a solution.
fn images_are_solutions(spec: &MappingSpec) -> bool {
    match &spec.body {
        Body::Dependencies(_) => spec.is_st_tgd_mapping(),
        Body::SoTgd(s) => s.is_plain(),
    }
}

/// Decides whether `(i1, i3)` belongs to the composition of two mappings.
///
/// Any middle instance `I2` of a true witness receives a homomorphism from
/// the canonical solution of `i1`; its image is again a witness, and
/// values outside `dom(i1) ∪ dom(i3)` and the formulas' constants can be
/// renamed back to nulls. So trying every map of the canonical solution's
/// nulls into those values or into its own nulls is a complete search when
/// the first mapping is given by st-tgds or an equality-free SO-tgd. Images
/// are rechecked against the first mapping unless it is st-tgds or a plain
/// SO-tgd, whose solutions are closed under such maps. For
/// other first mappings the same candidates are tried and a miss is
/// reported as not found within budget.
pub fn composition_member(m12: &MappingSpec, m23: &MappingSpec, i1: &Instance, i3: &Instance) -> Result<Membership> {
    if !m12.target.same_relations(&m23.source) {
        return Err(MapError::SchemaMismatch(format!("{} and {} do not chain", m12.name, m23.name)));
    }
    let complete = has_complete_canonical(m12);
    let closed = images_are_solutions(m12);
    if !complete && !matches!(m12.body, Body::SoTgd(_)) {
        return Ok(Membership::NotFoundWithinBudget);
    }
    let canonical = chase(m12, i1)?.result;
    let nulls: Vec<Value> = canonical.nulls().into_iter().filter(|n| !i1.nulls().contains(n)).collect();
    let mut targets: BTreeSet<Value> = i1.active_domain();
    targets.extend(i3.active_domain());
    targets.extend(formula_constants(m23));
    targets.extend(formula_constants(m12));
    let mut targets: Vec<Value> = targets.into_iter().collect();
    targets.extend(nulls.iter().cloned());
    let mut choice = vec![0usize; nulls.len()];
    loop {
        let image = canonical.map_values(|v| match nulls.iter().position(|n| n == v) {
            Some(k) => targets[choice[k]].clone(),
            None => v.clone(),
        });
        let ok12 = closed || satisfies(m12, i1, &image)?;
        if ok12 && satisfies(m23, &image, i3)? {
            return Ok(Membership::Member(witness(m12, m23, i1, image, i3)));
        }
        let mut advanced = false;
        for pos in (0..choice.len()).rev() {
            choice[pos] += 1;
            if choice[pos] < targets.len() {
                advanced = true;
                break;
            }
            choice[pos] = 0;
        }
        if !advanced {
            break;
        }
    }
    Ok(if complete {
        Membership::NotMember
    } else {
        Membership::NotFoundWithinBudget
    })
}

pub(crate) fn witness(
    m12: &MappingSpec,
    m23: &MappingSpec,
    i1: &Instance,
    middle: Instance,
    i3: &Instance,
) -> CompositionWitness {
    CompositionWitness {
        first_tables: m12.so_tgd().and_then(|s| solve_so_tgd(i1, &middle, s)),
        second_tables: m23.so_tgd().and_then(|s| solve_so_tgd(&middle, i3, s)),
        middle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_instance, parse_mapping};

    #[test]
    fn takes_membership() {
        let m12 = parse_mapping(
            "schema R1 { Takes/2 } schema R2 { Takes1/2, Student/2 }
             map M12 : R1 -> R2 { Takes(n,c) -> Takes1(n,c); Takes(n,c) -> exists s . Student(n,s); }",
        )
        .unwrap();
        let m23 = parse_mapping(
            "schema R2 { Takes1/2, Student/2 } schema R3 { Enrollment/2 }
             map M23 : R2 -> R3 { Student(n,s) & Takes1(n,c) -> Enrollment(s,c); }",
        )
        .unwrap();
        let i1 = parse_instance("instance I over R1 { Takes(Chris, logic). }", &[m12.source.clone()]).unwrap();
        let i3 = parse_instance("instance J over R3 { Enrollment(?n1, logic). }", &[m23.target.clone()]).unwrap();
        let Membership::Member(w) = composition_member(&m12, &m23, &i1, &i3).unwrap() else {
            panic!("expected a witness")
        };
        let expected = parse_instance(
            "instance K over R2 { Takes1(Chris, logic). Student(Chris, ?n1). }",
            &[m12.target.clone()],
        )
        .unwrap();
        assert_eq!(w.middle, expected);
        let empty3 = Instance::new(m23.target.clone());
        assert_eq!(composition_member(&m12, &m23, &i1, &empty3).unwrap(), Membership::NotMember);
        let empty1 = Instance::new(m12.source.clone());
        let Membership::Member(w) = composition_member(&m12, &m23, &empty1, &empty3).unwrap() else {
            panic!("expected a witness")
        };
        assert!(w.middle.is_empty());
    }
}
