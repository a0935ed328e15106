//! Expressing Boolean concept inclusions, and qualified restrictions, in the
//! krom fragment with the help of negated CQs.
//!
//! Every concept name `A` occurring on a right-hand side gets a fresh
//! complement `Ā` with the krom inclusions `⊤ ⊑ A ⊔ Ā` and `A ⊓ Ā ⊑ ⊥`.
//! Under these, each of the following rows is equivalent to its negated CQ:
//!
//! | row | inclusion                         | query                               |
//! |-----|-----------------------------------|-------------------------------------|
//! | T1  | `∃R.A1 ⊑ A2`                      | `¬∃x,y. R(x,y) ∧ A1(y) ∧ Ā2(x)`     |
//! | T2  | `A1 ⊑ ∀R.A2`                      | `¬∃x,y. A1(x) ∧ R(x,y) ∧ Ā2(y)`     |
//! | T3  | `B1 ⊓ … ⊓ Bm ⊑ A1 ⊔ … ⊔ An`       | `¬∃x. B1(x) ∧ … ∧ Bm(x) ∧ Ā1(x) ∧ … ∧ Ān(x)` |
//!
//! Nested inclusions are first normalized into these rows and into
//! krom-shaped basic inclusions by naming complex subconcepts with fresh
//! concept names `A'1, A'2, …`. A subconcept in a negative position is
//! named by `C ⊑ A'k`, one in a positive position by `A'k ⊑ C`. Pending
//! inclusions are processed in first-in first-out order, and within one
//! inclusion the right-hand side is named before the left-hand side.
//!
//! The accepted grammar: left-hand sides built from basic concepts, `⊤`,
//! `⊥`, `⊓`, `⊔` and `∃R.C`; right-hand sides built from basic concepts,
//! `⊤`, `⊥`, `⊓`, `⊔` and `∀R.C`. Anything else (a value restriction on the
//! left, a qualified existential restriction on the right) is rejected.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::{
    Atom, BasicConcept, Concept, ConceptInclusion, ConceptName, Cq, ExtendedCi, Ontology, Role,
    Signature, Tcq, Term, Tkb, Var,
};

/// A normalized inclusion with a query counterpart.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Row {
    /// T1: `∃R.filler ⊑ sup`.
    Exists {
        role: Role,
        filler: ConceptName,
        sup: ConceptName,
    },
    /// T2: `sub ⊑ ∀R.filler`.
    Forall {
        sub: ConceptName,
        role: Role,
        filler: ConceptName,
    },
    /// T3: `lhs1 ⊓ … ⊑ rhs1 ⊔ …`; empty sides are `⊤` and `⊥`.
    Clause {
        lhs: Vec<BasicConcept>,
        rhs: Vec<ConceptName>,
    },
}

impl Row {
    /// The concept names that need a complement.
    pub fn rhs_names(&self) -> Vec<ConceptName> {
        match self {
            Row::Exists { sup, .. } => vec![*sup],
            Row::Forall { filler, .. } => vec![*filler],
            Row::Clause { rhs, .. } => rhs.clone(),
        }
    }

    /// The inclusion this row stands for.
    pub fn to_extended(&self) -> ExtendedCi {
        let name = |c: ConceptName| Concept::Basic(BasicConcept::Atomic(c));
        match self {
            Row::Exists { role, filler, sup } => ExtendedCi {
                lhs: Concept::Some(*role, Box::new(name(*filler))),
                rhs: name(*sup),
            },
            Row::Forall { sub, role, filler } => ExtendedCi {
                lhs: name(*sub),
                rhs: Concept::All(*role, Box::new(name(*filler))),
            },
            Row::Clause { lhs, rhs } => ExtendedCi {
                lhs: Concept::And(lhs.iter().map(|b| Concept::Basic(*b)).collect()),
                rhs: Concept::Or(rhs.iter().map(|&c| name(c)).collect()),
            },
        }
    }

    /// The CQ whose negation expresses the row, given the complements.
    pub fn query(&self, complement: &BTreeMap<ConceptName, ConceptName>) -> Cq {
        let x = Term::Var(Var(0));
        let y = Term::Var(Var(1));
        let bar = |c: &ConceptName| BasicConcept::Atomic(complement[c]);
        let (vars, atoms) = match self {
            Row::Exists { role, filler, sup } => (
                vec!["x", "y"],
                vec![
                    Atom::role(*role, x, y),
                    Atom::Concept(BasicConcept::Atomic(*filler), y),
                    Atom::Concept(bar(sup), x),
                ],
            ),
            Row::Forall { sub, role, filler } => (
                vec!["x", "y"],
                vec![
                    Atom::Concept(BasicConcept::Atomic(*sub), x),
                    Atom::role(*role, x, y),
                    Atom::Concept(bar(filler), y),
                ],
            ),
            Row::Clause { lhs, rhs } => (
                vec!["x"],
                lhs.iter()
                    .map(|b| Atom::Concept(*b, x))
                    .chain(rhs.iter().map(|c| Atom::Concept(bar(c), x)))
                    .collect(),
            ),
        };
        Cq::boolean(vars.into_iter().map(String::from).collect(), atoms)
    }
}

/// Fresh concept names, injective and disjoint from the signature they are
/// added to.
pub struct Fresh<'s> {
    sig: &'s mut Signature,
    next: usize,
    /// Every name introduced so far, in order.
    pub introduced: Vec<ConceptName>,
}

impl<'s> Fresh<'s> {
    pub fn new(sig: &'s mut Signature) -> Self {
        Fresh {
            sig,
            next: 1,
            introduced: Vec::new(),
        }
    }

    pub fn signature(&self) -> &Signature {
        self.sig
    }

    /// A new flexible auxiliary name `A'k`.
    pub fn aux(&mut self) -> ConceptName {
        loop {
            let name = format!("A'{}", self.next);
            self.next += 1;
            if !self.sig.is_declared(&name) {
                return self.declare(&name, false);
            }
        }
    }

    /// A new name for the complement of `c`, rigid iff `c` is.
    pub fn complement_of(&mut self, c: ConceptName) -> ConceptName {
        let base = format!("{}_bar", self.sig.concept_name(c));
        let rigid = self.sig.is_rigid_concept(c);
        let mut name = base.clone();
        let mut k = 2;
        while self.sig.is_declared(&name) {
            name = format!("{base}{k}");
            k += 1;
        }
        self.declare(&name, rigid)
    }

    fn declare(&mut self, name: &str, rigid: bool) -> ConceptName {
        let c = self
            .sig
            .declare_concept(name, rigid)
            .expect("an undeclared name can be declared");
        self.introduced.push(c);
        c
    }
}

/// The complement names of `names` and the inclusions `⊤ ⊑ A ⊔ Ā` and
/// `A ⊓ Ā ⊑ ⊥` for each.
pub fn complement_axioms(
    fresh: &mut Fresh,
    names: &BTreeSet<ConceptName>,
) -> (Vec<ConceptInclusion>, BTreeMap<ConceptName, ConceptName>) {
    let mut cis = Vec::new();
    let mut map = BTreeMap::new();
    for &a in names {
        let bar = fresh.complement_of(a);
        map.insert(a, bar);
        let both = vec![BasicConcept::Atomic(a), BasicConcept::Atomic(bar)];
        cis.push(ConceptInclusion::new(vec![], both.clone()));
        cis.push(ConceptInclusion::new(both, vec![]));
    }
    (cis, map)
}

/// Result of normalizing inclusions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Normalized {
    /// Krom-shaped basic inclusions, kept in the ontology.
    pub plain: Vec<ConceptInclusion>,
    /// Inclusions replaced by negated CQs.
    pub rows: Vec<Row>,
}

/// Normalizes one inclusion into rows and krom-shaped inclusions.
pub fn normalize(ci: &ExtendedCi, fresh: &mut Fresh) -> Result<Normalized> {
    let mut out = Normalized::default();
    let mut queue = VecDeque::from([(ci.lhs.clone(), ci.rhs.clone())]);
    while let Some((lhs, rhs)) = queue.pop_front() {
        step(&lhs, &rhs, fresh, &mut queue, &mut out)?;
    }
    Ok(out)
}

fn flatten_or(c: &Concept, out: &mut Vec<Concept>) {
    match c {
        Concept::Or(v) => v.iter().for_each(|d| flatten_or(d, out)),
        Concept::Bottom => {}
        _ => out.push(c.clone()),
    }
}

fn flatten_and(c: &Concept, out: &mut Vec<Concept>) {
    match c {
        Concept::And(v) => v.iter().for_each(|d| flatten_and(d, out)),
        Concept::Top => {}
        _ => out.push(c.clone()),
    }
}

fn atomic(c: ConceptName) -> Concept {
    Concept::Basic(BasicConcept::Atomic(c))
}

/// A filler as a concept name; a complex filler is named.
fn filler_name(
    f: &Concept,
    positive: bool,
    fresh: &mut Fresh,
    queue: &mut VecDeque<(Concept, Concept)>,
) -> ConceptName {
    if let Concept::Basic(BasicConcept::Atomic(c)) = f {
        return *c;
    }
    let x = fresh.aux();
    if positive {
        queue.push_back((atomic(x), f.clone()));
    } else {
        queue.push_back((f.clone(), atomic(x)));
    }
    x
}

fn unsupported(sig: &Signature, c: &Concept, side: &str) -> Error {
    Error::UnsupportedShape(format!("`{}` on the {side}-hand side", sig.show_concept(c)))
}

fn step(
    lhs: &Concept,
    rhs: &Concept,
    fresh: &mut Fresh,
    queue: &mut VecDeque<(Concept, Concept)>,
    out: &mut Normalized,
) -> Result<()> {
    // Right-hand side: a disjunction of basic concepts after naming.
    let mut ds = Vec::new();
    flatten_or(rhs, &mut ds);
    if ds.iter().any(|d| matches!(d, Concept::Top) || matches!(d, Concept::And(v) if v.is_empty())) {
        return Ok(());
    }
    if let [Concept::And(v)] = ds.as_slice() {
        for c in v {
            queue.push_back((lhs.clone(), c.clone()));
        }
        return Ok(());
    }
    let single_lhs_name = match lhs {
        Concept::Basic(BasicConcept::Atomic(c)) => Some(*c),
        _ => None,
    };
    if let ([Concept::All(r, f)], Some(sub)) = (ds.as_slice(), single_lhs_name) {
        if !matches!(**f, Concept::Top) {
            let filler = filler_name(f, true, fresh, queue);
            out.rows.push(Row::Forall { sub, role: *r, filler });
        }
        return Ok(());
    }
    let mut rhs_basic: Vec<BasicConcept> = Vec::new();
    for d in &ds {
        match d {
            Concept::Basic(b) => rhs_basic.push(*b),
            Concept::Some(r, f) if matches!(**f, Concept::Top) => rhs_basic.push(BasicConcept::Exists(*r)),
            Concept::And(_) | Concept::All(..) => {
                let x = fresh.aux();
                queue.push_back((atomic(x), d.clone()));
                rhs_basic.push(BasicConcept::Atomic(x));
            }
            _ => return Err(unsupported(fresh.signature(), d, "right")),
        }
    }
    // Left-hand side: a disjunction of conjunctions of basic concepts.
    let mut disjuncts = Vec::new();
    flatten_or(lhs, &mut disjuncts);
    let single_rhs_name = match rhs_basic.as_slice() {
        [BasicConcept::Atomic(c)] => Some(*c),
        _ => None,
    };
    for d in disjuncts {
        let mut cs = Vec::new();
        flatten_and(&d, &mut cs);
        if cs.iter().any(is_empty_or) {
            continue;
        }
        if let ([Concept::Some(r, f)], Some(sup)) = (cs.as_slice(), single_rhs_name) {
            if !matches!(**f, Concept::Top) {
                let filler = filler_name(f, false, fresh, queue);
                out.rows.push(Row::Exists { role: *r, filler, sup });
                continue;
            }
        }
        let mut conj: Vec<BasicConcept> = Vec::new();
        for c in &cs {
            match c {
                Concept::Basic(b) => conj.push(*b),
                Concept::Some(r, f) if matches!(**f, Concept::Top) => conj.push(BasicConcept::Exists(*r)),
                Concept::Some(..) | Concept::Or(_) => {
                    let x = fresh.aux();
                    queue.push_back((c.clone(), atomic(x)));
                    conj.push(BasicConcept::Atomic(x));
                }
                _ => return Err(unsupported(fresh.signature(), c, "left")),
            }
        }
        emit(conj, rhs_basic.clone(), fresh, out);
    }
    Ok(())
}

/// `⊥`, or a disjunction that flattens to nothing.
fn is_empty_or(c: &Concept) -> bool {
    let mut v = Vec::new();
    flatten_or(c, &mut v);
    v.is_empty()
}

/// Emits `lhs ⊑ rhs` as a krom inclusion or as a T3 row.
fn emit(lhs: Vec<BasicConcept>, rhs: Vec<BasicConcept>, fresh: &mut Fresh, out: &mut Normalized) {
    let ci = ConceptInclusion::new(lhs, rhs);
    if ci.is_krom() {
        out.plain.push(ci);
        return;
    }
    let mut names = Vec::new();
    for b in ci.rhs {
        match b {
            BasicConcept::Atomic(c) => names.push(c),
            BasicConcept::Exists(_) => {
                let x = fresh.aux();
                out.plain.push(ConceptInclusion::horn(vec![BasicConcept::Atomic(x)], Some(b)));
                names.push(x);
            }
        }
    }
    names.sort();
    names.dedup();
    out.rows.push(Row::Clause { lhs: ci.lhs, rhs: names });
}

/// The rows, krom inclusions and negated CQs for one inclusion.
#[derive(Clone, Debug)]
pub struct Translation {
    pub normalized: Normalized,
    /// Complement inclusions for the right-hand names of the rows.
    pub complement_cis: Vec<ConceptInclusion>,
    pub complement: BTreeMap<ConceptName, ConceptName>,
    /// `¬q` for every row, in order.
    pub queries: Vec<Tcq>,
    /// Names added to the signature.
    pub fresh: Vec<ConceptName>,
}

/// Translates one inclusion, adding the fresh names to `sig`.
pub fn ci_to_tcq(ci: &ExtendedCi, sig: &mut Signature) -> Result<Translation> {
    let mut fresh = Fresh::new(sig);
    let normalized = normalize(ci, &mut fresh)?;
    let names: BTreeSet<ConceptName> = normalized.rows.iter().flat_map(|r| r.rhs_names()).collect();
    let (complement_cis, complement) = complement_axioms(&mut fresh, &names);
    let queries = normalized
        .rows
        .iter()
        .map(|r| Tcq::not(Tcq::Cq(r.query(&complement))))
        .collect();
    Ok(Translation {
        normalized,
        complement_cis,
        complement,
        queries,
        fresh: fresh.introduced,
    })
}

/// What the reduced query is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `Φ′ = (□_P □_F Ψ) → Φ`.
    Entailment,
    /// `Φ′ = (□_P □_F Ψ) ∧ Φ`.
    Satisfiability,
}

/// A TKB with a krom ontology and the query to ask over it.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub tkb: Tkb,
    pub phi: Tcq,
    /// The rows replaced by negated CQs.
    pub rows: Vec<Row>,
    /// `Ψ`, the conjunction of the negated CQs; `None` if there are none.
    pub psi: Option<Tcq>,
    pub complement: BTreeMap<ConceptName, ConceptName>,
}

/// Replaces every non-krom inclusion of `tkb` and every extended inclusion
/// by negated CQs conjoined, under `□_P □_F`, with `phi`.
pub fn reduce_bool_to_krom(tkb: &Tkb, extended: &[ExtendedCi], phi: &Tcq, mode: Mode) -> Result<Reduction> {
    let mut sig = tkb.signature.clone();
    let mut kept = Vec::new();
    let mut pending: Vec<ExtendedCi> = Vec::new();
    for ci in &tkb.ontology.cis {
        if ci.is_krom() {
            kept.push(ci.clone());
        } else {
            pending.push(ExtendedCi::from(ci));
        }
    }
    pending.extend(extended.iter().cloned());
    let mut fresh = Fresh::new(&mut sig);
    let mut rows = Vec::new();
    for ci in &pending {
        let n = normalize(ci, &mut fresh)?;
        kept.extend(n.plain);
        rows.extend(n.rows);
    }
    let names: BTreeSet<ConceptName> = rows.iter().flat_map(|r| r.rhs_names()).collect();
    let (cis, complement) = complement_axioms(&mut fresh, &names);
    kept.extend(cis);
    kept.sort();
    kept.dedup();
    let psi = rows
        .iter()
        .map(|r| Tcq::not(Tcq::Cq(r.query(&complement))))
        .reduce(Tcq::and);
    let phi = match &psi {
        None => phi.clone(),
        Some(psi) => {
            let always = Tcq::Historically(Box::new(Tcq::Always(Box::new(psi.clone()))));
            match mode {
                Mode::Entailment => Tcq::implies(always, phi.clone()),
                Mode::Satisfiability => Tcq::and(always, phi.clone()),
            }
        }
    };
    Ok(Reduction {
        tkb: Tkb {
            signature: sig,
            ontology: Ontology {
                cis: kept,
                ris: tkb.ontology.ris.clone(),
            },
            aboxes: tkb.aboxes.clone(),
        },
        phi,
        rows,
        psi,
        complement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_kb, parse_tcq};

    fn extended(onto: &str) -> (Tkb, Vec<ExtendedCi>) {
        parse_kb(onto, "@0:\n").unwrap()
    }

    #[test]
    fn complements_are_fresh_and_krom() {
        let mut sig = Signature::new();
        let a = sig.declare_concept("A", false).unwrap();
        sig.declare_concept("A_bar", false).unwrap();
        let mut fresh = Fresh::new(&mut sig);
        let (cis, map) = complement_axioms(&mut fresh, &BTreeSet::from([a]));
        assert_eq!(cis.len(), 2);
        assert!(cis.iter().all(|c| c.is_krom()));
        assert_eq!(sig.concept_name(map[&a]), "A_bar2");
        let mut fresh = Fresh::new(&mut sig);
        assert_eq!(complement_axioms(&mut fresh, &BTreeSet::new()).0, vec![]);
    }

    #[test]
    fn table_rows_map_to_their_queries() {
        let (tkb, ext) = extended(
            "concept A1, A2, A3, A4\nrole R\nexists R . A1 <= A2\nA1 <= forall R . A2\nA1, A2 <= A3 | A4\n",
        );
        assert_eq!(ext.len(), 2);
        let mut sig = tkb.signature.clone();
        let t = ci_to_tcq(&ext[0], &mut sig).unwrap();
        assert!(matches!(t.normalized.rows.as_slice(), [Row::Exists { .. }]));
        assert_eq!(
            crate::syntax::print_tcq(&sig, &t.queries[0]),
            "!(EX x, y . A1(y) & A2_bar(x) & R(x,y))"
        );
        let t = ci_to_tcq(&ext[1], &mut sig).unwrap();
        assert!(matches!(t.normalized.rows.as_slice(), [Row::Forall { .. }]));
        let ci = tkb.ontology.cis[0].clone();
        let r = reduce_bool_to_krom(&tkb, &[], &Tcq::True, Mode::Entailment).unwrap();
        assert!(matches!(r.rows.as_slice(), [Row::Clause { lhs, rhs }] if lhs == &ci.lhs && rhs.len() == 2));
        assert!(r.tkb.ontology.cis.iter().all(|c| c.is_krom()));
    }

    #[test]
    fn nested_inclusion_gives_seven_inclusions() {
        let (tkb, ext) = extended(
            "concept A1, A2, A3, A4\nrole R1, R2\n\
             A1 | A2 | exists R1 . A3 <= A4 | forall R1 . (A1 & exists R2)\n",
        );
        let mut sig = tkb.signature.clone();
        let t = ci_to_tcq(&ext[0], &mut sig).unwrap();
        let mut shown: Vec<String> = t
            .normalized
            .rows
            .iter()
            .map(|r| sig.show_extended_ci(&r.to_extended()))
            .chain(t.normalized.plain.iter().map(|c| sig.show_ci(c)))
            .collect();
        shown.sort();
        let want = vec![
            "A1 <= A4 | A'1",
            "A2 <= A4 | A'1",
            "A'2 <= A4 | A'1",
            "exists R1 . A3 <= A'2",
            "A'1 <= forall R1 . A'3",
            "A'3 <= A1",
            "A'3 <= exists R2",
        ];
        let mut want: Vec<String> = want.into_iter().map(String::from).collect();
        want.sort();
        assert_eq!(shown, want);
        assert_eq!(t.queries.len(), 5);
    }

    #[test]
    fn krom_ontology_is_unchanged() {
        let (tkb, _) = extended("concept A, B\nrole R\nA <= B\nexists R <= A\nA, B <= bot\n");
        let mut sig = tkb.signature.clone();
        let phi = parse_tcq("A(a)", &mut sig).unwrap();
        let r = reduce_bool_to_krom(&tkb, &[], &phi, Mode::Entailment).unwrap();
        assert_eq!(r.phi, phi);
        assert!(r.psi.is_none());
        assert_eq!(r.tkb.ontology.cis.len(), tkb.ontology.cis.len());
    }

    #[test]
    fn unsupported_shapes_are_rejected() {
        let (tkb, ext) = extended("concept A, B\nrole R\nforall R . A <= B\nA <= exists R . B\n");
        for ci in &ext {
            let mut sig = tkb.signature.clone();
            assert!(matches!(ci_to_tcq(ci, &mut sig), Err(Error::UnsupportedShape(_))));
        }
    }
}
