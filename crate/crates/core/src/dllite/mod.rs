//! Atemporal DL-Lite horn reasoning: role and concept subsumption, the
//! canonical interpretation (chase), consistency, CQ entailment and the
//! PerfectRef rewriting evaluated over ABoxes read as databases.

mod chase;
mod perfect_ref;

use fixedbitset::FixedBitSet;

use crate::error::Result;
use crate::model::{ABox, BasicConcept, Cq, Ontology, Role, Signature};

pub use chase::{canonical_model, CanonicalInterpretation, Elem, Element, KbIndex, Path};
pub use perfect_ref::{
    eval_ucq, eval_ucq_answers, normalize_cq, perfect_ref, q_unsat, Db, DbAtom, DbCq, Ucq, MAX_REWRITINGS,
};

/// Index of a "kind": the concept set shared by all unnamed elements
/// `u_{ρR}` (index `R.index()`), or the set of an arbitrary element (`top`).
pub type KindId = usize;

/// Precomputed TBox closures for one ontology over one signature.
#[derive(Clone, Debug)]
pub struct Tbox {
    nconcepts: usize,
    nroles: usize,
    /// `sup[R]`: role indices `R'` with `O ⊨ R ⊑ R'` (reflexive).
    sup: Vec<FixedBitSet>,
    /// Concept inclusions over basic-concept indices; `None` is `⊥`.
    cis: Vec<(Vec<usize>, Option<usize>)>,
    /// Role names occurring in the ontology.
    in_o: Vec<bool>,
    kind_set: Vec<FixedBitSet>,
    kind_gen: Vec<Vec<Role>>,
    kind_bad: Vec<bool>,
}

impl Tbox {
    /// Precomputes the closures; fails for non-horn ontologies.
    pub fn new(sig: &Signature, o: &Ontology) -> Result<Tbox> {
        o.check_horn(sig)?;
        let nconcepts = sig.concept_count();
        let nroles = sig.role_count();
        let nr = 2 * nroles;
        // Role hierarchy: reflexive-transitive closure, closed under inverses.
        let mut sup: Vec<FixedBitSet> = (0..nr)
            .map(|i| {
                let mut s = FixedBitSet::with_capacity(nr);
                s.insert(i);
                s
            })
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for ri in &o.ris {
                for (s, r) in [(ri.sub, ri.sup), (ri.sub.inv(), ri.sup.inv())] {
                    for x in 0..nr {
                        if sup[x].contains(s.index()) && !sup[x].contains(r.index()) {
                            let add = sup[r.index()].clone();
                            sup[x].union_with(&add);
                            changed = true;
                        }
                    }
                }
            }
        }
        let mut in_o = vec![false; nroles];
        for r in o.role_names() {
            in_o[r.0 as usize] = true;
        }
        let bidx = |b: BasicConcept| match b {
            BasicConcept::Atomic(c) => c.0 as usize,
            BasicConcept::Exists(r) => nconcepts + r.index(),
        };
        let mut cis: Vec<(Vec<usize>, Option<usize>)> = o
            .cis
            .iter()
            .map(|ci| (ci.lhs.iter().map(|b| bidx(*b)).collect(), ci.rhs.first().map(|b| bidx(*b))))
            .collect();
        // Implicit inclusions ∃S ⊑ ∃R for every entailed S ⊑ R.
        for s in 0..nr {
            for r in sup[s].ones() {
                if r != s {
                    cis.push((vec![nconcepts + s], Some(nconcepts + r)));
                }
            }
        }
        let mut tb = Tbox {
            nconcepts,
            nroles,
            sup,
            cis,
            in_o,
            kind_set: Vec::new(),
            kind_gen: Vec::new(),
            kind_bad: Vec::new(),
        };
        for k in 0..=nr {
            let mut seed = tb.empty_set();
            if k < nr {
                seed.insert(nconcepts + Role::from_index(k).inv().index());
            }
            let set = tb.close(seed);
            tb.kind_gen.push(tb.gen(&set));
            tb.kind_set.push(set);
        }
        // A kind is bad if ⊥ holds somewhere in the subtree it generates.
        let mut bad: Vec<bool> = tb.kind_set.iter().map(|s| s.contains(tb.bot())).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for k in 0..=nr {
                if !bad[k] && tb.kind_gen[k].iter().any(|r| bad[r.index()]) {
                    bad[k] = true;
                    changed = true;
                }
            }
        }
        tb.kind_bad = bad;
        Ok(tb)
    }

    /// Number of basic-concept indices (the `⊥` bit comes after them).
    pub fn nbasic(&self) -> usize {
        self.nconcepts + 2 * self.nroles
    }

    pub fn bot(&self) -> usize {
        self.nbasic()
    }

    pub fn empty_set(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.nbasic() + 1)
    }

    pub fn basic_index(&self, b: BasicConcept) -> usize {
        match b {
            BasicConcept::Atomic(c) => c.0 as usize,
            BasicConcept::Exists(r) => self.nconcepts + r.index(),
        }
    }

    pub fn basic_of(&self, i: usize) -> BasicConcept {
        if i < self.nconcepts {
            BasicConcept::Atomic(crate::model::ConceptName(i as u32))
        } else {
            BasicConcept::Exists(Role::from_index(i - self.nconcepts))
        }
    }

    pub fn nroles(&self) -> usize {
        self.nroles
    }

    /// Closes a concept set under the (explicit and implicit) inclusions.
    pub fn close(&self, mut set: FixedBitSet) -> FixedBitSet {
        let mut changed = true;
        while changed {
            changed = false;
            for (lhs, rhs) in &self.cis {
                let target = rhs.unwrap_or(self.bot());
                if !set.contains(target) && lhs.iter().all(|&b| set.contains(b)) {
                    set.insert(target);
                    changed = true;
                }
            }
        }
        set
    }

    /// Roles `R` for which an element with concept set `set` receives an
    /// unnamed `R`-successor.
    pub fn gen(&self, set: &FixedBitSet) -> Vec<Role> {
        (0..2 * self.nroles)
            .filter(|&k| set.contains(self.nconcepts + k) && self.in_o[k / 2])
            .map(Role::from_index)
            .collect()
    }

    /// `O ⊨ S ⊑ R`.
    pub fn role_entails(&self, s: Role, r: Role) -> bool {
        self.sup[s.index()].contains(r.index())
    }

    /// Role indices `R'` with `R ⊑ R'`.
    pub fn supers(&self, r: Role) -> impl Iterator<Item = Role> + '_ {
        self.sup[r.index()].ones().map(Role::from_index)
    }

    /// Kind of unnamed `R`-successors.
    pub fn kind_of(&self, r: Role) -> KindId {
        r.index()
    }

    /// Kind of an arbitrary element without assertions.
    pub fn top_kind(&self) -> KindId {
        2 * self.nroles
    }

    pub fn kind_set(&self, k: KindId) -> &FixedBitSet {
        &self.kind_set[k]
    }

    pub fn kind_gen(&self, k: KindId) -> &[Role] {
        &self.kind_gen[k]
    }

    pub fn kind_bad(&self, k: KindId) -> bool {
        self.kind_bad[k]
    }

    /// Whether an element with (closed) concept set `set` and unnamed
    /// successors `gen` is free of contradictions in its subtree.
    pub fn set_ok(&self, set: &FixedBitSet, gen: &[Role]) -> bool {
        !set.contains(self.bot()) && gen.iter().all(|r| !self.kind_bad[r.index()])
    }

    /// `O ⊨ ⊓lhs ⊑ b`, where `b = None` stands for `⊥`.
    pub fn concept_entails(&self, lhs: &[BasicConcept], b: Option<BasicConcept>) -> bool {
        let mut seed = self.empty_set();
        for x in lhs {
            seed.insert(self.basic_index(*x));
        }
        let set = self.close(seed);
        let gen = self.gen(&set);
        if !self.set_ok(&set, &gen) {
            return true;
        }
        match b {
            None => false,
            Some(b) => set.contains(self.basic_index(b)),
        }
    }

    /// Basic concepts entailed by `⊓lhs`, ignoring contradictions.
    pub fn closure_of(&self, lhs: &[BasicConcept]) -> Vec<BasicConcept> {
        let mut seed = self.empty_set();
        for x in lhs {
            seed.insert(self.basic_index(*x));
        }
        let set = self.close(seed);
        set.ones()
            .filter(|&i| i < self.nbasic())
            .map(|i| self.basic_of(i))
            .collect()
    }
}

/// `O ⊨ S ⊑ R`.
pub fn role_entails(sig: &Signature, o: &Ontology, s: Role, r: Role) -> Result<bool> {
    Ok(Tbox::new(sig, o)?.role_entails(s, r))
}

/// `O ⊨ ⊓lhs ⊑ b` (`b = None` is `⊥`).
pub fn concept_entails(
    sig: &Signature,
    o: &Ontology,
    lhs: &[BasicConcept],
    b: Option<BasicConcept>,
) -> Result<bool> {
    Ok(Tbox::new(sig, o)?.concept_entails(lhs, b))
}

/// Consistency of `⟨O, A⟩`.
pub fn is_consistent(sig: &Signature, o: &Ontology, abox: &ABox) -> Result<bool> {
    let tb = Tbox::new(sig, o)?;
    Ok(KbIndex::new(&tb, abox).is_consistent())
}

/// `⟨O, A⟩ ⊨ q` for a Boolean CQ under classical semantics: an inconsistent
/// KB entails every query.
pub fn cq_entailed(sig: &Signature, o: &Ontology, abox: &ABox, q: &Cq) -> Result<bool> {
    let tb = Tbox::new(sig, o)?;
    let kb = KbIndex::new(&tb, abox);
    Ok(!kb.is_consistent() || kb.entails(q))
}

/// `⟨O, A⟩ ⊨ q_1 ∨ … ∨ q_k`.
pub fn ucq_entailed(sig: &Signature, o: &Ontology, abox: &ABox, qs: &[Cq]) -> Result<bool> {
    let tb = Tbox::new(sig, o)?;
    let kb = KbIndex::new(&tb, abox);
    Ok(!kb.is_consistent() || qs.iter().any(|q| kb.entails(q)))
}

/// Certain answers: groundings of the answer variables by individuals of the
/// KB (and of the query) that are entailed.
pub fn certain_answers(
    sig: &Signature,
    o: &Ontology,
    abox: &ABox,
    q: &Cq,
) -> Result<Vec<Vec<crate::model::Individual>>> {
    let tb = Tbox::new(sig, o)?;
    let kb = KbIndex::with_individuals(&tb, abox, q.individuals());
    Ok(kb.certain_answers(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Assertion, Tcq, Tkb};
    use crate::syntax::{parse_kb, parse_tcq};

    fn kb(onto: &str, abox: &str) -> Tkb {
        parse_kb(onto, &format!("@0:\n{abox}")).unwrap().0
    }

    fn cq(tkb: &mut Tkb, text: &str) -> Cq {
        match parse_tcq(text, &mut tkb.signature).unwrap() {
            Tcq::Cq(q) => q,
            other => panic!("not a CQ: {other:?}"),
        }
    }

    fn basic(tkb: &Tkb, name: &str) -> BasicConcept {
        BasicConcept::Atomic(tkb.signature.concept(name).unwrap())
    }

    #[test]
    fn subsumption_through_inverse_roles() {
        let t = kb("role R, S\nconcept A, B\nexists R- <= A\nS < R-\nA <= B\n", "");
        let (sig, o) = (&t.signature, &t.ontology);
        let r = sig.role("R").unwrap();
        let s = sig.role("S").unwrap();
        assert!(role_entails(sig, o, Role::new(s), Role::inverse_of(r)).unwrap());
        assert!(role_entails(sig, o, Role::inverse_of(s), Role::new(r)).unwrap());
        assert!(!role_entails(sig, o, Role::new(r), Role::new(s)).unwrap());
        // ∃S ⊑ ∃R⁻ ⊑ A ⊑ B, but ∃S⁻ ⊑ ∃R only.
        let b = basic(&t, "B");
        assert!(concept_entails(sig, o, &[BasicConcept::Exists(Role::new(s))], Some(b)).unwrap());
        assert!(!concept_entails(sig, o, &[BasicConcept::Exists(Role::inverse_of(s))], Some(b)).unwrap());
    }

    #[test]
    fn disjointness_and_negative_assertions() {
        let t = kb("concept A, B, C\nA <= B\nB, C <= bot\n", "A(a)\n");
        let mut abox = t.aboxes[0].clone();
        assert!(is_consistent(&t.signature, &t.ontology, &abox).unwrap());
        let a = t.signature.individuals().next().unwrap();
        abox.insert(Assertion::concept(basic(&t, "C"), a));
        assert!(!is_consistent(&t.signature, &t.ontology, &abox).unwrap());
        let mut abox = t.aboxes[0].clone();
        abox.insert(Assertion::concept(basic(&t, "B"), a).negated());
        assert!(!is_consistent(&t.signature, &t.ontology, &abox).unwrap());
    }

    #[test]
    fn anonymous_successors_answer_queries() {
        let mut t = kb("concept A, B\nrole R\nA <= exists R\nexists R- <= B\n", "A(a)\n");
        let yes = cq(&mut t, "EX x . R(a,x) & B(x)");
        let no = cq(&mut t, "EX x . R(x,a)");
        let abox = t.aboxes[0].clone();
        assert!(cq_entailed(&t.signature, &t.ontology, &abox, &yes).unwrap());
        assert!(!cq_entailed(&t.signature, &t.ontology, &abox, &no).unwrap());
        let tb = Tbox::new(&t.signature, &t.ontology).unwrap();
        let model = canonical_model(&tb, &abox, 2);
        // Every element in `∃R` gets its own successor, so `u_aR` (in `∃R⁻`)
        // has an `R⁻`-successor of its own at depth two.
        assert_eq!(model.unnamed.len(), 2, "{:?}", model.unnamed);
        let mut paths = model.unnamed.iter();
        let (path, concepts) = paths.next().unwrap();
        assert_eq!(path.word.len(), 1);
        assert!(concepts.contains(&basic(&t, "B")));
        let (path, concepts) = paths.next().unwrap();
        assert_eq!(path.word.len(), 2);
        assert_eq!(concepts.len(), 1);
    }

    #[test]
    fn perfect_ref_unfolds_the_hierarchy() {
        let mut t = kb(
            "concept Student, Person\nrole attends\nStudent <= Person\nexists attends <= Student\n",
            "attends(ann,logic)\n",
        );
        let q = cq(&mut t, "EX x . Person(x)");
        let tb = Tbox::new(&t.signature, &t.ontology).unwrap();
        let ucq = perfect_ref(&tb, &q).unwrap();
        assert!(ucq.len() >= 3, "{ucq:?}");
        assert!(eval_ucq(&ucq, &t.aboxes[0]));
        assert!(!eval_ucq(&ucq, &ABox::new()));
        assert!(!eval_ucq(&q_unsat(&tb).unwrap(), &t.aboxes[0]));
    }

    #[test]
    fn certain_answers_use_named_individuals_only() {
        let mut t = kb(
            "concept Student, Person\nrole attends\nStudent <= Person\nexists attends <= Student\n",
            "attends(ann,logic)\nPerson(bob)\n",
        );
        let q = cq(&mut t, "Student(?x)");
        let got = certain_answers(&t.signature, &t.ontology, &t.aboxes[0], &q).unwrap();
        let ann = t.signature.individuals().next().unwrap();
        assert_eq!(got, vec![vec![ann]]);
    }
}
