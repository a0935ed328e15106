//! Brute-force semantic checkers used as ground truth in tests.
//!
//! Nothing here reuses the reasoning machinery of the other modules: TCQs
//! are evaluated directly over finite ultimately periodic structures,
//! bounded satisfiability enumerates finite interpretations, and CQ
//! entailment runs a naive chase followed by a plain backtracking
//! homomorphism search.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{
    ABox, Assertion, AssertionBody, Atom, BasicConcept, Concept, ConceptName, Cq, ExtendedCi,
    Individual, Ontology, Role, RoleName, Signature, Tcq, Term, Tkb,
};

/// One finite interpretation over the domain `0..domain`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Interp {
    /// Concept name extensions.
    pub concepts: BTreeSet<(ConceptName, usize)>,
    /// Role name extensions.
    pub roles: BTreeSet<(RoleName, usize, usize)>,
}

impl Interp {
    fn has_role(&self, r: Role, x: usize, y: usize) -> bool {
        if r.inverse {
            self.roles.contains(&(r.name, y, x))
        } else {
            self.roles.contains(&(r.name, x, y))
        }
    }

    fn has_basic(&self, b: BasicConcept, x: usize, domain: usize) -> bool {
        match b {
            BasicConcept::Atomic(c) => self.concepts.contains(&(c, x)),
            BasicConcept::Exists(r) => (0..domain).any(|y| self.has_role(r, x, y)),
        }
    }
}

/// Whether element `x` belongs to the extension of `c` in `i`.
pub fn concept_holds(i: &Interp, domain: usize, c: &Concept, x: usize) -> bool {
    match c {
        Concept::Top => true,
        Concept::Bottom => false,
        Concept::Basic(b) => i.has_basic(*b, x, domain),
        Concept::And(v) => v.iter().all(|d| concept_holds(i, domain, d, x)),
        Concept::Or(v) => v.iter().any(|d| concept_holds(i, domain, d, x)),
        Concept::Some(r, d) => (0..domain).any(|y| i.has_role(*r, x, y) && concept_holds(i, domain, d, y)),
        Concept::All(r, d) => (0..domain).all(|y| !i.has_role(*r, x, y) || concept_holds(i, domain, d, y)),
    }
}

/// Whether `i` satisfies the inclusion `ci`.
pub fn interp_satisfies_ci(i: &Interp, domain: usize, ci: &ExtendedCi) -> bool {
    (0..domain).all(|x| !concept_holds(i, domain, &ci.lhs, x) || concept_holds(i, domain, &ci.rhs, x))
}

/// An ultimately periodic sequence of interpretations over a shared domain:
/// positions `0..interps.len()`, the last one followed by `loop_start`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LassoStructure {
    pub domain: usize,
    /// Interpretation of the individual names (injective).
    pub individuals: HashMap<Individual, usize>,
    pub interps: Vec<Interp>,
    pub loop_start: usize,
}

impl LassoStructure {
    /// Whether rigid names have the same extension everywhere.
    pub fn respects_rigid(&self, sig: &Signature) -> bool {
        let rigid = |i: &Interp| -> Interp {
            Interp {
                concepts: i
                    .concepts
                    .iter()
                    .filter(|(c, _)| sig.is_rigid_concept(*c))
                    .copied()
                    .collect(),
                roles: i
                    .roles
                    .iter()
                    .filter(|(r, _, _)| sig.is_rigid_role(*r))
                    .copied()
                    .collect(),
            }
        };
        self.interps.windows(2).all(|w| rigid(&w[0]) == rigid(&w[1]))
    }
}

/// Whether interpretation `i` satisfies the Boolean CQ `q`.
pub fn interp_satisfies(
    i: &Interp,
    domain: usize,
    inds: &HashMap<Individual, usize>,
    q: &Cq,
) -> bool {
    let mut assign: Vec<Option<usize>> = vec![None; q.vars.len()];
    fn val(t: Term, assign: &[Option<usize>], inds: &HashMap<Individual, usize>) -> Option<usize> {
        match t {
            Term::Var(v) => assign[v.0 as usize],
            Term::Ind(a) => inds.get(&a).copied(),
        }
    }
    fn check(i: &Interp, domain: usize, inds: &HashMap<Individual, usize>, q: &Cq, assign: &[Option<usize>]) -> bool {
        q.atoms.iter().all(|a| match *a {
            Atom::Concept(b, t) => match val(t, assign, inds) {
                Some(x) => i.has_basic(b, x, domain),
                None => true,
            },
            Atom::Role(r, s, t) => match (val(s, assign, inds), val(t, assign, inds)) {
                (Some(x), Some(y)) => i.roles.contains(&(r, x, y)),
                _ => true,
            },
        })
    }
    fn go(
        k: usize,
        i: &Interp,
        domain: usize,
        inds: &HashMap<Individual, usize>,
        q: &Cq,
        assign: &mut Vec<Option<usize>>,
    ) -> bool {
        if !check(i, domain, inds, q, assign) {
            return false;
        }
        if k == assign.len() {
            return true;
        }
        for x in 0..domain {
            assign[k] = Some(x);
            if go(k + 1, i, domain, inds, q, assign) {
                return true;
            }
        }
        assign[k] = None;
        false
    }
    go(0, i, domain, inds, q, &mut assign)
}

/// Satisfaction of a TCQ over a lasso whose CQ leaves are decided by
/// `leaf(cq, position)`. Returns the truth value at every unrolled time
/// point; `len` positions with the loop at `loop_start`.
struct LassoEval<'a> {
    len: usize,
    loop_start: usize,
    leaf: &'a mut dyn FnMut(&Cq, usize) -> bool,
    /// Number of loop copies in the unrolling.
    copies: usize,
}

impl LassoEval<'_> {
    fn horizon(&self) -> usize {
        self.loop_start + (self.len - self.loop_start) * self.copies
    }

    /// Lasso position of an unrolled time point.
    fn pos(&self, t: usize) -> usize {
        if t < self.len {
            t
        } else {
            let p = self.len - self.loop_start;
            self.loop_start + (t - self.loop_start) % p
        }
    }

    fn next(&self, t: usize) -> usize {
        let h = self.horizon();
        if t + 1 < h {
            t + 1
        } else {
            h - (self.len - self.loop_start)
        }
    }

    fn eval(&mut self, q: &Tcq) -> Vec<bool> {
        let h = self.horizon();
        match q {
            Tcq::Cq(c) => (0..h)
                .map(|t| {
                    let pos = self.pos(t);
                    (self.leaf)(c, pos)
                })
                .collect(),
            Tcq::True => vec![true; h],
            Tcq::False => vec![false; h],
            Tcq::Not(a) => self.eval(a).into_iter().map(|x| !x).collect(),
            Tcq::And(a, b) => zip(self.eval(a), self.eval(b), |x, y| x && y),
            Tcq::Or(a, b) => zip(self.eval(a), self.eval(b), |x, y| x || y),
            Tcq::Implies(a, b) => zip(self.eval(a), self.eval(b), |x, y| !x || y),
            Tcq::Iff(a, b) => zip(self.eval(a), self.eval(b), |x, y| x == y),
            Tcq::Next(a) => {
                let v = self.eval(a);
                (0..h).map(|t| v[self.next(t)]).collect()
            }
            Tcq::Prev(a) => {
                let v = self.eval(a);
                (0..h).map(|t| t > 0 && v[t - 1]).collect()
            }
            Tcq::Until(a, b) => {
                let (va, vb) = (self.eval(a), self.eval(b));
                self.until(&va, &vb)
            }
            Tcq::Since(a, b) => {
                let (va, vb) = (self.eval(a), self.eval(b));
                let mut out = vec![false; h];
                for t in 0..h {
                    out[t] = vb[t] || (t > 0 && va[t] && out[t - 1]);
                }
                out
            }
            Tcq::Eventually(a) => {
                let v = self.eval(a);
                self.until(&vec![true; h], &v)
            }
            Tcq::Always(a) => {
                let v: Vec<bool> = self.eval(a).into_iter().map(|x| !x).collect();
                self.until(&vec![true; h], &v).into_iter().map(|x| !x).collect()
            }
            Tcq::Once(a) => {
                let v = self.eval(a);
                let mut out = vec![false; h];
                for t in 0..h {
                    out[t] = v[t] || (t > 0 && out[t - 1]);
                }
                out
            }
            Tcq::Historically(a) => {
                let v = self.eval(a);
                let mut out = vec![true; h];
                for t in 0..h {
                    out[t] = v[t] && (t == 0 || out[t - 1]);
                }
                out
            }
        }
    }

    /// Least fixpoint of `x = b ∨ (a ∧ X x)` over the unrolled structure.
    fn until(&self, va: &[bool], vb: &[bool]) -> Vec<bool> {
        let h = va.len();
        let mut out = vb.to_vec();
        let mut rounds = 0;
        loop {
            let mut changed = false;
            for t in (0..h).rev() {
                if !out[t] && va[t] && out[self.next(t)] {
                    out[t] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            rounds += 1;
            assert!(rounds <= 2, "until fixpoint did not stabilise");
        }
        out
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// Number of temporal operators in `q`.
fn temporal_size(q: &Tcq) -> usize {
    match q {
        Tcq::Cq(_) | Tcq::True | Tcq::False => 0,
        Tcq::Not(a) => temporal_size(a),
        Tcq::And(a, b) | Tcq::Or(a, b) | Tcq::Implies(a, b) | Tcq::Iff(a, b) => {
            temporal_size(a) + temporal_size(b)
        }
        Tcq::Next(a)
        | Tcq::Prev(a)
        | Tcq::Eventually(a)
        | Tcq::Always(a)
        | Tcq::Once(a)
        | Tcq::Historically(a) => 1 + temporal_size(a),
        Tcq::Until(a, b) | Tcq::Since(a, b) => 1 + temporal_size(a) + temporal_size(b),
    }
}

/// Evaluates `phi` over a lasso of `len` positions given leaf truth values.
/// The loop is unrolled once per temporal operator plus two, which lets
/// past subformulas become periodic; one more copy must give the same value.
pub fn eval_tcq_with(
    phi: &Tcq,
    len: usize,
    loop_start: usize,
    at: usize,
    leaf: &mut dyn FnMut(&Cq, usize) -> bool,
) -> bool {
    assert!(loop_start < len, "the loop must be non-empty");
    assert!(at < len, "time point outside the lasso");
    let copies = temporal_size(phi) + 2;
    let mut run = |copies: usize| {
        let mut ev = LassoEval {
            len,
            loop_start,
            leaf: &mut *leaf,
            copies,
        };
        ev.eval(phi)[at]
    };
    let v = run(copies);
    assert_eq!(v, run(copies + 1), "lasso unrolling did not stabilise");
    v
}

/// TCQ semantics over a lasso structure at time point `at < len`.
pub fn eval_tcq_on_lasso(l: &LassoStructure, phi: &Tcq, at: usize) -> bool {
    let mut leaf = |q: &Cq, t: usize| interp_satisfies(&l.interps[t], l.domain, &l.individuals, q);
    eval_tcq_with(phi, l.interps.len(), l.loop_start, at, &mut leaf)
}

/// Outcome of a bounded model search.
#[derive(Clone, Debug)]
pub enum OracleResult {
    Found(LassoStructure),
    NotFoundWithinBounds,
}

impl OracleResult {
    pub fn is_found(&self) -> bool {
        matches!(self, OracleResult::Found(_))
    }
}

/// Largest number of interpretation bits enumerated by [`bounded_tcq_sat`].
pub const MAX_INTERP_BITS: usize = 22;

/// Whether `i` is a model of `o` and of the assertions in `abox`.
pub fn is_model(
    i: &Interp,
    domain: usize,
    inds: &HashMap<Individual, usize>,
    o: &Ontology,
    abox: &ABox,
) -> bool {
    for ci in &o.cis {
        for x in 0..domain {
            if ci.lhs.iter().all(|b| i.has_basic(*b, x, domain))
                && !ci.rhs.iter().any(|b| i.has_basic(*b, x, domain))
            {
                return false;
            }
        }
    }
    for ri in &o.ris {
        for x in 0..domain {
            for y in 0..domain {
                if i.has_role(ri.sub, x, y) && !i.has_role(ri.sup, x, y) {
                    return false;
                }
            }
        }
    }
    abox.iter().all(|a| assertion_holds(i, domain, inds, a))
}

fn assertion_holds(i: &Interp, domain: usize, inds: &HashMap<Individual, usize>, a: &Assertion) -> bool {
    let holds = match a.body {
        AssertionBody::Concept(b, x) => i.has_basic(b, inds[&x], domain),
        AssertionBody::Role(r, x, y) => i.roles.contains(&(r, inds[&x], inds[&y])),
    };
    holds == a.positive
}

/// Searches for a model of `phi` with respect to `tkb` over domains of at
/// most `d` elements, with a stem of at most `s` and a loop of at most `p`
/// positions.
pub fn bounded_tcq_sat(phi: &Tcq, tkb: &Tkb, d: usize, s: usize, p: usize) -> Result<OracleResult> {
    let n = tkb.n();
    let sig = &tkb.signature;
    let o = &tkb.ontology;
    let mut inds: BTreeSet<Individual> = tkb.abox_individuals();
    inds.extend(phi.individuals());
    let inds: Vec<Individual> = inds.into_iter().collect();
    // Names that matter: those occurring in the ontology, the data or phi.
    let mut concepts: BTreeSet<ConceptName> = o.concept_names();
    let mut roles: BTreeSet<RoleName> = o.role_names();
    let note_basic = |b: BasicConcept, cs: &mut BTreeSet<ConceptName>, rs: &mut BTreeSet<RoleName>| {
        match b {
            BasicConcept::Atomic(c) => {
                cs.insert(c);
            }
            BasicConcept::Exists(r) => {
                rs.insert(r.name);
            }
        }
    };
    for a in tkb.aboxes.iter().flatten() {
        match a.body {
            AssertionBody::Concept(b, _) => note_basic(b, &mut concepts, &mut roles),
            AssertionBody::Role(r, _, _) => {
                roles.insert(r);
            }
        }
    }
    for q in phi.leaves() {
        for a in &q.atoms {
            match *a {
                Atom::Concept(b, _) => note_basic(b, &mut concepts, &mut roles),
                Atom::Role(r, _, _) => {
                    roles.insert(r);
                }
            }
        }
    }
    let imap: HashMap<Individual, usize> = inds.iter().enumerate().map(|(k, a)| (*a, k)).collect();
    for size in inds.len().max(1)..=d {
        let mut rigid_bits: Vec<Bit> = Vec::new();
        let mut flex_bits: Vec<Bit> = Vec::new();
        for &c in &concepts {
            for x in 0..size {
                let b = Bit::Concept(c, x);
                if sig.is_rigid_concept(c) { rigid_bits.push(b) } else { flex_bits.push(b) }
            }
        }
        for &r in &roles {
            for x in 0..size {
                for y in 0..size {
                    let b = Bit::Role(r, x, y);
                    if sig.is_rigid_role(r) { rigid_bits.push(b) } else { flex_bits.push(b) }
                }
            }
        }
        let total = rigid_bits.len() + flex_bits.len();
        if total > MAX_INTERP_BITS {
            return Err(Error::BoundsTooLarge(format!(
                "{total} interpretation bits at domain size {size}"
            )));
        }
        let leaves: Vec<Cq> = phi.leaves().into_iter().cloned().collect();
        let mut seen: HashSet<Vec<Vec<u64>>> = HashSet::new();
        for rmask in 0u64..1 << rigid_bits.len() {
            // Per position class (0..=n, then empty ABox): the worlds of the
            // models with this rigid part, with one witness each.
            let mut worlds: Vec<HashMap<u64, Interp>> = vec![HashMap::new(); n + 2];
            for fmask in 0u64..1 << flex_bits.len() {
                let mut i = Interp::default();
                for (k, b) in rigid_bits.iter().enumerate() {
                    if rmask >> k & 1 == 1 {
                        b.set(&mut i);
                    }
                }
                for (k, b) in flex_bits.iter().enumerate() {
                    if fmask >> k & 1 == 1 {
                        b.set(&mut i);
                    }
                }
                if !is_model(&i, size, &imap, o, &ABox::new()) {
                    continue;
                }
                let w: u64 = leaves
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| interp_satisfies(&i, size, &imap, q))
                    .map(|(j, _)| 1u64 << j)
                    .sum();
                for (pos, abox) in tkb.aboxes.iter().enumerate() {
                    if abox.iter().all(|a| assertion_holds(&i, size, &imap, a)) {
                        worlds[pos].entry(w).or_insert_with(|| i.clone());
                    }
                }
                worlds[n + 1].entry(w).or_insert(i);
            }
            let key: Vec<Vec<u64>> = worlds
                .iter()
                .map(|m| {
                    let mut v: Vec<u64> = m.keys().copied().collect();
                    v.sort();
                    v
                })
                .collect();
            if !seen.insert(key.clone()) {
                continue;
            }
            if let Some((seq, loop_start)) = search_worlds(phi, &leaves, &key, n, s, p) {
                let interps = seq
                    .iter()
                    .enumerate()
                    .map(|(t, w)| worlds[t.min(n + 1)][w].clone())
                    .collect();
                return Ok(OracleResult::Found(LassoStructure {
                    domain: size,
                    individuals: imap.clone(),
                    interps,
                    loop_start,
                }));
            }
        }
    }
    Ok(OracleResult::NotFoundWithinBounds)
}

#[derive(Clone, Copy, Debug)]
enum Bit {
    Concept(ConceptName, usize),
    Role(RoleName, usize, usize),
}

impl Bit {
    fn set(self, i: &mut Interp) {
        match self {
            Bit::Concept(c, x) => {
                i.concepts.insert((c, x));
            }
            Bit::Role(r, x, y) => {
                i.roles.insert((r, x, y));
            }
        }
    }
}

/// Enumerates world lassos with stem `≤ s` and loop `≤ p` whose
/// positions `t ≤ n` use worlds of `allowed[t]` and later ones worlds of
/// `allowed[n + 1]`, returning the first satisfying `phi` at `n`.
fn search_worlds(
    phi: &Tcq,
    leaves: &[Cq],
    allowed: &[Vec<u64>],
    n: usize,
    s: usize,
    p: usize,
) -> Option<(Vec<u64>, usize)> {
    let index: HashMap<&Cq, usize> = leaves.iter().enumerate().map(|(j, q)| (q, j)).collect();
    for stem in 0..=s {
        for lp in 1..=p {
            let len = stem + lp;
            if len <= n {
                continue;
            }
            let choices: Vec<&Vec<u64>> = (0..len).map(|t| &allowed[t.min(n + 1)]).collect();
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; len];
            loop {
                let seq: Vec<u64> = (0..len).map(|t| choices[t][idx[t]]).collect();
                let mut leaf = |q: &Cq, t: usize| {
                    let j = index[q];
                    seq[t] >> j & 1 == 1
                };
                if eval_tcq_with(phi, len, stem, n, &mut leaf) {
                    return Some((seq, stem));
                }
                let mut k = 0;
                loop {
                    if k == len {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == len {
                    break;
                }
            }
        }
    }
    None
}

/// Classical CQ entailment `⟨O, A⟩ ⊨ q` by a naive chase and exhaustive
/// backtracking over its elements. Inconsistent KBs entail every query.
pub fn brute_cq_entailed(sig: &Signature, o: &Ontology, abox: &ABox, q: &Cq) -> bool {
    let nroles = sig.role_count();
    let depth = q.vars.len() + 2 * nroles + 1;
    let chase = NaiveChase::build(o, abox, q.individuals(), depth);
    if !chase.consistent {
        return true;
    }
    let mut assign: Vec<Option<usize>> = vec![None; q.vars.len()];
    chase.hom(q, 0, &mut assign)
}

/// A restricted chase up to a fixed generation depth.
struct NaiveChase {
    named: HashMap<Individual, usize>,
    concepts: Vec<BTreeSet<BasicConcept>>,
    edges: HashSet<(RoleName, usize, usize)>,
    consistent: bool,
}

impl NaiveChase {
    fn build(o: &Ontology, abox: &ABox, extra: BTreeSet<Individual>, depth: usize) -> NaiveChase {
        let mut named: HashMap<Individual, usize> = HashMap::new();
        let mut concepts: Vec<BTreeSet<BasicConcept>> = Vec::new();
        let mut level: Vec<usize> = Vec::new();
        let mut ids: BTreeSet<Individual> = abox.iter().flat_map(|a| a.individuals()).collect();
        ids.extend(extra);
        for a in ids {
            named.insert(a, concepts.len());
            concepts.push(BTreeSet::new());
            level.push(0);
        }
        // An element standing for the non-empty domain.
        concepts.push(BTreeSet::new());
        level.push(0);
        let mut edges: HashSet<(RoleName, usize, usize)> = HashSet::new();
        for a in abox.iter().filter(|a| a.positive) {
            match a.body {
                AssertionBody::Concept(b, x) => {
                    concepts[named[&x]].insert(b);
                }
                AssertionBody::Role(r, x, y) => {
                    edges.insert((r, named[&x], named[&y]));
                }
            }
        }
        let has_edge = |edges: &HashSet<(RoleName, usize, usize)>, r: Role, x: usize, y: usize| {
            if r.inverse {
                edges.contains(&(r.name, y, x))
            } else {
                edges.contains(&(r.name, x, y))
            }
        };
        let mut consistent = true;
        loop {
            let mut changed = false;
            // Role inclusions.
            let current: Vec<(RoleName, usize, usize)> = edges.iter().copied().collect();
            for (r, x, y) in current {
                for ri in o.ris.iter().filter(|ri| ri.sub.name == r) {
                    // The pair related by `sub`, in `sub`'s direction.
                    let (sx, sy) = if ri.sub.inverse { (y, x) } else { (x, y) };
                    let e = if ri.sup.inverse {
                        (ri.sup.name, sy, sx)
                    } else {
                        (ri.sup.name, sx, sy)
                    };
                    changed |= edges.insert(e);
                }
            }
            // Existential concepts from edges.
            for &(r, x, y) in &edges {
                changed |= concepts[x].insert(BasicConcept::Exists(Role::new(r)));
                changed |= concepts[y].insert(BasicConcept::Exists(Role::inverse_of(r)));
            }
            // Concept inclusions.
            for e in 0..concepts.len() {
                for ci in &o.cis {
                    if ci.lhs.iter().all(|b| concepts[e].contains(b)) {
                        match ci.rhs.first() {
                            None => consistent = false,
                            Some(b) => changed |= concepts[e].insert(*b),
                        }
                    }
                }
            }
            // Fresh successors for unwitnessed existentials.
            for e in 0..concepts.len() {
                if level[e] >= depth {
                    continue;
                }
                let wanted: Vec<Role> = concepts[e]
                    .iter()
                    .filter_map(|b| match b {
                        BasicConcept::Exists(r) => Some(*r),
                        _ => None,
                    })
                    .collect();
                for r in wanted {
                    let witnessed = (0..concepts.len()).any(|y| has_edge(&edges, r, e, y));
                    if !witnessed {
                        let y = concepts.len();
                        concepts.push(BTreeSet::new());
                        level.push(level[e] + 1);
                        let edge = if r.inverse { (r.name, y, e) } else { (r.name, e, y) };
                        edges.insert(edge);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for a in abox.iter().filter(|a| !a.positive) {
            let holds = match a.body {
                AssertionBody::Concept(b, x) => concepts[named[&x]].contains(&b),
                AssertionBody::Role(r, x, y) => edges.contains(&(r, named[&x], named[&y])),
            };
            if holds {
                consistent = false;
            }
        }
        NaiveChase {
            named,
            concepts,
            edges,
            consistent,
        }
    }

    fn value(&self, t: Term, assign: &[Option<usize>]) -> Option<usize> {
        match t {
            Term::Var(v) => assign[v.0 as usize],
            Term::Ind(a) => Some(self.named[&a]),
        }
    }

    fn partial_ok(&self, q: &Cq, assign: &[Option<usize>]) -> bool {
        q.atoms.iter().all(|a| match *a {
            Atom::Concept(b, t) => match self.value(t, assign) {
                Some(x) => self.concepts[x].contains(&b),
                None => true,
            },
            Atom::Role(r, s, t) => match (self.value(s, assign), self.value(t, assign)) {
                (Some(x), Some(y)) => self.edges.contains(&(r, x, y)),
                _ => true,
            },
        })
    }

    fn hom(&self, q: &Cq, k: usize, assign: &mut Vec<Option<usize>>) -> bool {
        if !self.partial_ok(q, assign) {
            return false;
        }
        if k == assign.len() {
            return true;
        }
        for x in 0..self.concepts.len() {
            assign[k] = Some(x);
            if self.hom(q, k + 1, assign) {
                return true;
            }
        }
        assign[k] = None;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_instance, parse_kb, parse_tcq};

    fn cq(tkb: &mut Tkb, text: &str) -> Cq {
        match parse_tcq(text, &mut tkb.signature).unwrap() {
            Tcq::Cq(q) => q,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lasso_evaluation_follows_the_loop() {
        let (tkb, phi) = parse_instance("concept A\n", "@0:\n", "X G A(a)").unwrap();
        let a = tkb.signature.concept("A").unwrap();
        let with_a = Interp {
            concepts: [(a, 0)].into_iter().collect(),
            ..Default::default()
        };
        let lasso = |interps: Vec<Interp>, loop_start| LassoStructure {
            domain: 1,
            individuals: [(Individual(0), 0)].into_iter().collect(),
            interps,
            loop_start,
        };
        let l = lasso(vec![Interp::default(), with_a.clone()], 1);
        assert!(eval_tcq_on_lasso(&l, &phi, 0));
        assert!(eval_tcq_on_lasso(&l, &phi, 1));
        let l = lasso(vec![Interp::default(), with_a], 0);
        assert!(!eval_tcq_on_lasso(&l, &phi, 0));
    }

    #[test]
    fn bounded_search_finds_small_models_only_when_they_exist() {
        let (tkb, phi) = parse_instance("concept A, B\nA <= B\n", "@0:\nA(a)\n", "B(a) & X !B(a)").unwrap();
        match bounded_tcq_sat(&phi, &tkb, 1, 1, 1).unwrap() {
            OracleResult::Found(l) => {
                assert!(eval_tcq_on_lasso(&l, &phi, 0));
                assert!(l.respects_rigid(&tkb.signature));
            }
            OracleResult::NotFoundWithinBounds => panic!("expected a model"),
        }
        let (tkb, phi) = parse_instance("rigid concept A\n", "@0:\nA(a)\n", "X !A(a)").unwrap();
        assert!(!bounded_tcq_sat(&phi, &tkb, 2, 2, 2).unwrap().is_found());
    }

    #[test]
    fn brute_chase_follows_existentials() {
        let (mut tkb, _) = parse_kb("concept A, B\nrole R\nA <= exists R\nexists R- <= B\n", "@0:\nA(a)\n").unwrap();
        let yes = cq(&mut tkb, "EX x . R(a,x) & B(x)");
        let no = cq(&mut tkb, "EX x . B(a)");
        let (sig, o, abox) = (&tkb.signature, &tkb.ontology, &tkb.aboxes[0]);
        assert!(brute_cq_entailed(sig, o, abox, &yes));
        assert!(!brute_cq_entailed(sig, o, abox, &no));
    }

    #[test]
    fn extended_concepts_over_a_fixed_interpretation() {
        let doc = crate::syntax::parse_ontology("concept A, B\nrole R\nA <= forall R . B\n").unwrap();
        let ci = &doc.extended[0];
        let (a, b) = (doc.signature.concept("A").unwrap(), doc.signature.concept("B").unwrap());
        let r = doc.signature.role("R").unwrap();
        let mut i = Interp {
            concepts: [(a, 0)].into_iter().collect(),
            roles: [(r, 0, 1)].into_iter().collect(),
        };
        assert!(!interp_satisfies_ci(&i, 2, ci));
        i.concepts.insert((b, 1));
        assert!(interp_satisfies_ci(&i, 2, ci));
    }
}
