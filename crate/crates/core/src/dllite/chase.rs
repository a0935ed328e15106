//! The canonical interpretation of a KB and homomorphism search into it.
//!
//! Named individuals carry closed concept sets computed from the ABox. The
//! unnamed part is never built eagerly: an unnamed element `u_{ρR}` only
//! depends on its last role `R` (its "kind"), so the search expands children
//! on demand in an arena keyed by `(parent, role)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use fixedbitset::FixedBitSet;

use super::{KindId, Tbox};
use crate::model::{
    ABox, Assertion, AssertionBody, Atom, BasicConcept, Cq, Individual, Role, RoleName, Term,
};

/// An element of the (lazily expanded) canonical interpretation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    Named(u32),
    Anon(u32),
}

/// Index over `⟨O, A⟩`: closed concept sets and role edges of the named
/// individuals, unnamed successors, and consistency.
#[derive(Clone, Debug)]
pub struct KbIndex<'t> {
    tb: &'t Tbox,
    inds: Vec<Individual>,
    pos: HashMap<Individual, u32>,
    sets: Vec<FixedBitSet>,
    gens: Vec<Vec<Role>>,
    /// `adj[i]`: pairs `(R, j)` with `(i, j) ∈ R`, closed under the role
    /// hierarchy and inverses.
    adj: Vec<Vec<(Role, u32)>>,
    edges: HashSet<(u32, usize, u32)>,
    reach_kinds: Vec<KindId>,
    consistent: bool,
}

impl<'t> KbIndex<'t> {
    pub fn new(tb: &'t Tbox, abox: &ABox) -> Self {
        Self::with_individuals(tb, abox, std::iter::empty())
    }

    /// Index over `abox`, with `extra` individuals added to the domain.
    pub fn with_individuals(
        tb: &'t Tbox,
        abox: &ABox,
        extra: impl IntoIterator<Item = Individual>,
    ) -> Self {
        let mut set: BTreeSet<Individual> = abox.iter().flat_map(|a| a.individuals()).collect();
        set.extend(extra);
        let inds: Vec<Individual> = set.into_iter().collect();
        let pos: HashMap<Individual, u32> =
            inds.iter().enumerate().map(|(i, a)| (*a, i as u32)).collect();
        let n = inds.len();
        let mut seeds = vec![tb.empty_set(); n];
        let mut asserted: Vec<Vec<Role>> = vec![Vec::new(); n];
        let mut adj: Vec<Vec<(Role, u32)>> = vec![Vec::new(); n];
        let mut edges = HashSet::new();
        for a in abox.iter().filter(|a| a.positive) {
            match a.body {
                AssertionBody::Concept(b, x) => {
                    let i = pos[&x] as usize;
                    seeds[i].insert(tb.basic_index(b));
                    if let BasicConcept::Exists(r) = b {
                        asserted[i].push(r);
                    }
                }
                AssertionBody::Role(p, x, y) => {
                    let (i, j) = (pos[&x], pos[&y]);
                    for r in tb.supers(Role::new(p)) {
                        if edges.insert((i, r.index(), j)) {
                            adj[i as usize].push((r, j));
                            seeds[i as usize].insert(tb.basic_index(BasicConcept::Exists(r)));
                        }
                        if edges.insert((j, r.inv().index(), i)) {
                            adj[j as usize].push((r.inv(), i));
                            seeds[j as usize]
                                .insert(tb.basic_index(BasicConcept::Exists(r.inv())));
                        }
                    }
                }
            }
        }
        let sets: Vec<FixedBitSet> = seeds.into_iter().map(|s| tb.close(s)).collect();
        let gens: Vec<Vec<Role>> = sets
            .iter()
            .zip(&asserted)
            .map(|(s, extra)| {
                let mut g = tb.gen(s);
                for r in extra {
                    if !g.contains(r) {
                        g.push(*r);
                    }
                }
                g.sort();
                g
            })
            .collect();
        let mut idx = KbIndex {
            tb,
            inds,
            pos,
            sets,
            gens,
            adj,
            edges,
            reach_kinds: Vec::new(),
            consistent: true,
        };
        idx.reach_kinds = idx.compute_reach_kinds();
        idx.consistent = idx.compute_consistency(abox);
        idx
    }

    fn compute_reach_kinds(&self) -> Vec<KindId> {
        let tb = self.tb;
        let mut seen = BTreeSet::new();
        let mut stack = vec![tb.top_kind()];
        for g in &self.gens {
            stack.extend(g.iter().map(|r| tb.kind_of(*r)));
        }
        while let Some(k) = stack.pop() {
            if seen.insert(k) {
                stack.extend(tb.kind_gen(k).iter().map(|r| tb.kind_of(*r)));
            }
        }
        seen.into_iter().collect()
    }

    fn compute_consistency(&self, abox: &ABox) -> bool {
        let tb = self.tb;
        // Interpretations have non-empty domains, so an arbitrary element
        // must be free of contradictions as well.
        if tb.kind_bad(tb.top_kind()) {
            return false;
        }
        for i in 0..self.inds.len() {
            if !tb.set_ok(&self.sets[i], &self.gens[i]) {
                return false;
            }
        }
        for a in abox.iter().filter(|a| !a.positive) {
            let violated = match a.body {
                AssertionBody::Concept(b, x) => {
                    self.sets[self.pos[&x] as usize].contains(tb.basic_index(b))
                }
                AssertionBody::Role(p, x, y) => {
                    self.edges
                        .contains(&(self.pos[&x], Role::new(p).index(), self.pos[&y]))
                }
            };
            if violated {
                return false;
            }
        }
        true
    }

    pub fn tbox(&self) -> &'t Tbox {
        self.tb
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    /// Individuals of the domain, sorted.
    pub fn individuals(&self) -> &[Individual] {
        &self.inds
    }

    /// Basic concepts entailed for `a` (ignoring contradictions).
    pub fn concepts_of(&self, a: Individual) -> Vec<BasicConcept> {
        let set = match self.pos.get(&a) {
            Some(&i) => &self.sets[i as usize],
            None => self.tb.kind_set(self.tb.top_kind()),
        };
        set.ones()
            .filter(|&i| i < self.tb.nbasic())
            .map(|i| self.tb.basic_of(i))
            .collect()
    }

    /// Whether basic concept `b` holds for `a` in the canonical model.
    pub fn has_concept(&self, a: Individual, b: BasicConcept) -> bool {
        let set = match self.pos.get(&a) {
            Some(&i) => &self.sets[i as usize],
            None => self.tb.kind_set(self.tb.top_kind()),
        };
        set.contains(self.tb.basic_index(b))
    }

    /// Whether `(a, b) ∈ P` in the canonical model.
    pub fn has_role(&self, p: RoleName, a: Individual, b: Individual) -> bool {
        match (self.pos.get(&a), self.pos.get(&b)) {
            (Some(&i), Some(&j)) => self.edges.contains(&(i, Role::new(p).index(), j)),
            _ => false,
        }
    }

    /// Positive entailment of a single assertion; a negative assertion is
    /// entailed only if the KB is inconsistent.
    pub fn entails_assertion(&self, a: &Assertion) -> bool {
        if !a.positive {
            return !self.consistent;
        }
        match a.body {
            AssertionBody::Concept(b, x) => self.has_concept(x, b),
            AssertionBody::Role(p, x, y) => self.has_role(p, x, y),
        }
    }

    /// Whether the canonical model has a homomorphism from `q` (answer
    /// variables are treated as existential). Contradictions are ignored.
    pub fn entails(&self, q: &Cq) -> bool {
        self.entails_atoms(q.vars.len(), &q.atoms, &[])
    }

    /// Homomorphism test for `atoms` over variables `0..nvars`, with some
    /// variables fixed to individuals.
    pub fn entails_atoms(&self, nvars: usize, atoms: &[Atom], fixed: &[(u32, Individual)]) -> bool {
        let mut s = Search::new(self);
        let mut assign: Vec<Option<Elem>> = vec![None; nvars];
        for &(v, a) in fixed {
            assign[v as usize] = Some(s.resolve(a));
        }
        let atoms: Vec<(Atom, [Option<Elem>; 2])> = atoms
            .iter()
            .map(|a| {
                let mut consts = [None, None];
                for (k, t) in a.terms().enumerate() {
                    if let Term::Ind(x) = t {
                        consts[k] = Some(s.resolve(x));
                    }
                }
                (*a, consts)
            })
            .collect();
        s.solve(&atoms, &mut assign)
    }

    /// Classical certain answers (all tuples when inconsistent).
    pub fn certain_answers(&self, q: &Cq) -> Vec<Vec<Individual>> {
        let k = q.answer.len();
        let mut out = Vec::new();
        let n = self.inds.len();
        if n == 0 && k > 0 {
            return out;
        }
        let total = n.pow(k as u32);
        for code in 0..total {
            let mut c = code;
            let mut tuple = Vec::with_capacity(k);
            for _ in 0..k {
                tuple.push(self.inds[c % n]);
                c /= n;
            }
            let fixed: Vec<(u32, Individual)> =
                q.answer.iter().map(|v| v.0).zip(tuple.iter().copied()).collect();
            if !self.consistent || self.entails_atoms(q.vars.len(), &q.atoms, &fixed) {
                out.push(tuple);
            }
        }
        out.sort();
        out
    }
}

#[derive(Clone, Debug)]
struct AnonNode {
    parent: Option<Elem>,
    kind: KindId,
}

/// Backtracking homomorphism search with lazily created unnamed elements.
struct Search<'a, 't> {
    kb: &'a KbIndex<'t>,
    arena: Vec<AnonNode>,
    children: HashMap<(Elem, Role), u32>,
    roots: HashMap<KindId, u32>,
    consts: HashMap<Individual, u32>,
}

impl<'a, 't> Search<'a, 't> {
    fn new(kb: &'a KbIndex<'t>) -> Self {
        Search {
            kb,
            arena: Vec::new(),
            children: HashMap::new(),
            roots: HashMap::new(),
            consts: HashMap::new(),
        }
    }

    fn push(&mut self, parent: Option<Elem>, kind: KindId) -> u32 {
        self.arena.push(AnonNode { parent, kind });
        self.arena.len() as u32 - 1
    }

    /// Element of an individual; individuals outside the KB denote fresh
    /// elements without assertions.
    fn resolve(&mut self, a: Individual) -> Elem {
        if let Some(&i) = self.kb.pos.get(&a) {
            return Elem::Named(i);
        }
        if let Some(&u) = self.consts.get(&a) {
            return Elem::Anon(u);
        }
        let u = self.push(None, self.kb.tb.top_kind());
        self.consts.insert(a, u);
        Elem::Anon(u)
    }

    fn root(&mut self, k: KindId) -> Elem {
        if let Some(&u) = self.roots.get(&k) {
            return Elem::Anon(u);
        }
        let u = self.push(None, k);
        self.roots.insert(k, u);
        Elem::Anon(u)
    }

    fn set(&self, e: Elem) -> &FixedBitSet {
        match e {
            Elem::Named(i) => &self.kb.sets[i as usize],
            Elem::Anon(u) => self.kb.tb.kind_set(self.arena[u as usize].kind),
        }
    }

    fn gen(&self, e: Elem) -> Vec<Role> {
        match e {
            Elem::Named(i) => self.kb.gens[i as usize].clone(),
            Elem::Anon(u) => self.kb.tb.kind_gen(self.arena[u as usize].kind).to_vec(),
        }
    }

    fn child(&mut self, e: Elem, r: Role) -> Elem {
        if let Some(&u) = self.children.get(&(e, r)) {
            return Elem::Anon(u);
        }
        let u = self.push(Some(e), self.kb.tb.kind_of(r));
        self.children.insert((e, r), u);
        Elem::Anon(u)
    }

    /// All `y` with `(e, y) ∈ r`.
    fn neighbors(&mut self, e: Elem, r: Role) -> Vec<Elem> {
        let tb = self.kb.tb;
        let mut out = Vec::new();
        if let Elem::Named(i) = e {
            for &(s, j) in &self.kb.adj[i as usize] {
                if s == r {
                    out.push(Elem::Named(j));
                }
            }
        }
        for s in self.gen(e) {
            if tb.role_entails(s, r) {
                out.push(self.child(e, s));
            }
        }
        if let Elem::Anon(u) = e {
            let node = &self.arena[u as usize];
            if let Some(p) = node.parent {
                let k = Role::from_index(node.kind);
                if tb.role_entails(k.inv(), r) {
                    out.push(p);
                }
            }
        }
        out
    }

    fn holds(&mut self, a: &Atom, vals: [Elem; 2]) -> bool {
        match *a {
            Atom::Concept(b, _) => self.set(vals[0]).contains(self.kb.tb.basic_index(b)),
            Atom::Role(p, _, _) => self.neighbors(vals[0], Role::new(p)).contains(&vals[1]),
        }
    }

    fn value(t: Term, c: Option<Elem>, assign: &[Option<Elem>]) -> Option<Elem> {
        match t {
            Term::Var(v) => assign[v.0 as usize],
            Term::Ind(_) => c,
        }
    }

    fn solve(&mut self, atoms: &[(Atom, [Option<Elem>; 2])], assign: &mut Vec<Option<Elem>>) -> bool {
        // Check every fully assigned atom.
        for (a, consts) in atoms {
            let ts: Vec<Term> = a.terms().collect();
            let vals: Vec<Option<Elem>> = ts
                .iter()
                .enumerate()
                .map(|(k, t)| Self::value(*t, consts[k], assign))
                .collect();
            if vals.iter().all(|v| v.is_some()) {
                let v0 = vals[0].unwrap();
                let v1 = vals.get(1).copied().flatten().unwrap_or(v0);
                if !self.holds(a, [v0, v1]) {
                    return false;
                }
            }
        }
        // Extend along a role atom with exactly one assigned end.
        for (a, consts) in atoms {
            if let Atom::Role(p, s, t) = *a {
                let vs = Self::value(s, consts[0], assign);
                let vt = Self::value(t, consts[1], assign);
                let (from, role, var) = match (vs, vt, s, t) {
                    (Some(x), None, _, Term::Var(v)) => (x, Role::new(p), v),
                    (None, Some(y), Term::Var(v), _) => (y, Role::inverse_of(p), v),
                    _ => continue,
                };
                for c in self.neighbors(from, role) {
                    assign[var.0 as usize] = Some(c);
                    if self.solve(atoms, assign) {
                        return true;
                    }
                }
                assign[var.0 as usize] = None;
                return false;
            }
        }
        // Start a new component: some variable is mapped to a named element
        // or is the topmost element of an unnamed subtree.
        let Some(v) = assign.iter().position(|x| x.is_none()) else {
            return true;
        };
        let comp = component(atoms, assign, v);
        let mut cands: Vec<Elem> = (0..self.kb.inds.len() as u32).map(Elem::Named).collect();
        for &k in &self.kb.reach_kinds.clone() {
            cands.push(self.root(k));
        }
        for w in comp {
            for &c in &cands {
                assign[w] = Some(c);
                if self.solve(atoms, assign) {
                    return true;
                }
            }
            assign[w] = None;
        }
        false
    }
}

/// Unassigned variables connected to `v` through atoms.
fn component(atoms: &[(Atom, [Option<Elem>; 2])], assign: &[Option<Elem>], v: usize) -> Vec<usize> {
    let mut comp = vec![v];
    let mut changed = true;
    while changed {
        changed = false;
        for (a, _) in atoms {
            let vars: Vec<usize> = a
                .terms()
                .filter_map(|t| match t {
                    Term::Var(x) if assign[x.0 as usize].is_none() => Some(x.0 as usize),
                    _ => None,
                })
                .collect();
            if vars.iter().any(|x| comp.contains(x)) {
                for x in vars {
                    if !comp.contains(&x) {
                        comp.push(x);
                        changed = true;
                    }
                }
            }
        }
    }
    comp
}

/// A path `aR_1…R_ℓ` naming the unnamed element `u_{aR_1…R_ℓ}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub root: Individual,
    pub word: Vec<Role>,
}

/// An element of a materialized canonical interpretation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Named(Individual),
    Unnamed(Path),
}

/// A canonical interpretation with unnamed paths truncated at `depth`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CanonicalInterpretation {
    pub named: BTreeMap<Individual, BTreeSet<BasicConcept>>,
    /// Role-name edges between named individuals.
    pub named_roles: BTreeSet<(RoleName, Individual, Individual)>,
    pub unnamed: BTreeMap<Path, BTreeSet<BasicConcept>>,
    /// Role-name edges involving unnamed elements.
    pub unnamed_roles: BTreeSet<(RoleName, Element, Element)>,
    pub depth: usize,
}

impl CanonicalInterpretation {
    /// Basic concepts of an element, if present.
    pub fn concepts(&self, e: &Element) -> Option<&BTreeSet<BasicConcept>> {
        match e {
            Element::Named(a) => self.named.get(a),
            Element::Unnamed(p) => self.unnamed.get(p),
        }
    }

    /// Whether `(x, y) ∈ P`.
    pub fn has_role(&self, p: RoleName, x: &Element, y: &Element) -> bool {
        match (x, y) {
            (Element::Named(a), Element::Named(b)) => self.named_roles.contains(&(p, *a, *b)),
            _ => self.unnamed_roles.contains(&(p, x.clone(), y.clone())),
        }
    }

    /// All elements.
    pub fn elements(&self) -> Vec<Element> {
        self.named
            .keys()
            .map(|a| Element::Named(*a))
            .chain(self.unnamed.keys().map(|p| Element::Unnamed(p.clone())))
            .collect()
    }
}

/// Materializes the positive part of the chase of `⟨O, A⟩` with unnamed
/// paths of length at most `depth`.
pub fn canonical_model(tb: &Tbox, abox: &ABox, depth: usize) -> CanonicalInterpretation {
    let kb = KbIndex::new(tb, abox);
    let basics = |set: &FixedBitSet| -> BTreeSet<BasicConcept> {
        set.ones()
            .filter(|&i| i < tb.nbasic())
            .map(|i| tb.basic_of(i))
            .collect()
    };
    let mut ci = CanonicalInterpretation {
        depth,
        ..Default::default()
    };
    for (i, a) in kb.inds.iter().enumerate() {
        ci.named.insert(*a, basics(&kb.sets[i]));
    }
    for &(i, r, j) in &kb.edges {
        let r = Role::from_index(r);
        if !r.inverse {
            ci.named_roles
                .insert((r.name, kb.inds[i as usize], kb.inds[j as usize]));
        }
    }
    // Breadth-first unfolding of the unnamed trees.
    let mut frontier: Vec<(Element, Path, Vec<Role>)> = kb
        .inds
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                Element::Named(*a),
                Path {
                    root: *a,
                    word: Vec::new(),
                },
                kb.gens[i].clone(),
            )
        })
        .collect();
    for _ in 0..depth {
        let mut next = Vec::new();
        for (parent, path, gen) in frontier {
            for r in gen {
                let mut word = path.word.clone();
                word.push(r);
                let child = Path {
                    root: path.root,
                    word,
                };
                let k = tb.kind_of(r);
                ci.unnamed.insert(child.clone(), basics(tb.kind_set(k)));
                let ce = Element::Unnamed(child.clone());
                for s in tb.supers(r) {
                    if s.inverse {
                        ci.unnamed_roles.insert((s.name, ce.clone(), parent.clone()));
                    } else {
                        ci.unnamed_roles.insert((s.name, parent.clone(), ce.clone()));
                    }
                }
                next.push((ce, child, tb.kind_gen(k).to_vec()));
            }
        }
        frontier = next;
    }
    ci
}
