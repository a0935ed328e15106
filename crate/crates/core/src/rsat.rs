//! r-complete tuples and the rigid-name bookkeeping behind them.
//!
//! A tuple `(A_R, Q_R, Q_Rn, R_F)` fixes the rigid assertions over the named
//! individuals, the CQs that hold (resp. fail) somewhere, and the flexible
//! existentials `∃S(b)` whose rigid consequences are present at every time
//! point. For a time point `i` with world `W` the KB
//! `K_R(i) = ⟨O, A_R ∪ rigcons(Q_R) ∪ A_{Q_W} ∪ A_RF ∪ A_i⟩` must satisfy:
//!
//! * C1: `K_R(i)` (without `A_RF`) is consistent;
//! * C2: for `p_j ∉ W`, `K_R(i) ⊭ φ_j`;
//! * C3: for `p_j ∈ W`, `φ_j ∈ Q_R`;
//! * C4: for `p_j ∉ W`, `φ_j ∈ Q_Rn`;
//! * C5: no rigid witness query of a CQ in `Q_Rn` is entailed by `K_R(i)`;
//! * C6: `∃S(b) ∈ R_F` iff `∃S(b)` is entailed (without `A_RF`) at some
//!   time point.
//!
//! [`Problem::rsatisfiable`] checks one time point and the "if" half of C6;
//! [`Problem::is_r_complete`] checks all six conditions over a world sequence.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::dllite::{normalize_cq, perfect_ref, DbAtom, DbCq, KbIndex, Tbox};
use crate::error::{Error, Result};
use crate::ltl::{Ltl, F};
use crate::model::{
    normalize_tcq, propositional_abstraction, ABox, Assertion, AssertionBody, Atom, BasicConcept, Cq,
    Individual, Role, Signature, Tcq, Term, Tkb, World,
};

/// Largest number of CQ leaves handled; worlds are bit sets over them.
pub const MAX_LEAVES: usize = 16;

/// A flexible existential `∃S(b)`.
pub type FlexEx = (Role, Individual);

/// Fresh individual names allocated after the signature's individuals.
#[derive(Clone, Debug, Default)]
pub struct Names {
    base: u32,
    names: Vec<String>,
}

impl Names {
    pub fn new(base: u32) -> Self {
        Names {
            base,
            names: Vec::new(),
        }
    }

    pub fn fresh(&mut self, name: String) -> Individual {
        self.names.push(name);
        Individual(self.base + self.names.len() as u32 - 1)
    }

    pub fn is_fresh(&self, a: Individual) -> bool {
        a.0 >= self.base
    }

    /// Name of a signature or fresh individual.
    pub fn show(&self, sig: &Signature, a: Individual) -> String {
        match a.0.checked_sub(self.base) {
            Some(k) if (k as usize) < self.names.len() => self.names[k as usize].clone(),
            _ => sig.individual_name(a),
        }
    }
}

/// A candidate r-complete tuple. `q_r` and `q_rn` are bit sets over the
/// leaves of the abstraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tuple {
    pub a_r: ABox,
    pub q_r: u64,
    pub q_rn: u64,
    pub r_f: BTreeSet<FlexEx>,
}

/// Replaces every variable of `q` by its name in `names`.
pub fn instantiate(q: &Cq, names: &[Individual]) -> ABox {
    let ground = |t: Term| match t {
        Term::Var(v) => names[v.0 as usize],
        Term::Ind(a) => a,
    };
    q.atoms
        .iter()
        .map(|a| match *a {
            Atom::Concept(b, t) => Assertion::concept(b, ground(t)),
            Atom::Role(p, s, t) => Assertion::role(Role::new(p), ground(s), ground(t)),
        })
        .collect()
}

/// Positive rigid assertions over the individuals of `abox` entailed by
/// `⟨O, abox⟩`.
pub fn rigid_consequences(tb: &Tbox, sig: &Signature, abox: &ABox) -> Result<ABox> {
    let kb = KbIndex::new(tb, abox);
    if !kb.is_consistent() {
        return Err(Error::InconsistentInstantiation(format!(
            "{} assertions",
            abox.len()
        )));
    }
    Ok(rigid_closure(&kb, sig, kb.individuals()))
}

/// Rigid assertions over `inds` that hold in the canonical model of `kb`.
fn rigid_closure(kb: &KbIndex, sig: &Signature, inds: &[Individual]) -> ABox {
    let mut out = ABox::new();
    let basics: Vec<BasicConcept> = sig
        .basic_concepts()
        .into_iter()
        .filter(|b| sig.is_rigid_basic(*b))
        .collect();
    for &a in inds {
        for &b in &basics {
            if kb.has_concept(a, b) {
                out.insert(Assertion::concept(b, a));
            }
        }
        for &c in inds {
            for p in sig.roles().filter(|p| sig.is_rigid_role(*p)) {
                if kb.has_role(p, a, c) {
                    out.insert(Assertion::role(Role::new(p), a, c));
                }
            }
        }
    }
    out
}

/// Rigid witness queries of a Boolean CQ: CQs over rigid names with at most
/// as many terms as `phi` that entail `phi` under the ontology. A KB
/// entails some rigid witness iff it entails one of the returned queries.
pub fn witness_queries(tb: &Tbox, sig: &Signature, phi: &Cq) -> Result<Vec<Cq>> {
    let bound = phi.term_count();
    let q = Cq {
        answer: Vec::new(),
        ..phi.clone()
    };
    let rigid = |a: &DbAtom| match *a {
        DbAtom::Concept(b, _) => sig.is_rigid_basic(b),
        DbAtom::Role(p, _, _) => sig.is_rigid_role(p),
        _ => false,
    };
    let mut out: BTreeSet<DbCq> = BTreeSet::new();
    let mut seen: HashSet<DbCq> = HashSet::new();
    for r in perfect_ref(tb, &q)? {
        if r.atoms.iter().all(rigid) {
            quotients_within(r, bound, &mut seen, &mut out);
        }
    }
    Ok(out.into_iter().map(|q| db_to_cq(&q)).collect())
}

fn term_count(q: &DbCq) -> usize {
    q.atoms
        .iter()
        .flat_map(|a| a.terms())
        .collect::<BTreeSet<Term>>()
        .len()
}

/// Collects the quotients of `q` (identifying variables with each other or
/// with its individuals) that have at most `bound` terms, stopping at the
/// first quotient within the bound along each merge sequence.
fn quotients_within(q: DbCq, bound: usize, seen: &mut HashSet<DbCq>, out: &mut BTreeSet<DbCq>) {
    if !seen.insert(q.clone()) {
        return;
    }
    if term_count(&q) <= bound {
        out.insert(q);
        return;
    }
    let terms: Vec<Term> = q
        .atoms
        .iter()
        .flat_map(|a| a.terms())
        .collect::<BTreeSet<Term>>()
        .into_iter()
        .collect();
    for (k, &s) in terms.iter().enumerate() {
        let Term::Var(v) = s else { continue };
        for (l, &t) in terms.iter().enumerate() {
            if k == l || (matches!(t, Term::Var(_)) && l < k) {
                continue;
            }
            let sub = |x: Term| if x == Term::Var(v) { t } else { x };
            let merged = DbCq {
                nvars: q.nvars,
                answer: Vec::new(),
                atoms: q
                    .atoms
                    .iter()
                    .map(|a| match *a {
                        DbAtom::Concept(b, x) => DbAtom::Concept(b, sub(x)),
                        DbAtom::Role(p, x, y) => DbAtom::Role(p, sub(x), sub(y)),
                        other => other,
                    })
                    .collect(),
            };
            quotients_within(normalize_cq(merged), bound, seen, out);
        }
    }
}

/// Converts a rewritten query without negative atoms into a Boolean CQ.
pub fn db_to_cq(q: &DbCq) -> Cq {
    let atoms = q
        .atoms
        .iter()
        .filter_map(|a| match *a {
            DbAtom::Concept(b, t) => Some(Atom::Concept(b, t)),
            DbAtom::Role(p, s, t) => Some(Atom::Role(p, s, t)),
            _ => None,
        })
        .collect();
    Cq::boolean((0..q.nvars).map(|i| format!("w{i}")).collect(), atoms)
}

/// An assertion of a rigid tree, relative to the root `b` (empty word).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum TreeAtom {
    Concept(BasicConcept, Vec<Role>),
    Role(Role, Vec<Role>, Vec<Role>),
}

/// A satisfiability or entailment instance: a TKB together with the
/// abstraction of a TCQ and all name pools derived from them.
#[derive(Clone, Debug)]
pub struct Problem {
    pub sig: Signature,
    pub tb: Tbox,
    pub aboxes: Vec<ABox>,
    /// The normalized query.
    pub phi: Tcq,
    pub ltl: Ltl,
    pub root: F,
    /// `φ_1 … φ_m`; leaf `j` is proposition `p_j` (bit `j` of a world).
    pub leaves: Vec<Cq>,
    /// `N_I(K)`: individuals of the ABoxes and of the query.
    pub nik: Vec<Individual>,
    /// `N_I(Φ)`.
    pub niphi: Vec<Individual>,
    /// `aux[j][v]`: the name `a_x` of variable `v` of leaf `j`.
    pub aux: Vec<Vec<Individual>>,
    /// `A_{φ_j}`.
    pub inst: Vec<ABox>,
    /// Whether `⟨O, A_{φ_j}⟩` is consistent.
    pub inst_ok: Vec<bool>,
    /// `rigcons({φ_j})`; empty for inconsistent instantiations.
    pub rigcons1: Vec<ABox>,
    pub witnesses: Vec<Vec<Cq>>,
    /// Depth bound of the rigid trees.
    pub depth: usize,
    /// `𝔸_R(K)`: positive rigid assertions over `N_I(K)`.
    pub rigid_atoms: Vec<Assertion>,
    /// Flexible roles (both directions).
    pub flex_roles: Vec<Role>,
    /// Flexible roles whose rigid tree is non-empty.
    pub relevant: Vec<Role>,
    trees: BTreeMap<FlexEx, ABox>,
    /// `A_{∃S}`: the tree of each relevant flexible role below a prototype
    /// root `[S]`, with prototype names for the inner nodes.
    protos: BTreeMap<Role, (Individual, ABox)>,
    pub names: Names,
}

impl Problem {
    pub fn new(tkb: &Tkb, phi: &Tcq) -> Result<Problem> {
        let sig = tkb.signature.clone();
        let tb = Tbox::new(&sig, &tkb.ontology)?;
        let phi = normalize_tcq(phi);
        let (ltl, root, leaves) = propositional_abstraction(&phi);
        if leaves.len() > MAX_LEAVES {
            return Err(Error::ResourceLimit(format!(
                "{} CQ leaves (at most {MAX_LEAVES} supported)",
                leaves.len()
            )));
        }
        let niphi: BTreeSet<Individual> = phi.individuals();
        let mut nik = tkb.abox_individuals();
        nik.extend(niphi.iter().copied());
        let mut names = Names::new(sig.individual_count() as u32);
        let aux: Vec<Vec<Individual>> = leaves
            .iter()
            .enumerate()
            .map(|(j, q)| {
                q.vars
                    .iter()
                    .map(|v| names.fresh(format!("aux:{}.{}", j + 1, v)))
                    .collect()
            })
            .collect();
        let inst: Vec<ABox> = leaves
            .iter()
            .zip(&aux)
            .map(|(q, a)| instantiate(q, a))
            .collect();
        let mut inst_ok = Vec::new();
        let mut rigcons1 = Vec::new();
        for a in &inst {
            match rigid_consequences(&tb, &sig, a) {
                Ok(r) => {
                    inst_ok.push(true);
                    rigcons1.push(r);
                }
                Err(Error::InconsistentInstantiation(_)) => {
                    inst_ok.push(false);
                    rigcons1.push(ABox::new());
                }
                Err(e) => return Err(e),
            }
        }
        let witnesses = leaves
            .iter()
            .map(|q| witness_queries(&tb, &sig, q))
            .collect::<Result<Vec<_>>>()?;
        let depth = leaves
            .iter()
            .map(|q| {
                q.vars.len()
                    + q.atoms
                        .iter()
                        .filter(|a| matches!(a, Atom::Concept(BasicConcept::Exists(_), _)))
                        .count()
            })
            .max()
            .unwrap_or(0);
        let nik: Vec<Individual> = nik.into_iter().collect();
        let mut rigid_atoms = Vec::new();
        for &a in &nik {
            for b in sig.basic_concepts() {
                if sig.is_rigid_basic(b) {
                    rigid_atoms.push(Assertion::concept(b, a));
                }
            }
        }
        for p in sig.roles().filter(|p| sig.is_rigid_role(*p)) {
            for &a in &nik {
                for &b in &nik {
                    rigid_atoms.push(Assertion::role(Role::new(p), a, b));
                }
            }
        }
        let flex_roles: Vec<Role> = sig
            .roles()
            .filter(|p| !sig.is_rigid_role(*p))
            .flat_map(|p| [Role::new(p), Role::inverse_of(p)])
            .collect();
        let mut problem = Problem {
            sig,
            tb,
            aboxes: tkb.aboxes.clone(),
            phi,
            ltl,
            root,
            leaves,
            nik,
            niphi: niphi.into_iter().collect(),
            aux,
            inst,
            inst_ok,
            rigcons1,
            witnesses,
            depth,
            rigid_atoms,
            flex_roles,
            relevant: Vec::new(),
            trees: BTreeMap::new(),
            protos: BTreeMap::new(),
            names,
        };
        problem.build_trees();
        Ok(problem)
    }

    /// Number of leaves `m`.
    pub fn m(&self) -> usize {
        self.leaves.len()
    }

    /// `n`, the last time point with data.
    pub fn n(&self) -> usize {
        self.aboxes.len().saturating_sub(1)
    }

    /// All auxiliary names.
    pub fn aux_names(&self) -> impl Iterator<Item = Individual> + '_ {
        self.aux.iter().flatten().copied()
    }

    /// `N_I(K) ∪ N_I^aux`.
    pub fn roots(&self) -> Vec<Individual> {
        self.nik.iter().copied().chain(self.aux_names()).collect()
    }

    /// Rigid assertions of the tree below `∃S(b)`, relative to `b`.
    fn tree_template(&self, s: Role) -> Vec<TreeAtom> {
        let tb = &self.tb;
        let sig = &self.sig;
        let mut seed = tb.empty_set();
        seed.insert(tb.basic_index(BasicConcept::Exists(s)));
        let set = tb.close(seed);
        let mut gen = tb.gen(&set);
        if !gen.contains(&s) {
            gen.push(s);
        }
        let mut out = Vec::new();
        let mut frontier: Vec<(Vec<Role>, Vec<Role>)> = vec![(Vec::new(), gen)];
        for _ in 0..self.depth {
            let mut next = Vec::new();
            for (word, gen) in frontier {
                for r in gen {
                    let mut child = word.clone();
                    child.push(r);
                    let k = tb.kind_of(r);
                    for i in tb.kind_set(k).ones().filter(|&i| i < tb.nbasic()) {
                        let b = tb.basic_of(i);
                        if sig.is_rigid_basic(b) {
                            out.push(TreeAtom::Concept(b, child.clone()));
                        }
                    }
                    for sup in tb.supers(r) {
                        if sig.is_rigid_role(sup.name) {
                            out.push(TreeAtom::Role(sup, word.clone(), child.clone()));
                        }
                    }
                    next.push((child, tb.kind_gen(k).to_vec()));
                }
            }
            frontier = next;
        }
        out.sort();
        out.dedup();
        out
    }

    fn build_trees(&mut self) {
        let roots = self.roots();
        let mut named: HashMap<(Individual, Vec<Role>), Individual> = HashMap::new();
        for &s in &self.flex_roles.clone() {
            let template = self.tree_template(s);
            if template.is_empty() {
                continue;
            }
            self.relevant.push(s);
            for &b in &roots {
                let abox = self.instantiate_tree(&template, b, "tree", &mut named);
                self.trees.insert((s, b), abox);
            }
            let root = self.names.fresh(format!("[{}]", self.sig.show_role(s)));
            let abox = self.instantiate_tree(&template, root, "pro", &mut named);
            self.protos.insert(s, (root, abox));
        }
    }

    /// Names the nodes of a tree template below `b`; nodes are shared per
    /// `(b, word)`.
    fn instantiate_tree(
        &mut self,
        template: &[TreeAtom],
        b: Individual,
        prefix: &str,
        named: &mut HashMap<(Individual, Vec<Role>), Individual>,
    ) -> ABox {
        let mut abox = ABox::new();
        let mut name = |names: &mut Names, word: &Vec<Role>| -> Individual {
            if word.is_empty() {
                return b;
            }
            *named.entry((b, word.clone())).or_insert_with(|| {
                let path: Vec<String> = word.iter().map(|r| self.sig.show_role(*r)).collect();
                let root = names.show(&self.sig, b);
                names.fresh(format!("{prefix}:{}/{}", root, path.join("/")))
            })
        };
        for atom in template {
            match atom {
                TreeAtom::Concept(c, w) => {
                    let x = name(&mut self.names, w);
                    abox.insert(Assertion::concept(*c, x));
                }
                TreeAtom::Role(r, p, w) => {
                    let x = name(&mut self.names, p);
                    let y = name(&mut self.names, w);
                    abox.insert(Assertion::role(*r, x, y));
                }
            }
        }
        abox
    }

    /// The prototype root `[S]` and `A_{∃S}` of a relevant flexible role.
    pub fn prototype(&self, s: Role) -> Option<&(Individual, ABox)> {
        self.protos.get(&s)
    }

    /// `A_{∃S(b)}`: the rigid tree below a flexible existential.
    pub fn tree(&self, e: FlexEx) -> ABox {
        self.trees.get(&e).cloned().unwrap_or_default()
    }

    /// `A_RF` for a set of flexible existentials.
    pub fn build_arf<'a>(&self, r_f: impl IntoIterator<Item = &'a FlexEx>) -> ABox {
        let mut out = ABox::new();
        for e in r_f {
            if let Some(t) = self.trees.get(e) {
                out.extend(t.iter().copied());
            }
        }
        out
    }

    /// `rigcons(Q_R)` as the union of the rigid consequences of each CQ.
    pub fn rigcons(&self, q_r: u64) -> ABox {
        let mut out = ABox::new();
        for j in bits(q_r) {
            out.extend(self.rigcons1[j].iter().copied());
        }
        out
    }

    /// `A_{Q_W}`.
    pub fn inst_world(&self, w: World) -> ABox {
        let mut out = ABox::new();
        for j in 0..self.m() {
            if w.contains(j) {
                out.extend(self.inst[j].iter().copied());
            }
        }
        out
    }

    /// `A_i`, empty for `i > n`.
    pub fn abox_at(&self, i: usize) -> ABox {
        self.aboxes.get(i).cloned().unwrap_or_default()
    }

    /// The ABox of `K_R(i)`.
    pub fn kr(&self, i: usize, t: &Tuple, w: World, include_arf: bool) -> ABox {
        let mut abox = t.a_r.clone();
        abox.extend(self.rigcons(t.q_r));
        abox.extend(self.inst_world(w));
        if include_arf {
            abox.extend(self.build_arf(&t.r_f));
        }
        abox.extend(self.abox_at(i));
        abox
    }

    /// Summary of what the KB `base ∪ A_{Q_W} ∪ A_i` entails.
    pub fn summarize(
        &self,
        base: &ABox,
        arf: &ABox,
        w: World,
        i: usize,
        universe: &[FlexEx],
        witness_with_arf: bool,
    ) -> Summary {
        let mut abox = base.clone();
        abox.extend(self.inst_world(w));
        abox.extend(self.abox_at(i));
        let kb = KbIndex::new(&self.tb, &abox);
        if !kb.is_consistent() {
            return Summary::default();
        }
        let flex: BTreeSet<FlexEx> = universe
            .iter()
            .copied()
            .filter(|&(s, b)| kb.has_concept(b, BasicConcept::Exists(s)))
            .collect();
        let mut full = abox;
        full.extend(arf.iter().copied());
        let kb_arf = if arf.is_empty() {
            None
        } else {
            Some(KbIndex::new(&self.tb, &full))
        };
        let with_arf = kb_arf.as_ref().unwrap_or(&kb);
        let mut leaves = 0u64;
        let mut witnessed = 0u64;
        for j in 0..self.m() {
            if !w.contains(j) && with_arf.entails(&self.leaves[j]) {
                leaves |= 1 << j;
            }
            let kw = if witness_with_arf { with_arf } else { &kb };
            if self.witnesses[j].iter().any(|psi| kw.entails(psi)) {
                witnessed |= 1 << j;
            }
        }
        Summary {
            consistent: true,
            entailed_negatives: leaves,
            witnessed,
            flex,
        }
    }

    /// Flexible existentials over all flexible roles and roots.
    pub fn flex_universe(&self) -> Vec<FlexEx> {
        let roots = self.roots();
        self.flex_roles
            .iter()
            .flat_map(|&s| roots.iter().map(move |&b| (s, b)))
            .collect()
    }

    /// The per-time-point check: C1–C5 at `i` and the "if" half of C6.
    /// Unlike [`Problem::is_r_complete`], C5 is checked without `A_RF`.
    pub fn rsatisfiable(&self, t: &Tuple, w: World, i: usize) -> bool {
        if !self.c3_c4(t, w) {
            return false;
        }
        let mut base = t.a_r.clone();
        base.extend(self.rigcons(t.q_r));
        let arf = self.build_arf(&t.r_f);
        let s = self.summarize(&base, &arf, w, i, &self.flex_universe(), false);
        s.consistent
            && s.entailed_negatives == 0
            && s.witnessed & t.q_rn == 0
            && s.flex.is_subset(&t.r_f)
    }

    fn c3_c4(&self, t: &Tuple, w: World) -> bool {
        (0..self.m()).all(|j| {
            if w.contains(j) {
                t.q_r >> j & 1 == 1
            } else {
                t.q_rn >> j & 1 == 1
            }
        })
    }

    /// Whether `a_r` is a rigid ABox type over `N_I(K)`.
    pub fn is_rigid_type(&self, a_r: &ABox) -> bool {
        a_r.len() == self.rigid_atoms.len()
            && self
                .rigid_atoms
                .iter()
                .all(|a| a_r.contains(a) != a_r.contains(&a.negated()))
    }

    /// Checks C1–C6 for the time points `0 … n+k`, where `worlds` is
    /// `W_1 … W_k` and `iota[i]` (for `i ≤ n`) indexes into it.
    pub fn is_r_complete(&self, t: &Tuple, worlds: &[World], iota: &[usize]) -> bool {
        let n = self.n();
        if !self.is_rigid_type(&t.a_r) || iota.len() != n + 1 {
            return false;
        }
        let points: Vec<(usize, World)> = (0..=n)
            .map(|i| (i, worlds[iota[i]]))
            .chain(worlds.iter().enumerate().map(|(l, w)| (n + 1 + l, *w)))
            .collect();
        let mut base = t.a_r.clone();
        base.extend(self.rigcons(t.q_r));
        let arf = self.build_arf(&t.r_f);
        let universe = self.flex_universe();
        let mut entailed_somewhere: BTreeSet<FlexEx> = BTreeSet::new();
        for &(i, w) in &points {
            if !self.c3_c4(t, w) {
                return false;
            }
            let s = self.summarize(&base, &arf, w, i, &universe, true);
            if !s.consistent || s.entailed_negatives != 0 || s.witnessed & t.q_rn != 0 {
                return false;
            }
            entailed_somewhere.extend(s.flex);
        }
        entailed_somewhere == t.r_f
    }

    /// The least rigid type containing the positive assertions `seed` and
    /// closed under entailment with each input ABox. Returns the type, the
    /// positive part and the number of rounds until the positive part stops
    /// growing.
    pub fn rigid_fixpoint(&self, seed: &ABox) -> (ABox, ABox, usize) {
        let candidates: BTreeSet<Assertion> = self.rigid_atoms.iter().copied().collect();
        let mut pos: ABox = seed.intersection(&candidates).copied().collect();
        let mut rounds = 0;
        loop {
            let mut next = pos.clone();
            for i in 0..=self.n() {
                let mut abox = pos.clone();
                abox.extend(self.abox_at(i));
                let kb = KbIndex::with_individuals(&self.tb, &abox, self.nik.iter().copied());
                for a in &self.rigid_atoms {
                    if kb.entails_assertion(a) {
                        next.insert(*a);
                    }
                }
            }
            if next == pos {
                break;
            }
            pos = next;
            rounds += 1;
        }
        let mut full = pos.clone();
        for a in &self.rigid_atoms {
            if !pos.contains(a) {
                full.insert(a.negated());
            }
        }
        (full, pos, rounds)
    }

    /// Size of `𝐁_R(O)`: rigid basic concepts of the signature.
    pub fn rigid_basic_count(&self) -> usize {
        self.sig
            .basic_concepts()
            .into_iter()
            .filter(|b| self.sig.is_rigid_basic(*b))
            .count()
    }

    /// Every tuple over the full candidate sets, or `ResourceLimit` beyond
    /// `cap` tuples.
    pub fn enumerate_tuples(&self, cap: usize) -> Result<Vec<Tuple>> {
        let ra = self.rigid_atoms.len();
        let universe = self.flex_universe();
        let m = self.m();
        let total = (ra + universe.len() + 2 * m) as u32;
        if total >= 40 || (1usize << total) > cap {
            return Err(Error::ResourceLimit(format!(
                "2^{total} tuples exceed the cap of {cap}"
            )));
        }
        let mut out = Vec::new();
        for ar in 0..1usize << ra {
            let a_r: ABox = self
                .rigid_atoms
                .iter()
                .enumerate()
                .map(|(k, a)| if ar >> k & 1 == 1 { *a } else { a.negated() })
                .collect();
            for q_r in 0..1u64 << m {
                for q_rn in 0..1u64 << m {
                    for rf in 0..1usize << universe.len() {
                        let r_f = universe
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| rf >> k & 1 == 1)
                            .map(|(_, e)| *e)
                            .collect();
                        out.push(Tuple {
                            a_r: a_r.clone(),
                            q_r,
                            q_rn,
                            r_f,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Rigid concepts and relevant flexible existentials of the query
    /// individuals that hold at some point of some model: everything
    /// entailed by some `A_i` together with all consistent instantiations,
    /// their rigid consequences and the rigid atoms found so far.
    pub fn bphi_upper_bound(&self) -> Vec<Assertion> {
        let p = self;
        let mut common = ABox::new();
        for j in 0..p.m() {
            if p.inst_ok[j] {
                common.extend(p.inst[j].iter().copied());
                common.extend(p.rigcons1[j].iter().copied());
            }
        }
        let basics: Vec<BasicConcept> = p.sig.basic_concepts();
        let mut found: BTreeSet<Assertion> = BTreeSet::new();
        loop {
            let mut rigid: ABox = ABox::new();
            let mut next = found.clone();
            for i in 0..=p.n() + 1 {
                let mut abox = common.clone();
                abox.extend(p.abox_at(i));
                abox.extend(found.iter().copied().filter(|a| p.sig.is_rigid_assertion(a)));
                let kb = KbIndex::new(&p.tb, &abox);
                for &a in kb.individuals() {
                    for &b in &basics {
                        if p.sig.is_rigid_basic(b) && kb.has_concept(a, b) {
                            rigid.insert(Assertion::concept(b, a));
                        }
                    }
                    for x in kb.individuals() {
                        for r in p.sig.roles().filter(|r| p.sig.is_rigid_role(*r)) {
                            if kb.has_role(r, a, *x) {
                                rigid.insert(Assertion::role(Role::new(r), a, *x));
                            }
                        }
                    }
                }
                for &a in &p.niphi {
                    for &s in &p.relevant {
                        if kb.has_concept(a, BasicConcept::Exists(s)) {
                            next.insert(Assertion::concept(BasicConcept::Exists(s), a));
                        }
                    }
                }
            }
            next.extend(rigid);
            if next == found {
                break;
            }
            found = next;
        }
        found
            .into_iter()
            .filter(|a| match a.body {
                AssertionBody::Concept(_, x) => p.niphi.contains(&x),
                _ => false,
            })
            .collect()
    }

    /// Display name of an individual.
    pub fn show_individual(&self, a: Individual) -> String {
        self.names.show(&self.sig, a)
    }

    /// Display form of an assertion, including fresh names.
    pub fn show_assertion(&self, a: &Assertion) -> String {
        let mut s = self.sig.show_assertion(a);
        for x in a.individuals() {
            if self.names.is_fresh(x) {
                s = s.replace(&self.sig.individual_name(x), &self.show_individual(x));
            }
        }
        s
    }
}

/// What one per-time-point KB entails, as far as the conditions need it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    /// C1; when false the other fields are empty.
    pub consistent: bool,
    /// Leaves `j ∉ W` entailed together with `A_RF` (C2 violations).
    pub entailed_negatives: u64,
    /// Leaves with an entailed rigid witness.
    pub witnessed: u64,
    /// Entailed flexible existentials from the given universe.
    pub flex: BTreeSet<FlexEx>,
}

/// Indices of the set bits.
pub fn bits(x: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |j| x >> j & 1 == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_instance, parse_kb};

    #[test]
    fn rigid_consequences_of_a_flexible_role() {
        let (tkb, _) = parse_kb("role S\nrigid role R\nS < R\n", "@0:\nS(a,b)\n").unwrap();
        let sig = &tkb.signature;
        let tb = Tbox::new(sig, &tkb.ontology).unwrap();
        let got = rigid_consequences(&tb, sig, &tkb.aboxes[0]).unwrap();
        let r = Role::new(sig.role("R").unwrap());
        let (a, b) = (Individual(0), Individual(1));
        let want: ABox = [
            Assertion::role(r, a, b),
            Assertion::concept(BasicConcept::Exists(r), a),
            Assertion::concept(BasicConcept::Exists(r.inv()), b),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);
        let (bad, _) = parse_kb("concept A\nA <= bot\n", "@0:\nA(a)\n").unwrap();
        let tb = Tbox::new(&bad.signature, &bad.ontology).unwrap();
        assert!(matches!(
            rigid_consequences(&tb, &bad.signature, &bad.aboxes[0]),
            Err(Error::InconsistentInstantiation(_))
        ));
    }

    #[test]
    fn witnesses_use_rigid_names_and_entail_the_query() {
        let (mut tkb, _) = parse_kb("role S\nrigid role T\nrigid concept A\nT < S\nA <= exists S\n", "@0:\n").unwrap();
        let phi = match crate::syntax::parse_tcq("EX x . S(a,x)", &mut tkb.signature).unwrap() {
            Tcq::Cq(q) => q,
            other => panic!("{other:?}"),
        };
        let sig = &tkb.signature;
        let tb = Tbox::new(sig, &tkb.ontology).unwrap();
        let ws = witness_queries(&tb, sig, &phi).unwrap();
        assert!(!ws.is_empty());
        for w in &ws {
            assert!(w.atoms.iter().all(|a| match *a {
                Atom::Concept(b, _) => sig.is_rigid_basic(b),
                Atom::Role(p, _, _) => sig.is_rigid_role(p),
            }));
            assert!(w.term_count() <= phi.term_count());
            // The instantiation of a witness entails the query.
            let names: Vec<Individual> = (0..w.vars.len() as u32).map(|k| Individual(100 + k)).collect();
            let kb = KbIndex::new(&tb, &instantiate(w, &names));
            assert!(kb.entails(&phi), "{w:?}");
        }
        // A fully rigid query is its own witness.
        let rigid = match crate::syntax::parse_tcq("A(a)", &mut tkb.signature).unwrap() {
            Tcq::Cq(q) => q,
            other => panic!("{other:?}"),
        };
        let tb = Tbox::new(&tkb.signature, &tkb.ontology).unwrap();
        assert!(witness_queries(&tb, &tkb.signature, &rigid).unwrap().contains(&rigid));
    }

    #[test]
    fn fixpoint_types_and_tuple_caps() {
        let (tkb, phi) = parse_instance(
            "rigid concept A\nconcept B\nrigid role R\nB <= A\nexists R <= A\n",
            "@0:\nB(a)\n@1:\n",
            "A(a)",
        )
        .unwrap();
        let p = Problem::new(&tkb, &phi).unwrap();
        let (full, pos, rounds) = p.rigid_fixpoint(&ABox::new());
        assert!(p.is_rigid_type(&full));
        assert!(rounds <= p.rigid_basic_count());
        let a = tkb.signature.concept("A").unwrap();
        assert!(pos.contains(&Assertion::concept(BasicConcept::Atomic(a), Individual(0))));
        let mut broken = full.clone();
        broken.pop_first();
        assert!(!p.is_rigid_type(&broken));
        assert!(matches!(p.enumerate_tuples(1), Err(Error::ResourceLimit(_))));
    }
}
