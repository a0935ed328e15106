//! Construction of the first-order rewritings.
//!
//! * [`pref`] turns the PerfectRef UCQ of a CQ into a formula over the
//!   database atoms at one time point.
//! * [`ars_materialize`] computes the rigid levels `A_0 ⊆ A_1 ⊆ …` directly;
//!   the definitions `pref^j` built by [`Rewriter`] express membership in
//!   `A_{j+1}` as a formula, level `0` reading `A_0` from constants.
//! * A [`Skeleton`] fixes everything that does not depend on the data beyond
//!   the rigid fixpoint: `Q_R'`, `B_Φ`, the rigid ABox `A_R'` and the
//!   flexible existentials whose rigid trees are added.
//! * [`Rewriter::rep`] rewrites a Boolean UCQ `q` into a formula that holds
//!   at `τ` iff `⟨O, A_KR'(W) ∪ A_τ⟩ ⊨ q`, where
//!   `A_KR'(W) = A_R' ∪ rigcons(Q_R') ∪ A_{Q_W} ∪ A_RF'`.
//!
//! `rep` assigns every query variable either to the object domain or to
//! one of the names outside it: auxiliary names, nodes of the trees in the
//! constant part `C = rigcons(Q_R') ∪ A_{Q_W} ∪ trees(RF_aux ∪ RF_Φ)`, or
//! prototype nodes standing for the trees of data-dependent existentials
//! `∃S(b)`. An atom is then matched by
//!
//! * R1: the database and the rigid levels, when all its terms are objects;
//! * R2: an assertion of `C`, names compared by identity;
//! * R3: a prototype tree `A_∃S`, with the tree's root `[S]` standing for an
//!   object `b` such that `∃S(b)` is entailed from `A_R' ∪ A_i` for some `i`.
//!
//! Prototype variables connected through role atoms lie in one tree, so all
//! object ends of their role atoms denote the same root.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::fo::{Fo, FoDef, OTerm, TTerm};
use crate::dllite::{normalize_cq, perfect_ref, q_unsat, DbAtom, DbCq, KbIndex, Tbox, Ucq};
use crate::error::Result;
use crate::model::{
    ABox, Assertion, AssertionBody, Atom, BasicConcept, Cq, Individual, Role, RoleName, Term, Var,
    World,
};
use crate::rsat::{bits, FlexEx, Problem};

/// A predicate that gets a definition per level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Concept(BasicConcept),
    Role(RoleName),
}

impl Pred {
    pub fn arity(self) -> usize {
        match self {
            Pred::Concept(_) => 1,
            Pred::Role(_) => 2,
        }
    }

    /// The query `α(x_0[, x_1])` with all variables as answers.
    pub fn query(self) -> Cq {
        let x = Term::Var(Var(0));
        let y = Term::Var(Var(1));
        match self {
            Pred::Concept(b) => Cq {
                vars: vec!["x0".into()],
                answer: vec![Var(0)],
                atoms: vec![Atom::Concept(b, x)],
            },
            Pred::Role(p) => Cq {
                vars: vec!["x0".into(), "x1".into()],
                answer: vec![Var(0), Var(1)],
                atoms: vec![Atom::Role(p, x, y)],
            },
        }
    }
}

/// An atom whose terms are already formula terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OAtom {
    Concept(BasicConcept, OTerm),
    Role(RoleName, OTerm, OTerm),
    NegConcept(BasicConcept, OTerm),
    NegRole(RoleName, OTerm, OTerm),
}

/// Fresh variable ids for formulas.
#[derive(Clone, Debug, Default)]
pub struct VarGen(u32);

impl VarGen {
    pub fn fresh(&mut self) -> u32 {
        self.0 += 1;
        self.0
    }
}

/// The time variable that rewritings of Boolean queries are free in.
pub const TAU: u32 = 0;

/// The database reading of an atom at `τ`. `∃R(t)` holds if asserted or if
/// `t` has an `R`-edge.
pub fn tdb_atom(a: OAtom, tau: TTerm, gen: &mut VarGen) -> Fo {
    match a {
        OAtom::Concept(b @ BasicConcept::Exists(r), t) => {
            let y = gen.fresh();
            let edge = if r.inverse {
                Fo::Role(r.name, OTerm::Var(y), t, tau)
            } else {
                Fo::Role(r.name, t, OTerm::Var(y), tau)
            };
            Fo::or([Fo::Concept(b, t, tau), Fo::exists_obj(y, edge)])
        }
        OAtom::Concept(b, t) => Fo::Concept(b, t, tau),
        OAtom::Role(p, s, t) => Fo::Role(p, s, t, tau),
        OAtom::NegConcept(b, t) => Fo::NegConcept(b, t, tau),
        OAtom::NegRole(p, s, t) => Fo::NegRole(p, s, t, tau),
    }
}

/// Translates a UCQ with answer terms bound to `params`; `atom` renders each
/// atom. Non-answer variables become existentially quantified objects.
pub fn ucq_formula(
    ucq: &[DbCq],
    params: &[OTerm],
    gen: &mut VarGen,
    atom: &mut dyn FnMut(OAtom, &mut VarGen) -> Fo,
) -> Fo {
    let mut disjuncts = Vec::new();
    for q in ucq {
        let mut map: HashMap<u32, OTerm> = HashMap::new();
        let mut eqs = Vec::new();
        for (t, &param) in q.answer.iter().zip(params) {
            match *t {
                Term::Ind(a) => eqs.push(Fo::eq(param, OTerm::Const(a))),
                Term::Var(v) => match map.get(&v.0) {
                    Some(&prev) => eqs.push(Fo::eq(param, prev)),
                    None => {
                        map.insert(v.0, param);
                    }
                },
            }
        }
        let mut bound = Vec::new();
        let mut term = |t: Term, map: &mut HashMap<u32, OTerm>, gen: &mut VarGen| match t {
            Term::Ind(a) => OTerm::Const(a),
            Term::Var(v) => *map.entry(v.0).or_insert_with(|| {
                let x = gen.fresh();
                bound.push(x);
                OTerm::Var(x)
            }),
        };
        let mut body = eqs;
        for a in &q.atoms {
            let oa = match *a {
                DbAtom::Concept(b, t) => OAtom::Concept(b, term(t, &mut map, gen)),
                DbAtom::Role(p, s, t) => {
                    let s = term(s, &mut map, gen);
                    OAtom::Role(p, s, term(t, &mut map, gen))
                }
                DbAtom::NegConcept(b, t) => OAtom::NegConcept(b, term(t, &mut map, gen)),
                DbAtom::NegRole(p, s, t) => {
                    let s = term(s, &mut map, gen);
                    OAtom::NegRole(p, s, term(t, &mut map, gen))
                }
            };
            body.push(atom(oa, gen));
        }
        let mut f = Fo::and(body);
        for x in bound.into_iter().rev() {
            f = Fo::exists_obj(x, f);
        }
        disjuncts.push(f);
    }
    Fo::or(disjuncts)
}

/// `pref(q)(τ)`: the PerfectRef rewriting of `q` read over the database at
/// `τ`, with the answer variables of `q` bound to `params`. Over the
/// database of `A_τ` it holds iff the tuple is a certain answer of `q` over
/// `⟨O, A_τ⟩` (contradictions ignored).
pub fn pref(tb: &Tbox, q: &Cq, params: &[OTerm], tau: TTerm, gen: &mut VarGen) -> Result<Fo> {
    let ucq = perfect_ref(tb, q)?;
    Ok(ucq_formula(&ucq, params, gen, &mut |a, g| tdb_atom(a, tau, g)))
}

/// The rigid levels `A_0 … A_N` over `𝔸_R(K)`:
/// `A_0 = 𝔸_R(K) ∩ seed` and `A_{j+1}` the rigid assertions entailed by
/// `A_j ∪ A_i` for some `i ∈ [0, n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Materialized {
    /// `A_0 … A_N` with `N = |𝐁_R(O)|`; further levels are computed until
    /// stable but not stored.
    pub levels: Vec<ABox>,
    /// Number of steps `A_j → A_{j+1}` that added something.
    pub rounds: usize,
    /// The fixpoint as a full rigid type over `𝔸_R(K)`.
    pub full: ABox,
    /// Positive part of the fixpoint.
    pub pos: ABox,
}

pub fn ars_materialize(p: &Problem, seed: &ABox) -> Materialized {
    let big_n = p.rigid_basic_count();
    let candidates: BTreeSet<Assertion> = p.rigid_atoms.iter().copied().collect();
    let mut cur: ABox = seed.intersection(&candidates).copied().collect();
    let mut levels = vec![cur.clone()];
    let mut rounds = 0;
    loop {
        let mut next = cur.clone();
        for i in 0..=p.n() {
            let mut abox = cur.clone();
            abox.extend(p.abox_at(i));
            let kb = KbIndex::with_individuals(&p.tb, &abox, p.nik.iter().copied());
            next.extend(p.rigid_atoms.iter().filter(|a| kb.entails_assertion(a)));
        }
        if next == cur {
            break;
        }
        rounds += 1;
        cur = next;
        if levels.len() <= big_n {
            levels.push(cur.clone());
        }
    }
    while levels.len() <= big_n {
        levels.push(cur.clone());
    }
    let mut full = cur.clone();
    for a in &p.rigid_atoms {
        if !cur.contains(a) {
            full.insert(a.negated());
        }
    }
    Materialized {
        levels,
        rounds,
        full,
        pos: cur,
    }
}

/// The data-independent part of a candidate, together with the rigid
/// fixpoint and the data-dependent existentials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    /// `Q_R'`: leaves true in some world of the candidate.
    pub q_r: u64,
    /// `B_Φ`: rigid concepts and flexible existentials of query individuals.
    pub bphi: Vec<Assertion>,
    pub mat: Materialized,
    /// `∃S(a_x)` entailed by an instantiation in `Q_R'`.
    pub rf_aux: BTreeSet<FlexEx>,
    /// Flexible existentials of `B_Φ`.
    pub rf_phi: BTreeSet<FlexEx>,
    /// `∃S(b)`, `b ∈ N_I(K) \ N_I(Φ)`, entailed by `A_R' ∪ A_i` for some `i`.
    pub rf_other: BTreeSet<FlexEx>,
}

impl Skeleton {
    /// `None` if a leaf of `q_r` has an inconsistent instantiation.
    pub fn new(p: &Problem, q_r: u64, bphi: Vec<Assertion>) -> Option<Skeleton> {
        if bits(q_r).any(|j| !p.inst_ok[j]) {
            return None;
        }
        let mut seed = p.rigcons(q_r);
        seed.extend(bphi.iter().copied().filter(|a| p.sig.is_rigid_assertion(a)));
        let mat = ars_materialize(p, &seed);
        let mut rf_aux = BTreeSet::new();
        for j in bits(q_r) {
            let kb = KbIndex::new(&p.tb, &p.inst[j]);
            for &x in &p.aux[j] {
                for &s in &p.relevant {
                    if kb.has_concept(x, BasicConcept::Exists(s)) {
                        rf_aux.insert((s, x));
                    }
                }
            }
        }
        let rf_phi = bphi
            .iter()
            .filter_map(|a| match a.body {
                AssertionBody::Concept(BasicConcept::Exists(s), x)
                    if !p.sig.is_rigid_role(s.name) && p.relevant.contains(&s) =>
                {
                    Some((s, x))
                }
                _ => None,
            })
            .collect();
        let mut rf_other = BTreeSet::new();
        for i in 0..=p.n() {
            let mut abox = mat.pos.clone();
            abox.extend(p.abox_at(i));
            let kb = KbIndex::new(&p.tb, &abox);
            for &b in p.nik.iter().filter(|b| !p.niphi.contains(b)) {
                for &s in &p.relevant {
                    if kb.has_concept(b, BasicConcept::Exists(s)) {
                        rf_other.insert((s, b));
                    }
                }
            }
        }
        Some(Skeleton {
            q_r,
            bphi,
            mat,
            rf_aux,
            rf_phi,
            rf_other,
        })
    }

    /// `RF'`: all flexible existentials whose trees are added.
    pub fn r_f(&self) -> BTreeSet<FlexEx> {
        self.rf_aux
            .iter()
            .chain(&self.rf_phi)
            .chain(&self.rf_other)
            .copied()
            .collect()
    }

    /// The flexible part of `B_Φ`.
    pub fn flex_bphi(&self) -> BTreeSet<FlexEx> {
        self.rf_phi.clone()
    }

    /// The constant ABox `C = rigcons(Q_R') ∪ A_{Q_W} ∪ trees(RF_aux ∪ RF_Φ)`.
    pub fn constant_abox(&self, p: &Problem, w: World) -> ABox {
        let mut c = p.rigcons(self.q_r);
        c.extend(p.inst_world(w));
        c.extend(p.build_arf(self.rf_aux.iter().chain(&self.rf_phi)));
        c
    }

    /// `A_KR'(W)`, with the trees of `RF_other` spelled out.
    pub fn akr(&self, p: &Problem, w: World) -> ABox {
        let mut a = self.mat.full.clone();
        a.extend(self.constant_abox(p, w));
        a.extend(p.build_arf(&self.rf_other));
        a
    }
}

/// PerfectRef rewritings a problem needs, computed once.
#[derive(Clone, Debug)]
pub struct Rewritings {
    /// Rigid basic concepts and rigid roles.
    pub rigid: Vec<Pred>,
    /// Relevant flexible `∃S`.
    pub flex: Vec<Pred>,
    pub pred: HashMap<Pred, Ucq>,
    pub leaves: Vec<Ucq>,
    pub unsat: Ucq,
    /// Union of the rewritings of the rigid witness queries of each leaf.
    pub witnesses: Vec<Ucq>,
    /// `∃S(a)` for relevant flexible `S` and `a ∈ N_I(Φ)`.
    pub flex_targets: Vec<FlexEx>,
    pub flex_ucq: Vec<Ucq>,
}

impl Rewritings {
    pub fn new(p: &Problem) -> Result<Rewritings> {
        let sig = &p.sig;
        let mut rigid: Vec<Pred> = sig
            .basic_concepts()
            .into_iter()
            .filter(|b| sig.is_rigid_basic(*b))
            .map(Pred::Concept)
            .collect();
        rigid.extend(sig.roles().filter(|r| sig.is_rigid_role(*r)).map(Pred::Role));
        let flex: Vec<Pred> = p
            .relevant
            .iter()
            .map(|&s| Pred::Concept(BasicConcept::Exists(s)))
            .collect();
        let mut pred = HashMap::new();
        for &a in rigid.iter().chain(&flex) {
            pred.insert(a, perfect_ref(&p.tb, &a.query())?);
        }
        let leaves = p
            .leaves
            .iter()
            .map(|q| perfect_ref(&p.tb, q))
            .collect::<Result<Vec<_>>>()?;
        let unsat = q_unsat(&p.tb)?;
        let mut witnesses = Vec::new();
        for ws in &p.witnesses {
            let mut u: BTreeSet<DbCq> = BTreeSet::new();
            for psi in ws {
                u.extend(perfect_ref(&p.tb, psi)?.into_iter().map(normalize_cq));
            }
            witnesses.push(u.into_iter().collect());
        }
        let mut flex_targets = Vec::new();
        let mut flex_ucq = Vec::new();
        for &s in &p.relevant {
            for &a in &p.niphi {
                flex_targets.push((s, a));
                let q = Cq::boolean(Vec::new(), vec![Atom::Concept(BasicConcept::Exists(s), Term::Ind(a))]);
                flex_ucq.push(perfect_ref(&p.tb, &q)?);
            }
        }
        Ok(Rewritings {
            rigid,
            flex,
            pred,
            leaves,
            unsat,
            witnesses,
            flex_targets,
            flex_ucq,
        })
    }
}

/// Set-based view of an ABox with the database reading of `∃R`.
#[derive(Clone, Debug, Default)]
struct AboxIndex {
    concepts: HashSet<(BasicConcept, Individual)>,
    roles: HashSet<(RoleName, Individual, Individual)>,
    edges: HashSet<(Role, Individual)>,
}

impl AboxIndex {
    fn new<'a>(abox: impl IntoIterator<Item = &'a Assertion>) -> Self {
        let mut ix = AboxIndex::default();
        for a in abox.into_iter().filter(|a| a.positive) {
            match a.body {
                AssertionBody::Concept(b, x) => {
                    ix.concepts.insert((b, x));
                }
                AssertionBody::Role(p, x, y) => {
                    ix.roles.insert((p, x, y));
                    ix.edges.insert((Role::new(p), x));
                    ix.edges.insert((Role::inverse_of(p), y));
                }
            }
        }
        ix
    }

    fn has_concept(&self, b: BasicConcept, x: Individual) -> bool {
        self.concepts.contains(&(b, x))
            || matches!(b, BasicConcept::Exists(r) if self.edges.contains(&(r, x)))
    }

    fn has_role(&self, p: RoleName, x: Individual, y: Individual) -> bool {
        self.roles.contains(&(p, x, y))
    }
}

/// What a query variable is mapped to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cat {
    /// An object of the database.
    Dom,
    /// A name of the constant ABox outside the object domain.
    Sym(Individual),
    /// A non-root node of the prototype tree of `S`.
    Pro(Individual, Role),
}

/// A term after the assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Val {
    Dom(OTerm),
    Sym(Individual),
    Pro(Individual, Role),
}

/// Builds the definitions `pref^j` for one skeleton and the rewritings
/// `rep` of Boolean UCQs.
pub struct Rewriter<'a> {
    pub p: &'a Problem,
    pub refs: &'a Rewritings,
    pub sk: &'a Skeleton,
    pub defs: Vec<FoDef>,
    index: HashMap<(usize, Pred), usize>,
    /// The level `N` whose definitions describe the fixpoint.
    pub top: usize,
    pub gen: VarGen,
    protos: BTreeMap<Role, (Individual, AboxIndex)>,
    pro_names: Vec<(Individual, Role)>,
}

impl<'a> Rewriter<'a> {
    pub fn new(p: &'a Problem, refs: &'a Rewritings, sk: &'a Skeleton) -> Self {
        let mut protos = BTreeMap::new();
        let mut pro_names = Vec::new();
        for &s in &p.relevant {
            if let Some((root, abox)) = p.prototype(s) {
                let names: BTreeSet<Individual> = abox.iter().flat_map(|a| a.individuals()).collect();
                pro_names.extend(names.into_iter().filter(|x| x != root).map(|x| (x, s)));
                protos.insert(s, (*root, AboxIndex::new(abox)));
            }
        }
        let mut rw = Rewriter {
            p,
            refs,
            sk,
            defs: Vec::new(),
            index: HashMap::new(),
            top: sk.mat.levels.len() - 1,
            gen: VarGen::default(),
            protos,
            pro_names,
        };
        for level in 0..=rw.top {
            for k in 0..refs.rigid.len() {
                rw.define(level, refs.rigid[k]);
            }
        }
        for k in 0..refs.flex.len() {
            rw.define(rw.top, refs.flex[k]);
        }
        rw
    }

    fn pred_name(&self, a: Pred) -> String {
        match a {
            Pred::Concept(BasicConcept::Atomic(c)) => self.p.sig.concept_name(c).to_string(),
            Pred::Concept(BasicConcept::Exists(r)) => format!("exists:{}", self.p.sig.show_role(r)),
            Pred::Role(r) => self.p.sig.role_name(r).to_string(),
        }
    }

    fn define(&mut self, level: usize, a: Pred) {
        let params: Vec<u32> = (0..a.arity()).map(|_| self.gen.fresh()).collect();
        let t = self.gen.fresh();
        let args: Vec<OTerm> = params.iter().map(|&x| OTerm::Var(x)).collect();
        let tau = TTerm::Var(t);
        let refs = self.refs;
        let ucq = &refs.pred[&a];
        let mut gen = std::mem::take(&mut self.gen);
        let body = ucq_formula(ucq, &args, &mut gen, &mut |oa, g| self.level_atom(level, oa, tau, g));
        self.gen = gen;
        self.index.insert((level, a), self.defs.len());
        self.defs.push(FoDef {
            name: format!("pref{level}.{}", self.pred_name(a)),
            obj_params: params,
            time_param: t,
            body,
        });
    }

    /// Identifier of `pref^level_α`.
    pub fn def_id(&self, level: usize, a: Pred) -> Option<usize> {
        self.index.get(&(level, a)).copied()
    }

    fn is_rigid(&self, a: OAtom) -> bool {
        match a {
            OAtom::Concept(b, _) | OAtom::NegConcept(b, _) => self.p.sig.is_rigid_basic(b),
            OAtom::Role(p, _, _) | OAtom::NegRole(p, _, _) => self.p.sig.is_rigid_role(p),
        }
    }

    /// An atom in the body of `pref^level`: flexible atoms read the
    /// database; rigid atoms also hold on `A_level`.
    fn level_atom(&self, level: usize, a: OAtom, tau: TTerm, gen: &mut VarGen) -> Fo {
        let db = tdb_atom(a, tau, gen);
        if !self.is_rigid(a) {
            return db;
        }
        if level == 0 {
            let a0 = &self.sk.mat.levels[0];
            let extra = match a {
                OAtom::Concept(b, t) => {
                    let mut alts: BTreeSet<Individual> = BTreeSet::new();
                    for x in a0 {
                        match x.body {
                            AssertionBody::Concept(c, i) if c == b => {
                                alts.insert(i);
                            }
                            AssertionBody::Role(p, i, j) => {
                                if let BasicConcept::Exists(r) = b {
                                    if r.name == p {
                                        alts.insert(if r.inverse { j } else { i });
                                    }
                                }
                            }
                            _ => {}
                        }
                    }
                    Fo::or(alts.into_iter().map(|i| Fo::eq(t, OTerm::Const(i))))
                }
                OAtom::Role(p, s, t) => Fo::or(a0.iter().filter_map(|x| match x.body {
                    AssertionBody::Role(q, i, j) if q == p => {
                        Some(Fo::and([Fo::eq(s, OTerm::Const(i)), Fo::eq(t, OTerm::Const(j))]))
                    }
                    _ => None,
                })),
                _ => Fo::False,
            };
            return Fo::or([db, extra]);
        }
        let (pred, args) = match a {
            OAtom::Concept(b, t) => (Pred::Concept(b), vec![t]),
            OAtom::Role(p, s, t) => (Pred::Role(p), vec![s, t]),
            _ => return db,
        };
        let id = self.index[&(level - 1, pred)];
        let pt = gen.fresh();
        Fo::or([db, Fo::exists_time(pt, Fo::Call(id, args, TTerm::Var(pt)))])
    }

    /// `pref^N_α(args)(τ)`.
    pub fn pref_top(&self, a: Pred, args: Vec<OTerm>, tau: TTerm) -> Fo {
        Fo::Call(self.index[&(self.top, a)], args, tau)
    }

    /// `∃S(x)` is entailed at some time point by `A_R'` and the data, and
    /// `x` is not a query individual.
    pub fn rep_x(&mut self, s: Role, x: OTerm) -> Fo {
        let pt = self.gen.fresh();
        let call = self.pref_top(Pred::Concept(BasicConcept::Exists(s)), vec![x], TTerm::Var(pt));
        Fo::and(
            std::iter::once(Fo::exists_time(pt, call))
                .chain(self.p.niphi.iter().map(|&a| Fo::not(Fo::eq(x, OTerm::Const(a))))),
        )
    }

    /// `rep_W(q)(τ)` for a Boolean UCQ.
    pub fn rep(&mut self, ucq: &[DbCq], w: World, tau: TTerm) -> Fo {
        let c = self.sk.constant_abox(self.p, w);
        let cix = AboxIndex::new(&c);
        let syms: Vec<Individual> = c
            .iter()
            .flat_map(|a| a.individuals())
            .filter(|x| self.p.names.is_fresh(*x))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut cats: Vec<Cat> = vec![Cat::Dom];
        cats.extend(syms.iter().map(|&x| Cat::Sym(x)));
        cats.extend(self.pro_names.iter().map(|&(x, s)| Cat::Pro(x, s)));
        let mut out = Vec::new();
        for q in ucq {
            let used: Vec<u32> = q
                .atoms
                .iter()
                .flat_map(|a| a.terms())
                .filter_map(|t| match t {
                    Term::Var(v) => Some(v.0),
                    Term::Ind(_) => None,
                })
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let mut assign: HashMap<u32, Cat> = HashMap::new();
            self.assign(q, &used, 0, &cats, &c, &cix, &mut assign, tau, &mut out);
            if out.iter().any(|f| *f == Fo::True) {
                return Fo::True;
            }
        }
        Fo::or(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn assign(
        &mut self,
        q: &DbCq,
        used: &[u32],
        k: usize,
        cats: &[Cat],
        c: &ABox,
        cix: &AboxIndex,
        assign: &mut HashMap<u32, Cat>,
        tau: TTerm,
        out: &mut Vec<Fo>,
    ) {
        if k == used.len() {
            let f = self.assigned_formula(q, assign, c, cix, tau);
            if f != Fo::False {
                out.push(f);
            }
            return;
        }
        let v = used[k];
        for &cat in cats {
            assign.insert(v, cat);
            let feasible = q.atoms.iter().all(|a| {
                let ts = a.terms();
                if !ts.contains(&Term::Var(Var(v))) {
                    return true;
                }
                let cs: Option<Vec<Cat>> = ts
                    .iter()
                    .map(|t| match t {
                        Term::Var(x) => assign.get(&x.0).copied(),
                        Term::Ind(_) => Some(Cat::Dom),
                    })
                    .collect();
                match cs {
                    Some(cs) => self.statically_possible(a, &cs, cix),
                    None => true,
                }
            });
            if feasible {
                self.assign(q, used, k + 1, cats, c, cix, assign, tau, out);
            }
        }
        assign.remove(&v);
    }

    /// Whether an atom with the given categories can hold at all.
    fn statically_possible(&self, a: &DbAtom, cs: &[Cat], cix: &AboxIndex) -> bool {
        let has_sym = cs.iter().any(|c| matches!(c, Cat::Sym(_)));
        let has_pro = cs.iter().any(|c| matches!(c, Cat::Pro(..)));
        if has_sym && has_pro {
            return false;
        }
        if has_pro {
            return self.proto_holds(a, cs);
        }
        if has_sym {
            // Some assertion of C agrees on the symbolic positions.
            let fits = |c: Cat, x: Individual| match c {
                Cat::Sym(s) => s == x,
                _ => !self.p.names.is_fresh(x),
            };
            return match *a {
                DbAtom::Concept(b, _) => {
                    let Cat::Sym(s) = cs[0] else { return false };
                    cix.has_concept(b, s)
                }
                DbAtom::Role(p, _, _) => cix
                    .roles
                    .iter()
                    .any(|&(q, x, y)| q == p && fits(cs[0], x) && fits(cs[1], y)),
                _ => false,
            };
        }
        true
    }

    /// Membership of an atom touching prototype nodes in its prototype
    /// tree, object ends read as the root.
    fn proto_holds(&self, a: &DbAtom, cs: &[Cat]) -> bool {
        let family = cs.iter().find_map(|c| match c {
            Cat::Pro(_, s) => Some(*s),
            _ => None,
        });
        let Some(s) = family else { return false };
        let Some((root, ix)) = self.protos.get(&s) else { return false };
        let mut names = Vec::new();
        for c in cs {
            names.push(match *c {
                Cat::Pro(x, f) if f == s => x,
                Cat::Pro(..) => return false,
                _ => *root,
            });
        }
        match *a {
            DbAtom::Concept(b, _) => ix.has_concept(b, names[0]),
            DbAtom::Role(p, _, _) => {
                // Object ends may only sit at the root, and not both.
                !(names[0] == *root && names[1] == *root) && ix.has_role(p, names[0], names[1])
            }
            _ => false,
        }
    }

    fn assigned_formula(
        &mut self,
        q: &DbCq,
        assign: &HashMap<u32, Cat>,
        c: &ABox,
        cix: &AboxIndex,
        tau: TTerm,
    ) -> Fo {
        let mut dom_vars: BTreeMap<u32, u32> = BTreeMap::new();
        // Union-find over the prototype variables.
        let pro: Vec<u32> = assign
            .iter()
            .filter(|(_, c)| matches!(c, Cat::Pro(..)))
            .map(|(v, _)| *v)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut uf: Vec<usize> = (0..pro.len()).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let pro_index = |t: Term| match t {
            Term::Var(v) => pro.iter().position(|&x| x == v.0),
            Term::Ind(_) => None,
        };
        let mut ends: Vec<(usize, OTerm)> = Vec::new();
        let mut conj = Vec::new();
        for a in &q.atoms {
            let ts = a.terms();
            let vals: Vec<Val> = ts
                .iter()
                .map(|t| match *t {
                    Term::Ind(a) => Val::Dom(OTerm::Const(a)),
                    Term::Var(v) => match assign[&v.0] {
                        Cat::Dom => {
                            let gen = &mut self.gen;
                            Val::Dom(OTerm::Var(*dom_vars.entry(v.0).or_insert_with(|| gen.fresh())))
                        }
                        Cat::Sym(x) => Val::Sym(x),
                        Cat::Pro(x, s) => Val::Pro(x, s),
                    },
                })
                .collect();
            let pis: Vec<usize> = ts.iter().filter_map(|t| pro_index(*t)).collect();
            if pis.is_empty() {
                let f = self.atom_formula(a, &vals, c, cix, tau);
                if f == Fo::False {
                    return Fo::False;
                }
                conj.push(f);
                continue;
            }
            // Membership in the prototype tree was checked during the
            // assignment; only the roots remain.
            if pis.len() == 2 {
                let (r0, r1) = (find(&mut uf, pis[0]), find(&mut uf, pis[1]));
                uf[r0] = r1;
            } else if let Some(Val::Dom(u)) = vals.iter().find(|v| matches!(v, Val::Dom(_))) {
                ends.push((pis[0], *u));
            }
        }
        let mut comps: BTreeMap<usize, (Role, Vec<OTerm>)> = BTreeMap::new();
        for (k, v) in pro.iter().enumerate() {
            let Cat::Pro(_, s) = assign[v] else { unreachable!("prototype variable") };
            let r = find(&mut uf, k);
            comps.entry(r).or_insert((s, Vec::new()));
        }
        for (k, u) in ends {
            let r = find(&mut uf, k);
            comps.get_mut(&r).expect("component").1.push(u);
        }
        for (_, (s, us)) in comps {
            match us.first() {
                None => {
                    let x = self.gen.fresh();
                    let body = self.rep_x(s, OTerm::Var(x));
                    conj.push(Fo::exists_obj(x, body));
                }
                Some(&u0) => {
                    conj.push(self.rep_x(s, u0));
                    conj.extend(us[1..].iter().map(|&u| Fo::eq(u0, u)));
                }
            }
        }
        let mut f = Fo::and(conj);
        for (_, x) in dom_vars.into_iter().rev() {
            f = Fo::exists_obj(x, f);
        }
        f
    }

    /// R1 ∨ R2 (∨ the tree-edge case for `∃R`) for an atom without
    /// prototype terms.
    fn atom_formula(&mut self, a: &DbAtom, vals: &[Val], c: &ABox, cix: &AboxIndex, tau: TTerm) -> Fo {
        let all_dom = vals.iter().all(|v| matches!(v, Val::Dom(_)));
        let mut alts = Vec::new();
        if all_dom {
            let d = |k: usize| match vals[k] {
                Val::Dom(t) => t,
                _ => unreachable!(),
            };
            let oa = match *a {
                DbAtom::Concept(b, _) => OAtom::Concept(b, d(0)),
                DbAtom::Role(p, _, _) => OAtom::Role(p, d(0), d(1)),
                DbAtom::NegConcept(b, _) => OAtom::NegConcept(b, d(0)),
                DbAtom::NegRole(p, _, _) => OAtom::NegRole(p, d(0), d(1)),
            };
            alts.push(self.r1(oa, tau));
            if let DbAtom::Concept(BasicConcept::Exists(r), _) = *a {
                let p = self.p;
                for &s in &p.relevant {
                    let (root, ix) = &self.protos[&s];
                    let has_edge = ix.edges.contains(&(r, *root));
                    if has_edge {
                        alts.push(self.rep_x(s, d(0)));
                    }
                }
            }
        }
        alts.push(self.r2(a, vals, c, cix));
        Fo::or(alts)
    }

    fn r1(&mut self, a: OAtom, tau: TTerm) -> Fo {
        let rigid = self.is_rigid(a);
        match a {
            OAtom::Concept(b, t) if rigid => self.pref_top(Pred::Concept(b), vec![t], tau),
            OAtom::Role(p, s, t) if rigid => self.pref_top(Pred::Role(p), vec![s, t], tau),
            OAtom::NegConcept(b, t) if rigid => Fo::or([
                Fo::NegConcept(b, t, tau),
                Fo::not(self.pref_top(Pred::Concept(b), vec![t], tau)),
            ]),
            OAtom::NegRole(p, s, t) if rigid => Fo::or([
                Fo::NegRole(p, s, t, tau),
                Fo::not(self.pref_top(Pred::Role(p), vec![s, t], tau)),
            ]),
            _ => tdb_atom(a, tau, &mut self.gen),
        }
    }

    /// Matches in the constant ABox `C`.
    fn r2(&self, a: &DbAtom, vals: &[Val], c: &ABox, cix: &AboxIndex) -> Fo {
        let repo = |v: Val, x: Individual| -> Fo {
            match v {
                Val::Dom(t) if !self.p.names.is_fresh(x) => Fo::eq(t, OTerm::Const(x)),
                Val::Sym(s) if s == x => Fo::True,
                _ => Fo::False,
            }
        };
        match *a {
            DbAtom::Concept(b, _) => {
                if let Val::Sym(s) = vals[0] {
                    return if cix.has_concept(b, s) { Fo::True } else { Fo::False };
                }
                let mut alts = Vec::new();
                for x in c.iter().filter(|x| x.positive) {
                    match x.body {
                        AssertionBody::Concept(b2, i) if b2 == b => alts.push(repo(vals[0], i)),
                        AssertionBody::Role(p, i, j) => {
                            if let BasicConcept::Exists(r) = b {
                                if r.name == p {
                                    alts.push(repo(vals[0], if r.inverse { j } else { i }));
                                }
                            }
                        }
                        _ => {}
                    }
                }
                Fo::or(alts)
            }
            DbAtom::Role(p, _, _) => Fo::or(c.iter().filter(|x| x.positive).filter_map(|x| match x.body {
                AssertionBody::Role(q, i, j) if q == p => Some(Fo::and([repo(vals[0], i), repo(vals[1], j)])),
                _ => None,
            })),
            _ => Fo::False,
        }
    }

    /// `f_sat(W)(τ)` for `Q_Rn' = q_rn`.
    pub fn f_sat(&mut self, w: World, q_rn: u64, tau: TTerm) -> Fo {
        let refs = self.refs;
        let mut parts = vec![Fo::not(self.rep(&refs.unsat, w, tau))];
        for j in 0..self.p.m() {
            if !w.contains(j) {
                parts.push(Fo::not(self.rep(&refs.leaves[j], w, tau)));
            }
        }
        for j in bits(q_rn) {
            parts.push(Fo::not(self.rep(&refs.witnesses[j], w, tau)));
        }
        Fo::and(parts)
    }
}
