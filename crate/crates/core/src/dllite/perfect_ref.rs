//! PerfectRef: rewriting a CQ into a union of CQs whose evaluation over an
//! ABox read as a database coincides with entailment under the ontology.
//!
//! Queries are kept in a normal form where a role atom with an otherwise
//! unused variable end is replaced by the corresponding `∃R` concept atom and
//! `∃R(t)` atoms implied by a role atom on `t` are dropped. Over a database,
//! `∃R(a)` holds if it is asserted or `a` has an outgoing `R`-edge.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use super::Tbox;
use crate::error::{Error, Result};
use crate::model::{
    ABox, Assertion, AssertionBody, Atom, BasicConcept, Cq, Individual, Role, RoleName, Term, Var,
};

/// Upper bound on the number of CQs produced by one rewriting.
pub const MAX_REWRITINGS: usize = 20_000;

/// An atom of a rewritten query. The negative forms match negative
/// assertions and only occur in the inconsistency query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DbAtom {
    Concept(BasicConcept, Term),
    Role(RoleName, Term, Term),
    NegConcept(BasicConcept, Term),
    NegRole(RoleName, Term, Term),
}

impl DbAtom {
    pub fn terms(&self) -> Vec<Term> {
        match *self {
            DbAtom::Concept(_, t) | DbAtom::NegConcept(_, t) => vec![t],
            DbAtom::Role(_, s, t) | DbAtom::NegRole(_, s, t) => vec![s, t],
        }
    }

    fn map(&self, f: impl Fn(Term) -> Term) -> DbAtom {
        match *self {
            DbAtom::Concept(b, t) => DbAtom::Concept(b, f(t)),
            DbAtom::NegConcept(b, t) => DbAtom::NegConcept(b, f(t)),
            DbAtom::Role(p, s, t) => DbAtom::Role(p, f(s), f(t)),
            DbAtom::NegRole(p, s, t) => DbAtom::NegRole(p, f(s), f(t)),
        }
    }

    fn from_atom(a: &Atom) -> DbAtom {
        match *a {
            Atom::Concept(b, t) => DbAtom::Concept(b, t),
            Atom::Role(p, s, t) => DbAtom::Role(p, s, t),
        }
    }
}

/// A CQ over database atoms. Variables are `Var(0..nvars)`; `answer` lists
/// the answer terms in order (unification may turn them into individuals).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DbCq {
    pub nvars: u32,
    pub answer: Vec<Term>,
    pub atoms: Vec<DbAtom>,
}

pub type Ucq = Vec<DbCq>;

impl DbCq {
    fn answer_vars(&self) -> BTreeSet<Var> {
        self.answer
            .iter()
            .filter_map(|t| match t {
                Term::Var(v) => Some(*v),
                Term::Ind(_) => None,
            })
            .collect()
    }

    /// Number of occurrences of each variable in the atoms.
    fn occurrences(&self) -> HashMap<Var, usize> {
        let mut occ = HashMap::new();
        for a in &self.atoms {
            for t in a.terms() {
                if let Term::Var(v) = t {
                    *occ.entry(v).or_insert(0) += 1;
                }
            }
        }
        occ
    }

    /// Individuals occurring in atoms or answers.
    pub fn individuals(&self) -> BTreeSet<Individual> {
        self.atoms
            .iter()
            .flat_map(|a| a.terms())
            .chain(self.answer.iter().copied())
            .filter_map(|t| match t {
                Term::Ind(a) => Some(a),
                Term::Var(_) => None,
            })
            .collect()
    }
}

/// Rewrites `q` (with its answer variables) over the ontology of `tb`.
pub fn perfect_ref(tb: &Tbox, q: &Cq) -> Result<Ucq> {
    let start = DbCq {
        nvars: q.vars.len() as u32,
        answer: q.answer.iter().map(|v| Term::Var(*v)).collect(),
        atoms: q.atoms.iter().map(DbAtom::from_atom).collect(),
    };
    saturate(tb, vec![start])
}

/// A Boolean UCQ that holds in `DB(A)` iff `⟨O, A⟩` is inconsistent.
pub fn q_unsat(tb: &Tbox) -> Result<Ucq> {
    let x = Term::Var(Var(0));
    let y = Term::Var(Var(1));
    let mut out: Vec<DbCq> = Vec::new();
    // Violated disjointness somewhere in the model.
    let mut starts = Vec::new();
    for (lhs, rhs) in &tb.cis {
        if rhs.is_none() {
            starts.push(DbCq {
                nvars: 1,
                answer: Vec::new(),
                atoms: lhs.iter().map(|&b| DbAtom::Concept(tb.basic_of(b), x)).collect(),
            });
        }
    }
    out.extend(saturate(tb, starts)?);
    // An entailed assertion whose negation is asserted.
    for i in 0..tb.nbasic() {
        let b = tb.basic_of(i);
        let q = DbCq {
            nvars: 1,
            answer: vec![x],
            atoms: vec![DbAtom::Concept(b, x)],
        };
        for mut cq in saturate(tb, vec![q])? {
            let t = cq.answer[0];
            cq.atoms.push(DbAtom::NegConcept(b, t));
            cq.answer.clear();
            out.push(normalize_cq(cq));
        }
    }
    for p in 0..tb.nroles() {
        let p = RoleName(p as u32);
        let q = DbCq {
            nvars: 2,
            answer: vec![x, y],
            atoms: vec![DbAtom::Role(p, x, y)],
        };
        for mut cq in saturate(tb, vec![q])? {
            let (s, t) = (cq.answer[0], cq.answer[1]);
            cq.atoms.push(DbAtom::NegRole(p, s, t));
            cq.answer.clear();
            out.push(normalize_cq(cq));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Closes a set of queries under the rewriting steps.
fn saturate(tb: &Tbox, start: Vec<DbCq>) -> Result<Ucq> {
    let mut seen: HashSet<DbCq> = HashSet::new();
    let mut queue: VecDeque<DbCq> = VecDeque::new();
    for q in start {
        let q = normalize_cq(q);
        if seen.insert(q.clone()) {
            queue.push_back(q);
        }
    }
    while let Some(q) = queue.pop_front() {
        for next in steps(tb, &q) {
            let next = normalize_cq(next);
            if !seen.contains(&next) {
                if seen.len() >= MAX_REWRITINGS {
                    return Err(Error::ResourceLimit(format!(
                        "PerfectRef produced more than {MAX_REWRITINGS} queries"
                    )));
                }
                seen.insert(next.clone());
                queue.push_back(next);
            }
        }
    }
    let mut out: Vec<DbCq> = seen.into_iter().collect();
    out.sort();
    Ok(out)
}

/// One-step rewritings of `q`.
fn steps(tb: &Tbox, q: &DbCq) -> Vec<DbCq> {
    let mut out = Vec::new();
    let replace = |k: usize, new: Vec<DbAtom>| {
        let mut atoms: Vec<DbAtom> = q
            .atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, a)| *a)
            .collect();
        atoms.extend(new);
        DbCq {
            nvars: q.nvars,
            answer: q.answer.clone(),
            atoms,
        }
    };
    let occ = q.occurrences();
    let answers = q.answer_vars();
    for (k, a) in q.atoms.iter().enumerate() {
        match *a {
            DbAtom::Concept(b, t) => {
                let bi = tb.basic_index(b);
                for (lhs, rhs) in &tb.cis {
                    if *rhs == Some(bi) {
                        let new = lhs.iter().map(|&c| DbAtom::Concept(tb.basic_of(c), t)).collect();
                        out.push(replace(k, new));
                    }
                }
                // `∃y.∃R(y)` and `∃y.∃R⁻(y)` both state that `R` is non-empty.
                if let (BasicConcept::Exists(r), Term::Var(v)) = (b, t) {
                    if occ.get(&v) == Some(&1) && !answers.contains(&v) {
                        out.push(replace(k, vec![DbAtom::Concept(BasicConcept::Exists(r.inv()), t)]));
                    }
                }
            }
            DbAtom::Role(p, s, t) => {
                let target = Role::new(p);
                for x in 0..2 * tb.nroles() {
                    let sub = Role::from_index(x);
                    if sub != target && tb.role_entails(sub, target) {
                        let new = if sub.inverse {
                            DbAtom::Role(sub.name, t, s)
                        } else {
                            DbAtom::Role(sub.name, s, t)
                        };
                        out.push(replace(k, vec![new]));
                    }
                }
            }
            DbAtom::NegConcept(..) | DbAtom::NegRole(..) => {}
        }
    }
    // Reduce: unify two atoms over the same predicate.
    for i in 0..q.atoms.len() {
        for j in i + 1..q.atoms.len() {
            if let Some(sub) = unify_atoms(&q.atoms[i], &q.atoms[j], &answers) {
                out.push(apply(q, &sub));
            }
        }
    }
    out
}

fn unify_atoms(a: &DbAtom, b: &DbAtom, answers: &BTreeSet<Var>) -> Option<HashMap<Var, Term>> {
    let pairs: Vec<(Term, Term)> = match (*a, *b) {
        (DbAtom::Concept(x, s), DbAtom::Concept(y, t)) if x == y => vec![(s, t)],
        (DbAtom::Role(p, s1, t1), DbAtom::Role(q, s2, t2)) if p == q => vec![(s1, s2), (t1, t2)],
        _ => return None,
    };
    let mut sub: HashMap<Var, Term> = HashMap::new();
    let resolve = |sub: &HashMap<Var, Term>, mut t: Term| {
        while let Term::Var(v) = t {
            match sub.get(&v) {
                Some(n) => t = *n,
                None => break,
            }
        }
        t
    };
    for (s, t) in pairs {
        let (s, t) = (resolve(&sub, s), resolve(&sub, t));
        if s == t {
            continue;
        }
        match (s, t) {
            (Term::Ind(_), Term::Ind(_)) => return None,
            (Term::Var(v), Term::Ind(_)) => {
                sub.insert(v, t);
            }
            (Term::Ind(_), Term::Var(v)) => {
                sub.insert(v, s);
            }
            (Term::Var(v), Term::Var(w)) => {
                // Keep answer variables as representatives.
                if answers.contains(&v) && !answers.contains(&w) {
                    sub.insert(w, s);
                } else {
                    sub.insert(v, t);
                }
            }
        }
    }
    if sub.is_empty() {
        None
    } else {
        let keys: Vec<Var> = sub.keys().copied().collect();
        let mut full = HashMap::new();
        for k in keys {
            full.insert(k, resolve(&sub, Term::Var(k)));
        }
        Some(full)
    }
}

fn apply(q: &DbCq, sub: &HashMap<Var, Term>) -> DbCq {
    let f = |t: Term| match t {
        Term::Var(v) => sub.get(&v).copied().unwrap_or(t),
        t => t,
    };
    DbCq {
        nvars: q.nvars,
        answer: q.answer.iter().map(|t| f(*t)).collect(),
        atoms: q.atoms.iter().map(|a| a.map(f)).collect(),
    }
}

/// Brings a query into normal form: duplicate atoms removed, role atoms with
/// a dangling variable end turned into `∃R` atoms, `∃R` atoms implied by a
/// role atom dropped, and variables renamed canonically.
pub fn normalize_cq(mut q: DbCq) -> DbCq {
    loop {
        q.atoms.sort();
        q.atoms.dedup();
        let occ = q.occurrences();
        let answers = q.answer_vars();
        let dangling = |t: Term| match t {
            Term::Var(v) => !answers.contains(&v) && occ.get(&v) == Some(&1),
            Term::Ind(_) => false,
        };
        let mut changed = false;
        for k in 0..q.atoms.len() {
            if let DbAtom::Role(p, s, t) = q.atoms[k] {
                if s != t && dangling(t) {
                    q.atoms[k] = DbAtom::Concept(BasicConcept::Exists(Role::new(p)), s);
                    changed = true;
                    break;
                }
                if s != t && dangling(s) {
                    q.atoms[k] = DbAtom::Concept(BasicConcept::Exists(Role::inverse_of(p)), t);
                    changed = true;
                    break;
                }
            }
        }
        if changed {
            continue;
        }
        let implied = |b: BasicConcept, t: Term| match b {
            BasicConcept::Exists(r) => q.atoms.iter().any(|a| match *a {
                DbAtom::Role(p, x, y) => {
                    (!r.inverse && r.name == p && x == t) || (r.inverse && r.name == p && y == t)
                }
                _ => false,
            }),
            BasicConcept::Atomic(_) => false,
        };
        let before = q.atoms.len();
        let atoms: Vec<DbAtom> = q
            .atoms
            .iter()
            .copied()
            .filter(|a| !matches!(*a, DbAtom::Concept(b, t) if implied(b, t)))
            .collect();
        q.atoms = atoms;
        if q.atoms.len() == before {
            break;
        }
    }
    canonical(q)
}

/// Renames variables: answer variables first (in answer order), then the
/// existential ones in the order minimizing the sorted atom list.
fn canonical(q: DbCq) -> DbCq {
    let mut map: HashMap<Var, u32> = HashMap::new();
    for t in &q.answer {
        if let Term::Var(v) = t {
            let n = map.len() as u32;
            map.entry(*v).or_insert(n);
        }
    }
    let fixed = map.len() as u32;
    let mut exist: Vec<Var> = Vec::new();
    for a in &q.atoms {
        for t in a.terms() {
            if let Term::Var(v) = t {
                if !map.contains_key(&v) && !exist.contains(&v) {
                    exist.push(v);
                }
            }
        }
    }
    let rename = |perm: &[Var]| -> Vec<DbAtom> {
        let f = |t: Term| match t {
            Term::Var(v) => match map.get(&v) {
                Some(&i) => Term::Var(Var(i)),
                None => Term::Var(Var(
                    fixed + perm.iter().position(|w| *w == v).expect("variable in permutation") as u32,
                )),
            },
            t => t,
        };
        let mut atoms: Vec<DbAtom> = q.atoms.iter().map(|a| a.map(f)).collect();
        atoms.sort();
        atoms.dedup();
        atoms
    };
    let mut best: Option<Vec<DbAtom>> = None;
    if exist.len() <= 6 {
        let mut perm = exist.clone();
        permutations(&mut perm, 0, &mut |p| {
            let atoms = rename(p);
            if best.as_ref().is_none_or(|b| atoms < *b) {
                best = Some(atoms);
            }
        });
    } else {
        best = Some(rename(&exist));
    }
    let answer = q
        .answer
        .iter()
        .map(|t| match t {
            Term::Var(v) => Term::Var(Var(map[v])),
            t => *t,
        })
        .collect();
    DbCq {
        nvars: fixed + exist.len() as u32,
        answer,
        atoms: best.unwrap_or_default(),
    }
}

fn permutations(xs: &mut Vec<Var>, k: usize, f: &mut impl FnMut(&[Var])) {
    if k == xs.len() {
        f(xs);
        return;
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        permutations(xs, k + 1, f);
        xs.swap(k, i);
    }
}

/// An ABox read as a database.
#[derive(Clone, Debug, Default)]
pub struct Db {
    inds: Vec<Individual>,
    concepts: HashSet<(BasicConcept, Individual)>,
    roles: HashSet<(RoleName, Individual, Individual)>,
    /// Individuals with an outgoing (or incoming, for inverses) edge per role.
    has_edge: HashSet<(Role, Individual)>,
    neg_concepts: HashSet<(BasicConcept, Individual)>,
    neg_roles: HashSet<(RoleName, Individual, Individual)>,
}

impl Db {
    pub fn new(abox: &ABox) -> Db {
        let mut db = Db::default();
        let mut inds = BTreeSet::new();
        for a in abox {
            inds.extend(a.individuals());
            db.add(a);
        }
        db.inds = inds.into_iter().collect();
        db
    }

    fn add(&mut self, a: &Assertion) {
        match (a.positive, a.body) {
            (true, AssertionBody::Concept(b, x)) => {
                self.concepts.insert((b, x));
            }
            (true, AssertionBody::Role(p, x, y)) => {
                self.roles.insert((p, x, y));
                self.has_edge.insert((Role::new(p), x));
                self.has_edge.insert((Role::inverse_of(p), y));
            }
            (false, AssertionBody::Concept(b, x)) => {
                self.neg_concepts.insert((b, x));
            }
            (false, AssertionBody::Role(p, x, y)) => {
                self.neg_roles.insert((p, x, y));
            }
        }
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.inds
    }

    fn holds(&self, a: &DbAtom, val: &dyn Fn(Term) -> Individual) -> bool {
        match *a {
            DbAtom::Concept(b, t) => {
                let x = val(t);
                self.concepts.contains(&(b, x))
                    || matches!(b, BasicConcept::Exists(r) if self.has_edge.contains(&(r, x)))
            }
            DbAtom::Role(p, s, t) => self.roles.contains(&(p, val(s), val(t))),
            DbAtom::NegConcept(b, t) => self.neg_concepts.contains(&(b, val(t))),
            DbAtom::NegRole(p, s, t) => self.neg_roles.contains(&(p, val(s), val(t))),
        }
    }

    /// Whether `q` has a match with the given answer tuple (or any match
    /// when `tuple` is `None`).
    pub fn eval(&self, q: &DbCq, tuple: Option<&[Individual]>) -> bool {
        let mut assign: Vec<Option<Individual>> = vec![None; q.nvars as usize];
        if let Some(tuple) = tuple {
            for (t, a) in q.answer.iter().zip(tuple) {
                match *t {
                    Term::Ind(c) if c != *a => return false,
                    Term::Ind(_) => {}
                    Term::Var(v) => match assign[v.0 as usize] {
                        Some(b) if b != *a => return false,
                        _ => assign[v.0 as usize] = Some(*a),
                    },
                }
            }
        }
        self.search(q, &mut assign)
    }

    fn search(&self, q: &DbCq, assign: &mut Vec<Option<Individual>>) -> bool {
        let ground = |t: Term, assign: &[Option<Individual>]| match t {
            Term::Ind(a) => Some(a),
            Term::Var(v) => assign[v.0 as usize],
        };
        for a in &q.atoms {
            let ts = a.terms();
            if ts.iter().all(|t| ground(*t, assign).is_some()) {
                let snapshot = assign.clone();
                let val = move |t: Term| ground(t, &snapshot).expect("ground term");
                if !self.holds(a, &val) {
                    return false;
                }
            }
        }
        let next = q.atoms.iter().flat_map(|a| a.terms()).find_map(|t| match t {
            Term::Var(v) if assign[v.0 as usize].is_none() => Some(v),
            _ => None,
        });
        let Some(v) = next else {
            return true;
        };
        for &c in &self.inds {
            assign[v.0 as usize] = Some(c);
            if self.search(q, assign) {
                assign[v.0 as usize] = None;
                return true;
            }
        }
        assign[v.0 as usize] = None;
        false
    }
}

/// Whether some query of the (Boolean) UCQ matches `DB(A)`.
pub fn eval_ucq(ucq: &[DbCq], abox: &ABox) -> bool {
    let db = Db::new(abox);
    ucq.iter().any(|q| db.eval(q, None))
}

/// Tuples over `domain` answering the UCQ in `DB(A)`.
pub fn eval_ucq_answers(ucq: &[DbCq], abox: &ABox, domain: &[Individual]) -> Vec<Vec<Individual>> {
    let db = Db::new(abox);
    let k = ucq.first().map_or(0, |q| q.answer.len());
    let mut out = Vec::new();
    let n = domain.len();
    if n == 0 && k > 0 {
        return out;
    }
    for code in 0..n.pow(k as u32) {
        let mut c = code;
        let tuple: Vec<Individual> = (0..k)
            .map(|_| {
                let a = domain[c % n];
                c /= n;
                a
            })
            .collect();
        if ucq.iter().any(|q| db.eval(q, Some(&tuple))) {
            out.push(tuple);
        }
    }
    out.sort();
    out
}
