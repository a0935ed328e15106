//! Two-sorted first-order formulas over the temporal database of an ABox
//! sequence, their evaluation and an S-expression printer.
//!
//! The object sort ranges over the individuals of the database, the time
//! sort over `[-1, n]`; time point `-1` stands for an empty ABox. Formulas
//! may call named definitions (macros with object parameters and one time
//! parameter), which keeps the nested rewritings linear in size and lets the
//! evaluator memoize them.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ABox, AssertionBody, BasicConcept, Individual, Role, RoleName, Signature};

/// An object term: a variable or a database individual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OTerm {
    Var(u32),
    Const(Individual),
}

/// A time term: a variable or a time point in `[-1, n]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TTerm {
    Var(u32),
    Const(i64),
}

/// A first-order formula over the temporal database.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Fo {
    True,
    False,
    /// `B(t, τ)`: `B(t)` is asserted in `A_τ`.
    Concept(BasicConcept, OTerm, TTerm),
    /// `P(s, t, τ)`: `P(s, t)` is asserted in `A_τ`.
    Role(RoleName, OTerm, OTerm, TTerm),
    /// `¬B(t)` is asserted in `A_τ`.
    NegConcept(BasicConcept, OTerm, TTerm),
    /// `¬P(s, t)` is asserted in `A_τ`.
    NegRole(RoleName, OTerm, OTerm, TTerm),
    Eq(OTerm, OTerm),
    Not(Box<Fo>),
    And(Vec<Fo>),
    Or(Vec<Fo>),
    /// Existential quantification over objects.
    ExistsObj(u32, Box<Fo>),
    /// Existential quantification over time points.
    ExistsTime(u32, Box<Fo>),
    /// Call of definition `id` with object arguments and a time argument.
    Call(usize, Vec<OTerm>, TTerm),
}

impl Fo {
    /// Conjunction with constant folding and flattening.
    pub fn and(fs: impl IntoIterator<Item = Fo>) -> Fo {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Fo::True => {}
                Fo::False => return Fo::False,
                Fo::And(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Fo::True,
            1 => out.pop().unwrap(),
            _ => Fo::And(out),
        }
    }

    /// Disjunction with constant folding and flattening.
    pub fn or(fs: impl IntoIterator<Item = Fo>) -> Fo {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Fo::False => {}
                Fo::True => return Fo::True,
                Fo::Or(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Fo::False,
            1 => out.pop().unwrap(),
            _ => Fo::Or(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Fo) -> Fo {
        match f {
            Fo::True => Fo::False,
            Fo::False => Fo::True,
            Fo::Not(g) => *g,
            g => Fo::Not(Box::new(g)),
        }
    }

    /// Equality of object terms, folded when both are individuals.
    pub fn eq(s: OTerm, t: OTerm) -> Fo {
        match (s, t) {
            _ if s == t => Fo::True,
            (OTerm::Const(_), OTerm::Const(_)) => Fo::False,
            _ => Fo::Eq(s, t),
        }
    }

    /// `∃x.f`. The body is kept when it is `True`, since the object domain
    /// may be empty.
    pub fn exists_obj(v: u32, f: Fo) -> Fo {
        match f {
            Fo::False => Fo::False,
            g => Fo::ExistsObj(v, Box::new(g)),
        }
    }

    /// `∃p.f`; the time domain is never empty.
    pub fn exists_time(v: u32, f: Fo) -> Fo {
        match f {
            Fo::False => Fo::False,
            Fo::True => Fo::True,
            g => Fo::ExistsTime(v, Box::new(g)),
        }
    }

    /// Number of nodes, counting each call as one node.
    pub fn size(&self) -> usize {
        match self {
            Fo::Not(f) | Fo::ExistsObj(_, f) | Fo::ExistsTime(_, f) => 1 + f.size(),
            Fo::And(fs) | Fo::Or(fs) => 1 + fs.iter().map(Fo::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Free object variables and free time variables.
    pub fn free_vars(&self) -> (BTreeSet<u32>, BTreeSet<u32>) {
        let mut objs = BTreeSet::new();
        let mut times = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut Vec::new(), &mut objs, &mut times);
        (objs, times)
    }

    fn collect_free(
        &self,
        bo: &mut Vec<u32>,
        bt: &mut Vec<u32>,
        objs: &mut BTreeSet<u32>,
        times: &mut BTreeSet<u32>,
    ) {
        let o = |t: &OTerm, objs: &mut BTreeSet<u32>| {
            if let OTerm::Var(v) = t {
                if !bo.contains(v) {
                    objs.insert(*v);
                }
            }
        };
        let tm = |t: &TTerm, times: &mut BTreeSet<u32>| {
            if let TTerm::Var(v) = t {
                if !bt.contains(v) {
                    times.insert(*v);
                }
            }
        };
        match self {
            Fo::True | Fo::False => {}
            Fo::Concept(_, t, tau) | Fo::NegConcept(_, t, tau) => {
                o(t, objs);
                tm(tau, times);
            }
            Fo::Role(_, s, t, tau) | Fo::NegRole(_, s, t, tau) => {
                o(s, objs);
                o(t, objs);
                tm(tau, times);
            }
            Fo::Eq(s, t) => {
                o(s, objs);
                o(t, objs);
            }
            Fo::Call(_, args, tau) => {
                for a in args {
                    o(a, objs);
                }
                tm(tau, times);
            }
            Fo::Not(f) => f.collect_free(bo, bt, objs, times),
            Fo::And(fs) | Fo::Or(fs) => {
                for f in fs {
                    f.collect_free(bo, bt, objs, times);
                }
            }
            Fo::ExistsObj(v, f) => {
                bo.push(*v);
                f.collect_free(bo, bt, objs, times);
                bo.pop();
            }
            Fo::ExistsTime(v, f) => {
                bt.push(*v);
                f.collect_free(bo, bt, objs, times);
                bt.pop();
            }
        }
    }
}

/// A named definition: `name(x_1 … x_k; τ) := body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoDef {
    pub name: String,
    pub obj_params: Vec<u32>,
    pub time_param: u32,
    pub body: Fo,
}

/// The temporal database: relations read off the ABoxes, indexed by time
/// point. Negative assertions are kept in relations of their own.
#[derive(Clone, Debug, Default)]
pub struct Tdb {
    objects: Vec<Individual>,
    n: usize,
    concepts: HashSet<(BasicConcept, Individual, usize)>,
    roles: HashSet<(RoleName, Individual, Individual, usize)>,
    neg_concepts: HashSet<(BasicConcept, Individual, usize)>,
    neg_roles: HashSet<(RoleName, Individual, Individual, usize)>,
}

/// Reads the temporal database off an ABox sequence. The object domain
/// consists of the individuals of the ABoxes together with `extra`.
pub fn build_tdb(aboxes: &[ABox], extra: impl IntoIterator<Item = Individual>) -> Tdb {
    let mut tdb = Tdb {
        n: aboxes.len().saturating_sub(1),
        ..Tdb::default()
    };
    let mut objects: BTreeSet<Individual> = extra.into_iter().collect();
    for (i, abox) in aboxes.iter().enumerate() {
        for a in abox {
            objects.extend(a.individuals());
            match (a.positive, a.body) {
                (true, AssertionBody::Concept(b, x)) => {
                    tdb.concepts.insert((b, x, i));
                }
                (true, AssertionBody::Role(p, x, y)) => {
                    tdb.roles.insert((p, x, y, i));
                }
                (false, AssertionBody::Concept(b, x)) => {
                    tdb.neg_concepts.insert((b, x, i));
                }
                (false, AssertionBody::Role(p, x, y)) => {
                    tdb.neg_roles.insert((p, x, y, i));
                }
            }
        }
    }
    tdb.objects = objects.into_iter().collect();
    tdb
}

impl Tdb {
    /// The object domain.
    pub fn objects(&self) -> &[Individual] {
        &self.objects
    }

    /// The last time point `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The temporal domain `[-1, n]`.
    pub fn time_points(&self) -> impl Iterator<Item = i64> {
        -1..=self.n as i64
    }

    fn at(i: i64) -> Option<usize> {
        usize::try_from(i).ok()
    }

    pub fn has_concept(&self, b: BasicConcept, a: Individual, i: i64) -> bool {
        Self::at(i).is_some_and(|i| self.concepts.contains(&(b, a, i)))
    }

    pub fn has_role(&self, p: RoleName, a: Individual, b: Individual, i: i64) -> bool {
        Self::at(i).is_some_and(|i| self.roles.contains(&(p, a, b, i)))
    }

    pub fn has_neg_concept(&self, b: BasicConcept, a: Individual, i: i64) -> bool {
        Self::at(i).is_some_and(|i| self.neg_concepts.contains(&(b, a, i)))
    }

    pub fn has_neg_role(&self, p: RoleName, a: Individual, b: Individual, i: i64) -> bool {
        Self::at(i).is_some_and(|i| self.neg_roles.contains(&(p, a, b, i)))
    }
}

/// Variable assignment for evaluation.
#[derive(Clone, Debug, Default)]
pub struct Grounding {
    pub objs: HashMap<u32, Individual>,
    pub times: HashMap<u32, i64>,
}

impl Grounding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn obj(mut self, v: u32, a: Individual) -> Self {
        self.objs.insert(v, a);
        self
    }

    pub fn time(mut self, v: u32, i: i64) -> Self {
        self.times.insert(v, i);
        self
    }
}

/// Evaluates formulas over one database, memoizing definition calls.
pub struct Evaluator<'a> {
    tdb: &'a Tdb,
    defs: &'a [FoDef],
    memo: HashMap<(usize, Vec<Individual>, i64), bool>,
}

impl<'a> Evaluator<'a> {
    pub fn new(tdb: &'a Tdb, defs: &'a [FoDef]) -> Self {
        Evaluator {
            tdb,
            defs,
            memo: HashMap::new(),
        }
    }

    /// Truth of `f` under `g`; every free variable must be assigned.
    pub fn eval(&mut self, f: &Fo, g: &Grounding) -> Result<bool> {
        let mut g = g.clone();
        self.go(f, &mut g)
    }

    /// Object tuples over the domain for `free` that make `f` true.
    pub fn answers(&mut self, f: &Fo, free: &[u32], g: &Grounding) -> Result<Vec<Vec<Individual>>> {
        let dom = self.tdb.objects.clone();
        let mut out = Vec::new();
        let k = free.len();
        if dom.is_empty() && k > 0 {
            return Ok(out);
        }
        let total = dom.len().pow(k as u32);
        for code in 0..total {
            let mut c = code;
            let mut g = g.clone();
            let mut tuple = Vec::with_capacity(k);
            for &v in free {
                let a = dom[c % dom.len()];
                c /= dom.len();
                g.objs.insert(v, a);
                tuple.push(a);
            }
            if self.go(f, &mut g)? {
                out.push(tuple);
            }
        }
        out.sort();
        Ok(out)
    }

    fn obj(&self, t: OTerm, g: &Grounding) -> Result<Individual> {
        match t {
            OTerm::Const(a) => Ok(a),
            OTerm::Var(v) => g
                .objs
                .get(&v)
                .copied()
                .ok_or_else(|| Error::UnboundVariable(format!("x{v}"))),
        }
    }

    fn time(&self, t: TTerm, g: &Grounding) -> Result<i64> {
        match t {
            TTerm::Const(i) => Ok(i),
            TTerm::Var(v) => g
                .times
                .get(&v)
                .copied()
                .ok_or_else(|| Error::UnboundVariable(format!("t{v}"))),
        }
    }

    fn go(&mut self, f: &Fo, g: &mut Grounding) -> Result<bool> {
        let tdb = self.tdb;
        Ok(match f {
            Fo::True => true,
            Fo::False => false,
            Fo::Concept(b, t, tau) => tdb.has_concept(*b, self.obj(*t, g)?, self.time(*tau, g)?),
            Fo::Role(p, s, t, tau) => {
                tdb.has_role(*p, self.obj(*s, g)?, self.obj(*t, g)?, self.time(*tau, g)?)
            }
            Fo::NegConcept(b, t, tau) => {
                tdb.has_neg_concept(*b, self.obj(*t, g)?, self.time(*tau, g)?)
            }
            Fo::NegRole(p, s, t, tau) => {
                tdb.has_neg_role(*p, self.obj(*s, g)?, self.obj(*t, g)?, self.time(*tau, g)?)
            }
            Fo::Eq(s, t) => self.obj(*s, g)? == self.obj(*t, g)?,
            Fo::Not(h) => !self.go(h, g)?,
            Fo::And(hs) => {
                for h in hs {
                    if !self.go(h, g)? {
                        return Ok(false);
                    }
                }
                true
            }
            Fo::Or(hs) => {
                for h in hs {
                    if self.go(h, g)? {
                        return Ok(true);
                    }
                }
                false
            }
            Fo::ExistsObj(v, h) => {
                let old = g.objs.get(v).copied();
                let mut found = false;
                for &a in &tdb.objects {
                    g.objs.insert(*v, a);
                    if self.go(h, g)? {
                        found = true;
                        break;
                    }
                }
                match old {
                    Some(a) => g.objs.insert(*v, a),
                    None => g.objs.remove(v),
                };
                found
            }
            Fo::ExistsTime(v, h) => {
                let old = g.times.get(v).copied();
                let mut found = false;
                for i in tdb.time_points() {
                    g.times.insert(*v, i);
                    if self.go(h, g)? {
                        found = true;
                        break;
                    }
                }
                match old {
                    Some(i) => g.times.insert(*v, i),
                    None => g.times.remove(v),
                };
                found
            }
            Fo::Call(id, args, tau) => {
                let vals = args
                    .iter()
                    .map(|a| self.obj(*a, g))
                    .collect::<Result<Vec<_>>>()?;
                let i = self.time(*tau, g)?;
                let key = (*id, vals, i);
                if let Some(&r) = self.memo.get(&key) {
                    return Ok(r);
                }
                let def = &self.defs[*id];
                let mut inner = Grounding::new().time(def.time_param, i);
                for (v, a) in def.obj_params.iter().zip(&key.1) {
                    inner.objs.insert(*v, *a);
                }
                let r = self.go(&def.body, &mut inner)?;
                self.memo.insert(key, r);
                r
            }
        })
    }
}

/// Evaluates a closed (under `g`) formula over `tdb`.
pub fn eval_fo(tdb: &Tdb, defs: &[FoDef], f: &Fo, g: &Grounding) -> Result<bool> {
    Evaluator::new(tdb, defs).eval(f, g)
}

/// Prints formulas as S-expressions:
///
/// * `(B t τ)` / `(P s t τ)` for database atoms, where `B` is a concept name
///   or `exists:R` / `exists:R-`;
/// * `(not-B t τ)` / `(not-P s t τ)` for negative assertions;
/// * `(= s t)`, `(not f)`, `(and f …)`, `(or f …)`, `true`, `false`;
/// * `(exists-obj xK f)` and `(exists-time tK f)`;
/// * `(call NAME args… τ)` for definitions, which print as
///   `(define (NAME params… τ) body)`.
pub struct Printer<'a> {
    pub sig: &'a Signature,
    /// Display names of individuals outside the signature.
    pub name: &'a dyn Fn(Individual) -> String,
    pub defs: &'a [FoDef],
}

impl Printer<'_> {
    fn basic(&self, b: BasicConcept) -> String {
        match b {
            BasicConcept::Atomic(c) => self.sig.concept_name(c).to_string(),
            BasicConcept::Exists(r) => format!("exists:{}", self.sig.show_role(r)),
        }
    }

    fn role(&self, p: RoleName) -> String {
        self.sig.show_role(Role::new(p))
    }

    fn o(&self, t: &OTerm) -> String {
        match t {
            OTerm::Var(v) => format!("x{v}"),
            OTerm::Const(a) => (self.name)(*a),
        }
    }

    fn t(&self, t: &TTerm) -> String {
        match t {
            TTerm::Var(v) => format!("t{v}"),
            TTerm::Const(i) => i.to_string(),
        }
    }

    /// The S-expression of a formula.
    pub fn formula(&self, f: &Fo) -> String {
        let mut s = String::new();
        self.write(f, &mut s);
        s
    }

    /// All definitions followed by nothing else, one per line.
    pub fn definitions(&self) -> String {
        let mut s = String::new();
        for d in self.defs {
            let params: Vec<String> = d.obj_params.iter().map(|v| format!("x{v}")).collect();
            let _ = write!(s, "(define ({}", d.name);
            for p in params {
                let _ = write!(s, " {p}");
            }
            let _ = write!(s, " t{}) ", d.time_param);
            self.write(&d.body, &mut s);
            s.push_str(")\n");
        }
        s
    }

    fn write(&self, f: &Fo, s: &mut String) {
        match f {
            Fo::True => s.push_str("true"),
            Fo::False => s.push_str("false"),
            Fo::Concept(b, t, tau) => {
                let _ = write!(s, "({} {} {})", self.basic(*b), self.o(t), self.t(tau));
            }
            Fo::Role(p, x, y, tau) => {
                let _ = write!(s, "({} {} {} {})", self.role(*p), self.o(x), self.o(y), self.t(tau));
            }
            Fo::NegConcept(b, t, tau) => {
                let _ = write!(s, "(not-{} {} {})", self.basic(*b), self.o(t), self.t(tau));
            }
            Fo::NegRole(p, x, y, tau) => {
                let _ = write!(
                    s,
                    "(not-{} {} {} {})",
                    self.role(*p),
                    self.o(x),
                    self.o(y),
                    self.t(tau)
                );
            }
            Fo::Eq(x, y) => {
                let _ = write!(s, "(= {} {})", self.o(x), self.o(y));
            }
            Fo::Not(g) => {
                s.push_str("(not ");
                self.write(g, s);
                s.push(')');
            }
            Fo::And(gs) | Fo::Or(gs) => {
                s.push_str(if matches!(f, Fo::And(_)) { "(and" } else { "(or" });
                for g in gs {
                    s.push(' ');
                    self.write(g, s);
                }
                s.push(')');
            }
            Fo::ExistsObj(v, g) => {
                let _ = write!(s, "(exists-obj x{v} ");
                self.write(g, s);
                s.push(')');
            }
            Fo::ExistsTime(v, g) => {
                let _ = write!(s, "(exists-time t{v} ");
                self.write(g, s);
                s.push(')');
            }
            Fo::Call(id, args, tau) => {
                let _ = write!(s, "(call {}", self.defs[*id].name);
                for a in args {
                    let _ = write!(s, " {}", self.o(a));
                }
                let _ = write!(s, " {})", self.t(tau));
            }
        }
    }
}
