//! Domain data model: signatures, DL-Lite axioms, ABoxes, temporal knowledge
//! bases, conjunctive queries and temporal conjunctive queries.
//!
//! Names are interned into dense integer identifiers by [`Signature`]; every
//! other structure refers to names by identifier only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::ltl::{Ltl, F};

/// A concept name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptName(pub u32);

/// A role name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleName(pub u32);

/// An individual name. Identifiers beyond the signature's individuals are
/// used for fresh names created during reasoning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Individual(pub u32);

/// A query variable, local to the CQ that declares it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

/// A role `P` or its inverse `P⁻`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Role {
    pub name: RoleName,
    pub inverse: bool,
}

impl Role {
    pub fn new(name: RoleName) -> Self {
        Role {
            name,
            inverse: false,
        }
    }

    pub fn inverse_of(name: RoleName) -> Self {
        Role {
            name,
            inverse: true,
        }
    }

    /// The inverse role; `(P⁻)⁻ = P`.
    pub fn inv(self) -> Self {
        Role {
            name: self.name,
            inverse: !self.inverse,
        }
    }

    /// Dense index `2·name + inverse`, used by role-indexed tables.
    pub fn index(self) -> usize {
        2 * self.name.0 as usize + self.inverse as usize
    }

    pub fn from_index(i: usize) -> Self {
        Role {
            name: RoleName((i / 2) as u32),
            inverse: i % 2 == 1,
        }
    }
}

/// A basic concept `A` or `∃R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasicConcept {
    Atomic(ConceptName),
    Exists(Role),
}

/// A concept inclusion `B1 ⊓ … ⊓ Bm ⊑ Bm+1 ⊔ … ⊔ Bm+n`.
///
/// An empty `lhs` stands for `⊤` and an empty `rhs` for `⊥`. Horn inclusions
/// have at most one right-hand concept.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptInclusion {
    pub lhs: Vec<BasicConcept>,
    pub rhs: Vec<BasicConcept>,
}

/// Syntactic fragment of a concept inclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Fragment {
    /// Horn and krom at the same time.
    Core,
    /// At most one right-hand concept.
    Horn,
    /// At most two concepts overall.
    Krom,
    /// Anything else.
    Bool,
}

impl ConceptInclusion {
    /// Builds an inclusion with sorted, duplicate-free sides.
    pub fn new(mut lhs: Vec<BasicConcept>, mut rhs: Vec<BasicConcept>) -> Self {
        lhs.sort();
        lhs.dedup();
        rhs.sort();
        rhs.dedup();
        ConceptInclusion { lhs, rhs }
    }

    pub fn horn(lhs: Vec<BasicConcept>, rhs: Option<BasicConcept>) -> Self {
        ConceptInclusion::new(lhs, rhs.into_iter().collect())
    }

    pub fn fragment(&self) -> Fragment {
        let horn = self.rhs.len() <= 1;
        let krom = self.lhs.len() + self.rhs.len() <= 2;
        match (horn, krom) {
            (true, true) => Fragment::Core,
            (true, false) => Fragment::Horn,
            (false, true) => Fragment::Krom,
            (false, false) => Fragment::Bool,
        }
    }

    pub fn is_horn(&self) -> bool {
        self.rhs.len() <= 1
    }

    pub fn is_krom(&self) -> bool {
        self.lhs.len() + self.rhs.len() <= 2
    }
}

/// A role inclusion `S ⊑ R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleInclusion {
    pub sub: Role,
    pub sup: Role,
}

/// The payload of an assertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AssertionBody {
    Concept(BasicConcept, Individual),
    /// Always stored with a role name; `P⁻(a,b)` is normalised to `P(b,a)`.
    Role(RoleName, Individual, Individual),
}

/// A possibly negated concept or role assertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assertion {
    pub positive: bool,
    pub body: AssertionBody,
}

impl Assertion {
    pub fn concept(b: BasicConcept, a: Individual) -> Self {
        Assertion {
            positive: true,
            body: AssertionBody::Concept(b, a),
        }
    }

    pub fn role(r: Role, a: Individual, b: Individual) -> Self {
        let body = if r.inverse {
            AssertionBody::Role(r.name, b, a)
        } else {
            AssertionBody::Role(r.name, a, b)
        };
        Assertion {
            positive: true,
            body,
        }
    }

    pub fn negated(self) -> Self {
        Assertion {
            positive: !self.positive,
            ..self
        }
    }

    pub fn individuals(&self) -> impl Iterator<Item = Individual> {
        let (a, b) = match self.body {
            AssertionBody::Concept(_, a) => (a, None),
            AssertionBody::Role(_, a, b) => (a, Some(b)),
        };
        std::iter::once(a).chain(b)
    }
}

/// A finite set of assertions.
pub type ABox = BTreeSet<Assertion>;

/// A DL-Lite ontology: concept and role inclusions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ontology {
    pub cis: Vec<ConceptInclusion>,
    pub ris: Vec<RoleInclusion>,
}

impl Ontology {
    /// Role names occurring anywhere in the ontology.
    pub fn role_names(&self) -> BTreeSet<RoleName> {
        let mut out = BTreeSet::new();
        for ci in &self.cis {
            for b in ci.lhs.iter().chain(&ci.rhs) {
                if let BasicConcept::Exists(r) = b {
                    out.insert(r.name);
                }
            }
        }
        for ri in &self.ris {
            out.insert(ri.sub.name);
            out.insert(ri.sup.name);
        }
        out
    }

    /// Concept names occurring anywhere in the ontology.
    pub fn concept_names(&self) -> BTreeSet<ConceptName> {
        let mut out = BTreeSet::new();
        for ci in &self.cis {
            for b in ci.lhs.iter().chain(&ci.rhs) {
                if let BasicConcept::Atomic(c) = b {
                    out.insert(*c);
                }
            }
        }
        out
    }

    /// Fails with [`Error::FragmentViolation`] unless every CI is horn.
    pub fn check_horn(&self, sig: &Signature) -> Result<()> {
        for ci in &self.cis {
            if !ci.is_horn() {
                return Err(Error::FragmentViolation(format!(
                    "`{}` has more than one right-hand concept",
                    sig.show_ci(ci)
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NameKind {
    Concept(u32),
    Role(u32),
    Individual(u32),
}

/// Concept, role and individual names together with rigidity designations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    concepts: Vec<String>,
    roles: Vec<String>,
    individuals: Vec<String>,
    rigid_concepts: Vec<bool>,
    rigid_roles: Vec<bool>,
    index: HashMap<String, NameKind>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares (or looks up) a concept name. Declaring an existing name as
    /// rigid makes it rigid.
    pub fn declare_concept(&mut self, name: &str, rigid: bool) -> Result<ConceptName> {
        match self.index.get(name) {
            Some(NameKind::Concept(i)) => {
                if rigid {
                    self.rigid_concepts[*i as usize] = true;
                }
                Ok(ConceptName(*i))
            }
            Some(_) => Err(Error::NameClash(name.to_string())),
            None => {
                let i = self.concepts.len() as u32;
                self.concepts.push(name.to_string());
                self.rigid_concepts.push(rigid);
                self.index.insert(name.to_string(), NameKind::Concept(i));
                Ok(ConceptName(i))
            }
        }
    }

    pub fn declare_role(&mut self, name: &str, rigid: bool) -> Result<RoleName> {
        match self.index.get(name) {
            Some(NameKind::Role(i)) => {
                if rigid {
                    self.rigid_roles[*i as usize] = true;
                }
                Ok(RoleName(*i))
            }
            Some(_) => Err(Error::NameClash(name.to_string())),
            None => {
                let i = self.roles.len() as u32;
                self.roles.push(name.to_string());
                self.rigid_roles.push(rigid);
                self.index.insert(name.to_string(), NameKind::Role(i));
                Ok(RoleName(i))
            }
        }
    }

    pub fn declare_individual(&mut self, name: &str) -> Result<Individual> {
        match self.index.get(name) {
            Some(NameKind::Individual(i)) => Ok(Individual(*i)),
            Some(_) => Err(Error::NameClash(name.to_string())),
            None => {
                let i = self.individuals.len() as u32;
                self.individuals.push(name.to_string());
                self.index.insert(name.to_string(), NameKind::Individual(i));
                Ok(Individual(i))
            }
        }
    }

    pub fn concept(&self, name: &str) -> Option<ConceptName> {
        match self.index.get(name) {
            Some(NameKind::Concept(i)) => Some(ConceptName(*i)),
            _ => None,
        }
    }

    pub fn role(&self, name: &str) -> Option<RoleName> {
        match self.index.get(name) {
            Some(NameKind::Role(i)) => Some(RoleName(*i)),
            _ => None,
        }
    }

    pub fn individual(&self, name: &str) -> Option<Individual> {
        match self.index.get(name) {
            Some(NameKind::Individual(i)) => Some(Individual(*i)),
            _ => None,
        }
    }

    /// True if `name` is declared with any kind.
    pub fn is_declared(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn role_count(&self) -> usize {
        self.roles.len()
    }

    pub fn individual_count(&self) -> usize {
        self.individuals.len()
    }

    pub fn concept_name(&self, c: ConceptName) -> &str {
        &self.concepts[c.0 as usize]
    }

    pub fn role_name(&self, r: RoleName) -> &str {
        &self.roles[r.0 as usize]
    }

    /// Name of a signature individual, or `#<id>` for fresh identifiers.
    pub fn individual_name(&self, a: Individual) -> String {
        match self.individuals.get(a.0 as usize) {
            Some(s) => s.clone(),
            None => format!("#{}", a.0),
        }
    }

    pub fn concepts(&self) -> impl Iterator<Item = ConceptName> {
        (0..self.concepts.len() as u32).map(ConceptName)
    }

    pub fn roles(&self) -> impl Iterator<Item = RoleName> {
        (0..self.roles.len() as u32).map(RoleName)
    }

    pub fn individuals(&self) -> impl Iterator<Item = Individual> {
        (0..self.individuals.len() as u32).map(Individual)
    }

    pub fn is_rigid_concept(&self, c: ConceptName) -> bool {
        self.rigid_concepts[c.0 as usize]
    }

    pub fn is_rigid_role(&self, r: RoleName) -> bool {
        self.rigid_roles[r.0 as usize]
    }

    pub fn set_rigid_concept(&mut self, c: ConceptName, rigid: bool) {
        self.rigid_concepts[c.0 as usize] = rigid;
    }

    pub fn set_rigid_role(&mut self, r: RoleName, rigid: bool) {
        self.rigid_roles[r.0 as usize] = rigid;
    }

    /// A basic concept is rigid iff all its names are rigid.
    pub fn is_rigid_basic(&self, b: BasicConcept) -> bool {
        match b {
            BasicConcept::Atomic(c) => self.is_rigid_concept(c),
            BasicConcept::Exists(r) => self.is_rigid_role(r.name),
        }
    }

    pub fn is_rigid_assertion(&self, a: &Assertion) -> bool {
        match a.body {
            AssertionBody::Concept(b, _) => self.is_rigid_basic(b),
            AssertionBody::Role(r, _, _) => self.is_rigid_role(r),
        }
    }

    /// All basic concepts over the signature: names first, then `∃P`, `∃P⁻`.
    pub fn basic_concepts(&self) -> Vec<BasicConcept> {
        let mut out: Vec<BasicConcept> = self.concepts().map(BasicConcept::Atomic).collect();
        for r in self.roles() {
            out.push(BasicConcept::Exists(Role::new(r)));
            out.push(BasicConcept::Exists(Role::inverse_of(r)));
        }
        out
    }

    pub fn show_role(&self, r: Role) -> String {
        if r.inverse {
            format!("{}-", self.role_name(r.name))
        } else {
            self.role_name(r.name).to_string()
        }
    }

    pub fn show_basic(&self, b: BasicConcept) -> String {
        match b {
            BasicConcept::Atomic(c) => self.concept_name(c).to_string(),
            BasicConcept::Exists(r) => format!("exists {}", self.show_role(r)),
        }
    }

    pub fn show_ci(&self, ci: &ConceptInclusion) -> String {
        let lhs = if ci.lhs.is_empty() {
            "top".to_string()
        } else {
            ci.lhs
                .iter()
                .map(|b| self.show_basic(*b))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let rhs = if ci.rhs.is_empty() {
            "bot".to_string()
        } else {
            ci.rhs
                .iter()
                .map(|b| self.show_basic(*b))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        format!("{lhs} <= {rhs}")
    }

    pub fn show_assertion(&self, a: &Assertion) -> String {
        self.show_assertion_with(a, &|x| self.individual_name(x))
    }

    /// Prints an assertion with individuals named by `name`.
    pub fn show_assertion_with(&self, a: &Assertion, name: &dyn Fn(Individual) -> String) -> String {
        let neg = if a.positive { "" } else { "!" };
        match a.body {
            AssertionBody::Concept(b, x) => format!("{neg}{}({})", self.show_basic(b), name(x)),
            AssertionBody::Role(r, x, y) => format!("{neg}{}({},{})", self.role_name(r), name(x), name(y)),
        }
    }
}

/// A temporal knowledge base: an ontology, a non-empty ABox sequence and the
/// signature carrying rigidity designations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tkb {
    pub signature: Signature,
    pub ontology: Ontology,
    pub aboxes: Vec<ABox>,
}

impl Tkb {
    /// Index of the current time point.
    pub fn n(&self) -> usize {
        self.aboxes.len().saturating_sub(1)
    }

    /// Individuals occurring in the ABoxes.
    pub fn abox_individuals(&self) -> BTreeSet<Individual> {
        self.aboxes
            .iter()
            .flat_map(|a| a.iter().flat_map(|x| x.individuals()))
            .collect()
    }
}

/// Validates a TKB for the horn reasoners.
///
/// In strict mode every concept and role name used in an ABox must occur in
/// the ontology.
pub fn validate_tkb(tkb: &Tkb, strict: bool) -> Result<()> {
    if tkb.aboxes.is_empty() {
        return Err(Error::EmptySequence);
    }
    tkb.ontology.check_horn(&tkb.signature)?;
    if strict {
        let cs = tkb.ontology.concept_names();
        let rs = tkb.ontology.role_names();
        for abox in &tkb.aboxes {
            for a in abox {
                let (c, r) = match a.body {
                    AssertionBody::Concept(BasicConcept::Atomic(c), _) => (Some(c), None),
                    AssertionBody::Concept(BasicConcept::Exists(r), _) => (None, Some(r.name)),
                    AssertionBody::Role(r, _, _) => (None, Some(r)),
                };
                if let Some(c) = c {
                    if !cs.contains(&c) {
                        return Err(Error::UnknownName(
                            tkb.signature.concept_name(c).to_string(),
                        ));
                    }
                }
                if let Some(r) = r {
                    if !rs.contains(&r) {
                        return Err(Error::UnknownName(tkb.signature.role_name(r).to_string()));
                    }
                }
            }
        }
    }
    Ok(())
}

/// A term: a variable or an individual name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Ind(Individual),
}

/// A CQ atom. Role atoms always use role names; `P⁻(s,t)` is `P(t,s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Concept(BasicConcept, Term),
    Role(RoleName, Term, Term),
}

impl Atom {
    pub fn role(r: Role, s: Term, t: Term) -> Self {
        if r.inverse {
            Atom::Role(r.name, t, s)
        } else {
            Atom::Role(r.name, s, t)
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> {
        let (a, b) = match *self {
            Atom::Concept(_, t) => (t, None),
            Atom::Role(_, s, t) => (s, Some(t)),
        };
        std::iter::once(a).chain(b)
    }
}

/// A conjunctive query. Variables are local: `Var(i)` is named `vars[i]`.
/// Variables not listed in `answer` are existentially quantified.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cq {
    pub vars: Vec<String>,
    pub answer: Vec<Var>,
    pub atoms: Vec<Atom>,
}

impl Cq {
    /// A Boolean CQ.
    pub fn boolean(vars: Vec<String>, mut atoms: Vec<Atom>) -> Self {
        atoms.sort();
        atoms.dedup();
        Cq {
            vars,
            answer: Vec::new(),
            atoms,
        }
    }

    /// Replaces the named answer variables by individuals and renumbers the
    /// remaining variables.
    pub fn ground(&self, assignment: &BTreeMap<String, Individual>) -> Cq {
        let mut vars = Vec::new();
        let mut ren: Vec<Option<Term>> = Vec::new();
        for name in &self.vars {
            match assignment.get(name) {
                Some(&a) => ren.push(Some(Term::Ind(a))),
                None => {
                    ren.push(Some(Term::Var(Var(vars.len() as u32))));
                    vars.push(name.clone());
                }
            }
        }
        let map = |t: Term| match t {
            Term::Var(v) => ren[v.0 as usize].unwrap(),
            t => t,
        };
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| match *a {
                Atom::Concept(b, t) => Atom::Concept(b, map(t)),
                Atom::Role(p, s, t) => Atom::Role(p, map(s), map(t)),
            })
            .collect();
        atoms.sort();
        atoms.dedup();
        let answer = self
            .answer
            .iter()
            .filter_map(|v| match ren[v.0 as usize] {
                Some(Term::Var(w)) => Some(w),
                _ => None,
            })
            .collect();
        Cq { vars, answer, atoms }
    }

    pub fn is_boolean(&self) -> bool {
        self.answer.is_empty()
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    /// Individual names occurring in the query.
    pub fn individuals(&self) -> BTreeSet<Individual> {
        self.atoms
            .iter()
            .flat_map(|a| a.terms())
            .filter_map(|t| match t {
                Term::Ind(a) => Some(a),
                Term::Var(_) => None,
            })
            .collect()
    }

    /// Variables occurring in atoms.
    pub fn used_vars(&self) -> BTreeSet<Var> {
        self.atoms
            .iter()
            .flat_map(|a| a.terms())
            .filter_map(|t| match t {
                Term::Var(v) => Some(v),
                Term::Ind(_) => None,
            })
            .collect()
    }

    /// Number of distinct terms.
    pub fn term_count(&self) -> usize {
        self.atoms
            .iter()
            .flat_map(|a| a.terms())
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Splits the query into components that share no variables. Ground
    /// atoms form singleton components. Variable ids are compacted.
    pub fn components(&self) -> Vec<Cq> {
        let n = self.atoms.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let nx = p[c];
                p[c] = r;
                c = nx;
            }
            r
        }
        let mut owner: HashMap<Var, usize> = HashMap::new();
        for (i, a) in self.atoms.iter().enumerate() {
            for t in a.terms() {
                if let Term::Var(v) = t {
                    if let Some(&j) = owner.get(&v) {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        parent[ri] = rj;
                    } else {
                        owner.insert(v, i);
                    }
                }
            }
        }
        let mut groups: Vec<(usize, Vec<Atom>)> = Vec::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            match groups.iter_mut().find(|(g, _)| *g == r) {
                Some((_, atoms)) => atoms.push(self.atoms[i]),
                None => groups.push((r, vec![self.atoms[i]])),
            }
        }
        groups
            .into_iter()
            .map(|(_, atoms)| self.restrict(atoms))
            .collect()
    }

    /// Builds a Boolean CQ over `atoms` keeping only the variables they use.
    fn restrict(&self, atoms: Vec<Atom>) -> Cq {
        let mut map: HashMap<Var, Var> = HashMap::new();
        let mut vars = Vec::new();
        let mut rename = |t: Term| match t {
            Term::Var(v) => Term::Var(*map.entry(v).or_insert_with(|| {
                vars.push(self.vars[v.0 as usize].clone());
                Var(vars.len() as u32 - 1)
            })),
            t => t,
        };
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|a| match a {
                Atom::Concept(b, t) => Atom::Concept(b, rename(t)),
                Atom::Role(r, s, t) => {
                    let s = rename(s);
                    Atom::Role(r, s, rename(t))
                }
            })
            .collect();
        Cq::boolean(vars, atoms)
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}

/// A temporal conjunctive query. Derived operators are kept as nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tcq {
    Cq(Cq),
    True,
    False,
    Not(Box<Tcq>),
    And(Box<Tcq>, Box<Tcq>),
    Or(Box<Tcq>, Box<Tcq>),
    Implies(Box<Tcq>, Box<Tcq>),
    Iff(Box<Tcq>, Box<Tcq>),
    Next(Box<Tcq>),
    Prev(Box<Tcq>),
    Until(Box<Tcq>, Box<Tcq>),
    Since(Box<Tcq>, Box<Tcq>),
    Eventually(Box<Tcq>),
    Always(Box<Tcq>),
    Once(Box<Tcq>),
    Historically(Box<Tcq>),
}

impl Tcq {
    pub fn not(q: Tcq) -> Tcq {
        Tcq::Not(Box::new(q))
    }

    pub fn and(a: Tcq, b: Tcq) -> Tcq {
        Tcq::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Tcq, b: Tcq) -> Tcq {
        Tcq::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Tcq, b: Tcq) -> Tcq {
        Tcq::Implies(Box::new(a), Box::new(b))
    }

    /// Leaf CQs in left-to-right order.
    pub fn leaves(&self) -> Vec<&Cq> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |c| out.push(c));
        out
    }

    fn visit_leaves<'a>(&'a self, f: &mut impl FnMut(&'a Cq)) {
        match self {
            Tcq::Cq(c) => f(c),
            Tcq::True | Tcq::False => {}
            Tcq::Not(a)
            | Tcq::Next(a)
            | Tcq::Prev(a)
            | Tcq::Eventually(a)
            | Tcq::Always(a)
            | Tcq::Once(a)
            | Tcq::Historically(a) => a.visit_leaves(f),
            Tcq::And(a, b)
            | Tcq::Or(a, b)
            | Tcq::Implies(a, b)
            | Tcq::Iff(a, b)
            | Tcq::Until(a, b)
            | Tcq::Since(a, b) => {
                a.visit_leaves(f);
                b.visit_leaves(f);
            }
        }
    }

    /// Names of the answer variables of all leaves, in order of first
    /// occurrence.
    pub fn answer_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for cq in self.leaves() {
            for v in &cq.answer {
                let name = &cq.vars[v.0 as usize];
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        }
        out
    }

    /// Replaces answer variables by individuals, by name; variables without
    /// an entry are kept.
    pub fn ground(&self, assignment: &BTreeMap<String, Individual>) -> Tcq {
        self.map_leaves(&mut |cq: &Cq| Tcq::Cq(cq.ground(assignment)))
    }

    /// Applies `f` to every leaf, rebuilding the tree.
    pub fn map_leaves(&self, f: &mut impl FnMut(&Cq) -> Tcq) -> Tcq {
        self.map_leaves_dyn(f)
    }

    fn map_leaves_dyn(&self, f: &mut dyn FnMut(&Cq) -> Tcq) -> Tcq {
        let mut m = |x: &Tcq| Box::new(x.map_leaves_dyn(f));
        match self {
            Tcq::Cq(c) => f(c),
            Tcq::True => Tcq::True,
            Tcq::False => Tcq::False,
            Tcq::Not(a) => Tcq::Not(m(a)),
            Tcq::Next(a) => Tcq::Next(m(a)),
            Tcq::Prev(a) => Tcq::Prev(m(a)),
            Tcq::Eventually(a) => Tcq::Eventually(m(a)),
            Tcq::Always(a) => Tcq::Always(m(a)),
            Tcq::Once(a) => Tcq::Once(m(a)),
            Tcq::Historically(a) => Tcq::Historically(m(a)),
            Tcq::And(a, b) => {
                let a = m(a);
                Tcq::And(a, m(b))
            }
            Tcq::Or(a, b) => {
                let a = m(a);
                Tcq::Or(a, m(b))
            }
            Tcq::Implies(a, b) => {
                let a = m(a);
                Tcq::Implies(a, m(b))
            }
            Tcq::Iff(a, b) => {
                let a = m(a);
                Tcq::Iff(a, m(b))
            }
            Tcq::Until(a, b) => {
                let a = m(a);
                Tcq::Until(a, m(b))
            }
            Tcq::Since(a, b) => {
                let a = m(a);
                Tcq::Since(a, m(b))
            }
        }
    }

    /// Individual names occurring in the query.
    pub fn individuals(&self) -> BTreeSet<Individual> {
        self.leaves()
            .into_iter()
            .flat_map(|c| c.individuals())
            .collect()
    }
}

/// Splits every leaf into its connected components and renames variables
/// apart across leaves (a clashing name `x` becomes `x'`, `x''`, …).
pub fn normalize_tcq(q: &Tcq) -> Tcq {
    let mut used: BTreeSet<String> = BTreeSet::new();
    q.map_leaves(&mut |cq| {
        let comps = cq.components();
        let mut parts: Vec<Tcq> = comps
            .into_iter()
            .map(|mut c| {
                for name in c.vars.iter_mut() {
                    let mut fresh = name.clone();
                    while used.contains(&fresh) {
                        fresh.push('\'');
                    }
                    used.insert(fresh.clone());
                    *name = fresh;
                }
                Tcq::Cq(c)
            })
            .collect();
        match parts.len() {
            0 => Tcq::True,
            _ => {
                let mut acc = parts.pop().unwrap();
                while let Some(p) = parts.pop() {
                    acc = Tcq::and(p, acc);
                }
                acc
            }
        }
    })
}

/// `¬q`, collapsing double negation and swapping the constants.
pub fn negate(q: &Tcq) -> Tcq {
    match q {
        Tcq::Not(inner) => (**inner).clone(),
        Tcq::True => Tcq::False,
        Tcq::False => Tcq::True,
        other => Tcq::not(other.clone()),
    }
}

/// Replaces the i-th leaf by proposition `p_i`, expanding derived operators.
/// Returns the formula arena, the root formula and the leaf list.
pub fn propositional_abstraction(q: &Tcq) -> (Ltl, F, Vec<Cq>) {
    let mut ltl = Ltl::new();
    let mut cqs = Vec::new();
    let root = abstract_rec(q, &mut ltl, &mut cqs);
    (ltl, root, cqs)
}

fn abstract_rec(q: &Tcq, l: &mut Ltl, cqs: &mut Vec<Cq>) -> F {
    match q {
        Tcq::Cq(c) => {
            cqs.push(c.clone());
            l.prop(cqs.len() as u32 - 1)
        }
        Tcq::True => l.tt(),
        Tcq::False => l.ff(),
        Tcq::Not(a) => {
            let a = abstract_rec(a, l, cqs);
            l.not(a)
        }
        Tcq::And(a, b) => {
            let a = abstract_rec(a, l, cqs);
            let b = abstract_rec(b, l, cqs);
            l.and(a, b)
        }
        Tcq::Or(a, b) => {
            let a = abstract_rec(a, l, cqs);
            let b = abstract_rec(b, l, cqs);
            l.or(a, b)
        }
        Tcq::Implies(a, b) => {
            let a = abstract_rec(a, l, cqs);
            let b = abstract_rec(b, l, cqs);
            l.implies(a, b)
        }
        Tcq::Iff(a, b) => {
            let a = abstract_rec(a, l, cqs);
            let b = abstract_rec(b, l, cqs);
            l.iff(a, b)
        }
        Tcq::Next(a) => {
            let a = abstract_rec(a, l, cqs);
            l.next(a)
        }
        Tcq::Prev(a) => {
            let a = abstract_rec(a, l, cqs);
            l.prev(a)
        }
        Tcq::Until(a, b) => {
            let a = abstract_rec(a, l, cqs);
            let b = abstract_rec(b, l, cqs);
            l.until(a, b)
        }
        Tcq::Since(a, b) => {
            let a = abstract_rec(a, l, cqs);
            let b = abstract_rec(b, l, cqs);
            l.since(a, b)
        }
        Tcq::Eventually(a) => {
            let a = abstract_rec(a, l, cqs);
            l.eventually(a)
        }
        Tcq::Always(a) => {
            let a = abstract_rec(a, l, cqs);
            l.always(a)
        }
        Tcq::Once(a) => {
            let a = abstract_rec(a, l, cqs);
            l.once(a)
        }
        Tcq::Historically(a) => {
            let a = abstract_rec(a, l, cqs);
            l.historically(a)
        }
    }
}

/// A world: the set of propositions `p_j` (bit `j`) that hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct World(pub u64);

impl World {
    pub fn contains(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }

    pub fn with(self, j: usize) -> World {
        World(self.0 | 1 << j)
    }

    /// All worlds over `m` propositions.
    pub fn all(m: usize) -> impl Iterator<Item = World> {
        (0..1u64 << m).map(World)
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for j in 0..64 {
            if self.contains(j) {
                if !first {
                    write!(f, ",")?;
                }
                first = false;
                write!(f, "p{}", j + 1)?;
            }
        }
        write!(f, "}}")
    }
}

/// A concept expression beyond basic concepts, accepted by the
/// Boolean-to-krom reduction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Concept {
    Top,
    Bottom,
    Basic(BasicConcept),
    And(Vec<Concept>),
    Or(Vec<Concept>),
    /// Qualified existential restriction `∃R.C`.
    Some(Role, Box<Concept>),
    /// Value restriction `∀R.C`.
    All(Role, Box<Concept>),
}

/// A concept inclusion between arbitrary concept expressions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtendedCi {
    pub lhs: Concept,
    pub rhs: Concept,
}

impl From<&ConceptInclusion> for ExtendedCi {
    fn from(ci: &ConceptInclusion) -> Self {
        ExtendedCi {
            lhs: Concept::And(ci.lhs.iter().map(|b| Concept::Basic(*b)).collect()),
            rhs: Concept::Or(ci.rhs.iter().map(|b| Concept::Basic(*b)).collect()),
        }
    }
}

impl Signature {
    pub fn show_concept(&self, c: &Concept) -> String {
        let wrap = |c: &Concept| match c {
            Concept::And(v) | Concept::Or(v) if v.len() > 1 => format!("({})", self.show_concept(c)),
            _ => self.show_concept(c),
        };
        match c {
            Concept::Top => "top".into(),
            Concept::Bottom => "bot".into(),
            Concept::Basic(b) => self.show_basic(*b),
            Concept::And(v) if v.is_empty() => "top".into(),
            Concept::Or(v) if v.is_empty() => "bot".into(),
            Concept::And(v) => v.iter().map(wrap).collect::<Vec<_>>().join(" & "),
            Concept::Or(v) => v.iter().map(wrap).collect::<Vec<_>>().join(" | "),
            Concept::Some(r, f) => format!("exists {} . {}", self.show_role(*r), wrap_filler(self, f)),
            Concept::All(r, f) => format!("forall {} . {}", self.show_role(*r), wrap_filler(self, f)),
        }
    }

    pub fn show_extended_ci(&self, ci: &ExtendedCi) -> String {
        format!("{} <= {}", self.show_concept(&ci.lhs), self.show_concept(&ci.rhs))
    }
}

fn wrap_filler(sig: &Signature, c: &Concept) -> String {
    match c {
        Concept::Top | Concept::Bottom => sig.show_concept(c),
        Concept::Basic(BasicConcept::Atomic(_)) => sig.show_concept(c),
        _ => format!("({})", sig.show_concept(c)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_tcq, print_tcq};

    #[test]
    fn grounding_answer_variables() {
        let mut sig = Signature::new();
        let q = parse_tcq("P (EX y . R(?x,y) & A(y)) & B(?x)", &mut sig).unwrap();
        assert_eq!(q.answer_vars(), vec!["?x".to_string()]);
        let bob = sig.declare_individual("bob").unwrap();
        let g = q.ground(&[("?x".to_string(), bob)].into_iter().collect());
        assert!(g.answer_vars().is_empty());
        assert_eq!(print_tcq(&sig, &g), "(P (EX y . A(y) & R(bob,y)) & B(bob))");
    }

    #[test]
    fn worlds_and_inclusion_fragments() {
        let w = World(0).with(0).with(2);
        assert!(w.contains(0) && !w.contains(1) && w.contains(2));
        assert_eq!(w.to_string(), "{p1,p3}");
        assert_eq!(World::all(2).count(), 4);
        let a = BasicConcept::Atomic(ConceptName(0));
        let b = BasicConcept::Atomic(ConceptName(1));
        assert!(ConceptInclusion::horn(vec![a], Some(b)).is_krom());
        let c = BasicConcept::Atomic(ConceptName(2));
        assert!(ConceptInclusion::horn(vec![a, b], None).is_krom());
        assert!(!ConceptInclusion::horn(vec![a, b], Some(c)).is_krom());
    }
}
