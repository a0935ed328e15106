//! Random instance generators shared by the integration tests.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub mod checks;

use tcq_core::model::{
    ABox, Assertion, Atom, BasicConcept, ConceptInclusion, ConceptName, Cq, Individual, Ontology,
    Role, RoleInclusion, RoleName, Signature, Tcq, Term, Tkb, Var,
};

/// Size limits of a generated instance.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub concepts: usize,
    pub roles: usize,
    pub individuals: usize,
    /// Largest `n`.
    pub n: usize,
    pub leaves: usize,
    pub atoms: usize,
    pub cis: usize,
    pub ris: usize,
    /// Largest temporal nesting depth of the query.
    pub depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            concepts: 3,
            roles: 2,
            individuals: 2,
            n: 2,
            leaves: 3,
            atoms: 2,
            cis: 3,
            ris: 1,
            depth: 2,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// A signature with names `A`, `B`, `C`, … and `R`, `S`, … and `a`, `b`, …,
/// each name rigid with probability one third.
pub fn signature(r: &mut ChaCha8Rng, lim: &Limits) -> Signature {
    let mut sig = Signature::new();
    let nc = r.gen_range(1..=lim.concepts);
    let nr = r.gen_range(1..=lim.roles);
    for k in 0..nc {
        let name = ["A", "B", "C", "D"][k];
        sig.declare_concept(name, r.gen_bool(0.33)).unwrap();
    }
    for k in 0..nr {
        let name = ["R", "S", "T"][k];
        sig.declare_role(name, r.gen_bool(0.33)).unwrap();
    }
    for k in 0..lim.individuals {
        sig.declare_individual(["a", "b", "c"][k]).unwrap();
    }
    sig
}

pub fn role(r: &mut ChaCha8Rng, sig: &Signature) -> Role {
    let p = RoleName(r.gen_range(0..sig.role_count() as u32));
    if r.gen_bool(0.5) {
        Role::new(p)
    } else {
        Role::inverse_of(p)
    }
}

pub fn basic(r: &mut ChaCha8Rng, sig: &Signature) -> BasicConcept {
    if r.gen_bool(0.6) {
        BasicConcept::Atomic(ConceptName(r.gen_range(0..sig.concept_count() as u32)))
    } else {
        BasicConcept::Exists(role(r, sig))
    }
}

/// A horn ontology; `⊥` right-hand sides are rare.
pub fn ontology(r: &mut ChaCha8Rng, sig: &Signature, lim: &Limits) -> Ontology {
    let mut o = Ontology::default();
    for _ in 0..r.gen_range(0..=lim.cis) {
        let k = if r.gen_bool(0.75) { 1 } else { 2 };
        let lhs: Vec<BasicConcept> = (0..k).map(|_| basic(r, sig)).collect();
        let rhs = if r.gen_bool(0.12) { None } else { Some(basic(r, sig)) };
        o.cis.push(ConceptInclusion::horn(lhs, rhs));
    }
    for _ in 0..r.gen_range(0..=lim.ris) {
        let sub = role(r, sig);
        let sup = role(r, sig);
        if sub.name != sup.name {
            o.ris.push(RoleInclusion { sub, sup });
        }
    }
    o
}

pub fn individual(r: &mut ChaCha8Rng, lim: &Limits) -> Individual {
    Individual(r.gen_range(0..lim.individuals as u32))
}

/// An ABox of up to `max` assertions, one in eight negative.
pub fn abox(r: &mut ChaCha8Rng, sig: &Signature, lim: &Limits, max: usize) -> ABox {
    let mut a = ABox::new();
    for _ in 0..r.gen_range(0..=max) {
        let asr = if r.gen_bool(0.7) {
            Assertion::concept(basic(r, sig), individual(r, lim))
        } else {
            Assertion::role(role(r, sig), individual(r, lim), individual(r, lim))
        };
        a.insert(if r.gen_bool(0.12) { asr.negated() } else { asr });
    }
    a
}

pub fn tkb(r: &mut ChaCha8Rng, lim: &Limits) -> Tkb {
    let signature = signature(r, lim);
    let ontology = ontology(r, &signature, lim);
    let n = r.gen_range(0..=lim.n);
    let aboxes = (0..=n).map(|_| abox(r, &signature, lim, 2)).collect();
    Tkb {
        signature,
        ontology,
        aboxes,
    }
}

/// A Boolean CQ with up to `lim.atoms` atoms over at most two variables.
pub fn cq(r: &mut ChaCha8Rng, sig: &Signature, lim: &Limits) -> Cq {
    let nvars = r.gen_range(0..=2u32);
    let term = |r: &mut ChaCha8Rng| -> Term {
        if nvars > 0 && r.gen_bool(0.6) {
            Term::Var(Var(r.gen_range(0..nvars)))
        } else {
            Term::Ind(individual(r, lim))
        }
    };
    let k = r.gen_range(1..=lim.atoms);
    let mut atoms = Vec::new();
    for _ in 0..k {
        if r.gen_bool(0.55) {
            atoms.push(Atom::Concept(basic(r, sig), term(r)));
        } else {
            let s = term(r);
            let t = term(r);
            atoms.push(Atom::role(role(r, sig), s, t));
        }
    }
    // Drop unused variables by renumbering.
    let mut used: Vec<u32> = atoms
        .iter()
        .flat_map(|a| a.terms())
        .filter_map(|t| match t {
            Term::Var(v) => Some(v.0),
            _ => None,
        })
        .collect();
    used.sort();
    used.dedup();
    let ren = |t: Term| match t {
        Term::Var(v) => Term::Var(Var(used.iter().position(|&u| u == v.0).unwrap() as u32)),
        t => t,
    };
    let atoms = atoms
        .into_iter()
        .map(|a| match a {
            Atom::Concept(b, t) => Atom::Concept(b, ren(t)),
            Atom::Role(p, s, t) => Atom::Role(p, ren(s), ren(t)),
        })
        .collect();
    let vars = ["x", "y"][..used.len()].iter().map(|s| s.to_string()).collect();
    Cq::boolean(vars, atoms)
}

/// A TCQ with at most `lim.leaves` CQ leaves.
pub fn tcq(r: &mut ChaCha8Rng, sig: &Signature, lim: &Limits) -> Tcq {
    let leaves = r.gen_range(1..=lim.leaves);
    tcq_rec(r, sig, lim, leaves, lim.depth, true)
}

/// A TCQ without past operators under future ones and vice versa, so that
/// the propositional abstraction is separated.
pub fn separated_tcq(r: &mut ChaCha8Rng, sig: &Signature, lim: &Limits) -> Tcq {
    let leaves = r.gen_range(1..=lim.leaves);
    let parts: Vec<Tcq> = (0..leaves)
        .map(|_| {
            let future = r.gen_bool(0.5);
            pure_rec(r, sig, lim, lim.depth, future)
        })
        .collect();
    let mut it = parts.into_iter();
    let mut acc = it.next().unwrap();
    for p in it {
        acc = match r.gen_range(0..3) {
            0 => Tcq::and(acc, p),
            1 => Tcq::or(acc, p),
            _ => Tcq::and(acc, Tcq::not(p)),
        };
    }
    if r.gen_bool(0.3) {
        Tcq::not(acc)
    } else {
        acc
    }
}

fn pure_rec(r: &mut ChaCha8Rng, sig: &Signature, lim: &Limits, depth: usize, future: bool) -> Tcq {
    let leaf = Tcq::Cq(cq(r, sig, lim));
    if depth == 0 || r.gen_bool(0.4) {
        return if r.gen_bool(0.3) { Tcq::not(leaf) } else { leaf };
    }
    let inner = pure_rec(r, sig, lim, depth - 1, future);
    let b = |x: Tcq| Box::new(x);
    match (future, r.gen_range(0..4)) {
        (true, 0) => Tcq::Next(b(inner)),
        (true, 1) => Tcq::Eventually(b(inner)),
        (true, 2) => Tcq::Always(b(inner)),
        (true, _) => Tcq::Until(b(leaf), b(inner)),
        (false, 0) => Tcq::Prev(b(inner)),
        (false, 1) => Tcq::Once(b(inner)),
        (false, 2) => Tcq::Historically(b(inner)),
        (false, _) => Tcq::Since(b(leaf), b(inner)),
    }
}

fn tcq_rec(
    r: &mut ChaCha8Rng,
    sig: &Signature,
    lim: &Limits,
    leaves: usize,
    depth: usize,
    top: bool,
) -> Tcq {
    let b = |x: Tcq| Box::new(x);
    if leaves == 1 {
        let leaf = Tcq::Cq(cq(r, sig, lim));
        if depth == 0 || (!top && r.gen_bool(0.4)) {
            return leaf;
        }
        let inner = tcq_rec(r, sig, lim, 1, depth - 1, false);
        return match r.gen_range(0..8) {
            0 => Tcq::not(inner),
            1 => Tcq::Next(b(inner)),
            2 => Tcq::Prev(b(inner)),
            3 => Tcq::Eventually(b(inner)),
            4 => Tcq::Always(b(inner)),
            5 => Tcq::Once(b(inner)),
            6 => Tcq::Historically(b(inner)),
            _ => inner,
        };
    }
    let k = r.gen_range(1..leaves);
    let d = depth.saturating_sub(1);
    let x = tcq_rec(r, sig, lim, k, d, false);
    let y = tcq_rec(r, sig, lim, leaves - k, d, false);
    let f = match r.gen_range(0..7) {
        0 | 1 => Tcq::and(x, y),
        2 => Tcq::or(x, y),
        3 => Tcq::implies(x, y),
        4 if depth > 0 => Tcq::Until(b(x), b(y)),
        5 if depth > 0 => Tcq::Since(b(x), b(y)),
        _ => Tcq::and(x, Tcq::not(y)),
    };
    if r.gen_bool(0.25) {
        Tcq::not(f)
    } else {
        f
    }
}

/// Picks a random element.
pub fn pick<'a, T>(r: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(r).unwrap()
}

/// Every interpretation of `concepts` and `roles` over `0..domain`.
pub fn all_interps(
    domain: usize,
    concepts: &[ConceptName],
    roles: &[RoleName],
) -> impl Iterator<Item = tcq_core::oracle::Interp> {
    let concepts = concepts.to_vec();
    let roles = roles.to_vec();
    let cbits = concepts.len() * domain;
    let bits = cbits + roles.len() * domain * domain;
    assert!(bits < 30, "{bits} interpretation bits");
    (0..1u64 << bits).map(move |code| {
        let mut i = tcq_core::oracle::Interp::default();
        for (k, &c) in concepts.iter().enumerate() {
            for x in 0..domain {
                if code >> (k * domain + x) & 1 == 1 {
                    i.concepts.insert((c, x));
                }
            }
        }
        for (k, &p) in roles.iter().enumerate() {
            for x in 0..domain {
                for y in 0..domain {
                    if code >> (cbits + k * domain * domain + x * domain + y) & 1 == 1 {
                        i.roles.insert((p, x, y));
                    }
                }
            }
        }
        i
    })
}

/// A concept expression of depth at most `depth` in a left-hand
/// (`positive == false`) or right-hand position, within the grammar of the
/// Boolean-to-krom reduction.
pub fn extended_concept(
    r: &mut ChaCha8Rng,
    sig: &Signature,
    depth: usize,
    positive: bool,
) -> tcq_core::model::Concept {
    use tcq_core::model::Concept;
    if depth == 0 || r.gen_bool(0.3) {
        return match r.gen_range(0..10) {
            0 => Concept::Top,
            1 => Concept::Bottom,
            _ => Concept::Basic(basic(r, sig)),
        };
    }
    match r.gen_range(0..3) {
        0 => Concept::And((0..2).map(|_| extended_concept(r, sig, depth - 1, positive)).collect()),
        1 => Concept::Or((0..2).map(|_| extended_concept(r, sig, depth - 1, positive)).collect()),
        _ => {
            let f = Box::new(extended_concept(r, sig, depth - 1, positive));
            if positive {
                Concept::All(role(r, sig), f)
            } else {
                Concept::Some(role(r, sig), f)
            }
        }
    }
}
